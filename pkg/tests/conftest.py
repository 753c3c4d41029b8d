"""Shared builders for compact snapshot construction in tests."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping

from corrhist.model import (
    DocumentRecord,
    History,
    Profile,
    Role,
    Signature,
    Snapshot,
)

MentionSpec = tuple  # (doc, pos, surface) or (doc, pos, surface, role)


def sig(doc: str, pos: int, surface: str, role: Role = Role.AUTHOR) -> Signature:
    return Signature(doc, pos, surface, role)


def _as_signature(spec) -> Signature:
    if isinstance(spec, Signature):
        return spec
    return Signature(*spec)


def auto_documents(
    profiles: Mapping[str, Iterable], docs: Mapping[str, DocumentRecord] | None = None
) -> dict[str, DocumentRecord]:
    """Documents just large enough to bind every mentioned position."""
    names: dict[str, dict[Role, dict[int, str]]] = defaultdict(
        lambda: {Role.AUTHOR: {}, Role.EDITOR: {}}
    )
    for specs in profiles.values():
        for spec in specs:
            s = _as_signature(spec)
            names[s.document_key][s.role][s.position] = s.surface
    out = dict(docs) if docs else {}
    for doc, by_role in names.items():
        if doc in out:
            continue
        authors = by_role[Role.AUTHOR]
        editors = by_role[Role.EDITOR]
        out[doc] = DocumentRecord(
            document_key=doc,
            title=f"Title of {doc}",
            year=2001,
            authors=tuple(
                authors.get(i, f"Filler A{i}")
                for i in range(max(authors, default=-1) + 1)
            ),
            editors=tuple(
                editors.get(i, f"Filler E{i}")
                for i in range(max(editors, default=-1) + 1)
            ),
        )
    return out


def snap(
    time: str,
    profiles: Mapping[str, Iterable],
    docs: Mapping[str, DocumentRecord] | None = None,
    venues: Mapping[str, str] | None = None,
) -> Snapshot:
    built = {
        pid: Profile(pid, frozenset(_as_signature(s) for s in specs))
        for pid, specs in profiles.items()
    }
    snapshot = Snapshot(
        time, built, auto_documents(profiles, docs), dict(venues or {})
    )
    snapshot.validate()
    return snapshot


def hist(*snapshots: Snapshot) -> History:
    return History(tuple(snapshots))
