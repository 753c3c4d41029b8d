"""Reading and writing snapshot files.

A snapshot file is a flat XML document: a ``snapshot`` root carrying the
observation date, document records, then profile records.  Parsing is
streaming (expat) so peak memory tracks the size of the model, not of the
file; writing is deterministic, so the same snapshot value always yields
byte-identical output.

Files may be gzip-compressed; compression is detected from magic bytes.
"""

from __future__ import annotations

import gzip
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Callable, Iterator, Sequence
from xml.parsers import expat

from ._xml import escape_attr, escape_text, open_source
from .errors import FormatError, IntegrityError
from .model import DocumentRecord, Profile, Role, Signature, Snapshot, History, validate_date

FORMAT_VERSION = "1"

_CHUNK = 1 << 20

_FILENAME_RE = re.compile(r"snapshot-(\d{4}-\d{2}-\d{2})\.xml(?:\.gz)?$")

_TEXT_ELEMENTS = frozenset({"title", "venue", "author", "editor"})


def parse_snapshot(
    source: bytes | str | Path | BinaryIO,
    *,
    dedup_against: Snapshot | None = None,
    source_name: str | None = None,
) -> Snapshot:
    """Parse one snapshot from bytes, a path, or a binary stream.

    The result satisfies ``Snapshot.validate``: integrity violations in the
    input (a mention claimed by two profiles, a dangling document key, a
    position past the end of the name list) raise IntegrityError naming the
    offending records.  Malformed markup raises FormatError with the byte
    offset into the decompressed stream.

    ``dedup_against`` is a memory optimization for loading file sequences:
    profiles and documents that are equal to their counterpart in the given
    snapshot are replaced by that counterpart object, so consecutive
    snapshots share storage for everything unchanged.

    Files in the exact form this module writes take a line-oriented fast
    path; everything else (and anything questionable) goes through the
    general XML parser, which is the authority on errors.
    """
    if isinstance(source, Path):
        source = str(source)
    if source_name is None and isinstance(source, str):
        source_name = source
    stream = open_source(source)
    try:
        data = stream.read()
    except gzip.BadGzipFile as exc:
        raise FormatError(f"corrupt gzip stream: {exc}", -1, source_name) from None
    snapshot = _parse_canonical(data, dedup_against)
    if snapshot is None:
        snapshot = _parse_expat(data, dedup_against, source_name)
    _check_references(snapshot.profiles, snapshot.documents, source_name)
    return snapshot


# Canonical output is line-oriented with a closed escape inventory, so a
# file that matches these byte-for-byte needs no XML machinery.  The value
# classes exclude "&" entirely: any entity or stray markup falls back.
_CANON_HEAD = '<?xml version="1.0" encoding="UTF-8"?>'
_CANON_ROOT = re.compile(r'<snapshot date="(\d{4}-\d{2}-\d{2})" version="1">')
_CANON_DOC = re.compile(
    r'<document pkey="([^"&<>]*)"(?: year="(-?[0-9]+)")?(?: url="([^"&<>]*)")?>'
    r"(.*)</document>"
)
_CANON_DOC_BODY = re.compile(
    r"(?:<title>([^&<>]*)</title>)?"
    r'(?:<venue key="([^"&<>]*)">([^&<>]*)</venue>)?'
    r"((?:<author>[^&<>]*</author>)*)"
    r"((?:<editor>[^&<>]*</editor>)*)"
)
_CANON_NAME = re.compile(r"<(?:author|editor)>([^&<>]*)</(?:author|editor)>")
_CANON_PROFILE = re.compile(
    r'<profile authorid="([^"&<>]*)">((?:<signature [^<>&]*/>)*)</profile>'
)
_CANON_SIG = re.compile(
    r'<signature pkey="([^"&<>]*)" pos="([0-9]+)" surface="([^"&<>]*)"'
    r'( role="editor")?/>'
)


def _parse_canonical(
    data: bytes,
    dedup_against: Snapshot | None,
    *,
    doc_memo: dict[str, tuple[DocumentRecord, str | None]] | None = None,
    profile_memo: dict[str, Profile] | None = None,
    source_name: str | None = None,
) -> Snapshot | None:
    """Parse canonical serializer output; None means "not provably canonical".

    Any deviation at all, structural or semantic, returns None so the
    general parser can produce its usual diagnostics.  A non-None result is
    therefore exactly what the general parser would have produced.

    The memos map record lines of earlier files in a sequence to their
    parsed objects.  The serializer is injective, so an identical line is
    proof of an identical record, and the object is reused without parsing.
    With memos on, reference checking happens here (incrementally: reused
    profiles are rechecked only against documents that changed); without
    them the caller is responsible.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        return None
    lines = text.split("\n")
    if len(lines) < 4 or lines[0] != _CANON_HEAD or lines[-2] != "</snapshot>":
        return None
    if lines[-1] != "":
        return None
    root = _CANON_ROOT.fullmatch(lines[1])
    if root is None:
        return None
    date = root.group(1)
    try:
        validate_date(date)
    except ValueError:
        return None

    intern = sys.intern
    old_profiles = dedup_against.profiles if dedup_against is not None else {}
    old_documents = dedup_against.documents if dedup_against is not None else {}
    profiles: dict[str, Profile] = {}
    documents: dict[str, DocumentRecord] = {}
    venues: dict[str, str] = {}
    seen: set[tuple[str, int, bool]] = set()
    fresh: list[Profile] = []
    reused: list[Profile] = []

    doc_match = _CANON_DOC.fullmatch
    body_match = _CANON_DOC_BODY.fullmatch
    prof_match = _CANON_PROFILE.fullmatch
    sig_iter = _CANON_SIG.finditer
    name_list = _CANON_NAME.findall

    for line in lines[2:-2]:
        kind = line[1:2]
        if kind == "p":
            if profile_memo is not None:
                hit = profile_memo.get(line)
                if hit is not None:
                    if hit.profile_id in profiles:
                        return None
                    for m in hit.mentions:
                        k = (m.document_key, m.position, m.role is Role.EDITOR)
                        if k in seen:
                            return None
                        seen.add(k)
                    profiles[hit.profile_id] = hit
                    # Only carry the weaker incremental check forward when
                    # the previous snapshot held this very object; a hit
                    # from further back may predate document changes.
                    if old_profiles.get(hit.profile_id) is hit:
                        reused.append(hit)
                    else:
                        fresh.append(hit)
                    continue
            m = prof_match(line)
            if m is None:
                return None
            pid = intern(m.group(1))
            if pid in profiles:
                return None
            sigs = []
            body = m.group(2)
            pos_in_body = 0
            for sm in sig_iter(body):
                if sm.start() != pos_in_body:
                    return None
                pos_in_body = sm.end()
                pkey, pos_raw, surface, role_raw = sm.group(1, 2, 3, 4)
                if not surface or surface.isspace():
                    return None
                pos = int(pos_raw)
                k = (pkey, pos, role_raw is not None)
                if k in seen:
                    return None
                seen.add(k)
                sigs.append(
                    Signature(
                        intern(pkey),
                        pos,
                        intern(surface),
                        Role.EDITOR if role_raw else Role.AUTHOR,
                    )
                )
            if pos_in_body != len(body) or not sigs:
                return None
            mentions = frozenset(sigs)
            old = old_profiles.get(pid)
            prof = old if old is not None and old.mentions == mentions else Profile(pid, mentions)
            profiles[pid] = prof
            fresh.append(prof)
            if profile_memo is not None:
                profile_memo[line] = prof
        elif kind == "d":
            if doc_memo is not None:
                dhit = doc_memo.get(line)
                if dhit is not None:
                    record, venue_name = dhit
                    if record.document_key in documents:
                        return None
                    if record.venue_key is not None:
                        known = venues.get(record.venue_key)
                        if known is not None and known != venue_name:
                            return None
                        venues[record.venue_key] = venue_name
                    documents[record.document_key] = record
                    continue
            m = doc_match(line)
            if m is None:
                return None
            pkey, year_raw, url, doc_body = m.group(1, 2, 3, 4)
            pkey = intern(pkey)
            if pkey in documents:
                return None
            b = body_match(doc_body)
            if b is None:
                return None
            venue_key = None
            venue_name = None
            if b.group(2) is not None:
                venue_key = intern(b.group(2))
                venue_name = b.group(3)
                known = venues.get(venue_key)
                if known is not None and known != venue_name:
                    return None
                venues[venue_key] = venue_name
            record = DocumentRecord(
                document_key=pkey,
                title=b.group(1) or "",
                year=int(year_raw) if year_raw is not None else 0,
                venue_key=venue_key,
                authors=tuple(map(intern, name_list(b.group(4)))),
                editors=tuple(map(intern, name_list(b.group(5)))),
                external_link=url,
            )
            old = old_documents.get(pkey)
            if old is not None and old == record:
                record = old
            documents[pkey] = record
            if doc_memo is not None:
                doc_memo[line] = (record, venue_name)
        else:
            return None

    if profile_memo is not None:
        # Reference checks are owed here.  Fresh profiles get the full
        # check; profiles carried over by line identity were checked when
        # first parsed and can only have been invalidated by a document
        # that changed or disappeared since the previous snapshot.
        for prof in fresh:
            _check_profile_refs(prof.profile_id, prof.mentions, documents, source_name)
        if reused:
            suspect = set()
            for key, rec in old_documents.items():
                if documents.get(key) is not rec:
                    suspect.add(key)
            if suspect:
                for prof in reused:
                    if any(m.document_key in suspect for m in prof.mentions):
                        _check_profile_refs(
                            prof.profile_id, prof.mentions, documents, source_name
                        )
    return Snapshot(date, profiles, documents, venues)


def _parse_expat(
    data: bytes,
    dedup_against: Snapshot | None,
    source_name: str | None,
) -> Snapshot:
    intern = sys.intern
    profiles: dict[str, Profile] = {}
    documents: dict[str, DocumentRecord] = {}
    venues: dict[str, str] = {}
    owners: dict[tuple[str, int, Role], str] = {}

    old_profiles = dedup_against.profiles if dedup_against is not None else {}
    old_documents = dedup_against.documents if dedup_against is not None else {}

    header: dict[str, str] = {}
    # document under construction
    doc_attrs: dict[str, str] = {}
    doc_title: list[str] = []
    doc_venue: tuple[str | None, list[str]] | None = None
    doc_authors: list[str] = []
    doc_editors: list[str] = []
    # profile under construction
    prof_id: str | None = None
    prof_sigs: list[Signature] = []

    stack: list[str] = []
    text: list[str] = []
    capturing = False

    parser = expat.ParserCreate()
    parser.buffer_text = True

    def fail(message: str) -> FormatError:
        return FormatError(message, parser.CurrentByteIndex, source_name)

    def require(attrs: dict[str, str], name: str, element: str) -> str:
        value = attrs.get(name)
        if value is None:
            raise fail(f"<{element}> lacks required attribute {name!r}")
        return value

    def start(name: str, attrs: dict[str, str]) -> None:
        nonlocal doc_attrs, doc_venue, prof_id, capturing
        depth = len(stack)
        if depth == 0:
            if name != "snapshot":
                raise fail(f"expected <snapshot> root, got <{name}>")
            version = attrs.get("version", FORMAT_VERSION)
            if version != FORMAT_VERSION:
                raise fail(f"unsupported snapshot format version {version!r}")
            date = require(attrs, "date", name)
            try:
                validate_date(date)
            except ValueError as exc:
                raise fail(str(exc)) from None
            header["date"] = date
        elif depth == 1:
            if name == "document":
                doc_attrs = attrs
                doc_title.clear()
                doc_venue = None
                doc_authors.clear()
                doc_editors.clear()
            elif name == "profile":
                prof_id = require(attrs, "authorid", name)
                prof_sigs.clear()
            else:
                raise fail(f"unexpected element <{name}> under <snapshot>")
        elif stack[-1] == "document":
            if name not in _TEXT_ELEMENTS:
                raise fail(f"unexpected element <{name}> under <document>")
            if name == "venue":
                doc_venue = (attrs.get("key"), [])
            text.clear()
            capturing = True
        elif stack[-1] == "profile":
            if name != "signature":
                raise fail(f"unexpected element <{name}> under <profile>")
            pkey = intern(require(attrs, "pkey", name))
            pos_raw = require(attrs, "pos", name)
            try:
                pos = int(pos_raw)
            except ValueError:
                raise fail(f"non-integer signature position {pos_raw!r}") from None
            if pos < 0:
                raise fail(f"negative signature position {pos}")
            surface = intern(require(attrs, "surface", name))
            if not surface.strip():
                raise IntegrityError(
                    f"profile {prof_id}: blank surface on {pkey} pos {pos}"
                )
            role_raw = attrs.get("role", "author")
            if role_raw == "author":
                role = Role.AUTHOR
            elif role_raw == "editor":
                role = Role.EDITOR
            else:
                raise fail(f"unknown signature role {role_raw!r}")
            sig = Signature(pkey, pos, surface, role)
            k = sig.key
            other = owners.get(k)
            if other is not None:
                raise IntegrityError(
                    f"mention {k[:2] + (role.value,)} interpreted by two "
                    f"profiles: {other} and {prof_id}"
                )
            owners[k] = prof_id  # type: ignore[assignment]
            prof_sigs.append(sig)
        else:
            raise fail(f"unexpected element <{name}> inside <{stack[-1]}>")
        stack.append(name)

    def end(name: str) -> None:
        nonlocal doc_venue, prof_id, capturing
        stack.pop()
        if name == "document":
            pkey = intern(require(doc_attrs, "pkey", name))
            if pkey in documents:
                raise IntegrityError(f"duplicate document key {pkey!r}")
            year_raw = doc_attrs.get("year", "0")
            try:
                year = int(year_raw)
            except ValueError:
                raise fail(f"non-integer year {year_raw!r} on document {pkey}") from None
            venue_key: str | None = None
            if doc_venue is not None:
                raw_key, name_parts = doc_venue
                venue_name = "".join(name_parts)
                venue_key = intern(raw_key if raw_key is not None else venue_name)
                known = venues.get(venue_key)
                if known is not None and known != venue_name:
                    raise IntegrityError(
                        f"venue key {venue_key!r} bound to two names: "
                        f"{known!r} and {venue_name!r}"
                    )
                venues[venue_key] = venue_name
            record = DocumentRecord(
                document_key=pkey,
                title="".join(doc_title),
                year=year,
                venue_key=venue_key,
                authors=tuple(intern(a) for a in doc_authors),
                editors=tuple(intern(e) for e in doc_editors),
                external_link=doc_attrs.get("url"),
            )
            old = old_documents.get(pkey)
            documents[pkey] = old if old == record else record
        elif name == "profile":
            assert prof_id is not None
            pid = intern(prof_id)
            if pid in profiles:
                raise IntegrityError(f"duplicate profile id {pid!r}")
            if not prof_sigs:
                raise IntegrityError(
                    f"profile {pid} has no signatures; empty profiles are "
                    f"represented by absence"
                )
            mentions = frozenset(prof_sigs)
            old = old_profiles.get(pid)
            if old is not None and old.mentions == mentions:
                profiles[pid] = old
            else:
                profiles[pid] = Profile(pid, mentions)
            prof_id = None
        elif name in _TEXT_ELEMENTS and stack and stack[-1] == "document":
            content = "".join(text)
            if name == "title":
                doc_title.append(content)
            elif name == "venue":
                assert doc_venue is not None
                doc_venue[1].append(content)
            elif name == "author":
                doc_authors.append(content)
            else:
                doc_editors.append(content)
            text.clear()
            capturing = False

    def chars(data: str) -> None:
        if capturing:
            text.append(data)
        elif not data.isspace():
            raise fail(f"stray text {data.strip()[:40]!r}")

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars

    try:
        for offset in range(0, len(data), _CHUNK):
            parser.Parse(data[offset : offset + _CHUNK], False)
        parser.Parse(b"", True)
    except expat.ExpatError as exc:
        raise FormatError(
            f"malformed snapshot XML: {exc}", parser.ErrorByteIndex, source_name
        ) from None

    if "date" not in header:
        raise FormatError("no <snapshot> element found", -1, source_name)

    return Snapshot(header["date"], profiles, documents, venues)


def _check_references(
    profiles: dict[str, Profile],
    documents: dict[str, DocumentRecord],
    source_name: str | None,
) -> None:
    """Mentions must point into an existing document's name list."""
    for pid, prof in profiles.items():
        _check_profile_refs(pid, prof.mentions, documents, source_name)


def _check_profile_refs(
    pid: str,
    mentions: frozenset[Signature],
    documents: dict[str, DocumentRecord],
    source_name: str | None,
) -> None:
    for m in mentions:
        doc = documents.get(m.document_key)
        if doc is None:
            raise IntegrityError(
                f"profile {pid}: mention references unknown document "
                f"{m.document_key!r}"
                + (f" ({source_name})" if source_name else "")
            )
        names = doc.names(m.role)
        if m.position >= len(names):
            raise IntegrityError(
                f"profile {pid}: position {m.position} out of range for "
                f"{m.role.value} list of {m.document_key} (length {len(names)})"
                + (f" ({source_name})" if source_name else "")
            )


def iter_snapshot_xml(snapshot: Snapshot) -> Iterator[str]:
    """Yield the canonical serialization as text fragments.

    One line per record, documents before profiles, everything sorted, so
    output bytes are a pure function of the snapshot value.
    """
    yield '<?xml version="1.0" encoding="UTF-8"?>\n'
    yield f'<snapshot date="{snapshot.time}" version="{FORMAT_VERSION}">\n'
    for key in sorted(snapshot.documents):
        d = snapshot.documents[key]
        parts = [f'<document pkey="{escape_attr(d.document_key)}"']
        if d.year:
            parts.append(f' year="{d.year}"')
        if d.external_link is not None:
            parts.append(f' url="{escape_attr(d.external_link)}"')
        parts.append(">")
        if d.title:
            parts.append(f"<title>{escape_text(d.title)}</title>")
        if d.venue_key is not None:
            parts.append(
                f'<venue key="{escape_attr(d.venue_key)}">'
                f"{escape_text(snapshot.venues[d.venue_key])}</venue>"
            )
        for a in d.authors:
            parts.append(f"<author>{escape_text(a)}</author>")
        for e in d.editors:
            parts.append(f"<editor>{escape_text(e)}</editor>")
        parts.append("</document>\n")
        yield "".join(parts)
    for pid in sorted(snapshot.profiles):
        prof = snapshot.profiles[pid]
        parts = [f'<profile authorid="{escape_attr(pid)}">']
        for m in sorted(prof.mentions, key=Signature.sort_key):
            bit = (
                f'<signature pkey="{escape_attr(m.document_key)}" pos="{m.position}"'
                f' surface="{escape_attr(m.surface)}"'
            )
            if m.role is Role.EDITOR:
                bit += ' role="editor"'
            parts.append(bit + "/>")
        parts.append("</profile>\n")
        yield "".join(parts)
    yield "</snapshot>\n"


def write_snapshot(snapshot: Snapshot) -> bytes:
    """Serialize to bytes (uncompressed)."""
    return "".join(iter_snapshot_xml(snapshot)).encode("utf-8")


def write_snapshot_to(
    snapshot: Snapshot,
    path: str | Path,
    *,
    compress: bool | None = None,
) -> Path:
    """Write a snapshot file; gzip when ``compress`` (default: .gz suffix).

    Gzip output pins mtime so identical snapshots give identical files.
    """
    path = Path(path)
    if compress is None:
        compress = path.suffix == ".gz"
    with open(path, "wb") as raw:
        sink: BinaryIO
        if compress:
            sink = gzip.GzipFile(fileobj=raw, mode="wb", mtime=0)  # type: ignore[assignment]
        else:
            sink = raw
        buffer: list[str] = []
        for fragment in iter_snapshot_xml(snapshot):
            buffer.append(fragment)
            if len(buffer) >= 4096:
                sink.write("".join(buffer).encode("utf-8"))
                buffer.clear()
        if buffer:
            sink.write("".join(buffer).encode("utf-8"))
        if compress:
            sink.close()
    return path


@dataclass(frozen=True)
class SnapshotFile:
    """A snapshot file on disk plus the date its name declares."""

    path: Path
    date: str

    @classmethod
    def from_path(cls, path: str | Path) -> "SnapshotFile":
        path = Path(path)
        m = _FILENAME_RE.search(path.name)
        if m is None:
            raise FormatError(
                f"snapshot file name must look like snapshot-YYYY-MM-DD.xml[.gz]: "
                f"{path.name}"
            )
        return cls(path, validate_date(m.group(1)))


def snapshot_filename(date: str, *, compress: bool = False) -> str:
    """The canonical file name for a snapshot observed at ``date``."""
    return f"snapshot-{date}.xml" + (".gz" if compress else "")


def discover_snapshot_files(directory: str | Path) -> list[SnapshotFile]:
    """All snapshot files in a directory, ordered by declared date."""
    found = [
        SnapshotFile.from_path(p)
        for p in Path(directory).iterdir()
        if _FILENAME_RE.search(p.name)
    ]
    return sorted(found, key=lambda f: f.date)


def load_history(
    source: str | Path | Sequence[SnapshotFile],
    *,
    reader: Callable[[Path, Snapshot | None], Snapshot] | None = None,
) -> History:
    """Load an ordered snapshot sequence into a History.

    ``source`` is a directory (scanned for canonically named files) or an
    explicit SnapshotFile sequence.  Declared dates must strictly increase,
    and each file's header date must match its declared date.  ``reader``
    swaps in a parser for other record formats; the default reads the
    canonical format with cross-file storage sharing.
    """
    if isinstance(source, (str, Path)):
        files: Sequence[SnapshotFile] = discover_snapshot_files(source)
        if not files:
            raise FormatError(f"no snapshot files found in {source}")
    else:
        files = list(source)
        if not files:
            raise ValueError("load_history needs at least one snapshot file")
    for before, after in zip(files, files[1:]):
        if after.date <= before.date:
            raise IntegrityError(
                f"snapshot dates must strictly increase: {before.path.name} "
                f"then {after.path.name}"
            )
    if reader is None:
        # Line memos persist across the whole sequence, so a record line
        # seen in any earlier file is adopted without reparsing.
        doc_memo: dict[str, tuple[DocumentRecord, str | None]] = {}
        profile_memo: dict[str, Profile] = {}

        def reader(path: Path, prev: Snapshot | None) -> Snapshot:
            name = str(path)
            stream = open_source(name)
            try:
                data = stream.read()
            except gzip.BadGzipFile as exc:
                raise FormatError(
                    f"corrupt gzip stream: {exc}", -1, name
                ) from None
            snap = _parse_canonical(
                data,
                prev,
                doc_memo=doc_memo,
                profile_memo=profile_memo,
                source_name=name,
            )
            if snap is not None:
                return snap
            return parse_snapshot(data, dedup_against=prev, source_name=name)

    snapshots: list[Snapshot] = []
    prev: Snapshot | None = None
    for file in files:
        snap = reader(file.path, prev)
        if snap.time != file.date:
            raise FormatError(
                f"{file.path.name} declares date {file.date} but its header "
                f"says {snap.time}"
            )
        snapshots.append(snap)
        prev = snap
    return History(tuple(snapshots))
