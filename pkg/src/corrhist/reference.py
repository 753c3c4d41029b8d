"""Published reference figures for the dblp and IMDb-based studies.

These constants record measurements reported for specific historical
snapshot collections (a 2014-2018 dblp crawl series and an IMDb-derived
variant).  They are kept here for documentation and for sanity-checking
reimplementations against the original runs; they cannot be recomputed
without the original snapshot archives.
"""

from __future__ import annotations

# Correction cases mined from the full dblp snapshot series, by kind.
CASE_COLLECTION_COUNTS: dict[str, int] = {
    "merge": 138532,
    "split": 16532,
    "distribute": 55362,
}

# Corrections between selected snapshot pairs of the embedded collections,
# keyed by (t_before, t_after) year. Values: merge, split, distribute, all.
EMBEDDED_CORRECTION_COUNTS: dict[tuple[str, str], dict[str, int]] = {
    ("2013", "2017"): {
        "merge": 2207,
        "split": 19175,
        "distribute": 5346,
        "all": 26728,
    },
    ("2015", "2017"): {
        "merge": 1536,
        "split": 13393,
        "distribute": 3968,
        "all": 18897,
    },
    ("2017", "2018"): {
        "merge": 978,
        "split": 8608,
        "distribute": 2666,
        "all": 12252,
    },
}

# Hit rates (percent of true name pairs sharing a blocking key) for the
# four standard key variants, in report column order: initial+last and
# last-only with case preserved, then the same pair case-folded.
BLOCKING_HIT_RATES: dict[str, tuple[float, float, float, float]] = {
    "dblp": (76.51, 78.56, 77.10, 79.10),
    "imdb": (46.24, 56.64, 47.15, 57.57),
}
