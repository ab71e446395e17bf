"""Bundled reference tables: published 2019-2023 institutional values used by
the arithmetic-regression tests and by report rendering.

These are transcriptions of published values, not generated data. Ranks
reported only as a censored floor appear as the string "2000+"; institutions
that fell out of a published subject ranking appear with rank None.
"""

from __future__ import annotations

import json
from pathlib import Path

from .util import atomic_write_text

STUDY_GROUP = (
    "chandigarh",
    "fue",
    "gla",
    "imsiu",
    "kku",
    "ksu",
    "lau",
    "lovely",
    "mus",
    "pnu",
    "psau",
    "sharjah",
    "tabuk",
    "taif",
    "upes",
    "uqu",
)

CONTROL_GROUP = ("caltech", "cityu", "cmu", "epfl", "princeton", "rice", "ucsb")

INSTITUTIONS = {
    "fue": ("Future University in Egypt", "EG"),
    "chandigarh": ("Chandigarh University", "IN"),
    "gla": ("GLA University", "IN"),
    "lovely": ("Lovely Professional University", "IN"),
    "upes": ("University of Petroleum and Energy Studies", "IN"),
    "mus": ("Al-Mustaqbal University", "IQ"),
    "lau": ("Lebanese American University", "LB"),
    "imsiu": ("Al-Imam Mohammad Ibn Saud Islamic University", "SA"),
    "kku": ("King Khalid University", "SA"),
    "ksu": ("King Saud University", "SA"),
    "psau": ("Prince Sattam Bin Abdulaziz University", "SA"),
    "pnu": ("Princess Nourah Bint Abdulrahman University", "SA"),
    "taif": ("Taif University", "SA"),
    "uqu": ("Umm Al-Qura University", "SA"),
    "tabuk": ("University of Tabuk", "SA"),
    "sharjah": ("University of Sharjah", "AE"),
    "cityu": ("City University of Hong Kong", "HK"),
    "epfl": ("Swiss Federal Institute of Technology Lausanne", "CH"),
    "caltech": ("California Institute of Technology", "US"),
    "cmu": ("Carnegie Mellon University", "US"),
    "princeton": ("Princeton University", "US"),
    "rice": ("Rice University", "US"),
    "ucsb": ("University of California, Santa Barbara", "US"),
}

# id -> (articles 2019, articles 2023, published change %, rank 2019, rank 2023)
OUTPUT_COUNTS = {
    "fue": (127, 1373, 981, "2000+", 986),
    "chandigarh": (362, 2327, 543, "2000+", 583),
    "gla": (259, 1572, 507, "2000+", 870),
    "lovely": (838, 2302, 175, 1152, 593),
    "upes": (308, 1569, 411, "2000+", 871),
    "mus": (91, 1432, 1474, "2000+", 947),
    "lau": (315, 2637, 737, "2000+", 500),
    "imsiu": (364, 1588, 336, "2000+", 865),
    "kku": (1327, 5158, 289, 778, 199),
    "ksu": (4490, 11962, 166, 175, 29),
    "psau": (750, 4388, 485, 1254, 255),
    "pnu": (471, 4468, 849, 1749, 250),
    "taif": (513, 2377, 363, 1662, 567),
    "uqu": (589, 3072, 422, 1508, 419),
    "tabuk": (414, 1389, 236, "2000+", 969),
    "sharjah": (758, 2465, 225, 1238, 541),
    "cityu": (3450, 5481, 59, 275, 181),
    "epfl": (3495, 3472, -1, 269, 369),
    "caltech": (3634, 3719, 2, 258, 341),
    "cmu": (2266, 2299, 1, 465, 589),
    "princeton": (3595, 3819, 6, 266, 325),
    "rice": (1765, 1851, 5, 605, 747),
    "ucsb": (3263, 2999, -8, 299, 430),
}

# Rows out of published-data consistency: published change not equal to the
# change recomputed from the published counts within +/-1 point.
OUTPUT_COUNT_KNOWN_INCONSISTENT = ("upes",)

# id -> (% first author 2019, 2023, world rank 2019, 2023)
FIRST_AUTHOR_RATES = {
    "mus": (35, 11, 998, 999),
    "chandigarh": (60, 26, 308, 994),
    "fue": (44, 10, 879, 1000),
    "gla": (72, 35, 77, 977),
    "imsiu": (51, 34, 677, 984),
    "kku": (48, 18, 807, 997),
    "ksu": (48, 29, 815, 990),
    "lau": (55, 17, 448, 998),
    "lovely": (65, 50, 197, 495),
    "psau": (50, 28, 749, 992),
    "pnu": (44, 27, 953, 993),
    "taif": (55, 24, 461, 996),
    "uqu": (47, 33, 887, 986),
    "upes": (60, 32, 301, 987),
    "sharjah": (49, 35, 770, 975),
    "tabuk": (52, 35, 604, 982),
    "caltech": (43, 37, 972, 965),
    "cmu": (51, 47, 632, 634),
    "cityu": (45, 39, 932, 939),
    "epfl": (55, 50, 452, 516),
    "princeton": (52, 48, 599, 583),
    "rice": (51, 44, 650, 783),
    "ucsb": (52, 50, 598, 512),
}

# id -> counts of hyperprolific authors for 2019..2023
HYPERPROLIFIC_COUNTS = {
    "ksu": (9, 44, 53, 47, 89),
    "kku": (7, 10, 31, 49, 26),
    "lau": (0, 0, 1, 2, 26),
    "psau": (1, 4, 15, 40, 23),
    "pnu": (0, 1, 3, 10, 22),
    "taif": (0, 1, 25, 37, 14),
    "sharjah": (0, 1, 8, 9, 11),
    "uqu": (0, 0, 2, 9, 10),
    "gla": (0, 0, 0, 3, 8),
    "upes": (0, 0, 0, 4, 7),
    "chandigarh": (0, 0, 0, 2, 6),
    "fue": (0, 0, 0, 5, 6),
    "mus": (0, 0, 0, 5, 5),
    "lovely": (0, 0, 1, 3, 5),
    "imsiu": (0, 0, 0, 0, 2),
    "tabuk": (1, 2, 1, 3, 0),
    "cityu": (6, 9, 9, 10, 10),
    "princeton": (2, 4, 3, 2, 2),
    "caltech": (2, 5, 3, 3, 1),
    "epfl": (3, 3, 3, 1, 0),
    "ucsb": (2, 4, 1, 0, 1),
    "cmu": (1, 1, 1, 1, 1),
    "rice": (1, 1, 1, 1, 1),
}

HYPERPROLIFIC_YEARS = (2019, 2020, 2021, 2022, 2023)

# id -> (% multi-affiliation 2019, 2023, published change in points)
MULTI_AFFILIATION_RATES = {
    "lau": (15, 76, 61),
    "chandigarh": (9, 39, 31),
    "upes": (5, 34, 29),
    "sharjah": (19, 27, 8),
    "psau": (29, 24, -5),
    "imsiu": (28, 21, -7),
    "tabuk": (27, 13, -14),
    "kku": (21, 12, -9),
    "uqu": (31, 10, -21),
    "lovely": (2, 10, 8),
    "taif": (43, 9, -34),
    "fue": (26, 7, -19),
    "mus": (21, 5, -16),
    "pnu": (21, 4, -17),
    "gla": (4, 4, 0),
    "ksu": (11, 3, -8),
    "cityu": (18, 22, 4),
    "princeton": (8, 8, 0),
    "epfl": (8, 8, -1),
    "caltech": (7, 6, -1),
    "rice": (7, 5, -2),
    "ucsb": (6, 5, -1),
    "cmu": (5, 4, -1),
}

# id -> (% international collaboration 2019, 2023, world rank 2019, 2023)
INTL_COLLAB_RATES = {
    "lau": (54, 95, 250, 1),
    "kku": (75, 89, 15, 3),
    "pnu": (72, 89, 24, 4),
    "fue": (27, 87, 788, 5),
    "sharjah": (78, 87, 5, 6),
    "psau": (74, 85, 17, 7),
    "taif": (73, 82, 23, 11),
    "mus": (48, 79, 372, 18),
    "tabuk": (76, 78, 13, 21),
    "ksu": (74, 78, 18, 22),
    "imsiu": (61, 77, 109, 23),
    "uqu": (72, 77, 27, 28),
    "chandigarh": (33, 66, 643, 118),
    "upes": (17, 64, 839, 141),
    "gla": (14, 58, 991, 247),
    "lovely": (33, 52, 653, 333),
    "epfl": (70, 74, 29, 40),
    "caltech": (59, 60, 140, 219),
    "princeton": (49, 52, 345, 344),
    "ucsb": (46, 48, 397, 410),
    "rice": (46, 47, 392, 426),
    "cmu": (42, 46, 454, 440),
    "cityu": (40, 37, 488, 601),
}

# category -> list of (institution_id, articles 2019, articles 2023,
#                      rank 2019, rank 2023); rank None = out of the ranking
SUBJECT_COUNTS = {
    "Agricultural Sciences": [("ksu", 188, 510, 72, 12)],
    "Biology & Biochemistry": [("ksu", 321, 611, 71, 7)],
    "Chemistry": [
        ("ksu", 603, 2266, 58, 2),
        ("kku", 200, 957, 446, 33),
        ("pnu", 61, 658, 1266, 60),
        ("epfl", 554, 368, 77, None),
    ],
    "Computer Science": [
        ("ksu", 198, 297, 55, 53),
        ("lau", 21, 289, 1053, 57),
        ("psau", 20, 278, 1085, 61),
        ("pnu", 13, 266, 1466, 67),
        ("kku", 32, 202, 752, 96),
        ("cityu", 316, 449, 23, 30),
        ("cmu", 195, 178, 56, None),
    ],
    "Economics & Business": [
        ("lau", 26, 235, 731, 24),
        ("cityu", 150, 143, 63, 86),
    ],
    "Engineering": [
        ("ksu", 459, 1487, 131, 38),
        ("kku", 171, 988, 469, 58),
        ("psau", 98, 918, 775, 66),
        ("pnu", 23, 706, 1994, 100),
        ("cityu", 845, 1200, 45, 50),
    ],
    "Environment/Ecology": [("ksu", 184, 946, 195, 4)],
    "Geosciences": [
        ("caltech", 721, 576, 7, 21),
        ("princeton", 257, 231, 89, 100),
    ],
    "Materials Science": [
        ("ksu", 374, 1006, 111, 33),
        ("kku", 189, 598, 275, 71),
        ("cityu", 669, 1005, 45, 34),
        ("epfl", 407, 337, 95, None),
    ],
    "Mathematics": [
        ("ksu", 151, 470, 94, 2),
        ("pnu", 18, 328, 1195, 7),
        ("psau", 46, 297, 578, 13),
        ("kku", 51, 252, 504, 18),
        ("uqu", 18, 190, 1195, 46),
        ("lau", 2, 149, 2825, 98),
        ("princeton", 214, 184, 30, 50),
    ],
    "Microbiology": [("ksu", 55, 148, 192, 37)],
    "Pharmacology & Toxicology": [
        ("ksu", 263, 685, 28, 1),
        ("psau", 73, 284, 310, 37),
        ("kku", 76, 226, 292, 64),
        ("uqu", 41, 210, 583, 70),
        ("pnu", 26, 183, 822, 89),
    ],
    "Physics": [
        ("ksu", 168, 416, 283, 66),
        ("kku", 165, 367, 294, 78),
        ("pnu", 17, 338, 1661, 90),
        ("princeton", 655, 555, 29, 32),
        ("caltech", 482, 436, 55, 60),
        ("epfl", 462, 446, 59, 54),
        ("ucsb", 435, 319, 59, 97),
    ],
    "Plant & Animal Science": [("ksu", 225, 703, 132, 10)],
    "Space Science": [
        ("caltech", 956, 1030, 1, 1),
        ("princeton", 423, 526, 16, 14),
        ("ucsb", 156, 141, 85, None),
    ],
}

# (group, year) -> co-authorship map footer values; strength strings keep the
# published display form; None = not published
NETWORK_FOOTERS = {
    ("study", 2019): {
        "min_articles": 91,
        "external_institutions": 27,
        "links": 547,
        "total_link_strength": "7k",
        "clusters": 9,
        "group_total_articles": 11202,
    },
    ("study", 2023): {
        "min_articles": 91,
        "external_institutions": 254,
        "links": 15511,
        "total_link_strength": "154k",
        "clusters": 8,
        "group_total_articles": 41026,
    },
    ("control", 2019): {
        "min_articles": 91,
        "external_institutions": 137,
        "links": 8197,
        "total_link_strength": "94k",
        "clusters": 6,
        "group_total_articles": 20079,
    },
    ("control", 2023): {
        "min_articles": 91,
        "external_institutions": 175,
        "links": None,
        "total_link_strength": None,
        "clusters": None,
        "group_total_articles": None,
    },
}

# published change in external institutions, study maps 2019 -> 2023
NETWORK_EXTERNAL_GROWTH_PCT = {"study": 840, "control": 28}

GROUP_AGGREGATES = {
    "study": {
        "growth_pct": 266,
        "total_articles": {2019: 11202, 2023: 41026},
        "first_author_pct": {2019: 50, 2023: 28},
        "authors_per_article": {2019: 5.0, 2023: 6.4},
        "intl_collab_pct": {2019: 70, 2023: 81},
        "overlap_pct": {2019: 6, 2023: 18},
        "hyperprolific_total": {2019: 18, 2023: 260},
        "median_output_rank": {2019: "2000+", 2023: 575},
        "median_first_author_rank": {2019: 713, 2023: 992},
        "median_intl_collab_rank": {2019: 68, 2023: 20},
    },
    "control": {
        "growth_pct": 10,
        "total_articles": {2019: 20079, 2023: None},
        "first_author_pct": {2019: 48, 2023: 43},
        "authors_per_article": {2019: 6.9, 2023: 8.1},
        "intl_collab_pct": {2019: 59, 2023: 62},
        "overlap_pct": {2019: 2, 2023: 3},
        "hyperprolific_total": {2019: 17, 2023: 16},
        "median_output_rank": {2019: 275, 2023: 369},
        "median_first_author_rank": {2019: 632, 2023: 634},
        "median_intl_collab_rank": {2019: 392, 2023: 410},
    },
}

WORLD_BASELINES = {
    "growth_pct": 8.7,
    "first_author_pct": {2019: 53, 2023: 50},
    "authors_per_article": {2019: 3.6, 2023: 3.9},
}

START_YEAR = 2019
END_YEAR = 2023


def group_of(institution_id: str) -> str:
    if institution_id in STUDY_GROUP:
        return "study"
    if institution_id in CONTROL_GROUP:
        return "control"
    raise KeyError(institution_id)


def summed_output(group: str, year: int) -> int:
    """Sum of member article counts (whole counting; overlaps double-count)."""
    members = STUDY_GROUP if group == "study" else CONTROL_GROUP
    idx = 0 if year == START_YEAR else 1
    return sum(OUTPUT_COUNTS[m][idx] for m in members)


def hyperprolific_total(group: str, year: int) -> int:
    members = STUDY_GROUP if group == "study" else CONTROL_GROUP
    idx = HYPERPROLIFIC_YEARS.index(year)
    return sum(HYPERPROLIFIC_COUNTS[m][idx] for m in members)


def _tables() -> dict[str, dict]:
    meta = {"period": "2019-2023", "unit": "articles and reviews"}
    return {
        "output_counts": {
            **meta,
            "rows": [
                {
                    "institution_id": inst,
                    "name": INSTITUTIONS[inst][0],
                    "country": INSTITUTIONS[inst][1],
                    "group": group_of(inst),
                    "articles": {"2019": row[0], "2023": row[1]},
                    "published_change_pct": row[2],
                    "world_rank": {"2019": row[3], "2023": row[4]},
                }
                for inst, row in OUTPUT_COUNTS.items()
            ],
        },
        "subject_counts": {
            **meta,
            "categories": {
                category: [
                    {
                        "institution_id": inst,
                        "group": group_of(inst),
                        "articles": {"2019": a19, "2023": a23},
                        "world_rank": {"2019": r19, "2023": r23},
                    }
                    for inst, a19, a23, r19, r23 in rows
                ]
                for category, rows in SUBJECT_COUNTS.items()
            },
        },
        "first_author_rates": {
            **meta,
            "rows": [
                {
                    "institution_id": inst,
                    "group": group_of(inst),
                    "pct": {"2019": row[0], "2023": row[1]},
                    "world_rank": {"2019": row[2], "2023": row[3]},
                }
                for inst, row in FIRST_AUTHOR_RATES.items()
            ],
        },
        "hyperprolific_counts": {
            **meta,
            "threshold": 36,
            "rows": [
                {
                    "institution_id": inst,
                    "group": group_of(inst),
                    "counts": {str(y): c for y, c in zip(HYPERPROLIFIC_YEARS, row)},
                }
                for inst, row in HYPERPROLIFIC_COUNTS.items()
            ],
        },
        "multi_affiliation_rates": {
            **meta,
            "rows": [
                {
                    "institution_id": inst,
                    "group": group_of(inst),
                    "pct": {"2019": row[0], "2023": row[1]},
                    "published_change_points": row[2],
                }
                for inst, row in MULTI_AFFILIATION_RATES.items()
            ],
        },
        "intl_collab_rates": {
            **meta,
            "rows": [
                {
                    "institution_id": inst,
                    "group": group_of(inst),
                    "pct": {"2019": row[0], "2023": row[1]},
                    "world_rank": {"2019": row[2], "2023": row[3]},
                }
                for inst, row in INTL_COLLAB_RATES.items()
            ],
        },
        "network_footers": {
            **meta,
            "rows": [
                {"group": group, "year": year, **values}
                for (group, year), values in NETWORK_FOOTERS.items()
            ],
            "external_growth_pct": NETWORK_EXTERNAL_GROWTH_PCT,
        },
        "group_aggregates": {
            **meta,
            "groups": {
                group: {
                    key: ({str(y): v for y, v in val.items()} if isinstance(val, dict) else val)
                    for key, val in values.items()
                }
                for group, values in GROUP_AGGREGATES.items()
            },
            "world": {
                key: ({str(y): v for y, v in val.items()} if isinstance(val, dict) else val)
                for key, val in WORLD_BASELINES.items()
            },
            "members": {"study": list(STUDY_GROUP), "control": list(CONTROL_GROUP)},
        },
    }


def reference_tables() -> dict[str, dict]:
    """The full fixture bundle as one dict, keyed by table name."""
    return _tables()


def write_reference_tables(directory: str | Path) -> list[Path]:
    """Emit the bundle as one JSON file per table; returns the paths."""
    directory = Path(directory)
    paths = []
    for name, table in _tables().items():
        path = directory / f"{name}.json"
        atomic_write_text(path, json.dumps({"table": name, **table}, indent=2) + "\n")
        paths.append(path)
    return paths
