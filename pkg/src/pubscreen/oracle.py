"""Independent full-scan recomputation of every indicator and detector.

This module deliberately shares no code with the model/indicators/authorship
modules: it parses the record file itself with plain json and recomputes each
metric with a separate straight-line pass, so equality against the main
implementations is a meaningful cross-check rather than a tautology.
Do not import the other modules here.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import IO


def _load(source: str | Path | IO[str]) -> list[dict]:
    if hasattr(source, "read"):
        text = source.read()  # type: ignore[union-attr]
    else:
        text = Path(source).read_text(encoding="utf-8")
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def _entry_institutions(entry: dict) -> list[str]:
    out = []
    for aff in entry["affiliations"]:
        inst = aff.get("institution_id")
        if inst is not None:
            out.append(inst)
    return out


def _record_institutions(rec: dict) -> set[str]:
    out: set[str] = set()
    for entry in rec["authors"]:
        out.update(_entry_institutions(entry))
    return out


def _frac_str(value: Fraction | None) -> str | None:
    return None if value is None else str(value)


def _round_half_up(value: Fraction) -> int:
    if value < 0:
        return -_round_half_up(-value)
    return int(value + Fraction(1, 2))


def _reported(metric: str, value: Fraction | int | None):
    if value is None:
        return "n/a"
    if metric == "output_count":
        return int(value)
    if metric == "authors_per_article":
        return _round_half_up(Fraction(value) * 10) / 10
    return _round_half_up(Fraction(value))


def indicator_rows(
    records: list[dict],
    doc_types: tuple[str, ...] = ("article", "review"),
    multi_reading: str = "all-records",
) -> list[dict]:
    """Rows {institution_id, metric, year, value_raw, value_reported, rank}
    for every institution and year in the file.

    Each metric is its own single pass over the raw records; no indexes are
    shared with the main modules (or between passes).
    """
    records = [r for r in records if r["doc_type"] in doc_types]
    institutions = sorted({i for r in records for i in _record_institutions(r)})
    years = sorted({r["year"] for r in records})
    pairs = [(inst, year) for inst in institutions for year in years]
    rows: list[dict] = []

    # output_count, with yearly world rank assigned the naive way:
    # rank = 1 + number of institutions with a strictly greater count.
    counts: dict[tuple[str, int], int] = {p: 0 for p in pairs}
    for rec in records:
        for inst in _record_institutions(rec):
            counts[(inst, rec["year"])] += 1
    for inst, year in pairs:
        n = counts[(inst, year)]
        rank = 1 + sum(1 for j in institutions if counts[(j, year)] > n)
        rows.append(
            {
                "institution_id": inst,
                "metric": "output_count",
                "year": year,
                "value_raw": str(n),
                "value_reported": n,
                "rank": rank,
            }
        )

    # first_author_pct
    denom: dict[tuple[str, int], int] = {p: 0 for p in pairs}
    hits: dict[tuple[str, int], int] = {p: 0 for p in pairs}
    for rec in records:
        first = set(_entry_institutions(rec["authors"][0]))
        for inst in _record_institutions(rec):
            denom[(inst, rec["year"])] += 1
            if inst in first:
                hits[(inst, rec["year"])] += 1
    for p in pairs:
        value = Fraction(100) * hits[p] / denom[p] if denom[p] else None
        rows.append(_row(p[0], "first_author_pct", p[1], value))

    # authors_per_article
    denom = {p: 0 for p in pairs}
    slots: dict[tuple[str, int], int] = {p: 0 for p in pairs}
    for rec in records:
        for inst in _record_institutions(rec):
            denom[(inst, rec["year"])] += 1
            slots[(inst, rec["year"])] += len(rec["authors"])
    for p in pairs:
        value = Fraction(slots[p], denom[p]) if denom[p] else None
        rows.append(_row(p[0], "authors_per_article", p[1], value))

    # intl_collab_pct
    denom = {p: 0 for p in pairs}
    hits = {p: 0 for p in pairs}
    for rec in records:
        countries = {
            aff["country"]
            for entry in rec["authors"]
            for aff in entry["affiliations"]
            if aff.get("country")
        }
        intl = len(countries) >= 2
        for inst in _record_institutions(rec):
            denom[(inst, rec["year"])] += 1
            if intl:
                hits[(inst, rec["year"])] += 1
    for p in pairs:
        value = Fraction(100) * hits[p] / denom[p] if denom[p] else None
        rows.append(_row(p[0], "intl_collab_pct", p[1], value))

    # multi_affiliation_pct
    denom = {p: 0 for p in pairs}
    hits = {p: 0 for p in pairs}
    for rec in records:
        for inst in _record_institutions(rec):
            listing = [e for e in rec["authors"] if inst in _entry_institutions(e)]
            if multi_reading == "exclude-solo-coauthored":
                if len(listing) >= 2 and all(len(e["affiliations"]) < 2 for e in listing):
                    continue
            denom[(inst, rec["year"])] += 1
            if any(len(e["affiliations"]) >= 2 for e in listing):
                hits[(inst, rec["year"])] += 1
    for p in pairs:
        value = Fraction(100) * hits[p] / denom[p] if denom[p] else None
        rows.append(_row(p[0], "multi_affiliation_pct", p[1], value))

    return rows


def _row(inst: str, metric: str, year: int, value: Fraction | None) -> dict:
    return {
        "institution_id": inst,
        "metric": metric,
        "year": year,
        "value_raw": _frac_str(value),
        "value_reported": _reported(metric, value),
        "rank": None,
    }


def hyperprolific_sets(
    records: list[dict],
    year: int,
    threshold: int = 36,
    doc_types: tuple[str, ...] = ("article", "review"),
) -> dict[str, list[str]]:
    """institution -> sorted authors whose total output in the year reaches
    the threshold and whose entries list the institution that year."""
    records = [r for r in records if r["doc_type"] in doc_types and r["year"] == year]
    totals: dict[str, int] = {}
    insts: dict[str, set[str]] = {}
    for rec in records:
        counted: set[str] = set()
        for entry in rec["authors"]:
            author = entry["author_id"]
            if author in counted:
                continue
            counted.add(author)
            totals[author] = totals.get(author, 0) + 1
            insts.setdefault(author, set()).update(_entry_institutions(entry))
    out: dict[str, list[str]] = {}
    for author, total in totals.items():
        if total >= threshold:
            for inst in insts[author]:
                out.setdefault(inst, []).append(author)
    return {inst: sorted(authors) for inst, authors in sorted(out.items())}


def external_author_sets(
    records: list[dict],
    min_pubs: int = 2,
    doc_types: tuple[str, ...] = ("article", "review"),
) -> dict[str, list[str]]:
    """institution -> sorted authors naming it secondarily in a strict
    majority of their records naming it (>= min_pubs records)."""
    records = [r for r in records if r["doc_type"] in doc_types]
    totals: dict[tuple[str, str], int] = {}
    secondary: dict[tuple[str, str], int] = {}
    for rec in records:
        counted: set[str] = set()
        for entry in rec["authors"]:
            author = entry["author_id"]
            if author in counted:
                continue
            counted.add(author)
            for pos, aff in enumerate(entry["affiliations"], start=1):
                inst = aff.get("institution_id")
                if inst is None:
                    continue
                totals[(author, inst)] = totals.get((author, inst), 0) + 1
                if pos > 1:
                    secondary[(author, inst)] = secondary.get((author, inst), 0) + 1
    out: dict[str, list[str]] = {}
    for (author, inst), total in totals.items():
        if total >= min_pubs and 2 * secondary.get((author, inst), 0) > total:
            out.setdefault(inst, []).append(author)
    return {inst: sorted(authors) for inst, authors in sorted(out.items())}


def cross_group_set(
    records: list[dict],
    group: list[str],
    min_pubs: int = 10,
    doc_types: tuple[str, ...] = ("article", "review"),
) -> list[str]:
    records = [r for r in records if r["doc_type"] in doc_types]
    members = set(group)
    group_records: dict[str, int] = {}
    credited: dict[str, set[str]] = {}
    for rec in records:
        counted: set[str] = set()
        for entry in rec["authors"]:
            author = entry["author_id"]
            if author in counted:
                continue
            counted.add(author)
            listed = set(_entry_institutions(entry)) & members
            if listed:
                group_records[author] = group_records.get(author, 0) + 1
                credited.setdefault(author, set()).update(listed)
    return sorted(
        a
        for a, n in group_records.items()
        if n > min_pubs and len(credited[a]) >= 2
    )


def overlap_value(
    records: list[dict],
    group: list[str],
    year: int,
    doc_types: tuple[str, ...] = ("article", "review"),
) -> Fraction | None:
    members = set(group)
    denom = 0
    hits = 0
    for rec in records:
        if rec["doc_type"] not in doc_types or rec["year"] != year:
            continue
        listed = _record_institutions(rec) & members
        if listed:
            denom += 1
            if len(listed) >= 2:
                hits += 1
    return Fraction(100) * hits / denom if denom else None


def subject_rank(
    records: list[dict],
    category: str,
    year: int,
    doc_types: tuple[str, ...] = ("article", "review"),
) -> list[tuple[str, int, int]]:
    """(institution, count, rank) triples, naive sort-and-assign."""
    counts: dict[str, int] = {}
    for rec in records:
        if (
            rec["doc_type"] in doc_types
            and rec["year"] == year
            and category in rec.get("subject_categories", [])
        ):
            for inst in _record_institutions(rec):
                counts[inst] = counts.get(inst, 0) + 1
    ordered = sorted(counts, key=lambda i: (-counts[i], i))
    out = []
    for pos, inst in enumerate(ordered, start=1):
        better = sum(1 for j in counts.values() if j > counts[inst])
        out.append((inst, counts[inst], better + 1))
    return out


def oracle_metrics(
    source: str | Path | IO[str],
    group: list[str] | None = None,
    hyperprolific_threshold: int = 36,
    external_min_pubs: int = 2,
    cross_group_min_pubs: int = 10,
    multi_reading: str = "all-records",
) -> dict:
    """Full oracle bundle for a record file.

    Returns {"indicators": rows, "hyperprolific": {year: {inst: authors}},
    "external": {inst: authors}, "cross_group": authors or None,
    "overlap_pct": {year: exact string} or None}.
    """
    records = _load(source)
    kept = [r for r in records if r["doc_type"] in ("article", "review")]
    years = sorted({r["year"] for r in kept})
    result: dict = {
        "indicators": indicator_rows(records, multi_reading=multi_reading),
        "hyperprolific": {
            year: hyperprolific_sets(records, year, hyperprolific_threshold) for year in years
        },
        "external": external_author_sets(records, external_min_pubs),
        "cross_group": None,
        "overlap_pct": None,
    }
    if group is not None:
        result["cross_group"] = cross_group_set(records, group, cross_group_min_pubs)
        result["overlap_pct"] = {
            year: _frac_str(overlap_value(records, group, year)) for year in years
        }
    return result


def oracle_rows_jsonl(source: str | Path | IO[str]) -> str:
    """Indicator rows as line-delimited objects (the export interface shape)."""
    rows = indicator_rows(_load(source))
    return "\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + ("\n" if rows else "")
