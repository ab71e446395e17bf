"""Record-file ingestion: line-delimited JSON (canonical) and a CSV adapter.

Malformed input never aborts a run; bad lines land in a rejects report with
line number and reason, and ingestion continues. Records whose affiliation
strings fail registry resolution are kept — the unresolved affiliation still
counts toward author affiliation lengths and country sets, but is excluded
from institution indexes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .model import (
    ARTICLE_TYPES,
    AffiliationRef,
    AuthorEntry,
    Corpus,
    InstitutionRegistry,
    PublicationRecord,
    normalize_doc_type,
    valid_country,
)


@dataclass(frozen=True)
class RejectedLine:
    line_number: int
    reason: str
    raw: str

    def to_json(self) -> str:
        return json.dumps(
            {"line_number": self.line_number, "reason": self.reason, "raw": self.raw},
            ensure_ascii=False,
        )


@dataclass
class IngestReport:
    accepted: int = 0
    filtered: int = 0
    rejected: int = 0
    unresolved_affiliations: int = 0
    rejects: list[RejectedLine] = field(default_factory=list)

    def reject(self, line_number: int, reason: str, raw: str) -> None:
        self.rejected += 1
        self.rejects.append(RejectedLine(line_number, reason, raw))

    def write_rejects(self, path: str | Path) -> None:
        text = "".join(r.to_json() + "\n" for r in self.rejects)
        Path(path).write_text(text, encoding="utf-8")


@dataclass
class IngestResult:
    corpus: Corpus
    report: IngestReport


class IngestError(ValueError):
    """Raised for a single malformed record; caught and turned into a reject."""


@dataclass(frozen=True)
class IngestOptions:
    doc_type_filter: frozenset[str] = ARTICLE_TYPES
    year_range: tuple[int, int] | None = None


def resolve_affiliation(raw: str, registry: InstitutionRegistry) -> str | None:
    """Case-insensitive, whitespace-normalized lookup, canonical names then
    aliases; None when nothing matches."""
    return registry.resolve(raw)


_COUNTRY_CACHE: dict[str, str] = {"": ""}


def _normalize_country(raw: object) -> str:
    # raw country strings repeat heavily; normalize and validate once each
    if isinstance(raw, str):
        cached = _COUNTRY_CACHE.get(raw)
        if cached is not None:
            return cached
    country = str(raw).strip().upper()
    if country and not valid_country(country):
        raise IngestError(f"invalid country code {country!r}")
    if isinstance(raw, str):
        _COUNTRY_CACHE[raw] = country
    return country


def _parse_affiliation(
    obj: object, registry: InstitutionRegistry, unresolved: list[int]
) -> AffiliationRef:
    if not isinstance(obj, dict):
        raise IngestError("affiliation must be an object")
    country = _normalize_country(obj.get("country", ""))
    inst_id = obj.get("institution_id")
    if inst_id is not None:
        inst_id = str(inst_id)
        if inst_id not in registry:
            unresolved[0] += 1
            return AffiliationRef(institution_id=None, country=country, raw=inst_id)
        return AffiliationRef(institution_id=inst_id, country=country)
    raw_name = obj.get("institution")
    if raw_name is None:
        raise IngestError("affiliation needs institution or institution_id")
    resolved = resolve_affiliation(str(raw_name), registry)
    if resolved is None:
        unresolved[0] += 1
        return AffiliationRef(institution_id=None, country=country, raw=str(raw_name))
    return AffiliationRef(institution_id=resolved, country=country)


def _parse_record(obj: object, registry: InstitutionRegistry) -> tuple[PublicationRecord, int]:
    """Parse one record object; returns (record, unresolved-affiliation count)."""
    if not isinstance(obj, dict):
        raise IngestError("record must be an object")
    for fld in ("record_id", "year", "doc_type", "authors"):
        if fld not in obj:
            raise IngestError(f"missing field {fld!r}")
    record_id = str(obj["record_id"])
    year = obj["year"]
    if isinstance(year, bool) or not isinstance(year, int):
        raise IngestError(f"year must be an integer, got {year!r}")
    doc_type = normalize_doc_type(str(obj["doc_type"]))
    raw_authors = obj["authors"]
    if not isinstance(raw_authors, list) or not raw_authors:
        raise IngestError("authors must be a non-empty list")
    unresolved = [0]
    authors: list[AuthorEntry] = []
    for a in raw_authors:
        if not isinstance(a, dict) or "author_id" not in a:
            raise IngestError("author entry needs author_id")
        raw_affils = a.get("affiliations")
        if not isinstance(raw_affils, list) or not raw_affils:
            raise IngestError(f"author {a.get('author_id')!r} needs a non-empty affiliations list")
        affils = tuple(_parse_affiliation(x, registry, unresolved) for x in raw_affils)
        resolved = [x.institution_id for x in affils if x.institution_id]
        if len(resolved) != len(set(resolved)):
            raise IngestError(
                f"author {a['author_id']!r} lists the same institution more than once"
            )
        authors.append(AuthorEntry(author_id=str(a["author_id"]), affiliations=affils))
    subject_categories = frozenset(str(s) for s in obj.get("subject_categories", []))
    corresponding = frozenset(str(s) for s in obj.get("corresponding_author_ids", []))
    author_ids = {e.author_id for e in authors}
    missing = corresponding - author_ids
    if missing:
        raise IngestError(f"corresponding author(s) {sorted(missing)} not among authors")
    rec = PublicationRecord(
        record_id=record_id,
        year=year,
        doc_type=doc_type,
        authors=tuple(authors),
        subject_categories=subject_categories,
        corresponding_author_ids=corresponding,
    )
    return rec, unresolved[0]


def _passes_filters(rec: PublicationRecord, options: IngestOptions) -> bool:
    if options.doc_type_filter is not None and rec.doc_type not in options.doc_type_filter:
        return False
    if options.year_range is not None:
        lo, hi = options.year_range
        if not (lo <= rec.year <= hi):
            return False
    return True


def ingest(
    source: str | Path | IO[str],
    registry: InstitutionRegistry,
    options: IngestOptions | None = None,
    fmt: str = "jsonl",
) -> IngestResult:
    """Build a Corpus from a record file or stream.

    fmt is "jsonl" (canonical line-delimited objects) or "csv" (one row per
    record/author/affiliation triple). Empty input yields an empty Corpus.
    """
    options = options or IngestOptions()
    if fmt == "jsonl":
        return _ingest_jsonl(source, registry, options)
    if fmt == "csv":
        return _ingest_csv(source, registry, options)
    raise ValueError(f"unknown record format {fmt!r}; expected jsonl or csv")


def _open(source: str | Path | IO[str]) -> IO[str]:
    if hasattr(source, "read"):
        return source  # type: ignore[return-value]
    return open(source, "r", encoding="utf-8")


def _ingest_jsonl(
    source: str | Path | IO[str], registry: InstitutionRegistry, options: IngestOptions
) -> IngestResult:
    report = IngestReport()
    records: list[PublicationRecord] = []
    seen: set[str] = set()
    stream = _open(source)
    try:
        for line_no, line in enumerate(stream, start=1):
            raw = line.rstrip("\n")
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                report.reject(line_no, f"invalid JSON: {exc.msg}", raw)
                continue
            try:
                rec, unresolved = _parse_record(obj, registry)
            except IngestError as exc:
                report.reject(line_no, str(exc), raw)
                continue
            if rec.record_id in seen:
                report.reject(line_no, f"duplicate record_id {rec.record_id!r}", raw)
                continue
            if not _passes_filters(rec, options):
                report.filtered += 1
                continue
            seen.add(rec.record_id)
            records.append(rec)
            report.accepted += 1
            report.unresolved_affiliations += unresolved
    finally:
        if stream is not source:
            stream.close()
    return IngestResult(corpus=Corpus(records, registry), report=report)


CSV_COLUMNS = [
    "record_id",
    "year",
    "doc_type",
    "subject_categories",
    "corresponding_author_ids",
    "author_pos",
    "author_id",
    "affil_pos",
    "institution",
    "institution_id",
    "country",
]


def _ingest_csv(
    source: str | Path | IO[str], registry: InstitutionRegistry, options: IngestOptions
) -> IngestResult:
    """Reassemble records from (record, author, affiliation) rows.

    Rows for one record_id may be interleaved; author/affiliation order comes
    from the explicit author_pos/affil_pos columns. Any bad row poisons its
    whole record_id (a partial byline would silently corrupt order semantics).
    """
    report = IngestReport()
    stream = _open(source)
    # record_id -> {"year":..., "doc_type":..., "authors": {pos: (author_id, {affil_pos: obj})}}
    pending: dict[str, dict] = {}
    order: list[str] = []
    poisoned: dict[str, int] = {}
    try:
        reader = csv.DictReader(stream)
        for line_no, row in enumerate(reader, start=2):  # header is line 1
            rid = (row.get("record_id") or "").strip()
            if not rid:
                report.reject(line_no, "missing record_id", _row_repr(row))
                continue
            if rid in poisoned:
                continue
            try:
                year = int(row["year"])
                author_pos = int(row["author_pos"])
                affil_pos = int(row["affil_pos"])
            except (KeyError, TypeError, ValueError):
                report.reject(line_no, "year/author_pos/affil_pos must be integers", _row_repr(row))
                poisoned[rid] = line_no
                continue
            entry = pending.get(rid)
            if entry is None:
                entry = {
                    "year": year,
                    "doc_type": row.get("doc_type", ""),
                    "subject_categories": row.get("subject_categories", ""),
                    "corresponding_author_ids": row.get("corresponding_author_ids", ""),
                    "authors": {},
                    "first_line": line_no,
                }
                pending[rid] = entry
                order.append(rid)
            elif entry["year"] != year or entry["doc_type"] != row.get("doc_type", ""):
                report.reject(line_no, f"inconsistent year/doc_type for record {rid!r}", _row_repr(row))
                poisoned[rid] = line_no
                continue
            author_id = (row.get("author_id") or "").strip()
            if not author_id:
                report.reject(line_no, "missing author_id", _row_repr(row))
                poisoned[rid] = line_no
                continue
            slot = entry["authors"].setdefault(author_pos, (author_id, {}))
            if slot[0] != author_id:
                report.reject(
                    line_no, f"conflicting author_id at position {author_pos} of {rid!r}", _row_repr(row)
                )
                poisoned[rid] = line_no
                continue
            if affil_pos in slot[1]:
                report.reject(
                    line_no,
                    f"duplicate affil_pos {affil_pos} for author position {author_pos} of {rid!r}",
                    _row_repr(row),
                )
                poisoned[rid] = line_no
                continue
            affil: dict[str, str] = {"country": (row.get("country") or "").strip()}
            if (row.get("institution_id") or "").strip():
                affil["institution_id"] = row["institution_id"].strip()
            else:
                affil["institution"] = (row.get("institution") or "").strip()
            slot[1][affil_pos] = affil
    finally:
        if stream is not source:
            stream.close()

    records: list[PublicationRecord] = []
    for rid in order:
        if rid in poisoned:
            pending.pop(rid, None)
            continue
        entry = pending.pop(rid)
        obj = {
            "record_id": rid,
            "year": entry["year"],
            "doc_type": entry["doc_type"],
            "subject_categories": _split_multi(entry["subject_categories"]),
            "corresponding_author_ids": _split_multi(entry["corresponding_author_ids"]),
            "authors": [
                {
                    "author_id": author_id,
                    "affiliations": [affils[p] for p in sorted(affils)],
                }
                for _, (author_id, affils) in sorted(entry["authors"].items())
            ],
        }
        try:
            rec, unresolved = _parse_record(obj, registry)
        except IngestError as exc:
            report.reject(entry["first_line"], str(exc), rid)
            continue
        if not _passes_filters(rec, options):
            report.filtered += 1
            continue
        records.append(rec)
        report.accepted += 1
        report.unresolved_affiliations += unresolved
    return IngestResult(corpus=Corpus(records, registry), report=report)


def _split_multi(value: str) -> list[str]:
    return [p.strip() for p in value.split(";") if p.strip()] if value else []


def _row_repr(row: dict) -> str:
    return ",".join(str(v) if v is not None else "" for v in row.values())


def record_to_obj(rec: PublicationRecord) -> dict:
    """Canonical JSON shape; resolved affiliations carry institution_id,
    unresolved ones carry the original raw string."""
    return {
        "record_id": rec.record_id,
        "year": rec.year,
        "doc_type": rec.doc_type,
        "subject_categories": sorted(rec.subject_categories),
        "authors": [
            {
                "author_id": e.author_id,
                "affiliations": [
                    (
                        {"institution_id": a.institution_id, "country": a.country}
                        if a.institution_id
                        else {"institution": a.raw or "", "country": a.country}
                    )
                    for a in e.affiliations
                ],
            }
            for e in rec.authors
        ],
        "corresponding_author_ids": sorted(rec.corresponding_author_ids),
    }


def serialize(corpus: Corpus) -> str:
    """Canonical line-delimited form, records in corpus order.

    Re-ingesting the output with the same registry reproduces the corpus
    record-for-record and index-for-index.
    """
    out = io.StringIO()
    for rec in corpus.records:
        out.write(json.dumps(record_to_obj(rec), ensure_ascii=False, separators=(",", ":")))
        out.write("\n")
    return out.getvalue()


def records_to_csv(records: Iterable[PublicationRecord]) -> str:
    """CSV adapter output: one row per (record, author, affiliation)."""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        for apos, entry in enumerate(rec.authors, start=1):
            for fpos, aff in enumerate(entry.affiliations, start=1):
                writer.writerow(
                    {
                        "record_id": rec.record_id,
                        "year": rec.year,
                        "doc_type": rec.doc_type,
                        "subject_categories": ";".join(sorted(rec.subject_categories)),
                        "corresponding_author_ids": ";".join(sorted(rec.corresponding_author_ids)),
                        "author_pos": apos,
                        "author_id": entry.author_id,
                        "affil_pos": fpos,
                        "institution": "" if aff.institution_id else (aff.raw or ""),
                        "institution_id": aff.institution_id or "",
                        "country": aff.country,
                    }
                )
    return out.getvalue()
