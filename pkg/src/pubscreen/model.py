"""Normalized data model: publication records, institution registry, corpus.

A Corpus is immutable once built; every analysis module reads it concurrently
without locking. Indexes are derived from the record list and are rebuildable
byte-identically.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

ARTICLE_TYPES = frozenset({"article", "review"})

_WS = re.compile(r"\s+")


def normalize_name(raw: str) -> str:
    """Case-insensitive, whitespace-collapsed form used for alias lookup."""
    return _WS.sub(" ", raw.strip()).lower()


_DOC_TYPE_CACHE: dict[str, str] = {}


def normalize_doc_type(raw: str) -> str:
    cached = _DOC_TYPE_CACHE.get(raw)
    if cached is None:
        cached = _DOC_TYPE_CACHE[raw] = _WS.sub(" ", raw.strip()).lower()
    return cached


_COUNTRY_OK: set[str] = set()


def valid_country(code: str) -> bool:
    """Two ASCII letters; membership in the ISO table is not enforced."""
    if code in _COUNTRY_OK:
        return True
    ok = len(code) == 2 and code.isalpha() and code.isascii()
    if ok:
        _COUNTRY_OK.add(code)
    return ok


# The record types below are treated as immutable after construction (the
# concurrency contract depends on it) but are not dataclass-frozen: frozen
# __init__ goes through object.__setattr__ and is several times slower, which
# matters at hundreds of thousands of instances per ingest.


@dataclass(slots=True, eq=True)
class AffiliationRef:
    """One affiliation on one author entry.

    institution_id is None when the raw string did not resolve against the
    registry; such affiliations still carry a country and still count toward
    an author's affiliation-list length, but are excluded from institution
    indexes.
    """

    institution_id: str | None
    country: str
    raw: str | None = None

    @property
    def resolved(self) -> bool:
        return self.institution_id is not None


@dataclass(slots=True, eq=True)
class AuthorEntry:
    author_id: str
    affiliations: tuple[AffiliationRef, ...]

    def institution_ids(self) -> tuple[str, ...]:
        """Resolved institution ids in listed order."""
        return tuple(a.institution_id for a in self.affiliations if a.institution_id)

    def lists(self, institution_id: str) -> bool:
        return any(a.institution_id == institution_id for a in self.affiliations)

    def position_of(self, institution_id: str) -> int | None:
        """1-based position of the institution in the affiliation list."""
        for i, a in enumerate(self.affiliations, start=1):
            if a.institution_id == institution_id:
                return i
        return None


@dataclass(slots=True, eq=True)
class PublicationRecord:
    record_id: str
    year: int
    doc_type: str
    authors: tuple[AuthorEntry, ...]
    subject_categories: frozenset[str] = frozenset()
    corresponding_author_ids: frozenset[str] = frozenset()

    def institutions(self) -> set[str]:
        """All resolved institutions listed anywhere on the byline."""
        out: set[str] = set()
        for entry in self.authors:
            out.update(entry.institution_ids())
        return out

    def countries(self) -> set[str]:
        """Union of affiliation countries over all authors and positions."""
        return {a.country for e in self.authors for a in e.affiliations if a.country}

    @property
    def first_author(self) -> AuthorEntry:
        return self.authors[0]


@dataclass(frozen=True)
class InstitutionInfo:
    institution_id: str
    canonical_name: str
    country: str
    aliases: frozenset[str] = frozenset()


class RegistryError(ValueError):
    """Raised when a registry file violates its invariants."""


class InstitutionRegistry:
    """Maps raw affiliation strings to stable institution ids.

    Lookup is case-insensitive and whitespace-normalized, canonical names
    first, then aliases. Canonical names must be unique and alias sets
    pairwise disjoint, so resolution is deterministic.
    """

    def __init__(self, entries: Iterable[InstitutionInfo]):
        self.entries: dict[str, InstitutionInfo] = {}
        self._lookup: dict[str, str] = {}
        alias_lookup: dict[str, str] = {}
        for info in entries:
            if info.institution_id in self.entries:
                raise RegistryError(f"duplicate institution_id {info.institution_id!r}")
            if not valid_country(info.country):
                raise RegistryError(
                    f"invalid country {info.country!r} for {info.institution_id!r}"
                )
            key = normalize_name(info.canonical_name)
            if key in self._lookup:
                raise RegistryError(f"duplicate canonical name {info.canonical_name!r}")
            self.entries[info.institution_id] = info
            self._lookup[key] = info.institution_id
            for alias in info.aliases:
                akey = normalize_name(alias)
                owner = alias_lookup.get(akey)
                if owner is not None and owner != info.institution_id:
                    raise RegistryError(
                        f"alias {alias!r} claimed by both {owner!r} and {info.institution_id!r}"
                    )
                alias_lookup[akey] = info.institution_id
        # Canonical names take precedence over aliases on collision.
        for akey, inst in alias_lookup.items():
            self._lookup.setdefault(akey, inst)

    def __contains__(self, institution_id: str) -> bool:
        return institution_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, raw: str) -> str | None:
        """Resolve a raw affiliation string; None when nothing matches."""
        return self._lookup.get(normalize_name(raw))

    def country_of(self, institution_id: str) -> str:
        return self.entries[institution_id].country

    @classmethod
    def from_json(cls, source: str | Path | IO[str]) -> "InstitutionRegistry":
        """Load from a JSON array (or JSON-lines) of registry objects."""
        if hasattr(source, "read"):
            text = source.read()  # type: ignore[union-attr]
        else:
            text = Path(source).read_text(encoding="utf-8")
        text = text.strip()
        if not text:
            return cls([])
        if text.startswith("["):
            raw_entries = json.loads(text)
        else:
            raw_entries = [json.loads(line) for line in text.splitlines() if line.strip()]
        entries = []
        for obj in raw_entries:
            try:
                entries.append(
                    InstitutionInfo(
                        institution_id=str(obj["institution_id"]),
                        canonical_name=str(obj["canonical_name"]),
                        country=str(obj["country"]).upper(),
                        aliases=frozenset(str(a) for a in obj.get("aliases", [])),
                    )
                )
            except KeyError as exc:
                raise RegistryError(f"registry entry missing field {exc}") from exc
        return cls(entries)

    def to_json(self) -> str:
        rows = [
            {
                "institution_id": info.institution_id,
                "canonical_name": info.canonical_name,
                "country": info.country,
                "aliases": sorted(info.aliases),
            }
            for info in sorted(self.entries.values(), key=lambda e: e.institution_id)
        ]
        return json.dumps(rows, indent=2, sort_keys=False)


class UnknownInstitutionError(KeyError):
    def __init__(self, institution_id: str):
        super().__init__(institution_id)
        self.institution_id = institution_id

    def __str__(self) -> str:
        return f"unknown institution {self.institution_id!r}"


class Corpus:
    """Validated record collection plus registry and derived indexes.

    by_institution maps institution_id -> record ids where any author entry
    lists the institution in any affiliation position; by_author maps
    author_id -> record ids. Both preserve record order.
    """

    def __init__(self, records: Iterable[PublicationRecord], registry: InstitutionRegistry):
        self.records: tuple[PublicationRecord, ...] = tuple(records)
        self.registry = registry
        self._by_id: dict[str, PublicationRecord] = {}
        by_institution: dict[str, list[str]] = {}
        by_author: dict[str, list[str]] = {}
        years: list[int] = []
        for rec in self.records:
            self._by_id[rec.record_id] = rec
            years.append(rec.year)
            seen_inst: set[str] = set()
            seen_auth: set[str] = set()
            for entry in rec.authors:
                if entry.author_id not in seen_auth:
                    seen_auth.add(entry.author_id)
                    by_author.setdefault(entry.author_id, []).append(rec.record_id)
                for inst in entry.institution_ids():
                    if inst not in seen_inst:
                        seen_inst.add(inst)
                        by_institution.setdefault(inst, []).append(rec.record_id)
        self.by_institution: dict[str, tuple[str, ...]] = {
            k: tuple(v) for k, v in by_institution.items()
        }
        self.by_author: dict[str, tuple[str, ...]] = {k: tuple(v) for k, v in by_author.items()}
        self.year_range: tuple[int, int] | None = (min(years), max(years)) if years else None

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.records == other.records
            and self.by_institution == other.by_institution
            and self.by_author == other.by_author
        )

    def __hash__(self) -> int:  # corpora are compared, not hashed
        raise TypeError("Corpus is unhashable")

    def record(self, record_id: str) -> PublicationRecord:
        return self._by_id[record_id]

    def institutions(self) -> list[str]:
        return sorted(self.by_institution)

    def authors(self) -> list[str]:
        return sorted(self.by_author)

    def has_year(self, year: int) -> bool:
        return self.year_range is not None and self.year_range[0] <= year <= self.year_range[1]

    def records_for_institution(
        self, institution_id: str, year: int | None = None
    ) -> list[PublicationRecord]:
        """Records attributed to the institution (whole counting), optionally
        restricted to one year. Unknown ids raise, naming the id."""
        if institution_id not in self.registry and institution_id not in self.by_institution:
            raise UnknownInstitutionError(institution_id)
        recs = (self._by_id[rid] for rid in self.by_institution.get(institution_id, ()))
        return [r for r in recs if year is None or r.year == year]

    def records_for_author(
        self, author_id: str, year: int | None = None
    ) -> list[PublicationRecord]:
        recs = (self._by_id[rid] for rid in self.by_author.get(author_id, ()))
        return [r for r in recs if year is None or r.year == year]

    def iter_records(self, year: int | None = None) -> Iterator[PublicationRecord]:
        for rec in self.records:
            if year is None or rec.year == year:
                yield rec


@dataclass(frozen=True)
class ValidationFinding:
    kind: str
    subject: str
    detail: str


@dataclass
class ValidationReport:
    findings: list[ValidationFinding] = field(default_factory=list)

    def add(self, kind: str, subject: str, detail: str) -> None:
        self.findings.append(ValidationFinding(kind, subject, detail))

    @property
    def clean(self) -> bool:
        return not self.findings

    def by_kind(self, kind: str) -> list[ValidationFinding]:
        return [f for f in self.findings if f.kind == kind]


def validate(corpus: Corpus) -> ValidationReport:
    """Collect every invariant violation as a structured finding.

    Findings, not failures: an invariant-clean corpus yields an empty report.
    """
    report = ValidationReport()
    seen_ids: set[str] = set()
    for rec in corpus.records:
        if rec.record_id in seen_ids:
            report.add("duplicate_record_id", rec.record_id, "record_id appears more than once")
        seen_ids.add(rec.record_id)
        if not rec.authors:
            report.add("empty_author_list", rec.record_id, "record has no authors")
        author_ids = {e.author_id for e in rec.authors}
        for cid in rec.corresponding_author_ids:
            if cid not in author_ids:
                report.add(
                    "unknown_corresponding_author",
                    rec.record_id,
                    f"corresponding author {cid!r} not among authors",
                )
        for pos, entry in enumerate(rec.authors, start=1):
            if not entry.affiliations:
                report.add(
                    "empty_affiliation_list",
                    rec.record_id,
                    f"author {entry.author_id!r} (position {pos}) has no affiliations",
                )
            resolved = [a.institution_id for a in entry.affiliations if a.institution_id]
            dupes = {i for i in resolved if resolved.count(i) > 1}
            for inst in sorted(dupes):
                report.add(
                    "duplicate_affiliation",
                    rec.record_id,
                    f"author {entry.author_id!r} lists institution {inst!r} more than once",
                )
            for aff in entry.affiliations:
                if aff.institution_id and aff.institution_id not in corpus.registry:
                    report.add(
                        "unregistered_institution",
                        rec.record_id,
                        f"institution {aff.institution_id!r} not in registry",
                    )
                if aff.country and not valid_country(aff.country):
                    report.add(
                        "invalid_country",
                        rec.record_id,
                        f"country {aff.country!r} is not a two-letter code",
                    )
    # Dangling index entries (indexes are rebuilt on construction, so these
    # can only appear for corpora assembled by hand).
    for inst, rids in corpus.by_institution.items():
        for rid in rids:
            rec = corpus._by_id.get(rid)
            if rec is None or not any(e.lists(inst) for e in rec.authors):
                report.add("dangling_index_entry", inst, f"record {rid!r} does not list {inst!r}")
    for author, rids in corpus.by_author.items():
        for rid in rids:
            rec = corpus._by_id.get(rid)
            if rec is None or all(e.author_id != author for e in rec.authors):
                report.add("dangling_index_entry", author, f"record {rid!r} has no author {author!r}")
    return report
