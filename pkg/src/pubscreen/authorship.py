"""Author-level detectors: hyperprolific output, secondary-affiliation
("external author") patterns, output surges, multi-affiliation profiles, and
authors shared across a group of institutions.

Every flag carries the metric values that triggered it, so a flag decision is
recomputable from its evidence alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .model import Corpus

HYPERPROLIFIC_THRESHOLD = 36
EXTERNAL_MIN_PUBS = 2
CROSS_GROUP_MIN_PUBS = 10

SURGE_BASELINE_YEARS = 5
SURGE_RECENT_YEARS = 2
SURGE_RATIO_THRESHOLD = Fraction(10)
SURGE_MIN_RECENT = Fraction(36)


@dataclass(frozen=True)
class AffiliationUsage:
    total: int
    as_secondary: int


@dataclass
class AuthorProfile:
    author_id: str
    yearly_counts: dict[int, int] = field(default_factory=dict)
    affiliation_usage: dict[str, AffiliationUsage] = field(default_factory=dict)
    mean_affils_per_record: Fraction = Fraction(0)
    record_count: int = 0
    records_multi_entry: int = 0  # records where this author lists >=2 affiliations

    def count(self, year: int) -> int:
        return self.yearly_counts.get(year, 0)


@dataclass(frozen=True)
class FlagRecord:
    subject: str
    flag: str
    years: tuple[int, ...]
    evidence: dict

    def sort_key(self) -> tuple:
        return (self.flag, self.subject, self.years)


def build_profile(corpus: Corpus, author_id: str) -> AuthorProfile:
    """Publication profile of one author over the filtered corpus."""
    records = corpus.records_for_author(author_id)
    if not records:
        raise KeyError(f"unknown author {author_id!r}")
    profile = AuthorProfile(author_id=author_id)
    usage_total: dict[str, int] = {}
    usage_secondary: dict[str, int] = {}
    affil_lengths = 0
    for rec in records:
        profile.yearly_counts[rec.year] = profile.yearly_counts.get(rec.year, 0) + 1
        entry = next(e for e in rec.authors if e.author_id == author_id)
        affil_lengths += len(entry.affiliations)
        if len(entry.affiliations) >= 2:
            profile.records_multi_entry += 1
        for pos, aff in enumerate(entry.affiliations, start=1):
            if aff.institution_id is None:
                continue
            inst = aff.institution_id
            usage_total[inst] = usage_total.get(inst, 0) + 1
            if pos > 1:
                usage_secondary[inst] = usage_secondary.get(inst, 0) + 1
    profile.record_count = len(records)
    profile.mean_affils_per_record = Fraction(affil_lengths, len(records))
    profile.affiliation_usage = {
        inst: AffiliationUsage(total=usage_total[inst], as_secondary=usage_secondary.get(inst, 0))
        for inst in sorted(usage_total)
    }
    return profile


def author_institutions_in_year(corpus: Corpus, author_id: str, year: int) -> set[str]:
    """Institutions the author's own entries list in the year."""
    out: set[str] = set()
    for rec in corpus.records_for_author(author_id, year):
        for e in rec.authors:
            if e.author_id == author_id:
                out.update(e.institution_ids())
    return out


def hyperprolific_decision(
    total_in_year: int, threshold: int = HYPERPROLIFIC_THRESHOLD, inclusive: bool = True
) -> bool:
    return total_in_year >= threshold if inclusive else total_in_year > threshold


def hyperprolific_by_institution(
    corpus: Corpus,
    year: int,
    threshold: int = HYPERPROLIFIC_THRESHOLD,
    inclusive: bool = True,
) -> dict[str, list[FlagRecord]]:
    """One-pass variant: flags for every institution at once.

    An author's count is their total yearly output, not only the records
    naming a given institution; one globally prolific author is therefore
    attributed to every institution their entries list that year.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    totals: dict[str, int] = {}
    per_inst: dict[str, dict[str, int]] = {}  # author -> institution -> record count
    for rec in corpus.iter_records(year):
        seen: set[str] = set()
        for e in rec.authors:
            if e.author_id in seen:
                continue
            seen.add(e.author_id)
            totals[e.author_id] = totals.get(e.author_id, 0) + 1
            counts = per_inst.setdefault(e.author_id, {})
            for inst in e.institution_ids():
                counts[inst] = counts.get(inst, 0) + 1
    flags: dict[str, list[FlagRecord]] = {}
    for author_id in sorted(totals):
        total = totals[author_id]
        if not hyperprolific_decision(total, threshold, inclusive):
            continue
        for inst, with_institution in sorted(per_inst[author_id].items()):
            flags.setdefault(inst, []).append(
                FlagRecord(
                    subject=author_id,
                    flag="hyperprolific",
                    years=(year,),
                    evidence={
                        "total_in_year": total,
                        "threshold": threshold,
                        "inclusive": inclusive,
                        "institution": inst,
                        "records_with_institution": with_institution,
                    },
                )
            )
    return flags


def hyperprolific_authors(
    corpus: Corpus,
    institution: str,
    year: int,
    threshold: int = HYPERPROLIFIC_THRESHOLD,
    inclusive: bool = True,
) -> list[FlagRecord]:
    """Authors at/above the yearly article threshold who publish with the
    institution that year."""
    return hyperprolific_by_institution(corpus, year, threshold, inclusive).get(institution, [])


def external_author_decision(total: int, secondary: int, min_pubs: int = EXTERNAL_MIN_PUBS) -> bool:
    """Strict majority of the author's institution-linked records must list
    the institution in a non-first position of the author's entry."""
    return total >= min_pubs and 2 * secondary > total


def external_authors_by_institution(
    corpus: Corpus, min_pubs: int = EXTERNAL_MIN_PUBS
) -> dict[str, list[FlagRecord]]:
    """One-pass variant: secondary-affiliation flags for every institution."""
    if min_pubs < 1:
        raise ValueError("min_pubs must be >= 1")
    # (author, institution) -> [total, secondary, years]
    stats: dict[tuple[str, str], list] = {}
    for rec in corpus.records:
        seen: set[str] = set()
        for e in rec.authors:
            if e.author_id in seen:
                continue
            seen.add(e.author_id)
            for pos, inst in enumerate(
                (a.institution_id for a in e.affiliations), start=1
            ):
                if inst is None:
                    continue
                cell = stats.setdefault((e.author_id, inst), [0, 0, set()])
                cell[0] += 1
                cell[2].add(rec.year)
                if pos > 1:
                    cell[1] += 1
    flags: dict[str, list[FlagRecord]] = {}
    for (author_id, inst) in sorted(stats):
        total, secondary, years = stats[(author_id, inst)]
        if external_author_decision(total, secondary, min_pubs):
            flags.setdefault(inst, []).append(
                FlagRecord(
                    subject=author_id,
                    flag="external_author",
                    years=tuple(sorted(years)),
                    evidence={
                        "institution": inst,
                        "records_with_institution": total,
                        "records_secondary": secondary,
                        "min_pubs": min_pubs,
                    },
                )
            )
    return flags


def external_authors(
    corpus: Corpus, institution: str, min_pubs: int = EXTERNAL_MIN_PUBS
) -> list[FlagRecord]:
    """Authors whose entries name the institution mostly as a secondary
    affiliation — the metadata signature of bought authorship slots."""
    return external_authors_by_institution(corpus, min_pubs).get(institution, [])


def surge_decision(
    baseline_mean: Fraction,
    recent_mean: Fraction,
    ratio_threshold: Fraction = SURGE_RATIO_THRESHOLD,
    min_recent: Fraction = SURGE_MIN_RECENT,
) -> bool:
    return recent_mean >= ratio_threshold * max(Fraction(1), baseline_mean) and recent_mean >= min_recent


def surge_detect(
    profile: AuthorProfile,
    baseline_window: tuple[int, int],
    recent_window: tuple[int, int],
    ratio_threshold: Fraction | int = SURGE_RATIO_THRESHOLD,
    min_recent: Fraction | int = SURGE_MIN_RECENT,
) -> FlagRecord | None:
    """Flag an output jump: recent-window mean at least ratio_threshold times
    the baseline mean (floored at 1/yr) and at least min_recent.

    Windows are inclusive year ranges; years absent from the profile count as
    zero output.
    """
    b_lo, b_hi = baseline_window
    r_lo, r_hi = recent_window
    if b_lo > b_hi or r_lo > r_hi:
        raise ValueError("windows must be non-empty year ranges")
    if b_hi >= r_lo:
        raise ValueError("baseline window must end before the recent window starts")
    ratio_threshold = Fraction(ratio_threshold)
    if ratio_threshold <= 1:
        raise ValueError("ratio_threshold must be > 1")
    min_recent = Fraction(min_recent)
    if min_recent < 1:
        raise ValueError("min_recent must be >= 1")
    baseline_years = range(b_lo, b_hi + 1)
    recent_years = range(r_lo, r_hi + 1)
    baseline_mean = Fraction(sum(profile.count(y) for y in baseline_years), len(baseline_years))
    recent_mean = Fraction(sum(profile.count(y) for y in recent_years), len(recent_years))
    if not surge_decision(baseline_mean, recent_mean, ratio_threshold, min_recent):
        return None
    ratio = recent_mean / max(Fraction(1), baseline_mean)
    return FlagRecord(
        subject=profile.author_id,
        flag="surge",
        years=tuple(recent_years),
        evidence={
            "baseline_window": [b_lo, b_hi],
            "recent_window": [r_lo, r_hi],
            "baseline_mean": str(baseline_mean),
            "recent_mean": str(recent_mean),
            "ratio": str(ratio),
            "ratio_threshold": str(ratio_threshold),
            "min_recent": str(min_recent),
        },
    )


def cross_group_decision(group_records: int, group_institutions: int, min_pubs: int) -> bool:
    return group_records > min_pubs and group_institutions >= 2


def cross_group_authors(
    corpus: Corpus, group: Iterable[str], min_pubs: int = CROSS_GROUP_MIN_PUBS
) -> list[FlagRecord]:
    """Authors crediting work to two or more group institutions, with more
    than min_pubs records carrying any group affiliation in their own entry."""
    members = set(group)
    if not members:
        raise ValueError("group must be non-empty")
    # author -> [group record count, credited member set, years]
    stats: dict[str, list] = {}
    for rec in corpus.records:
        seen: set[str] = set()
        for e in rec.authors:
            if e.author_id in seen:
                continue
            seen.add(e.author_id)
            listed = set(e.institution_ids()) & members
            if listed:
                cell = stats.setdefault(e.author_id, [0, set(), set()])
                cell[0] += 1
                cell[1].update(listed)
                cell[2].add(rec.year)
    flags: list[FlagRecord] = []
    for author_id in sorted(stats):
        group_records, credited, years = stats[author_id]
        if cross_group_decision(group_records, len(credited), min_pubs):
            flags.append(
                FlagRecord(
                    subject=author_id,
                    flag="cross_group",
                    years=tuple(sorted(years)),
                    evidence={
                        "group_records": group_records,
                        "institutions": sorted(credited),
                        "min_pubs": min_pubs,
                    },
                )
            )
    return flags


def multi_affiliation_profile(profile: AuthorProfile) -> dict:
    """Share of the author's records with a multi-affiliated entry, plus the
    mean affiliation-list length."""
    if profile.record_count < 1:
        raise ValueError(f"author {profile.author_id!r} has no records")
    return {
        "pct_records_multi": Fraction(100) * profile.records_multi_entry / profile.record_count,
        "mean_affils": profile.mean_affils_per_record,
    }
