"""Per-institution output and authorship-dynamics indicators.

Conventions shared by every metric here:

* Whole counting — a record counts fully for every institution listed
  anywhere on its byline; nothing is fractionalized.
* Exact arithmetic — rates are ``fractions.Fraction`` until the moment they
  are reported; reported percents are rounded half-up to integers, and
  authors-per-article to one decimal.
* No-data is explicit — an institution with zero output in a year yields
  ``None``, never a silent 0, and ranking functions set such institutions
  aside instead of ranking them.
* Multi-affiliation counting — an author entry is multi-affiliated when its
  affiliation list has two or more entries; affiliations that failed registry
  resolution still count toward that length (they are institutions, merely
  unknown ones), and likewise contribute their country to a record's country
  set for the international-collaboration rate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Literal

from .model import Corpus, PublicationRecord, UnknownInstitutionError
from .util import round_half_up, round_half_up_tenths

logger = logging.getLogger(__name__)

Percent = Fraction

RATE_METRICS = ("first_author_pct", "intl_collab_pct", "multi_affiliation_pct")
METRICS = ("output_count", "authors_per_article") + RATE_METRICS

MultiAffiliationReading = Literal["all-records", "exclude-solo-coauthored"]


@dataclass
class IndicatorSeries:
    """Yearly values of one metric for one institution, with optional ranks."""

    institution_id: str
    metric: str
    values: dict[int, Fraction | int | None] = field(default_factory=dict)
    ranks: dict[int, int] = field(default_factory=dict)

    def reported(self, year: int) -> int | float | None:
        value = self.values.get(year)
        if value is None:
            return None
        if self.metric == "output_count":
            return int(value)
        if self.metric == "authors_per_article":
            return round_half_up_tenths(value)
        return round_half_up(value)


def output_count(corpus: Corpus, institution: str, year: int) -> int:
    """Distinct records in the year with >=1 author listing the institution."""
    _check_year(corpus, year)
    return len(corpus.records_for_institution(institution, year))


def growth_pct(n_start: int, n_end: int) -> Fraction | None:
    """Percent change; None when the starting count is zero (reported "n/a")."""
    if n_start < 0 or n_end < 0:
        raise ValueError("counts must be non-negative")
    if n_start == 0:
        return None
    return Fraction(100) * (n_end - n_start) / n_start


def report_growth(growth: Fraction | None) -> str:
    return "n/a" if growth is None else str(round_half_up(growth))


def first_author_pct(corpus: Corpus, institution: str, year: int) -> Percent | None:
    """Share of the institution's records whose first author lists it (any
    affiliation position). A first author with m institutions credits each."""
    records = corpus.records_for_institution(institution, year)
    if not records:
        return None
    hits = sum(1 for r in records if r.first_author.lists(institution))
    return Fraction(100) * hits / len(records)


def authors_per_article(
    corpus: Corpus, scope: str | Iterable[str] | None, year: int
) -> Fraction | None:
    """Mean author-list length over the scope's records in the year.

    scope: institution id, iterable of ids (a group), or None for the whole
    corpus. Group records are distinct records listing any member.
    """
    records = _scope_records(corpus, scope, year)
    if not records:
        return None
    return Fraction(sum(len(r.authors) for r in records), len(records))


def intl_collab_pct(corpus: Corpus, institution: str, year: int) -> Percent | None:
    """Share of the institution's records spanning >=2 affiliation countries."""
    records = corpus.records_for_institution(institution, year)
    if not records:
        return None
    hits = sum(1 for r in records if len(r.countries()) >= 2)
    return Fraction(100) * hits / len(records)


def _entry_multi(entry) -> bool:
    return len(entry.affiliations) >= 2


def multi_affiliation_excluded(
    record: PublicationRecord,
    institution: str,
    reading: MultiAffiliationReading = "all-records",
) -> bool:
    """Denominator-exclusion predicate for the multi-affiliation rate.

    "all-records": nothing is excluded; the denominator is every record of
    the institution. "exclude-solo-coauthored": drops records where two or
    more co-authors list the institution and every one of them lists it as
    their sole affiliation.
    """
    if reading == "all-records":
        return False
    if reading == "exclude-solo-coauthored":
        listing = [e for e in record.authors if e.lists(institution)]
        return len(listing) >= 2 and all(not _entry_multi(e) for e in listing)
    raise ValueError(f"unknown multi-affiliation reading {reading!r}")


def multi_affiliation_pct(
    corpus: Corpus,
    institution: str,
    year: int,
    reading: MultiAffiliationReading = "all-records",
) -> Percent | None:
    """Share of the institution's records where an author listing it also
    lists at least one other affiliation."""
    records = [
        r
        for r in corpus.records_for_institution(institution, year)
        if not multi_affiliation_excluded(r, institution, reading)
    ]
    if not records:
        return None
    hits = 0
    for r in records:
        if any(e.lists(institution) and _entry_multi(e) for e in r.authors):
            hits += 1
    return Fraction(100) * hits / len(records)


def overlap_pct(corpus: Corpus, group: Iterable[str], year: int) -> Percent | None:
    """Share of the group's records credited to >=2 distinct members.

    A record listing k >= 2 members still counts once in the numerator.
    """
    members = set(group)
    if len(members) < 2:
        raise ValueError("overlap requires a group of at least 2 institutions")
    denominator = 0
    numerator = 0
    for rec in corpus.iter_records(year):
        listed = rec.institutions() & members
        if listed:
            denominator += 1
            if len(listed) >= 2:
                numerator += 1
    if denominator == 0:
        return None
    return Fraction(100) * numerator / denominator


@dataclass(frozen=True)
class RankedValue:
    institution_id: str
    value: Fraction | int
    rank: int


def competition_rank(
    values: dict[str, Fraction | int], descending: bool = True
) -> list[RankedValue]:
    """Standard competition ("1224") ranking.

    Equal values share the smaller rank and the next rank skips; listing
    order breaks ties by institution_id without affecting rank values.
    """
    ordered = sorted(values.items(), key=lambda kv: (-kv[1] if descending else kv[1], kv[0]))
    out: list[RankedValue] = []
    prev_value: Fraction | int | None = None
    prev_rank = 0
    for pos, (inst, value) in enumerate(ordered, start=1):
        rank = prev_rank if prev_value is not None and value == prev_value else pos
        out.append(RankedValue(inst, value, rank))
        prev_value, prev_rank = value, rank
    return out


def subject_output_count(corpus: Corpus, institution: str, category: str, year: int) -> int:
    _check_year(corpus, year)
    return sum(
        1
        for r in corpus.records_for_institution(institution, year)
        if category in r.subject_categories
    )


def subject_output_rank(corpus: Corpus, category: str, year: int) -> list[RankedValue]:
    """Institutions ranked by descending count of records in the category."""
    counts: dict[str, int] = {}
    for rec in corpus.iter_records(year):
        if category in rec.subject_categories:
            for inst in rec.institutions():
                counts[inst] = counts.get(inst, 0) + 1
    if not counts:
        logger.warning("no records carry subject category %r in %d", category, year)
        return []
    return competition_rank(counts, descending=True)


MetricFn = Callable[[Corpus, str, int], Fraction | int | None]

_METRIC_FNS: dict[str, MetricFn] = {
    "output_count": output_count,
    "first_author_pct": first_author_pct,
    "authors_per_article": lambda c, i, y: authors_per_article(c, i, y),
    "intl_collab_pct": intl_collab_pct,
    "multi_affiliation_pct": multi_affiliation_pct,
}


def metric_value(corpus: Corpus, metric: str, institution: str, year: int) -> Fraction | int | None:
    try:
        fn = _METRIC_FNS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(_METRIC_FNS)}")
    return fn(corpus, institution, year)


def rank_institutions(
    corpus: Corpus,
    metric: str,
    year: int,
    direction: Literal["asc", "desc"] = "desc",
    institutions: Iterable[str] | None = None,
) -> tuple[list[RankedValue], list[str]]:
    """Rank institutions by a metric value; returns (ranking, no-data ids).

    Institutions without data for the year are never ranked; they come back
    in the second element, sorted.
    """
    pool = sorted(set(institutions)) if institutions is not None else corpus.institutions()
    values: dict[str, Fraction | int] = {}
    no_data: list[str] = []
    for inst in pool:
        try:
            value = metric_value(corpus, metric, inst, year)
        except UnknownInstitutionError:
            value = None
        if value is None:
            no_data.append(inst)
        else:
            values[inst] = value
    return competition_rank(values, descending=(direction == "desc")), no_data


def series_for(
    corpus: Corpus, metric: str, institution: str, years: Iterable[int]
) -> IndicatorSeries:
    series = IndicatorSeries(institution_id=institution, metric=metric)
    for year in years:
        series.values[year] = metric_value(corpus, metric, institution, year)
    return series


def median_rank(ranks: Iterable[int]) -> Fraction | None:
    """Median member rank; even cardinality yields the half-integer mean of
    the two central ranks."""
    ordered = sorted(ranks)
    if not ordered:
        return None
    n = len(ordered)
    if n % 2 == 1:
        return Fraction(ordered[n // 2])
    return Fraction(ordered[n // 2 - 1] + ordered[n // 2], 2)


@dataclass
class GroupSummary:
    group_id: str
    member_ids: tuple[str, ...]
    years: tuple[int, ...]
    # distinct records listing >=1 member, per year (primary output measure)
    output_distinct: dict[int, int] = field(default_factory=dict)
    # sum of member whole counts, per year (double-counts shared records)
    output_summed: dict[int, int] = field(default_factory=dict)
    growth: Fraction | None = None
    growth_summed: Fraction | None = None
    rates: dict[str, dict[int, Fraction | None]] = field(default_factory=dict)
    authors_per_article: dict[int, Fraction | None] = field(default_factory=dict)
    median_output_rank: dict[int, Fraction | None] = field(default_factory=dict)
    members_without_data: dict[int, tuple[str, ...]] = field(default_factory=dict)


def group_summary(
    corpus: Corpus,
    group_id: str,
    members: Iterable[str],
    years: Iterable[int],
    reading: MultiAffiliationReading = "all-records",
) -> GroupSummary:
    """Aggregate a group's indicators per year.

    Growth runs from the first to the last requested year and is computed on
    distinct group records (shared records counted once); the summed-count
    variant is reported alongside. Rates aggregate as record-weighted means
    of member values (weight = member output). Median world rank is the
    median of member output ranks over the whole corpus.
    """
    member_ids = tuple(sorted(set(members)))
    year_list = tuple(sorted(years))
    summary = GroupSummary(group_id=group_id, member_ids=member_ids, years=year_list)
    for metric in RATE_METRICS:
        summary.rates[metric] = {}
    for year in year_list:
        distinct: set[str] = set()
        counts: dict[str, int] = {}
        for inst in member_ids:
            recs = corpus.records_for_institution(inst, year)
            counts[inst] = len(recs)
            distinct.update(r.record_id for r in recs)
        summary.output_distinct[year] = len(distinct)
        summary.output_summed[year] = sum(counts.values())
        no_data = tuple(i for i in member_ids if counts[i] == 0)
        summary.members_without_data[year] = no_data
        for metric in RATE_METRICS:
            weighted_sum = Fraction(0)
            weight = 0
            for inst in member_ids:
                if counts[inst] == 0:
                    continue
                kwargs = {"reading": reading} if metric == "multi_affiliation_pct" else {}
                value = _METRIC_FNS[metric](corpus, inst, year, **kwargs)  # type: ignore[call-arg]
                if value is None:
                    continue
                weighted_sum += value * counts[inst]
                weight += counts[inst]
            summary.rates[metric][year] = weighted_sum / weight if weight else None
        summary.authors_per_article[year] = authors_per_article(corpus, member_ids, year)
        ranking, _ = rank_institutions(corpus, "output_count", year, "desc")
        rank_of = {rv.institution_id: rv.rank for rv in ranking}
        member_ranks = [rank_of[i] for i in member_ids if i in rank_of and counts[i] > 0]
        summary.median_output_rank[year] = median_rank(member_ranks)
    if len(year_list) >= 2:
        first, last = year_list[0], year_list[-1]
        summary.growth = growth_pct(summary.output_distinct[first], summary.output_distinct[last])
        summary.growth_summed = growth_pct(summary.output_summed[first], summary.output_summed[last])
    return summary


def _scope_records(
    corpus: Corpus, scope: str | Iterable[str] | None, year: int
) -> list[PublicationRecord]:
    if scope is None:
        return list(corpus.iter_records(year))
    if isinstance(scope, str):
        return corpus.records_for_institution(scope, year)
    members = set(scope)
    seen: set[str] = set()
    records: list[PublicationRecord] = []
    for inst in sorted(members):
        for rec in corpus.records_for_institution(inst, year):
            if rec.record_id not in seen:
                seen.add(rec.record_id)
                records.append(rec)
    return records


def _check_year(corpus: Corpus, year: int) -> None:
    # An empty corpus has no range to enforce; counts there are simply 0.
    if corpus.year_range is not None and not corpus.has_year(year):
        raise ValueError(f"year {year} outside corpus range {corpus.year_range}")
