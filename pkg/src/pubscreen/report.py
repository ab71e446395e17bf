"""Report assembly: indicator row export and table rendering.

Indicator rows use the exchange shape {institution_id, metric, year,
value_raw, value_reported, rank}: value_raw is the exact rational as a
string, value_reported the rounded display value, rank the yearly world rank
(output_count rows only). Tables mirror the published report layout: output
growth, first-author rates, hyperprolific counts, multi-affiliation rates,
international-collaboration rates, plus group panels and network footers.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Iterable

from . import indicators
from .indicators import MultiAffiliationReading
from .model import Corpus
from .screening import ComparisonReport
from .util import round_half_up


def _reported(metric: str, value):
    if value is None:
        return "n/a"
    if metric == "output_count":
        return int(value)
    if metric == "authors_per_article":
        return round_half_up(Fraction(value) * 10) / 10
    return round_half_up(Fraction(value))


def indicator_rows(
    corpus: Corpus,
    years: Iterable[int] | None = None,
    institutions: Iterable[str] | None = None,
    multi_reading: MultiAffiliationReading = "all-records",
) -> list[dict]:
    """One row per (metric, institution, year), grouped by metric."""
    if years is None:
        if corpus.year_range is None:
            return []
        years = range(corpus.year_range[0], corpus.year_range[1] + 1)
    year_list = sorted(years)
    pool = sorted(set(institutions)) if institutions is not None else corpus.institutions()
    rows: list[dict] = []
    rank_by_year: dict[int, dict[str, int]] = {}
    for year in year_list:
        ranking, _ = indicators.rank_institutions(corpus, "output_count", year, "desc", pool)
        rank_by_year[year] = {rv.institution_id: rv.rank for rv in ranking}
    for metric in indicators.METRICS:
        for inst in pool:
            for year in year_list:
                if metric == "multi_affiliation_pct":
                    value = indicators.multi_affiliation_pct(corpus, inst, year, multi_reading)
                else:
                    value = indicators.metric_value(corpus, metric, inst, year)
                rows.append(
                    {
                        "institution_id": inst,
                        "metric": metric,
                        "year": year,
                        "value_raw": None if value is None else str(Fraction(value)),
                        "value_reported": _reported(metric, value),
                        "rank": rank_by_year[year].get(inst) if metric == "output_count" else None,
                    }
                )
    return rows


def rows_to_jsonl(rows: list[dict]) -> str:
    return "\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + ("\n" if rows else "")


def rows_to_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(
        out,
        fieldnames=["institution_id", "metric", "year", "value_raw", "value_reported", "rank"],
        lineterminator="\n",
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return out.getvalue()


def markdown_table(headers: list[str], rows: list[list]) -> str:
    def fmt(cell) -> str:
        return "" if cell is None else str(cell)

    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join(" --- " for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(fmt(c) for c in row) + " |")
    return "\n".join(lines)


def csv_table(headers: list[str], rows: list[list]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow(["" if c is None else c for c in row])
    return out.getvalue()


def _pct(value) -> str:
    return "n/a" if value is None else str(round_half_up(value))


def comparison_tables(panel: ComparisonReport) -> dict[str, tuple[list[str], list[list]]]:
    """Tables (headers, rows) keyed by name, derived from a comparison panel."""
    years = list(panel.years)
    start, end = years[0], years[-1]
    tables: dict[str, tuple[list[str], list[list]]] = {}

    rows = []
    for p in (panel.study, panel.control):
        s = p.summary
        rows.append(
            [
                p.group_id,
                "(group)",
                s.output_distinct.get(start),
                s.output_distinct.get(end),
                "n/a" if s.growth is None else f"{round_half_up(s.growth)}%",
                _frac_fmt(s.median_output_rank.get(start)),
                _frac_fmt(s.median_output_rank.get(end)),
            ]
        )
    tables["output_growth"] = (
        ["group", "institution", f"articles {start}", f"articles {end}", "change", f"median rank {start}", f"median rank {end}"],
        rows,
    )

    rows = []
    for p in (panel.study, panel.control):
        s = p.summary
        rows.append(
            [
                p.group_id,
                _pct(s.rates["first_author_pct"].get(start)),
                _pct(s.rates["first_author_pct"].get(end)),
                _apa_fmt(s.authors_per_article.get(start)),
                _apa_fmt(s.authors_per_article.get(end)),
                _pct(s.rates["intl_collab_pct"].get(start)),
                _pct(s.rates["intl_collab_pct"].get(end)),
                _pct(s.rates["multi_affiliation_pct"].get(start)),
                _pct(s.rates["multi_affiliation_pct"].get(end)),
            ]
        )
    tables["authorship_dynamics"] = (
        [
            "group",
            f"% first author {start}",
            f"% first author {end}",
            f"authors/article {start}",
            f"authors/article {end}",
            f"% intl collab {start}",
            f"% intl collab {end}",
            f"% multi-affiliation {start}",
            f"% multi-affiliation {end}",
        ],
        rows,
    )

    rows = []
    for p in (panel.study, panel.control):
        for member in p.members:
            rows.append(
                [p.group_id, member] + [p.hyperprolific_counts[y].get(member, 0) for y in years]
            )
        rows.append([p.group_id, "(total)"] + [p.hyperprolific_totals[y] for y in years])
    tables["hyperprolific"] = (["group", "institution"] + [str(y) for y in years], rows)

    rows = []
    for p in (panel.study, panel.control):
        rows.append([p.group_id] + [_pct(p.overlap.get(y)) for y in years])
    tables["overlap"] = (["group"] + [f"% overlap {y}" for y in years], rows)

    return tables


def _frac_fmt(value) -> str:
    if value is None:
        return "n/a"
    f = Fraction(value)
    return str(f.numerator // f.denominator) if f.denominator == 1 else f"{float(f):g}"


def _apa_fmt(value) -> str:
    if value is None:
        return "n/a"
    return f"{round_half_up(Fraction(value) * 10) / 10:.1f}"


def render_report_markdown(
    panel: ComparisonReport, footers: dict[str, str] | None = None
) -> str:
    """One markdown document bundling the comparison tables."""
    parts = ["# Screening report", ""]
    titles = {
        "output_growth": "Output and growth",
        "authorship_dynamics": "Authorship dynamics",
        "hyperprolific": "Hyperprolific author counts",
        "overlap": "Intra-group overlap",
    }
    for name, (headers, rows) in comparison_tables(panel).items():
        parts.append(f"## {titles[name]}")
        parts.append("")
        parts.append(markdown_table(headers, rows))
        parts.append("")
    if footers:
        parts.append("## Co-authorship network footers")
        parts.append("")
        for label, footer in sorted(footers.items()):
            parts.append(f"- {label}: {footer}")
        parts.append("")
    return "\n".join(parts)


def reference_markdown() -> str:
    """Render the bundled reference tables (no corpus computation)."""
    from . import refdata

    parts = ["# Reference tables (published values)", ""]

    headers = ["institution", "group", "articles 2019", "articles 2023", "change"]
    rows = [
        [inst, refdata.group_of(inst), row[0], row[1], f"{row[2]}%"]
        for inst, row in refdata.OUTPUT_COUNTS.items()
    ]
    parts += ["## Output counts", "", markdown_table(headers, rows), ""]

    headers = ["institution", "group", "% first author 2019", "% first author 2023"]
    rows = [
        [inst, refdata.group_of(inst), row[0], row[1]]
        for inst, row in refdata.FIRST_AUTHOR_RATES.items()
    ]
    parts += ["## First-author rates", "", markdown_table(headers, rows), ""]

    headers = ["institution", "group"] + [str(y) for y in refdata.HYPERPROLIFIC_YEARS]
    rows = [
        [inst, refdata.group_of(inst), *row]
        for inst, row in refdata.HYPERPROLIFIC_COUNTS.items()
    ]
    parts += ["## Hyperprolific author counts", "", markdown_table(headers, rows), ""]

    headers = ["institution", "group", "% multi 2019", "% multi 2023", "change (points)"]
    rows = [
        [inst, refdata.group_of(inst), row[0], row[1], row[2]]
        for inst, row in refdata.MULTI_AFFILIATION_RATES.items()
    ]
    parts += ["## Multi-affiliation rates", "", markdown_table(headers, rows), ""]

    headers = ["institution", "group", "% intl 2019", "% intl 2023"]
    rows = [
        [inst, refdata.group_of(inst), row[0], row[1]]
        for inst, row in refdata.INTL_COLLAB_RATES.items()
    ]
    parts += ["## International-collaboration rates", "", markdown_table(headers, rows), ""]

    return "\n".join(parts)
