"""Shared test fixtures: tiny registries, record builders, corpus assembly,
and the acceptance-summary reporting hook."""

from __future__ import annotations

import io
import json

import pytest

from pubscreen.ingest import IngestOptions, ingest
from pubscreen.model import InstitutionInfo, InstitutionRegistry

# (criterion label, passed, note) tuples appended by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(criterion: str, passed: bool, note: str = "") -> None:
    ACCEPTANCE_RESULTS.append((criterion, passed, note))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    by_criterion: dict[str, list[tuple[bool, str]]] = {}
    for criterion, passed, note in ACCEPTANCE_RESULTS:
        by_criterion.setdefault(criterion, []).append((passed, note))
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(by_criterion, key=lambda c: int(c.split(":")[0])):
        entries = by_criterion[criterion]
        ok = all(p for p, _ in entries)
        notes = "; ".join(n for p, n in entries if n and not p) or "; ".join(
            n for _, n in entries if n
        )
        status = "PASS" if ok else "FAIL"
        line = f"criterion {criterion}: {status}"
        if notes:
            line += f" ({notes})"
        terminalreporter.write_line(line)


def make_registry(*institution_country_pairs, aliases=None):
    """Registry from ("id", "CC") pairs; canonical name 'Name <id>'."""
    aliases = aliases or {}
    entries = [
        InstitutionInfo(
            institution_id=inst,
            canonical_name=f"Name {inst}",
            country=country,
            aliases=frozenset(aliases.get(inst, ())),
        )
        for inst, country in institution_country_pairs
    ]
    return InstitutionRegistry(entries)


def record(
    record_id,
    year,
    authors,
    doc_type="article",
    subject_categories=(),
    corresponding=None,
):
    """Record object in the canonical JSON shape.

    authors: list of (author_id, [institution_id, ...]) or
    (author_id, [(institution_id, country), ...]).
    """
    built = []
    for author_id, affils in authors:
        affil_objs = []
        for aff in affils:
            if isinstance(aff, tuple):
                inst, country = aff
            else:
                inst, country = aff, "AA"
            affil_objs.append({"institution_id": inst, "country": country})
        built.append({"author_id": author_id, "affiliations": affil_objs})
    return {
        "record_id": record_id,
        "year": year,
        "doc_type": doc_type,
        "subject_categories": list(subject_categories),
        "authors": built,
        "corresponding_author_ids": list(corresponding or []),
    }


def corpus_from(records, registry, **options):
    text = "\n".join(json.dumps(r) for r in records) + "\n"
    result = ingest(io.StringIO(text), registry, IngestOptions(**options) if options else None)
    return result.corpus


@pytest.fixture
def ab_registry():
    return make_registry(("a", "AA"), ("b", "BB"), ("c", "CC"))


def funnel_universe(seed, n_institutions=50, planted=("inst00", "inst01", "inst02"),
                    start_year=2019, end_year=2023, base_output=40, surge_extra=160,
                    drift=False):
    """Synthetic screening universe: baselines plus surge plants.

    Planted institutions clear every funnel threshold with margin: growth
    well above 2x the 130.5% cutoff, first-author collapse and international
    surge far beyond the baselines. With drift=True the baselines also move
    slowly (small first-author decline, small international rise), which
    gives the stage-3 rankings realistic competition.
    """
    from pubscreen import synth

    countries = ["AA", "BB", "CC", "DD", "EE"]
    ext_prob = {start_year: 0.1, end_year: 0.2} if drift else 0.08
    intl_prob = {start_year: 0.3, end_year: 0.45} if drift else 0.25
    institutions = [
        synth.InstitutionSpec(
            institution_id=f"inst{i:02d}",
            country=countries[i % len(countries)],
            base_output_per_year={start_year: base_output, end_year: base_output + 4},
            authors_pool_size=40,
            mean_authors_per_record=3.0,
            external_first_author_prob=ext_prob,
            intl_collab_prob=intl_prob,
        )
        for i in range(n_institutions)
    ]
    spec = synth.GeneratorSpec(
        seed=seed, years=(start_year, end_year), institutions=institutions
    )
    for k, target in enumerate(planted):
        spec.anomalies.append(
            synth.AnomalyPlant(
                plant_id=f"surge{k}",
                kind="output_surge",
                years=(end_year,),
                params={
                    "target": target,
                    "extra_records_per_year": surge_extra,
                    "external_first_author": True,
                    "intl_coauthor_prob": 1.0,
                },
            )
        )
    return spec


def load_spec(spec):
    """generate -> ingest; returns (corpus, ground truth)."""
    import io

    from pubscreen import synth
    from pubscreen.model import InstitutionRegistry

    corpus_text, truth_text = synth.generate(spec)
    registry = InstitutionRegistry.from_json(io.StringIO(synth.registry_json(spec)))
    corpus = ingest(io.StringIO(corpus_text), registry).corpus
    return corpus, synth.GroundTruth.from_json(truth_text)
