"""Institution screening: the three-stage selection funnel and the
study-vs-control comparison panel.

Funnel stages: (1) keep the top-N institutions by end-year output; (2) keep
survivors whose output growth beats the threshold; (3) keep survivors ranked
in the top K — within the stage-1 universe — for first-authorship decline
and/or international-collaboration rise. Survivors shrink monotonically and
every exclusion carries its reason, so a screening run is auditable from the
result alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from . import authorship, indicators
from .authorship import FlagRecord
from .indicators import MultiAffiliationReading
from .model import Corpus
from .util import round_half_up

WORLD_GROWTH_PCT = Fraction(87, 10)  # config default; supplied, never computed


@dataclass(frozen=True)
class FunnelConfig:
    start_year: int
    end_year: int
    top_n_by_output: int = 1000
    growth_threshold_pct: Fraction | None = Fraction(130)
    growth_multiple_of_world: Fraction | None = Fraction(15)
    world_growth_pct: Fraction = WORLD_GROWTH_PCT
    top_k_rank: int = 20
    multi_affiliation_reading: MultiAffiliationReading = "all-records"

    def __post_init__(self) -> None:
        if self.start_year >= self.end_year:
            raise ValueError("start_year must precede end_year")
        if self.top_n_by_output < 1 or self.top_k_rank < 1:
            raise ValueError("top_n_by_output and top_k_rank must be positive")
        if self.growth_threshold_pct is None and self.growth_multiple_of_world is None:
            raise ValueError("at least one growth threshold must be configured")

    @property
    def effective_growth_threshold(self) -> Fraction:
        """When both settings are present the stricter (larger) one wins."""
        candidates = []
        if self.growth_threshold_pct is not None:
            candidates.append(Fraction(self.growth_threshold_pct))
        if self.growth_multiple_of_world is not None:
            candidates.append(Fraction(self.growth_multiple_of_world) * self.world_growth_pct)
        return max(candidates)


@dataclass
class FunnelStage:
    stage_name: str
    surviving_ids: tuple[str, ...]
    excluded: dict[str, str] = field(default_factory=dict)  # id -> reason
    warnings: tuple[str, ...] = ()


@dataclass
class ScreeningResult:
    config: FunnelConfig
    stages: list[FunnelStage] = field(default_factory=list)
    evidence: dict[str, dict] = field(default_factory=dict)

    @property
    def final_flagged(self) -> tuple[str, ...]:
        return self.stages[-1].surviving_ids if self.stages else ()

    def stage(self, name: str) -> FunnelStage:
        for s in self.stages:
            if s.stage_name == name:
                return s
        raise KeyError(name)

    def to_jsonl(self) -> str:
        lines = []
        for s in self.stages:
            lines.append(
                json.dumps(
                    {
                        "stage": s.stage_name,
                        "surviving": list(s.surviving_ids),
                        "excluded": s.excluded,
                        "warnings": list(s.warnings),
                    },
                    ensure_ascii=False,
                )
            )
        for inst in sorted(self.evidence):
            lines.append(
                json.dumps({"institution": inst, **self.evidence[inst]}, ensure_ascii=False)
            )
        return "\n".join(lines) + "\n"

    def summary_markdown(self) -> str:
        cfg = self.config
        out = [
            "# Screening funnel",
            "",
            f"Window: {cfg.start_year} to {cfg.end_year}",
            f"Growth threshold: >{float(cfg.effective_growth_threshold):g}% | "
            f"dynamics rank cutoff: top {cfg.top_k_rank}",
            "",
        ]
        for s in self.stages:
            out.append(f"- {s.stage_name}: {len(s.surviving_ids)} surviving, {len(s.excluded)} excluded")
            for w in s.warnings:
                out.append(f"  - warning: {w}")
        out.append("")
        out.append(f"final: {len(self.final_flagged)}")
        flagged = ", ".join(self.final_flagged)
        if flagged:
            out.append(f"flagged: {flagged}")
        out.append("")
        return "\n".join(out)


def run_funnel(corpus: Corpus, config: FunnelConfig) -> ScreeningResult:
    """Apply the selection funnel and return stages, survivors and evidence."""
    if not (corpus.has_year(config.start_year) and corpus.has_year(config.end_year)):
        raise ValueError(
            f"corpus years {corpus.year_range} do not cover "
            f"[{config.start_year}, {config.end_year}]"
        )
    result = ScreeningResult(config=config)

    # Stage 1: top-N by end-year output (competition rank; boundary ties kept).
    ranking, _ = indicators.rank_institutions(corpus, "output_count", config.end_year, "desc")
    warnings: list[str] = []
    if len(ranking) < config.top_n_by_output:
        warnings.append(
            f"only {len(ranking)} institutions have output in {config.end_year}; "
            f"stage takes all of them"
        )
    survivors = [rv.institution_id for rv in ranking if rv.rank <= config.top_n_by_output]
    excluded = {
        rv.institution_id: f"output rank {rv.rank} > top {config.top_n_by_output}"
        for rv in ranking
        if rv.rank > config.top_n_by_output
    }
    universe = sorted(survivors)
    end_counts = {rv.institution_id: rv.value for rv in ranking}
    result.stages.append(
        FunnelStage("top_output", tuple(universe), excluded, tuple(warnings))
    )

    # Stage 2: growth above the threshold.
    threshold = config.effective_growth_threshold
    survivors2: list[str] = []
    excluded2: dict[str, str] = {}
    for inst in universe:
        n_start = indicators.output_count(corpus, inst, config.start_year)
        n_end = int(end_counts[inst])
        growth = indicators.growth_pct(n_start, n_end)
        result.evidence[inst] = {
            "output": {str(config.start_year): n_start, str(config.end_year): n_end},
            "growth_pct": None if growth is None else str(growth),
            "growth_pct_reported": indicators.report_growth(growth),
        }
        if growth is None:
            excluded2[inst] = "growth undefined (zero start-year output)"
        elif growth > threshold:
            survivors2.append(inst)
        else:
            excluded2[inst] = (
                f"growth {indicators.report_growth(growth)}% "
                f"not above {float(threshold):g}%"
            )
    result.stages.append(FunnelStage("growth", tuple(survivors2), excluded2))

    # Stage 3: authorship-dynamics ranks within the stage-1 universe.
    fa_drop: dict[str, Fraction] = {}
    ic_rise: dict[str, Fraction] = {}
    missing: dict[str, str] = {}
    for inst in universe:
        fa_start = indicators.first_author_pct(corpus, inst, config.start_year)
        fa_end = indicators.first_author_pct(corpus, inst, config.end_year)
        ic_start = indicators.intl_collab_pct(corpus, inst, config.start_year)
        ic_end = indicators.intl_collab_pct(corpus, inst, config.end_year)
        if None in (fa_start, fa_end, ic_start, ic_end):
            missing[inst] = "no output in a boundary year; dynamics not rankable"
            continue
        fa_drop[inst] = fa_start - fa_end
        ic_rise[inst] = ic_end - ic_start
    fa_ranking = {rv.institution_id: rv.rank for rv in indicators.competition_rank(fa_drop)}
    ic_ranking = {rv.institution_id: rv.rank for rv in indicators.competition_rank(ic_rise)}
    survivors3: list[str] = []
    excluded3: dict[str, str] = {}
    for inst in survivors2:
        ev = result.evidence[inst]
        if inst in missing:
            excluded3[inst] = missing[inst]
            continue
        fa_rank = fa_ranking[inst]
        ic_rank = ic_ranking[inst]
        ev["first_author_drop_points"] = str(fa_drop[inst])
        ev["first_author_drop_rank"] = fa_rank
        ev["intl_collab_rise_points"] = str(ic_rise[inst])
        ev["intl_collab_rise_rank"] = ic_rank
        if fa_rank <= config.top_k_rank or ic_rank <= config.top_k_rank:
            survivors3.append(inst)
        else:
            excluded3[inst] = (
                f"rank > top_k: first-author drop rank {fa_rank}, "
                f"intl-collab rise rank {ic_rank}, cutoff {config.top_k_rank}"
            )
    result.stages.append(FunnelStage("authorship_dynamics", tuple(survivors3), excluded3))
    return result


@dataclass
class GroupPanel:
    group_id: str
    members: tuple[str, ...]
    summary: indicators.GroupSummary
    hyperprolific_counts: dict[int, dict[str, int]]  # year -> institution -> count
    hyperprolific_totals: dict[int, int]
    overlap: dict[int, Fraction | None]


@dataclass
class ComparisonReport:
    years: tuple[int, ...]
    study: GroupPanel
    control: GroupPanel


def compare_groups(
    corpus: Corpus,
    study_group: Iterable[str],
    control_group: Iterable[str],
    years: Iterable[int],
    hyperprolific_threshold: int = authorship.HYPERPROLIFIC_THRESHOLD,
    multi_affiliation_reading: MultiAffiliationReading = "all-records",
) -> ComparisonReport:
    """Side-by-side panel of every group indicator for two disjoint groups."""
    study = tuple(sorted(set(study_group)))
    control = tuple(sorted(set(control_group)))
    if not study or not control:
        raise ValueError("both groups must be non-empty")
    shared = set(study) & set(control)
    if shared:
        raise ValueError(f"groups overlap: {sorted(shared)}")
    year_list = tuple(sorted(years))

    def panel(group_id: str, members: tuple[str, ...]) -> GroupPanel:
        summary = indicators.group_summary(
            corpus, group_id, members, year_list, reading=multi_affiliation_reading
        )
        hp_counts: dict[int, dict[str, int]] = {}
        hp_totals: dict[int, int] = {}
        overlap: dict[int, Fraction | None] = {}
        for year in year_list:
            by_inst = authorship.hyperprolific_by_institution(
                corpus, year, hyperprolific_threshold
            )
            hp_counts[year] = {m: len(by_inst.get(m, [])) for m in members}
            flagged_authors = {
                f.subject for m in members for f in by_inst.get(m, [])
            }
            hp_totals[year] = len(flagged_authors)
            overlap[year] = (
                indicators.overlap_pct(corpus, members, year) if len(members) >= 2 else None
            )
        return GroupPanel(
            group_id=group_id,
            members=members,
            summary=summary,
            hyperprolific_counts=hp_counts,
            hyperprolific_totals=hp_totals,
            overlap=overlap,
        )

    return ComparisonReport(
        years=year_list, study=panel("study", study), control=panel("control", control)
    )


@dataclass(frozen=True)
class DossierConfig:
    hyperprolific_count_threshold: int = 5
    external_author_count_threshold: int = 1
    multi_affiliation_rise_points: Fraction = Fraction(10)
    top_k_rank: int = 20


@dataclass
class InstitutionDossier:
    institution_id: str
    indicators: dict[str, bool]
    evidence: dict

    @property
    def raised(self) -> int:
        return sum(1 for v in self.indicators.values() if v)


@dataclass
class RedFlagDossier:
    institutions: dict[str, InstitutionDossier] = field(default_factory=dict)

    def to_jsonl(self) -> str:
        lines = []
        for inst in sorted(self.institutions):
            d = self.institutions[inst]
            lines.append(
                json.dumps(
                    {
                        "institution": inst,
                        "indicators": d.indicators,
                        "raised": d.raised,
                        "evidence": d.evidence,
                    },
                    ensure_ascii=False,
                )
            )
        return "\n".join(lines) + "\n"


def flag_report(
    screening_result: ScreeningResult,
    authorship_flags: Iterable[FlagRecord],
    network_stats: dict | None = None,
    multi_affiliation_change: dict[str, Fraction] | None = None,
    overlap_participants: Iterable[str] = (),
    config: DossierConfig = DossierConfig(),
    institutions: Iterable[str] | None = None,
) -> RedFlagDossier:
    """Assemble per-institution boolean indicators with evidence.

    No composite score: the dossier reports which indicators are raised and
    how many, nothing weighted.
    """
    flags = list(authorship_flags)
    hp_by_inst: dict[str, set[str]] = {}
    ext_by_inst: dict[str, set[str]] = {}
    for f in flags:
        inst = f.evidence.get("institution")
        if inst is None:
            continue
        if f.flag == "hyperprolific":
            hp_by_inst.setdefault(inst, set()).add(f.subject)
        elif f.flag == "external_author":
            ext_by_inst.setdefault(inst, set()).add(f.subject)
    final = set(screening_result.final_flagged)
    stage1 = set(screening_result.stages[0].surviving_ids) if screening_result.stages else set()
    pool = set(institutions) if institutions is not None else (
        stage1 | final | set(hp_by_inst) | set(ext_by_inst)
    )
    ma_change = multi_affiliation_change or {}
    overlap_set = set(overlap_participants)
    dossier = RedFlagDossier()
    for inst in sorted(pool):
        hp_count = len(hp_by_inst.get(inst, ()))
        ext_count = len(ext_by_inst.get(inst, ()))
        ma = ma_change.get(inst)
        ev = screening_result.evidence.get(inst, {})
        ic_rank = ev.get("intl_collab_rise_rank")
        booleans = {
            "funnel_passed": inst in final,
            "hyperprolific_authors": hp_count >= config.hyperprolific_count_threshold,
            "external_authors": ext_count >= config.external_author_count_threshold,
            "multi_affiliation_rise": ma is not None
            and ma >= config.multi_affiliation_rise_points,
            "overlap_participation": inst in overlap_set,
            "intl_collab_rank": ic_rank is not None and ic_rank <= config.top_k_rank,
        }
        evidence = {
            "hyperprolific_count": hp_count,
            "external_author_count": ext_count,
            "multi_affiliation_change_points": None if ma is None else str(ma),
            "screening": ev,
            "network_stats": network_stats,
        }
        dossier.institutions[inst] = InstitutionDossier(
            institution_id=inst, indicators=booleans, evidence=evidence
        )
    return dossier


def reported_points(value: Fraction | None) -> str:
    return "n/a" if value is None else str(round_half_up(value))
