"""Synthetic corpus generator with constructive anomaly plants.

Plants insert records to hit exact counts rather than sampling around them,
so detector tests assert equality against the emitted ground truth instead of
statistics. A given seed fully determines the output bytes.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .util import atomic_write_text

MAX_AUTHORS = 20


def _by_year(value, year: int, default=0):
    return value.get(year, default) if isinstance(value, dict) else value


@dataclass(frozen=True)
class InstitutionSpec:
    """Baseline behavior of one institution; probabilities may vary by year
    (dict year -> value) to plant slow drifts in authorship dynamics."""

    institution_id: str
    country: str
    base_output_per_year: int | dict[int, int]
    authors_pool_size: int = 50
    mean_authors_per_record: float = 3.9
    domestic_collab_prob: float | dict[int, float] = 0.0
    intl_collab_prob: float | dict[int, float] = 0.0
    external_first_author_prob: float | dict[int, float] = 0.0
    subject_categories: tuple[str, ...] = ()

    def output_for(self, year: int) -> int:
        return int(_by_year(self.base_output_per_year, year, 0))


@dataclass(frozen=True)
class AnomalyPlant:
    plant_id: str
    kind: str
    years: tuple[int, ...]
    params: dict = field(default_factory=dict)


PLANT_KINDS = (
    "output_surge",
    "hyperprolific_author",
    "external_author",
    "multi_affiliation_inflation",
    "cross_group_author",
    "overlap_boost",
)


@dataclass
class GeneratorSpec:
    seed: int
    years: tuple[int, int]  # inclusive
    institutions: list[InstitutionSpec]
    anomalies: list[AnomalyPlant] = field(default_factory=list)

    def year_list(self) -> list[int]:
        return list(range(self.years[0], self.years[1] + 1))

    @classmethod
    def from_obj(cls, obj: dict) -> "GeneratorSpec":
        def year_map(value, cast):
            if isinstance(value, dict):
                return {int(k): cast(v) for k, v in value.items()}
            return cast(value)

        institutions = [
            InstitutionSpec(
                institution_id=str(i["id"]),
                country=str(i["country"]).upper(),
                base_output_per_year=year_map(i["base_output_per_year"], int),
                authors_pool_size=int(i.get("authors_pool_size", 50)),
                mean_authors_per_record=float(i.get("mean_authors_per_record", 3.9)),
                domestic_collab_prob=year_map(i.get("domestic_collab_prob", 0.0), float),
                intl_collab_prob=year_map(i.get("intl_collab_prob", 0.0), float),
                external_first_author_prob=year_map(
                    i.get("external_first_author_prob", 0.0), float
                ),
                subject_categories=tuple(i.get("subject_categories", [])),
            )
            for i in obj["institutions"]
        ]
        anomalies = [
            AnomalyPlant(
                plant_id=str(a.get("id", f"plant{k}")),
                kind=str(a["kind"]),
                years=tuple(int(y) for y in a["years"]),
                params={k2: v for k2, v in a.items() if k2 not in ("id", "kind", "years")},
            )
            for k, a in enumerate(obj.get("anomalies", []))
        ]
        return cls(
            seed=int(obj["seed"]),
            years=(int(obj["years"][0]), int(obj["years"][1])),
            institutions=institutions,
            anomalies=anomalies,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "GeneratorSpec":
        return cls.from_obj(json.loads(Path(path).read_text(encoding="utf-8")))


class SpecError(ValueError):
    """Invalid generator spec; the message enumerates every violation."""


def validate_spec(spec: GeneratorSpec) -> list[str]:
    problems: list[str] = []
    if spec.years[0] > spec.years[1]:
        problems.append(f"years range {spec.years} is empty")
    ids = [i.institution_id for i in spec.institutions]
    if len(ids) != len(set(ids)):
        problems.append("duplicate institution ids")
    known = set(ids)
    for inst in spec.institutions:
        if inst.authors_pool_size < 1:
            problems.append(f"{inst.institution_id}: authors_pool_size must be >= 1")
        if inst.mean_authors_per_record < 1:
            problems.append(f"{inst.institution_id}: mean_authors_per_record must be >= 1")
        for p_name in ("domestic_collab_prob", "intl_collab_prob", "external_first_author_prob"):
            value = getattr(inst, p_name)
            probs = value.values() if isinstance(value, dict) else [value]
            if any(not (0.0 <= p <= 1.0) for p in probs):
                problems.append(f"{inst.institution_id}: {p_name} must be in [0, 1]")
        outputs = (
            inst.base_output_per_year.values()
            if isinstance(inst.base_output_per_year, dict)
            else [inst.base_output_per_year]
        )
        if any(n < 0 for n in outputs):
            problems.append(f"{inst.institution_id}: base output must be >= 0")
    plant_ids = [p.plant_id for p in spec.anomalies]
    if len(plant_ids) != len(set(plant_ids)):
        problems.append("duplicate plant ids")
    for plant in spec.anomalies:
        if plant.kind not in PLANT_KINDS:
            problems.append(f"{plant.plant_id}: unknown kind {plant.kind!r}")
            continue
        for year in plant.years:
            if not (spec.years[0] <= year <= spec.years[1]):
                problems.append(f"{plant.plant_id}: year {year} outside {spec.years}")
        targets = _plant_targets(plant)
        for t in targets:
            if t not in known:
                problems.append(f"{plant.plant_id}: unknown target {t!r}")
        if plant.kind in ("cross_group_author", "overlap_boost") and len(targets) < 2:
            problems.append(f"{plant.plant_id}: needs at least 2 targets")
        if plant.kind == "external_author":
            total = int(plant.params.get("total_pubs", 0))
            secondary = int(plant.params.get("secondary_pubs", 0))
            if not (0 <= secondary <= total) or total < 1:
                problems.append(f"{plant.plant_id}: need 0 <= secondary_pubs <= total_pubs >= 1")
            if "home" not in plant.params:
                problems.append(f"{plant.plant_id}: external_author needs a home institution")
            elif plant.params["home"] not in known:
                problems.append(f"{plant.plant_id}: unknown home {plant.params['home']!r}")
    return problems


def _plant_targets(plant: AnomalyPlant) -> list[str]:
    if "targets" in plant.params:
        return [str(t) for t in plant.params["targets"]]
    if "target" in plant.params:
        return [str(plant.params["target"])]
    return []


@dataclass
class GroundTruth:
    seed: int
    years: tuple[int, int]
    # realized whole-counting stats per institution per year
    institution_stats: dict[str, dict[int, dict[str, int]]] = field(default_factory=dict)
    plants: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "years": list(self.years),
            "institution_stats": {
                inst: {str(y): stats for y, stats in sorted(by_year.items())}
                for inst, by_year in sorted(self.institution_stats.items())
            },
            "plants": self.plants,
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        obj = json.loads(text)
        gt = cls(seed=obj["seed"], years=tuple(obj["years"]))
        gt.institution_stats = {
            inst: {int(y): stats for y, stats in by_year.items()}
            for inst, by_year in obj["institution_stats"].items()
        }
        gt.plants = obj["plants"]
        return gt

    def plant(self, plant_id: str) -> dict:
        for p in self.plants:
            if p["plant_id"] == plant_id:
                return p
        raise KeyError(plant_id)


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


class _Builder:
    """Accumulates records and realized per-institution stats."""

    def __init__(self, spec: GeneratorSpec):
        self.spec = spec
        self.by_id = {i.institution_id: i for i in spec.institutions}
        self.lines: list[str] = []
        self.stats: dict[str, dict[int, dict[str, int]]] = {}
        self.record_ids: list[str] = []

    def add_record(
        self,
        record_id: str,
        year: int,
        authors: list[dict],
        doc_type: str = "article",
        subject_categories: list[str] | None = None,
    ) -> str:
        obj = {
            "record_id": record_id,
            "year": year,
            "doc_type": doc_type,
            "subject_categories": subject_categories or [],
            "authors": authors,
            "corresponding_author_ids": [authors[0]["author_id"]],
        }
        self.lines.append(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
        self.record_ids.append(record_id)
        # realized whole-counting bookkeeping
        insts: set[str] = set()
        countries: set[str] = set()
        multi_insts: set[str] = set()
        for entry in authors:
            affils = entry["affiliations"]
            for aff in affils:
                insts.add(aff["institution_id"])
                countries.add(aff["country"])
            if len(affils) >= 2:
                multi_insts.update(aff["institution_id"] for aff in affils)
        first_insts = {aff["institution_id"] for aff in authors[0]["affiliations"]}
        intl = len(countries) >= 2
        for inst in insts:
            cell = self.stats.setdefault(inst, {}).setdefault(
                year,
                {"output": 0, "first_author_home": 0, "intl": 0, "multi": 0, "author_slots": 0},
            )
            cell["output"] += 1
            cell["author_slots"] += len(authors)
            if inst in first_insts:
                cell["first_author_home"] += 1
            if intl:
                cell["intl"] += 1
            if inst in multi_insts:
                cell["multi"] += 1
        return record_id


def _affil(inst: InstitutionSpec) -> dict:
    return {"institution_id": inst.institution_id, "country": inst.country}


def _pool_author(inst: InstitutionSpec, idx: int) -> str:
    return f"{inst.institution_id}:a{idx:04d}"


def _baseline_record(
    builder: _Builder, rng: random.Random, inst: InstitutionSpec, year: int, serial: int
) -> None:
    spec = builder.spec
    n_authors = min(MAX_AUTHORS, 1 + _poisson(rng, inst.mean_authors_per_record - 1))
    pool = range(inst.authors_pool_size)
    picks = rng.sample(pool, min(n_authors, inst.authors_pool_size))
    authors = [
        {"author_id": _pool_author(inst, i), "affiliations": [_affil(inst)]} for i in picks
    ]
    if rng.random() < _by_year(inst.external_first_author_prob, year, 0.0):
        partners = [o for o in spec.institutions if o.institution_id != inst.institution_id]
        if partners:
            partner = partners[rng.randrange(len(partners))]
            authors.insert(
                0,
                {
                    "author_id": _pool_author(partner, rng.randrange(partner.authors_pool_size)),
                    "affiliations": [_affil(partner)],
                },
            )
    if rng.random() < _by_year(inst.domestic_collab_prob, year, 0.0):
        partners = [
            o
            for o in spec.institutions
            if o.country == inst.country and o.institution_id != inst.institution_id
        ]
        if partners:
            partner = partners[rng.randrange(len(partners))]
            authors.append(
                {
                    "author_id": _pool_author(partner, rng.randrange(partner.authors_pool_size)),
                    "affiliations": [_affil(partner)],
                }
            )
    if rng.random() < _by_year(inst.intl_collab_prob, year, 0.0):
        partners = [o for o in spec.institutions if o.country != inst.country]
        if partners:
            partner = partners[rng.randrange(len(partners))]
            authors.append(
                {
                    "author_id": _pool_author(partner, rng.randrange(partner.authors_pool_size)),
                    "affiliations": [_affil(partner)],
                }
            )
    categories = [c for c in inst.subject_categories if rng.random() < 0.5]
    doc_type = "review" if rng.random() < 0.1 else "article"
    builder.add_record(
        f"{inst.institution_id}:{year}:b{serial:05d}",
        year,
        authors,
        doc_type=doc_type,
        subject_categories=categories,
    )


def _apply_plant(builder: _Builder, rng: random.Random, plant: AnomalyPlant) -> dict:
    spec = builder.spec
    params = plant.params
    record_ids: list[str] = []
    author_ids: list[str] = []
    realized: dict = {}
    expected_flags: list[dict] = []

    if plant.kind == "output_surge":
        inst = builder.by_id[str(params["target"])]
        extra = int(params["extra_records_per_year"])
        external_first = bool(params.get("external_first_author", False))
        intl_prob = float(params.get("intl_coauthor_prob", 0.0))
        partners = [o for o in spec.institutions if o.country != inst.country]
        per_year: dict[int, int] = {}
        for year in plant.years:
            for k in range(extra):
                authors = []
                # partners rotate round-robin so the surge's spillover onto
                # other institutions stays flat instead of drawing a lottery
                if external_first and partners:
                    partner = partners[k % len(partners)]
                    authors.append(
                        {
                            "author_id": _pool_author(partner, rng.randrange(partner.authors_pool_size)),
                            "affiliations": [_affil(partner)],
                        }
                    )
                authors.append(
                    {
                        "author_id": _pool_author(inst, rng.randrange(inst.authors_pool_size)),
                        "affiliations": [_affil(inst)],
                    }
                )
                if partners and rng.random() < intl_prob:
                    partner = partners[(k + len(partners) // 2) % len(partners)]
                    authors.append(
                        {
                            "author_id": _pool_author(partner, rng.randrange(partner.authors_pool_size)),
                            "affiliations": [_affil(partner)],
                        }
                    )
                record_ids.append(
                    builder.add_record(f"{plant.plant_id}:{year}:s{k:05d}", year, authors)
                )
            per_year[year] = extra
        realized = {"extra_records_per_year": {str(y): n for y, n in per_year.items()}}
        expected_flags.append({"flag": "surge_institution", "subject": inst.institution_id})

    elif plant.kind == "hyperprolific_author":
        inst = builder.by_id[str(params["target"])]
        count = int(params["yearly_count"])
        author = params.get("author_id", f"{plant.plant_id}:hp")
        author_ids.append(author)
        for year in plant.years:
            for k in range(count):
                authors = [{"author_id": author, "affiliations": [_affil(inst)]}]
                authors.append(
                    {
                        "author_id": _pool_author(inst, rng.randrange(inst.authors_pool_size)),
                        "affiliations": [_affil(inst)],
                    }
                )
                record_ids.append(
                    builder.add_record(f"{plant.plant_id}:{year}:h{k:05d}", year, authors)
                )
        realized = {"yearly_count": {str(y): count for y in plant.years}}
        expected_flags.append(
            {"flag": "hyperprolific", "subject": author, "institution": inst.institution_id}
        )

    elif plant.kind == "external_author":
        target = builder.by_id[str(params["target"])]
        home = builder.by_id[str(params["home"])]
        total = int(params["total_pubs"])
        secondary = int(params["secondary_pubs"])
        author = params.get("author_id", f"{plant.plant_id}:ext")
        author_ids.append(author)
        for k in range(total):
            year = plant.years[k % len(plant.years)]
            affils = (
                [_affil(home), _affil(target)] if k < secondary else [_affil(target), _affil(home)]
            )
            authors = [{"author_id": author, "affiliations": affils}]
            record_ids.append(
                builder.add_record(f"{plant.plant_id}:{year}:e{k:05d}", year, authors)
            )
        realized = {"total_pubs": total, "secondary_pubs": secondary}
        if 2 * secondary > total:
            expected_flags.append(
                {"flag": "external_author", "subject": author, "institution": target.institution_id}
            )

    elif plant.kind == "multi_affiliation_inflation":
        target = builder.by_id[str(params["target"])]
        partner = builder.by_id[str(params["partner"])]
        count = int(params["records"])
        per_year: dict[int, int] = {}
        for year in plant.years:
            for k in range(count):
                author = _pool_author(target, rng.randrange(target.authors_pool_size))
                authors = [{"author_id": author, "affiliations": [_affil(target), _affil(partner)]}]
                record_ids.append(
                    builder.add_record(f"{plant.plant_id}:{year}:m{k:05d}", year, authors)
                )
            per_year[year] = count
        realized = {"multi_records_per_year": {str(y): n for y, n in per_year.items()}}
        expected_flags.append({"flag": "multi_affiliation", "subject": target.institution_id})

    elif plant.kind == "cross_group_author":
        targets = [builder.by_id[t] for t in _plant_targets(plant)]
        total = int(params["total_pubs"])
        author = params.get("author_id", f"{plant.plant_id}:xg")
        author_ids.append(author)
        credited: set[str] = set()
        for k in range(total):
            year = plant.years[k % len(plant.years)]
            inst = targets[k % len(targets)]
            credited.add(inst.institution_id)
            authors = [{"author_id": author, "affiliations": [_affil(inst)]}]
            record_ids.append(
                builder.add_record(f"{plant.plant_id}:{year}:x{k:05d}", year, authors)
            )
        realized = {"total_pubs": total, "credited": sorted(credited)}
        expected_flags.append({"flag": "cross_group", "subject": author})

    elif plant.kind == "overlap_boost":
        targets = [builder.by_id[t] for t in _plant_targets(plant)]
        count = int(params["records"])
        per_year: dict[int, int] = {}
        for year in plant.years:
            for k in range(count):
                a = targets[k % len(targets)]
                b = targets[(k + 1) % len(targets)]
                authors = [
                    {
                        "author_id": _pool_author(a, rng.randrange(a.authors_pool_size)),
                        "affiliations": [_affil(a)],
                    },
                    {
                        "author_id": _pool_author(b, rng.randrange(b.authors_pool_size)),
                        "affiliations": [_affil(b)],
                    },
                ]
                record_ids.append(
                    builder.add_record(f"{plant.plant_id}:{year}:o{k:05d}", year, authors)
                )
            per_year[year] = count
        realized = {"overlap_records_per_year": {str(y): n for y, n in per_year.items()}}
        expected_flags.append({"flag": "overlap", "subject": ";".join(sorted(t.institution_id for t in targets))})

    else:  # pragma: no cover - validate_spec rejects unknown kinds
        raise SpecError(f"unknown plant kind {plant.kind!r}")

    return {
        "plant_id": plant.plant_id,
        "kind": plant.kind,
        "targets": _plant_targets(plant),
        "years": list(plant.years),
        "record_ids": record_ids,
        "author_ids": author_ids,
        "realized": realized,
        "expected_flags": expected_flags,
    }


def generate(spec: GeneratorSpec) -> tuple[str, str]:
    """Generate (corpus_jsonl, ground_truth_json) strings for the spec."""
    problems = validate_spec(spec)
    if problems:
        raise SpecError("invalid generator spec: " + "; ".join(problems))
    rng = random.Random(spec.seed)
    builder = _Builder(spec)
    for year in spec.year_list():
        for inst in spec.institutions:
            for serial in range(inst.output_for(year)):
                _baseline_record(builder, rng, inst, year, serial)
    truth = GroundTruth(seed=spec.seed, years=spec.years)
    for plant in spec.anomalies:
        truth.plants.append(_apply_plant(builder, rng, plant))
    truth.institution_stats = builder.stats
    corpus_text = "\n".join(builder.lines) + ("\n" if builder.lines else "")
    return corpus_text, truth.to_json()


def registry_json(spec: GeneratorSpec) -> str:
    """Registry file matching the spec's institutions (id used as name)."""
    rows = [
        {
            "institution_id": inst.institution_id,
            "canonical_name": inst.institution_id,
            "country": inst.country,
            "aliases": [],
        }
        for inst in sorted(spec.institutions, key=lambda i: i.institution_id)
    ]
    return json.dumps(rows, indent=2) + "\n"


def generate_files(
    spec: GeneratorSpec,
    corpus_path: str | Path,
    truth_path: str | Path,
    registry_path: str | Path | None = None,
) -> None:
    corpus_text, truth_text = generate(spec)
    atomic_write_text(corpus_path, corpus_text)
    atomic_write_text(truth_path, truth_text)
    if registry_path is not None:
        atomic_write_text(registry_path, registry_json(spec))


def quick_spec(
    seed: int,
    years: tuple[int, int],
    n_institutions: int,
    base_output: int | dict[int, int] = 20,
    countries: Iterable[str] = ("AA", "BB", "CC", "DD"),
    **inst_kwargs,
) -> GeneratorSpec:
    """Convenience builder for test universes: inst00..instNN round-robin
    across the given countries."""
    country_list = list(countries)
    institutions = [
        InstitutionSpec(
            institution_id=f"inst{i:02d}",
            country=country_list[i % len(country_list)],
            base_output_per_year=base_output,
            **inst_kwargs,
        )
        for i in range(n_institutions)
    ]
    return GeneratorSpec(seed=seed, years=years, institutions=institutions)
