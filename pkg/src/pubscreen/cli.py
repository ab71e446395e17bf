"""Command-line entry point.

Subcommands: ingest, metrics, flags, network, screen, synth, report.
Exit codes: 0 success, 1 usage or configuration error, 2 data error.
All outputs are UTF-8 and written atomically; reruns with unchanged inputs
and config produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import authorship, indicators, ingest, network, refdata, report, screening, synth
from .config import ConfigError, load_config
from .model import InstitutionRegistry, RegistryError, UnknownInstitutionError
from .util import atomic_write_bytes, atomic_write_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class CliError(Exception):
    """Data-level failure; message goes to stderr as a JSON object."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> "argparse.NoReturn":  # type: ignore[name-defined]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fail(message: str) -> "argparse.NoReturn":  # type: ignore[name-defined]
    print(json.dumps({"error": message}), file=sys.stderr)
    raise SystemExit(EXIT_DATA)


def _load_registry(path: str) -> InstitutionRegistry:
    if not Path(path).exists():
        raise CliError(f"registry file not found: {path}")
    try:
        return InstitutionRegistry.from_json(path)
    except (RegistryError, json.JSONDecodeError, OSError) as exc:
        raise CliError(f"malformed registry {path}: {exc}")


def _load_corpus(args) -> tuple:
    if not Path(args.corpus).exists():
        raise CliError(f"corpus file not found: {args.corpus}")
    registry = _load_registry(args.registry)
    options = ingest.IngestOptions(
        doc_type_filter=frozenset(args.doc_types.split(",")) if args.doc_types else ingest.ARTICLE_TYPES,
        year_range=_parse_years(args.years) if getattr(args, "years", None) else None,
    )
    result = ingest.ingest(args.corpus, registry, options, fmt=args.records_format)
    return result.corpus, result.report


def _parse_years(spec: str) -> tuple[int, int]:
    try:
        lo, hi = spec.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise CliError(f"bad year range {spec!r}; expected START:END")


def _year_list(spec: str | None, corpus) -> list[int]:
    """Inclusive year list from START:END, defaulting to the corpus range."""
    if spec:
        lo, hi = _parse_years(spec)
        return list(range(lo, hi + 1))
    if corpus.year_range is None:
        return []
    return list(range(corpus.year_range[0], corpus.year_range[1] + 1))


def _split_ids(value: str | None) -> list[str]:
    return [x.strip() for x in value.split(",") if x.strip()] if value else []


def _add_common(parser: argparse.ArgumentParser, corpus_required: bool = True) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--corpus", required=corpus_required, help="record file")
    parser.add_argument("--registry", required=corpus_required, help="institution registry JSON")
    parser.add_argument("--records-format", default="jsonl", choices=["jsonl", "csv"])
    parser.add_argument("--doc-types", default=None, help="comma list, default article,review")
    parser.add_argument("--years", default=None, help="filter records to START:END")


def cmd_ingest(args) -> int:
    registry = _load_registry(args.registry)
    if not Path(args.records).exists():
        raise CliError(f"record file not found: {args.records}")
    options = ingest.IngestOptions(
        doc_type_filter=frozenset(args.doc_types.split(",")) if args.doc_types else ingest.ARTICLE_TYPES,
        year_range=_parse_years(args.years) if args.years else None,
    )
    result = ingest.ingest(args.records, registry, options, fmt=args.records_format)
    atomic_write_text(args.out, ingest.serialize(result.corpus))
    if args.rejects:
        atomic_write_text(
            args.rejects, "".join(r.to_json() + "\n" for r in result.report.rejects)
        )
    summary = {
        "accepted": result.report.accepted,
        "filtered": result.report.filtered,
        "rejected": result.report.rejected,
        "unresolved_affiliations": result.report.unresolved_affiliations,
    }
    if args.report:
        atomic_write_text(args.report, json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_metrics(args) -> int:
    corpus, _ = _load_corpus(args)
    cfg = load_config(args.config)
    year_list = _year_list(args.metric_years, corpus)
    institutions = _split_ids(args.institutions) or None
    rows = report.indicator_rows(
        corpus, year_list, institutions, cfg["multi_affiliation_reading"]
    )
    out_dir = Path(args.out_dir)
    formats = _split_ids(args.formats) or ["jsonl", "csv"]
    if "jsonl" in formats:
        atomic_write_text(out_dir / "indicators.jsonl", report.rows_to_jsonl(rows))
    if "csv" in formats:
        atomic_write_text(out_dir / "indicators.csv", report.rows_to_csv(rows))
    print(json.dumps({"rows": len(rows), "out_dir": str(out_dir)}))
    return EXIT_OK


def cmd_flags(args) -> int:
    corpus, _ = _load_corpus(args)
    cfg = load_config(args.config)
    thr = cfg["thresholds"]
    threshold = args.hyperprolific if args.hyperprolific is not None else thr["hyperprolific"]
    inclusive = thr["hyperprolific_inclusive"]
    min_pubs = args.external_min_pubs if args.external_min_pubs is not None else thr["external_min_pubs"]
    years = _year_list(args.flag_years, corpus)
    flags: list[authorship.FlagRecord] = []
    hp_counts: dict[str, dict[int, int]] = {}
    for year in years:
        by_inst = authorship.hyperprolific_by_institution(corpus, year, threshold, inclusive)
        for inst, recs in sorted(by_inst.items()):
            hp_counts.setdefault(inst, {})[year] = len(recs)
            flags.extend(recs)
    for inst, recs in sorted(authorship.external_authors_by_institution(corpus, min_pubs).items()):
        flags.extend(recs)
    group = _split_ids(args.group)
    if group:
        flags.extend(
            authorship.cross_group_authors(corpus, group, thr["cross_group_min_pubs"])
        )
    out_dir = Path(args.out_dir)
    lines = [
        json.dumps(
            {"subject": f.subject, "flag": f.flag, "years": list(f.years), "evidence": f.evidence},
            ensure_ascii=False,
        )
        for f in flags
    ]
    atomic_write_text(out_dir / "flags.jsonl", "\n".join(lines) + ("\n" if lines else ""))
    header = ["institution"] + [str(y) for y in years]
    table_rows = [
        [inst] + [hp_counts[inst].get(y, 0) for y in years] for inst in sorted(hp_counts)
    ]
    atomic_write_text(out_dir / "hyperprolific_counts.csv", report.csv_table(header, table_rows))
    print(json.dumps({"flags": len(flags), "out_dir": str(out_dir)}))
    return EXIT_OK


def cmd_network(args) -> int:
    corpus, _ = _load_corpus(args)
    cfg = load_config(args.config)
    seed_group = _split_ids(args.seed_group)
    if not seed_group:
        raise CliError("--seed-group must list at least one institution")
    net_cfg = cfg["network"]
    min_articles = args.min_articles if args.min_articles is not None else net_cfg["min_articles"]
    graph = network.build_graph(
        corpus, seed_group, args.year, min_articles, net_cfg["node_rule"]
    )
    if not args.no_cluster:
        graph = network.cluster_graph(graph, net_cfg["cluster_seed"])
    atomic_write_bytes(args.out, network.export_graph(graph, args.format))
    stats = network.graph_stats(graph)
    stats_obj = {
        "nodes": stats.nodes,
        "external_nodes": stats.external_nodes,
        "links": stats.links,
        "total_link_strength": stats.total_link_strength,
        "total_link_strength_node_sum": stats.total_link_strength_node_sum,
        "clusters": stats.clusters,
        "footer": stats.footer(),
    }
    if args.stats_out:
        atomic_write_text(args.stats_out, json.dumps(stats_obj, indent=2) + "\n")
    print(json.dumps(stats_obj))
    return EXIT_OK


def cmd_screen(args) -> int:
    corpus, _ = _load_corpus(args)
    cfg = load_config(args.config)
    fc = cfg["funnel"]
    start = args.start_year if args.start_year is not None else fc["start_year"]
    end = args.end_year if args.end_year is not None else fc["end_year"]
    if start is None or end is None:
        if corpus.year_range is None:
            raise CliError("empty corpus and no funnel years configured")
        start = start if start is not None else corpus.year_range[0]
        end = end if end is not None else corpus.year_range[1]
    try:
        funnel_config = screening.FunnelConfig(
            start_year=int(start),
            end_year=int(end),
            top_n_by_output=int(args.top_n if args.top_n is not None else fc["top_n_by_output"]),
            growth_threshold_pct=_opt_fraction(
                args.growth_threshold
                if args.growth_threshold is not None
                else fc["growth_threshold_pct"]
            ),
            growth_multiple_of_world=_opt_fraction(fc["growth_multiple_of_world"]),
            world_growth_pct=Fraction(str(fc["world_growth_pct"])),
            top_k_rank=int(args.top_k if args.top_k is not None else fc["top_k_rank"]),
            multi_affiliation_reading=cfg["multi_affiliation_reading"],
        )
    except ValueError as exc:
        raise CliError(f"bad funnel configuration: {exc}")
    try:
        result = screening.run_funnel(corpus, funnel_config)
    except ValueError as exc:
        raise CliError(str(exc))
    out_dir = Path(args.out_dir)
    atomic_write_text(out_dir / "screening.jsonl", result.to_jsonl())
    atomic_write_text(out_dir / "funnel_summary.md", result.summary_markdown())
    print(json.dumps({"final": len(result.final_flagged), "flagged": list(result.final_flagged)}))
    return EXIT_OK


def cmd_synth(args) -> int:
    if not Path(args.spec).exists():
        raise CliError(f"generator spec not found: {args.spec}")
    try:
        spec = synth.GeneratorSpec.from_json(args.spec)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"bad generator spec: {exc}")
    try:
        synth.generate_files(spec, args.out_corpus, args.out_truth, args.out_registry)
    except synth.SpecError as exc:
        raise CliError(str(exc))
    print(json.dumps({"corpus": args.out_corpus, "ground_truth": args.out_truth}))
    return EXIT_OK


def cmd_report(args) -> int:
    out_dir = Path(args.out_dir)
    if args.from_reference:
        atomic_write_text(out_dir / "reference_tables.md", report.reference_markdown())
        refdata.write_reference_tables(out_dir / "reference_tables")
        print(json.dumps({"out_dir": str(out_dir), "source": "reference"}))
        return EXIT_OK
    if not args.corpus or not args.registry:
        raise CliError("report needs --corpus and --registry (or --from-reference)")
    corpus, _ = _load_corpus(args)
    cfg = load_config(args.config)
    study = cfg["groups"].get("study") or _split_ids(args.study)
    control = cfg["groups"].get("control") or _split_ids(args.control)
    if not study or not control:
        raise CliError("report needs study and control groups (config or flags)")
    if corpus.year_range is None:
        raise CliError("empty corpus")
    years = _year_list(args.report_years, corpus)
    try:
        panel = screening.compare_groups(
            corpus,
            study,
            control,
            years,
            cfg["thresholds"]["hyperprolific"],
            cfg["multi_affiliation_reading"],
        )
    except (ValueError, UnknownInstitutionError) as exc:
        raise CliError(str(exc))
    footers = {}
    for group_id, members in (("study", study), ("control", control)):
        for year in (years[0], years[-1]):
            graph = network.build_graph(
                corpus, members, year, cfg["network"]["min_articles"], cfg["network"]["node_rule"]
            )
            graph = network.cluster_graph(graph, cfg["network"]["cluster_seed"])
            footers[f"{group_id} {year}"] = network.graph_stats(graph).footer()
    atomic_write_text(out_dir / "report.md", report.render_report_markdown(panel, footers))
    for name, (headers, rows) in report.comparison_tables(panel).items():
        atomic_write_text(out_dir / f"{name}.csv", report.csv_table(headers, rows))
    rows = report.indicator_rows(corpus, years, sorted(set(study) | set(control)))
    atomic_write_text(out_dir / "indicators.csv", report.rows_to_csv(rows))
    print(json.dumps({"out_dir": str(out_dir), "years": years}))
    return EXIT_OK


def _opt_fraction(value) -> Fraction | None:
    return None if value is None else Fraction(str(value))


def build_parser() -> _Parser:
    parser = _Parser(prog="pubscreen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a record file into a corpus artifact")
    p.add_argument("--records", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--records-format", default="jsonl", choices=["jsonl", "csv"])
    p.add_argument("--doc-types", default=None)
    p.add_argument("--years", default=None, help="START:END filter")
    p.add_argument("--out", required=True)
    p.add_argument("--rejects", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("metrics", help="compute indicator rows")
    _add_common(p)
    p.add_argument("--metric-years", default=None, help="START:END")
    p.add_argument("--institutions", default=None, help="comma list (default: all)")
    p.add_argument("--formats", default=None, help="comma list of jsonl,csv")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("flags", help="run author-level detectors")
    _add_common(p)
    p.add_argument("--flag-years", default=None, help="START:END")
    p.add_argument("--hyperprolific", type=int, default=None)
    p.add_argument("--external-min-pubs", type=int, default=None)
    p.add_argument("--group", default=None, help="comma list for cross-group detection")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_flags)

    p = sub.add_parser("network", help="build a co-authorship network")
    _add_common(p)
    p.add_argument("--seed-group", required=True, help="comma list")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--min-articles", type=int, default=None)
    p.add_argument("--no-cluster", action="store_true")
    p.add_argument("--format", default="csv", choices=list(network.EXPORT_FORMATS))
    p.add_argument("--out", required=True)
    p.add_argument("--stats-out", default=None)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("screen", help="run the selection funnel")
    _add_common(p)
    p.add_argument("--start-year", type=int, default=None)
    p.add_argument("--end-year", type=int, default=None)
    p.add_argument("--top-n", type=int, default=None)
    p.add_argument("--growth-threshold", type=float, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--out-registry", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="compose the table bundle")
    _add_common(p, corpus_required=False)
    p.add_argument("--study", default=None, help="comma list")
    p.add_argument("--control", default=None, help="comma list")
    p.add_argument("--report-years", default=None, help="START:END")
    p.add_argument("--from-reference", action="store_true", help="render bundled reference tables")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _fail(str(exc))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownInstitutionError as exc:
        _fail(str(exc))
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
