"""Institutional co-authorship networks: construction, clustering, stats,
and deterministic export/import.

Edge strength between two institutions is the number of distinct records in
the year listing both anywhere on the byline. A graph keeps the seed-group
institutions unconditionally plus external institutions that pass the
article-count cutoff; edges exist only between kept nodes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Literal

from .model import Corpus

MIN_ARTICLES_DEFAULT = 91

NodeRule = Literal["total-output", "seed-coauthored"]


@dataclass(frozen=True)
class GraphParams:
    year: int
    seed_group: tuple[str, ...]
    min_articles: int = MIN_ARTICLES_DEFAULT
    node_rule: NodeRule = "total-output"


@dataclass
class CoauthorshipGraph:
    params: GraphParams
    article_counts: dict[str, int] = field(default_factory=dict)
    edges: dict[tuple[str, str], int] = field(default_factory=dict)  # (a<b) -> strength
    clusters: dict[str, int] = field(default_factory=dict)

    @property
    def nodes(self) -> list[str]:
        return sorted(self.article_counts)

    def strength(self, a: str, b: str) -> int:
        return self.edges.get((min(a, b), max(a, b)), 0)

    def total_link_strength(self, node: str) -> int:
        return sum(s for (a, b), s in self.edges.items() if node in (a, b))

    def neighbors(self, node: str) -> list[str]:
        out = []
        for (a, b) in self.edges:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return sorted(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoauthorshipGraph):
            return NotImplemented
        return (
            self.article_counts == other.article_counts
            and self.edges == other.edges
            and self.clusters == other.clusters
        )


def build_graph(
    corpus: Corpus,
    seed_group: Iterable[str],
    year: int,
    min_articles: int = MIN_ARTICLES_DEFAULT,
    node_rule: NodeRule = "total-output",
) -> CoauthorshipGraph:
    """Co-authorship graph for one year around a seed group.

    External institutions must co-author at least one record with a seed
    member and pass the cutoff: with node_rule "total-output" (default) their
    total output in the year must reach min_articles; with "seed-coauthored"
    the records co-authored with seed members must.
    """
    seed = tuple(sorted(set(seed_group)))
    if not seed:
        raise ValueError("seed_group must be non-empty")
    seed_set = set(seed)
    totals: dict[str, int] = {}
    with_seed: dict[str, int] = {}
    pair_strength: dict[tuple[str, str], int] = {}
    for rec in corpus.iter_records(year):
        insts = sorted(rec.institutions())
        touches_seed = any(i in seed_set for i in insts)
        for inst in insts:
            totals[inst] = totals.get(inst, 0) + 1
            if touches_seed:
                with_seed[inst] = with_seed.get(inst, 0) + 1
        for a, b in combinations(insts, 2):
            pair_strength[(a, b)] = pair_strength.get((a, b), 0) + 1

    def qualifies(inst: str) -> bool:
        if inst in seed_set:
            return True
        # must actually co-author with the seed group that year
        if not any(
            pair_strength.get((min(inst, s), max(inst, s)), 0) > 0 for s in seed_set
        ):
            return False
        basis = totals[inst] if node_rule == "total-output" else with_seed.get(inst, 0)
        return basis >= min_articles

    kept = {i for i in totals if qualifies(i)} | seed_set
    graph = CoauthorshipGraph(
        params=GraphParams(
            year=year, seed_group=seed, min_articles=min_articles, node_rule=node_rule
        )
    )
    graph.article_counts = {i: totals.get(i, 0) for i in sorted(kept)}
    graph.edges = {
        (a, b): s for (a, b), s in sorted(pair_strength.items()) if a in kept and b in kept
    }
    return graph


def modularity(graph: CoauthorshipGraph, partition: dict[str, int]) -> Fraction:
    """Weighted Newman modularity of a node->label partition."""
    m = sum(graph.edges.values())
    if m == 0:
        return Fraction(0)
    degree: dict[str, int] = {n: 0 for n in graph.article_counts}
    internal: dict[int, int] = {}
    for (a, b), s in graph.edges.items():
        degree[a] += s
        degree[b] += s
        if partition[a] == partition[b]:
            internal[partition[a]] = internal.get(partition[a], 0) + s
    label_degree: dict[int, int] = {}
    for node, label in partition.items():
        label_degree[label] = label_degree.get(label, 0) + degree.get(node, 0)
    q = Fraction(0)
    for label, d in label_degree.items():
        q += Fraction(internal.get(label, 0), m) - Fraction(d, 2 * m) ** 2
    return q


def cluster_graph(graph: CoauthorshipGraph, seed: int = 0) -> CoauthorshipGraph:
    """Label every node by greedy modularity agglomeration.

    Deterministic: merge gains are compared with pure integer arithmetic
    (score = 2m*w_ij - d_i*d_j, a positive multiple of the modularity gain)
    and ties break lexicographically on the communities' smallest member
    ids. The seed is accepted for interface stability but the procedure has
    no random choices, so it never changes the outcome. Labels are
    contiguous from 1, largest cluster first.
    """
    nodes = graph.nodes
    if not nodes:
        return replace(graph, clusters={})
    m = sum(graph.edges.values())
    # community id -> members; start from singletons keyed by smallest member
    communities: dict[str, set[str]] = {n: {n} for n in nodes}
    degree: dict[str, int] = {n: 0 for n in nodes}
    between: dict[tuple[str, str], int] = {}
    for (a, b), s in graph.edges.items():
        degree[a] += s
        degree[b] += s
        between[(a, b)] = s
    comm_degree: dict[str, int] = dict(degree)

    def pair_key(x: str, y: str) -> tuple[str, str]:
        return (x, y) if x < y else (y, x)

    while m > 0 and len(communities) > 1:
        best: tuple[int, tuple[str, str]] | None = None
        for (ca, cb), w in between.items():
            score = 2 * m * w - comm_degree[ca] * comm_degree[cb]
            if score <= 0:
                continue
            if best is None or score > best[0] or (score == best[0] and (ca, cb) < best[1]):
                best = (score, (ca, cb))
        if best is None:
            break
        ca, cb = best[1]  # ca < cb: merged community keeps the smaller key
        communities[ca] |= communities.pop(cb)
        comm_degree[ca] += comm_degree.pop(cb)
        between.pop((ca, cb))
        moved = [(pair, w) for pair, w in between.items() if cb in pair]
        for (x, y), w in moved:
            del between[(x, y)]
            other = y if x == cb else x
            key = pair_key(ca, other)
            between[key] = between.get(key, 0) + w

    ordered = sorted(communities.values(), key=lambda c: (-len(c), min(c)))
    clusters = {node: label for label, comm in enumerate(ordered, start=1) for node in comm}
    return replace(graph, clusters=clusters)


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    external_nodes: int
    links: int
    total_link_strength: int  # sum over edges
    total_link_strength_node_sum: int  # sum over nodes (2x the edge sum)
    clusters: int

    def footer(self) -> str:
        return (
            f"External institutions: {self.external_nodes} | Links: {self.links} | "
            f"Total link strength: {self.total_link_strength} | Clusters: {self.clusters}"
        )


def graph_stats(graph: CoauthorshipGraph) -> GraphStats:
    seed = set(graph.params.seed_group) if graph.params else set()
    total = sum(graph.edges.values())
    return GraphStats(
        nodes=len(graph.article_counts),
        external_nodes=sum(1 for n in graph.article_counts if n not in seed),
        links=len(graph.edges),
        total_link_strength=total,
        total_link_strength_node_sum=2 * total,
        clusters=len(set(graph.clusters.values())) if graph.clusters else 0,
    )


EXPORT_FORMATS = ("csv", "vosviewer", "graphml")


def export_graph(graph: CoauthorshipGraph, fmt: str) -> bytes:
    """Byte-deterministic serialization; nodes and edges in sorted order."""
    if fmt == "csv":
        return _export_csv(graph)
    if fmt == "vosviewer":
        return _export_vosviewer(graph)
    if fmt == "graphml":
        return _export_graphml(graph)
    raise ValueError(f"unknown graph format {fmt!r}; supported: {', '.join(EXPORT_FORMATS)}")


def _export_csv(graph: CoauthorshipGraph) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["source", "target", "strength"])
    for (a, b), s in sorted(graph.edges.items()):
        writer.writerow([a, b, s])
    return out.getvalue().encode("utf-8")


def _export_vosviewer(graph: CoauthorshipGraph) -> bytes:
    items = []
    for node in graph.nodes:
        item = {
            "id": node,
            "label": node,
            "weights": {
                "Documents": graph.article_counts[node],
                "Total link strength": graph.total_link_strength(node),
            },
        }
        if graph.clusters:
            item["cluster"] = graph.clusters[node]
        items.append(item)
    links = [
        {"source_id": a, "target_id": b, "strength": s}
        for (a, b), s in sorted(graph.edges.items())
    ]
    payload = {
        "network": {"items": items, "links": links},
        "params": {
            "year": graph.params.year,
            "seed_group": list(graph.params.seed_group),
            "min_articles": graph.params.min_articles,
            "node_rule": graph.params.node_rule,
        },
    }
    return (json.dumps(payload, indent=2, sort_keys=False) + "\n").encode("utf-8")


def _export_graphml(graph: CoauthorshipGraph) -> bytes:
    def esc(s: str) -> str:
        return (
            s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
        )

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="d0" for="node" attr.name="articles" attr.type="int"/>',
        '  <key id="d1" for="node" attr.name="cluster" attr.type="int"/>',
        '  <key id="d2" for="edge" attr.name="strength" attr.type="int"/>',
        '  <graph edgedefault="undirected">',
    ]
    for node in graph.nodes:
        lines.append(f'    <node id="{esc(node)}">')
        lines.append(f'      <data key="d0">{graph.article_counts[node]}</data>')
        if graph.clusters:
            lines.append(f'      <data key="d1">{graph.clusters[node]}</data>')
        lines.append("    </node>")
    for (a, b), s in sorted(graph.edges.items()):
        lines.append(f'    <edge source="{esc(a)}" target="{esc(b)}">')
        lines.append(f'      <data key="d2">{s}</data>')
        lines.append("    </edge>")
    lines += ["  </graph>", "</graphml>", ""]
    return "\n".join(lines).encode("utf-8")


def import_graph(data: bytes, fmt: str, params: GraphParams | None = None) -> CoauthorshipGraph:
    """Rebuild a graph from exported bytes.

    The VOSviewer JSON format round-trips everything (nodes, weights,
    clusters, params). The edge-list CSV carries topology and strengths
    only: article counts come back as 0, clusters empty, and isolated
    nodes are not representable.
    """
    if fmt == "vosviewer":
        payload = json.loads(data.decode("utf-8"))
        p = payload.get("params", {})
        gparams = params or GraphParams(
            year=int(p.get("year", 0)),
            seed_group=tuple(p.get("seed_group", [])),
            min_articles=int(p.get("min_articles", MIN_ARTICLES_DEFAULT)),
            node_rule=p.get("node_rule", "total-output"),
        )
        graph = CoauthorshipGraph(params=gparams)
        clusters: dict[str, int] = {}
        for item in payload["network"]["items"]:
            graph.article_counts[item["id"]] = int(item["weights"]["Documents"])
            if "cluster" in item:
                clusters[item["id"]] = int(item["cluster"])
        graph.article_counts = dict(sorted(graph.article_counts.items()))
        graph.clusters = dict(sorted(clusters.items()))
        for link in payload["network"]["links"]:
            a, b = link["source_id"], link["target_id"]
            graph.edges[(min(a, b), max(a, b))] = int(link["strength"])
        graph.edges = dict(sorted(graph.edges.items()))
        return graph
    if fmt == "csv":
        gparams = params or GraphParams(year=0, seed_group=())
        graph = CoauthorshipGraph(params=gparams)
        reader = csv.reader(io.StringIO(data.decode("utf-8")))
        header = next(reader, None)
        if header != ["source", "target", "strength"]:
            raise ValueError("edge-list CSV must start with header source,target,strength")
        for row in reader:
            if not row:
                continue
            a, b, s = row[0], row[1], int(row[2])
            graph.article_counts.setdefault(a, 0)
            graph.article_counts.setdefault(b, 0)
            graph.edges[(min(a, b), max(a, b))] = s
        graph.article_counts = dict(sorted(graph.article_counts.items()))
        graph.edges = dict(sorted(graph.edges.items()))
        return graph
    raise ValueError(f"unknown graph format {fmt!r}; supported for import: csv, vosviewer")
