"""Typed supply-chain graph: construction, chain enumeration, conflict scan.

Nodes are OSS repositories, models, and datasets; edges point from the
downstream consumer to its upstream dependency (repo -> model, model ->
dataset, model -> base model). Chains are maximal downstream-to-upstream
paths starting at a repository; the conflict scan applies the pairwise
term check to every edge and aggregates per-chain and per-license-pair
results into a deterministic report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .compat import TermConflict, check_pair
from .hub import ArtifactKind, CachingHub, HubFetcher, HubNotFound, HubUnavailable
from .model import (
    NOT_FOUND,
    LegalTerm,
    LicenseProfile,
    all_defaults_profile,
    is_sentinel,
)


class NodeKind(str, Enum):
    OSS_REPO = "oss_repo"
    LLM = "llm"
    DATASET = "dataset"


class EdgeKind(str, Enum):
    USES_MODEL = "uses_model"
    TRAINED_ON = "trained_on"
    DERIVED_FROM_BASE = "derived_from_base"


# Endpoint kind constraints: (downstream kind, upstream kind) per edge kind.
EDGE_ENDPOINT_KINDS = {
    EdgeKind.USES_MODEL: (NodeKind.OSS_REPO, NodeKind.LLM),
    EdgeKind.TRAINED_ON: (NodeKind.LLM, NodeKind.DATASET),
    EdgeKind.DERIVED_FROM_BASE: (NodeKind.LLM, NodeKind.LLM),
}


@dataclass(frozen=True)
class ArtifactNode:
    id: str
    kind: NodeKind
    license_id: str = NOT_FOUND
    metadata: tuple[tuple[str, object], ...] = ()

    @property
    def metadata_dict(self) -> dict:
        return dict(self.metadata)

    # license_distribution reads .metadata like a mapping
    def __post_init__(self):
        if isinstance(self.metadata, dict):
            object.__setattr__(self, "metadata", tuple(sorted(self.metadata.items())))


@dataclass(frozen=True)
class DependencyEdge:
    downstream: str  # "from" node id
    upstream: str  # "to" node id
    kind: EdgeKind


class EdgeConstraintError(ValueError):
    """Edge endpoints violate the kind constraints for its edge kind."""

    def __init__(self, record: dict, reason: str):
        self.record = record
        super().__init__(f"{reason}: {json.dumps(record, sort_keys=True)}")


@dataclass(frozen=True)
class SupplyChainGraph:
    nodes: Mapping[str, ArtifactNode]
    edges: tuple[DependencyEdge, ...]
    diagnostics: tuple[str, ...] = ()

    def outgoing(self, node_id: str) -> list[DependencyEdge]:
        return [e for e in self.edges if e.downstream == node_id]

    def nodes_of_kind(self, kind: NodeKind) -> list[ArtifactNode]:
        return [n for n in self.nodes.values() if n.kind is kind]


def _node_from_record(record: dict) -> ArtifactNode:
    metadata = record.get("metadata") or {}
    license_id = record.get("license_id") or NOT_FOUND
    return ArtifactNode(
        id=record["id"],
        kind=NodeKind(record["kind"]),
        license_id=license_id,
        metadata=tuple(sorted(metadata.items())),
    )


def _merge_nodes(existing: ArtifactNode, incoming: ArtifactNode, diagnostics: list[str]) -> ArtifactNode:
    if existing.kind is not incoming.kind:
        diagnostics.append(
            f"node {existing.id!r}: conflicting kinds {existing.kind.value}/{incoming.kind.value}, keeping first"
        )
        return existing
    license_id = existing.license_id
    if is_sentinel(license_id) and not is_sentinel(incoming.license_id):
        license_id = incoming.license_id
    elif (
        not is_sentinel(existing.license_id)
        and not is_sentinel(incoming.license_id)
        and existing.license_id != incoming.license_id
    ):
        diagnostics.append(
            f"node {existing.id!r}: conflicting licenses {existing.license_id!r}/{incoming.license_id!r}, keeping first"
        )
    metadata = dict(existing.metadata)
    for key, value in incoming.metadata:
        metadata.setdefault(key, value)
    return replace(existing, license_id=license_id, metadata=tuple(sorted(metadata.items())))


def build_graph(records: Iterable[dict]) -> SupplyChainGraph:
    """Materialize a graph from a stream of node/edge records.

    Duplicate nodes merge (explicit licenses beat sentinels, first
    non-sentinel wins on true disagreement); duplicate edges collapse;
    edges referencing missing nodes are dropped with a diagnostic.
    Edge-kind endpoint violations raise EdgeConstraintError.
    """
    nodes: dict[str, ArtifactNode] = {}
    edge_records: list[dict] = []
    diagnostics: list[str] = []
    for record in records:
        record_type = record.get("type", "node")
        if record_type == "node":
            node = _node_from_record(record)
            if node.id in nodes:
                nodes[node.id] = _merge_nodes(nodes[node.id], node, diagnostics)
            else:
                nodes[node.id] = node
        elif record_type == "edge":
            edge_records.append(record)
        else:
            diagnostics.append(f"unknown record type {record_type!r}, skipped")
    edges: list[DependencyEdge] = []
    seen: set[tuple[str, str, EdgeKind]] = set()
    for record in edge_records:
        kind = EdgeKind(record["kind"])
        downstream_id, upstream_id = record["from"], record["to"]
        key = (downstream_id, upstream_id, kind)
        if key in seen:
            continue
        downstream = nodes.get(downstream_id)
        upstream = nodes.get(upstream_id)
        if downstream is None or upstream is None:
            missing = downstream_id if downstream is None else upstream_id
            diagnostics.append(f"edge {downstream_id!r} -> {upstream_id!r}: dangling reference {missing!r}, dropped")
            continue
        want_down, want_up = EDGE_ENDPOINT_KINDS[kind]
        if downstream.kind is not want_down or upstream.kind is not want_up:
            raise EdgeConstraintError(
                record,
                f"edge kind {kind.value} requires {want_down.value} -> {want_up.value}, "
                f"got {downstream.kind.value} -> {upstream.kind.value}",
            )
        seen.add(key)
        edges.append(DependencyEdge(downstream=downstream_id, upstream=upstream_id, kind=kind))
    return SupplyChainGraph(nodes=nodes, edges=tuple(edges), diagnostics=tuple(diagnostics))


def read_records(path: str | Path) -> list[dict]:
    """Line-delimited record file: one JSON node or edge object per line."""
    records = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: bad record: {exc}") from exc
    return records


def load_graph(path: str | Path) -> SupplyChainGraph:
    return build_graph(read_records(path))


def node_record(node: ArtifactNode) -> dict:
    return {
        "type": "node",
        "id": node.id,
        "kind": node.kind.value,
        "license_id": node.license_id,
        "metadata": dict(node.metadata),
    }


def edge_record(edge: DependencyEdge) -> dict:
    return {"type": "edge", "from": edge.downstream, "to": edge.upstream, "kind": edge.kind.value}


def write_records(records: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def graph_records(graph: SupplyChainGraph) -> list[dict]:
    records = [node_record(graph.nodes[node_id]) for node_id in sorted(graph.nodes)]
    records.extend(
        edge_record(e) for e in sorted(graph.edges, key=lambda e: (e.downstream, e.upstream, e.kind.value))
    )
    return records


# ---------------------------------------------------------------------------
# Chain enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainEnumeration:
    chains: tuple[tuple[str, ...], ...]
    diagnostics: tuple[str, ...] = ()


def enumerate_chains(graph: SupplyChainGraph) -> ChainEnumeration:
    """All maximal downstream-to-upstream paths starting at repositories.

    Base-model edges expand the path, so chains may exceed three nodes; a
    path ends at a node with no outgoing upstream edges. Cycles (possible
    in crawled base-model metadata) are cut at the first revisit with a
    diagnostic instead of failing. Chains are returned in lexicographic
    path order.
    """
    outgoing: dict[str, list[DependencyEdge]] = {}
    for edge in graph.edges:
        outgoing.setdefault(edge.downstream, []).append(edge)
    for edges in outgoing.values():
        edges.sort(key=lambda e: (e.upstream, e.kind.value))
    chains: list[tuple[str, ...]] = []
    diagnostics: list[str] = []

    def walk(path: list[str]):
        tail = path[-1]
        extensions = 0
        for edge in outgoing.get(tail, ()):
            if edge.upstream in path:
                diagnostics.append(
                    "cycle cut: " + " -> ".join(path + [edge.upstream])
                )
                continue
            extensions += 1
            path.append(edge.upstream)
            walk(path)
            path.pop()
        if extensions == 0 and len(path) >= 2:
            chains.append(tuple(path))

    for repo in sorted(n.id for n in graph.nodes_of_kind(NodeKind.OSS_REPO)):
        walk([repo])
    chains.sort()
    return ChainEnumeration(chains=tuple(chains), diagnostics=tuple(diagnostics))


def chain_layer(graph: SupplyChainGraph, chain: Sequence[str]) -> str:
    """"three_layer" when the chain terminates at a dataset, else
    "two_layer" (base-model hops do not change the label)."""
    terminal = graph.nodes[chain[-1]]
    return "three_layer" if terminal.kind is NodeKind.DATASET else "two_layer"


# ---------------------------------------------------------------------------
# Conflict scanning
# ---------------------------------------------------------------------------


class MissingLicensePolicy(str, Enum):
    STRICT = "strict"  # sentinels scan as all-defaults profiles
    SKIP = "skip"  # edges touching sentinels are excluded and reported


class ProfileLookupError(KeyError):
    def __init__(self, node_id: str, license_id: str):
        self.node_id = node_id
        self.license_id = license_id
        super().__init__(f"no profile for license {license_id!r} (node {node_id!r})")


NO_LICENSE_LABEL = "No License"


def _pair_label(license_id: str) -> str:
    return NO_LICENSE_LABEL if is_sentinel(license_id) else license_id


@dataclass(frozen=True)
class EdgeFinding:
    edge: DependencyEdge
    downstream_license: str
    upstream_license: str
    conflicts: tuple[TermConflict, ...]


@dataclass(frozen=True)
class ConflictReport:
    edge_findings: tuple[EdgeFinding, ...]
    chain_summaries: tuple[tuple[tuple[str, ...], bool], ...]
    chains_total: int
    chains_conflicted: int
    conflict_rate: float
    layer_totals: Mapping[str, int]
    top_pairs: Mapping[str, tuple[tuple[str, str, int, float], ...]]
    skipped_edges: tuple[DependencyEdge, ...] = ()
    diagnostics: tuple[str, ...] = ()

    def to_document(self) -> dict:
        return {
            "totals": {
                "chains_total": self.chains_total,
                "chains_conflicted": self.chains_conflicted,
                "conflict_rate": self.conflict_rate,
                "layers": dict(self.layer_totals),
            },
            "edge_findings": [
                {
                    "from": f.edge.downstream,
                    "to": f.edge.upstream,
                    "kind": f.edge.kind.value,
                    "downstream_license": f.downstream_license,
                    "upstream_license": f.upstream_license,
                    "conflicts": [c.to_document() for c in f.conflicts],
                }
                for f in self.edge_findings
            ],
            "chains": [
                {"path": list(path), "conflicted": conflicted}
                for path, conflicted in self.chain_summaries
            ],
            "top_pairs": {
                group: [
                    {"downstream": down, "upstream": up, "count": count, "share": share}
                    for down, up, count, share in pairs
                ]
                for group, pairs in self.top_pairs.items()
            },
            "skipped_edges": [
                {"from": e.downstream, "to": e.upstream, "kind": e.kind.value}
                for e in self.skipped_edges
            ],
            "diagnostics": list(self.diagnostics),
        }


def scan_conflicts(
    graph: SupplyChainGraph,
    profiles: Mapping[str, LicenseProfile],
    taxonomy: Sequence[LegalTerm],
    policy: MissingLicensePolicy = MissingLicensePolicy.STRICT,
    lenient: bool = False,
) -> ConflictReport:
    """Edge-wise conflict scan with chain and license-pair aggregation.

    Every non-sentinel license id must resolve to a completed profile
    unless `lenient`, which downgrades unresolved ids to sentinel handling
    with a warning. Under the strict policy sentinels scan as all-default
    profiles (rights cannot / obligations can); under skip their edges are
    excluded and reported separately. Output ordering is deterministic:
    identical inputs serialize byte-identically.
    """
    diagnostics: list[str] = []
    defaults_cache: dict[str, LicenseProfile] = {}

    def resolve(node: ArtifactNode) -> LicenseProfile | None:
        license_id = node.license_id
        if not is_sentinel(license_id):
            profile = profiles.get(license_id)
            if profile is not None:
                return profile
            if not lenient:
                raise ProfileLookupError(node.id, license_id)
            diagnostics.append(f"unresolved license {license_id!r} on node {node.id!r}, treated as missing")
        if policy is MissingLicensePolicy.SKIP:
            return None
        if license_id not in defaults_cache:
            defaults_cache[license_id] = all_defaults_profile(license_id, taxonomy)
        return defaults_cache[license_id]

    edge_findings: list[EdgeFinding] = []
    skipped: list[DependencyEdge] = []
    conflicted_pairs: set[tuple[str, str]] = set()
    ordered_edges = sorted(graph.edges, key=lambda e: (e.downstream, e.upstream, e.kind.value))
    for edge in ordered_edges:
        down_node = graph.nodes[edge.downstream]
        up_node = graph.nodes[edge.upstream]
        down_profile = resolve(down_node)
        up_profile = resolve(up_node)
        if down_profile is None or up_profile is None:
            skipped.append(edge)
            continue
        conflicts = check_pair(down_profile, up_profile, taxonomy)
        if conflicts:
            conflicted_pairs.add((edge.downstream, edge.upstream))
        edge_findings.append(
            EdgeFinding(
                edge=edge,
                downstream_license=down_node.license_id,
                upstream_license=up_node.license_id,
                conflicts=tuple(conflicts),
            )
        )

    enumeration = enumerate_chains(graph)
    diagnostics.extend(enumeration.diagnostics)
    chain_summaries = []
    conflicted_count = 0
    layer_totals: dict[str, int] = {"two_layer": 0, "three_layer": 0}
    for chain in enumeration.chains:
        conflicted = any(
            (chain[i], chain[i + 1]) in conflicted_pairs for i in range(len(chain) - 1)
        )
        conflicted_count += conflicted
        layer_totals[chain_layer(graph, chain)] += 1
        chain_summaries.append((chain, conflicted))

    pair_counts: dict[EdgeKind, dict[tuple[str, str], int]] = {}
    for finding in edge_findings:
        if not finding.conflicts:
            continue
        key = (_pair_label(finding.downstream_license), _pair_label(finding.upstream_license))
        pair_counts.setdefault(finding.edge.kind, {})
        pair_counts[finding.edge.kind][key] = pair_counts[finding.edge.kind].get(key, 0) + 1
    top_pairs: dict[str, tuple[tuple[str, str, int, float], ...]] = {}
    for kind, counts in sorted(pair_counts.items(), key=lambda kv: kv[0].value):
        group_total = sum(counts.values())
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
        top_pairs[kind.value] = tuple(
            (down, up, count, count / group_total) for (down, up), count in ranked
        )

    total = len(enumeration.chains)
    return ConflictReport(
        edge_findings=tuple(edge_findings),
        chain_summaries=tuple(chain_summaries),
        chains_total=total,
        chains_conflicted=conflicted_count,
        conflict_rate=(conflicted_count / total) if total else 0.0,
        layer_totals=layer_totals,
        top_pairs=top_pairs,
        skipped_edges=tuple(skipped),
        diagnostics=tuple(diagnostics),
    )


# ---------------------------------------------------------------------------
# Snowball closure over hub metadata
# ---------------------------------------------------------------------------


def snowball_closure(
    seed_ids: Sequence[str],
    fetcher: HubFetcher,
    known: SupplyChainGraph | None = None,
) -> SupplyChainGraph:
    """Fetch model metadata transitively until no new artifact is referenced.

    Seeds are models; base models recurse, datasets are fetched once for
    their license. Ids present in `known` are carried over without
    re-fetching, so running the closure over its own output fetches
    nothing. Fetch failures record an unresolved node instead of raising;
    cyclic base-model references terminate via the visited set and are
    reported as diagnostics.
    """
    cache = fetcher if isinstance(fetcher, CachingHub) else CachingHub(fetcher)
    nodes: dict[str, ArtifactNode] = dict(known.nodes) if known else {}
    edges: list[DependencyEdge] = list(known.edges) if known else []
    edge_keys = {(e.downstream, e.upstream, e.kind) for e in edges}
    diagnostics: list[str] = []
    visited: set[str] = set(nodes)
    queue: list[tuple[str, ArtifactKind]] = [
        (seed, ArtifactKind.MODEL) for seed in seed_ids if seed not in visited
    ]

    def add_node(artifact_id: str, kind: NodeKind, license_id: str, metadata: dict) -> None:
        node = ArtifactNode(
            id=artifact_id, kind=kind, license_id=license_id, metadata=tuple(sorted(metadata.items()))
        )
        if artifact_id in nodes:
            nodes[artifact_id] = _merge_nodes(nodes[artifact_id], node, diagnostics)
        else:
            nodes[artifact_id] = node

    def add_edge(downstream: str, upstream: str, kind: EdgeKind) -> None:
        key = (downstream, upstream, kind)
        if key not in edge_keys:
            edge_keys.add(key)
            edges.append(DependencyEdge(downstream=downstream, upstream=upstream, kind=kind))

    while queue:
        artifact_id, kind = queue.pop(0)
        if artifact_id in visited:
            continue
        visited.add(artifact_id)
        node_kind = NodeKind.LLM if kind is ArtifactKind.MODEL else NodeKind.DATASET
        try:
            metadata = cache.fetch(artifact_id, kind)
        except HubNotFound:
            add_node(artifact_id, node_kind, NOT_FOUND, {"hub_status": "not_found"})
            continue
        except HubUnavailable as exc:
            add_node(artifact_id, node_kind, NOT_FOUND, {"hub_status": "unresolved"})
            diagnostics.append(f"{artifact_id}: hub unavailable ({exc})")
            continue
        extra = {}
        if metadata.task_category:
            extra["task_category"] = metadata.task_category
        if metadata.download_count is not None:
            extra["downloads"] = metadata.download_count
        if metadata.owner_tags:
            extra["owner_tags"] = ",".join(metadata.owner_tags)
        add_node(artifact_id, node_kind, metadata.license_id or NOT_FOUND, extra)
        if kind is ArtifactKind.MODEL:
            for base_id in metadata.base_model_ids:
                add_edge(artifact_id, base_id, EdgeKind.DERIVED_FROM_BASE)
                if base_id not in visited:
                    queue.append((base_id, ArtifactKind.MODEL))
            for dataset_id in metadata.dataset_ids:
                add_edge(artifact_id, dataset_id, EdgeKind.TRAINED_ON)
                if dataset_id not in visited:
                    queue.append((dataset_id, ArtifactKind.DATASET))

    for cycle in _find_base_model_cycles(edges):
        diagnostics.append("base-model cycle: " + " -> ".join(cycle))
    return SupplyChainGraph(nodes=nodes, edges=tuple(edges), diagnostics=tuple(diagnostics))


def _find_base_model_cycles(edges: Sequence[DependencyEdge]) -> list[list[str]]:
    adjacency: dict[str, list[str]] = {}
    for edge in edges:
        if edge.kind is EdgeKind.DERIVED_FROM_BASE:
            adjacency.setdefault(edge.downstream, []).append(edge.upstream)
    cycles: list[list[str]] = []
    reported: set[frozenset[str]] = set()
    state: dict[str, int] = {}  # 0 unseen / 1 in stack / 2 done

    def dfs(node: str, stack: list[str]):
        state[node] = 1
        stack.append(node)
        for neighbor in sorted(adjacency.get(node, ())):
            if state.get(neighbor, 0) == 1:
                cycle = stack[stack.index(neighbor) :] + [neighbor]
                key = frozenset(cycle)
                if key not in reported:
                    reported.add(key)
                    cycles.append(cycle)
            elif state.get(neighbor, 0) == 0:
                dfs(neighbor, stack)
        stack.pop()
        state[node] = 2

    for node in sorted(adjacency):
        if state.get(node, 0) == 0:
            dfs(node, [])
    return cycles


def snowball_records(
    graph: SupplyChainGraph, emit: Callable[[dict], None] | None = None
) -> list[dict]:
    records = graph_records(graph)
    if emit is not None:
        for record in records:
            emit(record)
    return records
