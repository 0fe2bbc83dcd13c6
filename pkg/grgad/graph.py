"""Attributed-graph data model, reconstruction targets and the plain-text
file formats (edge list, feature CSV, ground-truth group JSON)."""
import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from grgad.errors import EmptyGraphError, GraphFormatError, MissingArtifactError, ShapeError

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


def _normalize_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected graph with one real-valued attribute row per node.

    `edges` holds each undirected edge once as (low, high). Instances are
    immutable; derived structures are cached on first use.
    """
    n: int
    edges: frozenset
    X: np.ndarray
    node_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"node count must be non-negative, got {self.n}")
        X = np.array(self.X, dtype=np.float64, copy=True)
        if X.ndim == 1 and self.n == 0:
            X = X.reshape(0, 0)
        if X.ndim != 2 or X.shape[0] != self.n:
            raise ShapeError(f"attribute matrix has shape {X.shape}, expected {self.n} rows")
        if not np.isfinite(X).all():
            raise GraphFormatError("attribute matrix contains non-finite values")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

        edges = frozenset(self.edges)
        for edge in edges:
            u, v = edge
            if u == v:
                raise GraphFormatError(f"self-loop on node {u}")
            if u > v:
                raise GraphFormatError(f"edge {edge} is not stored as (low, high)")
            if u < 0 or v >= self.n:
                raise GraphFormatError(f"edge {edge} has an endpoint outside [0, {self.n})")
        object.__setattr__(self, "edges", edges)

        if self.node_ids is not None:
            ids = tuple(str(i) for i in self.node_ids)
            if len(ids) != self.n:
                raise ShapeError(f"{len(ids)} node ids given for {self.n} nodes")
            object.__setattr__(self, "node_ids", ids)

    @classmethod
    def from_edge_list(cls, n: int, edges: Iterable[Sequence[int]], X,
                       node_ids: Sequence[str] | None = None) -> "AttributedGraph":
        """Builds a graph from raw pairs, dropping self-loops and duplicates."""
        kept: set[Edge] = set()
        self_loops = duplicates = 0
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                self_loops += 1
                continue
            edge = _normalize_edge(u, v)
            if edge in kept:
                duplicates += 1
                continue
            kept.add(edge)
        if self_loops or duplicates:
            logger.warning(f"Dropped {self_loops} self-loops and {duplicates} duplicate edges.")
        return cls(n=n, edges=frozenset(kept), X=X, node_ids=tuple(node_ids) if node_ids is not None else None)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Ascending neighbour tuple per node."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.sorted_edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.float64)
        if self.edges:
            idx = np.array(self.sorted_edges, dtype=np.int64)
            A[idx[:, 0], idx[:, 1]] = 1.0
            A[idx[:, 1], idx[:, 0]] = 1.0
        A.setflags(write=False)
        return A

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(self.sorted_edges)
        return G

    def summary(self) -> dict:
        G = self.to_networkx()
        components = [len(c) for c in nx.connected_components(G)] if self.n else []
        return {
            "nodes": self.n,
            "edges": self.num_edges,
            "attributes": self.d,
            "components": len(components),
            "largest_component": max(components, default=0),
            "isolated_nodes": nx.number_of_isolates(G),
            "density": nx.density(G) if self.n > 1 else 0.0,
        }

    def has_edge(self, u: int, v: int) -> bool:
        return _normalize_edge(u, v) in self.edges

    def check_node(self, v: int) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
            raise ValueError(f"node index {v!r} is not valid for a graph with {self.n} nodes")
        return int(v)


class TargetKind(str, Enum):
    PLAIN = "plain"
    KHOP = "khop"
    OVERLAP_WEIGHTED = "overlap_weighted"


@dataclass(frozen=True, eq=False)
class ReconTarget:
    """Structure reconstruction objective: symmetric, zero diagonal, in [0, 1]."""
    kind: TargetKind
    M: np.ndarray
    k: int | None = None
    overlap_lambda: float | None = None

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def describe(self) -> str:
        if self.kind is TargetKind.KHOP:
            return f"khop(k={self.k})"
        if self.kind is TargetKind.OVERLAP_WEIGHTED:
            return f"overlap_weighted(lambda={self.overlap_lambda})"
        return "plain"


def _max_normalize(M: np.ndarray) -> np.ndarray:
    np.fill_diagonal(M, 0.0)
    peak = M.max() if M.size else 0.0
    if peak > 0:
        M /= peak
    M.setflags(write=False)
    return M


def _require_nonempty(G: AttributedGraph) -> None:
    if G.n == 0:
        raise EmptyGraphError("graph has no nodes")


def khop_target(G: AttributedGraph, k: int) -> ReconTarget:
    """Standardized k-th power of the 0/1 adjacency (walk counts, max-normalized)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _require_nonempty(G)
    A = np.array(G.adjacency)
    power = A.copy()
    for _ in range(k - 1):
        power = power @ A
    kind = TargetKind.PLAIN if k == 1 else TargetKind.KHOP
    return ReconTarget(kind=kind, M=_max_normalize(power), k=k)


def plain_target(G: AttributedGraph) -> ReconTarget:
    return khop_target(G, 1)


def overlap_weighted_adjacency(G: AttributedGraph, overlap_lambda: float = 1.0) -> ReconTarget:
    """Edge weights from the overlap of the endpoints' closed-neighbourhood subgraphs.

    For an edge (v, u) the overlap subgraph keeps the nodes common to both
    neighbourhood subgraphs and the edges common to both, i.e. the edges
    induced on the common nodes.
    """
    if overlap_lambda <= 0:
        raise ValueError(f"overlap_lambda must be > 0, got {overlap_lambda}")
    _require_nonempty(G)
    closed = [frozenset(G.neighbors[v]) | {v} for v in range(G.n)]
    M = np.zeros((G.n, G.n), dtype=np.float64)
    for v, u in G.sorted_edges:
        common = closed[v] & closed[u]
        size = len(common)
        if size < 2:
            continue
        common_edges = sum(1 for a in common for b in G.neighbors[a] if a < b and b in common)
        weight = common_edges / (size * (size - 1)) * size ** overlap_lambda
        M[v, u] = M[u, v] = weight
    return ReconTarget(kind=TargetKind.OVERLAP_WEIGHTED, M=_max_normalize(M), overlap_lambda=overlap_lambda)


def build_target(G: AttributedGraph, kind: TargetKind | str, k: int = 2,
                 overlap_lambda: float = 1.0) -> ReconTarget:
    kind = TargetKind(kind)
    if kind is TargetKind.PLAIN:
        return plain_target(G)
    if kind is TargetKind.KHOP:
        return khop_target(G, k)
    return overlap_weighted_adjacency(G, overlap_lambda)


def propagation_from_edges(n: int, edges: np.ndarray | Sequence[Edge]) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 for an n-node graph given as an edge array."""
    if n < 1:
        raise EmptyGraphError("propagation matrix needs at least one node")
    A = np.eye(n, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges):
        A[edges[:, 0], edges[:, 1]] = 1.0
        A[edges[:, 1], edges[:, 0]] = 1.0
    inv_sqrt = 1.0 / np.sqrt(A.sum(axis=1))
    return inv_sqrt[:, None] * A * inv_sqrt[None, :]


def propagation_matrix(G: AttributedGraph) -> np.ndarray:
    P = propagation_from_edges(G.n, G.sorted_edges)
    P.setflags(write=False)
    return P


# --- file formats ---

def _require_file(path: Path, artifact: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(artifact, path)
    return path


def _read_features(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError as e:
            raise GraphFormatError(f"{path}:{lineno}: non-numeric attribute ({e})") from e
        if rows and len(row) != len(rows[0]):
            raise GraphFormatError(
                f"{path}:{lineno}: ragged feature row with {len(row)} values, expected {len(rows[0])}")
        rows.append(row)
    X = np.array(rows, dtype=np.float64) if rows else np.zeros((0, 0))
    if not np.isfinite(X).all():
        raise GraphFormatError(f"{path}: non-finite attribute value")
    return X


def _read_edges(path: Path, n: int) -> list[Edge]:
    edges = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected two node indices, got {len(tokens)} tokens")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-integer edge token in {line!r}") from None
        for node in (u, v):
            if not 0 <= node < n:
                raise GraphFormatError(f"{path}:{lineno}: edge endpoint {node} outside [0, {n})")
        edges.append((u, v))
    return edges


def load_graph(edges_path, features_path, ids_path=None) -> AttributedGraph:
    """Reads an edge list and a feature CSV (line i = node i)."""
    features_path = _require_file(features_path, "features")
    edges_path = _require_file(edges_path, "edges")
    X = _read_features(features_path)
    n = X.shape[0]
    edges = _read_edges(edges_path, n)
    node_ids = None
    if ids_path is not None:
        node_ids = [line.strip() for line in _require_file(ids_path, "node ids").read_text().splitlines() if line.strip()]
    G = AttributedGraph.from_edge_list(n, edges, X, node_ids=node_ids)
    stats = G.summary()
    logger.info(f"Loaded graph with {G.n} nodes, {G.num_edges} edges, {G.d} attributes "
                f"({stats['components']} components, {stats['isolated_nodes']} isolated nodes).")
    return G


def save_graph(G: AttributedGraph, edges_path, features_path, ids_path=None) -> None:
    edges_path, features_path = Path(edges_path), Path(features_path)
    edges_path.parent.mkdir(parents=True, exist_ok=True)
    features_path.parent.mkdir(parents=True, exist_ok=True)
    edges_path.write_text("".join(f"{u} {v}\n" for u, v in G.sorted_edges))
    # repr() of a Python float is the shortest string that round-trips exactly
    features_path.write_text("".join(",".join(repr(float(x)) for x in row) + "\n" for row in G.X))
    if ids_path is not None and G.node_ids is not None:
        Path(ids_path).write_text("".join(f"{i}\n" for i in G.node_ids))


@dataclass(frozen=True)
class LabeledGroup:
    nodes: tuple[int, ...]
    pattern: str | None = None

    @property
    def node_set(self) -> frozenset:
        return frozenset(self.nodes)


class _GroupRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    nodes: list[int] = Field(min_length=1)
    pattern: str | None = None


def load_groups(path, n: int | None = None) -> list[LabeledGroup]:
    path = _require_file(path, "ground-truth groups")
    try:
        records = [_GroupRecord.model_validate(item) for item in json.loads(path.read_text())]
    except (json.JSONDecodeError, TypeError, ValidationError) as e:
        raise GraphFormatError(f"{path}: invalid ground-truth group file ({e})") from e
    groups = [LabeledGroup(nodes=tuple(r.nodes), pattern=r.pattern) for r in records]
    if n is not None:
        for g in groups:
            bad = [v for v in g.nodes if not 0 <= v < n]
            if bad:
                raise GraphFormatError(f"{path}: group node(s) {bad} outside [0, {n})")
    return groups


def save_groups(groups: Sequence[LabeledGroup], path) -> None:
    payload = [{"nodes": list(g.nodes), **({"pattern": g.pattern} if g.pattern else {})} for g in groups]
    Path(path).write_text(json.dumps(payload, indent=1))
