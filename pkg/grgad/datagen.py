"""Synthetic benchmarks: a clustered random base graph plus injected anomaly
groups shaped as paths, binary trees or rings around one anchor node each."""
import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from grgad.errors import PlacementError
from grgad.graph import AttributedGraph, LabeledGroup
from grgad.ndiff import SeededRng
from grgad.topology import Edge, normalize_edge

logger = logging.getLogger(__name__)

PATTERNS = ("path", "tree", "cycle")
NUM_CLUSTERS = 4
CLUSTER_SCALE = 3.0


class InjectionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    num_groups: int = Field(10, ge=0)
    pattern_mix: dict[str, float] = Field(default_factory=lambda: {"path": 0.4, "tree": 0.3, "cycle": 0.3})
    size_range: tuple[int, int] = (5, 8)
    noise_sigma: float = Field(0.1, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        unknown = set(self.pattern_mix) - set(PATTERNS)
        if unknown:
            raise ValueError(f"unknown patterns in mix: {sorted(unknown)}")
        if any(p < 0 for p in self.pattern_mix.values()):
            raise ValueError("pattern probabilities must be non-negative")
        if not math.isclose(sum(self.pattern_mix.values()), 1.0, abs_tol=1e-9):
            raise ValueError(f"pattern mix sums to {sum(self.pattern_mix.values())}, expected 1")
        low, high = self.size_range
        if low < 3 or high < low:
            raise ValueError(f"size range {self.size_range} must satisfy 3 <= min <= max")
        return self


@dataclass(frozen=True, eq=False)
class LabeledBenchmark:
    graph: AttributedGraph
    gt_groups: list[LabeledGroup]
    base_n: int
    spec: InjectionSpec | None = None


def generate_base_graph(n: int, avg_degree: float, d: int, seed: int) -> AttributedGraph:
    """Each node links to ceil(avg_degree) distinct random partners; node
    attributes come from one of four Gaussian clusters."""
    if n < 10:
        raise ValueError(f"base graph needs n >= 10, got {n}")
    if avg_degree < 1 or math.ceil(avg_degree) > n - 1:
        raise ValueError(f"avg_degree must be in [1, n - 1], got {avg_degree}")
    if d < 1:
        raise ValueError(f"attribute dimension must be >= 1, got {d}")
    rng = SeededRng(seed)
    k = math.ceil(avg_degree)
    edges: set[Edge] = set()
    for v in range(n):
        partners = rng.choice(n - 1, size=k, replace=False)
        for u in partners:
            u = int(u) + (int(u) >= v)  # skip v itself
            edges.add(normalize_edge(v, u))
    centers = rng.normal(0.0, CLUSTER_SCALE, (NUM_CLUSTERS, d))
    membership = rng.integers(0, NUM_CLUSTERS, n)
    X = centers[membership] + rng.normal(0.0, 1.0, (n, d))
    return AttributedGraph(n=n, edges=frozenset(edges), X=X)


def _realize(kind: str, anchor: int, new: list[int]) -> tuple[list[int], list[Edge]]:
    size = len(new) + 1
    if kind == "path":
        mid = size // 2
        members = new[:mid] + [anchor] + new[mid:]
        edges = [normalize_edge(a, b) for a, b in zip(members, members[1:])]
    elif kind == "tree":
        # heap layout: parent of position k is (k - 1) // 2
        members = [anchor] + new
        edges = [normalize_edge(members[(k - 1) // 2], members[k]) for k in range(1, size)]
    else:
        members = [anchor] + new
        edges = [normalize_edge(members[k], members[(k + 1) % size]) for k in range(size)]
    return members, edges


def inject_anomaly_groups(G: AttributedGraph, spec: InjectionSpec) -> LabeledBenchmark:
    if spec.num_groups == 0:
        return LabeledBenchmark(graph=G, gt_groups=[], base_n=G.n, spec=spec)
    rng = SeededRng(spec.seed)
    kinds = [k for k in PATTERNS if k in spec.pattern_mix]
    probs = np.array([spec.pattern_mix[k] for k in kinds])
    low, high = spec.size_range
    max_retries = 100 * spec.num_groups
    retries = 0
    used: set[int] = set()
    next_label = G.n
    new_edges: list[Edge] = []
    new_rows: list[np.ndarray] = []
    groups: list[LabeledGroup] = []
    for gi in range(spec.num_groups):
        stream = rng.child(gi)
        kind = kinds[int(stream.choice(len(kinds), p=probs))]
        size = int(stream.integers(low, high + 1))
        anchor = int(stream.integers(G.n))
        while anchor in used:
            retries += 1
            if retries > max_retries:
                raise PlacementError(f"could not place {spec.num_groups} disjoint groups "
                                     f"after {max_retries} anchor retries")
            anchor = int(stream.integers(G.n))
        used.add(anchor)
        new = list(range(next_label, next_label + size - 1))
        next_label += size - 1
        members, edges = _realize(kind, anchor, new)
        new_edges.extend(edges)
        new_rows.append(G.X[anchor] + stream.normal(0.0, spec.noise_sigma, (size - 1, G.d)))
        groups.append(LabeledGroup(nodes=tuple(members), pattern=kind))
        logger.debug(f"Injected {kind} group of {size} nodes at anchor {anchor}.")
    X = np.vstack([G.X, *new_rows])
    graph = AttributedGraph(n=next_label, edges=G.edges | frozenset(new_edges), X=X)
    logger.info(f"Injected {len(groups)} anomaly groups; graph grew from {G.n} to {graph.n} nodes.")
    return LabeledBenchmark(graph=graph, gt_groups=groups, base_n=G.n, spec=spec)


def standard_benchmark(seed: int) -> LabeledBenchmark:
    base = generate_base_graph(n=1000, avg_degree=5, d=32, seed=seed)
    spec = InjectionSpec(num_groups=10, pattern_mix={"path": 0.4, "tree": 0.3, "cycle": 0.3},
                         size_range=(5, 8), noise_sigma=0.1, seed=seed)
    return inject_anomaly_groups(base, spec)
