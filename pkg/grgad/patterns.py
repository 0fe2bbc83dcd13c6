"""Topology patterns inside a group (trees, paths, cycles) and the
augmented views built from them.

A positive view grows every pattern by one node; a negative view breaks
every pattern by dropping nodes. The baseline augmentations (node drop,
edge removal, feature masking) perturb only the negative view.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

from grgad.errors import DegenerateViewError, EmptyGraphError
from grgad.graph import AttributedGraph, propagation_from_edges
from grgad.ndiff import SeededRng
from grgad.sampler import CandidateGroup
from grgad.topology import Edge, adjacency_from_edges, bfs_distances, bfs_tree, cycle_edges, fundamental_cycles

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreePattern:
    root: int
    children: tuple[int, ...]
    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]


@dataclass(frozen=True)
class PatternDecomposition:
    trees: tuple[TreePattern, ...] = ()
    paths: tuple[tuple[int, ...], ...] = ()
    cycles: tuple[tuple[int, ...], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.trees or self.paths or self.cycles)

    def counts(self) -> dict[str, int]:
        return {"tree": len(self.trees), "path": len(self.paths), "cycle": len(self.cycles)}


def find_patterns(group: CandidateGroup) -> PatternDecomposition:
    """Cycles first (fundamental basis of the group's edges); trees and
    paths are then read off the forest left after deleting cycle edges."""
    if not group.nodes:
        raise EmptyGraphError("cannot decompose an empty group")
    adj = adjacency_from_edges(group.nodes, group.induced_edges)
    cycles = fundamental_cycles(adj)
    on_cycle = {v for cycle in cycles for v in cycle}
    removed = {e for cycle in cycles for e in cycle_edges(cycle)}
    residual = adjacency_from_edges(group.nodes, [e for e in group.induced_edges if e not in removed])

    trees = []
    seen: set[int] = set()
    for start in residual:
        if start in seen:
            continue
        component = bfs_distances(residual, start)
        seen.update(component)
        order, parent, _ = bfs_tree(residual, min(component))
        children: dict[int, list[int]] = {w: [] for w in order}
        for w in order[1:]:
            children[parent[w]].append(w)
        for w in order:
            if len(children[w]) >= 2:
                subtree = _descendants(w, children)
                trees.append(TreePattern(root=w, children=tuple(children[w]), nodes=subtree,
                                         edges=tuple(_edge(parent[c], c) for c in subtree[1:])))

    paths = _chains(adj, residual, on_cycle)
    return PatternDecomposition(
        trees=tuple(sorted(trees, key=lambda t: (min(t.nodes), t.root))),
        paths=tuple(sorted(paths, key=lambda p: (min(p), p))),
        cycles=tuple(sorted(cycles)),
    )


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def _descendants(root: int, children: dict[int, list[int]]) -> tuple[int, ...]:
    out = [root]
    i = 0
    while i < len(out):
        out.extend(children[out[i]])
        i += 1
    return tuple(out)


def _chains(adj, residual, on_cycle) -> list[tuple[int, ...]]:
    """Maximal runs of residual-degree-2 nodes off every cycle, closed by their
    two outer neighbours; kept when at least one end is free (group degree 1)."""
    interior = {v for v, nbrs in residual.items() if len(nbrs) == 2 and v not in on_cycle}
    paths = []
    visited: set[int] = set()
    for v in sorted(interior):
        if v in visited:
            continue
        first, second = residual[v]
        left, left_end = _extend(v, first, residual, interior)
        right, right_end = _extend(v, second, residual, interior)
        chain = [left_end, *left[::-1], v, *right, right_end]
        visited.update(chain[1:-1])
        if len(adj[left_end]) != 1 and len(adj[right_end]) != 1:
            continue
        if right_end < left_end:
            chain.reverse()
        paths.append(tuple(chain))
    return paths


def _extend(prev: int, cur: int, residual, interior: set[int]) -> tuple[list[int], int]:
    """Walks away from `prev` through interior nodes; returns them and the first non-interior node."""
    run = []
    while cur in interior:
        run.append(cur)
        prev, cur = cur, next(w for w in residual[cur] if w != prev)
    return run, cur


# --- views ---

class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True, eq=False)
class AddedNode:
    label: int
    attributes: np.ndarray
    attach_to: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AugmentedView:
    base: CandidateGroup
    polarity: Polarity
    added_nodes: tuple[AddedNode, ...] = ()
    removed_nodes: frozenset = frozenset()
    removed_edges: frozenset = frozenset()
    masked_dims: tuple[int, ...] = ()

    def __post_init__(self):
        if self.polarity is Polarity.POSITIVE and (self.removed_nodes or self.removed_edges):
            raise ValueError("a positive view never removes anything")
        if self.polarity is Polarity.NEGATIVE and self.added_nodes:
            raise ValueError("a negative view never adds nodes")

    @cached_property
    def nodes(self) -> tuple[int, ...]:
        kept = tuple(v for v in self.base.nodes if v not in self.removed_nodes)
        return kept + tuple(a.label for a in self.added_nodes)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        kept = [e for e in self.base.induced_edges
                if e not in self.removed_edges and e[0] not in self.removed_nodes and e[1] not in self.removed_nodes]
        for added in self.added_nodes:
            kept.extend(_edge(added.label, w) for w in added.attach_to)
        return tuple(kept)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def as_group(self) -> CandidateGroup:
        return CandidateGroup(self.nodes, self.edges, self.base.provenance)

    def attributes(self, X: np.ndarray) -> np.ndarray:
        kept = [v for v in self.base.nodes if v not in self.removed_nodes]
        rows = X[kept] if kept else np.zeros((0, X.shape[1]))
        if self.added_nodes:
            rows = np.vstack([rows, *[a.attributes[None, :] for a in self.added_nodes]])
        else:
            rows = rows.copy()
        if self.masked_dims:
            rows[:, list(self.masked_dims)] = 0.0
        return rows

    def propagation(self) -> np.ndarray:
        index = {v: i for i, v in enumerate(self.nodes)}
        local = [(index[u], index[v]) for u, v in self.edges]
        return propagation_from_edges(len(index), local)


def identity_view(group: CandidateGroup, polarity: Polarity = Polarity.POSITIVE) -> AugmentedView:
    return AugmentedView(base=group, polarity=polarity)


def negative_view(group: CandidateGroup, patterns: PatternDecomposition, rng: SeededRng) -> AugmentedView:
    """Drops tree roots, path middles and two random nodes per cycle, jointly."""
    drop: set[int] = set()
    for tree in patterns.trees:
        drop.add(tree.root)
    for path in patterns.paths:
        drop.add(path[len(path) // 2])
    for cycle in patterns.cycles:
        picks = rng.choice(len(cycle), size=2, replace=False)
        drop.update(cycle[int(i)] for i in sorted(picks))
    if len(drop) >= group.size:
        raise DegenerateViewError(f"negative view of group {group.nodes[:5]}... would be empty")
    return AugmentedView(base=group, polarity=Polarity.NEGATIVE, removed_nodes=frozenset(drop))


def positive_view(group: CandidateGroup, patterns: PatternDecomposition, G: AttributedGraph,
                  rng: SeededRng) -> AugmentedView:
    """Adds one node per pattern: a child at each tree root, a neighbour at
    each path's lower-index free end, and a node bridging two adjacent
    cycle nodes. New nodes are labelled G.n, G.n + 1, ..."""
    degree = {v: len(nbrs) for v, nbrs in adjacency_from_edges(group.nodes, group.induced_edges).items()}
    added: list[AddedNode] = []

    def add(attributes: np.ndarray, attach_to: tuple[int, ...]) -> None:
        added.append(AddedNode(label=G.n + len(added), attributes=attributes, attach_to=attach_to))

    for tree in patterns.trees:
        add(G.X[list(tree.children)].mean(axis=0), (tree.root,))
    for path in patterns.paths:
        free_ends = [e for e in (path[0], path[-1]) if degree[e] == 1]
        add(G.X[list(path)].mean(axis=0), (min(free_ends),))
    for cycle in patterns.cycles:
        i = int(rng.integers(len(cycle)))
        add(G.X[list(cycle)].mean(axis=0), (cycle[i], cycle[(i + 1) % len(cycle)]))
    return AugmentedView(base=group, polarity=Polarity.POSITIVE, added_nodes=tuple(added))


def perturbed_view(group: CandidateGroup, kind: str, ratio: float, d: int, rng: SeededRng) -> AugmentedView:
    """Random negative view for the baseline augmentations."""
    if kind == "node_drop":
        count = min(max(1, round(ratio * group.size)), group.size - 1)
        picks = rng.choice(group.size, size=count, replace=False) if count > 0 else []
        return AugmentedView(base=group, polarity=Polarity.NEGATIVE,
                             removed_nodes=frozenset(group.nodes[int(i)] for i in picks))
    if kind == "edge_remove":
        edges = group.induced_edges
        count = min(max(1, round(ratio * len(edges))), len(edges))
        picks = rng.choice(len(edges), size=count, replace=False) if count > 0 else []
        return AugmentedView(base=group, polarity=Polarity.NEGATIVE,
                             removed_edges=frozenset(edges[int(i)] for i in picks))
    if kind == "feature_mask":
        count = min(max(1, round(ratio * d)), d)
        dims = rng.choice(d, size=count, replace=False)
        return AugmentedView(base=group, polarity=Polarity.NEGATIVE, masked_dims=tuple(sorted(int(i) for i in dims)))
    raise ValueError(f"unknown augmentation {kind!r}")


def make_views(group: CandidateGroup, patterns: PatternDecomposition | None, G: AttributedGraph, rng: SeededRng,
               augmentation: str = "pattern", perturb_ratio: float = 0.2) -> tuple[AugmentedView, AugmentedView]:
    """(positive, negative) pair for one group."""
    if augmentation == "pattern":
        if patterns is None:
            patterns = find_patterns(group)
        return positive_view(group, patterns, G, rng), negative_view(group, patterns, rng)
    return identity_view(group), perturbed_view(group, augmentation, perturb_ratio, G.d, rng)


def group_attributes(groups: Sequence[CandidateGroup], G: AttributedGraph) -> np.ndarray:
    """Mean attribute vector per group."""
    return np.vstack([G.X[list(g.nodes)].mean(axis=0) for g in groups]) if groups else np.zeros((0, G.d))
