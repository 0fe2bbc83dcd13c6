"""Candidate group sampling around anchor nodes: shortest paths between
anchor pairs, depth-bounded BFS trees and fundamental cycles.

With unit edge weights a Bellman-Ford shortest path is a BFS shortest path,
so everything here is breadth-first.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

from grgad.config import SamplerSettings
from grgad.graph import AttributedGraph
from grgad.topology import Edge, bfs_distances, bfs_tree, cycle_edges, fundamental_cycles, normalize_edge

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    PATH = "path"
    TREE = "tree"
    CYCLE = "cycle"


@dataclass(frozen=True)
class CandidateGroup:
    """A sampled group. `induced_edges` are the edges of the pattern that
    produced it (path, tree or cycle edges)."""
    nodes: tuple[int, ...]
    induced_edges: tuple[Edge, ...]
    provenance: Provenance
    anchors: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("a candidate group needs at least one node")
        members = set(self.nodes)
        if len(members) != len(self.nodes):
            raise ValueError(f"duplicate nodes in group {self.nodes}")
        for u, v in self.induced_edges:
            if u not in members or v not in members:
                raise ValueError(f"edge ({u}, {v}) leaves group {self.nodes}")
        if not set(self.anchors) <= members:
            raise ValueError(f"anchors {self.anchors} are not members of group {self.nodes}")
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @property
    def node_set(self) -> frozenset:
        return frozenset(self.nodes)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def dedup_key(self) -> tuple[frozenset, Provenance]:
        return self.node_set, self.provenance


class GroupSampler:
    """Searches on one graph, caching BFS distances, BFS trees and the cycle basis."""

    def __init__(self, G: AttributedGraph, settings: SamplerSettings | None = None):
        self.G = G
        self.settings = settings or SamplerSettings()
        self._adj = dict(enumerate(G.neighbors))
        self._distances = lru_cache(maxsize=None)(self._distances_from)
        self._trees = lru_cache(maxsize=None)(self._tree_from)
        self._basis: list[tuple[int, ...]] | None = None

    def _distances_from(self, target: int) -> dict[int, int]:
        return bfs_distances(self._adj, target)

    def _tree_from(self, root: int, depth: int):
        order, parent, depths = bfs_tree(self._adj, root, max_depth=depth)
        keep_priority = sorted(order, key=lambda w: (depths[w], w))
        return order, parent, keep_priority

    @property
    def basis(self) -> list[tuple[int, ...]]:
        if self._basis is None:
            self._basis = fundamental_cycles(self._adj)
            logger.debug(f"Cycle basis of the graph has {len(self._basis)} cycles.")
        return self._basis

    def path_search(self, v: int, mu: int) -> CandidateGroup | None:
        v, mu = self.G.check_node(v), self.G.check_node(mu)
        if v == mu:
            raise ValueError(f"path search needs two distinct nodes, got {v} twice")
        dist = self._distances(mu)
        if v not in dist or dist[v] + 1 > self.settings.max_path_len:
            return None
        # stepping to the lowest-index neighbour one hop closer gives the
        # lexicographically smallest shortest path
        nodes = [v]
        current = v
        while current != mu:
            current = next(w for w in self._adj[current] if dist.get(w) == dist[current] - 1)
            nodes.append(current)
        edges = tuple(normalize_edge(a, b) for a, b in zip(nodes, nodes[1:]))
        return CandidateGroup(tuple(nodes), edges, Provenance.PATH, anchors=(v, mu))

    def tree_search(self, v: int, mu: int, t: int) -> CandidateGroup | None:
        v, mu = self.G.check_node(v), self.G.check_node(mu)
        if t < 1:
            raise ValueError(f"tree depth must be >= 1, got {t}")
        order, parent, keep_priority = self._trees(v, t)
        if mu not in parent:
            return None
        cap = self.settings.max_tree_nodes
        if len(order) > cap:
            # dropping the deepest, highest-index nodes first keeps a subtree;
            # mu and its ancestors are never dropped
            protected = set()
            node = mu
            while node is not None:
                protected.add(node)
                node = parent[node]
            kept = set(protected)
            for w in keep_priority:
                if len(kept) >= cap:
                    break
                kept.add(w)
            order = [w for w in order if w in kept]
        edges = tuple(normalize_edge(parent[w], w) for w in order[1:])
        anchors = (v,) if v == mu else (v, mu)
        return CandidateGroup(tuple(order), edges, Provenance.TREE, anchors=anchors)

    def cycle_search(self, v: int) -> list[CandidateGroup]:
        v = self.G.check_node(v)
        return [CandidateGroup(cycle, cycle_edges(cycle), Provenance.CYCLE, anchors=(v,))
                for cycle in self.basis
                if v in cycle and len(cycle) <= self.settings.max_cycle_len]

    def sample(self, anchors: Sequence[int], t: int | None = None) -> list[CandidateGroup]:
        if not len(anchors):
            raise ValueError("anchor set is empty")
        anchors = [self.G.check_node(a) for a in anchors]
        t = self.settings.tree_depth if t is None else t
        seen: set = set()
        groups: list[CandidateGroup] = []

        def keep(group: CandidateGroup | None) -> None:
            if group is not None and group.dedup_key not in seen:
                seen.add(group.dedup_key)
                groups.append(group)

        for v in anchors:
            for mu in anchors:
                if v == mu:
                    continue
                keep(self.path_search(v, mu))
                keep(self.tree_search(v, mu, t))
            for group in self.cycle_search(v):
                keep(group)
        counts = {kind.value: sum(g.provenance is kind for g in groups) for kind in Provenance}
        logger.info(f"Sampled {len(groups)} candidate groups from {len(anchors)} anchors: {counts}")
        return groups


@lru_cache(maxsize=8)
def _sampler(G: AttributedGraph, settings: SamplerSettings) -> GroupSampler:
    return GroupSampler(G, settings)


def path_search(G: AttributedGraph, v: int, mu: int, settings: SamplerSettings | None = None):
    return _sampler(G, settings or SamplerSettings()).path_search(v, mu)


def tree_search(G: AttributedGraph, v: int, mu: int, t: int, settings: SamplerSettings | None = None):
    return _sampler(G, settings or SamplerSettings()).tree_search(v, mu, t)


def cycle_search(G: AttributedGraph, v: int, settings: SamplerSettings | None = None) -> list[CandidateGroup]:
    return _sampler(G, settings or SamplerSettings()).cycle_search(v)


def sample_candidate_groups(G: AttributedGraph, anchors: Sequence[int], t: int | None = None,
                            settings: SamplerSettings | None = None) -> list[CandidateGroup]:
    return _sampler(G, settings or SamplerSettings()).sample(anchors, t)
