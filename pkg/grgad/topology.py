"""Deterministic BFS helpers and the fundamental cycle basis, shared by the
group sampler and the pattern decomposition.

Adjacency is a mapping node -> ascending neighbour sequence, so the same
routines work on the whole graph and on a group's own edge set.
"""
from collections import deque
from typing import Iterable, Mapping, Sequence

Edge = tuple[int, int]
Adjacency = Mapping[int, Sequence[int]]


def normalize_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def adjacency_from_edges(nodes: Iterable[int], edges: Iterable[Edge]) -> dict[int, tuple[int, ...]]:
    adj: dict[int, list[int]] = {int(v): [] for v in nodes}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return {v: tuple(sorted(set(nbrs))) for v, nbrs in sorted(adj.items())}


def bfs_distances(adj: Adjacency, source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def bfs_tree(adj: Adjacency, root: int, max_depth: int | None = None):
    """BFS tree visiting neighbours in ascending order.

    Returns (order, parent, depth); `parent[root]` is None.
    """
    parent: dict[int, int | None] = {root: None}
    depth = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        if max_depth is not None and depth[u] >= max_depth:
            continue
        for w in adj[u]:
            if w not in parent:
                parent[w] = u
                depth[w] = depth[u] + 1
                order.append(w)
                queue.append(w)
    return order, parent, depth


def bfs_forest(adj: Adjacency):
    """Spanning forest; each component rooted at its lowest-index node."""
    parent: dict[int, int | None] = {}
    depth: dict[int, int] = {}
    roots = []
    for root in sorted(adj):
        if root in parent:
            continue
        roots.append(root)
        _, p, d = bfs_tree(adj, root)
        parent.update(p)
        depth.update(d)
    return roots, parent, depth


def canonical_cycle(cycle: Sequence[int]) -> tuple[int, ...]:
    """Rotates to start at the smallest node, walking towards its smaller neighbour."""
    k = len(cycle)
    i = min(range(k), key=cycle.__getitem__)
    rotated = [cycle[(i + j) % k] for j in range(k)]
    if k > 2 and rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return tuple(rotated)


def cycle_edges(cycle: Sequence[int]) -> tuple[Edge, ...]:
    return tuple(normalize_edge(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle)))


def fundamental_cycles(adj: Adjacency) -> list[tuple[int, ...]]:
    """One cycle per chord of the BFS spanning forest, chords in sorted order.

    The basis size equals |E| - |V| + #components.
    """
    _, parent, depth = bfs_forest(adj)
    tree_edges = {normalize_edge(v, p) for v, p in parent.items() if p is not None}
    chords = sorted({normalize_edge(u, w) for u in adj for w in adj[u]} - tree_edges)
    cycles = []
    for u, v in chords:
        a, b = u, v
        left, right = [u], [v]
        while a != b:
            if depth[a] >= depth[b]:
                a = parent[a]
                left.append(a)
            else:
                b = parent[b]
                right.append(b)
        # both walks end at the lowest common ancestor
        cycles.append(canonical_cycle(left + right[-2::-1]))
    return cycles
