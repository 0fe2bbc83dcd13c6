import numpy as np
import pytest

from grgad.errors import DegenerateViewError
from grgad.graph import AttributedGraph
from grgad.ndiff import SeededRng
from grgad.patterns import (AddedNode, AugmentedView, PatternDecomposition, Polarity, TreePattern, find_patterns,
                            group_attributes, identity_view, make_views, negative_view, perturbed_view,
                            positive_view)
from grgad.sampler import GroupSampler
from grgad.topology import adjacency_from_edges, fundamental_cycles

PATH4 = [(0, 1), (1, 2), (2, 3)]
STAR3 = [(0, 1), (0, 2), (0, 3)]
TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def _cyclomatic(nodes, edges) -> int:
    return len(fundamental_cycles(adjacency_from_edges(nodes, edges)))


class TestFindPatterns:
    def test_path(self, make_group):
        patterns = find_patterns(make_group(PATH4))
        assert patterns.paths == ((0, 1, 2, 3),)
        assert patterns.trees == () and patterns.cycles == ()

    def test_star(self, make_group):
        patterns = find_patterns(make_group(STAR3))
        assert [t.root for t in patterns.trees] == [0]
        assert patterns.trees[0].children == (1, 2, 3)
        assert patterns.trees[0].nodes == (0, 1, 2, 3)
        assert patterns.paths == () and patterns.cycles == ()

    def test_orientation_starts_at_lowest_index(self, make_group):
        # centre 3 is reached from leaf 0, so 0 is its parent rather than a child
        patterns = find_patterns(make_group([(0, 3), (1, 3), (2, 3)]))
        assert [(t.root, t.children) for t in patterns.trees] == [(3, (1, 2))]

    @pytest.mark.parametrize("edges", [[(0, 1), (0, 2)], [(0, 1), (0, 2), (1, 3)]])
    def test_small_heap_trees(self, make_group, edges):
        patterns = find_patterns(make_group(edges))
        assert [(t.root, t.children) for t in patterns.trees] == [(0, (1, 2))]

    def test_triangle_with_pendant_chain(self, make_group):
        patterns = find_patterns(make_group(TRIANGLE + [(2, 3), (3, 4), (4, 5)]))
        assert patterns.cycles == ((0, 1, 2),)
        assert patterns.paths == ((2, 3, 4, 5),)
        assert patterns.trees == ()

    def test_single_edge_has_no_patterns(self, make_group):
        patterns = find_patterns(make_group([(0, 1)]))
        assert patterns.is_empty
        assert patterns.counts() == {"tree": 0, "path": 0, "cycle": 0}

    def test_chain_between_branches_is_not_a_path(self, make_group):
        # 1-0-2 and 5-4-6 are trees joined by the chain 0-3-4; neither end is free
        patterns = find_patterns(make_group([(0, 1), (0, 2), (0, 3), (3, 4), (4, 5), (4, 6)]))
        assert patterns.paths == ()
        assert len(patterns.trees) >= 1


class TestNegativeView:
    def test_path_drops_middle(self, make_group):
        group = make_group(PATH4)
        view = negative_view(group, find_patterns(group), SeededRng(0))
        assert view.nodes == (0, 1, 3)
        assert view.edges == ((0, 1),)

    def test_star_drops_root(self, make_group):
        group = make_group(STAR3)
        view = negative_view(group, find_patterns(group), SeededRng(0))
        assert view.nodes == (1, 2, 3)
        assert view.edges == ()

    def test_cycle_drops_two_nodes_deterministically(self, make_group):
        group = make_group(TRIANGLE)
        first = negative_view(group, find_patterns(group), SeededRng(7))
        second = negative_view(group, find_patterns(group), SeededRng(7))
        assert first.removed_nodes == second.removed_nodes
        assert len(first.removed_nodes) == 2

    def test_everything_dropped_is_degenerate(self, make_group):
        group = make_group([(0, 1)])
        patterns = PatternDecomposition(trees=(TreePattern(0, (1,), (0, 1), ((0, 1),)),
                                               TreePattern(1, (0,), (1, 0), ((0, 1),))))
        with pytest.raises(DegenerateViewError):
            negative_view(group, patterns, SeededRng(0))

    def test_negative_view_cannot_add(self, make_group):
        extra = AddedNode(label=4, attributes=np.zeros(2), attach_to=(0,))
        with pytest.raises(ValueError):
            AugmentedView(base=make_group(STAR3), polarity=Polarity.NEGATIVE, added_nodes=(extra,))


def _graph_for(group, d=2):
    n = max(group.nodes) + 1
    return AttributedGraph.from_edge_list(n, group.induced_edges, np.arange(n * d, dtype=float).reshape(n, d))


class TestPositiveView:
    def test_tree_child_is_mean_of_children(self, make_group, make_graph):
        edges = [(0, 1), (0, 2)]
        group = make_group(edges)
        G = make_graph(edges, X=np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 2.0]]))
        view = positive_view(group, find_patterns(group), G, SeededRng(0))
        (added,) = view.added_nodes
        assert added.attributes.tolist() == [2.0, 1.0]
        assert added.attach_to == (0,)
        assert added.label == G.n
        assert view.attributes(G.X)[-1].tolist() == [2.0, 1.0]

    def test_star_child_averages_every_leaf(self, make_group, make_graph):
        group = make_group(STAR3)
        X = np.array([[0.0, 0.0], [9.0, 9.0], [1.0, 0.0], [3.0, 2.0]])
        view = positive_view(group, find_patterns(group), make_graph(STAR3, X=X), SeededRng(0))
        (added,) = view.added_nodes
        np.testing.assert_allclose(added.attributes, [13 / 3, 11 / 3])

    def test_path_grows_at_lower_free_end(self, make_group):
        group = make_group(PATH4)
        G = _graph_for(group)
        view = positive_view(group, find_patterns(group), G, SeededRng(0))
        assert view.size == 5
        assert view.added_nodes[0].attach_to == (0,)
        np.testing.assert_allclose(view.added_nodes[0].attributes, G.X[:4].mean(axis=0))

    def test_cycle_bridge_joins_adjacent_nodes(self, make_group):
        group = make_group(TRIANGLE)
        view = positive_view(group, find_patterns(group), _graph_for(group), SeededRng(3))
        (added,) = view.added_nodes
        u, v = added.attach_to
        assert group.node_set >= {u, v} and u != v

    def test_no_patterns_means_unchanged(self, make_group):
        group = make_group([(0, 1)])
        view = positive_view(group, find_patterns(group), _graph_for(group), SeededRng(0))
        assert view.nodes == group.nodes
        assert view.edges == group.induced_edges

    def test_positive_view_cannot_remove(self, make_group):
        with pytest.raises(ValueError):
            AugmentedView(base=make_group(PATH4), polarity=Polarity.POSITIVE, removed_nodes=frozenset({1}))


class TestBaselineAugmentations:
    @classmethod
    def setup_class(cls):
        cls.edges = [(i, i + 1) for i in range(9)]

    def test_node_drop_never_empties(self, make_group):
        group = make_group([(0, 1)])
        for seed in range(10):
            view = perturbed_view(group, "node_drop", 0.9, 2, SeededRng(seed))
            assert view.size == 1

    def test_edge_remove(self, make_group):
        view = perturbed_view(make_group(self.edges), "edge_remove", 0.2, 2, SeededRng(0))
        assert len(view.removed_edges) == 2
        assert len(view.edges) == 7
        assert view.size == 10

    def test_feature_mask(self, make_group):
        group = make_group(self.edges)
        G = _graph_for(group, d=5)
        view = perturbed_view(group, "feature_mask", 0.4, 5, SeededRng(0))
        assert len(view.masked_dims) == 2
        assert not view.attributes(G.X)[:, list(view.masked_dims)].any()

    def test_unknown_kind(self, make_group):
        with pytest.raises(ValueError):
            perturbed_view(make_group(self.edges), "shuffle", 0.2, 2, SeededRng(0))

    def test_make_views_baseline_positive_is_identity(self, make_group):
        group = make_group(self.edges)
        positive, negative = make_views(group, None, _graph_for(group), SeededRng(0), "node_drop")
        assert positive.nodes == identity_view(group).nodes == group.nodes
        assert negative.polarity is Polarity.NEGATIVE


def test_group_attributes(make_group, make_graph):
    G = make_graph(PATH4, X=np.array([[0.0], [2.0], [4.0], [6.0]]))
    means = group_attributes([make_group([(0, 1)]), make_group(PATH4)], G)
    assert means[:, 0].tolist() == [1.0, 3.0]


def _check_views(group, G, seed):
    patterns = find_patterns(group)
    if patterns.is_empty:
        return
    rng = SeededRng(seed)
    positive = positive_view(group, patterns, G, rng)
    try:
        negative = negative_view(group, patterns, rng)
    except DegenerateViewError:
        return
    assert negative.size < group.size <= positive.size

    for tree in patterns.trees:
        assert tree.root not in negative.nodes
    for path in patterns.paths:
        assert path[len(path) // 2] not in negative.nodes
    if patterns.cycles:
        assert _cyclomatic(negative.nodes, negative.edges) < _cyclomatic(group.nodes, group.induced_edges)

    total = len(patterns.trees) + len(patterns.paths) + len(patterns.cycles)
    assert positive.size == group.size + total
    assert set(group.induced_edges) <= set(positive.edges)
    added = iter(positive.added_nodes)
    degree = {v: len(n) for v, n in adjacency_from_edges(group.nodes, group.induced_edges).items()}
    for tree in patterns.trees:
        assert next(added).attach_to == (tree.root,)
    for path in patterns.paths:
        (end,) = next(added).attach_to
        assert end in (path[0], path[-1]) and degree[end] == 1
    for cycle in patterns.cycles:
        u, v = next(added).attach_to
        i = cycle.index(u)
        assert v in (cycle[i - 1], cycle[(i + 1) % len(cycle)])


def _sampled_groups(bench, seed):
    G = bench.graph
    rng = np.random.default_rng(seed)
    anchors = {g.nodes[0] for g in bench.gt_groups} | set(rng.choice(G.n, 6, replace=False).tolist())
    return G, GroupSampler(G).sample(sorted(anchors), t=2)


def test_views_destroy_and_preserve_patterns(small_benchmark):
    G, groups = _sampled_groups(small_benchmark, 0)
    assert groups
    for i, group in enumerate(groups):
        _check_views(group, G, i)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_views_on_standard_benchmarks(seed):
    from grgad.datagen import standard_benchmark
    G, groups = _sampled_groups(standard_benchmark(seed), seed)
    for i, group in enumerate(groups):
        _check_views(group, G, i)
