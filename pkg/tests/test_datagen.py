import numpy as np
import pytest
from pydantic import ValidationError

from grgad.datagen import InjectionSpec, generate_base_graph, inject_anomaly_groups, standard_benchmark
from grgad.errors import PlacementError
from grgad.patterns import find_patterns
from grgad.sampler import CandidateGroup, Provenance


def _induced(graph, nodes) -> CandidateGroup:
    members = set(nodes)
    edges = tuple(e for e in graph.sorted_edges if e[0] in members and e[1] in members)
    return CandidateGroup(tuple(nodes), edges, Provenance.TREE)


def _injected_only(bench, group) -> CandidateGroup:
    """The group with only its injected edges (the anchor keeps its base edges out)."""
    members = set(group.nodes)
    base_n = bench.base_n
    edges = tuple(e for e in bench.graph.sorted_edges
                  if e[0] in members and e[1] in members and e[1] >= base_n)
    return CandidateGroup(tuple(group.nodes), edges, Provenance.TREE)


class TestBaseGraph:
    def test_edge_counts(self):
        for seed in range(100):
            G = generate_base_graph(n=10, avg_degree=2, d=3, seed=seed)
            assert 10 <= G.num_edges <= 20
            assert G.X.shape == (10, 3)

    def test_same_seed_same_graph(self):
        a = generate_base_graph(n=50, avg_degree=3, d=4, seed=7)
        b = generate_base_graph(n=50, avg_degree=3, d=4, seed=7)
        assert a.edges == b.edges
        assert np.array_equal(a.X, b.X)

    def test_every_node_has_an_edge(self):
        G = generate_base_graph(n=40, avg_degree=1, d=2, seed=0)
        assert min(G.degree(v) for v in range(G.n)) >= 1

    @pytest.mark.parametrize("n, avg_degree, d", [(5, 2, 3), (10, 0.5, 3), (10, 10, 3), (10, 2, 0)])
    def test_invalid_arguments(self, n, avg_degree, d):
        with pytest.raises(ValueError):
            generate_base_graph(n=n, avg_degree=avg_degree, d=d, seed=0)


class TestInjectionSpec:
    @pytest.mark.parametrize("payload", [
        {"pattern_mix": {"path": 0.5, "tree": 0.4}},
        {"pattern_mix": {"path": 1.2, "tree": -0.2}},
        {"pattern_mix": {"star": 1.0}},
        {"size_range": (2, 5)},
        {"size_range": (6, 5)},
        {"num_groups": -1},
        {"unknown": 1},
    ])
    def test_rejects(self, payload):
        with pytest.raises(ValidationError):
            InjectionSpec(**payload)


class TestInjection:
    @classmethod
    def setup_class(cls):
        cls.base = generate_base_graph(n=30, avg_degree=2, d=3, seed=1)

    def test_zero_groups_leaves_graph_unchanged(self):
        bench = inject_anomaly_groups(self.base, InjectionSpec(num_groups=0))
        assert bench.graph is self.base
        assert bench.gt_groups == []

    def test_single_path(self):
        spec = InjectionSpec(num_groups=1, pattern_mix={"path": 1.0}, size_range=(5, 5), seed=2)
        bench = inject_anomaly_groups(self.base, spec)
        (group,) = bench.gt_groups
        assert group.pattern == "path" and len(group.nodes) == 5
        chain = _injected_only(bench, group)
        assert len(chain.induced_edges) == 4
        assert find_patterns(chain).paths[0] in (group.nodes, group.nodes[::-1])
        assert bench.graph.n == 34

    def test_zero_noise_copies_anchor(self):
        spec = InjectionSpec(num_groups=2, pattern_mix={"tree": 1.0}, size_range=(4, 6), noise_sigma=0.0, seed=3)
        bench = inject_anomaly_groups(self.base, spec)
        for group in bench.gt_groups:
            anchor = group.nodes[0]
            for v in group.nodes[1:]:
                assert np.array_equal(bench.graph.X[v], bench.graph.X[anchor])

    def test_base_graph_is_kept(self):
        bench = inject_anomaly_groups(self.base, InjectionSpec(num_groups=3, seed=4))
        assert self.base.edges <= bench.graph.edges
        assert np.array_equal(bench.graph.X[:self.base.n], self.base.X)

    def test_anchors_are_distinct(self):
        bench = inject_anomaly_groups(self.base, InjectionSpec(num_groups=20, seed=5))
        anchors = [next(v for v in g.nodes if v < bench.base_n) for g in bench.gt_groups]
        assert len(set(anchors)) == 20

    @pytest.mark.parametrize("kind", ["path", "tree", "cycle"])
    @pytest.mark.parametrize("size", range(3, 9))
    def test_every_size_yields_its_pattern(self, kind, size):
        spec = InjectionSpec(num_groups=3, pattern_mix={kind: 1.0}, size_range=(size, size), seed=size)
        bench = inject_anomaly_groups(self.base, spec)
        for group in bench.gt_groups:
            assert len(group.nodes) == size
            counts = find_patterns(_injected_only(bench, group)).counts()
            assert counts[kind] >= 1, (group.nodes, counts)

    def test_too_many_groups(self):
        base = generate_base_graph(n=10, avg_degree=2, d=2, seed=0)
        with pytest.raises(PlacementError):
            inject_anomaly_groups(base, InjectionSpec(num_groups=11, seed=0))


class TestStandardBenchmark:
    @classmethod
    def setup_class(cls):
        cls.bench = standard_benchmark(0)

    def test_shape(self):
        bench = self.bench
        assert bench.base_n == 1000
        assert len(bench.gt_groups) == 10
        assert bench.graph.n == 1000 + sum(len(g.nodes) - 1 for g in bench.gt_groups)
        assert bench.graph.d == 32
        assert all(5 <= len(g.nodes) <= 8 for g in bench.gt_groups)

    def test_injected_shape_matches_label(self):
        for group in self.bench.gt_groups:
            patterns = find_patterns(_injected_only(self.bench, group))
            if group.pattern == "cycle":
                assert len(patterns.cycles) == 1
                assert set(patterns.cycles[0]) == set(group.nodes)
            elif group.pattern == "path":
                assert set(patterns.paths[0]) == set(group.nodes)
            else:
                assert [t.root for t in patterns.trees][:1] == [group.nodes[0]]
                assert all(set(t.nodes) <= set(group.nodes) for t in patterns.trees)

    def test_reproducible(self):
        again = standard_benchmark(0)
        assert again.graph.edges == self.bench.graph.edges
        assert np.array_equal(again.graph.X, self.bench.graph.X)
        assert again.gt_groups == self.bench.gt_groups

    def test_seed_changes_benchmark(self):
        assert standard_benchmark(1).graph.edges != self.bench.graph.edges

    def test_induced_group_contains_pattern(self):
        for group in self.bench.gt_groups:
            assert _induced(self.bench.graph, group.nodes).induced_edges
