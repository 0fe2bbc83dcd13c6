import json

import networkx as nx
import numpy as np
import pytest

from grgad.config import PipelineConfig, build_config
from grgad.datagen import InjectionSpec, generate_base_graph, inject_anomaly_groups
from grgad.graph import AttributedGraph, save_graph, save_groups
from grgad.sampler import CandidateGroup, Provenance


@pytest.fixture
def make_graph():
    def _make(edges, n=None, d=3, seed=0, X=None):
        edges = [tuple(e) for e in edges]
        if n is None:
            n = 1 + max((max(e) for e in edges), default=-1)
        if X is None:
            X = np.random.default_rng(seed).normal(size=(n, d))
        return AttributedGraph.from_edge_list(n, edges, X)
    return _make


@pytest.fixture
def random_graph(make_graph):
    def _make(n, p, seed, d=3):
        G = nx.gnp_random_graph(n, p, seed=seed)
        return make_graph(G.edges, n=n, d=d, seed=seed)
    return _make


@pytest.fixture
def make_group():
    def _make(edges, nodes=None, provenance=Provenance.TREE):
        edges = tuple((min(u, v), max(u, v)) for u, v in edges)
        if nodes is None:
            nodes = sorted({v for e in edges for v in e})
        return CandidateGroup(tuple(nodes), edges, provenance)
    return _make


@pytest.fixture(scope="session")
def small_benchmark():
    base = generate_base_graph(n=80, avg_degree=2, d=6, seed=11)
    spec = InjectionSpec(num_groups=4, pattern_mix={"path": 0.4, "tree": 0.3, "cycle": 0.3},
                         size_range=(5, 7), noise_sigma=0.1, seed=11)
    return inject_anomaly_groups(base, spec)


@pytest.fixture
def fast_settings():
    """Tiny model sizes so a full pipeline run stays in the seconds range."""
    return {
        "mhgae": {"epochs": 15, "hidden": 8, "latent": 8},
        "anchors": {"fraction": 0.1},
        "sampler": {"tree_depth": 2, "max_tree_nodes": 12},
        "tpgcl": {"epochs": 2, "hidden": 8, "embedding_dim": 8, "critic_hidden": 8, "batch_size": 16},
        "output": {"charts": False},
    }


@pytest.fixture
def file_config(tmp_path, small_benchmark, fast_settings):
    """Config pointing at the small benchmark written as plain graph files."""
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    save_graph(small_benchmark.graph, data_dir / "edges.txt", data_dir / "features.csv")
    save_groups(small_benchmark.gt_groups, data_dir / "groups.json")

    def _make(out_name="run", **sections) -> PipelineConfig:
        payload = json.loads(json.dumps(fast_settings))
        payload["seed"] = 5
        payload["data"] = {"edges_path": str(data_dir / "edges.txt"),
                           "features_path": str(data_dir / "features.csv"),
                           "groups_path": str(data_dir / "groups.json")}
        payload["output"]["directory"] = str(tmp_path / out_name)
        for key, value in sections.items():
            payload.setdefault(key, {}).update(value)
        return build_config(payload)
    return _make
