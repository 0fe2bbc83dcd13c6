import numpy as np
import pytest

from grgad.errors import GraphFormatError, MissingArtifactError, NonFiniteError, ShapeError
from grgad.graph import propagation_from_edges
from grgad.ndiff import (AdamState, Param, SeededRng, adam_step, check_gradients, gcn_layer, gcn_layer_backward,
                         glorot_uniform, init_mlp2, load_checkpoint, mlp2, mlp2_backward, mlp2_forward,
                         save_checkpoint)


def _two_layer_objective(P, X, W1, W2, R):
    def objective(compute_grads):
        H, c1 = gcn_layer(P, X, W1, "relu")
        out, c2 = gcn_layer(P, H, W2, "identity")
        if compute_grads:
            dH = gcn_layer_backward(R, c2, W2)
            gcn_layer_backward(dH, c1, W1)
        return float((out * R).sum())
    return objective


class TestGcnLayer:
    def test_identity_weights_and_propagation(self):
        H = np.abs(np.random.default_rng(0).normal(size=(4, 3)))
        out, _ = gcn_layer(np.eye(4), H, Param("W", np.eye(3)))
        assert np.array_equal(out, H)

    @pytest.mark.parametrize("w, expected", [(-2.0, 0.0), (2.0, 6.0)])
    def test_single_node_relu(self, w, expected):
        out, _ = gcn_layer(np.array([[1.0]]), np.array([[3.0]]), Param("W", np.array([[w]])))
        assert out[0, 0] == expected

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            gcn_layer(np.eye(3), np.ones((3, 2)), Param("W", np.ones((3, 2))))
        with pytest.raises(ShapeError):
            gcn_layer(np.eye(2), np.ones((3, 2)), Param("W", np.ones((2, 2))))

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients(self, seed):
        rng = SeededRng(seed)
        n = 3 + seed % 5
        edges = [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]
        P = propagation_from_edges(n, edges)
        X = rng.normal(size=(n, 4))
        W1 = glorot_uniform(rng, 4, 5, "W1")
        W2 = glorot_uniform(rng, 5, 2, "W2")
        R = rng.normal(size=(n, 2))
        report = check_gradients(_two_layer_objective(P, X, W1, W2, R), [W1, W2])
        assert report.passed(1e-4), report.per_param
        assert report.checked > 0


class TestMlp2:
    def test_zero_weights_give_output_bias(self):
        params = [Param("W1", np.zeros((3, 4))), Param("b1", np.zeros(4)),
                  Param("W2", np.zeros((4, 1))), Param("b2", np.array([0.7]))]
        assert mlp2(np.array([1.0, -2.0, 5.0]), params) == 0.7

    def test_hand_computed(self):
        params = [Param("W1", np.array([[2.0], [-1.0]])), Param("b1", np.array([0.5])),
                  Param("W2", np.array([[3.0]])), Param("b2", np.array([1.0]))]
        # relu(2 - 1 + 0.5) * 3 + 1
        assert mlp2(np.array([1.0, 1.0]), params) == 5.5

    def test_init_names(self):
        assert [p.name for p in init_mlp2(SeededRng(0), 3, 4)] == ["phi.W1", "phi.b1", "phi.W2", "phi.b2"]

    @pytest.mark.parametrize("seed", range(10))
    def test_gradients_including_input(self, seed):
        rng = SeededRng(seed)
        params = init_mlp2(rng, 6, 7)
        params[1].value[:] = rng.normal(size=7)
        x = Param("x", rng.normal(size=(5, 6)))
        weights = rng.normal(size=5)

        def objective(compute_grads):
            out, cache = mlp2_forward(x.value, params)
            if compute_grads:
                x.grad += mlp2_backward(weights, cache, params)
            return float(out @ weights)

        assert check_gradients(objective, params + [x]).passed(1e-4)


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = Param("w", np.array([1.0, -2.0]))
        adam_step([p], AdamState(lr=0.1))
        assert p.value.tolist() == [1.0, -2.0]

    def test_first_step_moves_by_lr(self):
        p = Param("w", np.array([0.0]))
        p.grad[:] = 1.0
        adam_step([p], AdamState(lr=0.01))
        assert p.value[0] == pytest.approx(-0.01, rel=1e-6)

    def test_non_finite_gradient_names_param(self):
        p = Param("w", np.array([0.0, 0.0]))
        p.grad[0] = np.nan
        with pytest.raises(NonFiniteError, match="'w'"):
            adam_step([p], AdamState())

    def test_rejects_non_positive_lr(self):
        with pytest.raises(ValueError):
            AdamState(lr=0)

    def test_deterministic(self):
        def run():
            p = Param("w", np.array([0.3, -0.2]))
            state = AdamState(lr=0.05)
            for step in range(10):
                p.zero_grad()
                p.grad += 2 * p.value + step
                adam_step([p], state)
            return p.value
        assert np.array_equal(run(), run())


class TestCheckGradients:
    def test_linear_model_is_exact(self):
        C = np.random.default_rng(1).normal(size=(3, 4))
        W = Param("W", np.random.default_rng(2).normal(size=(3, 4)))

        def objective(compute_grads):
            if compute_grads:
                W.grad += C
            return float((W.value * C).sum())

        assert check_gradients(objective, [W]).max_rel_error < 1e-8

    def test_corrupted_gradient_is_reported(self):
        W = Param("W", np.random.default_rng(3).normal(size=(4, 4)))

        def objective(compute_grads):
            if compute_grads:
                W.grad += 2 * W.value * 1.5
            return float((W.value ** 2).sum())

        report = check_gradients(objective, [W])
        assert report.max_rel_error > 1e-2
        assert not report.passed()


class TestSeededRng:
    def test_same_seed_same_stream(self):
        assert np.array_equal(SeededRng(9).normal(size=5), SeededRng(9).normal(size=5))

    def test_children_are_independent_and_reproducible(self):
        root = SeededRng(4)
        assert np.array_equal(root.child(1, 2).uniform(0, 1, 3), SeededRng(4).child(1, 2).uniform(0, 1, 3))
        assert not np.array_equal(root.child(1).uniform(0, 1, 3), root.child(2).uniform(0, 1, 3))


class TestCheckpoint:
    def test_round_trip_is_exact(self, tmp_path):
        rng = SeededRng(0)
        params = [glorot_uniform(rng, 3, 2, "a"), Param("b", np.array([1 / 3, 1e-310]))]
        save_checkpoint(tmp_path / "m.json", params, seed=42, meta={"model": "x"})
        loaded, seed, meta = load_checkpoint(tmp_path / "m.json")
        assert seed == 42 and meta == {"model": "x"}
        for original, restored in zip(params, loaded):
            assert original.name == restored.name
            assert np.array_equal(original.value, restored.value)

    def test_missing(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            load_checkpoint(tmp_path / "absent.json")

    def test_wrong_header(self, tmp_path):
        (tmp_path / "m.json").write_text('{"format": "other", "version": 1}')
        with pytest.raises(GraphFormatError):
            load_checkpoint(tmp_path / "m.json")
