"""Multi-hop graph autoencoder: per-node reconstruction errors against a
structure target, and anchor selection from those errors."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from grgad.config import MhGaeSettings
from grgad.errors import EmptyGraphError, ShapeError, TrainingDivergedError
from grgad.graph import AttributedGraph, ReconTarget, propagation_matrix
from grgad.ndiff import (AdamState, Param, SeededRng, adam_step, gcn_layer, gcn_layer_backward, glorot_uniform,
                         load_checkpoint, save_checkpoint, zero_grads)

logger = logging.getLogger(__name__)


@dataclass
class NodeErrorVector:
    r: np.ndarray
    r_stru: np.ndarray
    r_attr: np.ndarray
    recon_mix_lambda: float | None = None

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def total(self) -> float:
        return float(self.r.sum())


@dataclass
class MhGaeModel:
    """Two GCN encoder layers (d -> hidden -> latent) and a GCN attribute
    decoder (latent -> d). Structure is decoded as sigmoid(Z Z^T)."""
    enc_W1: Param
    enc_W2: Param
    attr_dec_W: Param
    config: MhGaeSettings
    loss_history: list[float] = field(default_factory=list)

    @classmethod
    def initialize(cls, d: int, config: MhGaeSettings, rng: SeededRng) -> "MhGaeModel":
        if d < 1:
            raise ShapeError("MH-GAE needs at least one attribute dimension")
        return cls(
            enc_W1=glorot_uniform(rng, d, config.hidden, "enc_W1"),
            enc_W2=glorot_uniform(rng, config.hidden, config.latent, "enc_W2"),
            attr_dec_W=glorot_uniform(rng, config.latent, d, "attr_dec_W"),
            config=config,
        )

    @property
    def params(self) -> list[Param]:
        return [self.enc_W1, self.enc_W2, self.attr_dec_W]

    @property
    def input_dim(self) -> int:
        return self.enc_W1.value.shape[0]

    def save(self, path, seed: int) -> None:
        save_checkpoint(path, self.params, seed, meta={"model": "mhgae", "config": self.config.model_dump(mode="json"),
                                                       "loss_history": self.loss_history})

    @classmethod
    def load(cls, path) -> tuple["MhGaeModel", int]:
        params, seed, meta = load_checkpoint(path)
        by_name = {p.name: p for p in params}
        model = cls(enc_W1=by_name["enc_W1"], enc_W2=by_name["enc_W2"], attr_dec_W=by_name["attr_dec_W"],
                    config=MhGaeSettings.model_validate(meta["config"]),
                    loss_history=list(meta.get("loss_history", [])))
        return model, seed


def decode_structure(Z: np.ndarray) -> np.ndarray:
    S = expit(Z @ Z.T)
    np.fill_diagonal(S, 0.0)
    return S


def _check_dims(model: MhGaeModel, G: AttributedGraph, T: ReconTarget) -> None:
    if G.n == 0:
        raise EmptyGraphError("cannot reconstruct an empty graph")
    if model.input_dim != G.d or model.attr_dec_W.value.shape[1] != G.d:
        raise ShapeError(f"model expects {model.input_dim} attributes, graph has {G.d}")
    if T.M.shape != (G.n, G.n):
        raise ShapeError(f"target is {T.M.shape}, graph has {G.n} nodes")


def _forward(model: MhGaeModel, P: np.ndarray, X: np.ndarray, M: np.ndarray, lam: float,
             compute_grads: bool = False) -> NodeErrorVector:
    H1, enc1 = gcn_layer(P, X, model.enc_W1, "relu")
    Z, enc2 = gcn_layer(P, H1, model.enc_W2, "identity")
    S = decode_structure(Z)
    diff = S - M
    r_stru = np.abs(diff).sum(axis=1)
    X_rec, dec = gcn_layer(P, Z, model.attr_dec_W, "identity")
    E = X_rec - X
    r_attr = np.sqrt((E ** 2).sum(axis=1))
    errors = NodeErrorVector(r=lam * r_stru + (1.0 - lam) * r_attr, r_stru=r_stru, r_attr=r_attr,
                             recon_mix_lambda=lam)
    if compute_grads:
        # S has a zeroed diagonal, so S * (1 - S) already masks it
        dQ = lam * np.sign(diff) * S * (1.0 - S)
        dZ = (dQ + dQ.T) @ Z
        nonzero = r_attr > 0
        scale = np.where(nonzero, 1.0 / np.where(nonzero, r_attr, 1.0), 0.0)
        dX_rec = (1.0 - lam) * E * scale[:, None]
        dZ += gcn_layer_backward(dX_rec, dec, model.attr_dec_W)
        dH1 = gcn_layer_backward(dZ, enc2, model.enc_W2)
        gcn_layer_backward(dH1, enc1, model.enc_W1)
    return errors


def reconstruction_errors(model: MhGaeModel, G: AttributedGraph, T: ReconTarget) -> NodeErrorVector:
    _check_dims(model, G, T)
    return _forward(model, propagation_matrix(G), G.X, T.M, model.config.recon_mix_lambda)


def mhgae_objective(model: MhGaeModel, G: AttributedGraph, T: ReconTarget):
    """Closure in the shape check_gradients expects: loss = sum_i r_i."""
    _check_dims(model, G, T)
    P = propagation_matrix(G)
    lam = model.config.recon_mix_lambda

    def objective(compute_grads: bool) -> float:
        return _forward(model, P, G.X, T.M, lam, compute_grads).total

    return objective


def train_mhgae(G: AttributedGraph, T: ReconTarget, config: MhGaeSettings,
                seed: int) -> tuple[MhGaeModel, NodeErrorVector]:
    """Full-batch Adam on L = sum_i r_i. Raises TrainingDivergedError on NaN."""
    if config.epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {config.epochs}")
    rng = SeededRng(seed)
    model = MhGaeModel.initialize(G.d, config, rng)
    _check_dims(model, G, T)
    P = propagation_matrix(G)
    lam = config.recon_mix_lambda
    state = AdamState(lr=config.lr)
    report_every = max(1, config.epochs // 10)
    logger.info(f"Training MH-GAE on {G.n} nodes against {T.describe()} target for {config.epochs} epochs.")
    for epoch in range(1, config.epochs + 1):
        zero_grads(model.params)
        loss = _forward(model, P, G.X, T.M, lam, compute_grads=True).total
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"MH-GAE loss became {loss} at epoch {epoch}")
        model.loss_history.append(loss)
        adam_step(model.params, state)
        if epoch % report_every == 0 or epoch == 1:
            logger.debug(f"MH-GAE epoch {epoch}/{config.epochs}: loss {loss:.6f}")

    errors = _forward(model, P, G.X, T.M, lam)
    if not np.isfinite(errors.r).all():
        raise TrainingDivergedError(f"MH-GAE errors became non-finite after epoch {config.epochs}")
    _log_tail_monotonicity(model.loss_history)
    logger.info(f"MH-GAE finished: loss {model.loss_history[0]:.4f} -> {errors.total:.4f}")
    return model, errors


def _log_tail_monotonicity(history: list[float]) -> None:
    tail = np.asarray(history[-max(2, len(history) // 10):])
    if len(tail) < 2:
        return
    increases = int((np.diff(tail) > 0).sum())
    if increases:
        logger.warning(f"MH-GAE loss rose in {increases} of the last {len(tail) - 1} epochs.")


def select_anchor_nodes(errors: NodeErrorVector | np.ndarray, fraction: float) -> list[int]:
    """The ceil(fraction * n) nodes with the largest error, lower index first
    on ties; returned sorted."""
    r = np.asarray(errors.r if isinstance(errors, NodeErrorVector) else errors, dtype=np.float64)
    if r.size == 0:
        raise EmptyGraphError("cannot select anchors from an empty error vector")
    if not 0 < fraction <= 1:
        raise ValueError(f"anchor fraction must be in (0, 1], got {fraction}")
    # rounding first keeps 0.3 * 10 from becoming 4
    count = math.ceil(round(fraction * r.size, 9))
    order = np.lexsort((np.arange(r.size), -r))
    return sorted(int(i) for i in order[:count])
