"""Contrastive group encoder trained on pattern-preserving (positive) and
pattern-breaking (negative) views.

The objective is the Donsker-Varadhan form evaluated inside a minibatch:
    L = -(1/m) sum_i phi(p_i, n_i) + log((1/m) sum_i sum_{j != i} exp(phi(p_i, n_j)))
It is minimized jointly over the GCN encoder and the critic phi.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from grgad.config import TpgclSettings
from grgad.errors import (DegenerateViewError, EmptyGraphError, InsufficientGroupsError, ShapeError,
                          TrainingDivergedError)
from grgad.graph import AttributedGraph
from grgad.ndiff import (AdamState, Param, SeededRng, adam_step, gcn_layer, gcn_layer_backward, glorot_uniform,
                         init_mlp2, load_checkpoint, mlp2_backward, mlp2_forward, save_checkpoint, zero_grads)
from grgad.patterns import AugmentedView, PatternDecomposition, find_patterns, identity_view, make_views
from grgad.sampler import CandidateGroup

logger = logging.getLogger(__name__)


@dataclass
class TpgclModel:
    enc_W1: Param
    enc_W2: Param
    phi: list[Param]
    config: TpgclSettings
    loss_history: list[float] = field(default_factory=list)

    @classmethod
    def initialize(cls, d: int, config: TpgclSettings, rng: SeededRng) -> "TpgclModel":
        return cls(
            enc_W1=glorot_uniform(rng, d, config.hidden, "enc_W1"),
            enc_W2=glorot_uniform(rng, config.hidden, config.embedding_dim, "enc_W2"),
            phi=init_mlp2(rng, 2 * config.embedding_dim, config.critic_hidden),
            config=config,
        )

    @property
    def encoder_params(self) -> list[Param]:
        return [self.enc_W1, self.enc_W2]

    @property
    def params(self) -> list[Param]:
        return self.encoder_params + self.phi

    @property
    def embedding_dim(self) -> int:
        return self.enc_W2.value.shape[1]

    def save(self, path, seed: int) -> None:
        save_checkpoint(path, self.params, seed, meta={"model": "tpgcl", "config": self.config.model_dump(mode="json"),
                                                       "loss_history": self.loss_history})

    @classmethod
    def load(cls, path) -> tuple["TpgclModel", int]:
        params, seed, meta = load_checkpoint(path)
        by_name = {p.name: p for p in params}
        phi = [by_name[f"phi.{k}"] for k in ("W1", "b1", "W2", "b2")]
        model = cls(enc_W1=by_name["enc_W1"], enc_W2=by_name["enc_W2"], phi=phi,
                    config=TpgclSettings.model_validate(meta["config"]),
                    loss_history=list(meta.get("loss_history", [])))
        return model, seed


# --- encoder ---

def _encode(model: TpgclModel, P: np.ndarray, H: np.ndarray):
    if H.shape[0] == 0:
        raise EmptyGraphError("cannot embed an empty view")
    if H.shape[1] != model.enc_W1.value.shape[0]:
        raise ShapeError(f"view has {H.shape[1]} attributes, encoder expects {model.enc_W1.value.shape[0]}")
    H1, c1 = gcn_layer(P, H, model.enc_W1, "relu")
    Z, c2 = gcn_layer(P, H1, model.enc_W2, "identity")
    return Z.mean(axis=0), (c1, c2, H.shape[0])


def _encode_backward(grad_emb: np.ndarray, cache, model: TpgclModel) -> None:
    c1, c2, count = cache
    dZ = np.broadcast_to(grad_emb / count, (count, grad_emb.shape[0]))
    dH1 = gcn_layer_backward(dZ, c2, model.enc_W2)
    gcn_layer_backward(dH1, c1, model.enc_W1)


def group_embedding(model: TpgclModel, view: AugmentedView | CandidateGroup, G: AttributedGraph) -> np.ndarray:
    """Two GCN layers over the view's own normalized adjacency, mean-pooled."""
    if isinstance(view, CandidateGroup):
        view = identity_view(view)
    emb, _ = _encode(model, view.propagation(), view.attributes(G.X))
    return emb


# --- objective ---

def _pair_inputs(emb_p: np.ndarray, emb_n: np.ndarray) -> np.ndarray:
    """Row i*m + j is the concatenation (p_i, n_j)."""
    m = emb_p.shape[0]
    return np.hstack([np.repeat(emb_p, m, axis=0), np.tile(emb_n, (m, 1))])


def mine_loss_from_scores(T: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and dL/dT for a critic score matrix T[i, j] = phi(p_i, n_j)."""
    m = T.shape[0]
    if T.ndim != 2 or T.shape[1] != m:
        raise ShapeError(f"critic scores must be square, got {T.shape}")
    if m < 2:
        raise InsufficientGroupsError(f"the objective needs at least 2 pairs, got {m}")
    off = ~np.eye(m, dtype=bool)
    off_scores = T[off]
    loss = -float(np.mean(np.diag(T))) + float(logsumexp(off_scores)) - math.log(m)
    grad = np.zeros_like(T)
    np.fill_diagonal(grad, -1.0 / m)
    grad[off] = softmax(off_scores)
    return loss, grad


def _critic(emb_p: np.ndarray, emb_n: np.ndarray, phi: Sequence[Param], compute_grads: bool):
    m = emb_p.shape[0]
    if emb_n.shape[0] != m:
        raise ShapeError(f"{m} positive but {emb_n.shape[0]} negative embeddings")
    scores, cache = mlp2_forward(_pair_inputs(emb_p, emb_n), phi)
    loss, dT = mine_loss_from_scores(scores.reshape(m, m))
    if not compute_grads:
        return loss, None, None
    d_pairs = mlp2_backward(dT.ravel(), cache, phi).reshape(m, m, -1)
    e = emb_p.shape[1]
    return loss, d_pairs[:, :, :e].sum(axis=1), d_pairs[:, :, e:].sum(axis=0)


def mine_loss(emb_p, emb_n, phi: Sequence[Param]) -> float:
    loss, _, _ = _critic(np.asarray(emb_p, dtype=np.float64), np.asarray(emb_n, dtype=np.float64), phi, False)
    return loss


def batch_objective(model: TpgclModel, pairs: Sequence[tuple[AugmentedView, AugmentedView]], G: AttributedGraph):
    """Closure over one minibatch of (positive, negative) views; returns the
    loss and, on request, accumulates gradients into encoder and critic."""
    inputs = [[(view.propagation(), view.attributes(G.X)) for view in pair] for pair in pairs]

    def objective(compute_grads: bool) -> float:
        encoded = [[_encode(model, P, H) for P, H in pair] for pair in inputs]
        emb_p = np.vstack([pos[0] for pos, _ in encoded])
        emb_n = np.vstack([neg[0] for _, neg in encoded])
        loss, d_p, d_n = _critic(emb_p, emb_n, model.phi, compute_grads)
        if compute_grads:
            for i, (pos, neg) in enumerate(encoded):
                _encode_backward(d_p[i], pos[1], model)
                _encode_backward(d_n[i], neg[1], model)
        return loss

    return objective


# --- training ---

def _batches(items: list, size: int) -> list[list]:
    batches = [items[k:k + size] for k in range(0, len(items), size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        batches[-2].extend(batches.pop())
    return batches


def train_tpgcl(groups: Sequence[CandidateGroup], G: AttributedGraph, config: TpgclSettings,
                seed: int) -> TpgclModel:
    if len(groups) < 2:
        raise InsufficientGroupsError(f"contrastive training needs at least 2 groups, got {len(groups)}")
    rng = SeededRng(seed)
    model = TpgclModel.initialize(G.d, config, rng.child(0))
    patterns: list[PatternDecomposition | None] = (
        [find_patterns(g) for g in groups] if config.augmentation == "pattern" else [None] * len(groups))
    state = AdamState(lr=config.lr)
    logger.info(f"Training TPGCL on {len(groups)} groups ({config.augmentation} views) "
                f"for {config.epochs} epochs, batch {config.batch_size}.")
    for epoch in range(1, config.epochs + 1):
        view_rng = rng.child(1, epoch)
        order = rng.child(2, epoch).permutation(len(groups))
        pairs, skipped = [], 0
        for idx in order:
            try:
                pairs.append(make_views(groups[idx], patterns[idx], G, view_rng,
                                        config.augmentation, config.perturb_ratio))
            except DegenerateViewError:
                skipped += 1
        if skipped:
            logger.info(f"TPGCL epoch {epoch}: skipped {skipped} groups with a degenerate negative view.")
        if len(pairs) < 2:
            raise InsufficientGroupsError(f"only {len(pairs)} usable groups after view generation")

        losses = []
        for batch in _batches(pairs, config.batch_size):
            zero_grads(model.params)
            loss = batch_objective(model, batch, G)(True)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"TPGCL loss became {loss} at epoch {epoch}")
            adam_step(model.params, state)
            losses.append(loss)
        model.loss_history.append(float(np.mean(losses)))
        logger.debug(f"TPGCL epoch {epoch}/{config.epochs}: loss {model.loss_history[-1]:.6f}")
    logger.info(f"TPGCL finished: loss {model.loss_history[0]:.4f} -> {model.loss_history[-1]:.4f}")
    return model


def embed_all(model: TpgclModel, groups: Sequence[CandidateGroup], G: AttributedGraph) -> list[tuple[int, np.ndarray]]:
    """Embeds each original group; group ids are list positions."""
    return [(i, group_embedding(model, g, G)) for i, g in enumerate(groups)]


def embedding_matrix(embedded: Sequence[tuple[int, np.ndarray]]) -> np.ndarray:
    return np.vstack([e for _, e in embedded]) if embedded else np.zeros((0, 0))


# --- stand-alone estimator ---

def estimate_mutual_information(x: np.ndarray, y: np.ndarray, hidden: int = 64, epochs: int = 200,
                                lr: float = 5e-3, batch_size: int = 256, holdout: float = 0.2,
                                seed: int = 0) -> float:
    """Trains a critic on paired samples and returns the Donsker-Varadhan
    lower bound (in nats) measured on held-out pairs."""
    x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
    y = np.asarray(y, dtype=np.float64).reshape(len(y), -1)
    if len(x) != len(y):
        raise ShapeError(f"{len(x)} x samples but {len(y)} y samples")
    rng = SeededRng(seed)
    order = rng.permutation(len(x))
    n_test = max(2, int(round(holdout * len(x))))
    test, train = order[:n_test], order[n_test:]
    if len(train) < 2:
        raise InsufficientGroupsError("not enough samples to train the critic")
    phi = init_mlp2(rng.child(0), x.shape[1] + y.shape[1], hidden)
    state = AdamState(lr=lr)
    for epoch in range(epochs):
        shuffled = train[rng.child(1, epoch).permutation(len(train))]
        for batch in _batches(list(shuffled), batch_size):
            zero_grads(phi)
            _critic(x[batch], y[batch], phi, compute_grads=True)
            adam_step(phi, state)
    estimates = []
    for batch in _batches(list(test), batch_size):
        loss = mine_loss(x[batch], y[batch], phi)
        estimates.append(-loss + math.log(len(batch) - 1))
    estimate = float(np.mean(estimates))
    logger.info(f"Mutual information estimate on {len(test)} held-out pairs: {estimate:.4f} nats")
    return estimate
