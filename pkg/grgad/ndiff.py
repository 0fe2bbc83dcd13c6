"""Small dense differentiable core: GCN layers and a two-layer MLP with
hand-derived gradients, Adam, finite-difference gradient checks and a JSON
checkpoint format. Everything runs in float64."""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from grgad.errors import GraphFormatError, MissingArtifactError, NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "grgad.checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class Param:
    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.value = np.ascontiguousarray(self.value, dtype=np.float64).copy()
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


class SeededRng:
    """Deterministic generator: numpy's PCG64 bit generator seeded with a
    64-bit integer. Streams are identical across platforms for the same seed."""
    ALGORITHM = "PCG64"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, *tags: int) -> "SeededRng":
        """Independent stream derived from this seed and the given tags."""
        state = np.random.SeedSequence([self.seed % 2**64, *tags]).generate_state(1, dtype=np.uint64)
        return SeededRng(int(state[0]))

    def uniform(self, low, high, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self.generator.permutation(x)


def glorot_uniform(rng: SeededRng, fan_in: int, fan_out: int, name: str) -> Param:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Param(name, rng.uniform(-limit, limit, (fan_in, fan_out)))


# --- GCN layer ---

@dataclass
class GcnCache:
    P: np.ndarray
    PH: np.ndarray
    pre: np.ndarray
    activation: str


def gcn_layer(P: np.ndarray, H: np.ndarray, W: Param, activation: str = "relu") -> tuple[np.ndarray, GcnCache]:
    """act(P @ H @ W); ReLU for hidden layers, identity for output layers."""
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[1] != H.shape[0]:
        raise ShapeError(f"propagation {P.shape} does not conform with activations {H.shape}")
    if H.shape[1] != W.value.shape[0]:
        raise ShapeError(f"activations {H.shape} do not conform with weight '{W.name}' {W.value.shape}")
    if activation not in ("relu", "identity"):
        raise ValueError(f"unknown activation {activation!r}")
    PH = P @ H
    pre = PH @ W.value
    out = np.maximum(pre, 0.0) if activation == "relu" else pre
    return out, GcnCache(P=P, PH=PH, pre=pre, activation=activation)


def gcn_layer_backward(grad_out: np.ndarray, cache: GcnCache, W: Param) -> np.ndarray:
    """Accumulates dL/dW into W.grad and returns dL/dH."""
    dpre = grad_out * (cache.pre > 0) if cache.activation == "relu" else grad_out
    W.grad += cache.PH.T @ dpre
    return cache.P.T @ (dpre @ W.value.T)


# --- two-layer MLP with scalar output ---

@dataclass
class Mlp2Cache:
    X: np.ndarray
    pre: np.ndarray
    hidden: np.ndarray


def init_mlp2(rng: SeededRng, in_dim: int, hidden: int, prefix: str = "phi") -> list[Param]:
    return [
        glorot_uniform(rng, in_dim, hidden, f"{prefix}.W1"),
        Param(f"{prefix}.b1", np.zeros(hidden)),
        glorot_uniform(rng, hidden, 1, f"{prefix}.W2"),
        Param(f"{prefix}.b2", np.zeros(1)),
    ]


def mlp2_forward(X: np.ndarray, params: Sequence[Param]) -> tuple[np.ndarray, Mlp2Cache]:
    """Row-wise relu(X W1 + b1) W2 + b2; returns one scalar per row."""
    W1, b1, W2, b2 = params
    if X.ndim != 2 or X.shape[1] != W1.value.shape[0]:
        raise ShapeError(f"input {X.shape} does not conform with '{W1.name}' {W1.value.shape}")
    pre = X @ W1.value + b1.value
    hidden = np.maximum(pre, 0.0)
    out = (hidden @ W2.value)[:, 0] + b2.value[0]
    return out, Mlp2Cache(X=X, pre=pre, hidden=hidden)


def mlp2_backward(grad_out: np.ndarray, cache: Mlp2Cache, params: Sequence[Param]) -> np.ndarray:
    W1, b1, W2, b2 = params
    W2.grad += cache.hidden.T @ grad_out[:, None]
    b2.grad += grad_out.sum()
    dpre = (grad_out[:, None] * W2.value[:, 0][None, :]) * (cache.pre > 0)
    W1.grad += cache.X.T @ dpre
    b1.grad += dpre.sum(axis=0)
    return dpre @ W1.value.T


def mlp2(x: np.ndarray, params: Sequence[Param]) -> float:
    out, _ = mlp2_forward(np.asarray(x, dtype=np.float64)[None, :], params)
    return float(out[0])


# --- optimizer ---

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")


def adam_step(params: Sequence[Param], state: AdamState) -> None:
    """One bias-corrected Adam update using each param's accumulated grad."""
    for p in params:
        if not np.isfinite(p.grad).all():
            raise NonFiniteError(f"non-finite gradient in parameter '{p.name}' at step {state.t + 1}")
    state.t += 1
    bias1 = 1.0 - state.beta1 ** state.t
    bias2 = 1.0 - state.beta2 ** state.t
    for p in params:
        m = state.m.setdefault(p.name, np.zeros_like(p.value))
        v = state.v.setdefault(p.name, np.zeros_like(p.value))
        m *= state.beta1
        m += (1.0 - state.beta1) * p.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * p.grad ** 2
        p.value -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        if not np.isfinite(p.value).all():
            raise NonFiniteError(f"parameter '{p.name}' became non-finite at step {state.t}")


def zero_grads(params: Sequence[Param]) -> None:
    for p in params:
        p.zero_grad()


# --- gradient checking ---

@dataclass
class GradientReport:
    max_rel_error: float
    per_param: dict[str, float]
    checked: int
    kinks: int

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_rel_error < tolerance


def check_gradients(objective: Callable[[bool], float], params: Sequence[Param], tolerance: float = 1e-4,
                    step: float = 1e-5, samples_per_param: int = 8, seed: int = 0,
                    scale_floor: float = 1e-3) -> GradientReport:
    """Compares analytic gradients with central differences on sampled entries.

    `objective(compute_grads)` returns the loss for the current parameter
    values and, when `compute_grads` is true, accumulates analytic gradients
    into the params. An entry whose central difference disagrees but whose
    analytic value matches a one-sided difference sits on a ReLU kink and is
    counted separately.
    """
    zero_grads(params)
    objective(True)
    analytic = {p.name: p.grad.copy() for p in params}
    base = objective(False)
    rng = SeededRng(seed)
    per_param: dict[str, float] = {}
    checked = kinks = 0
    for p in params:
        flat = p.value.reshape(-1)
        grads = analytic[p.name].reshape(-1)
        if flat.size <= samples_per_param:
            indices = np.arange(flat.size)
        else:
            indices = np.sort(rng.choice(flat.size, samples_per_param, replace=False))
        worst = 0.0
        for i in indices:
            original = flat[i]
            flat[i] = original + step
            f_plus = objective(False)
            flat[i] = original - step
            f_minus = objective(False)
            flat[i] = original
            a = grads[i]
            central = (f_plus - f_minus) / (2 * step)
            denom = max(abs(a), abs(central), scale_floor)
            err = abs(a - central) / denom
            if err > tolerance:
                one_sided = min(abs(a - (f_plus - base) / step), abs(a - (base - f_minus) / step)) / denom
                if one_sided <= tolerance:
                    kinks += 1
                    err = one_sided
            worst = max(worst, err)
            checked += 1
        per_param[p.name] = worst
    if kinks:
        logger.info(f"Gradient check skipped {kinks} entries sitting on a ReLU kink.")
    return GradientReport(max_rel_error=max(per_param.values(), default=0.0), per_param=per_param,
                          checked=checked, kinks=kinks)


# --- checkpoints ---

def save_checkpoint(path, params: Sequence[Param], seed: int, meta: dict | None = None) -> None:
    """JSON layout: format tag, version, seed, free-form meta and the
    parameters as {name, shape, values (row-major)}."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "rng": SeededRng.ALGORITHM,
        "seed": int(seed),
        "meta": meta or {},
        "params": [{"name": p.name, "shape": list(p.value.shape),
                    "values": [float(x) for x in p.value.ravel()]} for p in params],
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path) -> tuple[list[Param], int, dict]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError("model checkpoint", path)
    try:
        payload = json.loads(path.read_text())
        if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint header {payload.get('format')!r} v{payload.get('version')!r}")
        params = []
        for record in payload["params"]:
            values = np.array(record["values"], dtype=np.float64)
            params.append(Param(record["name"], values.reshape(record["shape"])))
    except (KeyError, TypeError, ValueError) as e:
        raise GraphFormatError(f"{path}: invalid checkpoint ({e})") from e
    return params, int(payload["seed"]), payload.get("meta", {})
