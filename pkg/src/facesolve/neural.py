"""Fully-connected residual regressors written directly on numpy: forward,
reverse-mode gradients, Adam, dropout, and L2, with optional low-dimensional
jaw conditioning concatenated after the residual blocks."""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "NetworkArch",
    "Network",
    "TrainConfig",
    "InputStandardizer",
    "init_network",
    "forward",
    "loss_and_grad",
    "adam_step",
    "save_network",
    "load_network",
    "train_loop",
]

MODEL_FORMAT_VERSION = 1
_LEAK = 0.01  # leaky-rectifier slope


@dataclass(frozen=True)
class NetworkArch:
    input_dim: int
    rb_dim: int
    n_rb: int
    output_dim: int
    jaw_cond: bool = False
    jaw_dim: int = 3
    dropout: float = 0.0

    def __post_init__(self):
        if min(self.input_dim, self.rb_dim, self.n_rb, self.output_dim) < 1:
            raise ValidationError("all architecture dims must be >= 1")
        if self.jaw_cond and self.jaw_dim < 1:
            raise ValidationError("jaw_dim must be >= 1 when jaw-conditioned")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout rate must lie in [0, 1)")

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {
            "w_in": (self.input_dim, self.rb_dim),
            "b_in": (self.rb_dim,),
        }
        for i in range(self.n_rb):
            shapes[f"w{i}a"] = (self.rb_dim, self.rb_dim)
            shapes[f"b{i}a"] = (self.rb_dim,)
            shapes[f"w{i}b"] = (self.rb_dim, self.rb_dim)
            shapes[f"b{i}b"] = (self.rb_dim,)
        if self.jaw_cond:
            shapes["w_jaw"] = (self.rb_dim + self.jaw_dim, self.rb_dim)
            shapes["b_jaw"] = (self.rb_dim,)
        shapes["w_out"] = (self.rb_dim, self.output_dim)
        shapes["b_out"] = (self.output_dim,)
        return shapes


@dataclass
class Network:
    arch: NetworkArch
    params: dict[str, np.ndarray]
    init_seed: int = 0


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 64
    epochs: int = 300
    l2: float = 1e-5
    dropout: float = 0.01
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValidationError("lr > 0, batch_size >= 1, epochs >= 1 required")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ValidationError("validation_fraction must lie in [0, 0.5]")


@dataclass
class InputStandardizer:
    mean: np.ndarray
    std: np.ndarray  # floored at 1e-8

    @classmethod
    def fit(cls, x: np.ndarray) -> "InputStandardizer":
        return cls(x.mean(axis=0), np.maximum(x.std(axis=0), 1e-8))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


def _act(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, _LEAK * z)


def _act_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, _LEAK)


def init_network(arch: NetworkArch, seed: int) -> Network:
    """Fan-in-scaled uniform weights, zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in arch.param_shapes().items():
        if name.startswith("w"):
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, shape)
        else:
            params[name] = np.zeros(shape)
    return Network(arch, params, init_seed=seed)


def _forward_cached(net: Network, x: np.ndarray, jaw: np.ndarray | None,
                    dropout: float = 0.0, rng: np.random.Generator | None = None):
    """Batched forward pass keeping intermediates for backprop.

    Dropout (inverted) is applied to each residual block's hidden activation
    when a rate and rng are supplied.
    """
    arch, p = net.arch, net.params
    cache: dict[str, np.ndarray] = {"x": x}
    z_in = x @ p["w_in"] + p["b_in"]
    h = _act(z_in)
    cache["z_in"] = z_in
    for i in range(arch.n_rb):
        z_a = h @ p[f"w{i}a"] + p[f"b{i}a"]
        a = _act(z_a)
        if dropout > 0.0 and rng is not None:
            mask = (rng.random(a.shape) >= dropout) / (1.0 - dropout)
            a = a * mask
            cache[f"mask{i}"] = mask
        h_next = h + a @ p[f"w{i}b"] + p[f"b{i}b"]
        cache[f"h{i}"], cache[f"z{i}a"], cache[f"a{i}"] = h, z_a, a
        h = h_next
    cache["h_blocks"] = h
    if arch.jaw_cond:
        if jaw is None:
            raise ValidationError("network is jaw-conditioned but no jaw values supplied")
        hj = np.concatenate([h, jaw], axis=1)
        z_jaw = hj @ p["w_jaw"] + p["b_jaw"]
        h = _act(z_jaw)
        cache["hj"], cache["z_jaw"] = hj, z_jaw
    elif jaw is not None:
        raise ValidationError("jaw values supplied to a non-conditioned network")
    out = h @ p["w_out"] + p["b_out"]
    cache["h_out"] = h
    return out, cache


def forward(net: Network, features: np.ndarray, jaw: np.ndarray | None = None,
            train_mode: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
    """Raw (unclamped) regression output. Accepts a single vector or a batch."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
        if jaw is not None:
            jaw = np.asarray(jaw, dtype=np.float64)[None, :]
    if x.shape[1] != net.arch.input_dim:
        raise ValidationError(
            f"feature length {x.shape[1]} != network input dim {net.arch.input_dim}"
        )
    dropout = net.arch.dropout if train_mode else 0.0
    out, _ = _forward_cached(net, x, jaw, dropout=dropout, rng=rng if train_mode else None)
    return out[0] if single else out


def _backward(net: Network, cache: dict, d_out: np.ndarray) -> dict[str, np.ndarray]:
    arch, p = net.arch, net.params
    grads: dict[str, np.ndarray] = {}
    grads["w_out"] = cache["h_out"].T @ d_out
    grads["b_out"] = d_out.sum(axis=0)
    dh = d_out @ p["w_out"].T
    if arch.jaw_cond:
        dz = dh * _act_grad(cache["z_jaw"])
        grads["w_jaw"] = cache["hj"].T @ dz
        grads["b_jaw"] = dz.sum(axis=0)
        dh = (dz @ p["w_jaw"].T)[:, : arch.rb_dim]  # jaw inputs are constants
    for i in reversed(range(arch.n_rb)):
        da = dh @ p[f"w{i}b"].T
        grads[f"w{i}b"] = cache[f"a{i}"].T @ dh
        grads[f"b{i}b"] = dh.sum(axis=0)
        if f"mask{i}" in cache:
            da = da * cache[f"mask{i}"]
        dz = da * _act_grad(cache[f"z{i}a"])
        grads[f"w{i}a"] = cache[f"h{i}"].T @ dz
        grads[f"b{i}a"] = dz.sum(axis=0)
        dh = dh + dz @ p[f"w{i}a"].T  # skip connection adds straight through
    dz = dh * _act_grad(cache["z_in"])
    grads["w_in"] = cache["x"].T @ dz
    grads["b_in"] = dz.sum(axis=0)
    return grads


def loss_and_grad(net: Network, features: np.ndarray, targets: np.ndarray,
                  jaw: np.ndarray | None = None, l2: float = 0.0,
                  dropout: float = 0.0, rng: np.random.Generator | None = None):
    """Mean-squared-error + l2 * ||params||^2 and its parameter gradients."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValidationError("empty batch")
    out, cache = _forward_cached(net, x, jaw, dropout=dropout, rng=rng)
    resid = out - y
    mse = float(np.mean(resid**2))
    d_out = 2.0 * resid / resid.size
    grads = _backward(net, cache, d_out)
    penalty = 0.0
    for name, value in net.params.items():
        penalty += float(np.sum(value**2))
        grads[name] = grads[name] + 2.0 * l2 * value
    return mse + l2 * penalty, grads


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(net: Network, grads: dict[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    state.t += 1
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        state.m[name] = beta1 * state.m[name] + (1 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1 - beta2) * g * g
        m_hat = state.m[name] / (1 - beta1**state.t)
        v_hat = state.v[name] / (1 - beta2**state.t)
        net.params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def train_loop(net: Network, x: np.ndarray, y: np.ndarray, cfg: TrainConfig,
               jaw: np.ndarray | None = None) -> list[dict]:
    """Adam mini-batch training; returns per-epoch history records.

    The validation split is the contiguous tail (whole-clip blocks stay
    together when clips are concatenated in order).
    """
    n = x.shape[0]
    n_val = int(round(cfg.validation_fraction * n))
    n_train = n - n_val
    if n_train < 1:
        raise ValidationError("no training samples after validation split")
    xt, yt = x[:n_train], y[:n_train]
    jt = jaw[:n_train] if jaw is not None else None
    xv, yv = x[n_train:], y[n_train:]
    jv = jaw[n_train:] if jaw is not None else None

    rng = np.random.default_rng(cfg.seed)
    state = AdamState()
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_train)
        losses = []
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grad(
                net, xt[idx], yt[idx],
                jaw=jt[idx] if jt is not None else None,
                l2=cfg.l2, dropout=cfg.dropout, rng=rng,
            )
            adam_step(net, grads, state, cfg.lr)
            losses.append(loss)
        record = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if n_val:
            val_out = forward(net, xv, jaw=jv)
            record["val_loss"] = float(np.mean((val_out - yv) ** 2))
        history.append(record)
    return history


def _encode(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(s: str, shape: tuple[int, ...]) -> np.ndarray:
    raw = base64.b64decode(s.encode("ascii"))
    a = np.frombuffer(raw, dtype="<f8")
    if a.size != int(np.prod(shape)):
        raise ParseError(f"parameter blob has {a.size} values, expected shape {shape}")
    return a.reshape(shape).copy()


def save_network(net: Network, standardizer: InputStandardizer) -> dict:
    """Model document: JSON header + base64 little-endian float64 blobs.

    Doubles (not the more compact float32) so that save -> load -> forward is
    bitwise identical to the in-memory network.
    """
    arch = net.arch
    return {
        "version": MODEL_FORMAT_VERSION,
        "arch": {
            "input_dim": arch.input_dim, "rb_dim": arch.rb_dim, "n_rb": arch.n_rb,
            "output_dim": arch.output_dim, "jaw_cond": arch.jaw_cond,
            "jaw_dim": arch.jaw_dim, "dropout": arch.dropout,
        },
        "init_seed": net.init_seed,
        "standardizer": {"mean": _encode(standardizer.mean), "std": _encode(standardizer.std)},
        "params": {name: _encode(value) for name, value in net.params.items()},
    }


def load_network(document: dict) -> tuple[Network, InputStandardizer]:
    if not isinstance(document, dict) or "version" not in document:
        raise ParseError("$.version: missing")
    if document["version"] != MODEL_FORMAT_VERSION:
        raise ParseError(
            f"$.version: incompatible model format {document['version']}, "
            f"expected {MODEL_FORMAT_VERSION}"
        )
    try:
        a = document["arch"]
        arch = NetworkArch(
            input_dim=int(a["input_dim"]), rb_dim=int(a["rb_dim"]), n_rb=int(a["n_rb"]),
            output_dim=int(a["output_dim"]), jaw_cond=bool(a["jaw_cond"]),
            jaw_dim=int(a["jaw_dim"]), dropout=float(a["dropout"]),
        )
        params = {
            name: _decode(document["params"][name], shape)
            for name, shape in arch.param_shapes().items()
        }
        std_doc = document["standardizer"]
        mean = _decode(std_doc["mean"], (arch.input_dim,))
        std = _decode(std_doc["std"], (arch.input_dim,))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"model document malformed: {exc}") from exc
    return Network(arch, params, init_seed=int(document.get("init_seed", 0))), InputStandardizer(mean, std)
