"""Dense networks in plain numpy: forward pass, reverse-mode gradients, Adam,
layer normalization and a diagonal Gaussian policy head.

Everything runs in float64. Inputs may be a single vector ``(in,)`` or a batch
``(B, in)``; gradients of a batch are summed over rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ACTIVATIONS = ("tanh", "relu", "identity")
LN_EPS = 1e-5
LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class MlpParams:
    """Parameters of a fully connected network.

    ``weights[i]`` has shape ``(layer_sizes[i+1], layer_sizes[i])``. Hidden
    layer ``i`` carries ``gains[i]``/``shifts[i]`` when ``layer_norm[i]`` is
    set; otherwise those slots hold empty arrays.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"
    layer_norm: tuple[bool, ...] = ()
    gains: list[np.ndarray] = field(default_factory=list)
    shifts: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        n_hidden = len(self.layer_sizes) - 2
        if not self.layer_norm:
            self.layer_norm = (False,) * n_hidden
        self.layer_norm = tuple(bool(f) for f in self.layer_norm)
        if not self.gains:
            self.gains = [np.ones(self.layer_sizes[i + 1]) if f else np.empty(0)
                          for i, f in enumerate(self.layer_norm)]
            self.shifts = [np.zeros(self.layer_sizes[i + 1]) if f else np.empty(0)
                           for i, f in enumerate(self.layer_norm)]
        self.validate()

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def validate(self) -> None:
        sizes = self.layer_sizes
        if len(sizes) < 2 or any(n < 1 for n in sizes):
            raise ShapeError(f"bad layer sizes {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("one weight matrix and bias per layer required")
        if len(self.layer_norm) != len(sizes) - 2:
            raise ShapeError("one layer-norm flag per hidden layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ShapeError(f"layer {i}: weight {w.shape}, bias {b.shape} vs sizes {sizes}")
        for i, flag in enumerate(self.layer_norm):
            want = (sizes[i + 1],) if flag else (0,)
            if self.gains[i].shape != want or self.shifts[i].shape != want:
                raise ShapeError(f"layer {i}: layer-norm parameters must have shape {want}")
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise NonFiniteError("non-finite parameter")

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in checkpoint order: per layer W, b, then gain/shift."""
        out = []
        for i in range(self.n_layers):
            out += [self.weights[i], self.biases[i]]
            if i < len(self.layer_norm) and self.layer_norm[i]:
                out += [self.gains[i], self.shifts[i]]
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        it = iter(arrays)
        weights, biases, gains, shifts = [], [], [], []
        for i in range(self.n_layers):
            weights.append(next(it))
            biases.append(next(it))
            if i < len(self.layer_norm):
                if self.layer_norm[i]:
                    gains.append(next(it))
                    shifts.append(next(it))
                else:
                    gains.append(np.empty(0))
                    shifts.append(np.empty(0))
        return MlpParams(self.layer_sizes, weights, biases, self.activation,
                         self.layer_norm, gains, shifts)

    def copy(self) -> "MlpParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def num_params(self) -> int:
        return sum(a.size for a in self.arrays())


def param_count(layer_sizes: Sequence[int], layer_norm: Sequence[bool] = ()) -> int:
    """Closed-form parameter count for an architecture."""
    total = sum(n_out * n_in + n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]))
    total += sum(2 * layer_sizes[i + 1] for i, f in enumerate(layer_norm) if f)
    return total


def init_mlp(layer_sizes: Sequence[int], rng: np.random.Generator, activation: str = "tanh",
             layer_norm: bool | Sequence[bool] = False) -> MlpParams:
    """Glorot-uniform weights, zero biases, unit gains and zero shifts."""
    sizes = tuple(int(n) for n in layer_sizes)
    if isinstance(layer_norm, (bool, np.bool_)):
        layer_norm = (bool(layer_norm),) * (len(sizes) - 2)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MlpParams(sizes, weights, biases, activation, tuple(layer_norm))


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0).astype(np.float64)
    return np.ones_like(z)


def _layer_norm_parts(x: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + LN_EPS)
    return (x - mu) * inv_std, inv_std


def layer_norm(x, gain, shift) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    gain = np.asarray(gain, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    if x.shape[-1] != gain.shape[-1] or gain.shape != shift.shape:
        raise ShapeError("layer_norm: input, gain and shift lengths differ")
    xhat, _ = _layer_norm_parts(x)
    return gain * xhat + shift


@dataclass
class _LayerCache:
    inp: np.ndarray
    z: np.ndarray
    a: np.ndarray | None = None
    xhat: np.ndarray | None = None
    inv_std: np.ndarray | None = None


@dataclass
class ForwardCache:
    layers: list[_LayerCache]
    single: bool


def mlp_forward(params: MlpParams, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.ndim != 2 or h.shape[1] != params.input_dim:
        raise ShapeError(f"input shape {x.shape} does not match input size {params.input_dim}")
    if not np.all(np.isfinite(h)):
        raise NonFiniteError("non-finite network input")
    layers = []
    last = params.n_layers - 1
    for i in range(params.n_layers):
        z = h @ params.weights[i].T + params.biases[i]
        if i == last:
            layers.append(_LayerCache(h, z))
            h = z
            break
        a = _act(params.activation, z)
        cache = _LayerCache(h, z, a)
        if params.layer_norm[i]:
            cache.xhat, cache.inv_std = _layer_norm_parts(a)
            h = params.gains[i] * cache.xhat + params.shifts[i]
        else:
            h = a
        layers.append(cache)
    return (h[0] if single else h), ForwardCache(layers, single)


def mlp_grad(params: MlpParams, cache: ForwardCache, upstream) -> tuple[MlpParams, np.ndarray]:
    """Gradients of ``sum(upstream * output)`` w.r.t. every parameter and the input.

    Returns the parameter gradients packed as an ``MlpParams`` and the input
    gradient (same shape as the forward input).
    """
    d = np.asarray(upstream, dtype=np.float64)
    if cache.single:
        d = d[None, :] if d.ndim == 1 else d
    out_shape = cache.layers[-1].z.shape
    if d.shape != out_shape:
        raise ShapeError(f"upstream shape {np.shape(upstream)} does not match output {out_shape}")
    n = params.n_layers
    dw, db = [None] * n, [None] * n
    dg = [np.empty(0) for _ in params.layer_norm]
    ds = [np.empty(0) for _ in params.layer_norm]
    for i in range(n - 1, -1, -1):
        lc = cache.layers[i]
        if i != n - 1:
            # d is the gradient w.r.t. this hidden layer's output
            if params.layer_norm[i]:
                dg[i] = (d * lc.xhat).sum(axis=0)
                ds[i] = d.sum(axis=0)
                dxhat = d * params.gains[i]
                d = lc.inv_std * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                                  - lc.xhat * (dxhat * lc.xhat).mean(axis=-1, keepdims=True))
            d = d * _act_grad(params.activation, lc.z, lc.a)
        dw[i] = d.T @ lc.inp
        db[i] = d.sum(axis=0)
        d = d @ params.weights[i]
    grads = MlpParams(params.layer_sizes, dw, db, params.activation, params.layer_norm, dg, ds)
    return grads, (d[0] if cache.single else d)


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    numeric_epsilon: float = 1e-8


def _arrays(p) -> list[np.ndarray]:
    return p.arrays() if isinstance(p, MlpParams) else [np.asarray(a, dtype=np.float64) for a in p]


def adam_init(params, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    arrs = _arrays(params)
    return AdamState([np.zeros_like(a) for a in arrs], [np.zeros_like(a) for a in arrs],
                     0, beta1, beta2, eps)


def adam_step(params, grads, adam: AdamState, lr: float):
    """One bias-corrected Adam descent step. Accepts ``MlpParams`` or lists of arrays."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    p_arrs, g_arrs = _arrays(params), _arrays(grads)
    if len(p_arrs) != len(g_arrs) or any(p.shape != g.shape for p, g in zip(p_arrs, g_arrs)):
        raise ShapeError("gradient structure does not match parameters")
    if len(adam.first_moment) != len(p_arrs) or any(
            m.shape != p.shape for m, p in zip(adam.first_moment, p_arrs)):
        raise ShapeError("Adam moments do not match parameters")
    if not all(np.all(np.isfinite(g)) for g in g_arrs):
        raise NonFiniteError("non-finite gradient, update rejected")
    t = adam.step_count + 1
    b1, b2, eps = adam.beta1, adam.beta2, adam.numeric_epsilon
    c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrs, g_arrs, adam.first_moment, adam.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        new_m.append(m)
        new_v.append(v)
    state = AdamState(new_m, new_v, t, b1, b2, eps)
    if isinstance(params, MlpParams):
        return params.with_arrays(new_p), state
    return new_p, state


@dataclass
class GaussianHead:
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.log_std = np.asarray(self.log_std, dtype=np.float64)
        if not np.all(np.isfinite(self.log_std)):
            raise NonFiniteError("non-finite log_std")

    @property
    def action_dim(self) -> int:
        return self.mean.shape[-1]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.mean + np.exp(self.log_std) * rng.standard_normal(self.mean.shape)


def clamp_log_std(log_std: np.ndarray) -> np.ndarray:
    return np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)


def gaussian_logprob(head: GaussianHead, action) -> float | np.ndarray:
    """Diagonal Gaussian log density; one value per row for batched means."""
    action = np.asarray(action, dtype=np.float64)
    if action.shape[-1] != head.action_dim:
        raise ShapeError(f"action dim {action.shape[-1]} != head dim {head.action_dim}")
    z = (action - head.mean) * np.exp(-head.log_std)
    lp = -0.5 * z * z - head.log_std - 0.5 * math.log(2.0 * math.pi)
    return lp.sum(axis=-1)


def gaussian_logprob_grads(head: GaussianHead, action) -> tuple[np.ndarray, np.ndarray]:
    """Per-row derivatives of the log density w.r.t. mean and log_std."""
    action = np.asarray(action, dtype=np.float64)
    inv_var = np.exp(-2.0 * head.log_std)
    diff = action - head.mean
    return diff * inv_var, diff * diff * inv_var - 1.0


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 * math.log(2.0 * math.pi * math.e)))
