"""Hypergraph wavelet convolution layer with an analytic backward pass.

Per layer and scale s::

    Z_s  = Psi_s  diag(g[s])  Psi_s^-1  X
    Xmid = mean_s Z_s
    Xout = act(Xmid @ w)

``Psi_s`` / ``Psi_s^-1`` are the bank's forward/inverse polynomial filters.
Both are polynomials in the symmetric L~, hence symmetric, so the adjoint
pass reuses the same filters.  ``spectral=False`` drops the two wavelet
operators (the "without wavelet" ablation).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .spectral import WaveletFilterBank

ACTIVATIONS = ("relu", "identity", "tanh")


def activate(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "identity":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def activate_grad(kind: str, pre: np.ndarray, out: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return (pre > 0).astype(float)
    if kind == "tanh":
        return 1.0 - out * out
    return np.ones_like(pre)


@dataclass
class WaveConvParams:
    weights: list[np.ndarray]  # per layer [d_in, d_out]
    g_theta: list[np.ndarray]  # per layer [S, n_nodes]
    activation: str = "relu"
    spectral: bool = True

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def token(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        for a in (*self.weights, *self.g_theta):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.digest()

    def check_finite(self) -> None:
        for i, (w, g) in enumerate(zip(self.weights, self.g_theta)):
            if not np.all(np.isfinite(w)):
                raise ValueError(f"layer {i} channel weights contain NaN/inf")
            if not np.all(np.isfinite(g)):
                raise ValueError(f"layer {i} spectral filter contains NaN/inf")


def init_params(
    n_nodes: int,
    dims: list[int],
    n_scales: int,
    rng: np.random.Generator,
    activation: str = "relu",
) -> WaveConvParams:
    """g ~ 1 + N(0, 0.01); w ~ Glorot uniform.  ``dims`` = [d_0, ..., d_L]."""
    weights, gs = [], []
    for d_in, d_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(d_in, d_out)))
        gs.append(1.0 + 0.01 * rng.standard_normal((n_scales, n_nodes)))
    return WaveConvParams(weights, gs, activation)


@dataclass
class ForwardCache:
    token: bytes
    inputs: list[np.ndarray] = field(default_factory=list)
    inner: list[list[np.ndarray]] = field(default_factory=list)  # Psi^-1 X per scale
    mids: list[np.ndarray] = field(default_factory=list)
    pres: list[np.ndarray] = field(default_factory=list)
    outs: list[np.ndarray] = field(default_factory=list)


def forward(x_in: np.ndarray, bank: WaveletFilterBank, params: WaveConvParams, training: bool = True):
    """Return ``(X_out, cache)``; the cache is ``None`` outside training."""
    params.check_finite()
    x = np.asarray(x_in, dtype=float)
    if x.shape[0] != bank.n_nodes:
        raise ValueError(f"signal has {x.shape[0]} rows, graph has {bank.n_nodes} nodes")
    cache = ForwardCache(params.token()) if training else None
    for w, g in zip(params.weights, params.g_theta):
        if x.shape[1] != w.shape[0]:
            raise ValueError(f"signal width {x.shape[1]} != layer input width {w.shape[0]}")
        n_scales = g.shape[0]
        mid = np.zeros_like(x)
        inner = []
        for s in range(n_scales):
            v = bank.inverse(s, x) if params.spectral else x
            inner.append(v)
            u = g[s][:, None] * v
            mid += bank.forward(s, u) if params.spectral else u
        mid /= n_scales
        pre = mid @ w
        out = activate(params.activation, pre)
        if cache is not None:
            cache.inputs.append(x)
            cache.inner.append(inner)
            cache.mids.append(mid)
            cache.pres.append(pre)
            cache.outs.append(out)
        x = out
    return x, cache


def backward(grad_out: np.ndarray, cache: ForwardCache, bank: WaveletFilterBank, params: WaveConvParams):
    """Reverse-mode gradients: ``(grad_X_in, {"w": [...], "g": [...]})``."""
    if cache is None or cache.token != params.token():
        raise ValueError("forward cache is missing or stale for these parameters")
    grads_w = [None] * params.n_layers
    grads_g = [None] * params.n_layers
    dx = np.asarray(grad_out, dtype=float)
    for layer in reversed(range(params.n_layers)):
        w, g = params.weights[layer], params.g_theta[layer]
        dpre = dx * activate_grad(params.activation, cache.pres[layer], cache.outs[layer])
        grads_w[layer] = cache.mids[layer].T @ dpre
        dmid = (dpre @ w.T) / g.shape[0]
        dg = np.zeros_like(g)
        dx = np.zeros_like(cache.inputs[layer])
        for s in range(g.shape[0]):
            du = bank.forward(s, dmid) if params.spectral else dmid
            v = cache.inner[layer][s]
            dg[s] = np.einsum("nc,nc->n", du, v)
            dv = g[s][:, None] * du
            dx += bank.inverse(s, dv) if params.spectral else dv
        grads_g[layer] = dg
    return dx, {"w": grads_w, "g": grads_g}
