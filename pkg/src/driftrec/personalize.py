"""Session RNN, fusion head, cross-entropy loss and the Adam optimiser."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_FLOOR = 1e-12


@dataclass
class RnnParams:
    W_a: np.ndarray  # [d, d]
    W_b: np.ndarray  # [d, d_emb]
    W_c: np.ndarray  # [d, d]


@dataclass
class RnnTrace:
    embeddings: np.ndarray  # [B, T, d_emb]
    hidden: list[np.ndarray]  # O_0 .. O_T, each [B, d]
    y: np.ndarray  # Y_T [B, d]


def rnn_forward(params: RnnParams, embeddings: np.ndarray):
    """O_t = tanh(W_b e_t + W_c O_{t-1}), Y_T = tanh(W_a O_T), O_0 = 0.

    ``embeddings`` is [T, d_emb] or batched [B, T, d_emb].  Zero rows on the
    left act as padding: they keep the hidden state at exactly zero.
    """
    emb = np.asarray(embeddings, dtype=float)
    single = emb.ndim == 2
    if single:
        emb = emb[None]
    if emb.shape[1] < 1:
        raise ValueError("the RNN needs at least one time step")
    h = np.zeros((emb.shape[0], params.W_c.shape[0]))
    hidden = [h]
    for t in range(emb.shape[1]):
        h = np.tanh(emb[:, t] @ params.W_b.T + h @ params.W_c.T)
        hidden.append(h)
    y = np.tanh(h @ params.W_a.T)
    trace = RnnTrace(emb, hidden, y)
    return (y[0] if single else y), trace


def rnn_backward(params: RnnParams, trace: RnnTrace, grad_y: np.ndarray):
    """Back-propagation through time from dLoss/dY_T.

    Returns ``(grads, grad_embeddings)`` with grads keyed W_a, W_b, W_c.
    """
    gy = np.asarray(grad_y, dtype=float).reshape(trace.y.shape)
    dpre = gy * (1.0 - trace.y ** 2)
    dW_a = dpre.T @ trace.hidden[-1]
    dh = dpre @ params.W_a
    dW_b = np.zeros_like(params.W_b)
    dW_c = np.zeros_like(params.W_c)
    demb = np.zeros_like(trace.embeddings)
    for t in range(trace.embeddings.shape[1], 0, -1):
        h = trace.hidden[t]
        da = dh * (1.0 - h * h)
        dW_b += da.T @ trace.embeddings[:, t - 1]
        dW_c += da.T @ trace.hidden[t - 1]
        demb[:, t - 1] = da @ params.W_b
        dh = da @ params.W_c
    return {"W_a": dW_a, "W_b": dW_b, "W_c": dW_c}, demb


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def fuse(W_f: np.ndarray, b_f: np.ndarray, y_t: np.ndarray, x_l: np.ndarray) -> np.ndarray:
    """Label scores sigmoid(W_f [Y_T ; X^L] + b), shape [..., M]."""
    concat = np.concatenate([np.asarray(y_t, dtype=float), np.asarray(x_l, dtype=float)], axis=-1)
    if concat.shape[-1] != W_f.shape[1]:
        raise ValueError(f"fusion input width {concat.shape[-1]} != weight width {W_f.shape[1]}")
    return sigmoid(concat @ W_f.T + b_f)


def row_softmax(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def loss(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-likelihood -(1/k) sum_i sum_q chi_iq log y_iq."""
    y = np.asarray(probs, dtype=float)
    chi = np.asarray(targets, dtype=float)
    if y.shape != chi.shape:
        raise ValueError("prediction and target matrices differ in shape")
    return float(-(chi * np.log(np.maximum(y, LOG_FLOOR))).sum() / y.shape[0])


def one_hot(labels, m: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, m))
    out[np.arange(labels.size), labels] = 1.0
    return out


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState) -> None:
    """Bias-corrected Adam update, in place.  Parameters without a gradient are left alone."""
    for name, g in grads.items():
        if name not in params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {params[name].shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {name!r}")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, g in grads.items():
        m = state.m.setdefault(name, np.zeros_like(params[name]))
        v = state.v.setdefault(name, np.zeros_like(params[name]))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        params[name] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
