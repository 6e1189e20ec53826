"""End-to-end network: group wavelet features, session RNN and fusion head.

One mini-batch holds samples from a single user group.  For that group the
raw hypergraph signal is projected, passed through the wavelet layers, and
the rows of the job groups seen in each session window are averaged into
X^L.  The window's job embeddings drive the RNN; [Y_T ; X^L] feeds the
fusion head, whose row-softmax is scored with cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import personalize as P
from . import wavenet
from .spectral import WaveletFilterBank


@dataclass
class GroupGraph:
    bank: WaveletFilterBank
    signal: np.ndarray  # raw node features [n_nodes, K_topics + 1]


@dataclass
class Batch:
    group: int
    windows: np.ndarray  # [B, T] job indices, -1 = left padding
    targets: np.ndarray  # [B] job indices


@dataclass
class Dims:
    n_topics: int
    hidden: int
    n_labels: int
    n_scales: int
    n_layers: int = 1


def init_params(dims: Dims, graphs: list[GroupGraph], seed: int, activation: str = "relu") -> dict[str, np.ndarray]:
    rng = np.random.default_rng([seed, 7])
    d, k, m = dims.hidden, dims.n_topics, dims.n_labels

    def glorot(shape):
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        return rng.uniform(-limit, limit, size=shape)

    params = {
        "proj_in": glorot((k + 1, d)),
        "emb": glorot((k, d)),
        "W_a": glorot((d, d)),
        "W_b": glorot((d, d)),
        "W_c": glorot((d, d)),
        "W_f": glorot((m, 2 * d)),
        "b_f": np.zeros(m),
    }
    for layer in range(dims.n_layers):
        params[f"wave_w{layer}"] = glorot((d, d))
    for gi, gg in enumerate(graphs):
        for layer in range(dims.n_layers):
            params[f"wave_g{layer}/{gi}"] = 1.0 + 0.01 * rng.standard_normal((dims.n_scales, gg.bank.n_nodes))
    return params


class Network:
    """Forward/backward over a parameter dict shared with the optimiser."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        dims: Dims,
        graphs: list[GroupGraph],
        job_topics: np.ndarray,
        job_node: np.ndarray,
        job_labels: np.ndarray,
        activation: str = "relu",
        wavelet: bool = True,
    ):
        self.params = params
        self.dims = dims
        self.graphs = graphs
        self.job_topics = np.asarray(job_topics, dtype=float)
        self.job_node = np.asarray(job_node, dtype=np.int64)
        self.job_labels = np.asarray(job_labels, dtype=np.int64)
        self.activation = activation
        self.wavelet = wavelet

    # -- pieces -----------------------------------------------------------
    def wave_params(self, group: int) -> wavenet.WaveConvParams:
        n = self.dims.n_layers
        return wavenet.WaveConvParams(
            [self.params[f"wave_w{l}"] for l in range(n)],
            [self.params[f"wave_g{l}/{group}"] for l in range(n)],
            self.activation,
            spectral=self.wavelet,
        )

    def rnn_params(self) -> P.RnnParams:
        return P.RnnParams(self.params["W_a"], self.params["W_b"], self.params["W_c"])

    def group_features(self, group: int, training: bool = False):
        gg = self.graphs[group]
        x_in = gg.signal @ self.params["proj_in"]
        x_l, cache = wavenet.forward(x_in, gg.bank, self.wave_params(group), training=training)
        return x_l, cache

    def window_embeddings(self, windows: np.ndarray):
        mask = windows >= 0
        topics = np.where(mask[..., None], self.job_topics[np.where(mask, windows, 0)], 0.0)
        return topics @ self.params["emb"], topics

    def pooling(self, windows: np.ndarray, n_nodes: int) -> np.ndarray:
        """[B, n_nodes] averaging weights over the window's job-group rows."""
        b = windows.shape[0]
        pool = np.zeros((b, n_nodes))
        rows, cols = np.nonzero(windows >= 0)
        np.add.at(pool, (rows, self.job_node[windows[rows, cols]]), 1.0)
        counts = pool.sum(axis=1, keepdims=True)
        return pool / np.maximum(counts, 1.0)

    # -- inference ----------------------------------------------------------
    def encode(self, group: int, windows: np.ndarray, x_l: np.ndarray | None = None):
        """Return (label scores [B, M], Y_T [B, d])."""
        if x_l is None:
            x_l, _ = self.group_features(group)
        pooled = self.pooling(windows, x_l.shape[0]) @ x_l
        emb, _ = self.window_embeddings(windows)
        y, _ = P.rnn_forward(self.rnn_params(), emb)
        scores = P.fuse(self.params["W_f"], self.params["b_f"], y, pooled)
        return scores, y

    def job_embeddings(self) -> np.ndarray:
        return self.job_topics @ self.params["emb"]

    # -- training ---------------------------------------------------------
    def loss_and_grads(self, batch: Batch):
        p = self.params
        g = batch.group
        gg = self.graphs[g]
        x_in = gg.signal @ p["proj_in"]
        wp = self.wave_params(g)
        x_l, wcache = wavenet.forward(x_in, gg.bank, wp, training=True)
        pool = self.pooling(batch.windows, x_l.shape[0])
        pooled = pool @ x_l
        emb, topics = self.window_embeddings(batch.windows)
        rp = self.rnn_params()
        y, trace = P.rnn_forward(rp, emb)
        concat = np.concatenate([y, pooled], axis=1)
        scores = P.sigmoid(concat @ p["W_f"].T + p["b_f"])
        probs = P.row_softmax(scores)
        labels = self.job_labels[batch.targets]
        chi = P.one_hot(labels, self.dims.n_labels)
        value = P.loss(probs, chi)

        bsz = batch.windows.shape[0]
        dscores = (probs - chi) / bsz
        dz = dscores * scores * (1.0 - scores)
        grads = {"W_f": dz.T @ concat, "b_f": dz.sum(axis=0)}
        dconcat = dz @ p["W_f"]
        d = self.dims.hidden
        dy, dpooled = dconcat[:, :d], dconcat[:, d:]
        rnn_grads, demb = P.rnn_backward(rp, trace, dy)
        grads.update(rnn_grads)
        grads["emb"] = np.einsum("btk,btd->kd", topics, demb)
        dx_l = pool.T @ dpooled
        dx_in, wgrads = wavenet.backward(dx_l, wcache, gg.bank, wp)
        for l in range(self.dims.n_layers):
            grads[f"wave_w{l}"] = wgrads["w"][l]
            grads[f"wave_g{l}/{g}"] = wgrads["g"][l]
        grads["proj_in"] = gg.signal.T @ dx_in
        return value, grads
