"""Probabilistic latent semantic analysis fitted by expectation-maximisation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import serialize

log = logging.getLogger(__name__)

FLOOR = 1e-12


@dataclass
class Corpus:
    """Sparse document-word counts f(d, w), one entry per non-zero pair."""

    doc: np.ndarray  # int64 [nnz]
    word: np.ndarray  # int64 [nnz]
    count: np.ndarray  # float64 [nnz]
    n_docs: int
    vocab: dict[str, int]

    @property
    def n_words(self) -> int:
        return len(self.vocab)

    def doc_lengths(self) -> np.ndarray:
        return np.bincount(self.doc, weights=self.count, minlength=self.n_docs)


def build_corpus(docs: Sequence[Mapping[str, int]], vocab: dict[str, int] | None = None) -> Corpus:
    """Turn token-count maps into a :class:`Corpus`.

    With ``vocab=None`` the vocabulary is every token seen, sorted.  With a
    given vocabulary, out-of-vocabulary tokens are dropped.
    """
    if vocab is None:
        tokens = sorted({t for d in docs for t in d})
        vocab = {t: i for i, t in enumerate(tokens)}
    rows, cols, vals = [], [], []
    for i, d in enumerate(docs):
        for tok in sorted(d):
            j = vocab.get(tok)
            if j is not None and d[tok] > 0:
                rows.append(i)
                cols.append(j)
                vals.append(float(d[tok]))
    return Corpus(
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
        len(docs),
        vocab,
    )


@dataclass
class TopicModel:
    p_w_given_z: np.ndarray  # [K, V]
    p_z_given_d: np.ndarray  # [D, K]
    vocab: dict[str, int]
    trace: list[float] = field(default_factory=list)

    @property
    def n_topics(self) -> int:
        return self.p_w_given_z.shape[0]

    def top_words(self, n: int = 10) -> list[list[str]]:
        inv = sorted(self.vocab, key=self.vocab.get)
        out = []
        for row in self.p_w_given_z:
            order = np.lexsort((np.arange(row.size), -row))[:n]
            out.append([inv[i] for i in order])
        return out

    def save(self, path) -> None:
        inv = sorted(self.vocab, key=self.vocab.get)
        serialize.save_arrays(
            path,
            "topic_model",
            {
                "p_w_given_z": self.p_w_given_z,
                "p_z_given_d": self.p_z_given_d,
                "trace": np.asarray(self.trace, dtype=np.float64),
            },
            {"vocab": inv},
        )

    @classmethod
    def load(cls, path) -> "TopicModel":
        arrays, meta = serialize.load_arrays(path, "topic_model")
        vocab = {t: i for i, t in enumerate(meta["vocab"])}
        return cls(arrays["p_w_given_z"], arrays["p_z_given_d"], vocab, arrays["trace"].tolist())


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    s = m.sum(axis=1, keepdims=True)
    out = np.empty_like(m)
    ok = s[:, 0] > 0
    out[ok] = m[ok] / s[ok]
    out[~ok] = 1.0 / m.shape[1]
    return out


def e_step(model: TopicModel, corpus: Corpus) -> np.ndarray:
    """Posterior P(z | w, d) for every non-zero (d, w), shape [nnz, K]."""
    num = model.p_w_given_z[:, corpus.word].T * model.p_z_given_d[corpus.doc]
    return _normalize_rows(num)


def m_step(posterior: np.ndarray, corpus: Corpus) -> TopicModel:
    """Re-estimate P(w | z) and P(z | d) from the E-step posterior."""
    k = posterior.shape[1]
    weighted = posterior * corpus.count[:, None]
    nwz = np.zeros((k, corpus.n_words))
    ndz = np.zeros((corpus.n_docs, k))
    for z in range(k):
        nwz[z] = np.bincount(corpus.word, weights=weighted[:, z], minlength=corpus.n_words)
        ndz[:, z] = np.bincount(corpus.doc, weights=weighted[:, z], minlength=corpus.n_docs)
    return TopicModel(_normalize_rows(nwz), _normalize_rows(ndz), corpus.vocab)


def log_likelihood(model: TopicModel, corpus: Corpus) -> float:
    """L = sum f(d,w) log P(d,w) with P(d) the document's share of all tokens."""
    lengths = corpus.doc_lengths()
    total = lengths.sum()
    if total == 0:
        return 0.0
    p_d = lengths / total
    p_wd = np.einsum("nk,kn->n", model.p_z_given_d[corpus.doc], model.p_w_given_z[:, corpus.word])
    p = p_d[corpus.doc] * p_wd
    return float(np.sum(corpus.count * np.log(np.maximum(p, FLOOR))))


def em_fit(
    corpus: Corpus,
    n_topics: int = 32,
    max_iters: int = 200,
    tol: float = 1e-6,
    seed: int = 0,
) -> TopicModel:
    """Fit pLSA by EM from seeded Dirichlet(1) rows.

    ``model.trace[0]`` is the likelihood of the initial parameters and
    ``trace[i]`` the likelihood after the i-th EM cycle.  Iteration stops once
    ``|dL| < tol * |L|``.
    """
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if corpus.n_words == 0 or corpus.count.size == 0:
        raise ValueError("cannot fit a topic model on an empty vocabulary")
    rng = np.random.default_rng(seed)
    model = TopicModel(
        rng.dirichlet(np.ones(corpus.n_words), size=n_topics),
        rng.dirichlet(np.ones(n_topics), size=corpus.n_docs),
        corpus.vocab,
    )
    prev = log_likelihood(model, corpus)
    trace = [prev]
    for it in range(max_iters):
        model = m_step(e_step(model, corpus), corpus)
        cur = log_likelihood(model, corpus)
        trace.append(cur)
        if abs(cur - prev) < tol * abs(cur):
            break
        prev = cur
    log.debug("pLSA: %d iterations, L=%.6f", len(trace) - 1, trace[-1])
    model.trace = trace
    return model


def fold_in_corpus(model: TopicModel, corpus: Corpus, iters: int = 10) -> np.ndarray:
    """Estimate P(z | d') for each document with P(w | z) held fixed.

    Documents without any in-vocabulary token get the uniform vector.
    """
    k = model.n_topics
    pzd = np.full((corpus.n_docs, k), 1.0 / k)
    if corpus.count.size == 0:
        return pzd
    pwz_cols = model.p_w_given_z[:, corpus.word].T  # [nnz, K], read-only view of the model
    for _ in range(iters):
        post = _normalize_rows(pwz_cols * pzd[corpus.doc]) * corpus.count[:, None]
        ndz = np.zeros_like(pzd)
        for z in range(k):
            ndz[:, z] = np.bincount(corpus.doc, weights=post[:, z], minlength=corpus.n_docs)
        pzd = _normalize_rows(ndz)
    return pzd


def fold_in(model: TopicModel, document: Mapping[str, int], iters: int = 10) -> np.ndarray:
    corpus = build_corpus([document], model.vocab)
    if corpus.count.size == 0:
        log.warning("fold-in: document has no in-vocabulary tokens; returning uniform topics")
    return fold_in_corpus(model, corpus, iters)[0]
