"""Session/transition hypergraphs over job groups and their Laplacians."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.sparse as sp

SESSION = "session"
TRANSITION = "transition"


def build_session_hyperedges(sessions: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """One hyperedge per non-empty session: the distinct nodes it touched."""
    return [tuple(sorted(set(s))) for s in sessions if len(s) > 0]


def successors(sessions: Sequence[Sequence[int]]) -> dict[int, set[int]]:
    out: dict[int, set[int]] = {}
    for s in sessions:
        for a, b in zip(s, s[1:]):
            out.setdefault(a, set()).add(b)
    return out


def build_transition_hyperedges(sessions: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """For every node with successors, the set of nodes that directly follow it."""
    succ = successors(sessions)
    return [tuple(sorted(succ[v])) for v in sorted(succ)]


@dataclass
class Hypergraph:
    n_nodes: int
    incidence: sp.csc_matrix  # [n_nodes, n_edges], entries in {0, 1}
    weights: np.ndarray  # [n_edges]
    kinds: list[str]

    @property
    def n_edges(self) -> int:
        return self.incidence.shape[1]

    def edges(self) -> list[tuple[int, ...]]:
        h = self.incidence.tocsc()
        return [tuple(sorted(h.indices[h.indptr[e] : h.indptr[e + 1]].tolist())) for e in range(self.n_edges)]

    def subset(self, kind: str) -> "Hypergraph":
        keep = [i for i, k in enumerate(self.kinds) if k == kind]
        return Hypergraph(self.n_nodes, self.incidence[:, keep].tocsc(), self.weights[keep], [kind] * len(keep))

    def to_triplets(self) -> str:
        h = self.incidence.tocoo()
        order = np.lexsort((h.row, h.col))
        lines = [f"{int(h.row[i])} {int(h.col[i])} {float(self.weights[h.col[i]])!r}" for i in order]
        return "\n".join(lines) + ("\n" if lines else "")


def build_hypergraph(
    n_nodes: int,
    session_edges: Sequence[Sequence[int]],
    transition_edges: Sequence[Sequence[int]] = (),
    weights: Sequence[float] | None = None,
) -> Hypergraph:
    edges = [tuple(e) for e in session_edges] + [tuple(e) for e in transition_edges]
    kinds = [SESSION] * len(session_edges) + [TRANSITION] * len(transition_edges)
    rows, cols = [], []
    for j, e in enumerate(edges):
        if not e:
            raise ValueError(f"hyperedge {j} is empty")
        for v in sorted(set(e)):
            if not 0 <= v < n_nodes:
                raise ValueError(f"node {v} outside [0, {n_nodes})")
            rows.append(v)
            cols.append(j)
    h = sp.csc_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_nodes, len(edges)))
    w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (len(edges),) or np.any(w <= 0):
        raise ValueError("edge weights must be positive, one per edge")
    return Hypergraph(n_nodes, h, w, kinds)


@dataclass
class HyperLaplacian:
    L: sp.csr_matrix
    dv: np.ndarray
    de: np.ndarray

    def dense(self) -> np.ndarray:
        return self.L.toarray()


def laplacian(incidence, weights) -> HyperLaplacian:
    """L = Dv - H W De^-1 H^T."""
    h = sp.csc_matrix(incidence, dtype=float)
    w = np.asarray(weights, dtype=float)
    de = np.asarray(h.sum(axis=0)).ravel()
    if np.any(de == 0):
        raise ValueError("hypergraph has an empty hyperedge")
    dv = h @ w
    a = h @ sp.diags(w / de) @ h.T
    lap = (sp.diags(dv) - a).tocsr()
    lap = ((lap + lap.T) * 0.5).tocsr()
    lap.sort_indices()
    return HyperLaplacian(lap, np.asarray(dv).ravel(), de)


def clique_pairs(edges: Sequence[Sequence[int]]) -> set[tuple[int, int]]:
    pairs = set()
    for e in edges:
        pairs.update(combinations(sorted(set(e)), 2))
    return pairs


def density(n_nodes: int, edges: Sequence[Sequence[int]]) -> float:
    """2|E| / (|V|(|V|-1)) of the simple clique expansion."""
    if n_nodes < 2:
        raise ValueError("density needs at least two nodes")
    return 2.0 * len(clique_pairs(edges)) / (n_nodes * (n_nodes - 1))


def build_group_signal(
    node_topics: np.ndarray,
    interaction_counts: np.ndarray,
) -> np.ndarray:
    """Raw node features: mean member-job topic vector ++ log(1 + interactions).

    ``node_topics`` is the [n_nodes, K] mean fold-in topic vector of each job
    group; ``interaction_counts`` the user group's interaction count per node.
    The learnable projection to the hidden width lives in the model.
    """
    topics = np.asarray(node_topics, dtype=float)
    counts = np.asarray(interaction_counts, dtype=float).reshape(-1, 1)
    if topics.shape[0] != counts.shape[0]:
        raise ValueError("node_topics and interaction_counts disagree on n_nodes")
    return np.hstack([topics, np.log1p(counts)])


def mean_group_topics(job_topics: np.ndarray, job_group: np.ndarray, n_groups: int) -> np.ndarray:
    """Average the topic vectors of each group's member jobs."""
    job_topics = np.asarray(job_topics, dtype=float)
    out = np.zeros((n_groups, job_topics.shape[1]))
    sizes = np.bincount(job_group, minlength=n_groups)
    if np.any(sizes == 0):
        raise ValueError("a job group has no member jobs")
    for g in range(n_groups):
        out[g] = job_topics[job_group == g].mean(axis=0)
    return out
