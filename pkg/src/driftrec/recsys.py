"""Top-k ranking and hit-ratio / reciprocal-rank evaluation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset

DEFAULT_K = 10


@dataclass
class Recommendation:
    user_id: str
    session_index: int
    ranked_jobs: list[tuple[str, float]]


@dataclass
class EvalReport:
    k: int
    hit_ratio: float
    mrr: float
    n_points: int
    reciprocal_ranks: list[float] = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {f"H@{self.k}": self.hit_ratio, f"M@{self.k}": self.mrr, "k": self.k, "n_points": self.n_points}
        out.update(self.extra)
        return out


def rank_order(scores: np.ndarray) -> np.ndarray:
    """Indices by descending score; equal scores keep ascending index order."""
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")


def top_k(scores: np.ndarray, job_ids: Sequence[str], k: int) -> list[tuple[str, float]]:
    order = rank_order(scores)[:k]
    return [(job_ids[i], float(scores[i])) for i in order]


def ranks_of(scores: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """1-based rank of each row's true column under the stable ordering."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    truth = np.asarray(truth, dtype=np.int64)
    ts = scores[np.arange(scores.shape[0]), truth][:, None]
    idx = np.arange(scores.shape[1])[None, :]
    ahead = (scores > ts) | ((scores == ts) & (idx < truth[:, None]))
    return 1 + ahead.sum(axis=1)


def _check(recommendations, ground_truth):
    if len(recommendations) == 0:
        raise ValueError("evaluation set is empty")
    if len(recommendations) != len(ground_truth):
        raise ValueError("recommendations and ground truth differ in length")


def _rank_in(rec, truth, k):
    items = [j for j, *_ in rec] if rec and isinstance(rec[0], tuple) else list(rec)
    items = items[:k]
    return items.index(truth) + 1 if truth in items else None


def hit_ratio(recommendations: Sequence[Sequence], ground_truth: Sequence, k: int = DEFAULT_K) -> float:
    """Fraction of evaluation points whose true job is in the top-k list."""
    _check(recommendations, ground_truth)
    hits = sum(_rank_in(r, t, k) is not None for r, t in zip(recommendations, ground_truth))
    return hits / len(ground_truth)


def mrr(recommendations: Sequence[Sequence], ground_truth: Sequence, k: int = DEFAULT_K) -> float:
    """Mean of 1/rank of the true job, 0 when it is outside the top k."""
    _check(recommendations, ground_truth)
    total = 0.0
    for r, t in zip(recommendations, ground_truth):
        rank = _rank_in(r, t, k)
        total += 0.0 if rank is None else 1.0 / rank
    return total / len(ground_truth)


def report_from_ranks(ranks: np.ndarray, k: int, extra: dict | None = None) -> EvalReport:
    ranks = np.asarray(ranks)
    if ranks.size == 0:
        raise ValueError("evaluation set is empty")
    rr = np.where(ranks <= k, 1.0 / ranks, 0.0)
    return EvalReport(k, float(np.mean(ranks <= k)), float(rr.mean()), int(ranks.size), rr.tolist(), extra or {})


class PopularityRecommender:
    """Ranks every job by its interaction count, ties by job id."""

    def __init__(self, dataset: Dataset, sessions=None):
        job_ids = list(dataset.jobs)
        index = {j: i for i, j in enumerate(job_ids)}
        counts = Counter()
        for s in dataset.sessions if sessions is None else sessions:
            counts.update(index[j] for j in s.job_ids)
        self.job_ids = job_ids
        self.scores = np.array([counts.get(i, 0) for i in range(len(job_ids))], dtype=float)

    def recommend(self, k: int = DEFAULT_K) -> list[tuple[str, float]]:
        return top_k(self.scores, self.job_ids, k)

    def ranks(self, truth: np.ndarray) -> np.ndarray:
        truth = np.asarray(truth, dtype=np.int64)
        return ranks_of(np.broadcast_to(self.scores, (truth.size, self.scores.size)), truth)


def popularity_baseline(dataset: Dataset, k: int = DEFAULT_K, sessions=None) -> PopularityRecommender:
    return PopularityRecommender(dataset, sessions)
