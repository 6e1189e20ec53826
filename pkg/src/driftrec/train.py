"""Training loop, evaluation protocol and checkpoints."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import personalize as P
from . import serialize
from .config import RunConfig
from .model import Batch, Dims, Network, init_params
from .pipeline import Context
from .recsys import EvalReport, Recommendation, rank_order, ranks_of, report_from_ranks

log = logging.getLogger(__name__)

EVAL_CHUNK = 512


def make_window(jobs: np.ndarray, pos: int, length: int) -> np.ndarray:
    """The last ``length`` jobs before ``pos``, left-padded with -1."""
    prefix = jobs[max(0, pos - length) : pos]
    out = np.full(length, -1, dtype=np.int64)
    if prefix.size:
        out[length - prefix.size :] = prefix
    return out


def build_network(ctx: Context, params=None) -> Network:
    cfg = ctx.config
    dims = Dims(ctx.semantics.topic_model.n_topics, cfg.hidden, ctx.n_labels, cfg.scales, cfg.layers)
    if params is None:
        params = init_params(dims, ctx.graphs, cfg.seed)
    for g in ctx.graphs:
        if g.bank.n_scales != cfg.scales:
            raise ValueError("filter bank scale count differs from the configuration")
    return Network(
        params, dims, ctx.graphs, ctx.semantics.job_topics, ctx.semantics.job_group, ctx.job_labels,
        cfg.activation, cfg.wavelet,
    )


@dataclass
class Points:
    sessions: np.ndarray
    positions: np.ndarray

    def __len__(self):
        return int(self.sessions.size)


def evaluation_points(ctx: Context, sessions, mode: str = "all", clean_only: bool = False) -> Points:
    """Next-interaction prediction points: every position after ``min_prefix``.

    ``mode="last"`` keeps only the final position of each session.
    ``clean_only`` drops points whose target the generator flagged as noise.
    """
    ss, pp = [], []
    lo = ctx.config.min_prefix
    for i in sessions:
        n = ctx.session_jobs[i].size
        if n <= lo:
            continue
        positions = range(lo, n) if mode == "all" else [n - 1]
        for pos in positions:
            if clean_only and ctx.session_noisy is not None and ctx.session_noisy[i][pos]:
                continue
            ss.append(i)
            pp.append(pos)
    return Points(np.asarray(ss, dtype=np.int64), np.asarray(pp, dtype=np.int64))


def _similarity(y: np.ndarray, job_emb: np.ndarray) -> np.ndarray:
    """Cosine similarity mapped to [0, 1]."""
    yn = y / np.maximum(np.linalg.norm(y, axis=1, keepdims=True), 1e-12)
    en = job_emb / np.maximum(np.linalg.norm(job_emb, axis=1, keepdims=True), 1e-12)
    return 0.5 * (1.0 + yn @ en.T)


def score_jobs(net: Network, group: int, windows: np.ndarray, x_l=None, job_emb=None) -> np.ndarray:
    """Job scores [B, n_jobs]: label score of the job's class times similarity."""
    scores, y = net.encode(group, windows, x_l)
    if job_emb is None:
        job_emb = net.job_embeddings()
    return scores[:, net.job_labels] * _similarity(y, job_emb)


def evaluate(net: Network, ctx: Context, points: Points, k: int) -> EvalReport:
    if len(points) == 0:
        raise ValueError("evaluation set is empty")
    cfg = ctx.config
    ranks = np.zeros(len(points), dtype=np.int64)
    job_emb = net.job_embeddings()
    groups = ctx.session_group[points.sessions]
    for g in np.unique(groups):
        x_l, _ = net.group_features(int(g))
        idx = np.flatnonzero(groups == g)
        for start in range(0, idx.size, EVAL_CHUNK):
            chunk = idx[start : start + EVAL_CHUNK]
            windows = np.stack(
                [make_window(ctx.session_jobs[s], p, cfg.window) for s, p in zip(points.sessions[chunk], points.positions[chunk])]
            )
            truth = np.array([ctx.session_jobs[s][p] for s, p in zip(points.sessions[chunk], points.positions[chunk])])
            ranks[chunk] = ranks_of(score_jobs(net, int(g), windows, x_l, job_emb), truth)
    return report_from_ranks(ranks, k)


def recommend_topk(net: Network, ctx: Context, session_index: int, k: int, position: int | None = None) -> Recommendation:
    """Rank all jobs for a session prefix (default: the whole session so far)."""
    jobs = ctx.session_jobs[session_index]
    pos = jobs.size if position is None else position
    if pos < 1:
        raise ValueError("cannot recommend from an empty session")
    window = make_window(jobs, pos, ctx.config.window)[None]
    scores = score_jobs(net, int(ctx.session_group[session_index]), window)[0]
    ids = list(ctx.dataset.jobs)
    order = rank_order(scores)[:k]
    sess = ctx.dataset.sessions[session_index]
    return Recommendation(sess.user_id, session_index, [(ids[i], float(scores[i])) for i in order])


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    adam: P.AdamState
    trace: list[dict] = field(default_factory=list)
    best_epoch: int = 0


def _epoch_batches(ctx: Context, rng: np.random.Generator) -> list[Batch]:
    cfg = ctx.config
    lo = cfg.min_prefix
    per_group: dict[int, list[tuple[np.ndarray, int]]] = {}
    for i in ctx.split.train:
        jobs = ctx.session_jobs[i]
        if jobs.size <= lo:
            continue
        for pos in rng.integers(lo, jobs.size, size=cfg.samples_per_session):
            per_group.setdefault(int(ctx.session_group[i]), []).append((make_window(jobs, int(pos), cfg.window), int(jobs[pos])))
    batches = []
    for g in sorted(per_group):
        items = per_group[g]
        order = rng.permutation(len(items))
        for start in range(0, len(items), cfg.batch_size):
            sel = [items[j] for j in order[start : start + cfg.batch_size]]
            batches.append(Batch(g, np.stack([w for w, _ in sel]), np.array([t for _, t in sel])))
    return [batches[j] for j in rng.permutation(len(batches))]


def train(ctx: Context, config: RunConfig | None = None, progress=None) -> TrainResult:
    """Mini-batch Adam over training sessions with early stopping on validation H@k."""
    cfg = config or ctx.config
    net = build_network(ctx)
    state = P.AdamState(lr=cfg.lr)
    rng = np.random.default_rng([cfg.seed, 5])
    val_points = evaluation_points(ctx, ctx.split.val, mode="last")
    if not any(ctx.session_jobs[i].size > cfg.min_prefix for i in ctx.split.train):
        raise ValueError("training split has no usable sessions")

    best = (-1.0, None, 0)
    trace = []
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        total, count = 0.0, 0
        for batch in _epoch_batches(ctx, rng):
            value, grads = net.loss_and_grads(batch)
            P.adam_step(net.params, grads, state)
            total += value * batch.targets.size
            count += batch.targets.size
        row = {"epoch": epoch, "loss": total / max(count, 1)}
        if len(val_points):
            rep = evaluate(net, ctx, val_points, cfg.k)
            row[f"val_H@{cfg.k}"] = rep.hit_ratio
            row[f"val_M@{cfg.k}"] = rep.mrr
            score = rep.hit_ratio
        else:
            score = -row["loss"]
        trace.append(row)
        if progress is not None:
            progress(row)
        if score > best[0]:
            best = (score, {n: a.copy() for n, a in net.params.items()}, epoch)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    params = best[1] if best[1] is not None else net.params
    return TrainResult(params, state, trace, best[2])


def write_trace(path, trace: list[dict], k: int) -> None:
    cols = ["epoch", "loss", f"val_H@{k}", f"val_M@{k}"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in trace:
            w.writerow([row.get(c, "") if c == "epoch" else repr(float(row[c])) if c in row else "" for c in cols])


def save_checkpoint(path, result: TrainResult, config: RunConfig) -> None:
    arrays = dict(result.params)
    for name, m in result.adam.m.items():
        arrays[f"adam_m:{name}"] = m
        arrays[f"adam_v:{name}"] = result.adam.v[name]
    meta = {
        "config": config.as_dict(),
        "config_hash": serialize.config_hash(config.as_dict()),
        "seed": config.seed,
        "adam": {"step": result.adam.step, "lr": result.adam.lr, "beta1": result.adam.beta1,
                 "beta2": result.adam.beta2, "eps": result.adam.eps},
        "best_epoch": result.best_epoch,
    }
    serialize.save_arrays(path, "checkpoint", arrays, meta)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], P.AdamState, dict]:
    arrays, meta = serialize.load_arrays(path, "checkpoint")
    params = {n: a for n, a in arrays.items() if not n.startswith("adam_")}
    a = meta["adam"]
    state = P.AdamState(a["lr"], a["beta1"], a["beta2"], a["eps"], a["step"])
    state.m = {n.split(":", 1)[1]: v for n, v in arrays.items() if n.startswith("adam_m:")}
    state.v = {n.split(":", 1)[1]: v for n, v in arrays.items() if n.startswith("adam_v:")}
    return params, state, meta
