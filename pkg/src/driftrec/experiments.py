"""Experiment harnesses: noise sweep, hyperedge density, baseline lift, spectral timing."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import hypergraph, pipeline, spectral, synthgen, train
from .config import RunConfig
from .data import Dataset
from .recsys import PopularityRecommender, report_from_ranks

log = logging.getLogger(__name__)

NOISE_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
VARIANTS = ("full", "no_wavelet")


def random_hypergraph(n_nodes: int, rng: np.random.Generator, n_edges: int | None = None, max_size: int = 6):
    """Random weighted hypergraph; edges have between 2 and ``max_size`` nodes."""
    n_edges = n_edges if n_edges is not None else max(1, 2 * n_nodes)
    top = max(2, min(max_size, n_nodes))
    edges = []
    for _ in range(n_edges):
        size = int(rng.integers(2, top + 1)) if n_nodes >= 2 else 1
        edges.append(tuple(sorted(rng.choice(n_nodes, size=min(size, n_nodes), replace=False).tolist())))
    weights = rng.uniform(0.5, 2.0, size=n_edges)
    return hypergraph.build_hypergraph(n_nodes, edges, (), weights)


# -- noise sweep ---------------------------------------------------------------

def sweep_gen_config(**changes) -> synthgen.GenConfig:
    """Reduced world used by the sweep so that 70 trainings stay affordable."""
    base = synthgen.GenConfig(n_users=400, n_jobs=200, n_topics=10, mean_session_len=10.0, vocab_size=500, doc_len=50)
    return dataclasses.replace(base, **changes)


def sweep_run_config(**changes) -> RunConfig:
    base = RunConfig(
        n_topics=10, user_ratio=50.0, job_ratio=10.0, hidden=32, epochs=30, patience=10, window=10,
    )
    return base.replace(**changes)


def run_noise_sweep(
    gen_cfg: synthgen.GenConfig,
    run_cfg: RunConfig,
    rhos=NOISE_GRID,
    seeds=(0,),
    variants=VARIANTS,
    progress=None,
) -> list[dict]:
    """Train each variant at every noise rate; the topic model and clusters are shared per seed.

    H@k is reported on clean test targets (``hit``) and on all targets (``hit_all``).
    """
    rows = []
    for seed in seeds:
        g = dataclasses.replace(gen_cfg, seed=seed)
        r = run_cfg.replace(seed=seed)
        worlds = synthgen.noise_sweep(g, rhos)
        # documents do not depend on the noise rate
        sem = pipeline.fit_semantics(worlds[0][1], r)
        for rho, ds, _ in worlds:
            ctx = pipeline.build_context(ds, r, sem)
            clean_pts = train.evaluation_points(ctx, ctx.split.test, clean_only=True)
            all_pts = train.evaluation_points(ctx, ctx.split.test)
            for variant in variants:
                vctx = dataclasses.replace(ctx, config=r.replace(wavelet=variant == "full"))
                t0 = time.perf_counter()
                res = train.train(vctx)
                net = train.build_network(vctx, res.params)
                clean = train.evaluate(net, vctx, clean_pts, r.k)
                full = train.evaluate(net, vctx, all_pts, r.k)
                row = {
                    "seed": seed, "rho": rho, "variant": variant,
                    "hit": clean.hit_ratio, "mrr": clean.mrr, "hit_all": full.hit_ratio, "mrr_all": full.mrr,
                    "epochs": len(res.trace), "seconds": time.perf_counter() - t0,
                }
                rows.append(row)
                log.info("sweep %s", row)
                if progress is not None:
                    progress(row)
    return rows


@dataclass
class SweepSummary:
    rhos: list[float]
    mean_hit: dict[str, list[float]]  # variant -> mean H@k per rho
    drops: dict[str, list[float]]  # variant -> per-seed drop between the two rates
    p_value: float
    max_step_increase: float


def summarize_sweep(rows: list[dict], lo: float = 0.0, hi: float = 0.5, metric: str = "hit") -> SweepSummary:
    rhos = sorted({r["rho"] for r in rows})
    seeds = sorted({r["seed"] for r in rows})
    variants = sorted({r["variant"] for r in rows})
    table = {(r["seed"], r["rho"], r["variant"]): r[metric] for r in rows}
    mean_hit = {v: [float(np.mean([table[s, rho, v] for s in seeds])) for rho in rhos] for v in variants}
    drops = {v: [table[s, lo, v] - table[s, hi, v] for s in seeds] for v in variants if (seeds[0], lo, v) in table}
    p_value = float("nan")
    if "full" in drops and "no_wavelet" in drops and len(seeds) > 1:
        diff = np.subtract(drops["full"], drops["no_wavelet"])
        if np.all(diff == diff[0]):
            p_value = 0.0 if diff[0] < 0 else 1.0
        else:
            p_value = float(stats.ttest_rel(drops["full"], drops["no_wavelet"], alternative="less").pvalue)
    full = mean_hit.get("full", [])
    steps = np.diff(full) if len(full) > 1 else np.zeros(1)
    return SweepSummary(rhos, mean_hit, drops, p_value, float(steps.max()))


# -- hyperedge density -----------------------------------------------------------

def density_comparison(dataset: Dataset) -> dict:
    """Clique-expansion density over jobs with session edges only and with both edge kinds."""
    index = dataset.job_index()
    seqs = [[index[j] for j in s.job_ids] for s in dataset.sessions]
    sess = hypergraph.build_session_hyperedges(seqs)
    trans = hypergraph.build_transition_hyperedges(seqs)
    n = len(index)
    d_sess = hypergraph.density(n, sess)
    d_both = hypergraph.density(n, sess + trans)
    return {
        "n_nodes": n, "session_edges": len(sess), "transition_edges": len(trans),
        "density_session": d_sess, "density_both": d_both,
        "ratio": d_both / d_sess if d_sess > 0 else float("inf"),
    }


# -- lift over popularity -------------------------------------------------------------

def lift_experiment(gen_cfg: synthgen.GenConfig, run_cfg: RunConfig, progress=None) -> dict:
    """Train on one synthetic dataset and compare test H@k with the popularity ranking."""
    ds, _ = synthgen.generate(gen_cfg)
    ctx = pipeline.build_context(ds, run_cfg)
    res = train.train(ctx, progress=progress)
    net = train.build_network(ctx, res.params)
    pts = train.evaluation_points(ctx, ctx.split.test)
    model = train.evaluate(net, ctx, pts, run_cfg.k)
    pop = PopularityRecommender(ds, [ds.sessions[i] for i in ctx.split.train])
    truth = np.array([ctx.session_jobs[s][p] for s, p in zip(pts.sessions, pts.positions)])
    base = report_from_ranks(pop.ranks(truth), run_cfg.k)
    return {
        "seed": run_cfg.seed, "model_hit": model.hit_ratio, "model_mrr": model.mrr,
        "pop_hit": base.hit_ratio, "pop_mrr": base.mrr, "n_points": model.n_points,
        "lift": model.hit_ratio / base.hit_ratio - 1.0 if base.hit_ratio > 0 else float("inf"),
        "epochs": len(res.trace), "best_epoch": res.best_epoch,
    }


# -- spectral timing ---------------------------------------------------------------------

def time_call(fn, repeat: int = 5, min_time: float = 0.02) -> float:
    """Best-of-``repeat`` seconds per call, looping short calls until ``min_time``."""
    loops = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        elapsed = time.perf_counter() - t0
        if elapsed >= min_time or loops >= 1 << 20:
            break
        loops *= 2
    best = elapsed / loops
    for _ in range(repeat - 1):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        best = min(best, (time.perf_counter() - t0) / loops)
    return best


def coefficient_timings(degrees, kappa: float = 1.0, g_max: float = 2.0, p: int = 3) -> list[tuple[int, float]]:
    """Time to compute heat-kernel Chebyshev coefficients at each interpolation degree."""
    return [
        (int(n), time_call(lambda n=n: spectral.chebyshev_coeffs(spectral.heat_kernel, kappa, p, int(n), g_max)))
        for n in degrees
    ]


def oracle_timings(sizes, seed: int = 0, kappa: float = 1.0) -> list[tuple[int, float]]:
    """Time of the dense eigendecomposition wavelet on random hypergraph Laplacians."""
    rng = np.random.default_rng([seed, 11])
    out = []
    for n in sizes:
        n = int(n)
        hg = random_hypergraph(n, rng)
        dense = hypergraph.laplacian(hg.incidence, hg.weights).dense()

        def oracle(dense=dense, n=n):
            spec = spectral.exact_spectrum(dense, cap=n)
            return spectral.exact_wavelet(spec, spectral.heat_kernel, kappa, cap=n)

        out.append((n, time_call(oracle, repeat=3 if n <= 256 else 2, min_time=0.05)))
    return out


def loglog_slope(pairs) -> float:
    x = np.log([n for n, _ in pairs])
    y = np.log([t for _, t in pairs])
    return float(np.polyfit(x, y, 1)[0])


COEFF_DEGREES = (256, 512, 1024, 2048, 4096, 8192)
ORACLE_SIZES = (64, 128, 256, 512, 1024)


def spectral_bench(degrees=COEFF_DEGREES, sizes=ORACLE_SIZES, seed: int = 0) -> list[dict]:
    """Rows of (n, coeff_time, oracle_time); a blank entry means not measured at that n."""
    coeff = dict(coefficient_timings(degrees))
    oracle = dict(oracle_timings(sizes, seed))
    return [{"n": n, "coeff_time": coeff.get(n), "oracle_time": oracle.get(n)} for n in sorted(set(coeff) | set(oracle))]
