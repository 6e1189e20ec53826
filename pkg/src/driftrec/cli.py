"""Command-line entry point.

Every subcommand writes the effective configuration to ``config.txt`` in its
output directory.  Exit codes: 0 success, 1 usage, 2 invalid configuration,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

from . import config as cfgmod
from . import data, experiments, hypergraph, pipeline, synthgen, topics, train
from .config import ConfigError, RunConfig
from .recsys import PopularityRecommender, report_from_ranks

log = logging.getLogger("driftrec")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

DATA_FILES = ("interactions.jsonl", "resumes.jsonl", "jobs.jsonl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--seed", type=int, help="shorthand for --set seed=N")
    p.add_argument("--threads", type=int, help="cap on BLAS worker threads")
    p.add_argument("--overwrite", action="store_true", help="replace existing outputs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="driftrec", description="Session-based job recommendation pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate inputs and write sessions")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("topics", parents=[common], help="fit the topic model, or dump its top words")
    p.add_argument("action", nargs="?", choices=["fit", "dump"], default="fit")
    p.add_argument("--data", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--model", type=Path, help="topic model file (for dump)")
    p.add_argument("--top", type=int, default=10)

    p = sub.add_parser("cluster", parents=[common], help="group jobs and resume versions")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--topics", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("graph", parents=[common], help="build per-group hypergraphs, or print their stats")
    p.add_argument("action", nargs="?", choices=["build", "stats"], default="build")
    p.add_argument("--data", type=Path)
    p.add_argument("--topics", type=Path)
    p.add_argument("--clusters", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--dir", type=Path, help="graph directory (for stats)")

    p = sub.add_parser("train", parents=[common], help="train the recommender")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--topics", type=Path)
    p.add_argument("--clusters", type=Path)

    p = sub.add_parser("eval", parents=[common], help="evaluate a trained run on the test split")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("noise-sweep", parents=[common], help="noise-robustness sweep, full vs no-wavelet")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--rhos", type=float, nargs="+", default=list(experiments.NOISE_GRID))

    p = sub.add_parser("spectral-bench", parents=[common], help="coefficient vs dense-oracle timing")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--degrees", type=int, nargs="+", default=list(experiments.COEFF_DEGREES))
    p.add_argument("--sizes", type=int, nargs="+", default=list(experiments.ORACLE_SIZES))
    return parser


# -- helpers ------------------------------------------------------------------

def _overrides(args) -> list[str]:
    items = list(args.overrides)
    if args.seed is not None:
        items.append(f"seed={args.seed}")
    return items


def _run_config(args, base: dict | None = None) -> RunConfig:
    values = dict(base or {})
    if args.config is not None:
        values.update(cfgmod.parse_pairs(RunConfig, args.config.read_text(encoding="utf-8").splitlines(), str(args.config)))
    values.update(cfgmod.parse_pairs(RunConfig, _overrides(args), "--set"))
    return RunConfig(**values).validate()


def _prepare_out(path: Path, overwrite: bool, files=()) -> Path:
    """Create ``path``; refuse to replace existing outputs without --overwrite."""
    if path.exists() and not overwrite:
        clash = [f for f in files if (path / f).exists()] if files else list(path.iterdir())
        if clash:
            raise FileExistsError(f"{path} already has outputs ({clash[0]}); pass --overwrite")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo_config(out: Path, text: str) -> None:
    (out / "config.txt").write_text(text, encoding="utf-8")


def _ingest(data_dir: Path) -> data.Dataset:
    missing = [f for f in DATA_FILES if not (data_dir / f).exists()]
    if missing:
        raise FileNotFoundError(f"{data_dir}: missing {', '.join(missing)}")
    gt = data_dir / "ground_truth.jsonl"
    return data.ingest(*(data_dir / f for f in DATA_FILES), gt if gt.exists() else None)


def _semantics(ds, cfg, topics_path, clusters_path):
    if topics_path is None:
        return pipeline.fit_semantics(ds, cfg)
    model = topics.TopicModel.load(topics_path)
    if clusters_path is None:
        return pipeline.fit_semantics(ds, cfg, model)
    return pipeline.load_semantics(ds, model, clusters_path)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


# -- subcommands ------------------------------------------------------------------

def cmd_gen(args) -> None:
    values = {}
    if args.config is not None:
        values.update(cfgmod.parse_pairs(synthgen.GenConfig, args.config.read_text(encoding="utf-8").splitlines()))
    values.update(cfgmod.parse_pairs(synthgen.GenConfig, _overrides(args), "--set"))
    gcfg = synthgen.GenConfig(**values).validate()
    out = _prepare_out(args.out, args.overwrite, (*DATA_FILES, "ground_truth.jsonl"))
    ds, truth = synthgen.generate(gcfg)
    synthgen.write_dataset(ds, truth, out)
    _echo_config(out, "".join(f"{k}={cfgmod.format_value(v)}\n" for k, v in vars(gcfg).items()))
    log.info("gen users=%d jobs=%d sessions=%d interactions=%d", len(ds.users), len(ds.jobs), len(ds.sessions), len(ds.interactions))


def cmd_ingest(args) -> None:
    cfg = _run_config(args)
    ds = _ingest(args.data)
    out = _prepare_out(args.out, args.overwrite, ("sessions.jsonl", "summary.json"))
    data.write_jsonl(
        out / "sessions.jsonl",
        ({"user": s.user_id, "version": s.resume_version_index, "jobs": s.job_ids} for s in ds.sessions),
    )
    summary = {
        "users": len(ds.users), "jobs": len(ds.jobs), "documents": len(ds.documents),
        "interactions": len(ds.interactions), "sessions": len(ds.sessions), "labels": ds.n_labels,
        "warnings": ds.warnings,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _echo_config(out, cfg.dumps())
    log.info("ingest %s", summary)


def cmd_topics(args) -> None:
    if args.action == "dump":
        if args.model is None:
            raise UsageError("topics dump requires --model")
        model = topics.TopicModel.load(args.model)
        for z, words in enumerate(model.top_words(args.top)):
            print(f"{z}\t{' '.join(words)}")
        return
    if args.data is None or args.out is None:
        raise UsageError("topics fit requires --data and --out")
    cfg = _run_config(args)
    ds = _ingest(args.data)
    out = _prepare_out(args.out, args.overwrite, ("topics.bin",))
    model, _ = pipeline.fit_topics(ds, cfg)
    model.save(out / "topics.bin")
    _echo_config(out, cfg.dumps())
    log.info("topics K=%d V=%d iterations=%d", model.n_topics, len(model.vocab), len(model.trace) - 1)


def cmd_cluster(args) -> None:
    cfg = _run_config(args)
    ds = _ingest(args.data)
    out = _prepare_out(args.out, args.overwrite, ("clusters.bin", "job_clusters.csv", "user_clusters.csv"))
    sem = pipeline.fit_semantics(ds, cfg, topics.TopicModel.load(args.topics))
    pipeline.save_clusters(out / "clusters.bin", sem)
    _write_csv(out / "job_clusters.csv", ["entity_id", "cluster"], zip(ds.jobs, sem.job_group.tolist()))
    _write_csv(
        out / "user_clusters.csv", ["entity_id", "cluster"],
        ((f"{u}#{v}", int(g)) for (u, v), g in zip(sem.version_keys, sem.user_clusters.assignment)),
    )
    _echo_config(out, cfg.dumps())
    log.info("cluster job_groups=%d user_groups=%d", sem.job_clusters.k, sem.user_clusters.k)


def cmd_graph(args) -> None:
    if args.action == "stats":
        if args.dir is None:
            raise UsageError("graph stats requires --dir")
        for path in sorted(args.dir.glob("group_*.txt")):
            kinds = path.with_suffix(".kinds").read_text(encoding="utf-8").split()
            edges: dict[int, list[int]] = {}
            n_nodes = 0
            for line in path.read_text(encoding="utf-8").splitlines():
                if line.startswith("#"):
                    n_nodes = int(line.split("=", 1)[1])
                    continue
                v, e, _ = line.split()
                edges.setdefault(int(e), []).append(int(v))
            sess = [edges[e] for e in sorted(edges) if kinds[e] == hypergraph.SESSION]
            both = [edges[e] for e in sorted(edges)]
            d_s = hypergraph.density(n_nodes, sess) if n_nodes > 1 else 0.0
            d_b = hypergraph.density(n_nodes, both) if n_nodes > 1 else 0.0
            print(f"{path.stem}\tnodes={n_nodes}\tsession={len(sess)}\ttransition={len(both) - len(sess)}"
                  f"\tdensity_session={d_s:.4f}\tdensity_both={d_b:.4f}")
        return
    if args.data is None or args.out is None or args.topics is None or args.clusters is None:
        raise UsageError("graph build requires --data, --topics, --clusters and --out")
    cfg = _run_config(args)
    ds = _ingest(args.data)
    sem = _semantics(ds, cfg, args.topics, args.clusters)
    ctx = pipeline.build_context(ds, cfg, sem)
    out = _prepare_out(args.out, args.overwrite)
    for g, hg in enumerate(ctx.hypergraphs):
        (out / f"group_{g}.txt").write_text(f"# n_nodes={hg.n_nodes}\n" + hg.to_triplets(), encoding="utf-8")
        (out / f"group_{g}.kinds").write_text("".join(k + "\n" for k in hg.kinds), encoding="utf-8")
    _echo_config(out, cfg.dumps())
    log.info("graph groups=%d", len(ctx.hypergraphs))


def cmd_train(args) -> None:
    cfg = _run_config(args)
    ds = _ingest(args.data)
    out = _prepare_out(args.out, args.overwrite, ("checkpoint.bin", "trace.csv"))
    sem = _semantics(ds, cfg, args.topics, args.clusters)
    ctx = pipeline.build_context(ds, cfg, sem)
    res = train.train(ctx, progress=lambda row: log.info("epoch %s", row))
    train.save_checkpoint(out / "checkpoint.bin", res, cfg)
    train.write_trace(out / "trace.csv", res.trace, cfg.k)
    sem.topic_model.save(out / "topics.bin")
    pipeline.save_clusters(out / "clusters.bin", sem)
    _echo_config(out, cfg.dumps())
    log.info("train best_epoch=%d epochs=%d", res.best_epoch, len(res.trace))


def cmd_eval(args) -> None:
    params, _, meta = train.load_checkpoint(args.run / "checkpoint.bin")
    cfg = _run_config(args, meta["config"])
    ds = _ingest(args.data)
    sem = pipeline.load_semantics(ds, topics.TopicModel.load(args.run / "topics.bin"), args.run / "clusters.bin")
    ctx = pipeline.build_context(ds, cfg, sem)
    net = train.build_network(ctx, params)
    pts = train.evaluation_points(ctx, ctx.split.test)
    report = train.evaluate(net, ctx, pts, cfg.k)
    pop = PopularityRecommender(ds, [ds.sessions[i] for i in ctx.split.train])
    truth = [int(ctx.session_jobs[s][p]) for s, p in zip(pts.sessions, pts.positions)]
    base = report_from_ranks(pop.ranks(truth), cfg.k)
    result = dict(report.to_json())
    result["popularity"] = {f"H@{cfg.k}": base.hit_ratio, f"M@{cfg.k}": base.mrr}
    if ctx.session_noisy is not None:
        clean = train.evaluation_points(ctx, ctx.split.test, clean_only=True)
        if len(clean):
            c = train.evaluate(net, ctx, clean, cfg.k)
            result["clean_targets"] = {f"H@{cfg.k}": c.hit_ratio, f"M@{cfg.k}": c.mrr, "n_points": c.n_points}
    out = _prepare_out(args.out or args.run, args.overwrite or args.out is None, ("eval.json",))
    (out / "eval.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.out is not None:
        _echo_config(out, cfg.dumps())
    print(f"{'model':<12}{'H@' + str(cfg.k):>10}{'M@' + str(cfg.k):>10}")
    print(f"{'driftrec':<12}{report.hit_ratio:>10.4f}{report.mrr:>10.4f}")
    print(f"{'popularity':<12}{base.hit_ratio:>10.4f}{base.mrr:>10.4f}")


def cmd_noise_sweep(args) -> None:
    cfg = _run_config(args, experiments.sweep_run_config().as_dict())
    out = _prepare_out(args.out, args.overwrite, ("sweep.csv", "summary.json"))
    gcfg = experiments.sweep_gen_config()
    rows = experiments.run_noise_sweep(gcfg, cfg, sorted(args.rhos), range(cfg.seed, cfg.seed + args.seeds))
    cols = ["seed", "rho", "variant", "hit", "mrr", "hit_all", "mrr_all", "epochs"]
    _write_csv(out / "sweep.csv", cols, ([r[c] for c in cols] for r in rows))
    summ = experiments.summarize_sweep(rows, args.rhos[0], 0.5 if 0.5 in args.rhos else max(args.rhos))
    (out / "summary.json").write_text(json.dumps(vars(summ), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _echo_config(out, cfg.dumps())


def cmd_spectral_bench(args) -> None:
    cfg = _run_config(args)
    out = args.out
    if out.exists() and not args.overwrite:
        raise FileExistsError(f"{out} exists; pass --overwrite")
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = experiments.spectral_bench(args.degrees, args.sizes, cfg.seed)
    _write_csv(out, ["n", "coeff_time", "oracle_time"], ([r["n"], _fmt(r["coeff_time"]), _fmt(r["oracle_time"])] for r in rows))
    _echo_config(out.parent, cfg.dumps())


COMMANDS = {
    "gen": cmd_gen, "ingest": cmd_ingest, "topics": cmd_topics, "cluster": cmd_cluster, "graph": cmd_graph,
    "train": cmd_train, "eval": cmd_eval, "noise-sweep": cmd_noise_sweep, "spectral-bench": cmd_spectral_bench,
}


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s level=%(levelname)s logger=%(name)s %(message)s",
    )
    if args.threads is not None and args.threads < 1:
        print("threads: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with _thread_limit(args.threads):
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"driftrec {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"driftrec {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
