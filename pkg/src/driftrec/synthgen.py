"""Seeded generator of job-market logs with resume-driven preference drift.

World randomness (topics, documents, timelines, the clean interactions) and
noise randomness use separate streams, so datasets generated at different
noise rates share everything except the injected noisy interactions.  Noise
is added on top of the clean sessions: each session receives a negative
binomial number of extra off-topic interactions, which makes every
interaction of the merged session noisy with probability ``noise_pct``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data
from .data import Annotations, Dataset, Document, Interaction, Job, Kind, Session, User

DAY = 86_400
KINDS = (Kind.BROWSE, Kind.CLICK, Kind.CHAT, Kind.APPLY)
KIND_P = (0.6, 0.25, 0.1, 0.05)


@dataclass
class GenConfig:
    n_users: int = 2000
    n_jobs: int = 1000
    n_topics: int = 20
    mean_session_len: float = 20.0
    mean_revision_gap_days: float = 7.28
    drift_prob_on_revision: float = 0.77
    noise_pct: float = 0.1
    vocab_size: int = 2000
    seed: int = 0
    horizon_days: float = 28.0
    doc_len: int = 60
    lexical_noise: float = 0.1
    resume_focus: float = 0.7
    n_attrs: int = 2

    def validate(self) -> "GenConfig":
        from .config import ConfigError

        for name in ("n_users", "n_jobs", "n_topics", "vocab_size", "doc_len"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        for name in ("drift_prob_on_revision", "noise_pct", "lexical_noise", "resume_focus"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(name, "must lie in [0, 1]")
        if self.noise_pct >= 1.0:
            raise ConfigError("noise_pct", "must be < 1")
        if self.mean_session_len < 1.0:
            raise ConfigError("mean_session_len", "must be >= 1")
        for name in ("mean_revision_gap_days", "horizon_days"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        if self.vocab_size < self.n_topics:
            raise ConfigError("vocab_size", "must be >= n_topics")
        if self.n_jobs < self.n_topics:
            raise ConfigError("n_jobs", "must be >= n_topics so every topic has jobs")
        return self


@dataclass
class GroundTruth:
    pref_topic: dict[tuple[str, int], int]  # (user, version index) -> topic
    version_ts: dict[tuple[str, int], int]
    noisy: list[bool]  # aligned with Dataset.interactions
    job_topic: dict[str, int]


@dataclass
class _World:
    """Everything that does not depend on the noise rate."""

    users: list[User]
    jobs: list[Job]
    documents: dict[str, Document]
    job_topic: np.ndarray
    topic_jobs: list[np.ndarray]
    pref: dict[tuple[str, int], int]
    # per (user, version): (start_ts, end_ts, clean interactions)
    slots: list[tuple[str, int, int, int, list[Interaction]]]


def _topic_word_dists(cfg: GenConfig, rng) -> np.ndarray:
    """Each topic concentrates on its own block of the vocabulary."""
    v, k = cfg.vocab_size, cfg.n_topics
    blocks = np.array_split(np.arange(v), k)
    dists = np.zeros((k, v))
    for z, block in enumerate(blocks):
        w = rng.dirichlet(np.ones(block.size))
        dists[z, block] = w
    return dists


def _words(cfg: GenConfig) -> list[str]:
    width = len(str(cfg.vocab_size - 1))
    return [f"w{i:0{width}d}" for i in range(cfg.vocab_size)]


def _text(rng, mix: np.ndarray, cfg: GenConfig, words: list[str]) -> str:
    uniform = np.full(cfg.vocab_size, 1.0 / cfg.vocab_size)
    p = (1.0 - cfg.lexical_noise) * mix + cfg.lexical_noise * uniform
    ids = rng.choice(cfg.vocab_size, size=cfg.doc_len, p=p / p.sum())
    return " ".join(words[i] for i in ids)


def _build_world(cfg: GenConfig) -> _World:
    rng = np.random.default_rng([cfg.seed, 0])
    words = _words(cfg)
    dists = _topic_word_dists(cfg, rng)
    wid = len(str(max(cfg.n_users, cfg.n_jobs) - 1))

    job_topic = rng.permutation(np.arange(cfg.n_jobs) % cfg.n_topics)
    jobs, documents = [], {}
    job_texts = {}
    for j in range(cfg.n_jobs):
        jid = f"j{j:0{wid}d}"
        text = _text(rng, dists[job_topic[j]], cfg, words)
        attrs = tuple(float(a) for a in rng.random(cfg.n_attrs))
        jobs.append(Job(jid, f"job:{jid}", attrs, int(job_topic[j])))
        job_texts[jid] = text
    topic_jobs = [np.flatnonzero(job_topic == z) for z in range(cfg.n_topics)]

    users, pref, slots = [], {}, []
    resume_texts = {}
    horizon = cfg.horizon_days * DAY
    for u in range(cfg.n_users):
        uid = f"u{u:0{wid}d}"
        attrs = tuple(float(a) for a in rng.random(cfg.n_attrs))
        t = int(rng.integers(0, DAY))
        times = [t]
        while True:
            t = t + max(1, int(round(rng.exponential(cfg.mean_revision_gap_days * DAY))))
            if t >= horizon:
                break
            times.append(t)
        end = int(horizon)
        topic = int(rng.integers(cfg.n_topics))
        secondary = int(rng.integers(cfg.n_topics))
        versions = []
        for vi, ts in enumerate(times):
            if vi > 0 and rng.random() < cfg.drift_prob_on_revision and cfg.n_topics > 1:
                topic = int((topic + 1 + rng.integers(cfg.n_topics - 1)) % cfg.n_topics)
            pref[(uid, vi)] = topic
            mix = cfg.resume_focus * dists[topic] + (1.0 - cfg.resume_focus) * dists[secondary]
            doc_id = f"resume:{uid}@{ts}"
            resume_texts[doc_id] = _text(rng, mix, cfg, words)
            versions.append((ts, doc_id))
            start, stop = ts, (times[vi + 1] if vi + 1 < len(times) else end)
            n_clean = 1 + int(rng.poisson(cfg.mean_session_len - 1.0))
            stamps = np.sort(rng.integers(start, max(stop, start + 1), size=n_clean))
            picks = rng.choice(topic_jobs[topic], size=n_clean)
            kinds = rng.choice(len(KINDS), size=n_clean, p=KIND_P)
            clean = [
                Interaction(uid, jobs[j].id, int(s), KINDS[kd]) for s, j, kd in zip(stamps, picks, kinds)
            ]
            slots.append((uid, vi, start, max(stop, start + 1), clean))
        users.append(User(uid, tuple(versions), attrs))

    for jid, text in job_texts.items():
        documents[f"job:{jid}"] = Document(f"job:{jid}", data.tokenize(text), text)
    for doc_id, text in resume_texts.items():
        documents[doc_id] = Document(doc_id, data.tokenize(text), text)
    # attributes are stored min-max normalised, matching what ingest produces
    users = [
        dataclasses.replace(u, attributes=a) for u, a in zip(users, data.minmax([u.attributes for u in users]))
    ]
    jobs = [dataclasses.replace(j, attributes=a) for j, a in zip(jobs, data.minmax([j.attributes for j in jobs]))]
    return _World(users, jobs, documents, job_topic, topic_jobs, pref, slots)


def _add_noise(world: _World, cfg: GenConfig, rho: float):
    """Merge noisy interactions into every clean session."""
    n_jobs = len(world.jobs)
    all_inter: list[Interaction] = []
    flags: list[bool] = []
    sessions = []
    for slot_index, (uid, vi, start, stop, clean) in enumerate(world.slots):
        srng = np.random.default_rng([cfg.seed, 1, slot_index])
        n_noisy = int(srng.negative_binomial(len(clean), 1.0 - rho)) if rho > 0 else 0
        noisy_items = []
        if n_noisy:
            topic = world.pref[(uid, vi)]
            others = np.flatnonzero(world.job_topic != topic)
            if others.size == 0:
                others = np.arange(n_jobs)
            stamps = srng.integers(start, stop, size=n_noisy)
            picks = srng.choice(others, size=n_noisy)
            kinds = srng.choice(len(KINDS), size=n_noisy, p=KIND_P)
            noisy_items = [
                Interaction(uid, world.jobs[j].id, int(s), KINDS[kd]) for s, j, kd in zip(stamps, picks, kinds)
            ]
        merged = [(it, False) for it in clean] + [(it, True) for it in noisy_items]
        merged.sort(key=lambda pair: (pair[0].sort_key(), pair[1]))
        for it, flag in merged:
            all_inter.append(it)
            flags.append(flag)
        sessions.append((uid, vi, merged))
    return all_inter, flags, sessions


def _assemble(world: _World, cfg: GenConfig, rho: float) -> tuple[Dataset, GroundTruth]:
    inters, flags, slots = _add_noise(world, cfg, rho)
    users = {u.id: u for u in world.users}
    sessions = tuple(
        Session(uid, vi, tuple(it for it, _ in merged)) for uid, vi, merged in slots if merged
    )
    jobs = {j.id: j for j in world.jobs}
    dataset = Dataset(
        users, jobs, dict(world.documents), tuple(inters), sessions, Annotations(tuple(flags), dict(world.pref))
    )
    version_ts = {(u.id, vi): ts for u in world.users for vi, (ts, _) in enumerate(u.resume_versions)}
    truth = GroundTruth(dict(world.pref), version_ts, flags, {j.id: j.label for j in world.jobs})
    return dataset, truth


def generate(config: GenConfig) -> tuple[Dataset, GroundTruth]:
    config.validate()
    world = _build_world(config)
    return _assemble(world, config, config.noise_pct)


def noise_sweep(base_config: GenConfig, rhos) -> list[tuple[float, Dataset, GroundTruth]]:
    """Datasets over the same world that differ only in injected noise."""
    rhos = list(rhos)
    if rhos != sorted(rhos):
        raise ValueError("noise rates must be sorted")
    base_config.validate()
    world = _build_world(base_config)
    out = []
    for rho in rhos:
        cfg = dataclasses.replace(base_config, noise_pct=float(rho)).validate()
        ds, truth = _assemble(world, cfg, float(rho))
        out.append((float(rho), ds, truth))
    return out


def write_dataset(ds: Dataset, truth: GroundTruth, out_dir) -> None:
    """Emit interactions/resumes/jobs/ground_truth JSON-Lines files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs = ds.documents
    data.write_jsonl(
        out / "jobs.jsonl",
        (
            {"job": j.id, "text": docs[j.requirement_document].text, "attrs": list(j.attributes), "label": j.label}
            for j in ds.jobs.values()
        ),
    )
    data.write_jsonl(
        out / "resumes.jsonl",
        (
            {"user": u.id, "ts": ts, "text": docs[d].text, "attrs": list(u.attributes)}
            for u in ds.users.values()
            for ts, d in u.resume_versions
        ),
    )
    data.write_jsonl(
        out / "interactions.jsonl",
        ({"user": it.user_id, "job": it.job_id, "ts": it.timestamp, "kind": it.kind.value} for it in ds.interactions),
    )
    prefs = (
        {"user": uid, "ts": truth.version_ts[(uid, vi)], "pref_topic": topic}
        for (uid, vi), topic in sorted(truth.pref_topic.items())
    )
    noise = (
        {"i": i, "user": it.user_id, "job": it.job_id, "ts": it.timestamp, "noisy": flag}
        for i, (it, flag) in enumerate(zip(ds.interactions, truth.noisy))
    )
    data.write_jsonl(out / "ground_truth.jsonl", [*prefs, *noise])
