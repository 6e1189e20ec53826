"""Domain entities, JSON-Lines ingestion and resume-driven session segmentation."""

from __future__ import annotations

import bisect
import enum
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+")


class IngestError(ValueError):
    """Raised when an input file references an unknown user or job."""


class Kind(str, enum.Enum):
    BROWSE = "browse"
    CLICK = "click"
    CHAT = "chat"
    APPLY = "apply"


@dataclass(frozen=True)
class User:
    id: str
    resume_versions: tuple[tuple[int, str], ...]
    attributes: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.resume_versions:
            raise ValueError(f"user {self.id} has no resume version")
        ts = [t for t, _ in self.resume_versions]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"user {self.id}: resume timestamps must be strictly increasing")

    @property
    def revision_times(self) -> list[int]:
        return [t for t, _ in self.resume_versions]


@dataclass(frozen=True)
class Job:
    id: str
    requirement_document: str
    attributes: tuple[float, ...] = ()
    label: int = 0


@dataclass(frozen=True)
class Interaction:
    user_id: str
    job_id: str
    timestamp: int
    kind: Kind = Kind.CLICK

    def sort_key(self):
        return (self.timestamp, self.job_id, self.kind.value)


@dataclass(frozen=True)
class Session:
    user_id: str
    resume_version_index: int
    interactions: tuple[Interaction, ...]

    def __post_init__(self):
        if not self.interactions:
            raise ValueError("a session must contain at least one interaction")

    @property
    def job_ids(self) -> list[str]:
        return [it.job_id for it in self.interactions]


@dataclass(frozen=True)
class Document:
    id: str
    token_counts: dict[str, int]
    text: str = field(default="", compare=False, repr=False)


@dataclass(frozen=True)
class Annotations:
    """Generator ground truth carried alongside a synthetic dataset.

    ``noisy`` is aligned with ``Dataset.interactions``; ``pref_topic`` maps
    ``(user_id, resume_version_index)`` to the preferred topic of that version.
    """

    noisy: tuple[bool, ...]
    pref_topic: dict[tuple[str, int], int]


@dataclass(frozen=True)
class Dataset:
    users: dict[str, User]
    jobs: dict[str, Job]
    documents: dict[str, Document]
    interactions: tuple[Interaction, ...]
    sessions: tuple[Session, ...]
    annotations: Annotations | None = None
    warnings: int = field(default=0, compare=False)

    @property
    def n_labels(self) -> int:
        return max((j.label for j in self.jobs.values()), default=-1) + 1

    def job_index(self) -> dict[str, int]:
        return {jid: i for i, jid in enumerate(self.jobs)}

    def noisy_lookup(self) -> dict[Interaction, bool]:
        """Map interactions to their noise flag (empty without annotations)."""
        if self.annotations is None:
            return {}
        out: dict[Interaction, bool] = {}
        for it, flag in zip(self.interactions, self.annotations.noisy):
            # duplicated interactions keep the clean flag if any copy is clean
            out[it] = out.get(it, True) and flag
        return out


def tokenize(text: str) -> dict[str, int]:
    """Lowercase, split on non-alphanumeric runs and drop one-character tokens."""
    tokens = [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]
    return dict(Counter(tokens))


def segment_sessions(user: User, interactions: Iterable[Interaction]) -> list[Session]:
    """Split a user's interactions at resume-revision timestamps.

    An interaction stamped exactly at a revision belongs to the new version;
    anything before the first version is attached to version 0.
    """
    items = sorted(interactions, key=Interaction.sort_key)
    bounds = user.revision_times
    buckets: dict[int, list[Interaction]] = {}
    for it in items:
        idx = max(bisect.bisect_right(bounds, it.timestamp) - 1, 0)
        buckets.setdefault(idx, []).append(it)
    return [Session(user.id, idx, tuple(buckets[idx])) for idx in sorted(buckets)]


def minmax(rows: Sequence[Sequence[float]]) -> list[tuple[float, ...]]:
    if not rows:
        return []
    width = max(len(r) for r in rows)
    cols = [[r[c] if c < len(r) else 0.0 for r in rows] for c in range(width)]
    lo = [min(c) for c in cols]
    hi = [max(c) for c in cols]
    out = []
    for r in rows:
        vals = []
        for c in range(width):
            x = r[c] if c < len(r) else 0.0
            span = hi[c] - lo[c]
            vals.append((x - lo[c]) / span if span > 0 else 0.0)
        out.append(tuple(vals))
    return out


def _read_jsonl(path, required: dict[str, type | tuple]):
    """Yield (line_number, record) for well-formed lines; count the rest."""
    bad = 0
    records = []
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(path)
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                bad += 1
                continue
            if not isinstance(rec, dict) or not all(
                k in rec and isinstance(rec[k], t) and not isinstance(rec[k], bool)
                for k, t in required.items()
            ):
                bad += 1
                continue
            records.append((lineno, rec))
    return records, bad


def _floats(xs) -> tuple[float, ...] | None:
    if not isinstance(xs, list):
        return None
    try:
        return tuple(float(x) for x in xs if not isinstance(x, bool))
    except (TypeError, ValueError):
        return None


def ingest(interaction_file, resume_file, job_file, ground_truth_file=None) -> Dataset:
    """Build a Dataset from the three JSON-Lines inputs.

    Malformed lines are skipped and counted in ``Dataset.warnings``; an
    interaction naming an unknown user or job raises :class:`IngestError`.
    """
    warnings = 0

    job_recs, bad = _read_jsonl(job_file, {"job": str, "text": str, "label": int})
    warnings += bad
    documents: dict[str, Document] = {}
    raw_jobs = {}
    for lineno, rec in job_recs:
        attrs = _floats(rec.get("attrs", []))
        if attrs is None or rec["label"] < 0 or rec["job"] in raw_jobs:
            warnings += 1
            continue
        raw_jobs[rec["job"]] = (rec, attrs)

    resume_recs, bad = _read_jsonl(resume_file, {"user": str, "ts": int, "text": str})
    warnings += bad
    versions: dict[str, dict[int, tuple[str, tuple[float, ...]]]] = {}
    for lineno, rec in resume_recs:
        attrs = _floats(rec.get("attrs", []))
        per_user = versions.setdefault(rec["user"], {})
        if attrs is None or rec["ts"] in per_user:
            warnings += 1
            continue
        per_user[rec["ts"]] = (rec["text"], attrs)

    job_ids = sorted(raw_jobs)
    job_attrs = minmax([raw_jobs[j][1] for j in job_ids])
    jobs: dict[str, Job] = {}
    for jid, attrs in zip(job_ids, job_attrs):
        rec = raw_jobs[jid][0]
        doc_id = f"job:{jid}"
        documents[doc_id] = Document(doc_id, tokenize(rec["text"]), rec["text"])
        jobs[jid] = Job(jid, doc_id, attrs, rec["label"])

    user_ids = sorted(versions)
    latest_attrs = [versions[u][max(versions[u])][1] for u in user_ids]
    users: dict[str, User] = {}
    for uid, attrs in zip(user_ids, minmax(latest_attrs)):
        vs = []
        for ts in sorted(versions[uid]):
            doc_id = f"resume:{uid}@{ts}"
            documents[doc_id] = Document(doc_id, tokenize(versions[uid][ts][0]), versions[uid][ts][0])
            vs.append((ts, doc_id))
        users[uid] = User(uid, tuple(vs), attrs)

    kinds = {k.value: k for k in Kind}
    inter_recs, bad = _read_jsonl(interaction_file, {"user": str, "job": str, "ts": int, "kind": str})
    warnings += bad
    interactions = []
    for lineno, rec in inter_recs:
        if rec["kind"] not in kinds:
            warnings += 1
            continue
        if rec["user"] not in users:
            raise IngestError(f"{interaction_file}:{lineno}: unknown user {rec['user']!r}")
        if rec["job"] not in jobs:
            raise IngestError(f"{interaction_file}:{lineno}: unknown job {rec['job']!r}")
        interactions.append(Interaction(rec["user"], rec["job"], rec["ts"], kinds[rec["kind"]]))

    by_user: dict[str, list[Interaction]] = {}
    for it in interactions:
        by_user.setdefault(it.user_id, []).append(it)
    sessions = []
    for uid in user_ids:
        sessions.extend(segment_sessions(users[uid], by_user.get(uid, [])))

    annotations = None
    if ground_truth_file is not None:
        annotations = _read_ground_truth(ground_truth_file, interactions)

    if warnings:
        log.warning("ingest skipped %d malformed line(s)", warnings)
    return Dataset(users, jobs, documents, tuple(interactions), tuple(sessions), annotations, warnings)


def _read_ground_truth(path, interactions: Sequence[Interaction]) -> Annotations:
    noisy = [False] * len(interactions)
    prefs: dict[tuple[str, int], int] = {}
    version_ts: dict[str, list[int]] = {}
    pref_recs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "pref_topic" in rec:
                pref_recs.append(rec)
                version_ts.setdefault(rec["user"], []).append(rec["ts"])
            elif "noisy" in rec:
                i = rec["i"]
                if not 0 <= i < len(interactions):
                    raise IngestError(f"{path}: interaction index {i} out of range")
                noisy[i] = bool(rec["noisy"])
    for uid in version_ts:
        version_ts[uid].sort()
    for rec in pref_recs:
        idx = version_ts[rec["user"]].index(rec["ts"])
        prefs[(rec["user"], idx)] = int(rec["pref_topic"])
    return Annotations(tuple(noisy), prefs)


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
