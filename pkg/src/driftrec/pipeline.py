"""Upstream stages shared by training and evaluation.

Topics are fitted on every resume version and job document; jobs and resume
versions are then clustered separately.  A session belongs to the user group
of the resume version that governs it, so a revised resume can move a user
to a different group.  Each user group gets a hypergraph over all job groups
built from its training sessions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import clustering, hypergraph, serialize, spectral, topics
from .config import RunConfig
from .data import Dataset, Session
from .model import GroupGraph

log = logging.getLogger(__name__)


@dataclass
class Semantics:
    """Topic model and clusterings; depends only on the documents."""

    topic_model: topics.TopicModel
    doc_index: dict[str, int]
    job_topics: np.ndarray  # [n_jobs, K]
    job_clusters: clustering.Clustering
    user_clusters: clustering.Clustering
    version_keys: list[tuple[str, int]]  # row order of user_clusters

    @property
    def job_group(self) -> np.ndarray:
        return self.job_clusters.assignment

    def version_group(self) -> dict[tuple[str, int], int]:
        return {key: int(g) for key, g in zip(self.version_keys, self.user_clusters.assignment)}


@dataclass
class Split:
    train: list[int]
    val: list[int]
    test: list[int]


@dataclass
class Context:
    dataset: Dataset
    config: RunConfig
    semantics: Semantics
    split: Split
    session_group: np.ndarray  # user group per session
    session_jobs: list[np.ndarray]  # job indices per session
    graphs: list[GroupGraph]
    hypergraphs: list[hypergraph.Hypergraph]
    job_labels: np.ndarray
    n_labels: int
    session_noisy: list[np.ndarray] | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_user_groups(self) -> int:
        return len(self.graphs)


def corpus_documents(dataset: Dataset) -> list[str]:
    """Job documents first (in job-id order), then resume versions (user-id order)."""
    ids = [j.requirement_document for j in dataset.jobs.values()]
    ids += [d for u in dataset.users.values() for _, d in u.resume_versions]
    return ids


def fit_topics(dataset: Dataset, config: RunConfig) -> tuple[topics.TopicModel, dict[str, int]]:
    doc_ids = corpus_documents(dataset)
    corpus = topics.build_corpus([dataset.documents[d].token_counts for d in doc_ids])
    model = topics.em_fit(corpus, config.n_topics, config.topic_iters, config.topic_tol, config.seed)
    return model, {d: i for i, d in enumerate(doc_ids)}


def fit_semantics(dataset: Dataset, config: RunConfig, topic_model=None) -> Semantics:
    if topic_model is None:
        topic_model, doc_index = fit_topics(dataset, config)
    else:
        doc_index = {d: i for i, d in enumerate(corpus_documents(dataset))}
        if topic_model.p_z_given_d.shape[0] != len(doc_index):
            raise ValueError("topic model was fitted on a different document set")
    pzd = topic_model.p_z_given_d
    jobs = list(dataset.jobs.values())
    job_topics = np.array([pzd[doc_index[j.requirement_document]] for j in jobs])
    job_feats = np.array([clustering.build_feature(t, j.attributes) for t, j in zip(job_topics, jobs)])
    k_v = clustering.choose_k(len(jobs), config.job_ratio)
    job_clusters = clustering.kmeans_fit(job_feats, k_v, config.kmeans_iters, config.seed)

    keys, feats = [], []
    for u in dataset.users.values():
        for vi, (_, doc) in enumerate(u.resume_versions):
            keys.append((u.id, vi))
            feats.append(clustering.build_feature(pzd[doc_index[doc]], u.attributes))
    k_u = clustering.choose_k(len(dataset.users), config.user_ratio)
    k_u = min(k_u, len(feats))
    user_clusters = clustering.kmeans_fit(np.array(feats), k_u, config.kmeans_iters, config.seed)
    log.info("semantics: %d topics, %d job groups, %d user groups", topic_model.n_topics, k_v, k_u)
    return Semantics(topic_model, doc_index, job_topics, job_clusters, user_clusters, keys)


def save_clusters(path, sem: Semantics) -> None:
    arrays = {}
    for name, c in (("job", sem.job_clusters), ("user", sem.user_clusters)):
        arrays[f"{name}_centroids"] = c.centroids
        arrays[f"{name}_assignment"] = c.assignment
        arrays[f"{name}_trace"] = np.asarray(c.trace, dtype=np.float64)
    meta = {
        "version_keys": [[u, v] for u, v in sem.version_keys],
        "inertia": {"job": sem.job_clusters.inertia, "user": sem.user_clusters.inertia},
        "iterations": {"job": sem.job_clusters.iterations, "user": sem.user_clusters.iterations},
    }
    serialize.save_arrays(path, "clusters", arrays, meta)


def load_semantics(dataset: Dataset, topic_model: topics.TopicModel, clusters_path) -> Semantics:
    """Rebuild :class:`Semantics` from a saved topic model and clustering file."""
    arrays, meta = serialize.load_arrays(clusters_path, "clusters")
    doc_index = {d: i for i, d in enumerate(corpus_documents(dataset))}
    if topic_model.p_z_given_d.shape[0] != len(doc_index):
        raise ValueError("topic model was fitted on a different document set")
    keys = [(u, int(v)) for u, v in meta["version_keys"]]
    expected = [(u.id, vi) for u in dataset.users.values() for vi in range(len(u.resume_versions))]
    if keys != expected or arrays["job_assignment"].size != len(dataset.jobs):
        raise ValueError("clustering was computed on a different dataset")

    def restore(name):
        return clustering.Clustering(
            arrays[f"{name}_centroids"], arrays[f"{name}_assignment"], float(meta["inertia"][name]),
            arrays[f"{name}_trace"].tolist(), int(meta["iterations"][name]),
        )

    pzd = topic_model.p_z_given_d
    job_topics = np.array([pzd[doc_index[j.requirement_document]] for j in dataset.jobs.values()])
    return Semantics(topic_model, doc_index, job_topics, restore("job"), restore("user"), keys)


def split_sessions(n_sessions: int, config: RunConfig) -> Split:
    """Random 20% test; the rest split 4:1 into train/validation."""
    rng = np.random.default_rng([config.seed, 3])
    order = rng.permutation(n_sessions)
    n_test = int(round(config.test_frac * n_sessions))
    rest = order[n_test:]
    n_val = int(round(config.val_frac * rest.size))
    return Split(sorted(rest[n_val:].tolist()), sorted(rest[:n_val].tolist()), sorted(order[:n_test].tolist()))


def build_group_graph(
    sessions_nodes: list[np.ndarray],
    n_nodes: int,
    node_topics: np.ndarray,
    config: RunConfig,
) -> tuple[GroupGraph, hypergraph.Hypergraph]:
    seqs = [s.tolist() for s in sessions_nodes]
    hg = hypergraph.build_hypergraph(
        n_nodes,
        hypergraph.build_session_hyperedges(seqs),
        hypergraph.build_transition_hyperedges(seqs),
    )
    lap = hypergraph.laplacian(hg.incidence, hg.weights)
    bank = spectral.build_filter_bank(
        lap.L, config.scales, config.cheb_order, config.interp_degree, config.kappa_cap
    )
    counts = np.bincount(np.concatenate(sessions_nodes), minlength=n_nodes) if seqs else np.zeros(n_nodes)
    signal = hypergraph.build_group_signal(node_topics, counts)
    return GroupGraph(bank, signal), hg


def build_context(dataset: Dataset, config: RunConfig, semantics: Semantics | None = None) -> Context:
    config.validate()
    if not dataset.sessions:
        raise ValueError("dataset has no sessions")
    sem = semantics or fit_semantics(dataset, config)
    job_index = dataset.job_index()
    vgroup = sem.version_group()
    session_group = np.array([vgroup[(s.user_id, s.resume_version_index)] for s in dataset.sessions])
    session_jobs = [np.array([job_index[j] for j in s.job_ids], dtype=np.int64) for s in dataset.sessions]
    split = split_sessions(len(dataset.sessions), config)

    k_v = sem.job_clusters.k
    node_topics = hypergraph.mean_group_topics(sem.job_topics, sem.job_group, k_v)
    graphs, hgs = [], []
    train = np.asarray(split.train, dtype=np.int64)
    for g in range(sem.user_clusters.k):
        members = train[session_group[train] == g] if train.size else train
        seqs = [sem.job_group[session_jobs[i]] for i in members]
        gg, hg = build_group_graph(seqs, k_v, node_topics, config)
        graphs.append(gg)
        hgs.append(hg)

    labels = np.array([j.label for j in dataset.jobs.values()], dtype=np.int64)
    noisy = None
    if dataset.annotations is not None:
        flags = dataset.noisy_lookup()
        noisy = [np.array([flags[it] for it in s.interactions]) for s in dataset.sessions]
    return Context(
        dataset, config, sem, split, session_group, session_jobs, graphs, hgs, labels, dataset.n_labels, noisy
    )
