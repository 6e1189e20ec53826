from pathlib import Path

import numpy as np
import pytest

from driftrec import data, experiments, hypergraph

FIXTURE = Path(__file__).parent / "fixtures" / "small"


@pytest.fixture
def small_paths():
    return FIXTURE / "interactions.jsonl", FIXTURE / "resumes.jsonl", FIXTURE / "jobs.jsonl"


@pytest.fixture
def small_dataset(small_paths):
    return data.ingest(*small_paths)


def random_laplacian(n, seed, n_edges=None):
    rng = np.random.default_rng(seed)
    hg = experiments.random_hypergraph(n, rng, n_edges)
    return hypergraph.laplacian(hg.incidence, hg.weights).dense()


def micro_network(activation="relu", seed=0, wavelet=True, n_nodes=6, window=3, n_labels=3):
    """Two user groups over n_nodes job groups, K=4 topics, d=5."""
    from driftrec import hypergraph as hg_mod
    from driftrec import spectral
    from driftrec.model import Batch, Dims, GroupGraph, Network, init_params

    rng = np.random.default_rng(seed)
    n_jobs, k, d = 2 * n_nodes, 4, 5
    job_node = np.arange(n_jobs) % n_nodes
    job_topics = rng.dirichlet(np.ones(k), size=n_jobs)
    job_labels = np.arange(n_jobs) % n_labels
    graphs = []
    for g in range(2):
        seqs = [rng.integers(0, n_nodes, size=4).tolist() for _ in range(5)]
        hg = hg_mod.build_hypergraph(n_nodes, hg_mod.build_session_hyperedges(seqs), hg_mod.build_transition_hyperedges(seqs))
        lap = hg_mod.laplacian(hg.incidence, hg.weights)
        bank = spectral.build_filter_bank(lap.L, scales_count=2, p=3)
        signal = hg_mod.build_group_signal(hg_mod.mean_group_topics(job_topics, job_node, n_nodes), rng.integers(0, 5, n_nodes))
        graphs.append(GroupGraph(bank, signal))
    dims = Dims(k, d, n_labels, 2, 1)
    params = init_params(dims, graphs, seed, activation)
    # move the spectral filters away from 1 so their gradients are exercised
    for name in params:
        if name.startswith("wave_g"):
            params[name] += 0.3 * rng.standard_normal(params[name].shape)
    params["b_f"] += 0.1 * rng.standard_normal(n_labels)
    net = Network(params, dims, graphs, job_topics, job_node, job_labels, activation, wavelet)
    windows = rng.integers(0, n_jobs, size=(4, window))
    windows[0, 0] = -1  # one left-padded window
    batch = Batch(1, windows, rng.integers(0, n_jobs, size=4))
    return net, batch


def gradient_check(net, batch, h=1e-6):
    """Relative error of the analytic gradient per parameter tensor."""
    _, grads = net.loss_and_grads(batch)
    out = {}
    for name, arr in net.params.items():
        if name not in grads:
            continue
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = net.loss_and_grads(batch)[0]
            arr[idx] = old - h
            down = net.loss_and_grads(batch)[0]
            arr[idx] = old
            num[idx] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(num) + np.linalg.norm(grads[name]), 1e-30)
        out[name] = float(np.linalg.norm(num - grads[name]) / denom)
    return out


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
