import dataclasses

import numpy as np
import pytest

from driftrec import config, data, synthgen

SMALL = synthgen.GenConfig(n_users=300, n_jobs=100, n_topics=5, vocab_size=200, mean_session_len=8, seed=3)


@pytest.fixture(scope="module")
def small():
    return synthgen.generate(SMALL)


def test_every_topic_has_jobs(small):
    ds, truth = small
    assert set(truth.job_topic.values()) == set(range(5))
    assert ds.n_labels == 5


def test_revision_gap_and_drift_statistics():
    # a long horizon keeps right-censoring of the last gap negligible
    cfg = dataclasses.replace(SMALL, n_users=100, horizon_days=2000.0, mean_session_len=2)
    ds, truth = synthgen.generate(cfg)
    gaps, drifts = [], []
    for u in ds.users.values():
        ts = u.revision_times
        gaps += np.diff(ts).tolist()
        for vi in range(1, len(ts)):
            drifts.append(truth.pref_topic[(u.id, vi)] != truth.pref_topic[(u.id, vi - 1)])
    assert np.mean(gaps) / synthgen.DAY == pytest.approx(7.28, rel=0.03)
    assert np.mean(drifts) == pytest.approx(0.77, abs=0.02)


def test_noise_fraction_and_clean_length():
    ds, truth = synthgen.generate(dataclasses.replace(SMALL, noise_pct=0.3, mean_session_len=20))
    assert np.mean(truth.noisy) == pytest.approx(0.3, abs=0.01)
    clean_lengths = [sum(not f for f in flags) for flags in _session_flags(ds)]
    assert np.mean(clean_lengths) == pytest.approx(20, rel=0.03)


def _session_flags(ds):
    flags = ds.noisy_lookup()
    return [[flags[it] for it in s.interactions] for s in ds.sessions]


def test_clean_interactions_follow_preference(small):
    ds, truth = small
    pos = {it: i for i, it in enumerate(ds.interactions)}
    for s in ds.sessions:
        topic = truth.pref_topic[(s.user_id, s.resume_version_index)]
        for it in s.interactions:
            noisy = truth.noisy[pos[it]]
            assert (truth.job_topic[it.job_id] == topic) != noisy


def test_noise_sweep_shares_the_world():
    sweep = synthgen.noise_sweep(SMALL, [0.0, 0.2, 0.5])
    (_, d0, t0), (_, d2, t2), (_, d5, t5) = sweep
    assert not any(t0.noisy)
    for ds, t in ((d2, t2), (d5, t5)):
        assert ds.users == d0.users and ds.jobs == d0.jobs and ds.documents == d0.documents
        clean = [it for it, f in zip(ds.interactions, t.noisy) if not f]
        assert clean == list(d0.interactions)
    assert len(synthgen.noise_sweep(SMALL, [0.0])) == 1
    with pytest.raises(ValueError):
        synthgen.noise_sweep(SMALL, [0.5, 0.1])


def test_validation():
    with pytest.raises(config.ConfigError, match="noise_pct"):
        dataclasses.replace(SMALL, noise_pct=1.0).validate()
    with pytest.raises(config.ConfigError, match="n_jobs"):
        dataclasses.replace(SMALL, n_jobs=3).validate()


def test_written_files_reingest_identically(small, tmp_path):
    ds, truth = small
    synthgen.write_dataset(ds, truth, tmp_path)
    back = data.ingest(
        tmp_path / "interactions.jsonl", tmp_path / "resumes.jsonl", tmp_path / "jobs.jsonl", tmp_path / "ground_truth.jsonl"
    )
    assert back.users == ds.users and back.jobs == ds.jobs and back.sessions == ds.sessions
    assert back.documents == ds.documents
    assert back.annotations == ds.annotations


def test_same_seed_same_bytes(tmp_path):
    for name in ("a", "b"):
        ds, truth = synthgen.generate(SMALL)
        synthgen.write_dataset(ds, truth, tmp_path / name)
    for f in ("interactions.jsonl", "resumes.jsonl", "jobs.jsonl", "ground_truth.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
