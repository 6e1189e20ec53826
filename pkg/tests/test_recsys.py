import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from driftrec import recsys


def test_metrics_by_hand():
    recs = [["a", "b", "c"], ["c", "a", "b"], ["b", "c", "a"]]
    truth = ["a", "b", "d"]
    assert recsys.hit_ratio(recs, truth, k=2) == pytest.approx(1 / 3)
    assert recsys.hit_ratio(recs, truth, k=3) == pytest.approx(2 / 3)
    assert recsys.mrr(recs, truth, k=3) == pytest.approx((1 + 1 / 3) / 3)


def test_metrics_accept_scored_lists():
    recs = [[("a", 0.9), ("b", 0.1)]]
    assert recsys.mrr(recs, ["b"], k=10) == pytest.approx(0.5)


def test_empty_evaluation_rejected():
    with pytest.raises(ValueError):
        recsys.hit_ratio([], [])
    with pytest.raises(ValueError):
        recsys.report_from_ranks(np.array([]), 10)


def test_ties_break_by_job_index():
    scores = np.array([0.5, 0.9, 0.5, 0.9])
    assert recsys.rank_order(scores).tolist() == [1, 3, 0, 2]
    assert recsys.ranks_of(scores, np.array([0])).tolist() == [3]
    assert recsys.top_k(scores, ["a", "b", "c", "d"], 2) == [("b", 0.9), ("d", 0.9)]


@settings(max_examples=60, deadline=None)
@given(
    scores=arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 12)), elements=st.sampled_from([0.0, 0.25, 0.5, 1.0])),
    data=st.data(),
)
def test_ranks_agree_with_sorted_lists(scores, data):
    truth = np.array([data.draw(st.integers(0, scores.shape[1] - 1)) for _ in range(scores.shape[0])])
    ranks = recsys.ranks_of(scores, truth)
    for row, t, r in zip(scores, truth, ranks):
        assert recsys.rank_order(row).tolist().index(t) + 1 == r
    rep = recsys.report_from_ranks(ranks, 3)
    lists = [recsys.rank_order(row).tolist() for row in scores]
    assert rep.hit_ratio == pytest.approx(recsys.hit_ratio(lists, truth.tolist(), 3))
    assert rep.mrr == pytest.approx(recsys.mrr(lists, truth.tolist(), 3))


def test_popularity_on_fixture(small_dataset):
    pop = recsys.PopularityRecommender(small_dataset)
    # counts: j1 3, j2 2, j3 3, j4 2, j5 2
    assert [j for j, _ in pop.recommend(5)] == ["j1", "j3", "j2", "j4", "j5"]
    assert pop.ranks(np.array([1, 4])).tolist() == [3, 5]


def test_report_json_keys():
    rep = recsys.report_from_ranks(np.array([1, 4, 20]), 10)
    js = rep.to_json()
    assert js["H@10"] == pytest.approx(2 / 3) and js["M@10"] == pytest.approx((1 + 0.25) / 3)
