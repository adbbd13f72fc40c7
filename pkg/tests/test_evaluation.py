import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymsim.corpus import LabeledPair, RelatednessLabel
from asymsim.evaluation import (EvalReport, RankedList, UndefinedMetricError, mse, pearson,
                                rank_all, relevant_ids, retrieval_metrics, spearman)

from oracles import ranking_oracle


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    with pytest.raises(UndefinedMetricError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [1])


def test_spearman_with_ties_matches_average_ranks():
    x = [10, 20, 20, 30, 40]
    y = [1, 3, 2, 5, 4]
    # explicit average ranks of x: 1, 2.5, 2.5, 4, 5
    assert spearman(x, y) == pytest.approx(pearson([1, 2.5, 2.5, 4, 5], y), abs=1e-15)
    assert spearman([1, 2, 3, 4], [1, 4, 9, 16]) == pytest.approx(1.0)


def test_mse_examples():
    assert mse([1, 3], [1, 5]) == 2.0
    with pytest.raises(ValueError):
        mse([], [])


def test_ranked_list_breaks_ties_by_id():
    r = RankedList.build("q", ["t3", "t1", "t2"], [0.5, 0.5, 0.9], {"t1"})
    assert r.ticket_ids == ("t2", "t1", "t3")
    assert r.relevant == (False, True, False)


def _single(rel_rank, n=20):
    ids = [f"t{i:02d}" for i in range(n)]
    scores = [1.0 - i / n for i in range(n)]
    return RankedList.build("q", ids, scores, {ids[rel_rank - 1]})


def test_relevant_at_rank_one():
    m = retrieval_metrics([_single(1)])
    assert m["map@10"] == m["mrr@10"] == m["acc@10"] == 1.0


def test_relevant_at_rank_three():
    m = retrieval_metrics([_single(3)])
    assert m["mrr@10"] == pytest.approx(1 / 3)
    assert m["acc@1"] == 0.0 and m["acc@5"] == 1.0


def test_queries_without_relevant_items_are_skipped():
    empty = RankedList.build("q2", ["t0", "t1"], [0.2, 0.1], set())
    assert retrieval_metrics([_single(1), empty]) == retrieval_metrics([_single(1)])
    with pytest.raises(UndefinedMetricError):
        retrieval_metrics([empty])


def test_relevance_policy():
    Y, R, N = RelatednessLabel.YES, RelatednessLabel.REL, RelatednessLabel.NO
    gold = [LabeledPair.make("q", "a", Y), LabeledPair.make("q", "b", R),
            LabeledPair.make("q", "c", N)]
    assert relevant_ids(gold)["q"] == {"a"}
    assert relevant_ids(gold, "yes+rel")["q"] == {"a", "b"}
    with pytest.raises(ValueError):
        relevant_ids(gold, "all")


def random_instance(rng):
    n_t = int(rng.integers(1, 21))
    n_q = int(rng.integers(1, 6))
    ids = [f"t{i:02d}" for i in range(n_t)]
    # coarse scores so ties occur
    scores = rng.integers(0, 5, size=(n_q, n_t)).astype(float) / 4
    rel = [{t for t in ids if rng.random() < 0.3} for _ in range(n_q)]
    if not any(rel):
        rel[0] = {ids[0]}
    return ids, scores, rel


def test_metrics_match_definitional_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        ids, scores, rel = random_instance(rng)
        qids = [f"q{i}" for i in range(len(scores))]
        got = retrieval_metrics(rank_all(scores, qids, ids, dict(zip(qids, rel)), 10))
        want = ranking_oracle(scores, ids, rel)
        for key, value in want.items():
            assert got[key] == pytest.approx(value, abs=1e-12), key


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_monotonicity(seed):
    ids, scores, rel = random_instance(np.random.default_rng(seed))
    qids = [f"q{i}" for i in range(len(scores))]
    m = retrieval_metrics(rank_all(scores, qids, ids, dict(zip(qids, rel)), 10))
    assert m["acc@1"] <= m["acc@5"] <= m["acc@10"]
    assert m["mrr@1"] <= m["mrr@5"] <= m["mrr@10"]
    assert all(0.0 <= v <= 1.0 for v in m.values())


def test_full_list_with_every_relevant_has_acc_one():
    rng = np.random.default_rng(5)
    ids, scores, rel = random_instance(rng)
    qids = [f"q{i}" for i in range(len(scores))]
    m = retrieval_metrics(rank_all(scores, qids, ids, dict(zip(qids, rel))), ks=(len(ids),))
    assert m[f"acc@{len(ids)}"] == 1.0


def test_report_has_twelve_metrics_in_fixed_order():
    rep = EvalReport(r=0.5).update({"acc@10": 0.25})
    keys = list(rep.to_dict())
    assert keys == ["r", "rho", "mse", "map@1", "map@5", "map@10", "mrr@1", "mrr@5",
                    "mrr@10", "acc@1", "acc@5", "acc@10"]
    assert rep.acc_10 == 0.25
    assert len(rep.table().splitlines()) == 12
