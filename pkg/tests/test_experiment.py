import math
from dataclasses import replace

import pytest

from seqplan.dynamics import settle
from seqplan.experiment import aggregate, rerun, run_experiment, sequence_label


@pytest.fixture(scope="module")
def can_on_boxes(scenes):
    sf = scenes("can_on_boxes")
    return settle(sf.scene)[0], sf


@pytest.fixture(scope="module")
def small_experiment(can_on_boxes):
    sc, sf = can_on_boxes
    return run_experiment(sc, sf.weights, sf.config, runs=4, seed0=10)


def test_seeds_and_conservation(small_experiment):
    res = small_experiment
    assert [r.seed for r in res.records] == [10, 11, 12, 13]
    assert sum(res.stats.histogram.values()) == 4 == res.stats.runs


def test_percentages_in_range(small_experiment):
    st = small_experiment.stats
    for table in (st.pruned_pct, st.pruned_pct_visited):
        assert len(table) == 5
        for mean, sigma in table.values():
            assert 0.0 <= mean <= 100.0 and sigma >= 0.0
    assert 0.0 <= st.significant_pct[0] <= 100.0


def test_record_reproduces(small_experiment, can_on_boxes):
    sc, sf = can_on_boxes
    rec = small_experiment.records[2]
    again = rerun(rec, sc, sf.weights, sf.config)
    assert [(r.sequence, r.total_cost) for r in again.ranked] == [(r.sequence, r.total_cost) for r in rec.plan.ranked]
    assert again.stats.to_dict() == rec.plan.stats.to_dict()


def test_rerun_checks_hash(small_experiment, can_on_boxes):
    sc, sf = can_on_boxes
    with pytest.raises(ValueError):
        rerun(small_experiment.records[0], sc.without("can"), sf.weights, sf.config)


def test_rows_have_fixed_metrics(small_experiment):
    names = [r[0] for r in small_experiment.stats.rows()]
    assert names[:2] == ["first_ranked_cost_per_node", "second_ranked_cost_per_node"]
    assert sum(n.startswith("pruned_pct_") and "visited" not in n and n != "pruned_pct_total" for n in names) == 5


def test_zero_jitter_is_degenerate(can_on_boxes):
    sc, sf = can_on_boxes
    res = run_experiment(sc, sf.weights, replace(sf.config, jitter=0.0), runs=3)
    assert list(res.stats.histogram.values()) == [3]
    assert res.stats.first_per_node[1] == 0.0


def test_aggregate_mean_sigma(small_experiment):
    recs = small_experiment.records
    st = aggregate(recs)
    vals = [r.plan.best.per_node for r in recs if r.plan.best]
    mean = sum(vals) / len(vals)
    assert st.first_per_node[0] == pytest.approx(mean)
    assert st.first_per_node[1] == pytest.approx(math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals)))
    assert set(st.histogram) == {sequence_label(r.plan.best.sequence) for r in recs if r.plan.best} | (
        {"(none)"} if any(r.plan.best is None for r in recs) else set())


def test_runs_must_be_positive(can_on_boxes):
    sc, sf = can_on_boxes
    with pytest.raises(ValueError):
        run_experiment(sc, sf.weights, sf.config, runs=0)
