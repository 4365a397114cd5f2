import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmdofdma.errors import EmptyReports, InvalidPlan, MixedSchemes
from gmdofdma.scheduler import (
    ScheduleDecision,
    feedback_cost,
    schedule,
    system_throughput,
    winner_shares,
)
from gmdofdma.schemes import FeedbackReport, SchemeId, make_cluster_plan


def report(rates, scheme=SchemeId.PS_GMD):
    return FeedbackReport(scheme, np.array([0]), np.asarray(rates, float), 0)


def test_single_user_wins_everything():
    d = schedule([report([1.0, 2.0, 0.5])])
    assert d.winners.tolist() == [0, 0, 0]
    np.testing.assert_array_equal(d.rates, [1.0, 2.0, 0.5])


def test_per_unit_argmax():
    d = schedule([report([3, 1]), report([1, 3])])
    assert d.winners.tolist() == [0, 1]
    assert d.rates.sum() == 6


def test_tie_goes_to_lowest_index():
    d = schedule([report([1, 2]), report([1, 2]), report([0, 2])])
    assert d.winners.tolist() == [0, 0]


def test_errors():
    with pytest.raises(EmptyReports):
        schedule([])
    with pytest.raises(MixedSchemes):
        schedule([report([1, 2]), report([1, 2], SchemeId.PS_EB)])
    with pytest.raises(MixedSchemes):
        schedule([report([1, 2]), report([1, 2, 3])])


def test_granularity():
    assert schedule([report([1], SchemeId.PC_GMD)]).granularity == "cluster"
    assert schedule([report([1], SchemeId.PS_EB)]).granularity == "subcarrier"


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(1, 16), st.integers(0, 2 ** 31))
def test_pointwise_max_and_diversity(K, units, seed):
    rates = np.random.default_rng(seed).exponential(size=(K, units))
    reps = [report(r) for r in rates]
    d = schedule(reps)
    np.testing.assert_array_equal(d.rates, rates.max(axis=0))
    sub = schedule(reps[: max(1, K // 2)])
    assert np.all(d.rates >= sub.rates)
    assert system_throughput(d) >= system_throughput(sub)


def test_system_throughput():
    assert system_throughput(ScheduleDecision("subcarrier", np.zeros(3, int), np.full(3, 2.5))) == 2.5
    assert system_throughput(ScheduleDecision("subcarrier", np.zeros(2, int), np.array([2.0, 4.0]))) == 3.0
    plan = make_cluster_plan(4, 2)
    assert system_throughput(ScheduleDecision("cluster", np.zeros(2, int), np.array([2.0, 4.0])), plan) == 3.0


def test_feedback_cost_examples():
    b = feedback_cost(SchemeId.PS_GMD, Q=64, G=64, B=8, bits_per_scalar=16, M=2)
    assert (b.bfm_bits, b.scalar_count, b.total_bits) == (8, 64, 1032)
    eb = feedback_cost(SchemeId.PS_EB, 64, 64, 8, 16, 2)
    assert eb.bfm_bits == 64 * 8 and eb.scalar_count == 128
    assert feedback_cost(SchemeId.PC_EB, 64, 8, 8, 16, 2).total_bits == 8 * 8 + 8 * 16
    for B in range(1, 9):
        assert (feedback_cost(SchemeId.PC_GMD, 64, 8, B).total_bits
                < feedback_cost(SchemeId.PS_GMD, 64, 8, B).total_bits)


def test_feedback_cost_invalid_plan():
    with pytest.raises(InvalidPlan):
        feedback_cost(SchemeId.PC_GMD, 64, 5, 4)


def test_winner_shares():
    ds = [ScheduleDecision("subcarrier", np.array([0, 1, 1, 2]), np.ones(4))] * 3
    np.testing.assert_allclose(winner_shares(ds, 3), [0.25, 0.5, 0.25])
