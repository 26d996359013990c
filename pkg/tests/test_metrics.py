import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nscmab.cucb_sw import SlidingWindowCUCB
from nscmab.env import EnvSchedule, RewardModel, from_segments, make_piecewise
from nscmab.metrics import CSV_HEADER, RegretLedger, gap_report, optimal_values
from nscmab.oracles import ActionSpace, OracleError, exact_oracle
from nscmab.sim import simulate

linear = RewardModel()
space2 = ActionSpace.top_k(2, 1)


def test_regret_examples():
    mu = np.array([0.6, 0.4])
    led = RegretLedger(3)
    led.record(1, mu, (0,), linear, space2)
    led.record(2, mu, (1,), linear, space2)
    assert led.inst_regret.tolist() == pytest.approx([0.0, 0.2])
    approx = RegretLedger(1, alpha=0.9, beta=0.9).record(1, mu, (0,), linear, space2)
    assert approx.inst_regret[0] == pytest.approx(-0.114)


def test_record_checks_round_order():
    led = RegretLedger(3)
    with pytest.raises(ValueError):
        led.record(2, np.array([0.5, 0.5]), (0,), linear, space2)


def test_gap_report_example():
    dmin, dmax = gap_report(EnvSchedule(np.tile([0.6, 0.4], (5, 1))), space2, linear)
    assert dmin[1] == pytest.approx(0.2) and dmax[1] == pytest.approx(0.2)
    assert dmin[0] == math.inf and dmax[0] == 0.0


def test_gap_report_takes_min_over_segments():
    sched = from_segments([1, 4], [[0.6, 0.4], [0.9, 0.4]], 8)
    dmin, dmax = gap_report(sched, space2, linear)
    assert dmin[1] == pytest.approx(0.2)
    assert dmax[1] == pytest.approx(0.5)


def test_gap_report_needs_enumerable_space():
    with pytest.raises(OracleError):
        gap_report(EnvSchedule(np.full((2, 60), 0.5)), ActionSpace.top_k(60, 30), linear)


def test_optimal_values_per_round():
    sched = from_segments([1, 3], [[0.2, 0.7], [0.9, 0.1]], 4)
    assert optimal_values(sched, space2, linear).tolist() == pytest.approx([0.7, 0.7, 0.9, 0.9])


def test_csv_is_rederivable():
    space = ActionSpace.top_k(3, 1)
    sched = make_piecewise(3, 300, 3, min_gap=0.3, rng=np.random.default_rng(0))
    pol = SlidingWindowCUCB(3, 300, 50, lambda w: exact_oracle(w, space, linear))
    led = simulate(sched, space, pol, np.random.default_rng(1), seed=7)
    text = led.to_csv()
    assert text.splitlines()[0] == CSV_HEADER
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 300
    assert {r["seed"] for r in rows} == {"7"}
    inst = np.array([float(r["inst_regret"]) for r in rows])
    cum = np.array([float(r["cum_regret"]) for r in rows])
    assert np.array_equal(np.cumsum(inst), cum)
    assert np.array_equal(inst, np.array([float(r["opt"]) for r in rows]) - [float(r["reward"]) for r in rows])
    assert np.all(np.diff(cum) >= 0)
    assert led.total == cum[-1]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=30))
def test_exact_regret_is_nonnegative_and_cumulative(rows):
    led = RegretLedger(len(rows))
    for t, (a, b, arm) in enumerate(rows, start=1):
        led.record(t, np.array([a, b]), (arm,), linear, space2)
    assert np.all(led.inst_regret >= 0)
    assert np.all(np.diff(led.cum_regret) >= 0)
    assert led.cum_regret[-1] == pytest.approx(led.inst_regret.sum())
