import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nscmab.ada import (AdaConstants, AdaLCMAB, IntervalStats, draw_action, end_of_block_test, end_of_replay_test,
                        estimate, replay_level_probs, replay_probability, schedule_replay)
from nscmab.cucb_sw import ContractError
from nscmab.env import EnvSchedule
from nscmab.ftrl import ftrl_solve
from nscmab.oracles import ActionSpace
from nscmab.sim import simulate


def brute_fails(a, b, thr):
    """Scan every action for either direction of the regret comparison."""
    acts = a.space.actions
    return any(a.regret(S) - 4 * b.regret(S) >= thr or b.regret(S) - 4 * a.regret(S) >= thr for S in acts)


def test_replay_probability_example():
    assert replay_probability(2, 595) == pytest.approx((1 / 595) * 0.5 * (1 + 2**-0.5))
    assert replay_probability(2, 595) == pytest.approx(0.0014345, abs=5e-8)


def test_replay_level_probs_example():
    assert replay_level_probs(2) == pytest.approx([0.58579, 0.41421], abs=1e-5)


def test_block_zero_never_replays():
    assert replay_probability(0, 1) == 0.0
    rng = np.random.default_rng(0)
    assert all(schedule_replay(t, 0, 1, rng) is None for t in range(1, 1000))


def test_replay_record_shape():
    rng = np.random.default_rng(1)
    fired = [r for t in range(1, 20_000) if (r := schedule_replay(t, 3, 2, rng)) is not None]
    assert fired
    for n, (s, e) in fired:
        assert 0 <= n < 3
        assert e - s + 1 == 2**n * 2
    rate = len(fired) / 19_999
    p = replay_probability(3, 2)
    assert abs(rate - p) <= 4 * math.sqrt(p * (1 - p) / 19_999)


def test_estimate_examples():
    q = np.array([0.25, 0.5, 0.5])
    assert estimate((0, 1), {0: 1.0, 1: 0.0}, q, 3).tolist() == [4.0, 0.0, 0.0]
    assert estimate((1,), {1: 1.0}, q, 3)[0] == 0.0


def test_estimate_rejects_unplayed_arm():
    with pytest.raises(ContractError):
        estimate((0,), {1: 1.0}, np.full(2, 0.5), 2)


def test_constants_literal():
    space = ActionSpace.top_k(5, 2)
    c = AdaConstants.for_space(1000, space)
    assert c.C0 == pytest.approx(math.log(8 * 1000**3 * 10**2 / 0.05))
    assert c.L == math.ceil(4 * 5 * c.C0)
    nus = [c.nu(j) for j in range(6)]
    assert all(a > b for a, b in zip(nus, nus[1:]))
    assert nus[0] <= 0.5


def test_desk_scale_constants():
    space = ActionSpace.top_k(4, 1)
    c = AdaConstants.desk_scale(8192, space, L_max=64)
    assert c.L == 64
    assert c.nu(0) == pytest.approx(1 / 8)
    small = AdaConstants.desk_scale(10, ActionSpace.top_k(1, 1), L_max=10**6)
    assert small == AdaConstants.for_space(10, ActionSpace.top_k(1, 1))


def test_constants_validation():
    with pytest.raises(ValueError):
        AdaConstants(T=10, m=2, n_actions=2, K=1, delta=0.0)
    with pytest.raises(ValueError):
        AdaConstants(T=10, m=2, n_actions=2, K=1, log_base="10")


def test_thresholds():
    c = AdaConstants(T=1000, m=3, n_actions=3, K=1, C0=2.0, L=30)
    assert c.replay_threshold(1) == pytest.approx(34 * 3 * c.nu(1) * math.log(1000))
    assert c.block_threshold(0) == pytest.approx(20 * 3 * c.nu(0) * math.log(1000))
    c2 = AdaConstants(T=1024, m=3, n_actions=3, K=1, C0=2.0, L=30, log_base="2")
    assert c2.log_T == 10.0


def test_identical_stats_pass():
    space = ActionSpace.top_k(4, 2)
    c = AdaConstants.for_space(1000, space)
    s = IntervalStats([0.9, 0.1, 0.5, 0.3], space)
    passed, margin = end_of_replay_test(s, s, 0, c)
    assert passed and margin < 0
    assert end_of_block_test(s, [s, s], c)[0]


def test_block_zero_test_is_vacuous():
    space = ActionSpace.top_k(2, 1)
    c = AdaConstants.for_space(100, space)
    assert end_of_block_test(IntervalStats([5.0, 0.0], space), [], c) == (True, -math.inf)


def test_single_arm_flip_fails():
    space = ActionSpace.enumerated(2, [(0,), (1,)])
    c = AdaConstants.for_space(1000, space)
    n = 8
    nu = c.nu(n)
    a = IntervalStats([1 / nu, 0.0], space)
    b = IntervalStats([0.0, 1 / nu], space)
    passed, _ = end_of_replay_test(a, b, n, c)
    assert not passed
    assert brute_fails(a, b, c.replay_threshold(n))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 5), st.integers(0, 4))
def test_restart_tests_match_brute_force(seed, m, n):
    rng = np.random.default_rng(seed)
    acts = sorted({tuple(sorted(rng.choice(m, size=rng.integers(1, m + 1), replace=False).tolist()))
                   for _ in range(6)})
    space = ActionSpace.enumerated(m, acts)
    c = AdaConstants(T=500, m=m, n_actions=len(acts), K=max(map(len, acts)), C0=1.0, L=8)
    scale = rng.uniform(0.1, 30)
    a = IntervalStats(rng.random(m) * scale, space)
    b = IntervalStats(rng.random(m) * scale, space)
    assert (not end_of_replay_test(a, b, n, c)[0]) == brute_fails(a, b, c.replay_threshold(n))
    earlier = [IntervalStats(rng.random(m) * scale, space) for _ in range(n + 1)]
    expect = any(brute_fails(a, e, c.block_threshold(k)) for k, e in enumerate(earlier))
    assert (not end_of_block_test(a, earlier, c)[0]) == expect


def test_draw_action_mixture():
    space = ActionSpace.top_k(3, 1)
    sols = [ftrl_solve(np.zeros(3), 0.2, space), ftrl_solve(np.array([3.0, 0.0, 0.0]), 0.1, space)]
    rng = np.random.default_rng(0)
    _, q = draw_action(sols, 1, [], rng)
    assert np.array_equal(q, sols[1].q)
    _, q = draw_action(sols, 1, [0, 1], rng)
    assert np.allclose(q, (sols[0].q + sols[1].q) / 2)
    n = 100_000
    counts = np.zeros(3)
    for _ in range(n):
        counts[list(draw_action(sols, 1, [0, 1], rng)[0])] += 1
    assert np.all(np.abs(counts / n - q) <= 3 * np.sqrt(q * (1 - q) / n))


class Recording(AdaLCMAB):
    """Logs ``(t, epoch start, block)`` per round and the replay set at each block start."""

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.trace, self.replays_at_block_start = [], []

    def _start_block(self):
        super()._start_block()
        self.replays_at_block_start.append(len(self.epoch.replays))

    def act(self, t):
        action = super().act(t)
        self.trace.append((t, self.epoch.start, self.epoch.block))
        return action


def stationary_run(seed, T=640, L=32):
    space = ActionSpace.top_k(3, 1)
    c = AdaConstants(T=T, m=3, n_actions=3, K=1, C0=L / 12, L=L)
    pol = Recording(space, T, np.random.default_rng(seed), c)
    sched = EnvSchedule(np.tile([0.7, 0.5, 0.3], (T, 1)))
    simulate(sched, space, pol, np.random.default_rng(seed + 100))
    return pol


def test_block_structure():
    pol = stationary_run(0)
    L = pol.consts.L
    for t, start, j in pol.trace:
        r = t - start + 1
        # block j covers epoch rounds (2^(j-1) L, 2^j L]
        assert j == (0 if r <= L else math.ceil(math.log2(r / L)))


def test_replays_cleared_at_block_start():
    pol = stationary_run(1)
    assert pol.replays_at_block_start
    assert all(n == 0 for n in pol.replays_at_block_start)


def test_stationary_runs_rarely_restart():
    counts = [len(stationary_run(seed).restarts) for seed in range(10)]
    assert sum(c <= 1 for c in counts) >= 9


def test_act_observe_contract():
    space = ActionSpace.top_k(2, 1)
    pol = AdaLCMAB(space, 10, np.random.default_rng(0), AdaConstants(T=10, m=2, n_actions=2, K=1, C0=1.0, L=4))
    with pytest.raises(ContractError):
        pol.act(2)
    a = pol.act(1)
    with pytest.raises(ContractError):
        pol.observe(1, [], {})
    pol.observe(1, list(a), {a[0]: 1.0})
    snap = pol.snapshot()
    assert snap["epoch"] == 1 and snap["block"] == 0


def test_flip_triggers_restart_at_strong_scale():
    # a large, sustained flip on a tiny instance with small thresholds
    space = ActionSpace.top_k(2, 1)
    T = 600
    c = AdaConstants(T=T, m=2, n_actions=2, K=1, C0=1.0, L=8, replay_coef=1.0, block_coef=1.0)
    means = np.tile([0.95, 0.05], (T, 1))
    means[T // 2:] = [0.05, 0.95]
    pol = AdaLCMAB(space, T, np.random.default_rng(0), c)
    simulate(EnvSchedule(means), space, pol, np.random.default_rng(1))
    assert any(t > T // 2 for t in pol.restarts)
