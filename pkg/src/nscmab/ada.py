"""Ada-LCMAB: parameter-free learner for non-stationary linear semi-bandits.

Runs doubling blocks inside epochs. Each block plays the log-barrier FTRL
distribution fitted on the previous block prefix, randomly schedules replay
phases of earlier strategies, and restarts the epoch whenever an interval's
empirical regret profile disagrees with the block it should match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cucb_sw import ContractError
from .ftrl import BARRIER_C, FTRLSolution, ftrl_solve
from .oracles import ActionSpace, signed_linear_oracle


@dataclass(frozen=True)
class AdaConstants:
    """Algorithm constants derived from ``(T, m, |S|, K, delta)``.

    ``C0`` and ``L`` may be overridden independently for desk-scale runs; by
    default ``C0 = ln(8 T^3 |S|^2 / delta)`` and ``L = ceil(4 m C0)``.
    """

    T: int
    m: int
    n_actions: int
    K: int
    delta: float = 0.05
    C: float = BARRIER_C
    C0: float | None = None
    L: int | None = None
    log_base: str = "e"
    replay_coef: float = 34.0
    block_coef: float = 20.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.log_base not in ("e", "2"):
            raise ValueError("log_base must be 'e' or '2'")
        if self.C0 is None:
            object.__setattr__(self, "C0", math.log(8 * self.T**3 * self.n_actions**2 / self.delta))
        if self.L is None:
            object.__setattr__(self, "L", int(math.ceil(4 * self.m * self.C0)))
        if self.C0 <= 0 or self.L < 1:
            raise ValueError("C0 must be positive and L at least 1")

    @classmethod
    def for_space(cls, T: int, space: ActionSpace, **kw) -> "AdaConstants":
        return cls(T=T, m=space.m, n_actions=space.size, K=space.K, **kw)

    @classmethod
    def desk_scale(cls, T: int, space: ActionSpace, L_max: int = 64, **kw) -> "AdaConstants":
        """Shrink ``C0`` by the factor that brings ``L = ceil(4 m C0)`` down to ``L_max``.

        Nothing else changes: ``nu_j`` and the thresholds follow the scaled ``C0``.
        """
        full = cls.for_space(T, space, **kw)
        if full.L <= L_max:
            return full
        C0 = L_max / (4 * space.m)
        return cls.for_space(T, space, C0=C0, L=min(L_max, int(math.ceil(4 * space.m * C0))), **kw)

    def nu(self, j: int) -> float:
        return math.sqrt(self.C0 / (self.m * 2**j * self.L))

    @property
    def log_T(self) -> float:
        return math.log(self.T) if self.log_base == "e" else math.log2(self.T)

    def replay_threshold(self, n: int) -> float:
        return self.replay_coef * self.m * self.K * self.nu(n) * self.log_T

    def block_threshold(self, k: int) -> float:
        return self.block_coef * self.m * self.K * self.nu(k) * self.log_T


class IntervalStats:
    """Empirical mean over an interval and its empirical regret profile."""

    def __init__(self, mean, space: ActionSpace):
        self.mean = np.asarray(mean, dtype=float)
        self.space = space
        self.best = signed_linear_oracle(self.mean, space)
        self.best_value = float(self.mean[list(self.best)].sum())

    def regret(self, action) -> float:
        return self.best_value - float(self.mean[list(action)].sum())


def max_regret_excess(a: IntervalStats, b: IntervalStats, factor: float = 4.0) -> float:
    """``max_S Reg_a(S) - factor * Reg_b(S)`` by one signed linear maximization."""
    S = signed_linear_oracle(factor * b.mean - a.mean, a.space)
    return a.regret(S) - factor * b.regret(S)


def end_of_replay_test(stats_replay: IntervalStats, stats_block: IntervalStats, n: int,
                       consts: AdaConstants) -> tuple[bool, float]:
    """Return ``(passed, margin)``; it fails when ``margin >= 0``."""
    thr = consts.replay_threshold(n)
    margin = max(max_regret_excess(stats_replay, stats_block),
                 max_regret_excess(stats_block, stats_replay)) - thr
    return margin < 0, margin


def end_of_block_test(stats_block: IntervalStats, earlier: list[IntervalStats],
                      consts: AdaConstants) -> tuple[bool, float]:
    """Compare the prefix ending now against every earlier block prefix ``k < j``."""
    margin = -math.inf
    for k, stats_k in enumerate(earlier):
        thr = consts.block_threshold(k)
        margin = max(margin,
                     max_regret_excess(stats_block, stats_k) - thr,
                     max_regret_excess(stats_k, stats_block) - thr)
    return margin < 0, margin


def replay_probability(j: int, L: int) -> float:
    return (1.0 / L) * 2 ** (-j / 2) * sum(2 ** (-k / 2) for k in range(j))


def replay_level_probs(j: int) -> np.ndarray:
    w = 2.0 ** (-np.arange(j) / 2)
    return w / w.sum()


def schedule_replay(t: int, j: int, L: int, rng: np.random.Generator):
    """Maybe start a replay at round ``t``: returns ``(n, (t, t + 2^n L - 1))`` or None.

    Always consumes one uniform draw, plus one more when a replay fires.
    """
    fire = rng.random() < replay_probability(j, L)
    if not fire:
        return None
    n = int(rng.choice(j, p=replay_level_probs(j)))
    return n, (t, t + 2**n * L - 1)


def draw_action(solutions, block: int, active, rng: np.random.Generator):
    """Play the block distribution, or a uniformly chosen active replay level.

    Returns ``(action, q)`` where ``q`` is the marginal of the whole mixture.
    """
    if not active:
        sol = solutions[block]
        return sol.dist.sample(rng), sol.q
    n = active[int(rng.integers(len(active)))]
    q = np.mean([solutions[k].q for k in active], axis=0)
    return solutions[n].dist.sample(rng), q


def estimate(action, values, q, m: int) -> np.ndarray:
    """Importance-weighted mean estimate ``X_i / q_i`` on played arms, 0 elsewhere."""
    if not set(values) <= set(action):
        raise ContractError("observation for an arm outside the played action")
    mu = np.zeros(m)
    for i, x in values.items():
        if q[i] <= 0:
            raise ContractError(f"marginal of arm {i} is not positive")
        mu[i] = x / q[i]
    return mu


@dataclass
class Replay:
    n: int
    start: int
    end: int


@dataclass
class EpochState:
    index: int
    start: int
    block: int = 0
    solutions: list = field(default_factory=list)
    replays: list = field(default_factory=list)


class AdaLCMAB:
    """Policy object: ``act(t) -> action``, ``observe(t, triggered, values)``.

    Linear rewards, full triggering and an exact oracle are assumed.
    """

    def __init__(self, space: ActionSpace, horizon: int, rng: np.random.Generator,
                 consts: AdaConstants | None = None):
        self.space = space
        self.m = space.m
        self.horizon = horizon
        self.rng = rng
        self.consts = consts if consts is not None else AdaConstants.for_space(horizon, space)
        self._cum = np.zeros((horizon + 1, self.m))
        self.epoch: EpochState | None = None
        self._restart_at = 1
        self.restarts: list[int] = []
        self.last_margins: dict = {}
        self.t = 0
        self._pending = None

    # -- structure ---------------------------------------------------------

    def _block_end(self) -> int:
        return self.epoch.start + 2**self.epoch.block * self.consts.L - 1

    def _interval_mean(self, s: int, e: int) -> np.ndarray:
        base = self.epoch.start
        return (self._cum[e - base + 1] - self._cum[s - base]) / (e - s + 1)

    def _prefix_stats(self, k: int) -> IntervalStats:
        end = self.epoch.start + 2**k * self.consts.L - 1
        return IntervalStats(self._interval_mean(self.epoch.start, end), self.space)

    def _solve(self, mu_hat, nu) -> FTRLSolution:
        return ftrl_solve(mu_hat, nu, self.space, C=self.consts.C)

    def _start_epoch(self, t: int):
        index = 1 if self.epoch is None else self.epoch.index + 1
        self.epoch = EpochState(index=index, start=t)
        # block 0 plays the barrier-only center: uniform marginals on top-k spaces
        self.epoch.solutions.append(self._solve(np.zeros(self.m), self.consts.nu(0)))

    def _start_block(self):
        ep = self.epoch
        ep.block += 1
        prev = self._prefix_stats(ep.block - 1)
        ep.solutions.append(self._solve(prev.mean, self.consts.nu(ep.block)))
        ep.replays = []

    def _restart(self, t: int, reason: str, margin: float):
        self.restarts.append(t)
        self.last_margins["restart"] = {"t": t, "reason": reason, "margin": margin}
        self._restart_at = t + 1

    # -- policy protocol -----------------------------------------------------

    def act(self, t: int):
        if t != self.t + 1:
            raise ContractError(f"expected round {self.t + 1}, got {t}")
        if self._restart_at == t:
            self._start_epoch(t)
            self._restart_at = None
        elif t > self._block_end():
            self._start_block()
        ep = self.epoch
        rep = schedule_replay(t, ep.block, self.consts.L, self.rng)
        if rep is not None:
            n, (s, e) = rep
            ep.replays.append(Replay(n, s, e))
        active = sorted({r.n for r in ep.replays if r.start <= t <= r.end})
        action, q = draw_action(ep.solutions, ep.block, active, self.rng)
        self._pending = (action, q, active)
        return action

    def observe(self, t: int, triggered, values, reward=None):
        if self._pending is None or t != self.t + 1:
            raise ContractError("observe must follow act for the same round")
        action, q, _ = self._pending
        if set(triggered) != set(action):
            raise ContractError("Ada-LCMAB expects full semi-bandit feedback on the played action")
        mu_t = estimate(action, values, q, self.m)
        ep = self.epoch
        k = t - ep.start
        self._cum[k + 1] = self._cum[k] + mu_t
        self.t = t
        self._pending = None

        for r in ep.replays:
            if r.end == t:
                a = IntervalStats(self._interval_mean(r.start, t), self.space)
                passed, margin = end_of_replay_test(a, self._prefix_stats(ep.block - 1), r.n, self.consts)
                self.last_margins["replay"] = margin
                if not passed:
                    self._restart(t, "replay", margin)
                    return
        ep.replays = [r for r in ep.replays if r.end > t]
        if t == self._block_end():
            earlier = [self._prefix_stats(k) for k in range(ep.block)]
            passed, margin = end_of_block_test(self._prefix_stats(ep.block), earlier, self.consts)
            self.last_margins["block"] = margin
            if not passed:
                self._restart(t, "block", margin)

    def snapshot(self) -> dict:
        ep = self.epoch
        return {"epoch": ep.index if ep else 0, "block": ep.block if ep else 0,
                "epoch_start": ep.start if ep else None,
                "active_replays": [(r.n, r.start, r.end) for r in ep.replays] if ep else [],
                "restarts": list(self.restarts), "last_margins": dict(self.last_margins),
                "L": self.consts.L, "C0": self.consts.C0}
