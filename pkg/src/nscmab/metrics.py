"""Approximation regret bookkeeping and gap diagnostics."""

from __future__ import annotations

import io
import math

import numpy as np

from .env import EnvSchedule, RewardModel, TriggeringModel, expected_reward, trigger_probabilities
from .oracles import TOP_K, ActionSpace, OracleError, exact_oracle

CSV_HEADER = "seed,t,opt,reward,inst_regret,cum_regret"


def optimal_values(schedule: EnvSchedule, space: ActionSpace, reward: RewardModel) -> np.ndarray:
    """``opt_{mu_t}`` for every round, evaluated once per distinct mean vector."""
    means = schedule.means
    out = np.empty(schedule.horizon)
    for s, e in schedule.segments():
        mu = means[s - 1]
        out[s - 1:e] = expected_reward(exact_oracle(mu, space, reward), mu, reward)
    return out


class RegretLedger:
    """Per-round ``alpha*beta*opt_t - r_{S_t}(mu_t)`` with running totals."""

    def __init__(self, horizon: int, alpha: float = 1.0, beta: float = 1.0, seed=None):
        self.alpha, self.beta, self.seed = alpha, beta, seed
        self.opt = np.zeros(horizon)
        self.reward = np.zeros(horizon)
        self.realized = np.zeros(horizon)
        self.n = 0

    def record(self, t: int, mu_t, action, reward_model: RewardModel, space: ActionSpace | None = None,
               opt: float | None = None, realized: float | None = None):
        if t != self.n + 1:
            raise ValueError(f"ledger expects round {self.n + 1}, got {t}")
        if opt is None:
            opt = expected_reward(exact_oracle(mu_t, space, reward_model), mu_t, reward_model)
        self.opt[t - 1] = opt
        self.reward[t - 1] = expected_reward(action, mu_t, reward_model)
        if realized is not None:
            self.realized[t - 1] = realized
        self.n = t
        return self

    @property
    def inst_regret(self) -> np.ndarray:
        return self.alpha * self.beta * self.opt[:self.n] - self.reward[:self.n]

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.inst_regret)

    @property
    def total(self) -> float:
        return float(self.cum_regret[-1]) if self.n else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        inst, cum = self.inst_regret.tolist(), self.cum_regret.tolist()
        opt, reward = self.opt.tolist(), self.reward.tolist()
        seed = "" if self.seed is None else self.seed
        # repr of a Python float round-trips exactly
        for k in range(self.n):
            buf.write(f"{seed},{k + 1},{opt[k]!r},{reward[k]!r},{inst[k]!r},{cum[k]!r}\n")
        return buf.getvalue()


def gap_report(schedule: EnvSchedule, space: ActionSpace, reward: RewardModel,
               trig: TriggeringModel = TriggeringModel(), alpha: float = 1.0):
    """Per-arm minimum and maximum positive gaps over the horizon.

    Gaps are taken over actions that can trigger the arm and are strictly
    suboptimal; ``+inf`` / ``0`` when no such action exists.
    """
    if space.kind == TOP_K and space.size > space.cap:
        raise OracleError("gap report needs an enumerable action space")
    m = space.m
    dmin = np.full(m, math.inf)
    dmax = np.zeros(m)
    actions = space.actions
    for s, _ in schedule.segments():
        mu = schedule.means[s - 1]
        opt = expected_reward(exact_oracle(mu, space, reward), mu, reward)
        for a in actions:
            gap = max(0.0, alpha * opt - expected_reward(a, mu, reward))
            if gap <= 0:
                continue
            arms = trigger_probabilities(a, mu, trig) > 0
            dmin[arms] = np.minimum(dmin[arms], gap)
            dmax[arms] = np.maximum(dmax[arms], gap)
    return dmin, dmax
