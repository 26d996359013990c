"""Round-by-round interaction between a schedule and a policy."""

from __future__ import annotations

import numpy as np

from .env import CASCADE, LINEAR, EnvSchedule, RewardModel, TriggeringModel
from .metrics import RegretLedger, optimal_values
from .oracles import ActionSpace


def simulate(schedule: EnvSchedule, space: ActionSpace, policy, rng: np.random.Generator,
             trig: TriggeringModel = TriggeringModel(), reward: RewardModel = RewardModel(),
             alpha: float = 1.0, beta: float = 1.0, seed=None, callback=None) -> RegretLedger:
    """Play ``policy`` for the whole horizon; ``rng`` drives the outcomes only.

    ``callback(t, policy)`` runs before each ``act`` (used for diagnostics).
    """
    T, m = schedule.horizon, schedule.m
    ledger = RegretLedger(T, alpha, beta, seed)
    ledger.opt[:] = optimal_values(schedule, space, reward)
    means = schedule.means
    linear = reward.kind == LINEAR
    cascade = trig.kind == CASCADE
    for t in range(1, T + 1):
        if callback is not None:
            callback(t, policy)
        action = policy.act(t)
        mu = means[t - 1]
        x = rng.random(m) < mu
        idx = list(action)
        if cascade:
            tau = []
            for i in action:
                tau.append(i)
                if x[i]:
                    break
        else:
            tau = idx
        values = {i: float(x[i]) for i in tau}
        if linear:
            realized = float(x[idx].sum())
            expected = float(mu[idx].sum())
        else:
            realized = float(x[idx].any())
            expected = float(1.0 - np.prod(1.0 - mu[idx]))
        policy.observe(t, tau, values, realized)
        ledger.reward[t - 1] = expected
        ledger.realized[t - 1] = realized
    ledger.n = T
    return ledger
