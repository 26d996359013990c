"""Sliding-window CUCB."""

from __future__ import annotations

import math

import numpy as np


class ContractError(RuntimeError):
    pass


class SlidingWindowCUCB:
    """CUCB restricted to the observations of the last ``window`` rounds.

    At round ``t`` the statistics cover rounds ``[max(t - w, 1), t - 1]``.
    Raw per-round observations sit in a ring buffer of ``w`` rows so that the
    round leaving the window can be subtracted exactly.

    ``oracle`` maps a weight vector in ``[0, 1]^m`` to an action.
    """

    def __init__(self, m: int, horizon: int, window: int, oracle):
        if window < 1:
            raise ValueError("window must be a positive integer")
        self.m = m
        self.horizon = horizon
        self.window = int(window)
        self.oracle = oracle
        self._radius_num = 1.5 * math.log(horizon) if horizon > 1 else 0.0
        # slot t % w holds the (arm, value) pairs observed at round t
        self._ring: list = [()] * min(self.window, horizon)
        self._sums = np.zeros(m)
        self._counts = np.zeros(m, dtype=np.int64)
        self.t = 0
        self._last_action = None

    # -- statistics --------------------------------------------------------

    @property
    def counts(self) -> np.ndarray:
        return self._counts.copy()

    @property
    def mu_hat(self) -> np.ndarray:
        out = np.ones(self.m)
        seen = self._counts > 0
        out[seen] = self._sums[seen] / self._counts[seen]
        return np.clip(out, 0.0, 1.0)

    @property
    def radius(self) -> np.ndarray:
        rho = np.full(self.m, np.inf)
        seen = self._counts > 0
        rho[seen] = np.sqrt(self._radius_num / self._counts[seen])
        return rho

    def ucb_values(self) -> np.ndarray:
        c = np.maximum(self._counts, 1)
        u = np.minimum(self._sums / c + np.sqrt(self._radius_num / c), 1.0)
        u[self._counts == 0] = 1.0
        return np.clip(u, 0.0, 1.0)

    # -- policy protocol ---------------------------------------------------

    def act(self, t: int):
        if t != self.t + 1:
            raise ContractError(f"expected round {self.t + 1}, got {t}")
        self._last_action = tuple(self.oracle(self.ucb_values()))
        return self._last_action

    def observe(self, t: int, triggered, values, reward=None):
        if t != self.t + 1 or self._last_action is None:
            raise ContractError("observe must follow act for the same round")
        triggered = set(triggered)
        if set(values) != triggered or not triggered <= set(self._last_action):
            raise ContractError(f"feedback for arms {sorted(values)} does not match triggered set "
                                f"{sorted(triggered)} of action {self._last_action}")
        slot = t % len(self._ring)
        # the slot holds round t - w, which leaves the window now
        for i, x in self._ring[slot]:
            self._sums[i] -= x
            self._counts[i] -= 1
        obs = tuple((i, float(x)) for i, x in values.items())
        for i, x in obs:
            self._sums[i] += x
            self._counts[i] += 1
        self._ring[slot] = obs
        self.t = t
        self._last_action = None

    def snapshot(self) -> dict:
        return {"t": self.t, "window": self.window, "counts": self._counts.tolist(),
                "mu_hat": self.mu_hat.tolist(),
                "rho": [None if math.isinf(r) else r for r in self.radius]}


def recommended_window(T: int, measure: float, mode: str = "dep", m: int | None = None,
                       K: int | None = None) -> int:
    """Window length tuned to a known variation (or switching) budget.

    ``dep``: ``min(sqrt(T / V), T)``; ``indep``:
    ``min(m^(1/3) T^(2/3) K^(-1/3) V^(-2/3), T)``. Rounded to the nearest
    positive integer.
    """
    if T < 1 or measure < 0:
        raise ValueError("need T >= 1 and a nonnegative measure")
    if measure == 0:
        return int(T)
    if mode == "dep":
        w = math.sqrt(T / measure)
    elif mode == "indep":
        if m is None or K is None:
            raise ValueError("indep mode needs m and K")
        w = m ** (1 / 3) * T ** (2 / 3) * K ** (-1 / 3) * measure ** (-2 / 3)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return int(max(1, min(round(w), T)))
