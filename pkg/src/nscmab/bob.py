"""Bandit-over-bandit tuning of the CUCB-SW window with an EXP3.P master."""

from __future__ import annotations

import math

import numpy as np

from .cucb_sw import ContractError, SlidingWindowCUCB


def exp3p_params(n_arms: int, horizon: int) -> tuple[float, float, float]:
    """Return ``(eta, gamma, beta)`` for EXP3.P; gamma is capped at 1."""
    if n_arms < 2 or horizon < 1:
        raise ValueError("EXP3.P needs at least two arms and a positive horizon")
    lk = math.log(n_arms)
    beta = math.sqrt(lk / (n_arms * horizon))
    eta = 0.95 * math.sqrt(lk / (horizon * n_arms))
    gamma = min(1.0, 1.05 * math.sqrt(n_arms * lk / horizon))
    return eta, gamma, beta


class Exp3P:
    """EXP3.P over ``n_arms`` arms with gains in [0, 1]."""

    def __init__(self, n_arms: int, horizon: int, params=None):
        self.n_arms = n_arms
        self.horizon = horizon
        self.eta, self.gamma, self.beta = params if params is not None else exp3p_params(n_arms, horizon)
        self.gains = np.zeros(n_arms)
        self.p = np.full(n_arms, 1.0 / n_arms)
        self._pending = None

    def select(self, rng: np.random.Generator) -> int:
        arm = int(rng.choice(self.n_arms, p=self.p))
        self._pending = arm
        return arm

    def update(self, arm: int, reward: float):
        if not 0.0 <= reward <= 1.0:
            raise ContractError(f"EXP3.P reward {reward} outside [0, 1]")
        if arm != self._pending:
            raise ContractError("update must refer to the last selected arm")
        est = np.full(self.n_arms, self.beta) / self.p
        est[arm] += reward / self.p[arm]
        self.gains += est
        z = self.eta * self.gains
        w = np.exp(z - z.max())
        self.p = (1.0 - self.gamma) * w / w.sum() + self.gamma / self.n_arms
        if self.p.min() < self.gamma / self.n_arms * (1 - 1e-12):
            raise ContractError("EXP3.P probability fell below gamma / K'")
        self._pending = None


class CUCBBoB:
    """CUCB-SW restarted every ``block`` rounds with an EXP3.P-chosen window.

    The master arms are windows ``2^0, ..., 2^k`` with ``2^k <= block``.
    Each block's realized reward is normalized per round,
    ``(R_block - len*R1) / (len*(R2 - R1))``, before it is fed back.
    """

    def __init__(self, m: int, horizon: int, block: int, oracle, rng: np.random.Generator,
                 R1: float = 0.0, R2: float = 1.0):
        if block < 1:
            raise ValueError("block length must be positive")
        if not R2 > R1:
            raise ValueError("need R2 > R1")
        self.m, self.horizon, self.block = m, horizon, int(block)
        self.oracle, self.rng = oracle, rng
        self.R1, self.R2 = R1, R2
        self.k = int(math.floor(math.log2(self.block)))
        self.windows = [2 ** i for i in range(self.k + 1)]
        n_blocks = math.ceil(horizon / self.block)
        self.master = Exp3P(len(self.windows), n_blocks) if len(self.windows) > 1 else None
        self.inner: SlidingWindowCUCB | None = None
        self.block_index = 0
        self._block_start = 1
        self._block_reward = 0.0
        self._arm = 0
        self.history: list[dict] = []

    def _start_block(self, t: int):
        self.block_index += 1
        self._block_start = t
        self._block_reward = 0.0
        self._arm = self.master.select(self.rng) if self.master is not None else 0
        self.inner = SlidingWindowCUCB(self.m, self.horizon, self.windows[self._arm], self.oracle)
        # inner rounds are counted from 1 within the block
        self._offset = t - 1

    def _block_end(self, t: int) -> int:
        return min(self._block_start + self.block - 1, self.horizon)

    def act(self, t: int):
        if self.inner is None or t > self._block_end(t):
            self._start_block(t)
        return self.inner.act(t - self._offset)

    def observe(self, t: int, triggered, values, reward=None):
        if reward is None:
            raise ContractError("CUCB-BoB needs the realized reward of every round")
        self.inner.observe(t - self._offset, triggered, values)
        self._block_reward += reward
        if t == self._block_end(t):
            length = t - self._block_start + 1
            feed = (self._block_reward - length * self.R1) / (length * (self.R2 - self.R1))
            if not -1e-12 <= feed <= 1 + 1e-12:
                raise ContractError(f"block reward {self._block_reward} outside "
                                    f"[{length * self.R1}, {length * self.R2}]; check R1/R2")
            feed = min(max(feed, 0.0), 1.0)
            if self.master is not None:
                self.master.update(self._arm, feed)
            self.history.append({"block": self.block_index, "window": self.windows[self._arm],
                                 "length": length, "feed": feed})

    def snapshot(self) -> dict:
        return {"block": self.block_index, "windows": self.windows,
                "master_p": None if self.master is None else self.master.p.tolist(),
                "chosen_windows": [h["window"] for h in self.history]}


def recommended_block(T: int, m: int, K: int, R: float, mode: str = "indep") -> int:
    """Block length: ``sqrt(m K T) / R`` (indep) or ``K^(2/3) T^(1/3)`` (dep), clamped to [1, T]."""
    if T < 1 or m < 1 or K < 1 or R <= 0:
        raise ValueError("need T, m, K >= 1 and R > 0")
    if mode == "indep":
        L = math.sqrt(m * K * T) / R
    elif mode == "dep":
        L = K ** (2 / 3) * T ** (1 / 3)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return int(min(max(round(L), 1), T))
