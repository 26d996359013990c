"""Action spaces and offline oracles.

Actions are tuples of 0-based arm indices. Ties are always broken towards
the lexicographically smallest (sorted) action.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .env import LINEAR, RewardModel

ENUMERATED = "enumerated"
TOP_K = "top_k"

MATERIALIZE_CAP = 100_000
TIE_TOL = 1e-12


class OracleError(RuntimeError):
    pass


class ActionSpace:
    """Either an explicit list of actions or all K-subsets of ``range(m)``."""

    def __init__(self, m: int, actions=None, k: int | None = None, cap: int = MATERIALIZE_CAP):
        self.m = int(m)
        self.cap = cap
        if (actions is None) == (k is None):
            raise ValueError("give exactly one of actions= or k=")
        if actions is not None:
            acts = [tuple(int(i) for i in a) for a in actions]
            if not acts:
                raise ValueError("enumerated action space is empty")
            for a in acts:
                if not a or len(set(a)) != len(a) or min(a) < 0 or max(a) >= self.m:
                    raise ValueError(f"bad action {a} for m={self.m}")
            self.kind = ENUMERATED
            self._actions = acts
            self.K = max(len(a) for a in acts)
        else:
            if not 1 <= k <= self.m:
                raise ValueError("need 1 <= k <= m")
            self.kind = TOP_K
            self._actions = None
            self.K = int(k)
        self._incidence = None

    @classmethod
    def top_k(cls, m: int, k: int) -> "ActionSpace":
        return cls(m, k=k)

    @classmethod
    def enumerated(cls, m: int, actions) -> "ActionSpace":
        return cls(m, actions=actions)

    @property
    def size(self) -> int:
        if self.kind == TOP_K:
            return math.comb(self.m, self.K)
        return len(self._actions)

    @property
    def actions(self) -> list[tuple[int, ...]]:
        if self._actions is None:
            if self.size > self.cap:
                raise OracleError(f"refusing to materialize {self.size} actions (cap {self.cap})")
            self._actions = list(itertools.combinations(range(self.m), self.K))
        return self._actions

    def incidence(self) -> np.ndarray:
        """``(m, |S|)`` 0/1 matrix whose columns are the action indicators."""
        if self._incidence is None:
            acts = self.actions
            A = np.zeros((self.m, len(acts)))
            for j, a in enumerate(acts):
                A[list(a), j] = 1.0
            A.setflags(write=False)
            self._incidence = A
        return self._incidence

    def to_json(self) -> dict:
        if self.kind == TOP_K:
            return {"kind": TOP_K, "m": self.m, "k": self.K}
        return {"kind": ENUMERATED, "m": self.m, "actions": [list(a) for a in self._actions]}

    @classmethod
    def from_json(cls, doc: dict) -> "ActionSpace":
        if doc["kind"] == TOP_K:
            return cls.top_k(doc["m"], doc["k"])
        if doc["kind"] == ENUMERATED:
            return cls.enumerated(doc["m"], doc["actions"])
        raise ValueError(f"unknown action space kind {doc['kind']!r}")

    def __repr__(self):
        if self.kind == TOP_K:
            return f"ActionSpace.top_k(m={self.m}, k={self.K})"
        return f"ActionSpace.enumerated(m={self.m}, |S|={len(self._actions)})"


def _top_k(weights: np.ndarray, k: int) -> tuple[int, ...]:
    # stable sort on -w keeps smaller indices first among ties
    order = np.argsort(-weights, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def _best_of(values: np.ndarray, actions) -> tuple[int, ...]:
    best = values.max()
    cands = [actions[j] for j in np.flatnonzero(values >= best - TIE_TOL * max(1.0, abs(best)))]
    return min(cands, key=lambda a: tuple(sorted(a)))


def _action_values(weights, space: ActionSpace, reward: RewardModel) -> np.ndarray:
    A = space.incidence()
    if reward.kind == LINEAR:
        return weights @ A
    return 1.0 - np.prod(np.where(A > 0, (1.0 - weights)[:, None], 1.0), axis=0)


def exact_oracle(weights, space: ActionSpace, reward: RewardModel) -> tuple[int, ...]:
    """argmax over the action space of the expected reward at ``weights``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("oracle weights must lie in [0, 1]^m")
    if space.kind == TOP_K:
        # both reward kinds are maximized by the K largest coordinates
        return _top_k(w, space.K)
    return _best_of(_action_values(w, space, reward), space.actions)


def signed_linear_oracle(weights, space: ActionSpace) -> tuple[int, ...]:
    """argmax of ``sum(weights[S])`` for arbitrary real weights."""
    w = np.asarray(weights, dtype=float)
    if space.kind == TOP_K:
        return _top_k(w, space.K)
    return _best_of(w @ space.incidence(), space.actions)


def optimal_value(weights, space: ActionSpace, reward: RewardModel) -> float:
    from .env import expected_reward
    return expected_reward(exact_oracle(weights, space, reward), weights, reward)


@dataclass(frozen=True)
class OracleSpec:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")

    @property
    def is_exact(self) -> bool:
        return self.alpha == 1 and self.beta == 1


class DegradedOracle:
    """(alpha, beta)-approximation oracle built around the exact one.

    With probability ``beta`` the call succeeds: for ``alpha == 1`` it returns
    the exact argmax, otherwise the best action inside a random half of the
    action space fixed at construction, falling back to the exact argmax when
    that half has no ``alpha``-good action for the given weights. Failures
    return a uniformly random action.
    """

    def __init__(self, spec: OracleSpec, space: ActionSpace, reward: RewardModel,
                 rng: np.random.Generator):
        self.spec, self.space, self.reward, self.rng = spec, space, reward, rng
        self.half = None
        if spec.alpha < 1:
            n = space.size
            idx = np.sort(rng.choice(n, size=max(1, n // 2), replace=False))
            self.half = [space.actions[i] for i in idx]

    def __call__(self, weights) -> tuple[int, ...]:
        if self.spec.is_exact:
            return exact_oracle(weights, self.space, self.reward)
        if self.rng.random() >= self.spec.beta:
            acts = self.space.actions
            return acts[int(self.rng.integers(len(acts)))]
        best = exact_oracle(weights, self.space, self.reward)
        if self.half is None:
            return best
        w = np.asarray(weights, dtype=float)
        opt = _reward(best, w, self.reward)
        vals = np.array([_reward(a, w, self.reward) for a in self.half])
        j = int(np.argmax(vals))
        return self.half[j] if vals[j] >= self.spec.alpha * opt else best


def _reward(action, w, reward):
    vals = w[list(action)]
    return float(vals.sum()) if reward.kind == LINEAR else float(1.0 - np.prod(1.0 - vals))


def degraded_oracle(spec: OracleSpec, weights, space, reward, rng) -> tuple[int, ...]:
    """One-shot convenience wrapper; builds a fresh :class:`DegradedOracle`."""
    return DegradedOracle(spec, space, reward, rng)(weights)
