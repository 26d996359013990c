"""Non-stationary environments: mean schedules, triggering, rewards, measures.

Arms are 0-based throughout. Rounds are 1-based (``1 <= t <= horizon``).
Outcomes are independent Bernoulli draws with per-round means.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

FULL = "full"
CASCADE = "cascade"
LINEAR = "linear"
DISJUNCTIVE = "disjunctive"

TV_EXACT_MAX_M = 12


class InvalidAction(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TriggeringModel:
    kind: str = FULL

    def __post_init__(self):
        if self.kind not in (FULL, CASCADE):
            raise ValueError(f"unknown triggering kind {self.kind!r}")


@dataclass(frozen=True)
class RewardModel:
    kind: str = LINEAR
    smoothness_B: float = 1.0

    def __post_init__(self):
        if self.kind not in (LINEAR, DISJUNCTIVE):
            raise ValueError(f"unknown reward kind {self.kind!r}")


@dataclass(frozen=True)
class EnvSchedule:
    """Immutable per-round Bernoulli means, stored as a ``(horizon, m)`` table.

    ``kind``/``parameters``/``seed`` describe how the table was produced so the
    schedule can be serialized without the table and regenerated.
    """

    means: np.ndarray
    kind: str = "explicit"
    parameters: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        means = np.array(self.means, dtype=float)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValueError("means must be a non-empty (horizon, m) table")
        if np.any(means < 0) or np.any(means > 1) or not np.all(np.isfinite(means)):
            raise ValueError("every mean must lie in [0, 1]")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

    @property
    def horizon(self) -> int:
        return self.means.shape[0]

    @property
    def m(self) -> int:
        return self.means.shape[1]

    def mean(self, t: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise IndexError(f"round {t} outside [1, {self.horizon}]")
        return self.means[t - 1]

    @property
    def change_points(self) -> list[int]:
        diff = np.any(self.means[1:] != self.means[:-1], axis=1)
        return [int(t) + 2 for t in np.flatnonzero(diff)]

    def segments(self) -> list[tuple[int, int]]:
        """Maximal constant stretches as inclusive ``(start, end)`` rounds."""
        starts = [1] + self.change_points
        ends = [s - 1 for s in starts[1:]] + [self.horizon]
        return list(zip(starts, ends))

    def to_json(self) -> dict:
        doc = {"m": self.m, "horizon": self.horizon, "kind": self.kind,
               "parameters": dict(self.parameters), "seed": self.seed}
        if self.kind == "explicit":
            doc["means"] = self.means.tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "EnvSchedule":
        kind = doc.get("kind", "explicit")
        params = dict(doc.get("parameters", {}))
        m, horizon = doc["m"], doc["horizon"]
        if kind == "explicit":
            sched = cls(np.asarray(doc["means"], dtype=float))
        elif kind == "segments":
            sched = from_segments(params["starts"], params["segment_means"], horizon)
        elif kind == "piecewise":
            sched = make_piecewise(m, horizon, params["segments"],
                                   min_gap=params.get("min_gap", 0.1),
                                   rng=np.random.default_rng(doc["seed"]),
                                   sampler=params.get("sampler", "uniform"))
        elif kind == "drift":
            sched = make_drift(m, horizon, params["variation"],
                               rng=np.random.default_rng(doc["seed"]))
        else:
            raise ValueError(f"unknown schedule kind {kind!r}")
        if sched.m != m or sched.horizon != horizon:
            raise ValueError("schedule document disagrees with its own m/horizon")
        return sched


def from_segments(starts: Sequence[int], segment_means, horizon: int) -> EnvSchedule:
    """Piecewise-constant schedule from 1-based segment start rounds."""
    segment_means = np.asarray(segment_means, dtype=float)
    starts = list(starts)
    if not starts or starts[0] != 1 or sorted(starts) != starts or len(set(starts)) != len(starts):
        raise ValueError("segment starts must be strictly increasing and begin at 1")
    if starts[-1] > horizon or len(starts) != len(segment_means):
        raise ValueError("segment starts and means do not fit the horizon")
    lengths = np.diff(starts + [horizon + 1])
    means = np.repeat(segment_means, lengths, axis=0)
    return EnvSchedule(means, kind="segments",
                       parameters={"starts": starts, "segment_means": segment_means.tolist()})


SAMPLERS: dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "uniform": lambda rng, m: rng.random(m),
}


def make_piecewise(m: int, T: int, segments: int, mean_sampler=None, min_gap: float = 0.1,
                   rng: np.random.Generator | None = None, sampler: str = "uniform",
                   max_tries: int = 1000) -> EnvSchedule:
    """Switching environment with exactly ``segments`` stationary pieces.

    Segment ``k`` (0-based) starts at round ``1 + floor(k*T/segments)``, so
    lengths are ``floor(T/S)`` or ``ceil(T/S)``. Consecutive segment means
    differ by at least ``min_gap`` in sup-norm (rejection sampling).
    """
    if not 1 <= segments <= T:
        raise ValueError("need 1 <= segments <= T")
    if not 0 < min_gap < 1:
        raise ValueError("min_gap must lie in (0, 1)")
    rng = np.random.default_rng() if rng is None else rng
    draw = mean_sampler if mean_sampler is not None else SAMPLERS[sampler]
    seg_means = [np.asarray(draw(rng, m), dtype=float)]
    for _ in range(segments - 1):
        for _ in range(max_tries):
            cand = np.asarray(draw(rng, m), dtype=float)
            if np.max(np.abs(cand - seg_means[-1])) >= min_gap:
                break
        else:
            raise GenerationError(f"no segment mean with sup-norm gap >= {min_gap} "
                                  f"after {max_tries} draws")
        seg_means.append(cand)
    starts = [1 + (k * T) // segments for k in range(segments)]
    sched = from_segments(starts, np.array(seg_means), T)
    params = {"segments": segments, "min_gap": min_gap}
    if mean_sampler is None:
        params["sampler"] = sampler
    return EnvSchedule(sched.means, kind="piecewise", parameters=params)


def make_drift(m: int, T: int, variation: float, rng: np.random.Generator | None = None) -> EnvSchedule:
    """Slowly drifting environment whose total variation equals ``variation``.

    Arm 0 follows a triangle wave moving exactly ``variation / (T - 1)`` per
    round; the turning points fall on whole rounds so no step is shortened.
    Other arms keep constant random means.
    """
    if variation < 0:
        raise ValueError("variation must be nonnegative")
    rng = np.random.default_rng() if rng is None else rng
    base = rng.random(m)
    means = np.tile(base, (T, 1))
    params = {"variation": variation}
    if variation == 0:
        return EnvSchedule(means, kind="drift", parameters=params)
    if T < 2:
        raise GenerationError("positive variation needs at least two rounds")
    step = variation / (T - 1)
    if step > 1:
        raise GenerationError(f"variation {variation} needs steps larger than 1 over {T} rounds")
    # compare before dividing: a tiny step would overflow 1/step
    half_period = T - 1 if step * (T - 1) <= 1.0 else max(1, int(np.floor(1.0 / step)))
    amplitude = step * half_period
    low = rng.random() * max(0.0, 1.0 - amplitude)
    k = np.arange(T)
    phase = k % (2 * half_period)
    tri = np.where(phase <= half_period, phase, 2 * half_period - phase)
    means[:, 0] = np.clip(low + step * tri, 0.0, 1.0)
    return EnvSchedule(means, kind="drift", parameters=params)


class Measures(NamedTuple):
    switchings: int
    variation: float
    total_variation: float
    total_variation_exact: bool


def _bernoulli_product_tv(p: np.ndarray, q: np.ndarray) -> float:
    """Exact TV distance between two product-Bernoulli laws (2^m outcomes)."""
    P = np.ones(1)
    Qd = np.ones(1)
    for a, b in zip(p, q):
        P = np.concatenate([P * (1 - a), P * a])
        Qd = np.concatenate([Qd * (1 - b), Qd * b])
    return 0.5 * float(np.abs(P - Qd).sum())


def realized_measures(schedule: EnvSchedule) -> Measures:
    means = schedule.means
    steps = means[1:] - means[:-1]
    changed = np.any(steps != 0, axis=1)
    S = 1 + int(changed.sum())
    V = float(np.abs(steps).max(axis=1).sum()) if len(steps) else 0.0
    exact = schedule.m <= TV_EXACT_MAX_M
    if exact:
        Vbar = sum(_bernoulli_product_tv(means[t], means[t + 1]) for t in np.flatnonzero(changed))
    else:
        Vbar = float(np.abs(steps).sum())
    return Measures(S, V, float(Vbar), exact)


# --- rounds ---------------------------------------------------------------

def _check_action(action, m: int) -> tuple[int, ...]:
    action = tuple(int(i) for i in action)
    if not action:
        raise InvalidAction("empty action")
    if len(set(action)) != len(action) or min(action) < 0 or max(action) >= m:
        raise InvalidAction(f"action {action} is not a set of distinct arms in [0, {m})")
    return action


def trigger(action, x, trig: TriggeringModel) -> tuple[int, ...]:
    """Triggered arms for a realized outcome vector ``x``.

    Under cascade the arms of ``action`` are examined in listed order and the
    scan stops right after the first arm with outcome 1.
    """
    if trig.kind == FULL:
        return tuple(action)
    out = []
    for i in action:
        out.append(i)
        if x[i] >= 1:
            break
    return tuple(out)


def realized_reward(action, x, reward: RewardModel) -> float:
    vals = np.asarray(x, dtype=float)[list(action)]
    if reward.kind == LINEAR:
        return float(vals.sum())
    return float(1.0 - np.prod(1.0 - vals))


def expected_reward(action, mu, reward: RewardModel) -> float:
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or np.any(mu > 1):
        raise ValueError("mean vector must lie in [0, 1]^m")
    vals = mu[list(action)]
    if reward.kind == LINEAR:
        return float(vals.sum())
    return float(1.0 - np.prod(1.0 - vals))


def trigger_probabilities(action, mu, trig: TriggeringModel) -> np.ndarray:
    """Probability that ``action`` triggers each arm under product Bernoulli means."""
    mu = np.asarray(mu, dtype=float)
    p = np.zeros(len(mu))
    reach = 1.0
    for i in action:
        p[i] = reach if trig.kind == CASCADE else 1.0
        reach *= 1.0 - mu[i]
    return p


def sample_round(schedule: EnvSchedule, t: int, action, trig: TriggeringModel,
                 reward: RewardModel, rng: np.random.Generator):
    """Draw one round: returns ``(triggered, observations, realized_reward)``."""
    mu = schedule.mean(t)
    action = _check_action(action, schedule.m)
    x = (rng.random(schedule.m) < mu).astype(float)
    tau = trigger(action, x, trig)
    return tau, {i: x[i] for i in tau}, realized_reward(action, x, reward)


def enumerate_outcomes(m: int):
    """All 2^m binary outcome vectors (small m only)."""
    return np.array(list(itertools.product((0.0, 1.0), repeat=m)))
