"""Run configuration: validation, canonical serialization and seeding."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .env import CASCADE, DISJUNCTIVE, FULL, LINEAR, SAMPLERS, EnvSchedule, RewardModel, TriggeringModel
from .oracles import ENUMERATED, TOP_K, ActionSpace, OracleSpec

ALGOS = ("cucb_sw", "cucb_bob", "ada_lcmab")
ENV_KINDS = ("piecewise", "drift", "segments", "explicit")
MEASURES = ("S", "V", "Vbar")

# child indices of SeedSequence(seed).spawn(4)
STREAM_ENV, STREAM_OUTCOME, STREAM_POLICY, STREAM_ORACLE = range(4)


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


@dataclass(frozen=True)
class EnvConfig:
    kind: str = "piecewise"
    m: int = 6
    parameters: dict = field(default_factory=lambda: {"segments": 8, "min_gap": 0.3})
    # None: every run seed draws its own schedule from its env stream
    seed: int | None = None


@dataclass(frozen=True)
class SpaceConfig:
    kind: str = TOP_K
    k: int | None = 2
    actions: list | None = None


@dataclass(frozen=True)
class AlgoConfig:
    name: str = "cucb_sw"
    # cucb_sw
    window: int | str = "auto"
    measure: str = "S"
    mode: str = "dep"
    # cucb_bob
    L: int | str = "auto"
    R1: float = 0.0
    R2: float | None = None
    # ada_lcmab
    delta: float = 0.05
    log_base: str = "e"
    C: float = 100.0
    constants_override: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    T: int = 2000
    env: EnvConfig = field(default_factory=EnvConfig)
    space: SpaceConfig = field(default_factory=SpaceConfig)
    algo: AlgoConfig = field(default_factory=AlgoConfig)
    trigger: str = FULL
    reward: str = LINEAR
    alpha: float = 1.0
    beta: float = 1.0
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "runs/default"

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = copy.deepcopy(doc)
        problems = []
        sub = {"env": EnvConfig, "space": SpaceConfig, "algo": AlgoConfig}
        kw = {}
        for key, value in doc.items():
            if key in sub:
                if not isinstance(value, dict):
                    problems.append(f"{key}: expected an object")
                    continue
                known = sub[key].__dataclass_fields__
                extra = sorted(set(value) - set(known))
                problems += [f"{key}.{k}: unknown field" for k in extra]
                kw[key] = sub[key](**{k: v for k, v in value.items() if k in known})
            elif key in cls.__dataclass_fields__:
                kw[key] = value
            else:
                problems.append(f"{key}: unknown field")
        cfg = cls(**kw)
        try:
            cfg.validate()
        except ConfigError as exc:
            problems += exc.problems
        if problems:
            raise ConfigError(problems)
        return cfg

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        """sha256 of the sorted-key JSON without ``out_dir``, which only says where results go."""
        doc = self.to_dict()
        del doc["out_dir"]
        return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes) -> "RunConfig":
        doc = self.to_dict()
        doc.update(changes)
        return RunConfig.from_dict(doc)

    # -- validation --------------------------------------------------------

    def validate(self) -> "RunConfig":
        p = []
        e, s, a = self.env, self.space, self.algo
        if not isinstance(self.T, int) or self.T < 1:
            p.append("T: must be a positive integer")
        if e.kind not in ENV_KINDS:
            p.append(f"env.kind: must be one of {ENV_KINDS}")
        if not isinstance(e.m, int) or e.m < 1:
            p.append("env.m: must be a positive integer")
        if e.kind == "piecewise":
            if not isinstance(e.parameters.get("segments"), int):
                p.append("env.parameters.segments: required integer")
            if e.parameters.get("sampler", "uniform") not in SAMPLERS:
                p.append(f"env.parameters.sampler: must be one of {sorted(SAMPLERS)}")
        if e.kind == "drift" and "variation" not in e.parameters:
            p.append("env.parameters.variation: required")
        if e.kind == "segments" and not {"starts", "segment_means"} <= set(e.parameters):
            p.append("env.parameters: segments need starts and segment_means")
        if e.kind == "explicit" and "means" not in e.parameters:
            p.append("env.parameters.means: required")
        if e.seed is not None and not isinstance(e.seed, int):
            p.append("env.seed: must be an integer or null")
        if s.kind == TOP_K:
            if not isinstance(s.k, int) or not 1 <= s.k <= e.m:
                p.append("space.k: must be an integer in [1, m]")
        elif s.kind == ENUMERATED:
            if not s.actions:
                p.append("space.actions: required for enumerated spaces")
        else:
            p.append(f"space.kind: must be {TOP_K!r} or {ENUMERATED!r}")
        if self.trigger not in (FULL, CASCADE):
            p.append(f"trigger: must be {FULL!r} or {CASCADE!r}")
        if self.reward not in (LINEAR, DISJUNCTIVE):
            p.append(f"reward: must be {LINEAR!r} or {DISJUNCTIVE!r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0 < v <= 1:
                p.append(f"{name}: must lie in (0, 1]")
        if not isinstance(self.seeds, list) or not all(isinstance(x, int) and x >= 0 for x in self.seeds):
            p.append("seeds: must be a list of nonnegative integers")
        if a.name not in ALGOS:
            p.append(f"algo.name: must be one of {ALGOS}")
        if a.name == "cucb_sw":
            if a.window != "auto" and (not isinstance(a.window, int) or a.window < 1):
                p.append("algo.window: must be 'auto' or a positive integer")
            if a.measure not in MEASURES:
                p.append(f"algo.measure: must be one of {MEASURES}")
        if a.name in ("cucb_sw", "cucb_bob") and a.mode not in ("dep", "indep"):
            p.append("algo.mode: must be 'dep' or 'indep'")
        if a.name == "cucb_bob":
            if a.L != "auto" and (not isinstance(a.L, int) or a.L < 1):
                p.append("algo.L: must be 'auto' or a positive integer")
            if a.R2 is not None and not a.R2 > a.R1:
                p.append("algo.R2: must exceed R1")
        if a.name == "ada_lcmab":
            if self.reward != LINEAR or self.trigger != FULL:
                p.append("algo.name: ada_lcmab supports linear rewards with full triggering only")
            if self.alpha != 1 or self.beta != 1:
                p.append("algo.name: ada_lcmab needs an exact oracle (alpha = beta = 1)")
            if not 0 < a.delta < 1:
                p.append("algo.delta: must lie in (0, 1)")
            if a.log_base not in ("e", "2"):
                p.append("algo.log_base: must be 'e' or '2'")
            extra = set(a.constants_override) - {"C0", "L", "L_max", "replay_coef", "block_coef"}
            if extra:
                p.append(f"algo.constants_override: unknown keys {sorted(extra)}")
        if p:
            raise ConfigError(p)
        return self

    # -- builders ------------------------------------------------------------

    def action_space(self) -> ActionSpace:
        if self.space.kind == TOP_K:
            return ActionSpace.top_k(self.env.m, self.space.k)
        return ActionSpace.enumerated(self.env.m, [tuple(a) for a in self.space.actions])

    def trigger_model(self) -> TriggeringModel:
        return TriggeringModel(self.trigger)

    def reward_model(self) -> RewardModel:
        return RewardModel(self.reward)

    def oracle_spec(self) -> OracleSpec:
        return OracleSpec(self.alpha, self.beta)

    def schedule(self, seed: int) -> EnvSchedule:
        """The environment seen by run ``seed``."""
        e = self.env
        env_seed = e.seed if e.seed is not None else int(streams(seed)[STREAM_ENV].generate_state(1)[0])
        doc = {"m": e.m, "horizon": self.T, "kind": e.kind, "parameters": e.parameters, "seed": env_seed}
        if e.kind == "explicit":
            doc["means"] = e.parameters["means"]
        try:
            return EnvSchedule.from_json(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError([f"env: {exc}"]) from exc


def streams(seed: int) -> list[np.random.SeedSequence]:
    """Independent substreams of one run: env, outcomes, policy, oracle.

    ``SeedSequence(seed).spawn(4)`` hashes ``(seed, child index)``, so each
    stream depends only on the run seed and never on run order.
    """
    return np.random.SeedSequence(seed).spawn(4)
