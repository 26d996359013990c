"""Non-stationary combinatorial semi-bandits.

Environments with switching or drifting Bernoulli arms, exact and
approximate offline oracles, sliding-window CUCB, its bandit-over-bandit
tuner and the parameter-free Ada-LCMAB learner, plus regret accounting and
a reproducible run harness.
"""

from .ada import AdaConstants, AdaLCMAB
from .bob import CUCBBoB, Exp3P, exp3p_params, recommended_block
from .config import ConfigError, RunConfig
from .cucb_sw import ContractError, SlidingWindowCUCB, recommended_window
from .env import (EnvSchedule, RewardModel, TriggeringModel, from_segments, make_drift,
                  make_piecewise, realized_measures)
from .ftrl import decompose_marginals, ftrl_solve
from .metrics import RegretLedger, gap_report
from .oracles import ActionSpace, DegradedOracle, OracleSpec, exact_oracle, signed_linear_oracle
from .sim import simulate

__version__ = "0.1.0"
