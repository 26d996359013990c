"""Empirical checks shared by the acceptance suite and the scripts in ``scripts/``.

Each function is deterministic given its arguments and returns plain numbers
so callers decide what counts as a pass.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .ada import AdaConstants, IntervalStats, draw_action, end_of_block_test, end_of_replay_test
from .bob import Exp3P
from .config import RunConfig
from .cucb_sw import SlidingWindowCUCB
from .env import LINEAR, RewardModel, make_drift, make_piecewise, realized_measures
from .ftrl import _max_min_coverage, ftrl_solve, guarantee_margins
from .oracles import ActionSpace, exact_oracle, signed_linear_oracle
from .runner import run, run_seed
from .sim import simulate


# -- random instances ---------------------------------------------------------

def random_enumerated_space(rng: np.random.Generator, m: int, n_actions: int) -> ActionSpace:
    """Random distinct subsets of ``range(m)`` with every arm covered at least once."""
    acts = {tuple(sorted(rng.choice(m, int(rng.integers(1, m + 1)), replace=False).tolist()))
            for _ in range(n_actions)}
    acts = [set(a) for a in sorted(acts)]
    for i in range(m):
        if not any(i in a for a in acts):
            acts[int(rng.integers(len(acts)))].add(i)
    return ActionSpace.enumerated(m, sorted({tuple(sorted(a)) for a in acts}))


def random_ftrl_instance(rng: np.random.Generator, max_m: int = 6, max_actions: int = 20):
    """``(space, mu_hat, nu)`` with ``mu_hat ~ U[0,1]^m``.

    ``nu`` is uniform below ``min(1/(2m), best coverage)``: the solver is only
    ever called with ``nu <= nu_0``, and ``L = ceil(4 m C0)`` forces
    ``nu_0 <= 1/(2m)``. 30% of instances use a top-k space, the rest an
    enumerated one with at most ``max_actions`` actions.
    """
    m = int(rng.integers(2, max_m + 1))
    if rng.random() < 0.3:
        space = ActionSpace.top_k(m, int(rng.integers(1, m + 1)))
        cover = space.K / m
    else:
        space = random_enumerated_space(rng, m, int(rng.integers(2, max_actions + 1)))
        cover = _max_min_coverage(space.incidence())[0]
    nu = min(cover, 1.0 / (2 * m)) * rng.uniform(0.01, 0.99)
    return space, rng.uniform(0.0, 1.0, m), nu


def brute_force_argmax(weights, space: ActionSpace, value) -> tuple:
    """Scan every action; ties go to the smallest sorted tuple."""
    best, best_v = None, -math.inf
    for a in space.actions:
        v = value(a, weights)
        if v > best_v + 1e-12 or (abs(v - best_v) <= 1e-12 and tuple(sorted(a)) < tuple(sorted(best))):
            best, best_v = a, max(v, best_v)
    return best


# -- individual criteria -------------------------------------------------------

def oracle_agreement(n: int = 1000, seed: int = 0) -> dict:
    """Exact and signed oracles against brute-force scans on random spaces (m <= 8)."""
    rng = np.random.default_rng(seed)
    mismatches = {"exact": 0, "signed": 0}

    def linear(a, w):
        return float(w[list(a)].sum())

    def disjunctive(a, w):
        return float(1.0 - np.prod(1.0 - w[list(a)]))

    for _ in range(n):
        m = int(rng.integers(1, 9))
        if rng.random() < 0.5:
            space = ActionSpace.top_k(m, int(rng.integers(1, m + 1)))
        else:
            space = random_enumerated_space(rng, m, int(rng.integers(1, 30)))
        reward = RewardModel(LINEAR if rng.random() < 0.5 else "disjunctive")
        w = rng.random(m)
        value = linear if reward.kind == LINEAR else disjunctive
        if exact_oracle(w, space, reward) != brute_force_argmax(w, space, value):
            mismatches["exact"] += 1
        ws = rng.normal(size=m)
        if signed_linear_oracle(ws, space) != brute_force_argmax(ws, space, linear):
            mismatches["signed"] += 1
    return mismatches


def ftrl_guarantees(n: int = 200, seed: int = 0) -> dict:
    """Slack of both FTRL guarantees and reconstruction error over random instances."""
    rng = np.random.default_rng(seed)
    slacks, errors, floor = [], [], []
    for _ in range(n):
        space, mu, nu = random_ftrl_instance(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = ftrl_solve(mu, nu, space)
        r, v = guarantee_margins(sol, mu, space)
        rec = np.zeros(space.m)
        for a, wt in zip(sol.dist.actions, sol.dist.weights):
            rec[list(a)] += wt
        slacks.append(min(r, v))
        errors.append(float(np.abs(rec - sol.q).max()))
        floor.append(sol.floor_active)
    slacks = np.array(slacks)
    return {"min_slack": float(slacks.min()), "max_reconstruction_error": max(errors),
            "violations": int((slacks < -1e-6).sum()),
            "violations_with_floor_active": int(sum(s < -1e-6 and f for s, f in zip(slacks, floor))),
            "floor_active": int(sum(floor))}


def estimator_bias(n_states: int = 10, draws: int = 100_000, seed: int = 0) -> list[float]:
    """Largest componentwise |z|-score of the importance-weighted mean per random state.

    A state is a set of FTRL solutions for blocks ``0..j`` plus a random set of
    active replay levels; actions come from :func:`draw_action`.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_states):
        m = int(rng.integers(2, 7))
        space = (ActionSpace.top_k(m, int(rng.integers(1, m)))
                 if rng.random() < 0.5 else random_enumerated_space(rng, m, 12))
        cover = space.K / m if space.kind == "top_k" else _max_min_coverage(space.incidence())[0]
        j = int(rng.integers(1, 4))
        sols = [ftrl_solve(rng.uniform(0, 1, m), cover * rng.uniform(0.05, 0.5), space) for _ in range(j + 1)]
        active = sorted(int(k) for k in np.flatnonzero(rng.random(j) < 0.5))
        mu = rng.uniform(0.05, 0.95, m)
        total = np.zeros(m)
        q = None
        for _ in range(draws):
            action, q = draw_action(sols, j, active, rng)
            idx = list(action)
            x = rng.random(len(idx)) < mu[idx]
            total[idx] += x / q[idx]
        mean = total / draws
        # Var(X_i 1{i in S} / q_i) = mu_i / q_i - mu_i^2
        sd = np.sqrt((mu / q - mu**2) / draws)
        out.append(float(np.max(np.abs(mean - mu) / sd)))
    return out


def confidence_coverage(seeds: int = 20, T: int = 2000, m: int = 10, k: int = 3) -> float:
    """Fraction of rounds at which some arm has ``|mu_hat - mu| >= rho`` (stationary, window T)."""
    bad = 0
    space, reward = ActionSpace.top_k(m, k), RewardModel()
    for seed in range(seeds):
        sched = make_piecewise(m, T, 1, rng=np.random.default_rng([seed, 1]))
        mu = sched.means[0]
        pol = SlidingWindowCUCB(m, T, T, lambda w: exact_oracle(w, space, reward))

        def check(t, policy):
            nonlocal bad
            seen = policy._counts > 0
            if np.any(np.abs(policy.mu_hat - mu)[seen] >= policy.radius[seen]):
                bad += 1

        simulate(sched, space, pol, np.random.default_rng([seed, 0]), callback=check)
    return bad / (seeds * T)


def exp3p_regret(seeds: int = 20, n_arms: int = 8, horizon: int = 10_000) -> tuple[float, float]:
    """Mean regret on gains (1, 0, ..., 0) and the bound ``5 sqrt(K T ln K)``."""
    regrets = []
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        master = Exp3P(n_arms, horizon)
        got = 0.0
        for _ in range(horizon):
            arm = master.select(rng)
            g = 1.0 if arm == 0 else 0.0
            master.update(arm, g)
            got += g
        regrets.append(horizon - got)
    return float(np.mean(regrets)), 5 * math.sqrt(n_arms * horizon * math.log(n_arms))


def scaling_config(S: int, T: int = 20000, m: int = 6, k: int = 2, min_gap: float = 0.3,
                   seeds: int = 20, algo=None) -> RunConfig:
    algo = algo if algo is not None else {"name": "cucb_sw", "window": "auto", "measure": "S", "mode": "dep"}
    return RunConfig.from_dict({
        "T": T, "env": {"kind": "piecewise", "m": m, "parameters": {"segments": S, "min_gap": min_gap}},
        "space": {"kind": "top_k", "k": k}, "algo": algo, "seeds": list(range(seeds))})


def final_regrets(cfg: RunConfig) -> tuple[list[float], dict]:
    finals, resolved = [], {}
    for seed in cfg.seeds:
        ledger, _, _, resolved = run_seed(cfg, seed)
        finals.append(ledger.total)
    return finals, resolved


def cucb_sw_scaling(S_values=(2, 8, 32), seeds: int = 20, T: int = 20000, m: int = 6) -> dict:
    """Tuned-window regret across switching numbers, plus window = T at the largest."""
    means, windows = {}, {}
    for S in S_values:
        finals, res = final_regrets(scaling_config(S, T, m, seeds=seeds))
        means[S], windows[S] = float(np.mean(finals)), res["window"]
    S_max = max(S_values)
    full, _ = final_regrets(scaling_config(S_max, T, m, seeds=seeds,
                                           algo={"name": "cucb_sw", "window": T}))
    slope = float(np.polyfit(np.log(S_values), np.log([means[S] for S in S_values]), 1)[0])
    return {"mean_regret": means, "window": windows, "full_window_regret": float(np.mean(full)),
            "slope": slope, "ratio": means[S_max] / float(np.mean(full))}


def bob_vs_fixed(S: int = 8, seeds: int = 10, T: int = 20000, m: int = 6) -> dict:
    """BoB with the recommended block against every fixed power-of-two window it can pick."""
    bob, res = final_regrets(scaling_config(S, T, m, seeds=seeds, algo={"name": "cucb_bob", "L": "auto"}))
    fixed = {}
    for w in res["windows"]:
        finals, _ = final_regrets(scaling_config(S, T, m, seeds=seeds, algo={"name": "cucb_sw", "window": w}))
        fixed[w] = float(np.mean(finals))
    best = min(fixed, key=fixed.get)
    return {"L": res["L"], "bob": float(np.mean(bob)), "fixed": fixed, "best_window": best,
            "ratio": float(np.mean(bob)) / fixed[best]}


def flip_config(flip: bool, seeds: int = 20, T: int = 8192, L_max: int = 64, gap: float = 0.5,
                overrides: dict | None = None) -> RunConfig:
    """m = 4, top-1; arm 0 leads by ``gap`` and, if ``flip``, hands the lead to arm 1 at T/2."""
    base = [0.5 + gap / 2, 0.5 - gap / 2, 0.5 - gap / 2, 0.5 - gap / 2]
    after = [0.5 - gap / 2, 0.5 + gap / 2, 0.5 - gap / 2, 0.5 - gap / 2]
    params = ({"starts": [1, T // 2 + 1], "segment_means": [base, after]} if flip
              else {"starts": [1], "segment_means": [base]})
    consts = {"L_max": L_max, **(overrides or {})}
    return RunConfig.from_dict({
        "T": T, "env": {"kind": "segments", "m": 4, "parameters": params, "seed": 0},
        "space": {"kind": "top_k", "k": 1},
        "algo": {"name": "ada_lcmab", "constants_override": consts}, "seeds": list(range(seeds))})


def ada_restarts(seeds: int = 20, T: int = 8192, L_max: int = 64, overrides: dict | None = None) -> dict:
    """Share of seeds restarting after the flip, and restarting at all when stationary."""
    after, false_alarm = 0, 0
    for seed in range(seeds):
        _, _, pol, _ = run_seed(flip_config(True, seeds, T, L_max, overrides=overrides), seed)
        after += any(t > T // 2 for t in pol.restarts)
        _, _, pol, res = run_seed(flip_config(False, seeds, T, L_max, overrides=overrides), seed)
        false_alarm += bool(pol.restarts)
    return {"restart_after_flip": after / seeds, "false_alarm": false_alarm / seeds, **res}


def restart_test_agreement(n: int = 100, seed: int = 0) -> int:
    """Disagreements between oracle-evaluated restart tests and brute-force scans."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        m = int(rng.integers(2, 6))
        space = random_enumerated_space(rng, m, int(rng.integers(2, 16)))
        consts = AdaConstants.for_space(1000, space, C0=float(rng.uniform(0.001, 0.05)), L=16)
        j = int(rng.integers(1, 4))
        scale = 1.0 / consts.nu(0)
        stats = [IntervalStats(rng.uniform(0, scale, m), space) for _ in range(j + 1)]
        n_level = int(rng.integers(0, j))
        acts = space.actions

        def reg(st, a):
            return max(st.mean[list(b)].sum() for b in acts) - st.mean[list(a)].sum()

        def brute(a, b, thr):
            return any(reg(a, S) - 4 * reg(b, S) >= thr or reg(b, S) - 4 * reg(a, S) >= thr for S in acts)

        passed, _ = end_of_replay_test(stats[0], stats[1], n_level, consts)
        bad += passed == brute(stats[0], stats[1], consts.replay_threshold(n_level))
        passed, _ = end_of_block_test(stats[j], stats[:j], consts)
        bad += passed == any(brute(stats[j], stats[k], consts.block_threshold(k)) for k in range(j))
    return bad


def measure_checks(n: int = 200, seed: int = 0) -> dict:
    """Requested switching numbers and variations against the realized measures."""
    rng = np.random.default_rng(seed)
    s_err, v_err, order_bad = 0, 0.0, 0
    for _ in range(n):
        m = int(rng.integers(1, 8))
        T = int(rng.integers(2, 600))
        if rng.random() < 0.5:
            S = int(rng.integers(1, min(T, 40) + 1))
            sched = make_piecewise(m, T, S, min_gap=0.2, rng=rng)
            meas = realized_measures(sched)
            s_err += meas.switchings != S
        else:
            V = float(rng.uniform(0, min(T - 1, 50)))
            sched = make_drift(m, T, V, rng=rng)
            meas = realized_measures(sched)
            v_err = max(v_err, abs(meas.variation - V))
        order_bad += not (meas.variation <= meas.total_variation + 1e-12
                          and meas.variation <= meas.switchings + 1e-12)
    return {"switching_mismatches": s_err, "max_variation_error": v_err, "order_violations": order_bad}


def determinism(tmp_dir) -> list[str]:
    """Configs (one per algorithm) whose CSVs differ between two runs."""
    differ = []
    for name, algo in [("cucb_sw", {"name": "cucb_sw", "window": "auto"}),
                       ("cucb_bob", {"name": "cucb_bob"}),
                       ("ada_lcmab", {"name": "ada_lcmab", "constants_override": {"L_max": 32}}),
                       ("approx", {"name": "cucb_sw", "window": 64})]:
        doc = {"T": 1500, "env": {"kind": "piecewise", "m": 5, "parameters": {"segments": 3, "min_gap": 0.3}},
               "space": {"kind": "top_k", "k": 2}, "algo": algo, "seeds": [0, 7]}
        if name == "approx":
            doc.update(alpha=0.8, beta=0.9, trigger="cascade", reward="disjunctive")
        cfg = RunConfig.from_dict(doc)
        texts = []
        for rep in range(2):
            out = f"{tmp_dir}/{name}_{rep}"
            run(cfg, out)
            texts.append([open(f"{out}/seed_{s}.csv", "rb").read() for s in cfg.seeds])
        if texts[0] != texts[1]:
            differ.append(name)
    return differ

