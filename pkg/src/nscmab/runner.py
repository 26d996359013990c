"""Execute configured runs and sweeps, writing CSV ledgers and JSON summaries."""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .ada import AdaConstants, AdaLCMAB
from .bob import CUCBBoB, recommended_block
from .config import STREAM_ORACLE, STREAM_OUTCOME, STREAM_POLICY, ConfigError, RunConfig, streams
from .cucb_sw import SlidingWindowCUCB, recommended_window
from .env import LINEAR, realized_measures
from .oracles import DegradedOracle, exact_oracle
from .sim import simulate

SUMMARY_NAME = "summary.json"


def atomic_write(path, text: str):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _measure_value(measures, name: str) -> float:
    return {"S": measures.switchings, "V": measures.variation, "Vbar": measures.total_variation}[name]


def build_policy(cfg: RunConfig, schedule, seed: int):
    """Instantiate the configured policy; returns ``(policy, resolved parameters)``."""
    space, reward = cfg.action_space(), cfg.reward_model()
    ss = streams(seed)
    policy_rng = np.random.default_rng(ss[STREAM_POLICY])
    spec = cfg.oracle_spec()
    if spec.is_exact:
        def oracle(w):
            return exact_oracle(w, space, reward)
    else:
        oracle = DegradedOracle(spec, space, reward, np.random.default_rng(ss[STREAM_ORACLE]))
    a, T, m = cfg.algo, cfg.T, cfg.env.m
    if a.name == "cucb_sw":
        w = a.window
        if w == "auto":
            measure = _measure_value(realized_measures(schedule), a.measure)
            w = recommended_window(T, measure, a.mode, m=m, K=space.K)
        return SlidingWindowCUCB(m, T, w, oracle), {"window": w}
    if a.name == "cucb_bob":
        R2 = a.R2 if a.R2 is not None else (float(space.K) if reward.kind == LINEAR else 1.0)
        L = a.L if a.L != "auto" else recommended_block(T, m, space.K, R2 - a.R1, a.mode)
        pol = CUCBBoB(m, T, L, oracle, policy_rng, a.R1, R2)
        return pol, {"L": L, "windows": pol.windows, "R1": a.R1, "R2": R2}
    over = dict(a.constants_override)
    kw = {"delta": a.delta, "C": a.C, "log_base": a.log_base}
    kw.update({k: over[k] for k in ("replay_coef", "block_coef") if k in over})
    if "L_max" in over:
        consts = AdaConstants.desk_scale(T, space, over["L_max"], **kw)
    else:
        consts = AdaConstants.for_space(T, space, C0=over.get("C0"), L=over.get("L"), **kw)
    return AdaLCMAB(space, T, policy_rng, consts), {"C0": consts.C0, "L": consts.L}


def run_seed(cfg: RunConfig, seed: int):
    """One run; returns ``(ledger, schedule, policy, resolved)``."""
    schedule = cfg.schedule(seed)
    policy, resolved = build_policy(cfg, schedule, seed)
    rng = np.random.default_rng(streams(seed)[STREAM_OUTCOME])
    ledger = simulate(schedule, cfg.action_space(), policy, rng, cfg.trigger_model(),
                      cfg.reward_model(), cfg.alpha, cfg.beta, seed=seed)
    return ledger, schedule, policy, resolved


def _collapse(values: list):
    """One value when all seeds agree, else the per-seed list."""
    return values[0] if all(v == values[0] for v in values) else values


def run(cfg: RunConfig, out_dir=None, write: bool = True) -> dict:
    """Run every seed of ``cfg``; writes ``seed_<s>.csv`` files and ``summary.json``."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    finals, meas, resolved, restarts = [], [], [], []
    for seed in cfg.seeds:
        ledger, schedule, policy, res = run_seed(cfg, seed)
        if write:
            atomic_write(out / f"seed_{seed}.csv", ledger.to_csv())
        finals.append(ledger.total)
        meas.append(realized_measures(schedule))
        resolved.append(res)
        if isinstance(policy, AdaLCMAB):
            restarts.append(list(policy.restarts))
    summary = {
        "config_hash": cfg.config_hash,
        "seeds": list(cfg.seeds),
        "final_regrets": finals,
        "final_regret_mean": float(np.mean(finals)) if finals else None,
        "final_regret_std": float(np.std(finals)) if finals else None,
        "realized_S": _collapse([mm.switchings for mm in meas]) if meas else None,
        "realized_V": _collapse([mm.variation for mm in meas]) if meas else None,
        "realized_Vbar": _collapse([mm.total_variation for mm in meas]) if meas else None,
        "Vbar_exact": all(mm.total_variation_exact for mm in meas),
        "resolved": _collapse(resolved) if resolved else {},
    }
    if restarts:
        summary["restarts"] = restarts
    if write:
        atomic_write(out / SUMMARY_NAME, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def measures(cfg: RunConfig) -> list[dict]:
    """Realized switching number and variations of the schedule each seed sees."""
    rows = []
    for seed in cfg.seeds:
        mm = realized_measures(cfg.schedule(seed))
        rows.append({"seed": seed, "S": mm.switchings, "V": mm.variation,
                     "Vbar": mm.total_variation, "Vbar_exact": mm.total_variation_exact})
    return rows


# -- sweeps ---------------------------------------------------------------------

def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def expand_grid(grid_doc: dict) -> list[tuple[dict, RunConfig]]:
    """Cartesian product of ``grid`` (dotted paths into ``base``), in file order.

    Returns ``(assignment, config)`` pairs; an empty grid yields no cells.
    """
    base = grid_doc.get("base", {})
    grid = grid_doc.get("grid", {})
    if not grid:
        return []
    keys = list(grid)
    cells, problems = [], []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        doc = json.loads(json.dumps(base))
        assignment = dict(zip(keys, combo))
        for k, v in assignment.items():
            _set_path(doc, k, v)
        try:
            cells.append((assignment, RunConfig.from_dict(doc)))
        except ConfigError as exc:
            problems += [f"cell {i}: {p}" for p in exc.problems]
    if problems:
        raise ConfigError(problems)
    return cells


def _run_cell(cfg_doc: dict, cell_dir: str):
    cfg = RunConfig.from_dict(cfg_doc)
    try:
        return run(cfg, cell_dir), None
    except Exception as exc:  # reported per cell, the sweep goes on
        return None, f"{type(exc).__name__}: {exc}"


def _load_done(cell_dir: Path, config_hash: str):
    path = cell_dir / SUMMARY_NAME
    if not path.exists():
        return None
    try:
        summary = json.loads(path.read_text())
    except json.JSONDecodeError:
        return None
    return summary if summary.get("config_hash") == config_hash else None


def sweep(grid_doc: dict, jobs: int = 1, out_dir=None):
    """Run every grid cell and write ``aggregate.csv``; returns ``(rows, failures)``.

    Cells live in ``<out>/cells/<config_hash>``; a cell whose summary already
    carries its hash is loaded instead of rerun, so a crashed sweep resumes.
    """
    out = Path(out_dir if out_dir is not None else grid_doc.get("out_dir", "runs/sweep"))
    cells = expand_grid(grid_doc)
    keys = list(grid_doc.get("grid", {}))
    results: list = [None] * len(cells)
    todo = []
    for i, (_, cfg) in enumerate(cells):
        cell_dir = out / "cells" / cfg.config_hash
        done = _load_done(cell_dir, cfg.config_hash)
        if done is not None:
            results[i] = (done, None)
        else:
            todo.append((i, cfg.to_dict(), str(cell_dir)))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(i, pool.submit(_run_cell, doc, d)) for i, doc, d in todo]
            for i, fut in futures:
                results[i] = fut.result()
    else:
        for i, doc, d in todo:
            results[i] = _run_cell(doc, d)

    rows, failures = [], []
    for i, ((assignment, cfg), (summary, err)) in enumerate(zip(cells, results)):
        swept = {k: v if isinstance(v, (int, float, str)) else json.dumps(v, sort_keys=True)
                 for k, v in assignment.items()}
        if err is not None:
            failures.append({"cell": i, "config_hash": cfg.config_hash, "error": err})
        for j, seed in enumerate(cfg.seeds):
            row = {"cell": i, "config_hash": cfg.config_hash, **swept, "seed": seed}
            if err is None:
                row.update(final_regret=summary["final_regrets"][j], status="ok", error="")
            else:
                row.update(final_regret="", status="error", error=err)
            rows.append(row)
    fields = ["cell", "config_hash", *keys, "seed", "final_regret", "status", "error"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    atomic_write(out / "aggregate.csv", buf.getvalue())
    return rows, failures
