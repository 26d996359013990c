"""Log-barrier FTRL over the nu-padded hull of an action space.

Solves ``max_q <q, mu_hat> + C*nu*sum(log q_i)`` over ``q`` in ``Conv(S)``
with every ``q_i >= nu``, and returns the optimal marginals together with a
sampleable distribution over actions whose marginals equal them.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, linprog

from .oracles import TOP_K, ActionSpace, signed_linear_oracle

log = logging.getLogger(__name__)

BARRIER_C = 100.0
KKT_TOL = 1e-9
GUARANTEE_TOL = 1e-6


class FTRLInfeasible(ValueError):
    pass


class FTRLNumericalError(RuntimeError):
    pass


class DecompositionError(ValueError):
    pass


@dataclass
class ActionDistribution:
    """Finite distribution over actions; ``marginals`` is ``E[1_S]``."""

    actions: list
    weights: np.ndarray
    m: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self._cum = np.cumsum(self.weights)

    @property
    def marginals(self) -> np.ndarray:
        q = np.zeros(self.m)
        for a, w in zip(self.actions, self.weights):
            q[list(a)] += w
        return q

    def sample(self, rng: np.random.Generator):
        j = int(np.searchsorted(self._cum, rng.random() * self._cum[-1], side="right"))
        return self.actions[min(j, len(self.actions) - 1)]


@dataclass
class FTRLSolution:
    q: np.ndarray
    dist: ActionDistribution
    nu: float
    C: float
    kkt_residual: float
    floor_active: bool


# --- marginal decomposition ----------------------------------------------

def _peel_top_k(q: np.ndarray, k: int, tol: float = 1e-12) -> ActionDistribution:
    """Greedy vertex peeling for the capped simplex ``{0<=q<=1, sum q = k}``."""
    m = len(q)
    r = q.astype(float).copy()
    theta = 1.0
    actions, weights = [], []
    while theta > tol:
        if len(actions) > 2 * m + 2:
            raise DecompositionError("greedy peeling did not terminate; marginals outside the hull?")
        order = np.argsort(-r, kind="stable")
        S, rest = order[:k], order[k:]
        w = r[S].min()
        if len(rest):
            w = min(w, theta - r[rest].max())
        w = min(w, theta)
        if w <= tol:
            raise DecompositionError("greedy peeling stalled; marginals outside the hull?")
        actions.append(tuple(sorted(int(i) for i in S)))
        weights.append(w)
        r[S] -= w
        theta -= w
    weights = np.array(weights)
    weights /= weights.sum()
    return ActionDistribution(actions, weights, m)


def _lp_decompose(q: np.ndarray, space: ActionSpace) -> ActionDistribution:
    A = space.incidence()
    n = A.shape[1]
    A_eq = np.vstack([A, np.ones((1, n))])
    b_eq = np.concatenate([q, [1.0]])
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise DecompositionError(f"marginals not in the hull of the action space ({res.message})")
    x = np.maximum(res.x, 0.0)
    supp = np.flatnonzero(x > 1e-12)
    # polish on the support; keep the LP answer if that breaks nonnegativity
    sol, *_ = np.linalg.lstsq(A_eq[:, supp], b_eq, rcond=None)
    if np.all(sol >= 0):
        x = np.zeros(n)
        x[supp] = sol
    acts = [space.actions[j] for j in supp]
    return ActionDistribution(acts, x[supp] / x[supp].sum(), space.m)


def decompose_marginals(q, space: ActionSpace, tol: float = 1e-9) -> ActionDistribution:
    """Sparse distribution over ``space`` whose action-indicator mean is ``q``."""
    q = np.asarray(q, dtype=float)
    if space.kind == TOP_K:
        if np.any(q < -tol) or np.any(q > 1 + tol) or abs(q.sum() - space.K) > tol * space.m:
            raise DecompositionError("marginals outside the top-k hull")
        dist = _peel_top_k(np.clip(q, 0.0, 1.0), space.K)
    else:
        dist = _lp_decompose(q, space)
    err = np.abs(dist.marginals - q).max()
    if err > tol:
        raise DecompositionError(f"reconstruction error {err:.3g} exceeds {tol}")
    return dist


# --- solvers ---------------------------------------------------------------

def _solve_top_k(mu: np.ndarray, nu: float, k: int, C: float) -> np.ndarray:
    m = len(mu)
    if k == m:
        return np.ones(m)
    c = C * nu

    def q_of(lam):
        gap = lam - mu
        q = np.where(gap > c, c / np.where(gap > c, gap, 1.0), 1.0)
        return np.clip(q, nu, 1.0)

    lo = mu.min() + c - 1.0  # every coordinate at the cap
    hi = mu.max() + C + 1.0  # every coordinate at the floor
    lam = brentq(lambda x: q_of(x).sum() - k, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                 maxiter=500)
    return q_of(lam)


def _max_min_coverage(A: np.ndarray) -> tuple[float, np.ndarray]:
    """LP: the distribution over columns maximizing the smallest marginal."""
    m, n = A.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A, np.ones((m, 1))])
    A_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    if res.status != 0:
        raise FTRLInfeasible(res.message)
    return float(res.x[-1]), np.maximum(res.x[:-1], 0.0)


def _solve_enumerated(mu: np.ndarray, nu: float, A: np.ndarray, C: float,
                      t_final: float = 1e-13, max_newton: int = 400):
    """Barrier method in distribution space.

    Minimizes ``-<AQ, mu> - C nu sum log (AQ)_i`` over the simplex with
    ``AQ >= nu``; ``Q >= 0`` and ``AQ >= nu`` are handled by a log barrier of
    weight ``t`` driven to ``t_final``. Newton steps are taken in the scaled
    variable ``Q = diag(Q) y`` to keep the tiny atoms well conditioned.
    """
    m, n = A.shape
    cnu = C * nu
    Q = np.full(n, 1.0 / n)
    if (A @ Q).min() <= nu * (1 + 1e-9):
        best, Qlp = _max_min_coverage(A)
        if best <= nu * (1 + 1e-9):
            raise FTRLInfeasible(f"no distribution gives every arm marginal > nu={nu:g} "
                                 f"(best {best:g})")
        eps = min(0.5, 0.5 * (best - nu) / max(best, 1e-300))
        Q = (1 - eps) * Qlp + eps / n

    def value(Q, t):
        q = A @ Q
        return -(q @ mu) - cnu * np.log(q).sum() - t * (np.log(Q).sum() + np.log(q - nu).sum())

    t = 1.0
    steps = 0
    while True:
        final = t <= t_final
        stall, prev = 0, np.inf
        for _ in range(100):
            q = A @ Q
            g = -(A.T @ mu) - cnu * (A.T @ (1 / q)) - t / Q - t * (A.T @ (1 / (q - nu)))
            dq = cnu / q**2 + t / (q - nu) ** 2
            AD = A * Q
            H = AD.T @ (dq[:, None] * AD) + t * np.eye(n)
            gs = g * Q
            # KKT system for the scaled step: [H d; d^T 0]
            K = np.zeros((n + 1, n + 1))
            K[:n, :n] = H
            K[:n, n] = Q
            K[n, :n] = Q
            try:
                sol = np.linalg.solve(K, np.concatenate([-gs, [0.0]]))
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(K, np.concatenate([-gs, [0.0]]), rcond=None)[0]
            dx = Q * sol[:n]
            # Newton decrement as a quadratic form: no cancellation near the optimum
            dec = float(sol[:n] @ (H @ sol[:n]))
            steps += 1
            if steps > max_newton or dec <= (1e-22 if final else 1e-9):
                break
            # rounding floor: the decrement stops shrinking
            stall = stall + 1 if dec < 1e-12 and dec > 0.5 * prev else 0
            prev = dec
            if stall >= 3:
                break
            s = 1.0
            neg = dx < 0
            if neg.any():
                s = min(1.0, 0.99 * np.min(-Q[neg] / dx[neg]))
            dqv = A @ dx
            negq = dqv < 0
            if negq.any():
                s = min(s, 0.99 * np.min(-(q - nu)[negq] / dqv[negq]))
            if dec > 1e-10:
                # damped phase; near the optimum pure Newton steps are taken since
                # objective differences drop below rounding
                f0 = value(Q, t)
                while s > 1e-16 and value(Q + s * dx, t) > f0 - 0.25 * s * dec:
                    s *= 0.5
            Q = Q + s * dx
            Q = np.maximum(Q, 1e-300)
            Q /= Q.sum()
        if t * (n + m) <= t_final * (n + m) or steps > max_newton:
            break
        t = max(t * 0.1, t_final)
    if steps > max_newton:
        raise FTRLNumericalError(f"barrier method hit the {max_newton}-step cap (t={t:g})")
    return Q, t * (n + m)


def _frank_wolfe_gap(q: np.ndarray, mu: np.ndarray, nu: float, C: float, space: ActionSpace) -> float:
    """First-order optimality gap of ``q`` against the best vertex of ``Conv(S)``."""
    w = mu + C * nu / q
    best = signed_linear_oracle(w, space)
    return float(w[list(best)].sum() - q @ w)


def guarantee_margins(sol: FTRLSolution, mu_hat, space: ActionSpace) -> tuple[float, float]:
    """Slack in the two FTRL guarantees (nonnegative means they hold).

    Returns ``(C m nu - E_Q[Reg(S)], min_S [m + Reg(S)/(C nu) - sum_{i in S} 1/q_i])``.
    The inner minimum is one signed linear maximization.
    """
    mu = np.asarray(mu_hat, dtype=float)
    q, nu, C = sol.q, sol.nu, sol.C
    best_val = mu[list(signed_linear_oracle(mu, space))].sum()
    exp_reg = best_val - float(sum(w * mu[list(a)].sum() for a, w in zip(sol.dist.actions, sol.dist.weights)))
    regret_slack = C * space.m * nu - exp_reg
    # Var(S) - Reg(S)/(C nu) is linear in 1_S up to the constant best_val/(C nu)
    lin = 1.0 / q + mu / (C * nu)
    S = signed_linear_oracle(lin, space)
    worst = lin[list(S)].sum() - best_val / (C * nu)
    return float(regret_slack), float(space.m - worst)


def ftrl_solve(mu_hat, nu: float, space: ActionSpace, C: float = BARRIER_C,
               check: bool = True) -> FTRLSolution:
    mu = np.asarray(mu_hat, dtype=float)
    if mu.shape != (space.m,):
        raise ValueError("mu_hat has the wrong length")
    if not nu > 0:
        raise ValueError("nu must be positive")
    if space.kind == TOP_K:
        if space.m * nu > space.K * (1 + 1e-12):
            raise FTRLInfeasible(f"nu={nu:g} infeasible for top-{space.K} over {space.m} arms")
        q = _solve_top_k(mu, nu, space.K, C)
        dist = decompose_marginals(q, space)
        q = dist.marginals
        floor_active = bool(np.any(q <= nu * (1 + 1e-9)))
        resid = abs(q.sum() - space.K) if floor_active else max(0.0, _frank_wolfe_gap(q, mu, nu, C, space))
    else:
        A = space.incidence()
        # dividing the objective by its scale keeps the minimizer and lets the
        # Newton stopping rules work at unit scale
        scale = max(1.0, float(np.abs(mu).max()), C * nu)
        Q, dual_gap = _solve_enumerated(mu / scale, nu, A, C / scale)
        dual_gap *= scale
        keep = Q > 1e-15
        Qk = Q[keep] / Q[keep].sum()
        dist = ActionDistribution([space.actions[j] for j in np.flatnonzero(keep)], Qk, space.m)
        q = dist.marginals
        floor_active = bool(np.any(q <= nu * (1 + 1e-6)))
        resid = dual_gap if floor_active else max(0.0, _frank_wolfe_gap(q, mu, nu, C, space))
    if resid > KKT_TOL:
        raise FTRLNumericalError(f"KKT residual {resid:.3g} above {KKT_TOL}")
    sol = FTRLSolution(q=q, dist=dist, nu=nu, C=C, kkt_residual=resid, floor_active=floor_active)
    if check:
        r_slack, v_slack = guarantee_margins(sol, mu, space)
        if min(r_slack, v_slack) < -GUARANTEE_TOL:
            msg = f"FTRL guarantees violated: slacks {r_slack:.3g}, {v_slack:.3g}"
            if floor_active:
                # the nu-floor multipliers enter the KKT identity; the bounds need not hold there
                warnings.warn(msg + " (nu floor active)", RuntimeWarning)
            else:
                raise FTRLNumericalError(msg)
    return sol
