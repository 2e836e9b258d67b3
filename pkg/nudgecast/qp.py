"""Box- and budget-constrained convex QP: problem type, ADMM solver, KKT certificate.

Problems have the form

    minimize    z'Hz + g'z + c
    subject to  lower <= z <= upper
                budget_rows @ z <= budget   (one row per prediction step)

The solver is an OSQP-style ADMM iteration on the stacked constraint matrix
[I; budget_rows] with a factorisation cached per penalty value, followed by solution
polishing on the guessed active set. `check_kkt` certifies a point independently of the
solver: it recovers its own multipliers from the gradient.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg, optimize

logger = logging.getLogger(__name__)

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE = "infeasible"

# ADMM settings
SIGMA = 1e-6
ALPHA = 1.6
RHO_INIT = 0.1
RHO_MIN = 1e-6
RHO_MAX = 1e6
ADAPT_EVERY = 50
CHECK_EVERY = 10
POLISH_EPS = 1e-4


@dataclass(frozen=True)
class QpProblem:
    """Condensed QP over `n_free * horizon` policies, ordered step-major."""

    n_free: int
    horizon: int
    hessian: np.ndarray
    linear: np.ndarray
    constant: float
    lower: np.ndarray
    upper: np.ndarray
    budget_rows: np.ndarray
    budget: float

    @property
    def dim(self) -> int:
        return self.n_free * self.horizon

    def objective(self, z: np.ndarray) -> float:
        return float(z @ self.hessian @ z + self.linear @ z + self.constant)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return 2.0 * self.hessian @ z + self.linear


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    primal: float
    complementarity: float
    budget_multipliers: np.ndarray = field(repr=False)

    def within(self, tol: float) -> bool:
        return max(self.stationarity, self.primal, self.complementarity) <= tol


@dataclass(frozen=True)
class QpSolution:
    u_star: np.ndarray
    objective: float
    kkt_stationarity: float
    kkt_primal: float
    kkt_complementarity: float
    iterations: int
    status: str

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


def check_kkt(problem: QpProblem, z: np.ndarray, tol: float) -> KktResiduals:
    """Certify `z` against the KKT conditions of `problem`.

    Variables within `tol` of a bound are treated as possibly active there; each budget
    row within `tol` of its bound gets the nonnegative multiplier minimising the
    stationarity residual of its step. Box multipliers absorb only gradient components
    of the admissible sign.

    Args:
        problem: QP to certify against.
        z: Candidate point.
        tol: Activity tolerance.

    Returns:
        Infinity-norm residuals and the recovered budget multipliers.
    """
    grad = problem.gradient(z)
    n, horizon = problem.n_free, problem.horizon
    at_lower = z <= problem.lower + tol
    at_upper = z >= problem.upper - tol

    box_violation = np.max(np.maximum(problem.lower - z, 0.0), initial=0.0)
    box_violation = max(box_violation, np.max(np.maximum(z - problem.upper, 0.0), initial=0.0))
    row_sums = problem.budget_rows @ z
    budget_violation = np.max(np.maximum(row_sums - problem.budget, 0.0), initial=0.0)

    multipliers = np.zeros(horizon)
    stationarity = 0.0
    complementarity = 0.0
    for k in range(horizon):
        idx = slice(k * n, (k + 1) * n)
        g_k, lo_k, up_k, z_k = grad[idx], at_lower[idx], at_upper[idx], z[idx]
        slack = problem.budget - row_sums[k]
        lam = 0.0
        if slack <= tol:
            lam = _best_budget_multiplier(g_k, lo_k, up_k)
        multipliers[k] = lam

        shifted = g_k + lam
        residual = _box_residual(shifted, lo_k, up_k)
        stationarity = max(stationarity, np.max(np.abs(residual), initial=0.0))

        mu_lower = np.where(lo_k, np.maximum(shifted, 0.0), 0.0)
        mu_upper = np.where(up_k, np.maximum(-shifted, 0.0), 0.0)
        complementarity = max(
            complementarity,
            lam * abs(slack),
            np.max(mu_lower * np.abs(z_k - problem.lower[idx]), initial=0.0),
            np.max(mu_upper * np.abs(problem.upper[idx] - z_k), initial=0.0),
        )

    return KktResiduals(
        stationarity=float(stationarity),
        primal=float(max(box_violation, budget_violation)),
        complementarity=float(complementarity),
        budget_multipliers=multipliers,
    )


def project_box_budget(
    v: np.ndarray, budget: float, lower: float = 0.0, upper: float = 1.0
) -> np.ndarray:
    """Euclidean projection of `v` onto {lower <= u <= upper, sum(u) <= budget}."""
    clipped = np.clip(v, lower, upper)
    if clipped.sum() <= budget:
        return clipped

    def excess(tau: float) -> float:
        return float(np.clip(v - tau, lower, upper).sum() - budget)

    hi = float(np.max(v) - lower)
    tau = optimize.brentq(excess, 0.0, hi, xtol=1e-15)
    return np.clip(v - tau, lower, upper)


def solve_qp(
    problem: QpProblem,
    tol: float = 1e-6,
    max_iter: int = 20000,
    warm_start: Optional[np.ndarray] = None,
) -> QpSolution:
    """Solve `problem` by ADMM with solution polishing.

    Args:
        problem: Convex QP.
        tol: KKT tolerance for the optimal status.
        max_iter: ADMM iteration cap.
        warm_start: Optional initial primal point (e.g. shifted previous MPC solution).

    Returns:
        QpSolution; `status` is optimal only if `check_kkt` passes at `tol`.
    """
    if np.any(problem.lower > problem.upper) or np.any(
        problem.budget_rows @ problem.lower > problem.budget
    ):
        return _infeasible(problem)

    n_var = problem.dim
    P = 2.0 * problem.hessian
    q = problem.linear
    A = np.vstack([np.eye(n_var), problem.budget_rows])
    l_bound = np.concatenate([problem.lower, np.full(problem.horizon, -np.inf)])
    u_bound = np.concatenate([problem.upper, np.full(problem.horizon, problem.budget)])

    x = np.zeros(n_var)
    if warm_start is not None:
        x = np.clip(warm_start, problem.lower, problem.upper)
    z = np.clip(A @ x, l_bound, u_bound)
    y = np.zeros(A.shape[0])

    rho = RHO_INIT
    factor = _factorize(P, A, rho)
    polish_eps = max(POLISH_EPS, tol)
    best: Optional[Tuple[np.ndarray, KktResiduals]] = None

    for it in range(1, max_iter + 1):
        rhs = SIGMA * x - q + A.T @ (rho * z - y)
        x_tilde = linalg.cho_solve(factor, rhs)
        z_tilde = A @ x_tilde
        x = ALPHA * x_tilde + (1.0 - ALPHA) * x
        z_relaxed = ALPHA * z_tilde + (1.0 - ALPHA) * z
        z_new = np.clip(z_relaxed + y / rho, l_bound, u_bound)
        y = y + rho * (z_relaxed - z_new)
        z = z_new

        if it % CHECK_EVERY != 0 and it != max_iter:
            continue

        r_prim = np.linalg.norm(A @ x - z, np.inf)
        r_dual = np.linalg.norm(P @ x + q + A.T @ y, np.inf)

        if max(r_prim, r_dual) <= polish_eps:
            candidate = _polish(problem, P, q, x, z, y)
            for point in (candidate, np.clip(x, problem.lower, problem.upper)):
                if point is None:
                    continue
                residuals = check_kkt(problem, point, tol)
                if residuals.within(tol):
                    logger.debug(f"QP dim {n_var} solved in {it} iterations")
                    return _solution(problem, point, residuals, it, STATUS_OPTIMAL)
                best = _better(best, point, residuals)
            # wrong active-set guess: wait for a tighter ADMM iterate before polishing again
            polish_eps = max(polish_eps * 0.1, 1e-12)

        if it % ADAPT_EVERY == 0:
            new_rho = _adapted_rho(rho, A, P, q, x, z, y, r_prim, r_dual)
            if new_rho != rho:
                rho = new_rho
                factor = _factorize(P, A, rho)

    # feasible points are fixed by the projection
    point = project_steps(problem, x if best is None else best[0])
    logger.warning(f"QP dim {n_var} hit max_iter={max_iter}; returning best iterate")
    return _solution(problem, point, check_kkt(problem, point, tol), max_iter, STATUS_MAX_ITER)


def project_steps(problem: QpProblem, z: np.ndarray) -> np.ndarray:
    """Project each step block of `z` onto the box and that step's budget."""
    n = problem.n_free
    out = np.empty_like(z)
    for k in range(problem.horizon):
        idx = slice(k * n, (k + 1) * n)
        out[idx] = project_box_budget(z[idx], problem.budget)
    return out


def _factorize(P: np.ndarray, A: np.ndarray, rho: float):
    return linalg.cho_factor(P + SIGMA * np.eye(P.shape[0]) + rho * (A.T @ A))


def _adapted_rho(rho, A, P, q, x, z, y, r_prim, r_dual) -> float:
    """OSQP-style penalty update balancing scaled primal and dual residuals."""
    prim_scale = max(np.linalg.norm(A @ x, np.inf), np.linalg.norm(z, np.inf), 1e-12)
    dual_scale = max(
        np.linalg.norm(P @ x, np.inf),
        np.linalg.norm(A.T @ y, np.inf),
        np.linalg.norm(q, np.inf),
        1e-12,
    )
    ratio = (r_prim / prim_scale) / max(r_dual / dual_scale, 1e-12)
    new_rho = float(np.clip(rho * np.sqrt(ratio), RHO_MIN, RHO_MAX))
    if new_rho > 5.0 * rho or new_rho < 0.2 * rho:
        return new_rho
    return rho


def _polish(problem, P, q, x, z, y) -> Optional[np.ndarray]:
    """Solve the equality-constrained QP on the active set guessed from (z, y)."""
    n_var = problem.dim
    box_y, box_z = y[:n_var], z[:n_var]
    bud_y, bud_z = y[n_var:], z[n_var:]

    lower_active = box_z - problem.lower < -box_y
    upper_active = problem.upper - box_z < box_y
    budget_active = problem.budget - bud_z < bud_y

    rows = []
    rhs = []
    for i in np.flatnonzero(lower_active):
        e = np.zeros(n_var)
        e[i] = 1.0
        rows.append(e)
        rhs.append(problem.lower[i])
    for i in np.flatnonzero(upper_active & ~lower_active):
        e = np.zeros(n_var)
        e[i] = 1.0
        rows.append(e)
        rhs.append(problem.upper[i])
    fixed = lower_active | upper_active
    for k in np.flatnonzero(budget_active):
        in_step = problem.budget_rows[k] > 0
        if np.all(fixed[in_step]):
            continue  # row already pinned by its box constraints
        rows.append(problem.budget_rows[k])
        rhs.append(problem.budget)

    n_act = len(rows)
    kkt = np.zeros((n_var + n_act, n_var + n_act))
    kkt[:n_var, :n_var] = P
    b = np.concatenate([-q, np.asarray(rhs, dtype=float)])
    if n_act:
        A_act = np.vstack(rows)
        kkt[:n_var, n_var:] = A_act.T
        kkt[n_var:, :n_var] = A_act
    try:
        sol = linalg.solve(kkt, b, assume_a="sym")
    except linalg.LinAlgError:
        try:
            sol = linalg.lstsq(kkt, b)[0]
        except (linalg.LinAlgError, ValueError):
            return None
    if not np.all(np.isfinite(sol)):
        return None
    return np.clip(sol[:n_var], problem.lower, problem.upper)


def _best_budget_multiplier(g: np.ndarray, at_lower: np.ndarray, at_upper: np.ndarray) -> float:
    """Exact minimiser over lam >= 0 of the squared box residual of g + lam.

    The objective is a convex piecewise quadratic with breakpoints at -g_i of the bound
    components; on each piece the contributing set is fixed and the minimiser is a mean.
    """
    bound = at_lower | at_upper
    knots = np.unique(np.concatenate([[0.0], -g[bound]]))
    knots = knots[knots >= 0.0]
    right = np.append(knots[1:], np.inf)
    probe = np.where(np.isinf(right), knots + 1.0, 0.5 * (knots + right))

    shifted = g[None, :] + probe[:, None]
    contributing = np.where(at_lower, shifted < 0.0, np.where(at_upper, shifted > 0.0, True))
    count = contributing.sum(axis=1)
    total = np.where(contributing, g[None, :], 0.0).sum(axis=1)
    stationary = np.where(count > 0, -total / np.maximum(count, 1), knots)
    stationary = np.clip(stationary, knots, right)

    candidates = np.concatenate([knots, stationary])
    residuals = [_box_residual(g + lam, at_lower, at_upper) for lam in candidates]
    scores = np.array([float(r @ r) for r in residuals])
    return float(candidates[int(np.argmin(scores))])


def _box_residual(shifted: np.ndarray, at_lower: np.ndarray, at_upper: np.ndarray) -> np.ndarray:
    residual = shifted.copy()
    residual = np.where(at_lower, np.minimum(residual, 0.0), residual)
    residual = np.where(at_upper & ~at_lower, np.maximum(shifted, 0.0), residual)
    return residual


def _better(best, point, residuals):
    score = max(residuals.stationarity, residuals.primal, residuals.complementarity)
    if best is None:
        return point, residuals
    old = best[1]
    if score < max(old.stationarity, old.primal, old.complementarity):
        return point, residuals
    return best


def _solution(problem, point, residuals, iterations, status) -> QpSolution:
    return QpSolution(
        u_star=point,
        objective=problem.objective(point),
        kkt_stationarity=residuals.stationarity,
        kkt_primal=residuals.primal,
        kkt_complementarity=residuals.complementarity,
        iterations=iterations,
        status=status,
    )


def _infeasible(problem: QpProblem) -> QpSolution:
    logger.error(f"QP dim {problem.dim} is structurally infeasible")
    zeros = np.zeros(problem.dim)
    return QpSolution(
        u_star=zeros,
        objective=problem.objective(zeros),
        kkt_stationarity=np.inf,
        kkt_primal=np.inf,
        kkt_complementarity=np.inf,
        iterations=0,
        status=STATUS_INFEASIBLE,
    )
