"""Tests for nudgecast.qp."""

import numpy as np
import pytest

from nudgecast.control import MpcConfig, assemble_qp, solve_scalar_dare
from nudgecast.qp import (
    STATUS_INFEASIBLE,
    STATUS_MAX_ITER,
    QpProblem,
    check_kkt,
    project_box_budget,
    solve_qp,
)


def _problem(hessian, linear, budget, horizon=1):
    hessian = np.atleast_2d(np.asarray(hessian, dtype=float))
    dim = hessian.shape[0]
    n_free = dim // horizon
    return QpProblem(
        n_free=n_free,
        horizon=horizon,
        hessian=hessian,
        linear=np.asarray(linear, dtype=float),
        constant=0.0,
        lower=np.zeros(dim),
        upper=np.ones(dim),
        budget_rows=np.kron(np.eye(horizon), np.ones((1, n_free))),
        budget=float(budget),
    )


def _random_instance(rng):
    n = int(rng.integers(1, 21))
    L = int(rng.integers(1, 11))
    cfg = MpcConfig(
        L=L,
        budget=float(rng.uniform(0.2, n)),
        q=float(rng.uniform(0.5, 2.0)),
        r=float(rng.uniform(0.5, 2.0)),
        delta=float(rng.uniform(1.0, 3.0)),
        m_equity=float(rng.choice([0.0, 10.0])),
        n_equality=float(rng.choice([0.0, 10.0])),
    )
    rho = rng.uniform(0.0, 1.0, n)
    b = -rng.uniform(0.05, 1.0, n)
    p = np.array([solve_scalar_dare(cfg.q, cfg.r, bv) for bv in b])
    return assemble_qp(rho, b, cfg, p), cfg


class TestSolveQp:
    """Test the ADMM solver and its certification."""

    def test_scalar_closed_form(self):
        """Test one variable matches clamp(-delta p b rho / (r + delta p b^2), 0, 1)."""
        for rho0, b in [(0.8, -1.0), (0.3, -0.4), (1.0, -0.05)]:
            cfg = MpcConfig(L=1, r=1.0, delta=2.0)
            p = solve_scalar_dare(1.0, 1.0, b)
            problem = assemble_qp(np.array([rho0]), np.array([b]), cfg, np.array([p]))
            solution = solve_qp(problem)
            expected = np.clip(-2.0 * p * b * rho0 / (1.0 + 2.0 * p * b * b), 0.0, 1.0)
            assert solution.optimal
            assert solution.u_star[0] == pytest.approx(expected, abs=1e-8)

    def test_upper_bound_active(self):
        """Test the box clamps an unconstrained optimum above 1."""
        solution = solve_qp(_problem([[1.0]], [-4.0], budget=5.0))
        assert solution.optimal
        assert solution.u_star[0] == pytest.approx(1.0, abs=1e-8)

    def test_symmetric_budget_split(self):
        """Test three symmetric agents with an active budget of 1 split it evenly."""
        cfg = MpcConfig(L=1, budget=1.0)
        p = solve_scalar_dare(1.0, 1.0, -1.0)
        problem = assemble_qp(np.full(3, 0.9), np.full(3, -1.0), cfg, np.full(3, p))
        solution = solve_qp(problem)
        assert solution.optimal
        assert np.allclose(solution.u_star, 1.0 / 3.0, atol=1e-6)
        residuals = check_kkt(problem, solution.u_star, 1e-6)
        assert residuals.budget_multipliers[0] > 0.0

    def test_zero_reluctance(self):
        """Test u = 0 is optimal when every reluctance is zero."""
        cfg = MpcConfig(L=3, budget=2.0)
        p = solve_scalar_dare(1.0, 1.0, -0.5)
        problem = assemble_qp(np.zeros(4), np.full(4, -0.5), cfg, np.full(4, p))
        solution = solve_qp(problem)
        assert solution.optimal
        assert np.allclose(solution.u_star, 0.0, atol=1e-9)
        assert np.all(problem.gradient(np.zeros(problem.dim)) >= 0.0)

    @pytest.mark.slow
    def test_random_instances_certified(self):
        """Test 50 random instances pass the independent KKT check."""
        rng = np.random.default_rng(2024)
        for _ in range(50):
            problem, cfg = _random_instance(rng)
            solution = solve_qp(problem, tol=1e-6)
            assert solution.optimal
            assert max(
                solution.kkt_stationarity, solution.kkt_primal, solution.kkt_complementarity
            ) <= 1e-6
            assert check_kkt(problem, solution.u_star, 1e-6).within(1e-6)
            assert np.all(problem.budget_rows @ solution.u_star <= cfg.budget + 1e-8)
            assert np.all((solution.u_star >= 0.0) & (solution.u_star <= 1.0))

    def test_warm_start_same_answer(self):
        """Test a warm start does not change the certified optimum."""
        problem, _ = _random_instance(np.random.default_rng(7))
        cold = solve_qp(problem)
        warm = solve_qp(problem, warm_start=np.full(problem.dim, 0.5))
        assert cold.optimal and warm.optimal
        assert np.allclose(cold.u_star, warm.u_star, atol=1e-5)

    def test_deterministic(self):
        """Test repeated solves give identical output."""
        problem, _ = _random_instance(np.random.default_rng(11))
        a = solve_qp(problem)
        b = solve_qp(problem)
        assert np.array_equal(a.u_star, b.u_star)
        assert a.iterations == b.iterations

    def test_max_iter_returns_feasible_iterate(self):
        """Test hitting the cap reports max_iter with a feasible point."""
        problem, cfg = _random_instance(np.random.default_rng(3))
        solution = solve_qp(problem, tol=1e-14, max_iter=5)
        assert solution.status == STATUS_MAX_ITER
        assert np.all((solution.u_star >= 0.0) & (solution.u_star <= 1.0))
        assert np.all(problem.budget_rows @ solution.u_star <= cfg.budget + 1e-8)

    def test_infeasible(self):
        """Test an empty box is reported as infeasible."""
        problem = QpProblem(
            n_free=1,
            horizon=1,
            hessian=np.eye(1),
            linear=np.zeros(1),
            constant=0.0,
            lower=np.ones(1),
            upper=np.zeros(1),
            budget_rows=np.ones((1, 1)),
            budget=1.0,
        )
        assert solve_qp(problem).status == STATUS_INFEASIBLE


class TestCheckKkt:
    """Test the independent KKT certificate."""

    def test_rejects_suboptimal_point(self):
        """Test a feasible but suboptimal point fails certification."""
        problem = _problem([[1.0]], [-1.0], budget=5.0)
        assert check_kkt(problem, np.array([0.5]), 1e-6).within(1e-6)
        assert not check_kkt(problem, np.array([0.2]), 1e-6).within(1e-6)

    def test_rejects_infeasible_point(self):
        """Test budget violations show up as primal residual."""
        problem = _problem(np.eye(2), [-4.0, -4.0], budget=1.0)
        residuals = check_kkt(problem, np.array([1.0, 1.0]), 1e-6)
        assert residuals.primal == pytest.approx(1.0)

    def test_budget_multiplier_recovered(self):
        """Test the multiplier of an active budget row is recovered exactly."""
        problem = _problem(np.eye(2), [-2.0, -2.0], budget=1.0)
        residuals = check_kkt(problem, np.array([0.5, 0.5]), 1e-9)
        assert residuals.within(1e-9)
        assert residuals.budget_multipliers[0] == pytest.approx(1.0, abs=1e-12)


class TestProjectBoxBudget:
    """Test the Euclidean projection onto box and budget."""

    def test_inside(self):
        """Test points already feasible are only clipped."""
        assert np.array_equal(project_box_budget(np.array([0.2, 1.4, -0.3]), 5.0), [0.2, 1.0, 0.0])

    def test_budget_active(self):
        """Test an equal shift restores the budget."""
        projected = project_box_budget(np.array([0.9, 0.9, 0.9]), 1.5)
        assert np.allclose(projected, 0.5, atol=1e-12)

    def test_mixed(self):
        """Test sum and box hold after projection."""
        v = np.random.default_rng(0).uniform(-0.5, 1.5, 50)
        projected = project_box_budget(v, 10.0)
        assert projected.sum() <= 10.0 + 1e-9
        assert np.all((projected >= 0.0) & (projected <= 1.0))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
