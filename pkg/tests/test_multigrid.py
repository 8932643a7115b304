import numpy as np
import pytest

from jfnkmg.jacobian import JacobianOperator
from jfnkmg.krylov import CgStatus, cg_solve
from jfnkmg.mesh import build_unit_square_hierarchy
from jfnkmg.multigrid import MgConfig, MultigridPreconditioner, ShiftingError
from jfnkmg.problems import BratuProblem, QuadraticProblem, make_hierarchy, make_problems
from jfnkmg.transfer import TransferSet


def _laplace_stack(n0=4, n_levels=3, boundary=None):
    # Bratu with lambda = 0 is the quadratic Dirichlet energy, so the
    # finite-difference Jacobian is the P1 stiffness matrix
    h = build_unit_square_hierarchy(n0, n_levels, boundary=boundary)
    return [BratuProblem(m, lam=0.0) for m in h.levels], TransferSet(h)


def test_single_level_setup_and_cycle():
    A = np.diag([1.0, 2.0, 4.0])
    p = QuadraticProblem(A)
    mg = MultigridPreconditioner([p], None, MgConfig(coarse_solver="cg"))
    p.reset_count()
    mg.setup(np.zeros(3))
    assert p.gradient_count == 1 and len(mg.levels) == 1
    b = np.array([1.0, 1.0, 1.0])
    assert np.allclose(mg(b), np.linalg.solve(A, b), rtol=1e-6)
    assert mg.n_coarse_solves == 1


def test_cycle_requires_setup():
    problems, t = _laplace_stack()
    with pytest.raises(RuntimeError):
        MultigridPreconditioner(problems, t)(np.zeros(problems[-1].n_dofs))


def test_zero_rhs_gives_zero():
    problems, t = _laplace_stack()
    mg = MultigridPreconditioner(problems, t).setup(problems[-1].initial_guess())
    assert not np.any(mg(np.zeros(problems[-1].n_dofs)))


def test_two_level_residual_reduction():
    problems, t = _laplace_stack(n0=4, n_levels=2)
    fine = problems[-1]
    x = fine.initial_guess()
    mg = MultigridPreconditioner(problems, t).setup(x)
    op = JacobianOperator(fine, x)
    b = fine.zero_constrained(np.random.default_rng(0).standard_normal(fine.n_dofs))
    s = mg(b)
    assert np.linalg.norm(b - op.apply(s)) / np.linalg.norm(b) < 0.5
    out = cg_solve(op, b, precond=mg, forcing=1e-8)
    assert out.status is CgStatus.CONVERGED and out.iterations <= 10


def test_constant_iterate_projects_to_constants():
    def free(coords):
        return np.zeros(len(coords), dtype=bool), np.zeros((len(coords), 1))

    problems, t = _laplace_stack(n0=2, n_levels=3, boundary=free)
    mg = MultigridPreconditioner(problems, t)
    # only interior nodes have full stencil mass; check those
    mg.setup(np.full(problems[-1].n_dofs, 0.7))
    for lvl, st in zip(t.hierarchy.levels, mg.levels):
        interior = ~lvl.boundary_mask()
        assert np.allclose(st.x[interior], 0.7, rtol=0, atol=1e-15)


def test_setup_gradient_counts_and_warm_start():
    h = make_hierarchy("bratu", 3)
    problems = make_problems("bratu", h)
    mg = MultigridPreconditioner(problems, TransferSet(h))
    x = problems[-1].initial_guess()
    for p in problems:
        p.reset_count()
    mg.setup(x)
    first = [st.power_iterations for st in mg.levels[1:]]
    assert problems[0].gradient_count == 1
    # per fine level: cached F plus one product per power iteration
    for l in (1, 2):
        assert problems[l].gradient_count == 1 + first[l - 1]
    x2 = x + 0.01 * problems[-1].zero_constrained(np.ones_like(x))
    mg.setup(x2)
    second = [st.power_iterations for st in mg.levels[1:]]
    assert all(b <= a for a, b in zip(first, second))


def test_cycle_cost_per_level():
    problems, t = _laplace_stack(n0=3, n_levels=3)
    cfg = MgConfig(nu_pre=3, nu_post=3, coarse_solver="cg")
    mg = MultigridPreconditioner(problems, t, cfg).setup(problems[-1].initial_guess())
    for p in problems:
        p.reset_count()
    mg(problems[-1].zero_constrained(np.ones(problems[-1].n_dofs)))
    # the first pre-smoothing residual is free (zero start), the transfer
    # residual costs one product: nu_pre + nu_post per level above the coarsest
    assert [p.gradient_count for p in problems[1:]] == [6, 6]


def test_spd_coarse_no_shift_matches_cg_qn():
    A = np.diag([1.0, 2.0, 5.0, 7.0])
    b = np.ones(4)
    results = {}
    for variant in ("shifted", "cg-qn"):
        mg = MultigridPreconditioner([QuadraticProblem(A)], None, MgConfig(coarse_solver=variant))
        mg.setup(np.zeros(4))
        results[variant] = mg(b)
        assert not mg.shift_events
    assert np.allclose(results["shifted"], results["cg-qn"], rtol=0, atol=1e-14)
    assert np.allclose(results["shifted"], b / np.diag(A), rtol=1e-6)


def test_shift_on_indefinite_diagonal():
    A = np.diag([-1.0, 2.0])
    b = np.array([1.0, 1.0])
    mg = MultigridPreconditioner([QuadraticProblem(A)], None, MgConfig(coarse_solver="shifted"))
    mg.setup(np.zeros(2))
    s = mg(b)
    assert len(mg.shift_events) == 1
    ev = mg.shift_events[0]
    assert -1.0 - 1e-6 <= ev.lambda_c < 0.0
    # p0 = b exposes curvature (b^T A b)/(b^T b) = 0.5 * (-1 + 2) > 0, so the
    # first step is taken; the exposing direction is the second one
    assert ev.shift == pytest.approx(-5.0 * ev.lambda_c, rel=1e-12)
    shifted = A + ev.shift * np.eye(2)
    assert np.all(np.diag(shifted) > 0)
    assert np.allclose(s, np.linalg.solve(shifted, b), rtol=1e-5)


def test_shifting_gives_up():
    mg = MultigridPreconditioner(
        [QuadraticProblem(np.diag([-1.0, 2.0]))], None, MgConfig(coarse_solver="shifted", max_shifts=0)
    )
    mg.setup(np.zeros(2))
    with pytest.raises(ShiftingError):
        mg(np.ones(2))


def test_plain_cg_coarse_does_not_shift():
    mg = MultigridPreconditioner([QuadraticProblem(np.diag([-1.0, 2.0]))], None, MgConfig(coarse_solver="cg"))
    mg.setup(np.zeros(2))
    mg(np.ones(2))
    assert not mg.shift_events


@pytest.mark.parametrize("kwargs", [dict(coarse_solver="gmres"), dict(nu_pre=3, nu_post=4), dict(gamma=0.5)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        MgConfig(**kwargs)
