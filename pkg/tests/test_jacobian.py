import numpy as np
import pytest

from jfnkmg.jacobian import SQRT_EPS, JacobianOperator, MatrixOperator, fd_epsilon, rayleigh_quotient
from jfnkmg.problems import QuadraticProblem, make_hierarchy, make_problems


def _spd(n, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(0.5, 10.0, n)) @ Q.T


def test_fd_epsilon_examples():
    n = 7
    u = np.zeros(n)
    u[0] = 1.0
    assert fd_epsilon(np.zeros(n), u) == pytest.approx(SQRT_EPS, rel=1e-15)
    assert SQRT_EPS == pytest.approx(1.4901e-8, rel=1e-4)
    assert fd_epsilon(np.zeros(n), 2 * u) == pytest.approx(SQRT_EPS / 2, rel=1e-15)
    assert fd_epsilon(np.full(n, 3.0), u) == pytest.approx(4 * SQRT_EPS, rel=1e-15)
    with pytest.raises(ValueError):
        fd_epsilon(np.zeros(n), np.zeros(n))


def test_jvp_oracle_quadratic():
    A = _spd(20, 0)
    p = QuadraticProblem(A, b=np.ones(20))
    rng = np.random.default_rng(1)
    op = JacobianOperator(p, rng.standard_normal(20))
    for _ in range(100):
        u = rng.standard_normal(20)
        Au = A @ u
        assert np.linalg.norm(op.apply(u) - Au) <= 1e-6 * np.linalg.norm(Au)


def test_jvp_shift():
    A = _spd(10, 2)
    p = QuadraticProblem(A)
    op = JacobianOperator(p, np.zeros(10)).shifted(2.0)
    u = np.random.default_rng(3).standard_normal(10)
    ref = A @ u + 2 * u
    assert np.linalg.norm(op.apply(u) - ref) <= 1e-6 * np.linalg.norm(ref)
    with pytest.raises(ValueError):
        JacobianOperator(p, np.zeros(10), shift=-1.0)


def test_zero_direction_is_free():
    p = QuadraticProblem(np.eye(4))
    op = JacobianOperator(p, np.ones(4))
    count = p.gradient_count
    assert not np.any(op.apply(np.zeros(4)))
    assert p.gradient_count == count


def test_one_gradient_per_apply_and_cached_base():
    p = QuadraticProblem(np.eye(4))
    p.reset_count()
    op = JacobianOperator(p, np.ones(4))
    assert p.gradient_count == 1
    op2 = op.shifted(1.0)
    assert p.gradient_count == 1 and op2.fx is op.fx
    op.apply(np.arange(4.0))
    op2 @ np.arange(4.0)
    assert p.gradient_count == 3


def test_constrained_dofs_are_eliminated():
    A = _spd(6, 4)
    p = QuadraticProblem(A, constrained=[0, 5], constrained_values=[1.0, -1.0])
    op = JacobianOperator(p, p.impose(np.zeros(6)))
    u = np.ones(6)
    out = op.apply(u)
    assert out[0] == 0.0 and out[5] == 0.0
    v = u.copy()
    v[[0, 5]] = 0.0
    assert np.allclose(out[1:5], (A @ v)[1:5], rtol=1e-6)


def test_jvp_on_fem_problem_matches_gradient_difference():
    p = make_problems("bratu", make_hierarchy("bratu", 1))[0]
    x = p.initial_guess()
    op = JacobianOperator(p, x)
    u = p.zero_constrained(np.random.default_rng(0).standard_normal(p.n_dofs))
    h = 1e-5
    central = (p.gradient(x + h * u) - p.gradient(x - h * u)) / (2 * h)
    assert np.linalg.norm(op.apply(u) - central) <= 1e-5 * np.linalg.norm(central)


def test_rayleigh_quotient():
    A = np.diag([-1.0, 3.0])
    e1 = np.array([1.0, 0.0])
    assert rayleigh_quotient(e1, A @ e1) == -1.0
    p = np.random.default_rng(0).standard_normal(5)
    assert rayleigh_quotient(p, p) == pytest.approx(1.0)
    B = _spd(8, 5)
    w = np.linalg.eigvalsh(B)
    for q in np.random.default_rng(1).standard_normal((20, 8)):
        assert w[0] - 1e-12 <= rayleigh_quotient(q, B @ q) <= w[-1] + 1e-12
    with pytest.raises(ValueError):
        rayleigh_quotient(np.zeros(2), np.zeros(2))


def test_matrix_operator():
    A = np.diag([1.0, 2.0])
    op = MatrixOperator(A).shifted(0.5)
    assert np.allclose(op @ np.ones(2), [1.5, 2.5])
    assert op.n == 2
