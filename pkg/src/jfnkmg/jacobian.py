"""Finite-difference Jacobian-vector products."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["fd_epsilon", "JacobianOperator", "MatrixOperator", "rayleigh_quotient", "SQRT_EPS"]

SQRT_EPS = math.sqrt(np.finfo(float).eps)


def fd_epsilon(x, u) -> float:
    """Differencing interval sum_i sqrt(eps) (1 + |x_i|) / (n ||u||_2)."""
    x = np.asarray(x, dtype=float)
    unorm = float(np.linalg.norm(u))
    if unorm == 0.0:
        raise ValueError("finite-difference interval undefined for a zero direction")
    return SQRT_EPS * float(np.sum(1.0 + np.abs(x))) / (x.size * unorm)


class JacobianOperator:
    """Matrix-free ``(J(x) + shift * I) u`` via forward differences of F.

    Parameters
    ----------
    problem : Problem
        Supplies ``gradient`` and the constrained dof set.
    x : ndarray
        Linearization point (admissible iterate).
    fx : ndarray, optional
        Cached ``F(x)``. When omitted it is computed once here, which counts
        as a gradient evaluation.
    shift : float
        Nonnegative spectral shift.
    """

    def __init__(self, problem, x, fx=None, shift=0.0):
        if shift < 0:
            raise ValueError("shift must be nonnegative")
        self.problem = problem
        self.x = np.asarray(x, dtype=float)
        self.fx = problem.gradient(self.x) if fx is None else np.asarray(fx, dtype=float)
        self.shift = float(shift)
        self.level = getattr(problem, "level", 0)

    @property
    def n(self) -> int:
        return self.x.size

    def shifted(self, shift: float) -> "JacobianOperator":
        """Same linearization, different shift; no new gradient evaluation."""
        return JacobianOperator(self.problem, self.x, self.fx, shift)

    def project(self, v):
        return self.problem.zero_constrained(v)

    def apply(self, u):
        u = self.problem.zero_constrained(u)
        if not np.any(u):
            return np.zeros_like(u)
        eps = fd_epsilon(self.x, u)
        fp = self.problem.gradient(self.x + eps * u)
        out = (fp - self.fx) / eps
        if self.shift:
            out += self.shift * u
        out[self.problem.constrained] = 0.0
        return out

    __matmul__ = apply


class MatrixOperator:
    """Explicit-matrix stand-in with the same interface as JacobianOperator."""

    def __init__(self, A, shift=0.0, level=0):
        self.A = np.asarray(A, dtype=float)
        self.shift = float(shift)
        self.level = level

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def shifted(self, shift):
        return MatrixOperator(self.A, shift, self.level)

    def project(self, v):
        return np.array(v, dtype=float)

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        return self.A @ u + self.shift * u

    __matmul__ = apply


def rayleigh_quotient(p, Ap) -> float:
    """<p, Ap> / <p, p> from an already computed product."""
    pp = float(np.dot(p, p))
    if pp == 0.0:
        raise ValueError("Rayleigh quotient of a zero vector")
    return float(np.dot(p, Ap)) / pp
