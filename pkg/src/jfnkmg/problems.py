"""First-order finite element energies and their gradients.

Every problem exposes the same small surface used by the solvers:
``energy(x)``, ``gradient(x)``, ``initial_guess()`` and helpers to impose or
eliminate the Dirichlet dofs. Vectors are full-length; constrained entries
of an iterate carry the prescribed values, constrained entries of any
direction or gradient are zero.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from ._hex_kernels import neo_hookean_energy, neo_hookean_gradient
from .mesh import (
    MeshHierarchy,
    MeshLevel,
    build_beam_hierarchy,
    build_unit_square_hierarchy,
)

__all__ = [
    "NonFiniteError",
    "Problem",
    "QuadraticProblem",
    "BratuProblem",
    "MinimalSurfaceProblem",
    "NeoHookeanProblem",
    "lame_parameters",
    "rotation_displacement",
    "make_hierarchy",
    "make_problems",
    "PROBLEM_KINDS",
]

PROBLEM_KINDS = ("bratu", "minsurf", "neohookean")


class NonFiniteError(ArithmeticError):
    """Raised when an energy or gradient cannot be evaluated (e.g. J <= 0)."""


class Problem:
    """Base class: Dirichlet bookkeeping and the gradient-evaluation counter."""

    def __init__(self, n_dofs, constrained=None, constrained_values=None, level=0):
        self.n_dofs = int(n_dofs)
        self.level = level
        if constrained is None:
            constrained = np.zeros(0, dtype=int)
        self.constrained = np.asarray(constrained, dtype=int)
        if constrained_values is None:
            constrained_values = np.zeros(self.constrained.size)
        self.constrained_values = np.asarray(constrained_values, dtype=float)
        self.free = np.ones(self.n_dofs, dtype=bool)
        self.free[self.constrained] = False
        self.gradient_count = 0
        self._lock = threading.Lock()

    def _count(self):
        with self._lock:
            self.gradient_count += 1

    def reset_count(self):
        with self._lock:
            self.gradient_count = 0

    def impose(self, x):
        x = np.array(x, dtype=float)
        x[self.constrained] = self.constrained_values
        return x

    def zero_constrained(self, v):
        v = np.array(v, dtype=float)
        v[self.constrained] = 0.0
        return v

    def initial_guess(self):
        return self.impose(np.zeros(self.n_dofs))

    def energy(self, x) -> float:
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def gradient(self, x):
        """Return F(x) with constrained entries zeroed. Counts one evaluation."""
        self._count()
        g = self._gradient(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient")
        g[self.constrained] = 0.0
        return g


class QuadraticProblem(Problem):
    """Psi(x) = 1/2 x^T A x - b^T x for an explicit (small) matrix A.

    Used as a fixture with a known Jacobian.
    """

    def __init__(self, A, b=None, constrained=None, constrained_values=None, level=0):
        A = np.asarray(A, dtype=float)
        super().__init__(A.shape[0], constrained, constrained_values, level)
        self.A = A
        self.b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.A @ x) - self.b @ x)

    def _gradient(self, x):
        return self.A @ x - self.b


class _TriangleProblem(Problem):
    """P1 elements with the one-point (barycentric) rule."""

    def __init__(self, mesh: MeshLevel):
        super().__init__(mesh.n_dofs, mesh.constrained_dofs(), mesh.constrained_values(), mesh.level_index)
        self.mesh = mesh
        el = mesh.elements
        p = mesh.node_coords[el]  # (m, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1]
        g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
        g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
        self.grad_phi = np.stack([-g1 - g2, g1, g2], axis=1)  # (m, 3, 2)
        self.area = 0.5 * np.abs(det)
        self._elements = el
        self._flat = el.ravel()

    def _element_gradients(self, x):
        return np.einsum("mad,ma->md", self.grad_phi, x[self._elements])

    def _assemble(self, local):
        return np.bincount(self._flat, weights=local.ravel(), minlength=self.n_dofs)


class BratuProblem(_TriangleProblem):
    """Psi(u) = int 1/2 |grad u|^2 - lam * exp(u)."""

    def __init__(self, mesh: MeshLevel, lam: float = 5.0):
        super().__init__(mesh)
        self.lam = float(lam)

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        g = self._element_gradients(x)
        ubar = x[self._elements].mean(axis=1)
        with np.errstate(over="ignore"):
            dens = 0.5 * np.einsum("md,md->m", g, g) - self.lam * np.exp(ubar)
        val = float(np.sum(self.area * dens))
        return val if math.isfinite(val) else math.inf

    def _gradient(self, x):
        g = self._element_gradients(x)
        ubar = x[self._elements].mean(axis=1)
        local = self.area[:, None] * np.einsum("mad,md->ma", self.grad_phi, g)
        with np.errstate(over="ignore"):
            local -= (self.lam * np.exp(ubar) * self.area / 3.0)[:, None]
        return self._assemble(local)


class MinimalSurfaceProblem(_TriangleProblem):
    """Psi(u) = int sqrt(1 + |grad u|^2)."""

    def energy(self, x):
        g = self._element_gradients(np.asarray(x, dtype=float))
        return float(np.sum(self.area * np.sqrt(1.0 + np.einsum("md,md->m", g, g))))

    def _gradient(self, x):
        g = self._element_gradients(x)
        scale = self.area / np.sqrt(1.0 + np.einsum("md,md->m", g, g))
        local = scale[:, None] * np.einsum("mad,md->ma", self.grad_phi, g)
        return self._assemble(local)


def lame_parameters(E: float, nu: float):
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return mu, lam


def _q1_reference_gradients():
    # node order matches mesh._hexahedra: (0,0,0),(1,0,0),(1,1,0),(0,1,0), then z=1
    corners = np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        dtype=float,
    )
    g = 0.5 / math.sqrt(3.0)
    pts1 = np.array([0.5 - g, 0.5 + g])
    qpts = np.array([[a, b, c] for c in pts1 for b in pts1 for a in pts1])

    def lin(xi, c):
        return xi if c == 1 else 1.0 - xi

    def dlin(c):
        return 1.0 if c == 1 else -1.0

    dN = np.empty((8, 8, 3))
    for q, xi in enumerate(qpts):
        for a, c in enumerate(corners):
            f = [lin(xi[k], c[k]) for k in range(3)]
            dN[q, a, 0] = dlin(c[0]) * f[1] * f[2]
            dN[q, a, 1] = f[0] * dlin(c[1]) * f[2]
            dN[q, a, 2] = f[0] * f[1] * dlin(c[2])
    return dN


class NeoHookeanProblem(Problem):
    """Compressible Neo-Hookean stored energy on Q1 hexahedra, 2x2x2 Gauss.

    Psi(u) = int mu/2 (I_C - 3) - mu ln J + lam/2 (ln J)^2.
    The energy is +inf when any quadrature point has J <= 0.
    """

    def __init__(self, mesh: MeshLevel, E: float = 10.0, nu: float = 0.3):
        if mesh.n_components != 3:
            raise ValueError("Neo-Hookean problems need a 3-component mesh")
        super().__init__(mesh.n_dofs, mesh.constrained_dofs(), mesh.constrained_values(), mesh.level_index)
        self.mesh = mesh
        self.E, self.nu = float(E), float(nu)
        self.mu, self.lam = lame_parameters(E, nu)
        h = mesh.spacing
        self.dN = _q1_reference_gradients() / h[None, None, :]  # (q, a, j)
        self.weight = float(np.prod(h)) / 8.0
        self._elements = np.ascontiguousarray(mesh.elements, dtype=np.int64)

    def energy(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        val = neo_hookean_energy(x, self._elements, self.dN, self.weight, self.mu, self.lam)
        return val if math.isfinite(val) else math.inf

    def _gradient(self, x):
        out = np.empty(self.n_dofs)
        ok = neo_hookean_gradient(
            np.ascontiguousarray(x, dtype=float), self._elements, self.dN, self.weight, self.mu, self.lam, out
        )
        if not ok:
            raise NonFiniteError("deformation gradient with J <= 0")
        return out


def rotation_displacement(y, z):
    """Prescribed displacement on the x = 10 face of the beam."""
    c, s = math.cos(math.pi / 6.0), math.sin(math.pi / 6.0)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    uy = 0.5 * (0.5 + (y - 0.5) * c - (z - 0.5) * s - y)
    uz = 0.5 * (0.5 + (y - 0.5) * s + (z - 0.5) * c - z)
    return np.stack([np.zeros_like(y), uy, uz], axis=-1)


def _minsurf_boundary(coords):
    x, y = coords[:, 0], coords[:, 1]
    tol = 1e-12
    on_y = (np.abs(y) < tol) | (np.abs(y - 1.0) < tol)
    on_x = (np.abs(x) < tol) | (np.abs(x - 1.0) < tol)
    values = np.where(on_y, x * (1.0 - x), 0.0)
    return on_x | on_y, values[:, None]


def _beam_boundary(coords):
    x = coords[:, 0]
    tol = 1e-12
    left = np.abs(x) < tol
    right = np.abs(x - 10.0) < tol
    values = np.zeros((coords.shape[0], 3))
    values[right] = rotation_displacement(coords[right, 1], coords[right, 2])
    return left | right, values


def make_hierarchy(kind: str, n_levels: int) -> MeshHierarchy:
    """Mesh hierarchy with the boundary data of the named benchmark."""
    if kind == "bratu":
        return build_unit_square_hierarchy(25, n_levels)
    if kind == "minsurf":
        return build_unit_square_hierarchy(25, n_levels, boundary=_minsurf_boundary)
    if kind == "neohookean":
        return build_beam_hierarchy(10, 1, 1, n_levels, boundary=_beam_boundary, n_components=3)
    raise ValueError(f"unknown problem kind {kind!r}")


def make_problems(kind: str, hierarchy: MeshHierarchy) -> list:
    """One problem instance per hierarchy level, coarsest first."""
    if kind == "bratu":
        return [BratuProblem(m, lam=5.0) for m in hierarchy.levels]
    if kind == "minsurf":
        return [MinimalSurfaceProblem(m) for m in hierarchy.levels]
    if kind == "neohookean":
        return [NeoHookeanProblem(m, E=10.0, nu=0.3) for m in hierarchy.levels]
    raise ValueError(f"unknown problem kind {kind!r}")
