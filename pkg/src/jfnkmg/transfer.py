"""Interpolation, restriction and iterate projection between mesh levels.

The interpolation stencil of each adjacent level pair is stored as a sparse
node-to-node matrix built from grid indices; vector-valued fields apply it
component-wise. Dirichlet handling keeps every level posed on its free
subspace:

* ``interpolate``     ignores coarse constrained entries, zeroes fine ones
* ``restrict_residual`` is its exact transpose
* ``project_iterate`` is ``2**-d * I^T x`` with the coarse Dirichlet values
  written back afterwards
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mesh import MeshHierarchy, MeshLevel

__all__ = ["TransferSet", "interpolation_matrix"]


def _linear_1d(nc: int) -> sp.csr_matrix:
    """1-D nodal interpolation from nc + 1 to 2 nc + 1 points."""
    nf = 2 * nc + 1
    rows, cols, vals = [], [], []
    for i in range(nf):
        if i % 2 == 0:
            rows.append(i)
            cols.append(i // 2)
            vals.append(1.0)
        else:
            rows += [i, i]
            cols += [i // 2, i // 2 + 1]
            vals += [0.5, 0.5]
    return sp.csr_matrix((vals, (rows, cols)), shape=(nf, nc + 1))


def _triangle_interpolation(nx: int, ny: int) -> sp.csr_matrix:
    fx, fy = 2 * nx + 1, 2 * ny + 1
    cx = nx + 1
    J, I = np.meshgrid(np.arange(fy), np.arange(fx), indexing="ij")
    I, J = I.ravel(), J.ravel()
    fine = J * fx + I
    rows, cols, vals = [], [], []

    def add(mask, ci, cj, w):
        rows.append(fine[mask])
        cols.append(cj * cx + ci)
        vals.append(np.full(mask.sum(), w))

    ev_i, ev_j = I % 2 == 0, J % 2 == 0
    m = ev_i & ev_j
    add(m, I[m] // 2, J[m] // 2, 1.0)
    m = ~ev_i & ev_j
    add(m, I[m] // 2, J[m] // 2, 0.5)
    add(m, I[m] // 2 + 1, J[m] // 2, 0.5)
    m = ev_i & ~ev_j
    add(m, I[m] // 2, J[m] // 2, 0.5)
    add(m, I[m] // 2, J[m] // 2 + 1, 0.5)
    # odd/odd fine nodes are midpoints of the cell diagonal
    m = ~ev_i & ~ev_j
    add(m, I[m] // 2, J[m] // 2, 0.5)
    add(m, I[m] // 2 + 1, J[m] // 2 + 1, 0.5)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(fx * fy, cx * (ny + 1)),
    )


def interpolation_matrix(coarse: MeshLevel) -> sp.csr_matrix:
    """Node-to-node P1/Q1 interpolation from ``coarse`` to its refinement."""
    if coarse.dim == 2:
        return _triangle_interpolation(*coarse.cells)
    nx, ny, nz = coarse.cells
    # x-fastest ordering: node = (k * ny1 + j) * nx1 + i
    return sp.kron(_linear_1d(nz), sp.kron(_linear_1d(ny), _linear_1d(nx))).tocsr()


class TransferSet:
    """Transfers for every adjacent pair of a hierarchy.

    Level indices refer to the finer level of the pair, so valid arguments
    are ``1 .. len(hierarchy) - 1``.
    """

    def __init__(self, hierarchy: MeshHierarchy):
        self.hierarchy = hierarchy
        self.dim = hierarchy.dimension
        self.matrices = [None] + [interpolation_matrix(hierarchy[l - 1]) for l in range(1, len(hierarchy))]
        self._transposes = [None] + [m.T.tocsr() for m in self.matrices[1:]]

    @property
    def n_levels(self) -> int:
        return len(self.hierarchy)

    def _check(self, level, v, which):
        if not 1 <= level < self.n_levels:
            raise IndexError(f"transfer level {level} out of range 1..{self.n_levels - 1}")
        mesh = self.hierarchy[level if which == "fine" else level - 1]
        v = np.asarray(v, dtype=float)
        if v.shape != (mesh.n_dofs,):
            raise ValueError(f"expected a {which} vector of length {mesh.n_dofs}, got shape {v.shape}")
        return v

    def _nodal(self, v, mesh):
        return v.reshape(mesh.n_nodes, mesh.n_components)

    def interpolate(self, level: int, c):
        coarse, fine = self.hierarchy[level - 1], self.hierarchy[level]
        c = self._check(level, c, "coarse").copy()
        c[coarse.constrained_dofs()] = 0.0
        out = (self.matrices[level] @ self._nodal(c, coarse)).ravel()
        out[fine.constrained_dofs()] = 0.0
        return out

    def restrict_residual(self, level: int, r):
        coarse, fine = self.hierarchy[level - 1], self.hierarchy[level]
        r = self._check(level, r, "fine").copy()
        r[fine.constrained_dofs()] = 0.0
        out = (self._transposes[level] @ self._nodal(r, fine)).ravel()
        out[coarse.constrained_dofs()] = 0.0
        return out

    def project_iterate(self, level: int, x):
        coarse, fine = self.hierarchy[level - 1], self.hierarchy[level]
        x = self._check(level, x, "fine")
        out = (self._transposes[level] @ self._nodal(x, fine)).ravel() * 2.0 ** (-self.dim)
        out[coarse.constrained_dofs()] = coarse.constrained_values()
        return out
