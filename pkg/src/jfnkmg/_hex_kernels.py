"""Compiled element loops for the Neo-Hookean Q1 energy and gradient."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _kinematics(x, nodes, dNq, F):
    for i in range(3):
        for j in range(3):
            F[i, j] = 1.0 if i == j else 0.0
    for a in range(8):
        base = 3 * nodes[a]
        for i in range(3):
            ui = x[base + i]
            for j in range(3):
                F[i, j] += ui * dNq[a, j]


@numba.njit(cache=True)
def _cofactor(F, C):
    C[0, 0] = F[1, 1] * F[2, 2] - F[1, 2] * F[2, 1]
    C[0, 1] = F[1, 2] * F[2, 0] - F[1, 0] * F[2, 2]
    C[0, 2] = F[1, 0] * F[2, 1] - F[1, 1] * F[2, 0]
    C[1, 0] = F[0, 2] * F[2, 1] - F[0, 1] * F[2, 2]
    C[1, 1] = F[0, 0] * F[2, 2] - F[0, 2] * F[2, 0]
    C[1, 2] = F[0, 1] * F[2, 0] - F[0, 0] * F[2, 1]
    C[2, 0] = F[0, 1] * F[1, 2] - F[0, 2] * F[1, 1]
    C[2, 1] = F[0, 2] * F[1, 0] - F[0, 0] * F[1, 2]
    C[2, 2] = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    return F[0, 0] * C[0, 0] + F[0, 1] * C[0, 1] + F[0, 2] * C[0, 2]


@numba.njit(cache=True)
def neo_hookean_energy(x, elements, dN, weight, mu, lam):
    """Total stored energy; +inf as soon as one quadrature point has J <= 0."""
    F = np.empty((3, 3))
    C = np.empty((3, 3))
    total = 0.0
    for e in range(elements.shape[0]):
        nodes = elements[e]
        for q in range(dN.shape[0]):
            _kinematics(x, nodes, dN[q], F)
            J = _cofactor(F, C)
            if not J > 0.0:
                return math.inf
            ic = 0.0
            for i in range(3):
                for j in range(3):
                    ic += F[i, j] * F[i, j]
            lnJ = math.log(J)
            total += weight * (0.5 * mu * (ic - 3.0) - mu * lnJ + 0.5 * lam * lnJ * lnJ)
    return total


@numba.njit(cache=True)
def neo_hookean_gradient(x, elements, dN, weight, mu, lam, out):
    """Accumulate the nodal forces into ``out``; returns False if J <= 0 anywhere."""
    F = np.empty((3, 3))
    C = np.empty((3, 3))
    P = np.empty((3, 3))
    out[:] = 0.0
    for e in range(elements.shape[0]):
        nodes = elements[e]
        for q in range(dN.shape[0]):
            dNq = dN[q]
            _kinematics(x, nodes, dNq, F)
            J = _cofactor(F, C)
            if not J > 0.0:
                return False
            coef = (lam * math.log(J) - mu) / J
            for i in range(3):
                for j in range(3):
                    P[i, j] = weight * (mu * F[i, j] + coef * C[i, j])
            for a in range(8):
                base = 3 * nodes[a]
                for i in range(3):
                    s = 0.0
                    for j in range(3):
                        s += P[i, j] * dNq[a, j]
                    out[base + i] += s
    return True
