"""Preconditioned CG with negative-curvature exit, and an L-BFGS preconditioner."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CgStatus",
    "CgOutcome",
    "cg_solve",
    "LbfgsPreconditioner",
    "lbfgs_apply",
    "uniform_sample_pairs",
    "SecantCollector",
    "CURVATURE_TOL",
]

CURVATURE_TOL = 1e-12


class CgStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    NEGATIVE_CURVATURE = "negative_curvature"
    # <r, M r> <= 0: the preconditioner is not positive on the current residual
    INDEFINITE_PRECONDITIONER = "indefinite_preconditioner"


@dataclass
class CgOutcome:
    solution: np.ndarray
    status: CgStatus
    lambda_c: float
    iterations: int
    residual_norm: float


def uniform_sample_pairs(recorded, m: int) -> list:
    """Pick ``min(m, len(recorded))`` entries spread evenly over the history.

    Index ``j`` maps to ``floor(j * (count - 1) / (k - 1))``; duplicates are
    dropped and the original order kept.
    """
    count = len(recorded)
    k = min(m, count)
    if k <= 0:
        return []
    if k == 1:
        return [recorded[count - 1]]
    idx = sorted({(j * (count - 1)) // (k - 1) for j in range(k)})
    return [recorded[i] for i in idx]


class LbfgsPreconditioner:
    """Inverse-Hessian approximation from secant pairs (two-loop recursion).

    Pairs are ordered oldest first. Pairs violating ``<s, y> > 0`` are
    discarded. With no pairs the action is the identity.
    """

    def __init__(self, pairs=()):
        kept = [(np.asarray(s, dtype=float), np.asarray(y, dtype=float)) for s, y in pairs]
        kept = [(s, y) for s, y in kept if float(s @ y) > 0.0]
        self.s = [s for s, _ in kept]
        self.y = [y for _, y in kept]
        self.rho = [1.0 / float(s @ y) for s, y in kept]
        if kept:
            s, y = kept[-1]
            self.gamma0 = float(s @ y) / float(y @ y)
        else:
            self.gamma0 = 1.0

    @property
    def m(self) -> int:
        return len(self.s)

    def apply(self, r):
        q = np.array(r, dtype=float)
        if not self.s:
            return q
        alpha = [0.0] * self.m
        for i in range(self.m - 1, -1, -1):
            alpha[i] = self.rho[i] * float(self.s[i] @ q)
            q -= alpha[i] * self.y[i]
        q *= self.gamma0
        for i in range(self.m):
            beta = self.rho[i] * float(self.y[i] @ q)
            q += (alpha[i] - beta) * self.s[i]
        return q

    __call__ = apply


def lbfgs_apply(P: LbfgsPreconditioner, r):
    return P.apply(r)


class SecantCollector:
    """Records CG secant pairs ``(alpha p, alpha A p)`` for a later L-BFGS build.

    With ``capacity`` set, the history is thinned by keeping every other
    stored pair whenever the buffer overflows (doubling the recording stride),
    which keeps the retained pairs evenly spread while bounding memory.
    """

    def __init__(self, capacity=None):
        if capacity is not None and capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.capacity = capacity
        self.pairs = []
        self.stride = 1
        self.n_seen = 0

    def record(self, s, y):
        if float(np.dot(s, y)) <= 0.0:
            return
        if self.n_seen % self.stride == 0:
            self.pairs.append((np.array(s, dtype=float), np.array(y, dtype=float)))
            if self.capacity is not None and len(self.pairs) > self.capacity:
                self.pairs = self.pairs[::2]
                self.stride *= 2
        self.n_seen += 1

    def build(self, m: int = 20) -> LbfgsPreconditioner:
        return LbfgsPreconditioner(uniform_sample_pairs(self.pairs, m))


def cg_solve(
    op,
    b,
    s0=None,
    precond=None,
    tol_abs: float = 0.0,
    max_iter=None,
    forcing=None,
    collector: SecantCollector | None = None,
    curvature_tol: float = CURVATURE_TOL,
) -> CgOutcome:
    """Preconditioned conjugate gradients for ``op.apply(s) = b``.

    Stops with ``NEGATIVE_CURVATURE`` as soon as a search direction has
    ``<p, Ap> < curvature_tol * <p, p>``; the iterate returned is the one
    before that step and ``lambda_c`` is the Rayleigh quotient of ``p``.
    Otherwise stops once ``||r|| <= max(tol_abs, forcing * ||b||)`` or after
    ``max_iter`` operator applications.
    """
    project = getattr(op, "project", lambda v: np.array(v, dtype=float))
    b = project(b)
    if max_iter is None:
        max_iter = op.n
    if s0 is None:
        s = np.zeros_like(b)
        r = b.copy()
    else:
        s = project(s0)
        r = b - op.apply(s) if np.any(s) else b.copy()
    tol = max(tol_abs, (forcing or 0.0) * float(np.linalg.norm(b)))

    z = precond(r) if precond is not None else r
    rz = float(r @ z)
    p = z.copy()
    rnorm = float(np.linalg.norm(r))
    it = 0
    while True:
        if rnorm <= tol:
            return CgOutcome(s, CgStatus.CONVERGED, 0.0, it, rnorm)
        if it >= max_iter:
            return CgOutcome(s, CgStatus.MAX_ITERATIONS, 0.0, it, rnorm)
        if rz <= 0.0:
            return CgOutcome(s, CgStatus.INDEFINITE_PRECONDITIONER, 0.0, it, rnorm)
        Ap = op.apply(p)
        it += 1
        kappa = float(p @ Ap)
        pp = float(p @ p)
        if not np.isfinite(kappa):
            raise FloatingPointError("non-finite curvature in CG")
        if kappa < curvature_tol * pp:
            return CgOutcome(s, CgStatus.NEGATIVE_CURVATURE, kappa / pp, it, rnorm)
        alpha = rz / kappa
        s += alpha * p
        r -= alpha * Ap
        if collector is not None:
            collector.record(alpha * p, alpha * Ap)
        rnorm = float(np.linalg.norm(r))
        z = precond(r) if precond is not None else r
        if not np.all(np.isfinite(z)):
            raise FloatingPointError("non-finite preconditioner output")
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
