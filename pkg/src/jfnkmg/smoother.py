"""Power-method eigenvalue estimates and the Chebyshev semi-iterative smoother."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenEstimate",
    "SmootherConfig",
    "estimate_lambda_max",
    "chebyshev_smooth",
    "chebyshev_residual_polynomial",
]


@dataclass
class EigenEstimate:
    lambda_max: float
    eigenvector: np.ndarray
    iterations: int
    level_index: int = 0


@dataclass(frozen=True)
class SmootherConfig:
    lo_factor: float = 0.06
    hi_factor: float = 1.2
    nu_pre: int = 5
    nu_post: int = 5

    def __post_init__(self):
        if not 0.0 < self.lo_factor < self.hi_factor:
            raise ValueError("need 0 < lo_factor < hi_factor")
        if self.nu_pre < 0 or self.nu_post < 0:
            raise ValueError("sweep counts must be nonnegative")


def estimate_lambda_max(op, warm_start=None, *, rtol=1e-2, max_iter=30, seed=0) -> EigenEstimate:
    """Power iteration on a linear operator.

    The estimate is ``||A v||`` for the current unit vector ``v``; iteration
    stops when two successive estimates agree to ``rtol`` (relative) or after
    ``max_iter`` products. Without a warm start a seeded random vector is
    used. Constrained entries are zeroed when ``op`` provides ``project``.
    """
    project = getattr(op, "project", lambda v: v)
    if warm_start is None:
        v = np.random.default_rng(seed).standard_normal(op.n)
    else:
        v = np.array(warm_start, dtype=float)
    v = project(v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("power method needs a nonzero start vector on the free subspace")
    v /= norm
    lam_old = None
    lam = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        w = op.apply(v)
        lam = float(np.linalg.norm(w))
        if not np.isfinite(lam):
            raise FloatingPointError("non-finite operator application in power method")
        if lam == 0.0:
            break
        v = w / lam
        if lam_old is not None and abs(lam - lam_old) < rtol * abs(lam):
            break
        lam_old = lam
    return EigenEstimate(lam, v, it, getattr(op, "level", 0))


def chebyshev_smooth(s, op, b, lam, nu, lo_factor=0.06, hi_factor=1.2):
    """Run ``nu`` Chebyshev sweeps for ``A s = b`` on [lo*lam, hi*lam].

    Each sweep evaluates the true residual ``b - A s`` (one operator
    application, free when ``s`` is zero) and takes the three-term step.
    """
    if lam <= 0:
        raise ValueError(f"Chebyshev interval needs a positive eigenvalue estimate, got {lam}")
    s = np.array(s, dtype=float)
    if nu == 0:
        return s
    a, bb = lo_factor * lam, hi_factor * lam
    theta = 0.5 * (bb + a)
    delta = 0.5 * (bb - a)
    sigma = theta / delta
    rho = 1.0 / sigma
    d = None
    for _ in range(nu):
        r = b - op.apply(s)
        if d is None:
            d = r / theta
        else:
            rho_new = 1.0 / (2.0 * sigma - rho)
            d = rho_new * rho * d + (2.0 * rho_new / delta) * r
            rho = rho_new
        s += d
    return s


def chebyshev_residual_polynomial(t, lam, nu, lo_factor=0.06, hi_factor=1.2):
    """Residual polynomial p_nu(t) = T_nu((theta - t)/delta) / T_nu(theta/delta)."""
    a, bb = lo_factor * lam, hi_factor * lam
    theta = 0.5 * (bb + a)
    delta = 0.5 * (bb - a)
    t = np.asarray(t, dtype=float)
    z = (theta - t) / delta
    return _cheb(nu, z) / _cheb(nu, np.asarray(theta / delta))


def _cheb(n, z):
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) <= 1.0
    out = np.empty_like(z)
    out[inside] = np.cos(n * np.arccos(z[inside]))
    zo = z[~inside]
    out[~inside] = np.sign(zo) ** n * np.cosh(n * np.arccosh(np.abs(zo)))
    return out
