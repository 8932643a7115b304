"""Inexact Jacobian-free Newton-Krylov driver with cubic backtracking."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .jacobian import JacobianOperator
from .krylov import CgStatus, SecantCollector, cg_solve
from .metrics import effective_ge
from .multigrid import MgConfig, MultigridPreconditioner, ShiftingError
from .problems import NonFiniteError

__all__ = [
    "STRATEGIES",
    "NewtonConfig",
    "RunReport",
    "LineSearchError",
    "cubic_backtracking",
    "newton_solve",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("cg", "cg-qn", "cg-mg")


class LineSearchError(RuntimeError):
    pass


@dataclass
class NewtonConfig:
    abs_tol: float = 1e-6
    eta_max: float = 0.5
    max_iter: int = 100
    c1: float = 1e-4
    alpha_min: float = 1e-12
    max_backtracks: int = 40
    strategy: str = "cg-mg"
    krylov_max_iter: int | None = None
    n_pairs: int = 20
    pair_capacity: int | None = 40
    check_forcing: bool = False
    mg: MgConfig = field(default_factory=MgConfig)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must lie in (0, 1)")
        if self.abs_tol <= 0 or self.alpha_min <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class RunReport:
    status: str
    newton_iterations: int
    krylov_iterations: list
    krylov_status: list
    gradient_evals: list
    dimension: int
    residual_norms: list
    energies: list
    step_lengths: list
    shift_events: list
    flipped_directions: int = 0
    forcing_violations: int = 0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def total_krylov(self) -> int:
        return int(sum(self.krylov_iterations))

    @property
    def effective_ge(self) -> float:
        return effective_ge(self.gradient_evals, self.dimension)

    @property
    def age(self) -> float:
        return self.effective_ge / self.total_krylov if self.total_krylov else float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["effective_ge"] = self.effective_ge
        d["total_krylov"] = self.total_krylov
        d["age"] = self.age
        return d


def cubic_backtracking(energy, x, dx, fx, psi0=None, c1=1e-4, alpha_min=1e-12, max_backtracks=40):
    """Backtracking line search with quadratic/cubic interpolation.

    Accepts the first ``alpha`` (trying 1 first) with
    ``energy(x + alpha dx) <= energy(x) + c1 alpha <F(x), dx>``. Every new
    trial is clamped to ``[0.1, 0.5] * alpha``. Non-finite energies count as
    rejections. Returns ``(alpha, energy_at_alpha)``.
    """
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    slope = float(np.dot(fx, dx))
    if slope >= 0.0:
        raise ValueError("line search needs a descent direction")
    if psi0 is None:
        psi0 = energy(x)
    alpha = 1.0
    prev = None  # (alpha, psi) of the last finite rejected trial
    for n in range(max_backtracks + 1):
        psi = energy(x + alpha * dx)
        finite = math.isfinite(psi)
        if finite and psi <= psi0 + c1 * alpha * slope:
            return alpha, psi
        if n == max_backtracks:
            break
        if not finite:
            new = 0.5 * alpha
            prev = None
        elif prev is None:
            new = -slope * alpha**2 / (2.0 * (psi - psi0 - slope * alpha))
        else:
            a_p, psi_p = prev
            r1 = psi - psi0 - alpha * slope
            r2 = psi_p - psi0 - a_p * slope
            a = (r1 / alpha**2 - r2 / a_p**2) / (alpha - a_p)
            b = (-a_p * r1 / alpha**2 + alpha * r2 / a_p**2) / (alpha - a_p)
            if a == 0.0:
                new = -slope / (2.0 * b)
            else:
                disc = b * b - 3.0 * a * slope
                new = (-b + math.sqrt(disc)) / (3.0 * a) if disc >= 0.0 else 0.5 * alpha
        if finite:
            prev = (alpha, psi)
        if not math.isfinite(new):
            new = 0.5 * alpha
        alpha = min(max(new, 0.1 * alpha), 0.5 * alpha)
        if alpha < alpha_min:
            break
    raise LineSearchError(f"no acceptable step length (last alpha {alpha:.3e})")


def newton_solve(problems, transfers=None, config: NewtonConfig | None = None, x0=None):
    """Minimize the finest-level energy with inexact Newton.

    Parameters
    ----------
    problems : list
        Per-level problems, coarsest first. Only the last one is used unless
        the strategy is ``"cg-mg"``.
    transfers : TransferSet, optional
        Required for ``"cg-mg"`` with more than one level.
    config : NewtonConfig
    x0 : ndarray, optional
        Starting point; Dirichlet values are imposed on it.

    Returns
    -------
    x : ndarray
    report : RunReport
    """
    config = config or NewtonConfig()
    problems = list(problems)
    fine = problems[-1]
    for p in problems:
        p.reset_count()
    dim = fine.mesh.dim if hasattr(fine, "mesh") else 1

    x = fine.initial_guess() if x0 is None else fine.impose(x0)
    mg = None
    if config.strategy == "cg-mg":
        mg = MultigridPreconditioner(problems, transfers, config.mg)
    lbfgs = None

    krylov_its, krylov_status, fnorms, energies, steps = [], [], [], [], []
    flips = 0
    violations = 0
    status = "max_iterations"
    psi = fine.energy(x)
    try:
        for k in range(config.max_iter + 1):
            f = fine.gradient(x)
            fnorm = float(np.linalg.norm(f))
            fnorms.append(fnorm)
            energies.append(psi)
            logger.debug("newton %d: |F| = %.3e, psi = %.12e", k, fnorm, psi)
            if fnorm < config.abs_tol:
                status = "converged"
                break
            if k == config.max_iter:
                break
            eta = min(config.eta_max, fnorm)
            op = JacobianOperator(fine, x, f)
            collector = None
            precond = None
            if config.strategy == "cg-mg":
                mg.setup(x, f)
                precond = mg
            elif config.strategy == "cg-qn":
                if lbfgs is None:
                    collector = SecantCollector(config.pair_capacity)
                else:
                    precond = lbfgs
            out = cg_solve(op, -f, precond=precond, max_iter=config.krylov_max_iter, forcing=eta, collector=collector)
            if collector is not None:
                lbfgs = collector.build(config.n_pairs)
            krylov_its.append(out.iterations)
            krylov_status.append(out.status.value)
            dx = out.solution
            if config.check_forcing and out.status is CgStatus.CONVERGED:
                if np.linalg.norm(op.apply(dx) + f) > eta * fnorm * (1 + 1e-8):
                    violations += 1
            if out.status is not CgStatus.CONVERGED and out.status is not CgStatus.MAX_ITERATIONS:
                if not np.any(dx) or float(f @ dx) >= 0.0:
                    dx = -f
            slope = float(f @ dx)
            if slope >= 0.0:
                logger.info("newton %d: direction is not a descent direction, negating", k)
                dx = -dx
                flips += 1
            alpha, psi = cubic_backtracking(
                fine.energy, x, dx, f, psi, config.c1, config.alpha_min, config.max_backtracks
            )
            steps.append(alpha)
            x = x + alpha * dx
    except LineSearchError as exc:
        logger.warning("line search failed: %s", exc)
        status = "line_search_failure"
    except (NonFiniteError, ShiftingError, FloatingPointError) as exc:
        logger.warning("solver failure: %s", exc)
        status = "solver_failure"

    report = RunReport(
        status=status,
        newton_iterations=len(krylov_its),
        krylov_iterations=krylov_its,
        krylov_status=krylov_status,
        gradient_evals=[p.gradient_count for p in problems],
        dimension=dim,
        residual_norms=fnorms,
        energies=energies,
        step_lengths=steps,
        shift_events=[asdict(e) for e in mg.shift_events] if mg is not None else [],
        flipped_directions=flips,
        forcing_violations=violations,
    )
    return x, report
