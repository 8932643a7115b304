"""Jacobian-free geometric multigrid V-cycle with a shifted coarse-level CG."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jacobian import JacobianOperator
from .krylov import CgStatus, SecantCollector, cg_solve
from .smoother import chebyshev_smooth, estimate_lambda_max

__all__ = ["MgConfig", "ShiftEvent", "ShiftingError", "MultigridPreconditioner", "COARSE_VARIANTS"]

COARSE_VARIANTS = ("cg", "cg-qn", "shifted")


class ShiftingError(RuntimeError):
    """The coarse-level shifting loop did not reach a positive definite operator."""


@dataclass
class MgConfig:
    nu_pre: int = 5
    nu_post: int = 5
    gamma: float = 5.0
    coarse_solver: str = "shifted"
    coarse_tol: float = 1e-12
    coarse_max_iter: int | None = None  # None: number of free coarse unknowns
    n_pairs: int = 20
    max_shifts: int = 25
    lo_factor: float = 0.06
    hi_factor: float = 1.2
    power_rtol: float = 1e-2
    power_max_iter: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.coarse_solver not in COARSE_VARIANTS:
            raise ValueError(f"coarse_solver must be one of {COARSE_VARIANTS}")
        if self.nu_pre != self.nu_post:
            raise ValueError("a symmetric V-cycle needs nu_pre == nu_post")
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")


@dataclass
class ShiftEvent:
    setup_index: int
    coarse_solve_index: int
    lambda_c: float
    shift: float


@dataclass
class _LevelState:
    x: np.ndarray
    fx: np.ndarray
    op: JacobianOperator
    lambda_max: float = 0.0
    eigenvector: np.ndarray | None = None
    power_iterations: int = 0


class MultigridPreconditioner:
    """V(nu, nu)-cycle acting on Jacobians known only through F.

    Call :meth:`setup` once per Newton iterate; afterwards the object is a
    callable ``b -> s`` usable as a CG preconditioner.

    Parameters
    ----------
    problems : list
        Per-level problems, coarsest first.
    transfers : TransferSet
        Transfers of the matching hierarchy.
    config : MgConfig
    """

    def __init__(self, problems, transfers, config: MgConfig | None = None):
        self.problems = list(problems)
        self.transfers = transfers
        self.config = config or MgConfig()
        self.levels: list[_LevelState] = []
        self.lbfgs = None
        self.shift_events: list[ShiftEvent] = []
        self.n_setups = 0
        self.n_coarse_solves = 0
        self.coarse_iterations = 0
        self._eigenvectors = {}

    @property
    def finest(self) -> int:
        return len(self.problems) - 1

    def setup(self, x_fine, f_fine=None):
        """Project the iterate down, cache F per level and refresh eigen-estimates."""
        cfg = self.config
        L = self.finest
        xs = [None] * (L + 1)
        fs = [None] * (L + 1)
        xs[L] = np.asarray(x_fine, dtype=float)
        fs[L] = self.problems[L].gradient(xs[L]) if f_fine is None else np.asarray(f_fine, dtype=float)
        for l in range(L, 0, -1):
            xs[l - 1] = self.transfers.project_iterate(l, xs[l])
            fs[l - 1] = self.problems[l - 1].gradient(xs[l - 1])
        self.levels = [_LevelState(xs[l], fs[l], JacobianOperator(self.problems[l], xs[l], fs[l])) for l in range(L + 1)]
        for l in range(1, L + 1):
            est = estimate_lambda_max(
                self.levels[l].op,
                self._eigenvectors.get(l),
                rtol=cfg.power_rtol,
                max_iter=cfg.power_max_iter,
                seed=cfg.seed + l,
            )
            st = self.levels[l]
            st.lambda_max, st.eigenvector, st.power_iterations = est.lambda_max, est.eigenvector, est.iterations
            self._eigenvectors[l] = est.eigenvector
        self.n_setups += 1
        return self

    def __call__(self, b):
        return self.v_cycle(b, self.finest)

    def v_cycle(self, b, level: int):
        if not self.levels:
            raise RuntimeError("setup() must be called before applying the V-cycle")
        if level == 0:
            return self.coarse_solve(b)
        cfg = self.config
        st = self.levels[level]
        s = np.zeros_like(b)
        s = chebyshev_smooth(s, st.op, b, st.lambda_max, cfg.nu_pre, cfg.lo_factor, cfg.hi_factor)
        r = self.transfers.restrict_residual(level, b - st.op.apply(s))
        c = self.v_cycle(r, level - 1)
        s += self.transfers.interpolate(level, c)
        s = chebyshev_smooth(s, st.op, b, st.lambda_max, cfg.nu_post, cfg.lo_factor, cfg.hi_factor)
        return s

    def coarse_solve(self, r0):
        """CG (optionally L-BFGS preconditioned) with recursive spectral shifting."""
        cfg = self.config
        op = self.levels[0].op
        problem = self.problems[0]
        max_iter = cfg.coarse_max_iter or int(problem.free.sum())
        use_qn = cfg.coarse_solver in ("cg-qn", "shifted")
        collector = SecantCollector() if use_qn and self.lbfgs is None else None
        precond = self.lbfgs if use_qn else None
        self.n_coarse_solves += 1

        out = cg_solve(op, r0, precond=precond, tol_abs=cfg.coarse_tol, max_iter=max_iter, collector=collector)
        self.coarse_iterations += out.iterations
        lam_plus = 0.0
        n_shifts = 0
        if cfg.coarse_solver == "shifted":
            while out.status is CgStatus.NEGATIVE_CURVATURE and out.lambda_c < 0.0:
                n_shifts += 1
                if n_shifts > cfg.max_shifts:
                    raise ShiftingError(f"no positive definite shift after {cfg.max_shifts} updates")
                lam_plus = cfg.gamma * min(out.lambda_c, lam_plus)
                self.shift_events.append(ShiftEvent(self.n_setups, self.n_coarse_solves, out.lambda_c, -lam_plus))
                out = cg_solve(
                    op.shifted(-lam_plus),
                    r0,
                    s0=out.solution,
                    precond=precond,
                    tol_abs=cfg.coarse_tol,
                    max_iter=max_iter,
                    collector=collector,
                )
                self.coarse_iterations += out.iterations
        if collector is not None and collector.pairs:
            self.lbfgs = collector.build(cfg.n_pairs)
        return out.solution
