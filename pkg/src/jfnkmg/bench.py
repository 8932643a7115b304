"""Benchmark runs, reference tables and report comparison."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

from .metrics import effective_ge
from .multigrid import COARSE_VARIANTS, MgConfig
from .newton import STRATEGIES, NewtonConfig, newton_solve
from .problems import PROBLEM_KINDS, make_hierarchy, make_problems
from .transfer import TransferSet

__all__ = [
    "BenchmarkConfig",
    "TolerancePolicy",
    "Verdict",
    "REFERENCE_GE",
    "REFERENCE_ITERATIONS",
    "REFERENCE_COARSE",
    "CSV_COLUMNS",
    "effective_ge",
    "run",
    "compare",
    "reference_for",
    "suite_configs",
    "records_to_csv",
]

# total gradient evaluations: (problem, level) -> {strategy: GE}
REFERENCE_GE = {
    ("bratu", 1): {"cg": 176, "cg-qn": 107, "cg-mg": 264},
    ("bratu", 2): {"cg": 367, "cg-qn": 233, "cg-mg": 253},
    ("bratu", 3): {"cg": 767, "cg-qn": 476, "cg-mg": 244},
    ("bratu", 4): {"cg": 1582, "cg-qn": 1097, "cg-mg": 239},
    ("bratu", 5): {"cg": 3377, "cg-qn": 2345, "cg-mg": 238},
    ("minsurf", 1): {"cg": 360, "cg-qn": 229, "cg-mg": 596},
    ("minsurf", 2): {"cg": 835, "cg-qn": 501, "cg-mg": 567},
    ("minsurf", 3): {"cg": 2009, "cg-qn": 1170, "cg-mg": 662},
    ("minsurf", 4): {"cg": 3544, "cg-qn": 2201, "cg-mg": 782},
    ("minsurf", 5): {"cg": 6154, "cg-qn": 4316, "cg-mg": 931},
    ("neohookean", 1): {"cg": 467, "cg-qn": 546, "cg-mg": 868},
    ("neohookean", 2): {"cg": 626, "cg-qn": 655, "cg-mg": 372},
    ("neohookean", 3): {"cg": 1349, "cg-qn": 1464, "cg-mg": 426},
    ("neohookean", 4): {"cg": 1971, "cg-qn": 1954, "cg-mg": 733},
}

# CG-MG runs: (problem, level) -> (newton iterations, krylov iterations, AGE)
REFERENCE_ITERATIONS = {
    ("bratu", 1): (3, 7, 39.32),
    ("bratu", 2): (3, 9, 28.25),
    ("bratu", 3): (3, 9, 27.10),
    ("bratu", 4): (3, 9, 26.61),
    ("bratu", 5): (3, 9, 26.53),
    ("minsurf", 1): (6, 13, 45.85),
    ("minsurf", 2): (7, 18, 31.51),
    ("minsurf", 3): (8, 25, 26.50),
    ("minsurf", 4): (9, 32, 24.45),
    ("minsurf", 5): (9, 41, 22.79),
    ("neohookean", 1): (9, 28, 34.66),
    ("neohookean", 2): (5, 15, 25.12),
    ("neohookean", 3): (5, 20, 20.95),
    ("neohookean", 4): (5, 39, 18.76),
}

# hyperelasticity coarse-solver study: (level, coarse variant) -> (IN, krylov, GE)
REFERENCE_COARSE = {
    (1, "cg"): (9, 3010, 51094),
    (1, "cg-qn"): (9, 130, 2057),
    (1, "shifted"): (9, 28, 868),
    (2, "cg"): (5, 16, 44866),
    (2, "cg-qn"): (5, 1017, 14814),
    (2, "shifted"): (5, 15, 372),
    (3, "cg"): (5, 21, 1265),
    (3, "cg-qn"): (5, 26, 512),
    (3, "shifted"): (5, 20, 426),
    (4, "cg"): (6, 39, 733),
    (4, "cg-qn"): (6, 39, 733),
    (4, "shifted"): (5, 39, 733),
}

CSV_COLUMNS = (
    "problem",
    "level",
    "strategy",
    "coarse_variant",
    "n_dofs",
    "newton_iters",
    "krylov_iters",
    "ge_effective",
    "age",
    "shifts",
    "wall_seconds",
    "status",
)


@dataclass
class BenchmarkConfig:
    problem: str
    level: int
    strategy: str = "cg-mg"
    coarse: str = "shifted"
    seed: int = 0
    nu_pre: int = 5
    nu_post: int = 5
    gamma: float = 5.0
    n_pairs: int = 20
    abs_tol: float = 1e-6
    coarse_tol: float = 1e-12
    max_newton: int = 100

    def __post_init__(self):
        if self.problem not in PROBLEM_KINDS:
            raise ValueError(f"problem must be one of {PROBLEM_KINDS}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.coarse not in COARSE_VARIANTS:
            raise ValueError(f"coarse variant must be one of {COARSE_VARIANTS}")
        if not 1 <= self.level <= 5:
            raise ValueError("level must be in 1..5")
        if self.problem == "neohookean" and self.level == 5:
            raise ValueError("hyperelasticity is not offered at L5")
        if self.n_pairs < 0 or self.gamma < 1 or self.nu_pre < 0 or self.nu_post < 0:
            raise ValueError("override out of range")

    def newton_config(self) -> NewtonConfig:
        mg = MgConfig(
            nu_pre=self.nu_pre,
            nu_post=self.nu_post,
            gamma=self.gamma,
            coarse_solver=self.coarse,
            coarse_tol=self.coarse_tol,
            n_pairs=self.n_pairs,
            seed=self.seed,
        )
        return NewtonConfig(
            abs_tol=self.abs_tol,
            max_iter=self.max_newton,
            strategy=self.strategy,
            n_pairs=self.n_pairs,
            mg=mg,
        )


def run(config: BenchmarkConfig, timing: bool = False):
    """Build the benchmark, solve it, and return ``(report, record)``.

    ``record`` is a JSON-ready dict. Wall time is included only with
    ``timing=True`` so that records are reproducible byte for byte.
    """
    n_levels = config.level + 1 if config.strategy == "cg-mg" else 1
    hierarchy = make_hierarchy(config.problem, config.level + 1)
    levels = hierarchy.levels[-n_levels:]
    problems = make_problems(config.problem, hierarchy)[-n_levels:]
    transfers = TransferSet(hierarchy) if n_levels > 1 else None
    t0 = time.perf_counter()
    _, report = newton_solve(problems, transfers, config.newton_config())
    wall = time.perf_counter() - t0

    ge = effective_ge(report.gradient_evals, hierarchy.dimension)
    record = {
        "config": asdict(config),
        "problem": config.problem,
        "level": config.level,
        "strategy": config.strategy,
        "coarse_variant": config.coarse if config.strategy == "cg-mg" else "",
        "n_dofs": int(problems[-1].n_dofs),
        "n_free_dofs": int(problems[-1].free.sum()),
        "n_levels": n_levels,
        "dimension": hierarchy.dimension,
        "status": report.status,
        "newton_iters": report.newton_iterations,
        "krylov_iters": report.total_krylov,
        "krylov_per_newton": list(report.krylov_iterations),
        "krylov_status": list(report.krylov_status),
        "ge_per_level": [int(g) for g in report.gradient_evals],
        "ge_effective": ge,
        "age": ge / report.total_krylov if report.total_krylov else None,
        "shifts": len(report.shift_events),
        "shift_events": report.shift_events,
        "residual_norms": report.residual_norms,
        "step_lengths": report.step_lengths,
        "flipped_directions": report.flipped_directions,
        "wall_seconds": wall if timing else None,
        "mesh_levels": [{"level": m.level_index, "nodes": m.n_nodes, "elements": m.n_elements} for m in levels],
    }
    return report, record


def record_to_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


@dataclass(frozen=True)
class TolerancePolicy:
    newton_abs: int = 1
    krylov_factor: float = 1.5
    ge_factor: float = 2.0
    age_factor: float = 2.0


@dataclass
class Verdict:
    metric: str
    measured: float
    reference: float | None
    verdict: str
    ratio: float | None = None

    def line(self) -> str:
        if self.reference is None:
            return f"{self.metric:<14} measured {self.measured:>10.4g}  no reference"
        return (
            f"{self.metric:<14} measured {self.measured:>10.4g}  reference {self.reference:>10.4g}  "
            f"ratio {self.ratio:.2f}  {self.verdict}"
        )


def reference_for(problem: str, level: int, strategy: str, coarse: str = "shifted") -> dict:
    """Published values for one configuration; empty when there are none."""
    ref = {}
    if strategy != "cg-mg":
        ge = REFERENCE_GE.get((problem, level), {}).get(strategy)
        if ge is not None:
            ref["ge_effective"] = ge
        return ref
    if coarse == "shifted":
        ge = REFERENCE_GE.get((problem, level), {}).get("cg-mg")
        if ge is not None:
            ref["ge_effective"] = ge
        it = REFERENCE_ITERATIONS.get((problem, level))
        if it is not None:
            ref["newton_iters"], ref["krylov_iters"], ref["age"] = it
        return ref
    if problem == "neohookean" and (level, coarse) in REFERENCE_COARSE:
        ref["newton_iters"], ref["krylov_iters"], ref["ge_effective"] = REFERENCE_COARSE[(level, coarse)]
    return ref


def _band_verdict(ratio, factor):
    lo, hi = 1.0 / factor, factor
    if lo <= ratio <= hi:
        return "PASS"
    if lo / factor <= ratio <= hi * factor:
        return "WARN"
    return "FAIL"


def compare(record: dict, policy: TolerancePolicy | None = None, reference: dict | None = None) -> list:
    """Compare a run record against the published tables.

    Newton counts pass within ``policy.newton_abs``; Krylov counts, GE and AGE
    pass within a multiplicative band. Outside the band a metric is a WARN up
    to the squared band, FAIL beyond.
    """
    policy = policy or TolerancePolicy()
    if reference is None:
        reference = reference_for(record["problem"], record["level"], record["strategy"], record.get("coarse_variant") or "shifted")
    if not reference:
        return [Verdict("all", float("nan"), None, "NO_REFERENCE")]
    out = []
    for metric in ("newton_iters", "krylov_iters", "ge_effective", "age"):
        if metric not in reference:
            continue
        meas = record.get(metric)
        ref = float(reference[metric])
        if meas is None:
            out.append(Verdict(metric, float("nan"), ref, "FAIL"))
            continue
        meas = float(meas)
        ratio = meas / ref if ref else float("inf")
        if metric == "newton_iters":
            diff = abs(meas - ref)
            v = "PASS" if diff <= policy.newton_abs else ("WARN" if diff <= 3 * policy.newton_abs else "FAIL")
        else:
            factor = {"krylov_iters": policy.krylov_factor, "ge_effective": policy.ge_factor, "age": policy.age_factor}[metric]
            v = _band_verdict(ratio, factor)
        out.append(Verdict(metric, meas, ref, v, ratio))
    return out


def suite_configs(table: int, seed: int = 0, levels=None, include_l5: bool = False) -> list:
    """All configurations behind one published table, in table order."""
    if levels is None:
        levels = [1, 2, 3, 4, 5] if include_l5 else [1, 2, 3, 4]
    cfgs = []
    if table == 1:
        for problem in PROBLEM_KINDS:
            for level in levels:
                if problem == "neohookean" and level == 5:
                    continue
                for strategy in STRATEGIES:
                    cfgs.append(BenchmarkConfig(problem, level, strategy, seed=seed))
    elif table == 2:
        for problem in PROBLEM_KINDS:
            for level in levels:
                if problem == "neohookean" and level == 5:
                    continue
                cfgs.append(BenchmarkConfig(problem, level, "cg-mg", seed=seed))
    elif table == 3:
        for level in levels:
            if level == 5:
                continue
            for coarse in COARSE_VARIANTS:
                cfgs.append(BenchmarkConfig("neohookean", level, "cg-mg", coarse, seed=seed))
    else:
        raise ValueError("table must be 1, 2 or 3")
    return cfgs
