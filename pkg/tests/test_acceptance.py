"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``CRITERION n: PASS|FAIL`` line (also repeated in the
terminal summary). The table-2 suite is run twice through the CLI and shared
by criteria 1, 3 and 6.
"""

import csv
import io
import time

import numpy as np
import pytest

from _fields import central_difference_order, smooth_fields
from conftest import ACCEPTANCE_LINES
from jfnkmg import bench, cli
from jfnkmg.jacobian import JacobianOperator, MatrixOperator
from jfnkmg.krylov import CgStatus, cg_solve
from jfnkmg.metrics import effective_ge
from jfnkmg.problems import QuadraticProblem, make_hierarchy, make_problems
from jfnkmg.smoother import chebyshev_smooth
from jfnkmg.transfer import TransferSet


def report(number, checks):
    """Print the verdict line for one criterion and fail if any check failed."""
    failed = [name for name, ok in checks if not ok]
    line = f"CRITERION {number}: {'PASS' if not failed else 'FAIL'}"
    detail = "; ".join(name for name, _ in checks)
    line += f"  [{detail}]"
    if failed:
        line += "  failed: " + "; ".join(failed)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


@pytest.fixture(scope="module")
def table2(tmp_path_factory):
    d = tmp_path_factory.mktemp("table2")
    paths = [d / "first.csv", d / "second.csv"]
    codes = [cli.main(["suite", "--table", "2", "--seed", "7", "--csv", str(p)]) for p in paths]
    texts = [p.read_bytes() for p in paths]
    rows = list(csv.DictReader(io.StringIO(texts[0].decode())))
    by_key = {(r["problem"], int(r["level"])): r for r in rows}
    return codes, texts, by_key


def test_criterion_1_bratu_mesh_independence(table2):
    _, _, rows = table2
    IN = {L: int(rows[("bratu", L)]["newton_iters"]) for L in (1, 2, 3, 4)}
    K = {L: int(rows[("bratu", L)]["krylov_iters"]) for L in (1, 2, 3, 4)}
    report(1, [
        (f"#IN L1-L4 = {list(IN.values())} all 3", all(v == 3 for v in IN.values())),
        (f"#CG-MG L2-L4 = {[K[2], K[3], K[4]]} in [6, 14]", all(6 <= K[L] <= 14 for L in (2, 3, 4))),
        (f"|K4 - K3| = {abs(K[4] - K[3])} <= 2", abs(K[4] - K[3]) <= 2),
    ])


def test_criterion_2_bratu_ge_plateau(table2):
    _, _, rows = table2
    ge3 = float(rows[("bratu", 3)]["ge_effective"])
    ge4 = float(rows[("bratu", 4)]["ge_effective"])
    cg = {}
    for L in (2, 3, 4):
        rep, rec = bench.run(bench.BenchmarkConfig("bratu", L, "cg", seed=7))
        cg[L] = rec["ge_effective"] if rep.converged else float("nan")
    report(2, [
        (f"GE(L3) = {ge3:.1f} within x2 of 244", 244 / 2 <= ge3 <= 244 * 2),
        (f"GE(L4) = {ge4:.1f} within x2 of 239", 239 / 2 <= ge4 <= 239 * 2),
        (f"GE(L4)/GE(L3) = {ge4 / ge3:.3f} in [0.8, 1.25]", 0.8 <= ge4 / ge3 <= 1.25),
        (f"CG GE L2->L3 growth {cg[3] / cg[2]:.2f} >= 1.7", cg[3] / cg[2] >= 1.7),
        (f"CG GE L3->L4 growth {cg[4] / cg[3]:.2f} >= 1.7", cg[4] / cg[3] >= 1.7),
        (f"CG/CG-MG at L4 = {cg[4] / ge4:.2f} >= 3", cg[4] / ge4 >= 3),
    ])


def test_criterion_3_minimal_surface(table2):
    _, _, rows = table2
    IN = [int(rows[("minsurf", L)]["newton_iters"]) for L in (1, 2, 3, 4)]
    GE = [float(rows[("minsurf", L)]["ge_effective"]) for L in (1, 2, 3, 4)]
    ref_in, ref_ge = [6, 7, 8, 9], [596, 567, 662, 782]
    report(3, [
        (f"#IN = {IN} nondecreasing", all(a <= b for a, b in zip(IN, IN[1:]))),
        ("#IN within 2 of 6, 7, 8, 9", all(abs(a - b) <= 2 for a, b in zip(IN, ref_in))),
        (f"GE = {[round(g, 1) for g in GE]} within x2 of {ref_ge}",
         all(r / 2 <= g <= 2 * r for g, r in zip(GE, ref_ge))),
    ])


def test_criterion_4_hyperelastic_shifting():
    ge, shifts, status = {}, {}, {}
    for variant in ("shifted", "cg-qn", "cg"):
        rep, rec = bench.run(bench.BenchmarkConfig("neohookean", 2, "cg-mg", variant, seed=0))
        ge[variant], shifts[variant], status[variant] = rec["ge_effective"], rec["shifts"], rep.status
    report(4, [
        (f"statuses {status}", all(s == "converged" for s in status.values())),
        (f"GE(shifted) {ge['shifted']:.0f} < GE(CG-QN) {ge['cg-qn']:.0f}", ge["shifted"] < ge["cg-qn"]),
        (f"GE(shifted) < GE(CG) {ge['cg']:.0f}", ge["shifted"] < ge["cg"]),
        (f"GE(CG)/GE(shifted) = {ge['cg'] / ge['shifted']:.1f} >= 10", ge["cg"] / ge["shifted"] >= 10),
        (f"shift events in shifted run = {shifts['shifted']} >= 1", shifts["shifted"] >= 1),
    ])


def _spd(n, rng, lo, hi):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T


def _prop_gradient_order():
    worst = np.inf
    for kind in ("bratu", "minsurf", "neohookean"):
        p = make_problems(kind, make_hierarchy(kind, 2))[-1]
        x, v = smooth_fields(p, np.random.default_rng(3))
        worst = min(worst, central_difference_order(p, x, v)[0])
    return f"a. FD order min {worst:.3f} >= 1.9", worst >= 1.9


def _prop_jvp():
    rng = np.random.default_rng(11)
    A = _spd(30, rng, 0.5, 20.0)
    p = QuadraticProblem(A, rng.standard_normal(30))
    op = JacobianOperator(p, rng.standard_normal(30))
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(30)
        worst = max(worst, np.linalg.norm(op.apply(u) - A @ u) / np.linalg.norm(A @ u))
    return f"b. JVP rel err max {worst:.2e} <= 1e-6", worst <= 1e-6


def _prop_transfer():
    rng = np.random.default_rng(12)
    worst_adj, worst_const = 0.0, 0.0
    for kind, n in (("bratu", 3), ("neohookean", 3)):
        t = TransferSet(make_hierarchy(kind, n))
        for level in range(1, t.n_levels):
            coarse, fine = t.hierarchy[level - 1], t.hierarchy[level]
            for _ in range(100):
                c, r = rng.standard_normal(coarse.n_dofs), rng.standard_normal(fine.n_dofs)
                lhs, rhs = t.interpolate(level, c) @ r, c @ t.restrict_residual(level, r)
                worst_adj = max(worst_adj, abs(lhs - rhs) / max(abs(lhs), 1e-300))
            out = t.project_iterate(level, np.ones(fine.n_dofs)).reshape(coarse.n_nodes, -1)
            interior = ~coarse.boundary_mask()
            if interior.any():
                worst_const = max(worst_const, np.abs(out[interior] - 1.0).max())
    ok = worst_adj <= 1e-12 and worst_const <= 1e-14
    return f"c. adjointness {worst_adj:.1e}, interior constants {worst_const:.1e}", ok


def _prop_chebyshev():
    rng = np.random.default_rng(13)
    worst = 0.0
    for nu in (1, 3, 5, 8):
        lam = rng.uniform(0.5, 5.0)
        a, b = 0.06 * lam, 1.2 * lam
        d = rng.uniform(a, b, 30)
        x_true = rng.standard_normal(30)
        s = chebyshev_smooth(np.zeros(30), MatrixOperator(np.diag(d)), d * x_true, lam, nu)
        T = np.polynomial.Chebyshev.basis(nu)
        oracle = T((b + a - 2 * d) / (b - a)) / T((b + a) / (b - a))
        worst = max(worst, np.abs((x_true - s) / x_true - oracle).max())
    return f"d. Chebyshev envelope err {worst:.1e} <= 1e-10", worst <= 1e-10


def _prop_cg():
    rng = np.random.default_rng(14)
    worst = 0.0
    for _ in range(10):
        A = _spd(50, rng, 1.0, 10.0)
        b = rng.standard_normal(50)
        x_star = np.linalg.solve(A, b)
        out = cg_solve(MatrixOperator(A), b, tol_abs=1e-12 * np.linalg.norm(b), max_iter=50)
        worst = max(worst, np.linalg.norm(out.solution - x_star) / np.linalg.norm(x_star))
    neg_ok = True
    for _ in range(10):
        d = np.concatenate([[-1.0], rng.uniform(0.1, 3.0, 4)])
        b = rng.standard_normal(5)
        b[0] = 3.0 * np.linalg.norm(b[1:]) + 1.0  # first direction already sees negative curvature
        out = cg_solve(MatrixOperator(np.diag(d)), b)
        exact = float(b @ (d * b)) / float(b @ b)
        neg_ok &= out.status is CgStatus.NEGATIVE_CURVATURE and abs(out.lambda_c - exact) <= 1e-14 * abs(exact)
    return f"e. CG vs direct {worst:.1e} <= 1e-8, negative-curvature Rayleigh quotient exact", worst <= 1e-8 and neg_ok


def _prop_ge():
    ok = (
        effective_ge([5], 2) == 5
        and effective_ge([8, 10], 2) == 12
        and effective_ge([64, 8, 1], 3) == 3
    )
    return "f. effective GE examples exact", ok


def test_criterion_5_property_suite():
    t0 = time.perf_counter()
    checks = [f() for f in (_prop_gradient_order, _prop_jvp, _prop_transfer, _prop_chebyshev, _prop_cg, _prop_ge)]
    elapsed = time.perf_counter() - t0
    checks.append((f"runtime {elapsed:.1f} s < 60 s", elapsed < 60.0))
    report(5, checks)


def test_criterion_6_determinism(table2):
    codes, texts, _ = table2
    report(6, [
        (f"suite exit codes {codes}", codes == [0, 0]),
        ("byte-identical CSV", texts[0] == texts[1]),
    ])
