"""Acceptance suite: one PASS/FAIL line per criterion.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, which
repeats the lines in its terminal summary.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from heatframe.cli import run
from heatframe.fem import estimate_error_two_level, problem_from_system, run_adaptive, solve_fe
from heatframe.fem.manufactured import error_norms, manufactured_problem
from heatframe.genwall import check_ordering, compute_bounds
from heatframe.quasi1d import solve_quasi1d
from heatframe.report import dumps
from heatframe.template import compute_biot

sys.path.insert(0, str(Path(__file__).parent))
from builders import FIXTURES, fixture_path, pipeline_text, fixture_text  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
RESULTS: list[str] = []
CRITERIA = []


def criterion(title):
    def wrap(fn):
        CRITERIA.append((len(CRITERIA) + 1, title, fn))
        return fn
    return wrap


def rel(a, b):
    return abs(a - b) / abs(b)


def solved(name):
    _, t, cls, s = pipeline_text(fixture_text(name), name)
    return t, cls, s


@criterion("corpus parses to 3/2/4 components, each under 5 s")
def c1():
    want = {"wall-1d": 3, "spoon": 2, "wall-3d": 4}
    parts = []
    ok = True
    for name in FIXTURES:
        t0 = time.perf_counter()
        res = run(fixture_path(name))
        dt = time.perf_counter() - t0
        n = len(res.report["parse"]["components"]) if res.exit_code == 0 else -1
        ok &= n == want[name] and dt < 5.0
        parts.append(f"{name}={n} ({dt:.2f}s)")
    return ok, ", ".join(parts)


@criterion("wall-1d ports match the series-resistance oracle to 1e-9")
def c2():
    t, _, s = solved("wall-1d")
    sol = solve_quasi1d(s, t)
    # R'' = 1/10 + 0.05/0.2 + 0.1/0.1 + 0.05/0.05 + 1/100 = 2.36
    q = 23 / 2.36
    oracle = [23 - q / 10]
    for L, k in ((0.05, 0.2), (0.1, 0.1), (0.05, 0.05)):
        oracle.append(oracle[-1] - q * L / k)
    got = [sol.port_values[d] for d in range(4)]
    err = max(rel(g, o) for g, o in zip(got, oracle))
    stated = np.allclose(got, [22.0254, 19.5890, 9.8432, 0.0975], atol=5e-5)
    return err <= 1e-9 and stated, f"max rel err {err:.2e}, T = {[round(g, 4) for g in got]}"


def two_fin_oracle(v):
    a, b = v["a"], v["b"]
    A, P = a * b, 2 * (a + b)
    k1, k2, L1, L2 = v["k_1"], v["k_2"], v["L_1"], v["L_2"]
    m1 = math.sqrt(v["h_1^lat"] * P / (k1 * A))
    m2 = math.sqrt(v["h_2^lat"] * P / (k2 * A))
    hb, ht, Tl, Ti = v["h_1^bot"], v["h_2^top"], v["T_liq"], v["T_inf"]
    ch1, sh1, ch2, sh2 = math.cosh(m1 * L1), math.sinh(m1 * L1), math.cosh(m2 * L2), math.sinh(m2 * L2)
    # head: Tl + c0 cosh(m1 x) + c1 sinh(m1 x) on (-L1, 0); handle: Ti + c2 cosh(m2 x) + c3 sinh(m2 x) on (0, L2)
    M = np.array([[-k1 * m1 * sh1 - hb * ch1, k1 * m1 * ch1 + hb * sh1, 0, 0],
                  [0, 0, k2 * m2 * sh2 + ht * ch2, k2 * m2 * ch2 + ht * sh2],
                  [1, 0, -1, 0],
                  [0, k1 * m1, 0, -k2 * m2]])
    c = np.linalg.solve(M, [0.0, 0.0, Ti - Tl, 0.0])
    return [Tl + c[0] * ch1 - c[1] * sh1, Tl + c[0], Ti + c[2] * ch2 + c[3] * sh2]


@criterion("spoon Biot 1.6667e-4 +/- 1e-8 and 'small'; ports match the two-fin oracle to 1e-8")
def c3():
    t, cls, s = solved("spoon")
    bi = compute_biot(t).value
    verdict = cls.meta()["bi_gate"]
    sol = solve_quasi1d(s, t)
    oracle = two_fin_oracle({k: float(v) for k, v in t.bindings.items()})
    err = max(rel(sol.port_values[d], o) for d, o in enumerate(oracle))
    ok = abs(bi - 1.6667e-4) <= 1e-8 and verdict == "small" and err <= 1e-8
    return ok, f"Bi = {bi:.6e} ({verdict}), max rel port err {err:.2e}"


# superconductor cut: 1/(h_in A1) + L/(k A1) + L/(k A3) + 1/(h_out A3) = 10 + 10 + 10/3 + 1/3
H_UB_ORACLE = (23 / (10 + 10 + 11 / 3)) / (0.5 * 23 * 0.1)
# insulator cut: only the brick 1-2 strip carries heat, 10 + 10 + 10 + 1
H_LB_ORACLE = (23 / 31) / (0.5 * 23 * 0.1)


@criterion("wall-3d bounds match the cut oracles to 1e-9, H_LB <= H_UB")
def c4():
    t, cls, s = solved("wall-3d")
    b = compute_bounds(s, t, cls)
    e_lb, e_ub = rel(b.H_LB, H_LB_ORACLE), rel(b.H_UB, H_UB_ORACLE)
    ok = e_lb <= 1e-9 and e_ub <= 1e-9 and b.H_LB <= b.H_UB
    return ok, f"H_LB = {b.H_LB:.9f} (err {e_lb:.1e}), H_UB = {b.H_UB:.9f} (err {e_ub:.1e})"


@criterion("adaptive FE at tol 1e-3: under 2e5 dofs, under 60 s, H_LB - eps <= H_FE <= H_UB + eps")
def c5():
    t, cls, s = solved("wall-3d")
    b = compute_bounds(s, t, cls)
    t0 = time.perf_counter()
    sol = run_adaptive(problem_from_system(s, t, b.constants), tol_qoi=1e-3)
    dt = time.perf_counter() - t0
    b.H_FE, b.fe_error_estimate = sol.qoi_value, sol.qoi_error_estimate
    eps = sol.qoi_error_estimate
    ok = sol.converged and sol.n_dofs < 200_000 and dt < 60 and b.H_LB - eps <= sol.qoi_value <= b.H_UB + eps
    ok &= check_ordering(b).ok
    return ok, f"H_FE = {sol.qoi_value:.6f} +/- {eps:.1e}, {sol.n_dofs} dofs, {dt:.2f}s"


@criterion("manufactured Robin problem: rates 1.0/2.0 +/- 0.2 over 4 refinements, effectivity in [0.3, 3]")
def c6():
    prob = manufactured_problem(4)
    m, errs, effs = prob.mesh, [], []
    for _ in range(5):
        u, _, _ = solve_fe(m, prob)
        est = estimate_error_two_level(m, u, prob)
        e, l2 = error_norms(m, u)
        errs.append((e, l2))
        effs.append(est.energy / e)
        m = est.fine.mesh
    errs = np.array(errs)
    rates = np.log2(errs[:-1] / errs[1:])
    ok = bool(np.all(np.abs(rates[:, 0] - 1) <= 0.2) and np.all(np.abs(rates[:, 1] - 2) <= 0.2))
    ok &= all(0.3 <= x <= 3 for x in effs)
    return ok, (f"energy rates {np.round(rates[:, 0], 3).tolist()}, L2 rates {np.round(rates[:, 1], 3).tolist()}, "
                f"effectivity {min(effs):.3f}..{max(effs):.3f}")


PROPERTY_TESTS = [
    "tests/test_parser.py::test_component_rule",
    "tests/test_parser.py::test_attributes_grow_monotonically",
    "tests/test_parser.py::test_domains_tile_without_overlap",
    "tests/test_fem.py::test_wall3d_mesh_tiles_union",
    "tests/test_quasi1d.py::test_energy_conservation",
    "tests/test_quasi1d.py::test_fin_limit_to_wall_is_first_order",
    "tests/test_quasi1d.py::test_fin_series_branch_continuous",
    "tests/test_genwall.py::test_splitting_parts_never_raises_upper_bound",
    "tests/test_fem.py::test_nvb_ten_generations",
    "tests/test_fem.py::test_adapt_nvb_ten_generations",
]


@criterion("property suites green")
def c7():
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
                          cwd=ROOT, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    return proc.returncode == 0, tail


def corpus_bytes():
    out = {}
    for name in FIXTURES:
        res = run(fixture_path(name), fe=name == "wall-3d")
        out[name] = (dumps(res.report).encode(), dict(res.figures), dict(res.data))
    return out


@criterion("two runs of the corpus give byte-identical reports")
def c8():
    a, b = corpus_bytes(), corpus_bytes()
    same = [n for n in FIXTURES if a[n] == b[n]]
    return len(same) == len(FIXTURES), f"identical: {', '.join(same)}"


def evaluate(n, title, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported like one
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"{'PASS' if ok else 'FAIL'}  [{n}] {title}: {detail}"
    print(line)
    RESULTS.append(line)
    return ok


@pytest.mark.parametrize("n, title, fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(n, title, fn):
    assert evaluate(n, title, fn)


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
