import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from heatframe.components import connect_system, instantiate_components
from heatframe.errors import LocationOutsideDomain, SingularSystem
from heatframe.expr import Affine
from heatframe.frame import FaceSelector, QoISpec
from heatframe.quasi1d import condense_component, condense_fin, condense_wall, evaluate_qoi, solve_quasi1d
from heatframe.template import BCRecord

from builders import pipeline, pipeline_text, wall_chain_statement

SPOON_PORTS = (65.60603624400963, 57.645464575082144, 40.22305403422497)


def solved(name):
    _, t, _, s = pipeline(name)
    return t, s, solve_quasi1d(s, t)


def series_oracle(lengths, ks, h_in, h_out, T_in, T_out):
    """Port temperatures of a layered wall from the series-resistance formula."""
    R = [1.0 / h_in] + [L / k for L, k in zip(lengths, ks)] + [1.0 / h_out]
    q = (T_in - T_out) / sum(R)
    ports = [T_in - q * R[0]]
    for r in R[1:-1]:
        ports.append(ports[-1] - q * r)
    return ports, q


def spoon_oracle(v):
    """Two fin segments, Robin ends, continuity of T and kAT' at x = 0; 4x4 solve."""
    a, b = v["a"], v["b"]
    A, P = a * b, 2 * (a + b)
    k1, k2 = v["k_1"], v["k_2"]
    m1 = math.sqrt(v["h_1^lat"] * P / (k1 * A))
    m2 = math.sqrt(v["h_2^lat"] * P / (k2 * A))
    L1, L2 = v["L_1"], v["L_2"]
    Tl, Ti = v["T_liq"], v["T_inf"]
    hb, ht = v["h_1^bot"], v["h_2^top"]
    # T_head = Tl + c0 cosh(m1 x) + c1 sinh(m1 x); T_handle = Ti + c2 cosh(m2 x) + c3 sinh(m2 x)
    ch1, sh1 = math.cosh(m1 * L1), math.sinh(m1 * L1)
    ch2, sh2 = math.cosh(m2 * L2), math.sinh(m2 * L2)
    M = np.array([
        # k T'(-L1) = hb (T(-L1) - Tl)
        [-k1 * m1 * sh1 - hb * ch1, k1 * m1 * ch1 + hb * sh1, 0, 0],
        # -k T'(L2) = ht (T(L2) - Ti)
        [0, 0, k2 * m2 * sh2 + ht * ch2, k2 * m2 * ch2 + ht * sh2],
        [1, 0, -1, 0],
        [0, k1 * m1, 0, -k2 * m2],
    ])
    rhs = np.array([0.0, 0.0, Ti - Tl, 0.0])
    c = np.linalg.solve(M, rhs)
    T_left = Tl + c[0] * ch1 - c[1] * sh1
    T_mid = Tl + c[0]
    T_right = Ti + c[2] * ch2 + c[3] * sh2
    return T_left, T_mid, T_right


def fvals(t):
    return {k: float(v) for k, v in t.bindings.items()}


# wall elements

def test_pine_wall_element():
    el = condense_wall(0.1, 0.01, 0.1)
    assert np.allclose(el.K, 0.01 * np.array([[1, -1], [-1, 1]]), rtol=0, atol=1e-16)
    assert np.all(el.f == 0)
    assert el.kind == "wall_linear"


def test_long_wall_zero_conductance():
    assert np.abs(condense_wall(1.0, 1.0, 1e12).K).max() < 1e-11


def test_cedar_robin_augmentation():
    t, s, _ = solved("wall-1d")
    cedar = s.components[2]
    el = condense_component(cedar, t.bindings)
    base = condense_wall(0.05, 0.01, 0.05)
    assert el.K[1, 1] - base.K[1, 1] == pytest.approx(1.0, rel=1e-14)
    assert el.K[0, 0] == base.K[0, 0]
    assert el.f[1] == 0.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 500), st.floats(1e-5, 1), st.floats(1e-3, 10))
def test_wall_element_properties(k, A, L):
    K = condense_wall(k, A, L).K
    assert np.array_equal(K, K.T)
    assert np.allclose(K.sum(axis=1), 0.0, atol=1e-12 * np.abs(K).max())
    assert np.linalg.eigvalsh(K).min() >= -1e-12 * np.abs(K).max()


# fin elements

def test_spoon_head_m():
    el = condense_fin(50.0, 2e-5, 0.024, 0.05, 10.0, 90.0)
    assert el.m == pytest.approx(math.sqrt(240.0), rel=1e-14)
    assert el.m * 0.05 == pytest.approx(0.7745966692414834, rel=1e-12)


FIN_CASES = [(50.0, 2e-5, 0.024, 0.05, 10.0, 90.0), (50.0, 2e-5, 0.024, 0.12, 5.0, 23.0),
             (1.0, 1e-4, 0.04, 0.5, 30.0, -4.0), (200.0, 1e-3, 0.2, 0.01, 0.3, 10.0)]


@pytest.mark.parametrize("k, A, P, L, h, T_f", FIN_CASES)
def test_fin_element_against_weak_form_quadrature(k, A, P, L, h, T_f):
    m = math.sqrt(h * P / (k * A))
    phi = [lambda s: math.sinh(m * (L - s)) / math.sinh(m * L), lambda s: math.sinh(m * s) / math.sinh(m * L)]
    dphi = [lambda s: -m * math.cosh(m * (L - s)) / math.sinh(m * L), lambda s: m * math.cosh(m * s) / math.sinh(m * L)]
    K = np.empty((2, 2))
    f = np.empty(2)
    for i in range(2):
        for j in range(2):
            K[i, j] = quad(lambda s: k * A * dphi[i](s) * dphi[j](s) + h * P * phi[i](s) * phi[j](s), 0, L,
                           epsabs=0, epsrel=1e-13)[0]
        f[i] = quad(lambda s: h * P * T_f * phi[i](s), 0, L, epsabs=0, epsrel=1e-13)[0]
    el = condense_fin(k, A, P, L, h, T_f)
    assert np.allclose(el.K, K, rtol=1e-10, atol=0)
    assert np.allclose(el.f, f, rtol=1e-10, atol=0)


def test_fin_particular_part_is_orthogonal():
    # the bubble lift vanishes at the ports and is energy-orthogonal to the port basis
    k, A, P, L, h, T_f = FIN_CASES[0]
    m = math.sqrt(h * P / (k * A))
    Tp = lambda s: T_f * (1 - math.cosh(m * (s - L / 2)) / math.cosh(m * L / 2))
    dTp = lambda s: -T_f * m * math.sinh(m * (s - L / 2)) / math.cosh(m * L / 2)
    phi0 = lambda s: math.sinh(m * (L - s)) / math.sinh(m * L)
    dphi0 = lambda s: -m * math.cosh(m * (L - s)) / math.sinh(m * L)
    xg, wg = np.polynomial.legendre.leggauss(40)
    s = 0.5 * L * (xg + 1)
    a = 0.5 * L * sum(w * (k * A * dTp(x) * dphi0(x) + h * P * Tp(x) * phi0(x)) for x, w in zip(s, wg))
    assert abs(a) < 1e-12 * k * A * m * abs(T_f)
    assert abs(Tp(0)) < 1e-12 and abs(Tp(L)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 400), st.floats(1e-6, 1e-2), st.floats(1e-2, 1), st.floats(1e-3, 1), st.floats(1e-3, 300))
def test_fin_element_symmetric_positive(k, A, P, L, h):
    K = condense_fin(k, A, P, L, h, 1.0).K
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() > 0


def test_fin_zero_h_is_wall():
    el = condense_fin(2.0, 0.01, 0.4, 0.3, 0.0, 50.0)
    assert np.array_equal(el.K, condense_wall(2.0, 0.01, 0.3).K)
    assert np.all(el.f == 0)


def test_fin_limit_to_wall_is_first_order():
    k, A, P, L, T_f = 2.0, 0.01, 0.4, 0.3, 50.0
    Kw = condense_wall(k, A, L).K
    errs = []
    for h in (1e-2, 1e-3, 1e-4, 1e-5):
        el = condense_fin(k, A, P, L, h, T_f)
        load = h * P * L * T_f / 2
        errs.append(max(np.abs(el.K - Kw).max() / np.abs(Kw).max(), np.abs(el.f - load).max() / load))
    for e0, e1 in zip(errs, errs[1:]):
        assert 0.05 < e1 / e0 < 0.15
    assert errs[0] < 1e-2


def test_fin_series_branch_continuous():
    k, A, P, L, T_f = 2.0, 0.01, 0.4, 0.3, 50.0
    m_of = lambda h: math.sqrt(h * P / (k * A)) * L
    h_edge = (1e-6 / L) ** 2 * k * A / P
    lo = condense_fin(k, A, P, L, h_edge * 0.999, T_f)
    hi = condense_fin(k, A, P, L, h_edge * 1.001, T_f)
    assert m_of(h_edge * 0.999) < 1e-6 < m_of(h_edge * 1.001)
    assert np.allclose(lo.K, hi.K, rtol=1e-9, atol=0)
    # the load is linear in h to leading order
    assert np.allclose(lo.f / (h_edge * 0.999), hi.f / (h_edge * 1.001), rtol=1e-9, atol=0)


def test_fin_ambient_equilibrium():
    el = condense_fin(50.0, 2e-5, 0.024, 0.05, 10.0, 90.0)
    u = np.array([90.0, 90.0])
    assert np.abs(el.K @ u - el.f).max() < 1e-12 * np.abs(el.f).max()


def test_fin_large_mL_stable():
    el = condense_fin(1.0, 1e-6, 1.0, 10.0, 1e3, 5.0)
    assert np.all(np.isfinite(el.K)) and np.all(np.isfinite(el.f))
    mu = 1.0 * 1e-6 * el.m
    assert el.K[0, 0] == pytest.approx(mu) and abs(el.K[0, 1]) < 1e-300 + 1e-20 * mu


# assembled solutions

def test_wall1d_ports_series_oracle():
    t, s, sol = solved("wall-1d")
    v = fvals(t)
    ports, q = series_oracle([v["L_f"], v["L_p"], v["L_c"]], [v["k_f"], v["k_p"], v["k_c"]],
                             v["h_in"], v["h_out"], v["T_in"], v["T_out"])
    assert q == pytest.approx(23 / 2.36, rel=1e-14)
    got = [sol.port_values[d] for d in range(4)]
    assert np.allclose(got, ports, rtol=1e-10, atol=0)
    assert np.allclose(got, [22.0254, 19.5890, 9.8432, 0.0975], atol=5e-5)
    assert sol.residual <= 1e-10


def test_wall1d_slopes():
    t, s, sol = solved("wall-1d")
    q = 23 / 2.36
    for seg, k in zip(sol.segments, (0.2, 0.1, 0.05)):
        assert float(seg.dT(seg.x0)) == pytest.approx(-q / k, rel=1e-10)


def test_spoon_ports_fin_oracle():
    t, s, sol = solved("spoon")
    oracle = spoon_oracle(fvals(t))
    got = [sol.port_values[d] for d in range(3)]
    assert np.allclose(got, oracle, rtol=1e-8, atol=0)
    assert np.allclose(got, SPOON_PORTS, rtol=1e-10, atol=0)


def test_spoon_handle_end_matches_port():
    t, s, sol = solved("spoon")
    handle = sol.segments[1]
    assert float(handle.T(handle.x1)) == sol.port_values[2]
    assert float(sol.segments[0].T(sol.segments[0].x1)) == pytest.approx(float(handle.T(handle.x0)), rel=1e-14)


@pytest.mark.parametrize("name", ["wall-1d", "spoon"])
def test_strong_form_residual(name):
    t, s, sol = solved(name)
    for seg in sol.segments:
        x = np.linspace(seg.x0, seg.x1, 50)
        T = np.asarray(seg.T(x))
        if seg.kind != "fin":
            # affine: second difference vanishes
            assert np.abs(np.diff(T, 2)).max() <= 1e-12 * np.abs(T).max()
            continue
        c = seg.coefficients()
        sm = c["m"] * (x - c["x0"])
        T_closed = c["T_f"] + c["c1"] * np.sinh(sm) + c["c2"] * np.cosh(sm)
        d2 = c["m"] ** 2 * (c["c1"] * np.sinh(sm) + c["c2"] * np.cosh(sm))
        assert np.allclose(T_closed, T, rtol=1e-12, atol=0)
        res = seg.k * seg.A * d2 - seg.h * seg.P * (T - seg.T_f)
        assert np.abs(res).max() <= 1e-8 * np.abs(seg.h * seg.P * (T - seg.T_f)).max()


@pytest.mark.parametrize("name", ["wall-1d", "spoon"])
def test_energy_conservation(name):
    _, _, sol = solved(name)
    rates = sol.boundary_rates
    scale = max(abs(v) for v in rates.values())
    assert abs(sum(rates.values())) <= 1e-9 * scale


@pytest.mark.parametrize("name, lo, hi", [("wall-1d", "T_out", "T_in"), ("spoon", "T_inf", "T_liq")])
def test_maximum_principle(name, lo, hi):
    t, _, sol = solved(name)
    T = np.concatenate([s["T"] for s in sol.samples()])
    assert float(t.value(lo)) <= T.min() and T.max() <= float(t.value(hi))


def test_wall1d_qois():
    t, _, sol = solved("wall-1d")
    q = 23 / 2.36
    at = QoISpec("temperature_at_point", coord="x", location=Affine.symbol("L_f"))
    assert evaluate_qoi(sol, at, t) == pytest.approx(19.5890, abs=5e-5)
    x0 = FaceSelector("plane", "x", Affine.constant(0))
    # outward-positive: heat enters the wall at x = 0
    rate = evaluate_qoi(sol, QoISpec("heat_rate_at_face", face=x0), t)
    assert rate == pytest.approx(-q * 0.01, rel=1e-10)
    assert rate == pytest.approx(-0.0974576, abs=1e-7)
    assert evaluate_qoi(sol, QoISpec("flux_at_face", face=x0), t) == pytest.approx(-q, rel=1e-10)
    right = FaceSelector("plane", "x", Affine.constant(Fraction(1, 5)))
    assert evaluate_qoi(sol, QoISpec("heat_rate_at_face", face=right), t) == pytest.approx(q * 0.01, rel=1e-10)


def test_location_outside_domain():
    t, _, sol = solved("wall-1d")
    with pytest.raises(LocationOutsideDomain):
        evaluate_qoi(sol, QoISpec("temperature_at_point", coord="x", location=Affine.constant(1)), t)
    with pytest.raises(LocationOutsideDomain):
        sol.T(-0.01)


def test_field_plot_samples():
    t, _, sol = solved("wall-1d")
    (spec, value), = sol.qoi_results
    assert spec.kind == "temperature_field_plot"
    assert [len(s["x"]) for s in value] == [200, 200, 200]


def test_insulated_end_has_zero_flux():
    text = wall_chain_statement(["0.05", "0.1"], ["0.2", "0.1"], h_out="0")
    _, t, _, s = pipeline_text(text)
    sol = solve_quasi1d(s, t)
    assert np.allclose(list(sol.port_values.values()), 23.0, rtol=1e-12)
    end = FaceSelector("plane", "x", Affine.constant(Fraction(3, 20)))
    assert abs(evaluate_qoi(sol, QoISpec("flux_at_face", face=end), t)) < 1e-10


def test_symmetric_ambient_gives_constant_field():
    text = wall_chain_statement(["0.05", "0.1", "0.05"], ["0.2", "0.1", "0.05"], T_in="7", T_out="7")
    _, t, _, s = pipeline_text(text)
    sol = solve_quasi1d(s, t)
    assert np.allclose(list(sol.port_values.values()), 7.0, rtol=1e-12)


def test_spoon_equal_fluids_constant_field():
    _, t, _, s = pipeline("spoon")
    t2 = dataclasses.replace(t, bindings={**t.bindings, "T_liq": Fraction(23)})
    s2 = connect_system(instantiate_components(t2), [(a.name, b.name) for a, b in zip(s.components, s.components[1:])])
    sol = solve_quasi1d(s2, t2)
    T = np.concatenate([x["T"] for x in sol.samples()])
    assert np.allclose(T, 23.0, rtol=1e-12, atol=0)


def test_unanchored_is_singular():
    _, t, _, s = pipeline("wall-1d")
    bc = {k: (BCRecord("insulated") if r.kind == "robin" else r) for k, r in t.bc_map.items()}
    t2 = dataclasses.replace(t, bc_map=bc)
    s2 = connect_system(instantiate_components(t2), [("fir layer", "pine layer"), ("pine layer", "cedar layer")])
    with pytest.raises(SingularSystem):
        solve_quasi1d(s2, t2)


LENGTHS = st.sampled_from(["0.01", "0.02", "0.05", "0.1", "0.25"])
KS = st.sampled_from(["0.05", "0.1", "0.2", "1", "50"])
HS = st.sampled_from(["1", "10", "100", "2.5"])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(st.lists(LENGTHS, min_size=n, max_size=n),
                                                     st.lists(KS, min_size=n, max_size=n))), HS, HS)
def test_random_chains_series_oracle(chain, h_in, h_out):
    lengths, ks = chain
    _, t, _, s = pipeline_text(wall_chain_statement(lengths, ks, h_in=h_in, h_out=h_out))
    sol = solve_quasi1d(s, t)
    ports, _ = series_oracle([float(x) for x in lengths], [float(x) for x in ks], float(h_in), float(h_out), 23.0, 0.0)
    got = [sol.port_values[d] for d in range(len(lengths) + 1)]
    assert np.allclose(got, ports, rtol=1e-10, atol=1e-12)
    rates = sol.boundary_rates
    assert abs(sum(rates.values())) <= 1e-9 * max(abs(v) for v in rates.values())
    T = np.concatenate([x["T"] for x in sol.samples(20)])
    assert 0.0 <= T.min() and T.max() <= 23.0
