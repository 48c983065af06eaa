import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlearn.eth import (
    GOE_R,
    POISSON_R,
    EthError,
    ThermalContext,
    Window,
    a_d_vector,
    a_h,
    beta_of_energy,
    central_slice,
    connected_correlator,
    decompose_a,
    diagonal_eth_deviations,
    effective_rank,
    energy_window,
    f_constant,
    fejer_integral,
    gc_autocorr,
    ghz_qfi_demo,
    goe_levels,
    level_stats,
    low_rank_build,
    low_rank_search,
    microcanonical_deviation,
    product_plus,
    r_ratio,
    rank_formula,
    reflection_isometries,
    reflection_sectors,
    sector_contexts,
    thermal_derivative,
    thermal_derivative_fd,
    thermal_expect,
)
from hamlearn.models import mixed_field_ising, random_model, site_sum_matrix
from hamlearn.pauli import HamiltonianModel, PauliString
from hamlearn.sim import build_dense, ghz_vector

from strategies import seeds

Z1 = PauliString("Z")


@pytest.fixture(scope="module")
def z_ctx():
    return ThermalContext.from_model(HamiltonianModel.from_strings(["Z"], [1.0]))


@pytest.fixture(scope="module")
def chain8():
    h = mixed_field_ising(8)
    return h, ThermalContext.from_model(h)


def test_thermal_expect_examples(z_ctx, rng):
    assert thermal_expect(z_ctx, Z1, 1.0) == pytest.approx(-math.tanh(1.0), abs=1e-12)
    assert thermal_expect(z_ctx, PauliString("X"), 0.7) == pytest.approx(0.0, abs=1e-14)
    h = random_model(3, 4, rng)
    ctx = ThermalContext.from_model(h)
    for p in h.terms:
        assert thermal_expect(ctx, p, 0.0) == pytest.approx(0.0, abs=1e-12)
    # no overflow at the edge of the supported range
    assert thermal_expect(z_ctx, Z1, 700.0) == pytest.approx(-1.0)
    assert thermal_expect(z_ctx, Z1, -700.0) == pytest.approx(1.0)


def test_ground_state_limit():
    h = HamiltonianModel.from_strings(["ZI", "IZ", "XX"], [1.0, 0.6, 0.3])
    ctx = ThermalContext.from_model(h)
    assert ctx.energies[1] - ctx.energies[0] >= 0.5
    for p in h.terms:
        assert thermal_expect(ctx, p, 50.0) == pytest.approx(ctx.diagonal(p)[0], abs=1e-6)


def test_beta_of_energy(z_ctx, chain8):
    assert beta_of_energy(z_ctx, -math.tanh(1.0)) == pytest.approx(1.0, abs=1e-6)
    _, ctx = chain8
    mean = float(ctx.energies.mean())
    assert beta_of_energy(ctx, mean) == pytest.approx(0.0, abs=1e-8)
    assert beta_of_energy(ctx, mean + 0.5) < 0
    for b in (-0.3, 0.2, 1.1):
        assert beta_of_energy(ctx, ctx.energy(b)) == pytest.approx(b, abs=1e-6)
    with pytest.raises(EthError):
        beta_of_energy(z_ctx, -1.5)


def test_connected_correlator_examples(z_ctx, chain8):
    assert connected_correlator(z_ctx, [Z1, Z1], 0.0) == pytest.approx(1.0)
    eye = np.eye(2)
    assert connected_correlator(z_ctx, [Z1, eye, Z1], 0.4) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EthError):
        connected_correlator(z_ctx, [Z1] * 5, 0.0)
    h, ctx = chain8
    a, b = h.terms[0], h.terms[3]
    beta = 0.3
    cov = thermal_expect(ctx, ctx.sd.W @ ctx.matrix(a) @ ctx.matrix(b) @ ctx.sd.W.conj().T, beta)
    cov -= thermal_expect(ctx, a, beta) * thermal_expect(ctx, b, beta)
    assert connected_correlator(ctx, [a, b], beta) == pytest.approx(cov, abs=1e-12)


def test_thermal_derivative_examples(z_ctx):
    assert thermal_derivative(z_ctx, Z1, 0.0, 1) == pytest.approx(-1.0)
    assert thermal_derivative(z_ctx, Z1, 0.0, 2) == pytest.approx(0.0, abs=1e-14)
    # d^3/db^3 (-tanh b) at 0 is 2
    assert thermal_derivative(z_ctx, Z1, 0.0, 3) == pytest.approx(2.0)
    assert thermal_derivative(z_ctx, Z1, 0.5, 0) == pytest.approx(-math.tanh(0.5))
    with pytest.raises(EthError):
        thermal_derivative(z_ctx, Z1, 0.0, 4)


def test_derivative_matches_correlator(chain8):
    h, ctx = chain8
    hd = build_dense(h)
    for p in h.terms[:4]:
        assert thermal_derivative(ctx, p, 0.4, 1) == pytest.approx(
            -connected_correlator(ctx, [p, hd], 0.4), rel=1e-9, abs=1e-12
        )
        assert thermal_derivative(ctx, p, 0.4, 2) == pytest.approx(
            -connected_correlator(ctx, [p, hd, hd], 0.4), rel=1e-8, abs=1e-10
        )


@pytest.mark.parametrize("n", [1, 2, 3])
def test_derivative_finite_difference(chain8, n):
    h, ctx = chain8
    for p in h.terms:
        for beta in (-0.2, 0.25, 0.6):
            exact = thermal_derivative(ctx, p, beta, n)
            fd = thermal_derivative_fd(ctx, p, beta, n, h=1e-4 if n < 3 else 1e-3)
            assert abs(fd - exact) <= 1e-4 * max(abs(exact), 1e-2)


def test_gc_examples(chain8):
    h, ctx = chain8
    v = h.terms[2]
    i = ctx.dim // 2
    curve = gc_autocorr(ctx, v, i, [0.0, 1.0, 2.0])
    vm = ctx.matrix(v)
    expected = float(np.real((vm @ vm)[i, i] - vm[i, i] ** 2))
    assert curve.values[0] == pytest.approx(expected, abs=1e-12) and curve.values[0] >= 0
    z_model = HamiltonianModel.from_strings(["ZI", "IZ"], [0.3, 0.8])
    zc = ThermalContext.from_model(z_model)
    flat = gc_autocorr(zc, PauliString("ZZ"), 1, np.linspace(0, 5, 11))
    assert np.allclose(flat.values, 0.0) and np.allclose(flat.running_avg, 0.0)
    with pytest.raises(EthError):
        gc_autocorr(zc, PauliString("ZZ"), 4, [0.0])


def test_fejer_and_f_quadrature(chain8):
    w = np.array([0.0, 0.3, 2.0])
    t = 4.0
    s = np.linspace(-t, t, 20001)
    num = [np.trapezoid((1 - np.abs(s) / t) * np.cos(x * s), s) for x in w]
    assert np.allclose(fejer_integral(w, t), num, atol=1e-6)
    h, ctx = chain8
    win = energy_window(ctx, 0.1, 0.3)
    op = ctx.matrix(h.terms[0])
    exact = f_constant(ctx, op, 5.0, win.indices)
    trap = f_constant(ctx, op, 5.0, win.indices, method="trapezoid")
    assert trap == pytest.approx(exact, rel=1e-4)
    with pytest.raises(EthError):
        f_constant(ctx, op, 0.0, win.indices)


def test_a_h_matches_quadrature(rng):
    h = random_model(2, 3, rng)
    ctx = ThermalContext.from_model(h)
    p = PauliString("XY")
    t = 1.3
    hd = build_dense(h)
    d, w = np.linalg.eigh(hd)
    pm = p.to_matrix()
    s = np.linspace(0, t, 1001)
    vals = np.array([(w * np.exp(1j * d * x)) @ w.conj().T @ pm @ (w * np.exp(-1j * d * x)) @ w.conj().T for x in s])
    hs = s[1] - s[0]
    simpson = hs / 3 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum(axis=0) + 2 * vals[2:-1:2].sum(axis=0))
    got = ctx.sd.W @ a_h(ctx, ctx.matrix(p), t) @ ctx.sd.W.conj().T
    assert np.max(np.abs(got - simpson)) <= 1e-6


@pytest.mark.parametrize("t", [1.0, 10.0, 57.0])
def test_split_exactness(chain8, t):
    h, ctx = chain8
    win = energy_window(ctx, 0.2, 0.5)
    for p in h.terms[:5]:
        sp = decompose_a(ctx, p, t, win)
        assert np.max(np.abs(sp.reassembled() - sp.projected)) <= 1e-10
        assert abs(np.trace(sp.a_od)) <= 1e-12
        assert np.allclose(sp.a_od, sp.a_od.conj().T)


def test_window_errors(chain8):
    _, ctx = chain8
    with pytest.raises(EthError):
        energy_window(ctx, 0.5, 0.2)


def test_rank_formula_example():
    assert rank_formula(1.0, 0.0, 1.0, 16.0, 1, 1.0) == pytest.approx(8.0)


def test_single_term_low_rank(z_ctx):
    # a two-level spectrum has no level at finite beta, so the window is built by hand
    win = Window(0.1, 0.5, np.array([0, 1]), np.array([0.2, 0.4]))
    lr = low_rank_build(z_ctx, [Z1], 3.0, win, order=1, width=1.0)
    assert lr.rank == 1
    assert lr.delta == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EthError):
        low_rank_build(z_ctx, [Z1], 3.0, win, order=1, width=0.0)


def test_low_rank_structure(chain8):
    h, ctx = chain8
    win = energy_window(ctx, 0.2, 0.4)
    terms = list(h.terms)
    t = 20.0
    lr = low_rank_build(ctx, terms, t, win, order=2, width=0.1)
    assert np.allclose(lr.b @ lr.b.T, np.eye(lr.rank), atol=1e-10)
    assert np.max(np.abs(lr.b @ lr.E)) <= 1e-9 * t
    assert lr.sup_residual(np.random.default_rng(0)) <= lr.delta + 1e-12
    a_d = a_d_vector(ctx, terms, t, win)
    weights = ctx.weights(0.3)[win.indices]
    weights = weights / weights.sum()
    for delta in (t * 0.05, t * 0.01, t * 0.002):
        best = low_rank_search(ctx, terms, t, win, delta)
        assert best is not None and best.delta <= delta
        assert effective_rank(a_d, weights, delta) <= best.rank


def test_level_statistics(rng):
    assert r_ratio(np.arange(50.0)) == pytest.approx(1.0)
    poisson = np.cumsum(rng.exponential(size=100_001))
    assert r_ratio(poisson) == pytest.approx(POISSON_R, abs=0.005)
    goe = np.mean([r_ratio(central_slice(goe_levels(512, rng))) for _ in range(4)])
    assert goe == pytest.approx(GOE_R, abs=0.01)
    with pytest.raises(EthError):
        r_ratio(np.array([0.0, 1.0]))
    with pytest.raises(EthError):
        level_stats([np.arange(30.0)])
    assert 0.0 <= level_stats([np.arange(300.0), np.sqrt(np.arange(300.0))]) <= 1.0


@settings(max_examples=30)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=40))
def test_r_ratio_in_unit_interval(levels):
    assert 0.0 <= r_ratio(np.array(levels)) <= 1.0


def test_reflection_sectors():
    n = 6
    h = mixed_field_ising(n)
    even, odd = reflection_isometries(n)
    q = np.hstack([even, odd])
    assert np.allclose(q.T @ q, np.eye(1 << n))
    full = np.linalg.eigvalsh(build_dense(h))
    split = np.sort(np.concatenate(reflection_sectors(build_dense(h), n)))
    assert np.allclose(full, split, atol=1e-10)
    ctxs = sector_contexts(h)
    assert sum(c.dim for c in ctxs) == 1 << n
    assert np.allclose(np.sort(np.concatenate([c.energies for c in ctxs])), full, atol=1e-10)


def test_microcanonical_deviation(chain8):
    h, ctx = chain8
    p = h.terms[0]
    mx = microcanonical_deviation(ctx, p)
    rms = microcanonical_deviation(ctx, p, metric="rms")
    assert 0 <= rms <= mx
    with pytest.raises(EthError):
        microcanonical_deviation(ctx, p, metric="median")
    devs = diagonal_eth_deviations(sector_contexts(h), h.terms[:3])
    assert devs.shape == (3,) and np.all(devs >= 0)
    # a conserved quantity has no scatter around its own microcanonical mean
    hd = build_dense(h)
    assert microcanonical_deviation(ctx, np.zeros_like(hd)) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_ghz_global_field(n):
    gen = site_sum_matrix(n, "Z")
    t = np.array([0.5, 2.0, 7.0])
    demo = ghz_qfi_demo(0.8 * gen, gen, t, {"ghz": ghz_vector(n), "plus": product_plus(n)})
    assert np.allclose(demo.qfi["ghz"], 4 * n * n * t**2, rtol=1e-8)
    assert np.allclose(demo.qfi["plus"], 4 * n * t**2, rtol=1e-8)
    assert demo.exponents["ghz"] == pytest.approx(2.0)
    assert np.allclose(demo.ratio("ghz", "plus"), n)


def test_eigenstate_prep_qfi_stays_small(chain8):
    h, ctx = chain8
    gen = site_sum_matrix(8, "X")
    psi = ctx.sd.W[:, ctx.dim // 2]
    t = np.array([10.0, 40.0, 80.0, 160.0])
    demo = ghz_qfi_demo(build_dense(h), gen, t, {"eig": psi}, fit_from=40.0)
    # no diagonal variance, so only the bounded off-diagonal part survives
    assert demo.exponents["eig"] < 0.5
    assert demo.qfi["eig"][-1] / t[-1] ** 2 < 0.01
