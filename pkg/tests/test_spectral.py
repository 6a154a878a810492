import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import exact_product
from zktorus.spectral import (
    TWO_PI, Grid, RealField, SpectralField, SymmetryError, analyze, bump, dealias,
    dealias_mask, direct_evaluate, dispersion_symbol, dyadic_blocks, from_grid,
    l2_norm, lp_project, propagate, random_field, smooth_cutoff, sobolev_norm,
    sup_norm, synthesize, to_grid,
)


def field_from_fn(grid, fn):
    x, y = grid.points()
    return analyze(RealField(grid, fn(x, y)))


# -- grid and containers ---------------------------------------------------------

@pytest.mark.parametrize("Mx,My", [(6, 8), (8, 12), (4, 4), (16, 0)])
def test_grid_rejects_bad_sizes(Mx, My):
    with pytest.raises(ValueError):
        Grid(Mx, My)


def test_grid_points_are_uniform():
    g = Grid(8, 16, oversample=1)
    x, y = g.points(fine=False)
    assert x.shape == (8, 16)
    assert np.allclose(x[:, 0], TWO_PI * np.arange(8) / 8)
    assert np.allclose(y[0], TWO_PI * np.arange(16) / 16)


def test_coefficients_are_read_only():
    F = SpectralField.zeros(Grid(8, 8))
    with pytest.raises(ValueError):
        F.coeffs[0, 0] = 1.0


def test_nyquist_is_dropped():
    g = Grid(8, 8)
    c = np.zeros(g.shape, complex)
    c[4, 0] = 1.0
    assert SpectralField(g, c).coeffs[4, 0] == 0


def test_from_modes_rejects_unresolved():
    with pytest.raises(ValueError):
        SpectralField.from_modes(Grid(8, 8), {(4, 0): 1.0})


# -- analyze / synthesize ------------------------------------------------------------

def test_analyze_constant():
    g = Grid(8, 8)
    F = field_from_fn(g, lambda x, y: np.ones_like(x))
    expected = np.zeros(g.shape)
    expected[0, 0] = 1.0
    assert np.allclose(F.coeffs, expected, atol=1e-15)


@pytest.mark.parametrize("My", [8, 16, 32])
def test_analyze_cos2y(My):
    g = Grid(8, My)
    F = field_from_fn(g, lambda x, y: np.cos(2 * y))
    assert F.coeff(0, 2) == pytest.approx(0.5, abs=1e-15)
    assert F.coeff(0, -2) == pytest.approx(0.5, abs=1e-15)
    assert np.sum(np.abs(F.coeffs)) == pytest.approx(1.0, abs=1e-14)


def test_analyze_rejects_nonfinite():
    g = Grid(8, 8)
    v = np.zeros(g.fine_shape)
    v[0, 0] = np.nan
    with pytest.raises(ValueError):
        analyze(RealField(g, v))


def test_synthesize_cos_x():
    g = Grid(8, 8)
    F = SpectralField.from_modes(g, {(1, 0): 0.5, (-1, 0): 0.5})
    x, _ = g.points()
    assert np.allclose(synthesize(F).values, np.cos(x), atol=1e-15)


def test_synthesize_zero():
    assert not np.any(synthesize(SpectralField.zeros(Grid(16, 8))).values)


def test_synthesize_rejects_non_hermitian():
    F = SpectralField.from_modes(Grid(8, 8), {(1, 0): 1.0})
    with pytest.raises(SymmetryError):
        synthesize(F)


def test_roundtrip_random(rng):
    for _ in range(10):
        F = random_field(Grid(32, 16), rng)
        back = analyze(synthesize(F))
        assert np.max(np.abs(back.coeffs - F.coeffs)) <= 1e-12 * np.max(np.abs(F.coeffs))


def test_synthesize_matches_direct_sum(rng):
    F = random_field(Grid(16, 16, oversample=2), rng)
    vals = synthesize(F).values
    x, y = F.grid.points()
    idx = rng.integers(0, vals.shape[0], size=(10, 2))
    ref = direct_evaluate(F, x[idx[:, 0], idx[:, 1]], y[idx[:, 0], idx[:, 1]])
    assert np.max(np.abs(ref.imag)) < 1e-12
    assert np.allclose(vals[idx[:, 0], idx[:, 1]], ref.real, atol=1e-10)


def test_raw_transforms_roundtrip(rng):
    c = random_field(Grid(16, 16), rng).coeffs
    assert np.allclose(from_grid(to_grid(c, (64, 64)), (16, 16)), c, atol=1e-14)


# -- norms ------------------------------------------------------------------------

def test_sobolev_single_exponential():
    F = SpectralField.from_modes(Grid(8, 8), {(1, 0): 1.0}, real=False)
    assert sobolev_norm(F, 1.0) == pytest.approx(TWO_PI * math.sqrt(2.0), rel=1e-15)


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.0, -1.0])
def test_sobolev_cos2y(s):
    F = SpectralField.from_modes(Grid(8, 8), {(0, 2): 0.5, (0, -2): 0.5})
    closed = TWO_PI * 5.0 ** (s / 2) / math.sqrt(2.0)
    brute = TWO_PI * math.sqrt(sum((1 + 4) ** s * 0.25 for _ in range(2)))
    assert sobolev_norm(F, s) == pytest.approx(closed, rel=1e-14)
    assert closed == pytest.approx(brute, rel=1e-14)


def test_l2_matches_quadrature(rng):
    F = random_field(Grid(16, 16), rng)
    v = synthesize(F).values
    quad = math.sqrt(np.mean(v * v) * TWO_PI ** 2)
    assert l2_norm(F) == pytest.approx(quad, rel=1e-12)


def test_sobolev_zero_is_l2(rng):
    for _ in range(100):
        F = random_field(Grid(16, 16), rng)
        assert sobolev_norm(F, 0.0) == pytest.approx(l2_norm(F), rel=1e-14)
        assert sobolev_norm(F, 0.0) ** 2 == pytest.approx(
            TWO_PI ** 2 * np.sum(np.abs(F.coeffs) ** 2), rel=1e-12)


# -- dyadic projections -------------------------------------------------------------

def test_p0_keeps_only_mean(rng):
    F = random_field(Grid(16, 16), rng)
    P = lp_project(F, 0).coeffs
    assert P[0, 0] == F.coeffs[0, 0]
    assert np.count_nonzero(P) <= 1


def test_p1_p2_boundaries():
    F = SpectralField.from_modes(Grid(8, 8), {(1, 0): 1.0}, real=False)
    assert lp_project(F, 1).coeff(1, 0) == 1.0
    assert not np.any(lp_project(F, 2).coeffs)


def test_projection_rejects_non_dyadic():
    with pytest.raises(ValueError):
        lp_project(SpectralField.zeros(Grid(8, 8)), 3)


def test_projection_algebra(rng):
    F = random_field(Grid(32, 32), rng)
    blocks = dyadic_blocks(F.grid)
    total = np.zeros(F.grid.shape, complex)
    for N in blocks:
        P = lp_project(F, N)
        assert np.array_equal(lp_project(P, N).coeffs, P.coeffs)
        for M in blocks:
            if M != N:
                assert not np.any(lp_project(P, M).coeffs)
        total += P.coeffs
    assert np.array_equal(total, F.coeffs)
    assert sum(l2_norm(lp_project(F, N)) ** 2 for N in blocks) == pytest.approx(l2_norm(F) ** 2, rel=1e-12)


@pytest.mark.parametrize("s", [-1.0, 0.5, 1.0, 2.0, 3.0])
def test_norm_equivalence(rng, s):
    C = 4.0 ** abs(s)
    for _ in range(20):
        F = random_field(Grid(32, 32), rng, decay=rng.uniform(0, 3))
        dyadic = sum(max(1, N) ** (2 * s) * l2_norm(lp_project(F, N)) ** 2
                     for N in dyadic_blocks(F.grid))
        hs2 = sobolev_norm(F, s) ** 2
        assert dyadic / C <= hs2 <= C * dyadic


# -- dispersion and propagator ----------------------------------------------------

def test_dispersion_examples():
    assert dispersion_symbol(1, 0) == 1
    assert dispersion_symbol(2, 3) == 26
    assert isinstance(dispersion_symbol(200_000, 200_000), int)
    assert dispersion_symbol(200_000, 200_000) == 2 * 200_000 ** 3


@given(st.integers(-200_000, 200_000), st.integers(-200_000, 200_000))
def test_dispersion_even_in_n(m, n):
    assert dispersion_symbol(m, -n) == dispersion_symbol(m, n)
    arr = dispersion_symbol(np.array([m]), np.array([n]))
    assert int(arr[0]) == m ** 3 + m * n * n


def test_dispersion_overflow_guard():
    with pytest.raises(OverflowError):
        dispersion_symbol(200_001, 0)
    with pytest.raises(OverflowError):
        dispersion_symbol(np.array([0]), np.array([-300_000]))


def test_propagate_identity_and_fixed_modes(rng):
    F = random_field(Grid(16, 16), rng)
    assert propagate(F, 0.0) is F
    G = SpectralField.from_modes(Grid(8, 8), {(0, 2): 0.5, (0, -2): 0.5})
    assert np.array_equal(propagate(G, 3.7).coeffs, G.coeffs)


def test_propagate_phase_of_mode_11():
    F = SpectralField.from_modes(Grid(8, 8), {(1, 1): 1.0}, real=False)
    t = 0.37
    assert propagate(F, t).coeff(1, 1) == pytest.approx(np.exp(2j * t), abs=1e-15)


@given(t=st.floats(-10, 10), t2=st.floats(-10, 10), seed=st.integers(0, 2 ** 32 - 1))
def test_propagate_unitary_group(t, t2, seed):
    F = random_field(Grid(16, 16), np.random.default_rng(seed))
    for s in (0.0, 1.0, 2.0):
        assert abs(sobolev_norm(propagate(F, t), s) - sobolev_norm(F, s)) <= 1e-12 * sobolev_norm(F, s)
    back = propagate(propagate(F, t), -t)
    assert np.max(np.abs(back.coeffs - F.coeffs)) <= 1e-12 * np.max(np.abs(F.coeffs))
    two = propagate(propagate(F, t), t2)
    one = propagate(F, t + t2)
    assert np.max(np.abs(two.coeffs - one.coeffs)) <= 1e-10 * np.max(np.abs(F.coeffs))


# -- cutoff, sup, dealias ----------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 4, 16])
def test_smooth_cutoff_values(N):
    assert smooth_cutoff(0.5 * N, N) == 1.0
    assert smooth_cutoff(2.0 * N, N) == 0.0
    mid = smooth_cutoff(1.5 * N, N)
    assert 0.0 < mid < 1.0
    assert smooth_cutoff(-1.5 * N, N) == mid


def test_smooth_cutoff_rejects_small_N():
    with pytest.raises(ValueError):
        smooth_cutoff(0.0, 0.5)


def test_bump_monotone_and_smooth():
    r = np.linspace(0, 3, 3001)
    b = bump(r)
    assert np.all((b >= 0) & (b <= 1))
    assert np.all(np.diff(b) <= 0)
    # bump(r) + bump(3 - r) = 1 on the transition (psi construction)
    mid = np.linspace(1.01, 1.99, 50)
    assert np.allclose(bump(mid) + bump(3 - mid), 1.0, atol=1e-15)


def test_sup_norm_sin_and_constant():
    g = Grid(8, 8)
    assert sup_norm(synthesize(SpectralField.from_modes(g, {(1, 0): -0.5j, (-1, 0): 0.5j}))) == pytest.approx(1.0, abs=1e-6)
    assert sup_norm(synthesize(SpectralField.from_modes(g, {(0, 0): -2.5}))) == 2.5


def test_sup_norm_refinement(rng):
    for _ in range(10):
        F = random_field(Grid(16, 16), rng)
        fine = SpectralField(F.grid.with_oversample(8), F.coeffs)
        assert sup_norm(synthesize(fine)) >= sup_norm(synthesize(F)) - 1e-8


def test_dealias_band_and_nyquist_side(rng):
    g = Grid(16, 16)
    F = random_field(g, rng, band=4)
    assert np.array_equal(dealias(F).coeffs, F.coeffs)
    G = SpectralField.from_modes(g, {(6, 0): 1.0, (-6, 0): 1.0})
    assert not np.any(dealias(G).coeffs)


def test_dealiased_product_is_exact_on_retained_modes(rng):
    g = Grid(16, 16, oversample=1)
    mask = dealias_mask(g)
    a = np.where(mask, random_field(g, rng).coeffs, 0)
    b = np.where(mask, random_field(g, rng).coeffs, 0)
    prod = from_grid(to_grid(a, g.shape) * to_grid(b, g.shape), g.shape)
    exact = exact_product(a, b)
    kx, ky = g.wavenumbers()
    for i, j in zip(*np.nonzero(mask)):
        assert prod[i, j] == pytest.approx(exact.get((kx[i, j], ky[i, j]), 0), abs=1e-13)
