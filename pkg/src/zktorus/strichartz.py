"""Numerical checks of the dispersive estimates for the linear ZK group.

Kernel
    K_N(x, t) = sum_m cut(m1 + m2/sqrt3)^2 cut(m1 - m2/sqrt3)^2 e^{i(m.x + phi(m) t)}
with ``cut = smooth_cutoff(., 4N)``, evaluated either as a lattice sum or by
Poisson resummation into products of the one-dimensional profile

    F_N(X) = int cut(xi)^2 e^{i(xi X + xi^3 t / 2)} dxi.

The rotation ``eta = (m1 + m2/sqrt3, m1 - m2/sqrt3)`` maps ``phi`` to
``(eta1^3 + eta2^3)/2`` with Jacobian ``sqrt3/2``, which is the constant in
front of the image sum.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .approx import fit_loglog
from .spectral import TWO_PI, bump, dispersion_symbol, embed

__all__ = [
    "KernelProbe", "EnsembleSpec", "QuadratureError", "kernel_weights",
    "kernel_direct", "kernel_grid", "kernel_poisson", "airy_profile",
    "airy_profile_sup", "shell_ensemble", "linear_sup_series",
    "short_time_strichartz", "global_strichartz", "commutator_test",
    "commutator_ratio", "StrichartzStats", "DecayScan", "kernel_decay_scan",
    "airy_profile_decay_scan", "airy_far_field",
    "write_scan_csv", "write_summary_json",
]

SQRT3 = math.sqrt(3.0)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelProbe:
    N: int
    t: float
    truncation: int = 32

    def __post_init__(self):
        if self.N < 1 or self.N & (self.N - 1):
            raise ValueError("kernel probes need a dyadic N >= 1")
        if self.truncation < 4:
            raise ValueError("truncation must be >= 4")

    def in_decay_regime(self) -> bool:
        return self.N ** -3 <= abs(self.t) <= self.N ** -2


@dataclass(frozen=True)
class EnsembleSpec:
    count: int
    seed: int
    band: int

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


# -- kernel: lattice sum ----------------------------------------------------

def kernel_weights(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lattice points in the cutoff support and their weights."""
    scale = 4 * N
    r1 = 2 * scale
    r2 = int(math.ceil(2 * scale * SQRT3))
    m1, m2 = np.meshgrid(np.arange(-r1, r1 + 1), np.arange(-r2, r2 + 1), indexing="ij")
    w = bump((m1 + m2 / SQRT3) / scale) ** 2 * bump((m1 - m2 / SQRT3) / scale) ** 2
    keep = w > 0
    return m1[keep], m2[keep], w[keep]


def kernel_direct(probe: KernelProbe, x, y) -> np.ndarray:
    """Lattice sum at arbitrary points (cost ~ points x N^2)."""
    m1, m2, w = kernel_weights(probe.N)
    amp = w * np.exp(1j * dispersion_symbol(m1, m2).astype(float) * probe.t)
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    out = np.empty(np.broadcast(x, y).shape, dtype=complex)
    xb, yb = np.broadcast_arrays(x, y)
    flat_x, flat_y, flat_o = xb.ravel(), yb.ravel(), out.reshape(-1)
    for i in range(0, flat_x.size, 64):
        ph = np.multiply.outer(flat_x[i:i + 64], m1) + np.multiply.outer(flat_y[i:i + 64], m2)
        flat_o[i:i + 64] = np.exp(1j * ph) @ amp
    return out


def kernel_grid(probe: KernelProbe, n: int = 64) -> np.ndarray:
    """Exact lattice sum on the ``n x n`` grid ``x_j = 2 pi j / n``.

    Frequencies are folded modulo ``n`` (exact on grid points) and summed
    with one FFT.
    """
    m1, m2, w = kernel_weights(probe.N)
    amp = w * np.exp(1j * dispersion_symbol(m1, m2).astype(float) * probe.t)
    folded = np.zeros((n, n), dtype=complex)
    np.add.at(folded, (m1 % n, m2 % n), amp)
    return sfft.ifft2(folded, norm="forward")


# -- the one-dimensional profile --------------------------------------------

def _gl_panels(a: float, b: float, n_panels: int, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(dtype(a), dtype(b), n_panels + 1, dtype=dtype)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES.astype(dtype)[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel().astype(np.float64)
    return nodes, weights


def _profile_rule(X_max: float, t: float, N: int, refine: int = 1, dtype=np.float64):
    """Panels each covering at most 1/8 of an oscillation of ``xi X + xi^3 t/2``
    for every ``|X| <= X_max``."""
    top = 8.0 * N
    max_dphase = X_max + 1.5 * abs(t) * top * top
    h = min((2 * np.pi / 8) / max(max_dphase, 1e-300), N / 16.0)
    n_panels = max(16, int(math.ceil(top / h))) * refine
    return _gl_panels(0.0, top, n_panels, dtype)


# above this phase size float64 rounding of xi*X dominates the far field
_EXTENDED_PHASE = 1e3
_TWO_PI_LD = np.longdouble("6.283185307179586476925286766559005768")


def _profile_values(X: np.ndarray, t: float, N: int, refine: int = 1) -> np.ndarray:
    """Quadrature for a batch of ``X`` sharing one rule (sized for max |X|)."""
    X_max = float(np.max(np.abs(X)))
    extended = X_max * 8.0 * N > _EXTENDED_PHASE
    dtype = np.longdouble if extended else np.float64
    xi, wq = _profile_rule(X_max, t, N, refine, dtype)
    wt = wq * bump(xi.astype(np.float64) / (4.0 * N)) ** 2
    cubic = 0.5 * xi ** 3 * dtype(t)
    Xd = X.astype(dtype)
    out = np.empty(X.size)
    chunk = max(1, (400_000 if extended else 2_000_000) // xi.size)
    for i in range(0, X.size, chunk):
        phase = np.multiply.outer(Xd[i:i + chunk], xi) + cubic
        if extended:
            phase = np.fmod(phase, _TWO_PI_LD).astype(np.float64)
        # even weight, odd phase: the imaginary part cancels
        out[i:i + chunk] = 2.0 * (np.cos(phase) @ wt)
    return out


def _profile_batch(X: np.ndarray, t: float, N: int, refine: int = 1) -> np.ndarray:
    """Bucket ``X`` by magnitude so small arguments get short rules."""
    out = np.empty(X.size)
    level = np.ceil(np.log2(np.abs(X) + 1.0)).astype(int)
    for lv in np.unique(level):
        sel = level == lv
        out[sel] = _profile_values(X[sel], t, N, refine)
    return out


def airy_profile(X, t: float, N: int, check: bool = True, rtol: float = 1e-8):
    """``F_N(X)`` by composite 8-point Gauss-Legendre quadrature.

    ``F_N`` is real.  With ``check`` the rule is compared against one with
    half the panel width; a difference above ``rtol`` times
    ``max(|F|, int cut^2)`` raises :class:`QuadratureError`.
    """
    if t == 0:
        raise ValueError("airy_profile needs t != 0")
    Xa = np.atleast_1d(np.asarray(X, float))
    flat = Xa.ravel()
    vals = _profile_batch(flat, t, N)
    if check:
        fine = _profile_batch(flat, t, N, refine=2)
        xi, wq = _gl_panels(0.0, 8.0 * N, 64)
        mass = 2.0 * float(np.sum(wq * bump(xi / (4.0 * N)) ** 2))
        err = np.abs(vals - fine)
        bad = err > rtol * np.maximum(np.abs(fine), mass)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise QuadratureError(f"F_N({flat[i]}) did not converge: |dQ| = {err[i]:.3e}")
        vals = fine
    out = vals.reshape(Xa.shape)
    return out if np.ndim(X) else float(out[0])


def airy_profile_sup(t: float, N: int, X_max: float = 10.0, n_points: int = 401) -> float:
    """Grid sup of ``|F_N|`` on ``[-X_max, X_max]``, then zoomed around the
    best grid point so peaks narrower than the spacing are resolved."""
    X = np.linspace(-X_max, X_max, n_points)
    vals = np.abs(airy_profile(X, t, N, check=False))
    best = float(np.max(vals))
    dx = X[1] - X[0]
    for i in np.argsort(vals)[-3:]:
        lo, hi = X[i] - dx, X[i] + dx
        for _ in range(3):
            Z = np.linspace(lo, hi, 65)
            v = np.abs(airy_profile(Z, t, N, check=False))
            j = int(np.argmax(v))
            best = max(best, float(v[j]))
            step = Z[1] - Z[0]
            lo, hi = Z[j] - step, Z[j] + step
    return best


# -- kernel: Poisson resummation --------------------------------------------

def _images(M: float) -> tuple[np.ndarray, np.ndarray]:
    """Lattice vectors with ``|n1 + sqrt3 n2|, |n1 - sqrt3 n2| <= M``."""
    r = int(math.ceil(M)) + 1
    n1, n2 = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = (np.abs(n1 + SQRT3 * n2) <= M) & (np.abs(n1 - SQRT3 * n2) <= M)
    return n1[keep], n2[keep]


def kernel_poisson(probe: KernelProbe, x, y) -> np.ndarray:
    """Image sum ``(sqrt3/2) sum_n F_N(a_n) F_N(b_n)`` truncated at
    ``|n1 +- sqrt3 n2| <= truncation``."""
    n1, n2 = _images(probe.truncation)
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    xb, yb = np.broadcast_arrays(x, y)
    X = xb.ravel()[:, None] - TWO_PI * n1[None, :]
    Y = yb.ravel()[:, None] - TWO_PI * n2[None, :]
    a = 0.5 * (X + SQRT3 * Y)
    b = 0.5 * (X - SQRT3 * Y)
    args = np.concatenate([a.ravel(), b.ravel()])
    uniq, inv = np.unique(np.round(args, 12), return_inverse=True)
    vals = airy_profile(uniq, probe.t, probe.N, check=False)
    fa = vals[inv[: a.size]].reshape(a.shape)
    fb = vals[inv[a.size:]].reshape(b.shape)
    out = 0.5 * SQRT3 * np.sum(fa * fb, axis=1)
    return out.reshape(xb.shape).astype(complex)


@dataclass
class DecayScan:
    N: int
    t: np.ndarray
    sup: np.ndarray
    slope: float

    def rows(self):
        for t, v in zip(self.t, self.sup):
            yield self.N, t, v


def kernel_decay_scan(N: int, n_t: int = 8, n_grid: int = 64) -> DecayScan:
    """Grid sup of ``|K_N(., t)|`` on log-spaced ``t`` in ``[N^-3, N^-2]``."""
    ts = np.geomspace(float(N) ** -3, float(N) ** -2, n_t)
    sups = np.array([np.max(np.abs(kernel_grid(KernelProbe(N, t), n_grid))) for t in ts])
    slope, _, _ = fit_loglog(ts, sups)
    return DecayScan(N, ts, sups, slope)


def airy_profile_decay_scan(N: int, n_t: int = 8, X_max: float = 10.0) -> DecayScan:
    """``sup_{|X| <= X_max} |F_N(., t)|`` on log-spaced ``t`` in ``[N^-3, N^-2]``."""
    ts = np.geomspace(float(N) ** -3, float(N) ** -2, n_t)
    sups = np.array([airy_profile_sup(t, N, X_max) for t in ts])
    slope, _, _ = fit_loglog(ts, sups)
    return DecayScan(N, ts, sups, slope)


def airy_far_field(N: int, t: float, X: np.ndarray) -> float:
    """``max |F_N(X)| N^2 |X|^3`` over the given far-field arguments."""
    X = np.asarray(X, float)
    vals = airy_profile(X, t, N, check=True)
    return float(np.max(np.abs(vals) * float(N) ** 2 * np.abs(X) ** 3))


# -- Strichartz ensembles ---------------------------------------------------

def _shell_grid_size(N: int) -> int:
    """Smallest power of two resolving ``|m| <= 2N - 1`` strictly below Nyquist."""
    n = 8
    while n // 2 < 2 * max(N, 1):
        n *= 2
    return n


def shell_ensemble(ens: EnsembleSpec, N: int | None = None) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Unit-amplitude random-phase data on the dyadic shell ``P_N``.

    Returns the shell lattice points ``(m1, m2)`` and one coefficient vector
    per member.
    """
    N = ens.band if N is None else N
    R = 2 * max(N, 1)
    m1, m2 = np.meshgrid(np.arange(-R, R + 1), np.arange(-R, R + 1), indexing="ij")
    r2 = m1 * m1 + m2 * m2
    shell = (r2 < 1) if N == 0 else ((r2 >= N * N) & (r2 < 4 * N * N))
    m1, m2 = m1[shell], m2[shell]
    rng = ens.rng()
    members = [np.exp(2j * np.pi * rng.random(m1.size)) for _ in range(ens.count)]
    return m1, m2, members


def linear_sup_series(m1: np.ndarray, m2: np.ndarray, c: np.ndarray,
                      times: np.ndarray, n: int, oversample: int = 4) -> np.ndarray:
    """Grid sup of ``|W(t) f|`` for each time, on an ``oversample * n`` grid."""
    P = oversample * n
    phi = dispersion_symbol(m1, m2).astype(float)
    idx = (m1 % P, m2 % P)
    out = np.empty(len(times))
    buf = np.zeros((P, P), dtype=complex)
    for i, t in enumerate(times):
        buf[...] = 0.0
        buf[idx] = c * np.exp(1j * phi * t)
        out[i] = np.max(np.abs(sfft.ifft2(buf, norm="forward")))
    return out


@dataclass
class StrichartzStats:
    label: float
    ratios: np.ndarray
    interval: float

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))


def short_time_strichartz(N: int, ens: EnsembleSpec, n_time: int = 65,
                          oversample: int = 4) -> StrichartzStats:
    """``||W(t) P_N w0||_{L^2_I L^inf} / ||w0||_{L^2}`` with ``I = [0, (1 v N)^-2]``."""
    I = float(max(N, 1)) ** -2
    times = np.linspace(0.0, I, n_time)
    m1, m2, members = shell_ensemble(ens, N)
    n = _shell_grid_size(N)
    ratios = []
    for c in members:
        sup = linear_sup_series(m1, m2, c, times, n, oversample)
        num = math.sqrt(np.trapezoid(sup ** 2, times))
        ratios.append(num / (TWO_PI * np.linalg.norm(c)))
    return StrichartzStats(float(N), np.array(ratios), I)


def global_strichartz(s_prime: float, ens: EnsembleSpec, n_time: int = 257,
                      oversample: int = 4) -> StrichartzStats:
    """``||W(t) w0||_{L^2_[0,1] L^inf} / ||w0||_{H^s'}`` for shell data at ``ens.band``."""
    times = np.linspace(0.0, 1.0, n_time)
    m1, m2, members = shell_ensemble(ens)
    n = _shell_grid_size(ens.band)
    weight = (1.0 + m1 * m1 + m2 * m2) ** (s_prime / 2.0)
    ratios = []
    for c in members:
        sup = linear_sup_series(m1, m2, c, times, n, oversample)
        num = math.sqrt(np.trapezoid(sup ** 2, times))
        ratios.append(num / (TWO_PI * np.linalg.norm(weight * c)))
    return StrichartzStats(float(ens.band), np.array(ratios), 1.0)


# -- commutator ---------------------------------------------------------------

def _random_real_coeffs(rng: np.random.Generator, n: int, band: int) -> np.ndarray:
    k = np.fft.fftfreq(n, 1.0 / n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    keep = (kx ** 2 + ky ** 2 <= band * band)
    c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c = np.where(keep, c, 0.0)
    flipped = np.roll(c[::-1, ::-1], (1, 1), axis=(0, 1))
    return 0.5 * (c + np.conj(flipped))


def commutator_ratio(f: np.ndarray, g: np.ndarray, s: float, oversample: int = 4) -> tuple[float, float]:
    """LHS and RHS of the Kato-Ponce type commutator bound for coefficient
    arrays on a common ``n x n`` lattice (``n`` must resolve ``f g``)."""
    n = f.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    J = lambda c, order: (1.0 + kx * kx + ky * ky) ** (order / 2.0) * c  # noqa: E731
    phys = lambda c: sfft.ifft2(c, norm="forward").real  # noqa: E731
    spec = lambda v: sfft.fft2(v, norm="forward")  # noqa: E731
    fv, gv = phys(f), phys(g)
    lhs_c = J(spec(fv * gv), s) - spec(fv * phys(J(g, s)))
    lhs = TWO_PI * float(np.sqrt(np.sum(np.abs(lhs_c) ** 2)))

    P = oversample * n
    fine = lambda c: sfft.ifft2(embed(c, (P, P)), norm="forward").real  # noqa: E731
    sup_f = np.max(np.abs(fine(f)))
    sup_g = np.max(np.abs(fine(g)))
    grad_f = np.max(np.hypot(fine(1j * kx * f), fine(1j * ky * f)))
    l2 = lambda c: TWO_PI * float(np.sqrt(np.sum(np.abs(c) ** 2)))  # noqa: E731
    rhs = l2(J(f, s)) * sup_g + (sup_f + grad_f) * l2(J(g, s - 1.0))
    return lhs, rhs


def commutator_test(ens: EnsembleSpec, s: float, oversample: int = 4) -> float:
    """Max of LHS/RHS over ``ens.count`` random real pairs with ``|m| <= ens.band``."""
    if s < 1:
        raise ValueError("commutator_test needs s >= 1")
    n = 8
    while n // 2 <= 2 * ens.band:
        n *= 2
    rng = ens.rng()
    best = 0.0
    for _ in range(ens.count):
        f = _random_real_coeffs(rng, n, ens.band)
        g = _random_real_coeffs(rng, n, ens.band)
        lhs, rhs = commutator_ratio(f, g, s, oversample)
        best = max(best, lhs / rhs)
    return best


# -- persistence --------------------------------------------------------------

def write_scan_csv(path, rows: Sequence[tuple]) -> None:
    """Rows of ``(N, t, value, bound)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "t", "value", "bound"])
        for row in rows:
            w.writerow([row[0], *(format(float(v), ".17g") for v in row[1:])])


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
