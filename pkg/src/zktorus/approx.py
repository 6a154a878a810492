"""Closed-form approximate ZK solutions built on the resonant family
``R(m, 0, n, 2n) = 0`` and their residuals.

For ``theta`` in [-1, 1] and integer ``m >= 2``,

    u = theta/m cos(2y)
        + cos(theta t/2) m^-s cos(mx - y + w t)
        + sin(theta t/2) m^-s sin(mx + y + w t)
        + A cos(theta t/2) cos(mx - 3y + w t) + B sin(theta t/2) sin(mx + 3y + w t)

with ``w = phi(m, 1) = m^3 + m``.  The last two modes cancel the non-resonant
part of ``cos(2y)`` acting on the travelling pair.  Exact cancellation at
leading order requires

    A = -(theta/2) m^-s / R(m, 0, -1, 2),   B = -(theta/2) m^-s / R(m, 0, 1, -2),

i.e. ``A = B = theta m^-s / (16 m)``.  ``literal=True`` selects the unscaled
amplitudes ``m^-s / R`` instead; those leave an ``O(m^-s)`` residual and are
kept only for comparison.

Every term is a real trigonometric mode ``a(t) trig(k.x + w t)``, tracked
exactly in coefficient space together with ``a'(t)`` so that the time
derivative in the residual is analytic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .resonance import resonance
from .spectral import (
    Grid, SpectralField, dealias_mask, dispersion_symbol, from_grid,
    sobolev_norm, l2_norm, to_grid,
)

__all__ = [
    "ApproxSolutionParams", "build", "remainder", "time_derivative",
    "residual", "residual_parts", "residual_norm_scan", "distance_profile",
    "mode_support", "min_grid", "ResidualScan", "fit_loglog", "pair_cancellation",
    "DistanceProfile",
]


@dataclass(frozen=True)
class ApproxSolutionParams:
    theta: float
    m: int
    s: float

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [-1, 1]")
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")


@dataclass(frozen=True)
class _Mode:
    k: tuple[int, int]
    omega: float
    amp: float
    damp: float   # d amp / dt
    kind: str     # "cos" or "sin"


def _terms(p: ApproxSolutionParams, t: float, literal: bool = False) -> dict[str, list[_Mode]]:
    m, s, th = int(p.m), p.s, p.theta
    ms = float(m) ** (-s)
    w = float(dispersion_symbol(m, 1))
    c, sn = math.cos(th * t / 2), math.sin(th * t / 2)
    dc, dsn = -th / 2 * sn, th / 2 * c
    if literal:
        A = ms / resonance(m, 0, -1, 2)
        B = ms / resonance(m, 0, 1, -2)
    else:
        A = -(th / 2) * ms / resonance(m, 0, -1, 2)
        B = -(th / 2) * ms / resonance(m, 0, 1, -2)
    return {
        "u1": [_Mode((0, 2), 0.0, th / m, 0.0, "cos")],
        "u2": [_Mode((m, -1), w, ms * c, ms * dc, "cos")],
        "u3": [_Mode((m, 1), w, ms * sn, ms * dsn, "sin")],
        "r": [_Mode((m, -3), w, A * c, A * dc, "cos"),
              _Mode((m, 3), w, B * sn, B * dsn, "sin")],
    }


def _modes_to_coeffs(grid: Grid, modes: Iterable[_Mode], t: float,
                     derivative: bool = False, operator: bool = False) -> np.ndarray:
    """Exponential coefficients of the modes, of their time derivative, or of
    ``(d_t + d_x Lap)`` applied to them.

    The operator form uses the exact integer mismatch ``omega - phi(k)``
    instead of subtracting two ``O(m^3)`` terms.
    """
    out = np.zeros(grid.shape, dtype=np.complex128)
    for md in modes:
        k1, k2 = md.k
        if abs(k1) >= grid.Mx // 2 or abs(k2) >= grid.My // 2:
            raise ValueError(f"mode {md.k} not resolved by grid {grid.shape}")
        alpha = 0.5 if md.kind == "cos" else 0.5 / 1j
        ph = np.exp(1j * md.omega * t)
        if operator:
            mismatch = float(int(md.omega) - dispersion_symbol(k1, k2))
            val = alpha * ph * (md.damp + 1j * mismatch * md.amp)
        elif derivative:
            val = alpha * ph * (md.damp + 1j * md.omega * md.amp)
        else:
            val = alpha * ph * md.amp
        out[k1 % grid.Mx, k2 % grid.My] += val
        out[-k1 % grid.Mx, -k2 % grid.My] += np.conj(val)
    return out


def min_grid(m: int, for_residual: bool = True, oversample: int = 1) -> Grid:
    """Smallest admissible grid.  Residuals contain x-frequencies up to 2m,
    so they need ``Mx/3 >= 2m``; the field itself only needs ``Mx/3 >= m``."""
    need_x = 2 * m if for_residual else m
    need_y = 6 if for_residual else 3
    Mx = 8
    while Mx // 3 < need_x:
        Mx *= 2
    My = 8
    while My // 3 < need_y:
        My *= 2
    return Grid(Mx, My, oversample)


def _check_grid(grid: Grid, m: int, for_residual: bool) -> None:
    need_x = 2 * m if for_residual else m
    need_y = 6 if for_residual else 3
    if grid.Mx // 3 < need_x or grid.My // 3 < need_y:
        what = "residual" if for_residual else "field"
        raise ValueError(
            f"grid {grid.shape} too small for the {what} at m={m}: need "
            f"Mx/3 >= {need_x} and My/3 >= {need_y}")


def build(p: ApproxSolutionParams, t: float, grid: Grid | None = None,
          literal: bool = False) -> SpectralField:
    """``u_{theta,m}(t)`` assembled mode by mode."""
    grid = grid or min_grid(p.m, for_residual=False)
    _check_grid(grid, p.m, for_residual=False)
    terms = _terms(p, t, literal)
    modes = [md for group in terms.values() for md in group]
    return SpectralField(grid, _modes_to_coeffs(grid, modes, t), real=True)


def remainder(p: ApproxSolutionParams, t: float, grid: Grid | None = None,
              literal: bool = False) -> SpectralField:
    """Correction modes at ``(m, -3)`` and ``(m, 3)`` (plus conjugates)."""
    grid = grid or min_grid(p.m, for_residual=False)
    _check_grid(grid, p.m, for_residual=False)
    return SpectralField(grid, _modes_to_coeffs(grid, _terms(p, t, literal)["r"], t))


def time_derivative(p: ApproxSolutionParams, t: float, grid: Grid | None = None,
                    literal: bool = False) -> SpectralField:
    """Analytic ``d/dt u_{theta,m}(t)``."""
    grid = grid or min_grid(p.m, for_residual=False)
    _check_grid(grid, p.m, for_residual=False)
    modes = [md for group in _terms(p, t, literal).values() for md in group]
    return SpectralField(grid, _modes_to_coeffs(grid, modes, t, derivative=True))


def mode_support(p: ApproxSolutionParams) -> list[tuple[int, int]]:
    m = int(p.m)
    base = [(0, 2), (m, -1), (m, 1), (m, -3), (m, 3)]
    return base + [(-a, -b) for a, b in base]


def _linear_op(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Spatial part of the linear operator: ``d_x Laplacian`` = ``-i phi(k)``."""
    kx, ky = grid.wavenumbers()
    return -1j * dispersion_symbol(kx, ky).astype(float) * coeffs


def _product_dx(grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients of ``a * d_x b`` (dealiased, exact when both are in band)."""
    kx, _ = grid.wavenumbers()
    mask = dealias_mask(grid)
    fa = to_grid(np.where(mask, a, 0.0), real=True)
    fb = to_grid(np.where(mask, 1j * kx * b, 0.0), real=True)
    return np.where(mask, from_grid(fa * fb), 0.0)


def residual_parts(p: ApproxSolutionParams, t: float, grid: Grid | None = None,
                   literal: bool = False) -> dict[str, SpectralField]:
    """The residual split the way the cancellation is organised.

    ``waves``      (d_t + d_x Lap)(u2 + u3)
    ``resonant``   u1 d_x (u2 + u3)
    ``correction`` (d_t + d_x Lap) r
    ``rest``       u1 d_x r + (u2 + u3 + r) d_x u

    ``u1`` is stationary, so these four sum to the full residual.
    """
    grid = grid or min_grid(p.m)
    _check_grid(grid, p.m, for_residual=True)
    terms = _terms(p, t, literal)

    def coeffs(names: Sequence[str], operator: bool = False) -> np.ndarray:
        modes = [md for n in names for md in terms[n]]
        return _modes_to_coeffs(grid, modes, t, operator=operator)

    u1 = coeffs(["u1"])
    waves = coeffs(["u2", "u3"])
    r = coeffs(["r"])
    full = u1 + waves + r
    parts = {
        "waves": coeffs(["u2", "u3"], operator=True),
        "resonant": _product_dx(grid, u1, waves),
        "correction": coeffs(["r"], operator=True),
        "rest": _product_dx(grid, u1, r) + _product_dx(grid, waves + r, full),
    }
    return {k: SpectralField(grid, v, real=True) for k, v in parts.items()}


def residual(p: ApproxSolutionParams, t: float, grid: Grid | None = None,
             literal: bool = False) -> SpectralField:
    """``G = (d_t + d_x Lap) u + u d_x u`` for ``u = u_{theta,m}``."""
    parts = residual_parts(p, t, grid, literal)
    total = sum((f.coeffs for f in parts.values()), np.zeros(parts["waves"].grid.shape))
    return SpectralField(parts["waves"].grid, total, real=True)


def pair_cancellation(p: ApproxSolutionParams, t: float, grid: Grid | None = None,
                      literal: bool = False) -> tuple[float, float]:
    """Largest coefficient at ``(+-m, +-1)`` of ``waves + resonant`` and of the
    full residual.

    The first vanishes identically (the travelling pair is driven exactly by
    ``cos(2y)``); the second also carries ``u1 d_x r``, of size
    ``m^(-s-1)``.
    """
    parts = residual_parts(p, t, grid, literal)
    grid = parts["waves"].grid
    m = int(p.m)
    idx = [(a % grid.Mx, b % grid.My) for a in (m, -m) for b in (1, -1)]
    lead = parts["waves"].coeffs + parts["resonant"].coeffs
    full = sum((f.coeffs for f in parts.values()), np.zeros(grid.shape))
    return (float(max(abs(lead[i]) for i in idx)), float(max(abs(full[i]) for i in idx)))


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept and rms residual of ``log y`` vs ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = float(np.sqrt(res[0] / len(lx))) if len(res) else 0.0
    return float(coef[0]), float(coef[1]), rms


@dataclass
class ResidualScan:
    theta: float
    s: float
    ms: list[int]
    l2: list[float]
    hs: list[float]
    l2_slope: float
    hs_slope: float
    l2_fit_rms: float

    @property
    def predicted_slope(self) -> float:
        return max(-1.0 - self.s, 1.0 - 2.0 * self.s)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m", "l2_residual", "hs_residual"])
            for m, a, b in zip(self.ms, self.l2, self.hs):
                w.writerow([m, format(a, ".17g"), format(b, ".17g")])


DEFAULT_SCAN_TIMES = tuple(np.linspace(0.0, 1.0, 21))


def residual_norm_scan(theta: float, s: float, ms: Sequence[int],
                       times: Sequence[float] = DEFAULT_SCAN_TIMES,
                       literal: bool = False) -> ResidualScan:
    """Sup over ``times`` of the residual norms for each ``m``, with log-log fits."""
    ms = [int(m) for m in ms]
    if len(ms) < 3:
        raise ValueError("residual_norm_scan needs at least three values of m")
    if any(m & (m - 1) for m in ms):
        raise ValueError("scan values of m must be powers of two")
    l2, hs = [], []
    for m in ms:
        p = ApproxSolutionParams(theta, m, s)
        grid = min_grid(m)
        best_l2 = best_hs = 0.0
        for t in times:
            G = residual(p, t, grid, literal)
            best_l2 = max(best_l2, l2_norm(G))
            best_hs = max(best_hs, sobolev_norm(G, s))
        l2.append(best_l2)
        hs.append(best_hs)
    slope, _, rms = fit_loglog(ms, l2)
    hs_slope, _, _ = fit_loglog(ms, hs)
    return ResidualScan(theta, s, ms, l2, hs, slope, hs_slope, rms)


@dataclass
class DistanceProfile:
    m: int
    s: float
    t: np.ndarray
    distance: np.ndarray
    predicted: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "distance", "predicted"])
            for row in zip(self.t, self.distance, self.predicted):
                w.writerow([format(float(v), ".17g") for v in row])


def distance_profile(m: int, s: float, ts: Sequence[float],
                     grid: Grid | None = None) -> DistanceProfile:
    """``||u_{1,m}(t) - u_{-1,m}(t)||_{H^s}`` against ``2|sin(t/2)| pi sqrt 2``."""
    grid = grid or min_grid(m, for_residual=False)
    ts = np.asarray(ts, dtype=float)
    d = np.array([
        sobolev_norm(build(ApproxSolutionParams(1.0, m, s), t, grid)
                     - build(ApproxSolutionParams(-1.0, m, s), t, grid), s)
        for t in ts
    ])
    pred = 2.0 * np.abs(np.sin(ts / 2.0)) * np.pi * math.sqrt(2.0)
    return DistanceProfile(m, s, ts, d, pred)
