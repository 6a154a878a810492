"""Integrating-factor RK4 integration of the ZK equation on T^2,

    w_t + w_xxx + w_xyy + w w_x = 0,

with conservation diagnostics.

The dispersive part is applied exactly through ``exp(i phi(m) t)``; the
quadratic term ``-(1/2) d_x (w^2)`` is evaluated pseudo-spectrally on the
``Mx x My`` grid with the two-thirds rule, so the semi-discrete system is the
Galerkin truncation to the dealiased band.  Internally the state is kept as
the half spectrum (``rfft2`` layout) for speed.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .spectral import (
    TWO_PI, Grid, SpectralField, dealias_mask, sobolev_norm, symbol_array, to_grid,
)

__all__ = [
    "SolverConfig", "Trajectory", "InvariantRecord", "BlowUpError",
    "StabilityError", "nonlinear_term", "step", "solve", "invariants",
    "gT_diagnostic", "hs_growth_check", "HsGrowthReport", "ZKStepper",
]

log = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e12
STABILITY_LIMIT = 0.5


class BlowUpError(RuntimeError):
    pass


class StabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 5e-4
    T: float = 1.0
    observer_stride: int = 20
    dealias: bool = True
    hs_orders: tuple[float, ...] = (2.0,)
    nonlinear_scale: float = 1.0
    keep_states: bool = True
    check_stability: bool = True

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if self.observer_stride < 1:
            raise ValueError("observer_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


class ZKStepper:
    """Precomputed operators for one grid.  Works on half spectra."""

    def __init__(self, grid: Grid, dealias: bool = True, nonlinear_scale: float = 1.0):
        self.grid = grid
        nh = grid.My // 2 + 1
        self.half = (grid.Mx, nh)
        self.phi = symbol_array(grid)[:, :nh]
        kx, _ = grid.wavenumbers()
        self.ikx = 1j * kx[:, :nh].astype(float)
        mask = dealias_mask(grid)[:, :nh] if dealias else np.ones(self.half, bool)
        mask &= ~grid.nyquist_mask()[:, :nh]
        self.mask = mask
        self.scale = float(nonlinear_scale)
        self.last_sup = 0.0

    def to_half(self, F: SpectralField) -> np.ndarray:
        return np.array(F.coeffs[:, : self.half[1]])

    def to_field(self, h: np.ndarray) -> SpectralField:
        c = np.zeros(self.grid.shape, dtype=np.complex128)
        nh = self.half[1]
        c[:, :nh] = h
        # fill negative m2 from Hermitian symmetry
        My = self.grid.My
        j = np.arange(1, My // 2)
        rows = (-np.arange(self.grid.Mx)) % self.grid.Mx
        c[:, My - j] = np.conj(h[rows][:, j])
        return SpectralField(self.grid, c, real=True)

    def physical(self, h: np.ndarray) -> np.ndarray:
        return sfft.irfft2(h, s=self.grid.shape, norm="forward")

    def nonlinear(self, h: np.ndarray) -> np.ndarray:
        if self.scale == 0.0:
            return np.zeros_like(h)
        w = self.physical(h * self.mask)
        self.last_sup = float(np.max(np.abs(w)))
        w2 = sfft.rfft2(w * w, norm="forward")
        return (-0.5 * self.scale) * self.ikx * w2 * self.mask

    def step(self, h: np.ndarray, dt: float) -> np.ndarray:
        """One Lawson (integrating-factor) RK4 step."""
        E = np.exp(0.5j * dt * self.phi)
        E2 = E * E
        k1 = self.nonlinear(h)
        sup_at_start = self.last_sup
        k2 = self.nonlinear(E * (h + 0.5 * dt * k1))
        k3 = self.nonlinear(E * h + 0.5 * dt * k2)
        k4 = self.nonlinear(E2 * h + dt * E * k3)
        self.last_sup = sup_at_start
        out = E2 * h + (dt / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)
        if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > BLOWUP_LIMIT:
            raise BlowUpError("coefficient magnitude exceeded 1e12")
        return out

    def stability_number(self, dt: float) -> float:
        return abs(dt) * self.last_sup * (self.grid.Mx / 3.0)


def nonlinear_term(F: SpectralField, dealias: bool = True) -> SpectralField:
    """``N(w) = -w w_x = -(1/2) d_x (w^2)``, dealiased pseudo-spectral product."""
    F.check_real()
    st = ZKStepper(F.grid, dealias=dealias)
    return st.to_field(st.nonlinear(st.to_half(F)))


def step(F: SpectralField, dt: float, nonlinear: bool = True,
         dealias: bool = True) -> SpectralField:
    """Advance ``F`` by ``dt`` (negative ``dt`` integrates backwards).

    With ``nonlinear=False`` this is exactly ``propagate(F, dt)``.
    """
    st = ZKStepper(F.grid, dealias=dealias, nonlinear_scale=1.0 if nonlinear else 0.0)
    return st.to_field(st.step(st.to_half(F), dt))


@dataclass(frozen=True)
class InvariantRecord:
    mass: float
    l2: float
    energy: float
    x_mean_modes: np.ndarray = field(repr=False)


def invariants(F: SpectralField) -> InvariantRecord:
    """Mass, L^2 norm, Hamiltonian and the x-mean modes ``c_(0,n)``.

    The cubic part of the energy uses the dealiased square of the dealiased
    field, so it is exact for Galerkin-truncated states.
    """
    grid = F.grid
    c = np.where(dealias_mask(grid), F.coeffs, 0.0)
    kx, ky = grid.wavenumbers()
    k2 = (kx * kx + ky * ky).astype(float)
    area = TWO_PI ** 2
    w = sfft.ifft2(c, norm="forward").real
    sq = sfft.fft2(w * w, norm="forward")
    sq = np.where(dealias_mask(grid), sq, 0.0)
    cubic = area * float(np.real(np.sum(c * np.conj(sq))))
    grad = 0.5 * area * float(np.sum(k2 * np.abs(F.coeffs) ** 2))
    xmean = F.coeffs[0, :].copy()
    xmean[grid.My // 2] = 0.0
    return InvariantRecord(
        mass=area * float(F.coeffs[0, 0].real),
        l2=float(TWO_PI * np.sqrt(np.sum(np.abs(F.coeffs) ** 2))),
        energy=grad - cubic / 6.0,
        x_mean_modes=xmean,
    )


def _sups(F: SpectralField) -> tuple[float, float]:
    """Grid sups of ``|w|`` and ``|grad w|`` on the refined grid."""
    grid = F.grid
    shape = grid.fine_shape
    kx, ky = grid.wavenumbers()
    w = to_grid(F.coeffs, shape)
    wx = to_grid(1j * kx * F.coeffs, shape)
    wy = to_grid(1j * ky * F.coeffs, shape)
    return float(np.max(np.abs(w))), float(np.max(np.sqrt(wx * wx + wy * wy)))


@dataclass
class Trajectory:
    """Observer records along one run; ``states`` aligned with ``times``."""

    grid: Grid
    hs_orders: tuple[float, ...]
    times: list[float] = field(default_factory=list)
    states: list[SpectralField] = field(default_factory=list)
    observers: list[dict] = field(default_factory=list)
    aborted: str | None = None
    last: SpectralField | None = None

    def record(self, t: float, F: SpectralField, keep_state: bool = True) -> None:
        inv = invariants(F)
        sup_w, sup_grad = _sups(F)
        rec = {
            "t": t, "mass": inv.mass, "l2": inv.l2, "energy": inv.energy,
            "x_mean_modes": inv.x_mean_modes,
            "sup_w": sup_w, "sup_grad_w": sup_grad,
        }
        for s in self.hs_orders:
            rec[f"hs_{s:g}"] = sobolev_norm(F, s)
        self.times.append(t)
        self.observers.append(rec)
        self.last = F
        if keep_state:
            self.states.append(F)

    @property
    def final(self) -> SpectralField:
        """Last recorded state; kept even when ``keep_states`` is off."""
        if self.last is not None:
            return self.last
        return self.states[-1]

    def column(self, key: str) -> np.ndarray:
        return np.array([o[key] for o in self.observers])

    def csv_columns(self) -> list[str]:
        return ["t", "mass", "l2", "energy",
                *[f"hs_{s:g}" for s in self.hs_orders], "sup_w", "sup_grad_w"]

    def write_csv(self, path) -> None:
        cols = self.csv_columns()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for rec in self.observers:
                writer.writerow([format(float(rec[c]), ".17g") for c in cols])

    def max_drift(self) -> dict[str, float]:
        """Largest relative drift of each invariant against t = 0.

        Mass and the x-mean modes are normalised by their Cauchy-Schwarz
        bounds in terms of the initial L^2 norm when they start at zero.
        """
        o0 = self.observers[0]
        l2_0 = o0["l2"]
        out = {}
        for key, floor in (("mass", TWO_PI * l2_0), ("l2", 0.0), ("energy", 0.0)):
            ref = max(abs(o0[key]), floor)
            vals = self.column(key)
            out[key] = float(np.max(np.abs(vals - o0[key])) / ref) if ref > 0 else 0.0
        xm0 = o0["x_mean_modes"]
        ref = max(float(np.max(np.abs(xm0))), l2_0 / TWO_PI)
        out["x_mean_modes"] = max(
            float(np.max(np.abs(o["x_mean_modes"] - xm0))) for o in self.observers
        ) / ref if ref > 0 else 0.0
        return out


def solve(w0: SpectralField, cfg: SolverConfig) -> Trajectory:
    """Run the flow map from ``w0`` to ``cfg.T``.

    Blow-up or a violated stability number stops the run; the partial
    trajectory is returned with ``aborted`` set.
    """
    w0.check_real()
    st = ZKStepper(w0.grid, dealias=cfg.dealias, nonlinear_scale=cfg.nonlinear_scale)
    traj = Trajectory(w0.grid, tuple(cfg.hs_orders))
    h = st.to_half(w0)
    if cfg.dealias:
        h = h * st.mask
    traj.record(0.0, st.to_field(h), cfg.keep_states)
    n = cfg.n_steps
    for k in range(1, n + 1):
        try:
            h = st.step(h, cfg.dt)
        except BlowUpError as exc:
            traj.aborted = f"blow-up at step {k}: {exc}"
            log.warning(traj.aborted)
            break
        if cfg.check_stability and st.scale != 0.0:
            number = st.stability_number(cfg.dt)
            if number > STABILITY_LIMIT:
                traj.aborted = f"stability number {number:.3g} > {STABILITY_LIMIT} at step {k}"
                log.warning(traj.aborted)
                break
        if k % cfg.observer_stride == 0 or k == n:
            traj.record(k * cfg.dt, st.to_field(h), cfg.keep_states)
    return traj


def gT_diagnostic(traj: Trajectory) -> float:
    """Trapezoidal ``int_0^T (||w||_inf + ||grad w||_inf) dt`` over observers."""
    if len(traj.observers) < 2:
        raise ValueError("gT_diagnostic needs at least two observer records")
    t = np.asarray(traj.times)
    f = traj.column("sup_w") + traj.column("sup_grad_w")
    return float(np.trapezoid(f, t))


@dataclass(frozen=True)
class HsGrowthReport:
    s: float
    ratio: float
    g: float
    implied_constant: float
    ceiling: float
    passed: bool


def hs_growth_check(traj: Trajectory, s: float, c_max: float = 10.0) -> HsGrowthReport:
    """Compare ``max_t ||w(t)||_{H^s} / ||w0||_{H^s}`` with ``exp(c_max g(T))``."""
    if s < 1:
        raise ValueError("hs_growth_check needs s >= 1")
    key = f"hs_{s:g}"
    if traj.observers and key in traj.observers[0]:
        norms = traj.column(key)
    else:
        norms = np.array([sobolev_norm(F, s) for F in traj.states])
    ratio = float(np.max(norms) / norms[0]) if norms[0] > 0 else 1.0
    g = gT_diagnostic(traj)
    implied = math.log(ratio) / g if g > 0 and ratio > 1 else 0.0
    ceiling = math.exp(c_max * g)
    return HsGrowthReport(s, ratio, g, implied, ceiling, ratio <= ceiling)

