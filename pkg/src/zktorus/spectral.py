"""Fourier representation of functions on the 2-torus.

A function on T^2 = R^2/(2 pi Z)^2 is stored by its truncated lattice of
coefficients under the convention

    f(x, y) = sum_m c_m exp(i m . x),     ||f||_{L^2}^2 = (2 pi)^2 sum |c_m|^2.

Coefficient arrays use the FFT index layout: ``coeffs[i, j]`` holds the mode
``(kx[i], ky[j])`` with ``kx = fftfreq(Mx) * Mx``.  The Nyquist row/column
(``m1 = -Mx/2`` or ``m2 = -My/2``) is kept at zero so that every stored mode
has its Hermitian partner on the lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid", "SpectralField", "RealField",
    "analyze", "synthesize", "sobolev_norm", "l2_norm", "lp_project",
    "dyadic_blocks", "dispersion_symbol", "propagate", "smooth_cutoff",
    "bump", "sup_norm", "dealias", "dealias_mask", "direct_evaluate",
    "SymmetryError", "random_field", "to_grid", "from_grid", "embed", "truncate",
    "symbol_array", "TWO_PI",
]

TWO_PI = 2.0 * np.pi
_SYMBOL_LIMIT = 200_000
_HERMITIAN_RTOL = 1e-12


class SymmetryError(ValueError):
    """A field flagged real violates Hermitian symmetry."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Retained modes ``|m1| < Mx/2``, ``|m2| < My/2`` and the matching
    collocation grid ``x_j = 2 pi j / Mx``, ``y_k = 2 pi k / My``.

    ``oversample`` refines the collocation grid used by :func:`synthesize`
    and :func:`sup_norm`.
    """

    Mx: int
    My: int
    oversample: int = 4

    def __post_init__(self):
        for name in ("Mx", "My"):
            n = getattr(self, name)
            if not (isinstance(n, (int, np.integer)) and _is_pow2(int(n)) and n >= 8):
                raise ValueError(f"{name} must be a power of two >= 8, got {n!r}")
        if int(self.oversample) < 1:
            raise ValueError("oversample must be a positive integer")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Mx, self.My)

    @property
    def fine_shape(self) -> tuple[int, int]:
        return (self.oversample * self.Mx, self.oversample * self.My)

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer wavenumber arrays broadcast to ``(Mx, My)``."""
        kx = np.fft.fftfreq(self.Mx, 1.0 / self.Mx).astype(np.int64)
        ky = np.fft.fftfreq(self.My, 1.0 / self.My).astype(np.int64)
        return np.meshgrid(kx, ky, indexing="ij")

    def nyquist_mask(self) -> np.ndarray:
        kx, ky = self.wavenumbers()
        return (kx == -self.Mx // 2) | (ky == -self.My // 2)

    def points(self, fine: bool = True) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.fine_shape if fine else self.shape
        x = TWO_PI * np.arange(nx) / nx
        y = TWO_PI * np.arange(ny) / ny
        return np.meshgrid(x, y, indexing="ij")

    def with_oversample(self, oversample: int) -> "Grid":
        return Grid(self.Mx, self.My, oversample)


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a function on T^2."""

    grid: Grid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {c.shape} does not match grid {self.grid.shape}")
        c = c.copy()
        c[self.grid.nyquist_mask()] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid, real: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), real)

    @classmethod
    def from_modes(cls, grid: Grid, modes: Mapping[tuple[int, int], complex],
                   real: bool = True) -> "SpectralField":
        """Build a field from ``{(m1, m2): c}``.  Repeated modes accumulate."""
        c = np.zeros(grid.shape, dtype=np.complex128)
        for (m1, m2), value in modes.items():
            if abs(m1) >= grid.Mx // 2 or abs(m2) >= grid.My // 2:
                raise ValueError(f"mode {(m1, m2)} not resolved by grid {grid.shape}")
            c[m1 % grid.Mx, m2 % grid.My] += value
        return cls(grid, c, real)

    def coeff(self, m1: int, m2: int) -> complex:
        if abs(m1) >= self.grid.Mx // 2 or abs(m2) >= self.grid.My // 2:
            return 0j
        return complex(self.coeffs[m1 % self.grid.Mx, m2 % self.grid.My])

    def hermitian_defect(self) -> float:
        """Relative size of ``c_{-m} - conj(c_m)``."""
        c = self.coeffs
        flipped = np.roll(c[::-1, ::-1], (1, 1), axis=(0, 1))
        scale = np.max(np.abs(c)) if c.size else 0.0
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(flipped - np.conj(c))) / scale)

    def check_real(self, rtol: float = _HERMITIAN_RTOL) -> None:
        defect = self.hermitian_defect()
        if defect > rtol:
            raise SymmetryError(f"Hermitian symmetry violated (relative defect {defect:.3e})")

    def replace(self, coeffs: np.ndarray, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.real if real is None else real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self.replace(self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self.replace(self.coeffs - other.coeffs, self.real and other.real)

    def __mul__(self, scalar: float) -> "SpectralField":
        real = self.real and np.isrealobj(scalar)
        return self.replace(self.coeffs * scalar, real)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.replace(-self.coeffs)


@dataclass(frozen=True)
class RealField:
    """Real samples on the ``oversample``-refined collocation grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.fine_shape:
            raise ValueError(f"values shape {v.shape} != {self.grid.fine_shape}")
        object.__setattr__(self, "values", v)


def _same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid.shape != b.grid.shape:
        raise ValueError(f"grid mismatch {a.grid.shape} vs {b.grid.shape}")


# -- raw-array transforms (shared by the solver and the labs) ---------------

def embed(coeffs: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad an FFT-ordered coefficient array into a larger one."""
    Mx, My = coeffs.shape
    Px, Py = shape
    if Px < Mx or Py < My:
        raise ValueError("target shape must not be smaller than the source")
    out = np.zeros(shape, dtype=np.complex128)
    hx, hy = Mx // 2, My // 2
    rows = np.r_[0:hx, Px - hx:Px]
    cols = np.r_[0:hy, Py - hy:Py]
    out[np.ix_(rows, cols)] = coeffs
    return out


def truncate(coeffs: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Extract the FFT-ordered block of ``shape`` modes from a larger array."""
    Px, Py = coeffs.shape
    Mx, My = shape
    hx, hy = Mx // 2, My // 2
    rows = np.r_[0:hx, Px - hx:Px]
    cols = np.r_[0:hy, Py - hy:Py]
    out = coeffs[np.ix_(rows, cols)].copy()
    out[hx, :] = 0.0
    out[:, hy] = 0.0
    return out


def to_grid(coeffs: np.ndarray, shape: tuple[int, int] | None = None,
            real: bool = True) -> np.ndarray:
    """Evaluate ``sum c_m e^{i m.x}`` on a (possibly finer) collocation grid."""
    c = coeffs if shape is None or tuple(shape) == coeffs.shape else embed(coeffs, shape)
    if real:
        ny = c.shape[1]
        return sfft.irfft2(c[:, : ny // 2 + 1], s=c.shape, norm="forward")
    return sfft.ifft2(c, norm="forward")


def from_grid(values: np.ndarray, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Coefficients of grid samples, truncated to ``shape`` modes."""
    c = sfft.fft2(values, norm="forward")
    if shape is None or tuple(shape) == c.shape:
        out = c.copy()
        out[c.shape[0] // 2, :] = 0.0
        out[:, c.shape[1] // 2] = 0.0
        return out
    return truncate(c, shape)


# -- public operations ------------------------------------------------------

def analyze(f: RealField) -> SpectralField:
    """Fourier coefficients of a real field sampled on the refined grid."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("analyze: non-finite input values")
    return SpectralField(f.grid, from_grid(f.values, f.grid.shape), real=True)


def synthesize(F: SpectralField) -> RealField:
    """Real samples of ``F`` on its refined collocation grid.

    Raises
    ------
    SymmetryError
        If ``F`` does not represent a real function.
    """
    F.check_real()
    return RealField(F.grid, to_grid(F.coeffs, F.grid.fine_shape, real=True))


def direct_evaluate(F: SpectralField, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Direct summation of the Fourier series at arbitrary points (slow)."""
    kx, ky = F.grid.wavenumbers()
    mask = F.coeffs != 0
    c, kx, ky = F.coeffs[mask], kx[mask], ky[mask]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phase = np.multiply.outer(x, kx) + np.multiply.outer(y, ky)
    return np.exp(1j * phase) @ c


def _weights(grid: Grid) -> np.ndarray:
    kx, ky = grid.wavenumbers()
    return (kx * kx + ky * ky).astype(np.float64)


def sobolev_norm(F: SpectralField, s: float) -> float:
    """``||J^s f||_{L^2}`` with ``J^s`` the multiplier ``(1 + |m|^2)^{s/2}``."""
    w = (1.0 + _weights(F.grid)) ** s
    return float(TWO_PI * np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2)))


def l2_norm(F: SpectralField) -> float:
    return float(TWO_PI * np.sqrt(np.sum(np.abs(F.coeffs) ** 2)))


def _shell_mask(grid: Grid, N: int) -> np.ndarray:
    if N != 0 and not _is_pow2(int(N)):
        raise ValueError(f"dyadic block must be 0 or a power of two, got {N}")
    r2 = _weights(grid)
    if N == 0:
        return r2 < 1.0
    return (r2 >= N * N) & (r2 < 4 * N * N)


def lp_project(F: SpectralField, N: int) -> SpectralField:
    """Littlewood-Paley projection onto the shell ``N <= |m| < 2N``
    (``|m| < 1`` for ``N = 0``)."""
    return F.replace(np.where(_shell_mask(F.grid, N), F.coeffs, 0.0))


def dyadic_blocks(grid: Grid) -> list[int]:
    """All dyadic blocks that meet the grid's retained lattice."""
    rmax = np.sqrt(_weights(grid).max())
    blocks = [0]
    N = 1
    while N <= rmax:
        blocks.append(N)
        N *= 2
    return blocks


def dispersion_symbol(m, n):
    """Time frequency ``m^3 + m n^2`` of the plane wave ``e^{i(mx+ny)}``.

    Python integers are exact; integer arrays are evaluated in int64, which
    cannot overflow inside the accepted range ``|m|, |n| <= 2e5``.
    """
    if isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer)):
        m, n = int(m), int(n)
        if abs(m) > _SYMBOL_LIMIT or abs(n) > _SYMBOL_LIMIT:
            raise OverflowError("dispersion_symbol: |m|, |n| must be <= 2e5")
        return m * m * m + m * n * n
    m = np.asarray(m)
    n = np.asarray(n)
    if m.dtype.kind in "iu" and n.dtype.kind in "iu":
        if np.any(np.abs(m) > _SYMBOL_LIMIT) or np.any(np.abs(n) > _SYMBOL_LIMIT):
            raise OverflowError("dispersion_symbol: |m|, |n| must be <= 2e5")
        m = m.astype(np.int64)
        n = n.astype(np.int64)
    return m * m * m + m * n * n


def symbol_array(grid: Grid) -> np.ndarray:
    kx, ky = grid.wavenumbers()
    return dispersion_symbol(kx, ky).astype(np.float64)


def propagate(F: SpectralField, t: float) -> SpectralField:
    """Linear ZK flow ``W(t)``: multiply ``c_m`` by ``exp(i phi(m) t)``."""
    if t == 0:
        return F
    return F.replace(F.coeffs * np.exp(1j * symbol_array(F.grid) * t))


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def bump(r):
    """Smooth even cutoff: 1 on ``|r| <= 1``, 0 on ``|r| >= 2``."""
    a = np.abs(np.asarray(r, dtype=float))
    left = _psi(2.0 - a)
    right = _psi(a - 1.0)
    denom = left + right
    out = np.where(a <= 1.0, 1.0, 0.0)
    mid = (a > 1.0) & (a < 2.0)
    out = np.where(mid, left / np.where(mid, denom, 1.0), out)
    return out if out.ndim else float(out)


def smooth_cutoff(r, N: float):
    """The bump rescaled to ``|r| <= N`` (value 1) / ``|r| >= 2N`` (value 0)."""
    if N < 1:
        raise ValueError("smooth_cutoff requires N >= 1")
    return bump(np.asarray(r, dtype=float) / N)


def sup_norm(f: RealField) -> float:
    """Grid maximum of ``|f|``.

    This is a lower bound for the true sup; it converges as ``oversample``
    grows.
    """
    return float(np.max(np.abs(f.values)))


def dealias_mask(grid: Grid) -> np.ndarray:
    kx, ky = grid.wavenumbers()
    return (np.abs(kx) <= grid.Mx // 3) & (np.abs(ky) <= grid.My // 3)


def dealias(F: SpectralField) -> SpectralField:
    """Two-thirds rule: zero modes with ``|m1| > Mx/3`` or ``|m2| > My/3``."""
    return F.replace(np.where(dealias_mask(F.grid), F.coeffs, 0.0))


def random_field(grid: Grid, rng: np.random.Generator, band: int | None = None,
                 decay: float = 0.0) -> SpectralField:
    """Random real field with modes ``|m| <= band`` and amplitudes
    ``(1 + |m|^2)^{-decay/2}``."""
    kx, ky = grid.wavenumbers()
    r2 = (kx * kx + ky * ky).astype(float)
    band = grid.Mx // 3 if band is None else band
    keep = (r2 <= band * band) & dealias_mask(grid)
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    c = np.where(keep, c * (1.0 + r2) ** (-decay / 2.0), 0.0)
    # Hermitian projection
    flipped = np.roll(c[::-1, ::-1], (1, 1), axis=(0, 1))
    c = 0.5 * (c + np.conj(flipped))
    return SpectralField(grid, c, real=True)
