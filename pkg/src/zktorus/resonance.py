"""Exact arithmetic for the ZK resonance function

    R(m, m1, n, n1) = phi(m, n) - phi(m - m1, n - n1) - phi(m1, n1),
    phi(m, n) = m^3 + m n^2,

and enumeration of its integer zero set.

Scalar entry points use Python integers (arbitrary precision).  The
vectorised helpers use int64: inside the accepted range ``|input| <= 2e5``
every intermediate stays below 2e17, far from the int64 limit.
"""
from __future__ import annotations

import csv
import math
from typing import NamedTuple

import numpy as np

from .spectral import dispersion_symbol

__all__ = [
    "ResonanceQuadruple", "resonance", "resonance_definitional",
    "resonance_array", "resonance_definitional_array", "curvature",
    "enumerate_resonances", "brute_force_resonances", "sqrt3_family_value",
    "write_quadruples_csv",
]

INPUT_LIMIT = 200_000
ENUMERATION_LIMIT = 200


class ResonanceQuadruple(NamedTuple):
    m: int
    m1: int
    n: int
    n1: int
    value: int


def _guard(*args: int) -> None:
    if any(abs(int(a)) > INPUT_LIMIT for a in args):
        raise OverflowError("resonance inputs must satisfy |input| <= 2e5")


def resonance(m: int, m1: int, n: int, n1: int) -> int:
    """Expanded form ``3 m m1 (m-m1) + 2 n n1 (m-m1) + m1 n^2 - m n1^2``."""
    _guard(m, m1, n, n1)
    m, m1, n, n1 = int(m), int(m1), int(n), int(n1)
    return 3 * m * m1 * (m - m1) + 2 * n * n1 * (m - m1) + m1 * n * n - m * n1 * n1


def resonance_definitional(m: int, m1: int, n: int, n1: int) -> int:
    _guard(m, m1, n, n1)
    m, m1, n, n1 = int(m), int(m1), int(n), int(n1)
    return (dispersion_symbol(m, n) - dispersion_symbol(m - m1, n - n1)
            - dispersion_symbol(m1, n1))


def _as_i64(*arrays):
    out = [np.asarray(a, dtype=np.int64) for a in arrays]
    for a in out:
        if a.size and np.max(np.abs(a)) > INPUT_LIMIT:
            raise OverflowError("resonance inputs must satisfy |input| <= 2e5")
    return out


def resonance_array(m, m1, n, n1) -> np.ndarray:
    m, m1, n, n1 = _as_i64(m, m1, n, n1)
    d = m - m1
    return 3 * m * m1 * d + 2 * n * n1 * d + m1 * n * n - m * n1 * n1


def resonance_definitional_array(m, m1, n, n1) -> np.ndarray:
    m, m1, n, n1 = _as_i64(m, m1, n, n1)
    a, b = m - m1, n - n1
    return (m * m * m + m * n * n) - (a * a * a + a * b * b) - (m1 * m1 * m1 + m1 * n1 * n1)


def curvature(m: int) -> tuple[int, int]:
    """``(R(m,0,-1,2), R(m,0,1,-2))``; both equal ``-8 m``."""
    return resonance(m, 0, -1, 2), resonance(m, 0, 1, -2)


def _isqrt_exact(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integer square root of a nonnegative int64 array and a perfect-square flag."""
    r = np.floor(np.sqrt(d.astype(np.float64))).astype(np.int64)
    # correct float rounding by one step either way
    r = np.where(r * r > d, r - 1, r)
    r = np.where((r + 1) * (r + 1) <= d, r + 1, r)
    return r, r * r == d


def _slice_solutions(m: int, B: int) -> np.ndarray:
    """All zeros with the given first entry ``m`` inside the box ``B``."""
    rng = np.arange(-B, B + 1, dtype=np.int64)
    if m == 0:
        # R(0, m1, n, n1) = m1 * n * (n - 2 n1)
        m1, n, n1 = np.meshgrid(rng, rng, rng, indexing="ij")
        hit = (m1 == 0) | (n == 0) | (n == 2 * n1)
        sol = np.stack([np.zeros(hit.sum(), np.int64), m1[hit], n[hit], n1[hit]], axis=1)
        return sol
    # For fixed (m, m1, n) the resonance is quadratic in n1:
    #   -m n1^2 + 2 n (m - m1) n1 + [3 m m1 (m - m1) + m1 n^2] = 0
    m1, n = np.meshgrid(rng, rng, indexing="ij")
    d = m - m1
    c0 = 3 * m * m1 * d + m1 * n * n
    quarter_disc = (n * d) ** 2 + m * c0
    ok = quarter_disc >= 0
    root, square = _isqrt_exact(np.where(ok, quarter_disc, 0))
    ok &= square
    rows = []
    for sign in (1, -1):
        num = n * d + sign * root
        good = ok & (num % m == 0)
        n1 = np.where(good, num // m, 0)
        good &= np.abs(n1) <= B
        rows.append(np.stack([np.full(good.sum(), m, np.int64), m1[good], n[good], n1[good]], axis=1))
    return np.concatenate(rows, axis=0)


def enumerate_resonances(B: int) -> np.ndarray:
    """Integer zeros of R with every entry bounded by ``B`` in absolute value.

    Returns an ``(K, 4)`` int64 array of rows ``(m, m1, n, n1)``, deduplicated
    and sorted lexicographically.  Each slice in ``m`` is solved as a
    quadratic in ``n1`` with an exact integer square root, and every row is
    re-verified against the expanded form.
    """
    if not 1 <= B <= ENUMERATION_LIMIT:
        raise ValueError(f"B must lie in [1, {ENUMERATION_LIMIT}]")
    parts = [_slice_solutions(m, B) for m in range(-B, B + 1)]
    sol = np.unique(np.concatenate(parts, axis=0), axis=0)
    assert not np.any(resonance_array(*sol.T)), "enumeration produced a non-zero"
    return sol


def brute_force_resonances(B: int) -> np.ndarray:
    """Reference enumeration over the whole box (small ``B`` only)."""
    rng = np.arange(-B, B + 1, dtype=np.int64)
    grids = np.meshgrid(rng, rng, rng, rng, indexing="ij")
    vals = resonance_definitional_array(*grids)
    hit = vals == 0
    sol = np.stack([g[hit] for g in grids], axis=1)
    return np.unique(sol, axis=0)


def sqrt3_family_value(m: float, m1: float, factor: float = math.sqrt(3.0)) -> float:
    """Real-argument R at ``(m, m1, factor*m, -factor*m1)``; zero for sqrt(3)."""
    m, m1 = float(m), float(m1)
    n, n1 = factor * m, -factor * m1
    return 3 * m * m1 * (m - m1) + 2 * n * n1 * (m - m1) + m1 * n * n - m * n1 * n1


def write_quadruples_csv(path, rows: np.ndarray) -> None:
    values = resonance_array(*rows.T) if len(rows) else np.zeros(0, np.int64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "m1", "n", "n1", "value"])
        for row, v in zip(rows.tolist(), values.tolist()):
            w.writerow([*row, v])
