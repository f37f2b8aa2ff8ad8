"""Zernike polynomials in Noll ordering, unnormalized radial form.

Mode j=1 is piston, 4 defocus, 6 vertical astigmatism, 11 primary
spherical. Values are zero outside the unit disk; coefficients multiply
these dimensionless modes to give physical surface sag.
"""

from __future__ import annotations

import math

import numpy as np

N_MODES = 36


def noll_to_nm(j: int) -> tuple[int, int]:
    """Map Noll index j >= 1 to (n, m); m < 0 means the sin(|m|θ) mode."""
    if j < 1:
        raise ValueError(f"Noll index must be >= 1, got {j}")
    n = 0
    while j > (n + 1) * (n + 2) // 2:
        n += 1
    pos = j - n * (n + 1) // 2  # 1-based position within the order-n row
    if n % 2 == 0:
        mags = [0] + [2 * (k // 2 + 1) for k in range(n)]
    else:
        mags = [2 * (k // 2) + 1 for k in range(n + 1)]
    m_abs = mags[pos - 1]
    if m_abs == 0:
        return n, 0
    # Noll: even j carries cos (m > 0), odd j carries sin (m < 0)
    return n, m_abs if j % 2 == 0 else -m_abs


def radial_coeffs(n: int, m_abs: int) -> list[tuple[int, int]]:
    """Integer coefficients [(power, coeff)] of the radial polynomial R_n^m."""
    out = []
    for k in range((n - m_abs) // 2 + 1):
        c = (-1) ** k * math.factorial(n - k) // (
            math.factorial(k)
            * math.factorial((n + m_abs) // 2 - k)
            * math.factorial((n - m_abs) // 2 - k)
        )
        out.append((n - 2 * k, c))
    return out


def evaluate(j: int, rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate Noll mode j on polar coordinates; zero for rho > 1."""
    n, m = noll_to_nm(j)
    rho = np.asarray(rho, dtype=float)
    r = np.zeros_like(rho)
    for power, c in radial_coeffs(n, abs(m)):
        r += c * rho**power
    if m > 0:
        r = r * np.cos(m * theta)
    elif m < 0:
        r = r * np.sin(-m * theta)
    return np.where(rho <= 1.0, r, 0.0)


def basis_stack(x: np.ndarray, y: np.ndarray, norm_radius: float,
                count: int = N_MODES) -> np.ndarray:
    """Stack of the first `count` Noll modes sampled at (x, y) meters.

    Returns a (count, *x.shape) float array, zero outside r > norm_radius.
    Shared rho powers are reused across modes since high orders repeat them.
    """
    rho = np.hypot(x, y) / norm_radius
    theta = np.arctan2(y, x)
    inside = rho <= 1.0
    max_n = max(noll_to_nm(j)[0] for j in range(1, count + 1))
    powers = [np.ones_like(rho)]
    for _ in range(max_n):
        powers.append(powers[-1] * rho)
    stack = np.empty((count,) + rho.shape, dtype=float)
    for idx, j in enumerate(range(1, count + 1)):
        n, m = noll_to_nm(j)
        r = np.zeros_like(rho)
        for power, c in radial_coeffs(n, abs(m)):
            r += c * powers[power]
        if m > 0:
            r *= np.cos(m * theta)
        elif m < 0:
            r *= np.sin(-m * theta)
        stack[idx] = np.where(inside, r, 0.0)
    return stack
