"""Empirical and Marchenko-Pastur D-transforms.

The D-transform of a singular-value law mu on an n x m (n <= m) matrix is

    D(z) = phi1(z) * phi2(z),
    phi1(z) = int z / (z^2 - t^2) dmu(t),
    phi2(z) = c * phi1(z) + (1 - c) / z,      c = n / m.

For an empirical spectrum both factors reduce to scalar sums over the
singular values; the m - n structural zeros of X^T X enter phi2 through the
(1 - c) / z term exactly.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .linalg import ValidationError

GUARD_GAP = 1e-4


class PoleProximityError(ValueError):
    """Evaluation point lies inside, or too close to, the noise spectrum."""

    def __init__(self, z, value):
        self.z = float(z)
        self.value = float(value)
        super().__init__(
            f"z={self.z:.6g} is within the relative guard gap {GUARD_GAP:g} of singular value {self.value:.6g}"
        )


@dataclass(frozen=True)
class NoiseSpectrum:
    """Noise singular values with the effective dimensions they live in."""

    values: np.ndarray
    eff_rows: int
    eff_cols: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if vals.size != self.eff_rows:
            raise ValidationError(f"expected {self.eff_rows} values, got {vals.size}")
        if not 1 <= self.eff_rows <= self.eff_cols:
            raise ValidationError("need 1 <= eff_rows <= eff_cols")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValidationError("noise singular values must be finite and nonnegative")
        if np.any(np.diff(vals) > 0):
            raise ValidationError("noise singular values must be sorted descending")
        object.__setattr__(self, "values", vals)

    @property
    def edge(self):
        """Largest noise singular value; proxy for the bulk edge."""
        return float(self.values[0])

    def check_pole(self, z):
        if not z > self.edge * (1.0 + GUARD_GAP):
            raise PoleProximityError(z, self.edge)


def _factors(z, spec):
    t, dt = _kernels.spectral_sums(np.array([z], dtype=np.float64), spec.values)
    t, dt = float(t[0]), float(dt[0])
    pad = spec.eff_cols - spec.eff_rows
    phi1 = t / spec.eff_rows
    phi2 = (t + pad / z) / spec.eff_cols
    dphi1 = dt / spec.eff_rows
    dphi2 = (dt - pad / (z * z)) / spec.eff_cols
    return phi1, phi2, dphi1, dphi2


def empirical_d(z, spec):
    spec.check_pole(z)
    phi1, phi2, _, _ = _factors(z, spec)
    return phi1 * phi2


def empirical_d_derivative(z, spec):
    spec.check_pole(z)
    phi1, phi2, dphi1, dphi2 = _factors(z, spec)
    return dphi1 * phi2 + phi1 * dphi2


def empirical_d_pair(zs, spec):
    """Vectorised (D, D') at several points; every point must clear the pole guard."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.float64))
    for z in zs:
        spec.check_pole(z)
    t, dt = _kernels.spectral_sums(zs, spec.values)
    pad = spec.eff_cols - spec.eff_rows
    phi1 = t / spec.eff_rows
    phi2 = (t + pad / zs) / spec.eff_cols
    dphi1 = dt / spec.eff_rows
    dphi2 = (dt - pad / (zs * zs)) / spec.eff_cols
    return phi1 * phi2, dphi1 * phi2 + phi1 * dphi2


# -- Marchenko-Pastur with sampling probability p -----------------------------


@dataclass(frozen=True)
class MpParams:
    """Aspect ratio c = n/m and observation probability p."""

    c: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise ValidationError(f"c must lie in (0, 1], got {self.c}")
        if not 0 < self.p <= 1:
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")

    @property
    def lower_edge(self):
        return np.sqrt(self.p) * (1 - np.sqrt(self.c))

    @property
    def edge(self):
        return np.sqrt(self.p) * (1 + np.sqrt(self.c))


def mp_density(x, mp):
    """Continuous part of the singular-value density of an n x m matrix with
    i.i.d. entries of variance p/m."""
    x = np.asarray(x, dtype=np.float64)
    p, c = mp.p, mp.c
    inside = (x > mp.lower_edge) & (x < mp.edge)
    rad = np.where(inside, 4 * p * p * c - (x * x - p - p * c) ** 2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.sqrt(np.clip(rad, 0, None)) / (np.pi * p * c * x)
    return np.where(inside, dens, 0.0)


def _check_outside(z, mp):
    if not z > mp.edge:
        raise ValidationError(f"z={z} must exceed the bulk edge {mp.edge:.6g}")


def mp_d_transform(z, mp):
    _check_outside(z, mp)
    p, c = mp.p, mp.c
    y = z * z - p * (1 + c)
    # (y - r) / (2 p^2 c) rationalised to avoid cancellation for large z
    return 2.0 / (y + np.sqrt(y * y - 4 * p * p * c))


def mp_d_transform_derivative(z, mp):
    _check_outside(z, mp)
    p, c = mp.p, mp.c
    y = z * z - p * (1 + c)
    r = np.sqrt(y * y - 4 * p * p * c)
    return -4.0 * z / ((y + r) * r)


def mp_d_inverse(value, mp):
    """Point z > b with D(z) = value; requires 0 < value < D(b+) = 1/(p sqrt c)."""
    p, c = mp.p, mp.c
    if not 0 < value < 1 / (p * np.sqrt(c)):
        raise ValidationError(f"{value} is outside the range of the D-transform")
    # D (p^2 c D - y) = -1  with y = z^2 - p(1+c)  =>  y = p^2 c D + 1/D
    y = p * p * c * value + 1 / value
    return float(np.sqrt(y + p * (1 + c)))
