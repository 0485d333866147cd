"""Data-driven estimators: OptShrink, truncated SVD (EYM) and soft thresholding."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .dtransform import GUARD_GAP, NoiseSpectrum, PoleProximityError, empirical_d, empirical_d_derivative
from .linalg import SvdFactors, ValidationError

log = logging.getLogger(__name__)

METHODS = ("optshrink", "eym", "svt", "oracle")


@dataclass(frozen=True)
class ShrinkageWeights:
    """Weights applied positionally to the leading singular triplets."""

    weights: np.ndarray
    method: str
    r_hat: int
    svt_lambda: float = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def to_dict(self):
        out = {"weights": self.weights.tolist(), "method": self.method, "rHat": int(self.r_hat)}
        if self.svt_lambda is not None:
            out["lambda"] = float(self.svt_lambda)
        return out


@dataclass
class DenoiseReport:
    weights: ShrinkageWeights
    sigma_hat: np.ndarray
    d_values: list
    d_prime_values: list
    mse_estimate: float
    rel_mse_estimate: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "weights": self.weights.to_dict(),
            "sigmaHat": [float(x) for x in self.sigma_hat],
            "dValues": [None if x is None else float(x) for x in self.d_values],
            "dPrimeValues": [None if x is None else float(x) for x in self.d_prime_values],
            "mseEstimate": float(self.mse_estimate),
            "relMseEstimate": float(self.rel_mse_estimate),
            "metadata": self.metadata,
        }


def noise_spectrum(factors: SvdFactors, r_hat: int) -> NoiseSpectrum:
    """Singular values r_hat+1..q living in an (n - r_hat) x (m - r_hat) matrix."""
    n, m = factors.shape
    rows, cols = min(n, m), max(n, m)
    return NoiseSpectrum(factors.values[r_hat:], rows - r_hat, cols - r_hat)


def optshrink(factors: SvdFactors, r_hat: int) -> DenoiseReport:
    """Optimal data-driven shrinkage of the leading ``r_hat`` singular values.

    Each weight is ``-2 D(s_i) / D'(s_i)`` with the D-transform estimated from
    the trailing q - r_hat singular values.  A component whose singular value
    is not separated from that noise spectrum gets weight 0 and is listed in
    ``metadata["poleFlags"]``.
    """
    q = factors.q
    if not 1 <= r_hat < q:
        raise ValidationError(f"r_hat must satisfy 1 <= r_hat < q={q}, got {r_hat}")
    spec = noise_spectrum(factors, r_hat)
    sigma = factors.values[:r_hat]

    weights = np.zeros(r_hat)
    d_vals, dp_vals, flags = [], [], []
    for i, s in enumerate(sigma):
        try:
            d = empirical_d(s, spec)
            dp = empirical_d_derivative(s, spec)
        except PoleProximityError as exc:
            log.debug("component %d: %s", i + 1, exc)
            flags.append(i + 1)
            d_vals.append(None)
            dp_vals.append(None)
            continue
        d_vals.append(d)
        dp_vals.append(dp)
        weights[i] = -2.0 * d / dp

    valid = [i for i in range(r_hat) if d_vals[i] is not None]
    signal_energy = sum(1.0 / d_vals[i] for i in valid)
    kept_energy = float(np.sum(weights[valid] ** 2))
    mse = signal_energy - kept_energy
    if signal_energy > 0:
        rel_raw = 1.0 - kept_energy / signal_energy
    else:
        rel_raw = 1.0
    rel = min(max(rel_raw, 0.0), 1.0)

    n, m = factors.shape
    metadata = {
        "n": n,
        "m": m,
        "transposed": bool(factors.transposed),
        "guardGap": GUARD_GAP,
        "poleFlags": flags,
        "relMseOutOfRange": bool(rel != rel_raw),
        "mseNegative": bool(mse < 0),
    }
    return DenoiseReport(
        weights=ShrinkageWeights(weights, "optshrink", r_hat),
        sigma_hat=sigma.copy(),
        d_values=d_vals,
        d_prime_values=dp_vals,
        mse_estimate=mse,
        rel_mse_estimate=rel,
        metadata=metadata,
    )


def eym_weights(factors: SvdFactors, r_hat: int) -> ShrinkageWeights:
    """Truncated SVD: keep the leading ``r_hat`` singular values unchanged."""
    if not 1 <= r_hat <= factors.q:
        raise ValidationError(f"r_hat must satisfy 1 <= r_hat <= q={factors.q}, got {r_hat}")
    return ShrinkageWeights(factors.values[:r_hat].copy(), "eym", r_hat)


def svt_weights(factors: SvdFactors, lam: float) -> ShrinkageWeights:
    """Soft thresholding ``(s_i - lam)_+``; zeroed components are dropped."""
    if not lam >= 0:
        raise ValidationError(f"lambda must be nonnegative, got {lam}")
    w = factors.values - lam
    w = w[w > 0]
    return ShrinkageWeights(w, "svt", w.size, svt_lambda=float(lam))


def reconstruct(factors: SvdFactors, weights) -> np.ndarray:
    w = weights.weights if isinstance(weights, ShrinkageWeights) else np.asarray(weights, dtype=np.float64)
    k = w.size
    if k > factors.q:
        raise ValidationError(f"{k} weights for only {factors.q} singular triplets")
    return (factors.left[:, :k] * w) @ factors.right[:, :k].T


def gap_rank(values, max_rank=None) -> int:
    """Heuristic rank: position of the largest relative gap s_i / s_{i+1}.

    Not part of the OptShrink method itself; offered as a convenience for the CLI.
    """
    s = np.asarray(values, dtype=np.float64)
    q = s.size
    upper = q - 1 if max_rank is None else min(max_rank, q - 1)
    if upper < 1:
        raise ValidationError("need at least two singular values")
    head = s[: upper + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = head[:-1] / head[1:]
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    return int(np.argmax(ratio)) + 1
