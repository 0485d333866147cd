"""Large-matrix limits for spiked Marchenko-Pastur noise with sampling probability p.

Missing data is handled by substitution: noise variance p/m and spikes p*theta.
All squared errors here are for approximating p*S; p = 1 is the fully observed case.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .dtransform import MpParams, mp_d_transform_derivative
from .linalg import ValidationError


@dataclass(frozen=True)
class AsymptoticPrediction:
    theta: float
    above_threshold: bool
    rho: float
    w_opt_limit: float
    w_eym_limit: float
    mse_opt_limit: float
    mse_eym_limit: float

    def to_dict(self):
        d = asdict(self)
        return {
            "theta": d["theta"],
            "aboveThreshold": d["above_threshold"],
            "rho": d["rho"],
            "wOptLimit": d["w_opt_limit"],
            "wEymLimit": d["w_eym_limit"],
            "mseOptLimit": d["mse_opt_limit"],
            "mseEymLimit": d["mse_eym_limit"],
        }


def threshold(mp: MpParams) -> float:
    """Critical spike strength c^(1/4) / sqrt(p)."""
    return mp.c**0.25 / np.sqrt(mp.p)


def is_above_threshold(theta, mp: MpParams) -> bool:
    # boundary counts as below: w_opt -> 0 when theta <= threshold
    return bool(theta > threshold(mp))


def spike_location(theta, mp: MpParams) -> float:
    if not is_above_threshold(theta, mp):
        return float(mp.edge)
    p, c = mp.p, mp.c
    pt2 = p * theta * theta
    return float(np.sqrt(p) * np.sqrt((1 + pt2) * (c + pt2) / pt2))


def optimal_weight(theta, mp: MpParams) -> float:
    if not is_above_threshold(theta, mp):
        return 0.0
    p, c = mp.p, mp.c
    pt2 = p * theta * theta
    left = 1 - c * (1 + pt2) / (pt2 * (pt2 + c))
    right = 1 - (c + pt2) / (pt2 * (pt2 + 1))
    return float(p * theta * np.sqrt(left) * np.sqrt(right))


def predict_spike(theta, mp: MpParams = MpParams()) -> AsymptoticPrediction:
    if not theta > 0:
        raise ValidationError(f"theta must be positive, got {theta}")
    signal_sq = (mp.p * theta) ** 2
    rho = spike_location(theta, mp)
    w_opt = optimal_weight(theta, mp)
    if is_above_threshold(theta, mp):
        mse_opt = signal_sq - w_opt**2
        # 4 rho / (theta^2 D'(rho)) == -2 rho w_opt
        mse_eym = signal_sq + rho**2 - 2 * rho * w_opt
        above = True
    else:
        mse_opt = signal_sq
        mse_eym = signal_sq + rho**2
        above = False
    return AsymptoticPrediction(float(theta), above, rho, w_opt, rho, float(mse_opt), float(mse_eym))


def phase_transition_p(theta, c=1.0) -> float:
    """Observation probability below which a spike of size theta is uninformative."""
    if not theta > 0:
        raise ValidationError(f"theta must be positive, got {theta}")
    if not 0 < c <= 1:
        raise ValidationError(f"c must lie in (0, 1], got {c}")
    return float(np.sqrt(c) / theta**2)


def effective_rank(thetas, mp: MpParams = MpParams()) -> int:
    th = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    if np.any(np.diff(th) > 0):
        raise ValidationError("thetas must be sorted descending")
    return int(sum(is_above_threshold(t, mp) for t in th))


def limiting_mse(thetas, weights, mp: MpParams = MpParams(), assume_delocalization=False) -> float:
    """Limiting squared error of weights applied to the leading singular triplets.

    Each informative term is (p theta)^2 + w^2 + 4 w / ((p theta)^2 D'(rho)).
    With ``assume_delocalization`` uninformative components (theta below the
    threshold, or beyond the signal rank) contribute theta^2 + w^2; this rests
    on an unproven delocalization property of bulk singular vectors.
    """
    th = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    w = np.atleast_1d(np.asarray(weights, dtype=np.float64))
    if w.size != th.size and not assume_delocalization:
        raise ValidationError("weights and thetas must have equal length")
    total = 0.0
    for i in range(max(th.size, w.size)):
        theta = th[i] if i < th.size else 0.0
        wi = w[i] if i < w.size else 0.0
        s = mp.p * theta
        if theta > 0 and is_above_threshold(theta, mp):
            rho = spike_location(theta, mp)
            total += s * s + wi * wi + 4 * wi / (s * s * mp_d_transform_derivative(rho, mp))
        elif assume_delocalization:
            total += s * s + wi * wi
        else:
            raise ValidationError(f"theta={theta} is not above the phase transition {threshold(mp):.6g}")
    return float(total)
