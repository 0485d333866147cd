"""Oracle estimators that know the true signal."""
from dataclasses import dataclass

import numpy as np

from .linalg import SignalSpec, SvdFactors, ValidationError
from .shrinkage import ShrinkageWeights


@dataclass(frozen=True)
class OracleDiagonal:
    """K_ii = sum_j theta_j (uhat_i . u_j)(v_j . vhat_i), for i = 1..q."""

    k_values: np.ndarray

    def __len__(self):
        return self.k_values.size


def _check_shapes(signal, factors):
    if signal.shape != factors.shape:
        raise ValidationError(f"signal shape {signal.shape} does not match factors shape {factors.shape}")


def oracle_diagonal(signal: SignalSpec, factors: SvdFactors) -> OracleDiagonal:
    _check_shapes(signal, factors)
    left_overlap = factors.left.T @ signal.left  # q x r
    right_overlap = factors.right.T @ signal.right
    k = (left_overlap * right_overlap) @ signal.thetas
    return OracleDiagonal(k)


def oracle_weights(diag: OracleDiagonal, r: int) -> ShrinkageWeights:
    """Finite-n optimal nonnegative weights on the leading ``r`` components."""
    if not 1 <= r <= len(diag):
        raise ValidationError(f"r must satisfy 1 <= r <= q={len(diag)}, got {r}")
    return ShrinkageWeights(np.maximum(diag.k_values[:r], 0.0), "oracle", r)


def rank_regularized_weights(diag: OracleDiagonal, r_hat: int) -> ShrinkageWeights:
    """Best weights with at most ``r_hat`` nonzeros anywhere among the q components.

    Keeps the ``r_hat`` largest positive parts of K_ii in place; ties go to
    the lower index.
    """
    q = len(diag)
    if not 1 <= r_hat <= q:
        raise ValidationError(f"r_hat must satisfy 1 <= r_hat <= q={q}, got {r_hat}")
    pos = np.maximum(diag.k_values, 0.0)
    keep = np.argsort(-pos, kind="stable")[:r_hat]
    w = np.zeros(q)
    w[keep] = pos[keep]
    return ShrinkageWeights(w, "oracle", r_hat)


def _direct_squared_error(signal, factors, w):
    k = w.size
    est = (factors.left[:, :k] * w) @ factors.right[:, :k].T
    diff = signal.matrix() - est
    return float(np.sum(diff * diff))


def exact_squared_error(signal: SignalSpec, factors: SvdFactors, weights, diag: OracleDiagonal = None) -> float:
    """||S - sum_i w_i uhat_i vhat_i^T||_F^2.

    The expansion sum theta^2 + sum w^2 - 2 sum w_i K_ii is returned; under
    ``__debug__`` it is cross-checked against the dense computation.
    """
    _check_shapes(signal, factors)
    w = weights.weights if isinstance(weights, ShrinkageWeights) else np.asarray(weights, dtype=np.float64)
    if w.size > factors.q:
        raise ValidationError(f"{w.size} weights for only {factors.q} singular triplets")
    if diag is None:
        diag = oracle_diagonal(signal, factors)
    k = diag.k_values[: w.size]
    expanded = float(np.sum(signal.thetas**2) + np.sum(w * w) - 2.0 * np.dot(w, k))
    expanded = max(expanded, 0.0)
    if __debug__:
        direct = _direct_squared_error(signal, factors, w)
        scale = float(np.sum(signal.thetas**2) + np.sum(w * w))
        assert abs(direct - expanded) <= 1e-10 * max(scale, 1e-300), (direct, expanded)
    return expanded
