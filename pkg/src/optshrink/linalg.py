"""Matrix plumbing: validation, SVD, Frobenius arithmetic, seeded sampling, CSV I/O."""
import csv
import io
from dataclasses import dataclass, field

import numpy as np

# Project-wide generator; its name is echoed into every output file.
RNG_NAME = "numpy.PCG64"

ORTHO_TOL = 1e-8
TIE_TOL = 1e-12


class ValidationError(ValueError):
    """Raised for malformed matrices or out-of-range parameters."""


def make_rng(seed):
    """Return a ``numpy.random.Generator`` backed by PCG64.

    ``seed`` may be an int, a ``SeedSequence`` or an existing ``Generator``
    (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(a, name="matrix"):
    """Validate ``a`` as a finite, real, 2-D float array and return it."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = U diag(s) V^T`` with q = min(n, m) components.

    ``left`` is n x q, ``right`` is m x q (columns are singular vectors).
    ``transposed`` records that the decomposition was computed on ``a.T``
    to enforce rows <= cols internally.
    """

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    transposed: bool = False

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[0])

    @property
    def q(self):
        return self.values.shape[0]

    def component(self, i):
        return np.outer(self.left[:, i], self.right[:, i])


def _stable_descending(values):
    # singular values within TIE_TOL keep their original index order
    order = np.argsort(-values, kind="stable")
    v = values[order]
    i = 0
    while i < len(v) - 1:
        j = i
        while j + 1 < len(v) and abs(v[j] - v[j + 1]) <= TIE_TOL:
            j += 1
        if j > i:
            order[i : j + 1] = np.sort(order[i : j + 1])
        i = j + 1
    return order


def svd(a):
    """Full thin SVD of a validated matrix, singular values descending."""
    arr = as_matrix(a)
    n, m = arr.shape
    transposed = n > m
    work = arr.T if transposed else arr
    u, s, vt = np.linalg.svd(work, full_matrices=False)
    order = _stable_descending(s)
    u, s, v = u[:, order], s[order], vt[order].T
    if transposed:
        u, v = v, u
    return SvdFactors(values=s, left=np.ascontiguousarray(u), right=np.ascontiguousarray(v), transposed=transposed)


def frobenius_norm_sq(a):
    arr = np.asarray(a, dtype=np.float64)
    return float(np.sum(arr * arr))


def sample_gaussian_matrix(n, m, variance, seed):
    """n x m matrix of i.i.d. N(0, variance) entries."""
    if not variance > 0:
        raise ValidationError(f"variance must be positive, got {variance}")
    rng = make_rng(seed)
    return rng.standard_normal((n, m)) * np.sqrt(variance)


def sample_orthonormal_frame(n, r, seed):
    """n x r frame with Haar-distributed orthonormal columns."""
    if r > n or r < 1:
        raise ValidationError(f"need 1 <= r <= n, got r={r}, n={n}")
    rng = make_rng(seed)
    g = rng.standard_normal((n, r))
    qmat, rmat = np.linalg.qr(g)
    # sign fix so the distribution is exactly Haar
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    return qmat * signs


def sample_mask(n, m, p, seed):
    """0/1 mask with i.i.d. Bernoulli(p) entries."""
    if not 0 < p <= 1:
        raise ValidationError(f"p must lie in (0, 1], got {p}")
    rng = make_rng(seed)
    if p == 1:
        return np.ones((n, m))
    return (rng.random((n, m)) < p).astype(np.float64)


@dataclass(frozen=True)
class SignalSpec:
    """Low-rank signal S = sum_i theta_i u_i v_i^T."""

    thetas: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=np.float64).ravel()
        left = np.asarray(self.left, dtype=np.float64)
        right = np.asarray(self.right, dtype=np.float64)
        if left.ndim == 1:
            left = left[:, None]
        if right.ndim == 1:
            right = right[:, None]
        if np.any(th <= 0) or np.any(np.diff(th) >= 0):
            raise ValidationError("thetas must be positive and strictly descending")
        if left.shape[1] != th.size or right.shape[1] != th.size:
            raise ValidationError("frames must have one column per theta")
        for frame in (left, right):
            gram = frame.T @ frame
            if np.max(np.abs(gram - np.eye(th.size))) > ORTHO_TOL:
                raise ValidationError("signal frames must be orthonormal")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[0])

    @property
    def rank(self):
        return self.thetas.size

    def matrix(self):
        return (self.left * self.thetas) @ self.right.T

    @classmethod
    def random(cls, thetas, n, m, seed):
        rng = make_rng(seed)
        thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
        r = thetas.size
        return cls(thetas, sample_orthonormal_frame(n, r, rng), sample_orthonormal_frame(m, r, rng))


# -- CSV matrix files ---------------------------------------------------------


def read_matrix_csv(source):
    """Parse a CSV matrix; empty cells and ``NaN`` are missing entries.

    Returns ``(matrix, mask)`` with 0 stored at missing positions.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValidationError("empty matrix file")
    width = len(rows[0])
    values = np.zeros((len(rows), width))
    mask = np.ones((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(f"row {i + 1} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() == "nan":
                mask[i, j] = 0.0
                continue
            try:
                x = float(cell)
            except ValueError:
                raise ValidationError(f"cannot parse {cell!r} at row {i + 1}, column {j + 1}") from None
            if not np.isfinite(x):
                raise ValidationError(f"non-finite value {cell!r} at row {i + 1}, column {j + 1}")
            values[i, j] = x
    return values, mask


def write_matrix_csv(a, path):
    arr = as_matrix(a)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in arr:
            writer.writerow([repr(float(x)) for x in row])
