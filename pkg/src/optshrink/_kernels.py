"""Spectral sum kernels behind the empirical D-transform.

Two interchangeable backends compute, for each evaluation point z,

    t(z)  = sum_i z / (z^2 - s_i^2)
    dt(z) = sum_i -(z^2 + s_i^2) / (z^2 - s_i^2)^2

over a vector of singular values s.  The numba backend is used when numba is
importable and ``OPTSHRINK_DISABLE_NUMBA`` is unset (or "0"); otherwise the
pure-numpy backend is used.  Both are always importable for comparison.
"""
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _env_disabled():
    return os.environ.get("OPTSHRINK_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def spectral_sums_numpy(zs, values):
    zs = np.asarray(zs, dtype=np.float64)
    s2 = np.asarray(values, dtype=np.float64) ** 2
    z2 = (zs * zs)[:, None]
    gap = z2 - s2[None, :]
    t = (zs[:, None] / gap).sum(axis=1)
    dt = (-(z2 + s2[None, :]) / (gap * gap)).sum(axis=1)
    return t, dt


def _spectral_sums_loop(zs, values):
    nz = zs.shape[0]
    t = np.zeros(nz)
    dt = np.zeros(nz)
    for k in range(nz):
        z = zs[k]
        z2 = z * z
        acc = 0.0
        dacc = 0.0
        for i in range(values.shape[0]):
            s2 = values[i] * values[i]
            gap = z2 - s2
            acc += z / gap
            dacc -= (z2 + s2) / (gap * gap)
        t[k] = acc
        dt[k] = dacc
    return t, dt


if HAVE_NUMBA:
    _spectral_sums_jit = numba.njit(cache=True, fastmath=False)(_spectral_sums_loop)

    def spectral_sums_numba(zs, values):
        zs = np.ascontiguousarray(zs, dtype=np.float64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        return _spectral_sums_jit(zs, values)

else:  # pragma: no cover
    spectral_sums_numba = None


def spectral_sums(zs, values):
    """Dispatch to the active backend. Returns (t, dt) arrays shaped like ``zs``."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.float64))
    if USE_NUMBA:
        return spectral_sums_numba(zs, values)
    return spectral_sums_numpy(zs, values)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
