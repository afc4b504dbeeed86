"""Hot distance/kernel loops with a numba path and a pure-numpy fallback.

The numba kernels are used when numba imports cleanly and the environment
variable ``LPCI_DISABLE_NUMBA`` is unset (or ``0``). Both paths compute the
same quantities; they agree to round-off, not bit-for-bit.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except Exception:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return deco


def _env_disabled() -> bool:
    return os.environ.get("LPCI_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


NUMBA_ENABLED = NUMBA_AVAILABLE and not _env_disabled()


def set_backend(name: str) -> None:
    """Switch between ``"numba"`` and ``"numpy"`` at runtime."""
    global NUMBA_ENABLED
    if name == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba is not importable")
        NUMBA_ENABLED = True
    elif name == "numpy":
        NUMBA_ENABLED = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------
@njit(cache=True)
def _sq_dists_nb(a, b):
    m, d = a.shape
    k = b.shape[0]
    out = np.empty((m, k))
    for i in range(m):
        for j in range(k):
            s = 0.0
            for c in range(d):
                diff = a[i, c] - b[j, c]
                s += diff * diff
            out[i, j] = s
    return out


@njit(cache=True)
def _sq_dists_self_nb(a):
    m, d = a.shape
    out = np.empty((m, m))
    for i in range(m):
        out[i, i] = 0.0
        for j in range(i + 1, m):
            s = 0.0
            for c in range(d):
                diff = a[i, c] - a[j, c]
                s += diff * diff
            out[i, j] = s
            out[j, i] = s
    return out


@njit(cache=True)
def _condensed_dists_nb(a):
    m, d = a.shape
    out = np.empty(m * (m - 1) // 2)
    pos = 0
    for i in range(m):
        for j in range(i + 1, m):
            s = 0.0
            for c in range(d):
                diff = a[i, c] - a[j, c]
                s += diff * diff
            out[pos] = np.sqrt(s)
            pos += 1
    return out


@njit(cache=True)
def _gaussian_cross_nb(a, b, sigma):
    m, d = a.shape
    k = b.shape[0]
    scale = -0.5 / (sigma * sigma)
    out = np.empty((m, k))
    for i in range(m):
        for j in range(k):
            s = 0.0
            for c in range(d):
                diff = a[i, c] - b[j, c]
                s += diff * diff
            out[i, j] = np.exp(scale * s)
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------
def _sq_dists_np(a, b):
    # per-coordinate accumulation keeps memory at O(m*k) and avoids the
    # cancellation of the |a|^2 + |b|^2 - 2ab expansion
    out = np.zeros((a.shape[0], b.shape[0]))
    for c in range(a.shape[1]):
        diff = a[:, c, None] - b[None, :, c]
        out += diff * diff
    return out


def _sq_dists_self_np(a):
    out = _sq_dists_np(a, a)
    np.fill_diagonal(out, 0.0)
    return out


def _condensed_dists_np(a):
    iu = np.triu_indices(a.shape[0], k=1)
    return np.sqrt(_sq_dists_np(a, a)[iu])


def _gaussian_cross_np(a, b, sigma):
    return np.exp(_sq_dists_np(a, b) * (-0.5 / (sigma * sigma)))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------
def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of ``a`` (m, d) and ``b`` (k, d)."""
    a, b = _f64(a), _f64(b)
    if NUMBA_ENABLED:
        return _sq_dists_nb(a, b)
    return _sq_dists_np(a, b)


def sq_dists_self(a: np.ndarray) -> np.ndarray:
    """Symmetric squared-distance matrix of the rows of ``a`` with an exact zero diagonal."""
    a = _f64(a)
    if NUMBA_ENABLED:
        return _sq_dists_self_nb(a)
    return _sq_dists_self_np(a)


def condensed_dists(a: np.ndarray) -> np.ndarray:
    """All m(m-1)/2 pairwise Euclidean distances, row-major upper triangle."""
    a = _f64(a)
    if NUMBA_ENABLED:
        return _condensed_dists_nb(a)
    return _condensed_dists_np(a)


def gaussian_cross(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian kernel matrix ``exp(-|a_i - b_j|^2 / (2 sigma^2))``."""
    a, b = _f64(a), _f64(b)
    if NUMBA_ENABLED:
        return _gaussian_cross_nb(a, b, float(sigma))
    return _gaussian_cross_np(a, b, float(sigma))
