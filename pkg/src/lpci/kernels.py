"""Gaussian kernels, the (x, z) tensor kernel, and bandwidth selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DimensionMismatch, DomainError, EmptyInput


@dataclass(frozen=True)
class KernelSpec:
    """Bandwidths of the Gaussian kernels on the x, y and z blocks.

    The kernel on the augmented variable (x, z) is the product
    ``k_X(x, x') * k_Z(z, z')`` with bandwidths ``sigma_x`` and ``sigma_z``.
    """

    sigma_x: float
    sigma_y: float
    sigma_z: float

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "sigma_z"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value}")


def as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        return a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 1-d or 2-d array, got {a.ndim} dims")
    return a


def gaussian(u, v, sigma: float) -> float:
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    diff = u - v
    return math.exp(-float(diff @ diff) / (2.0 * sigma * sigma))


def kernel_xddot(t1, sample, spec: KernelSpec, d_x: int) -> float:
    """Tensor kernel on concatenated ``(x, z)`` points; ``d_x`` splits the blocks."""
    t1 = np.atleast_1d(np.asarray(t1, dtype=np.float64))
    sample = np.atleast_1d(np.asarray(sample, dtype=np.float64))
    if t1.shape != sample.shape or not 0 < d_x < t1.shape[0]:
        raise DimensionMismatch(f"cannot split {t1.shape} / {sample.shape} at d_x={d_x}")
    return gaussian(t1[:d_x], sample[:d_x], spec.sigma_x) * gaussian(t1[d_x:], sample[d_x:], spec.sigma_z)


def median_heuristic(points) -> float:
    """Lower median of the pairwise Euclidean distances.

    Falls back to the mean positive distance when the median is zero, and to
    1.0 when all points coincide.
    """
    points = as_2d(points)
    if points.shape[0] < 2:
        raise EmptyInput("median heuristic needs at least two points")
    dists = _accel.condensed_dists(points)
    k = (dists.size - 1) // 2
    med = float(np.partition(dists, k)[k])
    if med > 0:
        return med
    positive = dists[dists > 0]
    if positive.size:
        return float(positive.mean())
    return 1.0


def kernel_vector(t, samples, sigma: float) -> np.ndarray:
    samples = as_2d(samples)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if t.shape[0] != samples.shape[1]:
        raise DimensionMismatch(f"location has dim {t.shape[0]}, samples have {samples.shape[1]}")
    return _accel.gaussian_cross(t[None, :], samples, sigma)[0]


def cross_matrix(a, b, sigma: float) -> np.ndarray:
    """Kernel matrix ``K[i, j] = k(a_i, b_j)``."""
    a, b = as_2d(a), as_2d(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return _accel.gaussian_cross(a, b, sigma)


def gram_from_sq(sq: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(sq * (-0.5 / (sigma * sigma)))


def gram_matrix(samples, sigma: float) -> np.ndarray:
    samples = as_2d(samples)
    if samples.shape[0] < 1:
        raise EmptyInput("no samples")
    return gram_from_sq(_accel.sq_dists_self(samples), sigma)


def xddot_matrix(x, z, t1, spec: KernelSpec) -> np.ndarray:
    """``(n, J)`` matrix of tensor-kernel values between samples ``(x_i, z_i)`` and locations ``t1``."""
    x, z, t1 = as_2d(x), as_2d(z), as_2d(t1)
    d_x = x.shape[1]
    if t1.shape[1] != d_x + z.shape[1] or x.shape[0] != z.shape[0]:
        raise DimensionMismatch(f"x {x.shape}, z {z.shape}, locations {t1.shape}")
    return cross_matrix(x, t1[:, :d_x], spec.sigma_x) * cross_matrix(z, t1[:, d_x:], spec.sigma_z)
