"""Seeded benchmark data generators.

Families (each with an H0 and an H1 variant):

``strobl``  X = f1(e_x), Y = f2(e_y), Z ~ N(0, I); H1 adds 0.8 * e_b inside both f's.
``li``      X = f1(mean(Z) + e_x), Y = f2(mean(Z) + e_y); H1 adds e_b outside both f's.
``illus``   X = Z_1 + e_x, Y = Z_1 + e_y with Z ~ N(0, A A^T); H1 adds e_b to both.

f1, f2 are drawn uniformly from {identity, square, cube, tanh, exp(-|.|)}
once per generated dataset. The ``illus`` families have closed-form
conditional mean embeddings under Gaussian kernels, exposed as the oracle
functions below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DomainError
from .kernels import KernelSpec, as_2d, cross_matrix
from .numerics import make_rng

FAMILIES = ("strobl_h0", "strobl_h1", "li_h0", "li_h1", "illus_h0", "illus_h1")
NOISES = ("gaussian", "laplace", "mixture")

FUNCTIONS = {
    "identity": lambda v: v,
    "square": lambda v: v**2,
    "cube": lambda v: v**3,
    "tanh": np.tanh,
    "exp_abs": lambda v: np.exp(-np.abs(v)),
}
FUNCTION_NAMES = tuple(FUNCTIONS)

# two-component non-symmetric mixture; mean is zero by construction
MIXTURE_WEIGHTS = (0.7, 0.3)
MIXTURE_MEANS = (-0.3, 0.7)
MIXTURE_STD = 1.0


@dataclass(frozen=True)
class ScenarioSpec:
    family: str
    n: int
    d_z: int = 1
    noise: str = "gaussian"
    rng_seed: int = 0
    functions: Optional[tuple] = None  # force (f1, f2) by name instead of drawing them

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.noise not in NOISES:
            raise DomainError(f"unknown noise {self.noise!r}; expected one of {NOISES}")
        if self.n < 1 or self.d_z < 1:
            raise DomainError("n and d_z must be >= 1")
        if self.functions is not None and any(f not in FUNCTIONS for f in self.functions):
            raise DomainError(f"unknown function in {self.functions}")

    @property
    def is_null(self) -> bool:
        return self.family.endswith("_h0")

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return replace(self, rng_seed=seed)


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    meta: dict


def noise(kind: str, size, rng: np.random.Generator) -> np.ndarray:
    if kind == "gaussian":
        return rng.standard_normal(size)
    if kind == "laplace":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)
    if kind == "mixture":
        second = rng.random(size) < MIXTURE_WEIGHTS[1]
        centers = np.where(second, MIXTURE_MEANS[1], MIXTURE_MEANS[0])
        return centers + MIXTURE_STD * rng.standard_normal(size)
    raise DomainError(f"unknown noise {kind!r}")


def generate(spec: ScenarioSpec) -> Dataset:
    rng = make_rng(spec.rng_seed)
    n, d_z = spec.n, spec.d_z
    family = spec.family.rsplit("_", 1)[0]
    h1 = not spec.is_null
    meta: dict = {"family": spec.family, "noise": spec.noise}

    if family in ("strobl", "li"):
        if spec.functions is None:
            picks = rng.integers(0, len(FUNCTION_NAMES), size=2)
            names = (FUNCTION_NAMES[picks[0]], FUNCTION_NAMES[picks[1]])
        else:
            names = tuple(spec.functions)
        f1, f2 = FUNCTIONS[names[0]], FUNCTIONS[names[1]]
        meta["functions"] = names
        e_x = noise(spec.noise, n, rng)
        e_y = noise(spec.noise, n, rng)
        e_b = noise(spec.noise, n, rng)
        z = rng.standard_normal((n, d_z))
        if family == "strobl":
            shared = 0.8 * e_b if h1 else 0.0
            x = f1(e_x + shared)
            y = f2(e_y + shared)
        else:
            z_bar = z.mean(axis=1)
            shared = e_b if h1 else 0.0
            x = f1(z_bar + e_x) + shared
            y = f2(z_bar + e_y) + shared
    else:
        a = rng.standard_normal((d_z, d_z))
        cov = a @ a.T
        z = rng.standard_normal((n, d_z)) @ a.T
        e_x = rng.standard_normal(n)
        e_y = rng.standard_normal(n)
        e_b = rng.standard_normal(n) if h1 else 0.0
        x = z[:, 0] + e_x + e_b
        y = z[:, 0] + e_y + e_b
        meta["z_cov"] = cov
        meta["cond_var"] = illus_conditional_variance(spec.family)
    return Dataset(x=as_2d(x), y=as_2d(y), z=as_2d(z), meta=meta)


def illus_conditional_variance(family: str) -> float:
    """Variance of X | Z (equal to that of Y | Z) in the illustration models."""
    if family == "illus_h0":
        return 1.0
    if family == "illus_h1":
        return 2.0
    raise DomainError(f"closed-form conditional means exist only for illus families, got {family!r}")


def gaussian_convolution(t, center, variance: float, sigma: float):
    """``E[exp(-(t - V)^2 / (2 sigma^2))]`` for ``V ~ N(center, variance)``."""
    total = sigma * sigma + variance
    diff = np.asarray(t, dtype=np.float64) - np.asarray(center, dtype=np.float64)
    return sigma / np.sqrt(total) * np.exp(-diff * diff / (2.0 * total))


def oracle_cond_mean_y(t2, z, family: str, sigma_y: float, variance: float | None = None):
    """``E[k_y(t2, Y) | Z = z]`` for the illustration models (``z`` a vector or an (n, d_z) matrix)."""
    v = illus_conditional_variance(family) if variance is None else variance
    z = np.asarray(z, dtype=np.float64)
    return gaussian_convolution(float(np.ravel(t2)[0]), z[..., 0], v, sigma_y)


def oracle_cond_mean_xddot(t1, z, family: str, spec: KernelSpec, variance: float | None = None):
    """``E[k_x(t_x, X) k_z(t_z, z) | Z = z]`` for the illustration models (d_x = 1)."""
    v = illus_conditional_variance(family) if variance is None else variance
    t1 = np.asarray(t1, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64)
    z2 = as_2d(z) if z.ndim == 2 else z.reshape(1, -1)
    z_factor = cross_matrix(z2, t1[1:].reshape(1, -1), spec.sigma_z)[:, 0]
    value = z_factor * gaussian_convolution(t1[0], z2[:, 0], v, spec.sigma_x)
    return value if z.ndim == 2 else float(value[0])


def oracle_means(locations, spec: KernelSpec, family: str):
    """Pair of ``fn(j, z)`` callables giving the exact conditional means at ``locations``."""

    def cond_xddot(j, z):
        return oracle_cond_mean_xddot(locations.t1[j], z, family, spec)

    def cond_y(j, z):
        return oracle_cond_mean_y(locations.t2[j], z, family, spec.sigma_y)

    return cond_xddot, cond_y
