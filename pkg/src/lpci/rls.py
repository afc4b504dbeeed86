"""Kernel ridge (regularized least-squares) regression on z.

Solves ``(K + r * lam * I) alpha = targets`` where ``K`` is the Gaussian Gram
matrix of the ``r`` training inputs, which is the closed form of

    min_h (1/r) sum_i (h(z_i) - y_i)^2 + lam * |h|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _accel
from .errors import DimensionMismatch, DomainError, SolveFailure
from .kernels import as_2d, cross_matrix, gram_from_sq


@dataclass(frozen=True)
class RlsModel:
    train_z: np.ndarray
    alpha: np.ndarray  # (r,) or (r, k) for k targets fitted jointly
    sigma_z: float | np.ndarray  # scalar, or one bandwidth per coordinate
    lam: float
    offset: float | np.ndarray = 0.0  # constant added to every prediction

    def kernel_to(self, z: np.ndarray) -> np.ndarray:
        """Cross kernel matrix between ``z`` and the training inputs."""
        if np.ndim(self.sigma_z) == 0:
            return cross_matrix(z, self.train_z, self.sigma_z)
        return cross_matrix(z / self.sigma_z, self.train_z / self.sigma_z, 1.0)


def _check_bandwidth(sigma_z, d: int):
    bw = np.asarray(sigma_z, dtype=np.float64)
    if bw.ndim == 0:
        bw = float(bw)
    elif bw.shape != (d,):
        raise DimensionMismatch(f"{bw.size} bandwidths for {d} coordinates")
    if not (np.all(np.isfinite(bw)) and np.all(np.asarray(bw) > 0)):
        raise SolveFailure(f"bandwidth must be positive and finite, got {sigma_z}")
    return bw


def default_lambda(r: int) -> float:
    """Ridge schedule ``r^{-1/(1+gamma)}`` at the worst-case ``gamma = 1``."""
    if r < 1:
        raise DomainError("r must be >= 1")
    return float(r) ** -0.5


def fit(
    train_z,
    targets,
    sigma_z,
    lam: float,
    sq_dists: np.ndarray | None = None,
    center: bool = False,
) -> RlsModel:
    """Fit the ridge regression.

    ``sigma_z`` is a scalar or one bandwidth per coordinate. ``sq_dists`` may
    carry the precomputed squared distances of ``train_z / sigma_z`` (or of
    ``train_z`` for a scalar bandwidth). With ``center`` the targets' mean is
    removed before the fit and added back on prediction.
    """
    train_z = as_2d(train_z)
    targets = np.asarray(targets, dtype=np.float64)
    r = train_z.shape[0]
    if targets.shape[0] != r:
        raise DimensionMismatch(f"{r} inputs but {targets.shape[0]} targets")
    if not lam > 0:
        raise SolveFailure(f"need lam > 0, got lam={lam}")
    if not (np.all(np.isfinite(train_z)) and np.all(np.isfinite(targets))):
        raise SolveFailure("non-finite inputs or targets")
    bw = _check_bandwidth(sigma_z, train_z.shape[1])
    offset = targets.mean(axis=0) if center else 0.0
    isotropic = np.ndim(bw) == 0
    if sq_dists is None:
        sq_dists = _accel.sq_dists_self(train_z if isotropic else train_z / bw)
    system = gram_from_sq(sq_dists, bw if isotropic else 1.0)
    system[np.diag_indices_from(system)] += r * lam
    try:
        factor = cho_factor(system, lower=True, check_finite=True)
        alpha = cho_solve(factor, targets - offset, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise SolveFailure("Cholesky solve of the ridge system failed") from exc
    return RlsModel(train_z=train_z, alpha=alpha, sigma_z=bw, lam=float(lam), offset=offset)


def predict(model: RlsModel, z):
    """Evaluate the fitted function at one point (1-d ``z``) or at each row of a 2-d ``z``."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z.reshape(1, -1)
    if z.shape[1] != model.train_z.shape[1]:
        raise DimensionMismatch(f"z has dim {z.shape[1]}, model expects {model.train_z.shape[1]}")
    out = model.kernel_to(z) @ model.alpha + model.offset
    if single:
        return out[0] if out.ndim == 1 else out[0, :]
    return out


def ridge_objective(model: RlsModel, alpha: np.ndarray, targets: np.ndarray) -> float:
    """Training objective of the function with coefficients ``alpha`` under ``model``'s kernel."""
    gram = model.kernel_to(model.train_z)
    fitted = gram @ alpha + model.offset
    return float(np.mean((fitted - targets) ** 2) + model.lam * alpha @ gram @ alpha)
