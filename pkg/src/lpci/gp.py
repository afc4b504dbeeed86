"""Gaussian-process evidence maximization for the ridge hyperparameters.

The GP prior on a regression target is ``amplitude * k(z, z') + noise * 1[z = z']``
with ``k`` a Gaussian kernel whose bandwidth is either shared by all
coordinates of z or set per coordinate. Optimization runs in log space. The
posterior mean of that GP is exactly the ridge predictor with kernel ``k`` and
``r * lam = noise / amplitude``, which is how a selection is handed to the
regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _accel
from .errors import DimensionMismatch, EmptyInput, SolveFailure
from .kernels import as_2d, median_heuristic
from .rls import default_lambda

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GpSelection:
    sigma_z: np.ndarray  # bandwidth per coordinate of z (all equal when isotropic)
    noise: float  # GP noise variance
    amplitude: float
    final_lml: float
    initial_lml: float
    path: tuple = field(default=(), repr=False)  # lml of each accepted iterate

    @property
    def noise_ratio(self) -> float:
        return self.noise / self.amplitude

    def ridge(self, r: int) -> float:
        """Ridge ``lam`` for an ``r``-point fit whose predictor equals the GP posterior mean."""
        return self.noise_ratio / r


def coordinate_sq_dists(z) -> np.ndarray:
    """``(d, m, m)`` stack of squared differences along each coordinate."""
    z = as_2d(z)
    return np.stack([_accel.sq_dists_self(z[:, [k]]) for k in range(z.shape[1])])


class _Evidence:
    """Log evidence and its gradient over ``theta = (log bandwidths, [log amplitude], log noise)``."""

    def __init__(self, parts: np.ndarray, y: np.ndarray, fit_amplitude: bool):
        self.parts = parts  # (k, m, m); k = 1 for a shared bandwidth
        self.y = y
        self.fit_amplitude = fit_amplitude
        self.k = parts.shape[0]

    def unpack(self, theta):
        bw = np.exp(theta[: self.k])
        amp = math.exp(theta[self.k]) if self.fit_amplitude else 1.0
        noise = math.exp(theta[-1])
        return bw, amp, noise

    def pack(self, bw, amp, noise) -> np.ndarray:
        head = np.log(np.broadcast_to(np.asarray(bw, dtype=np.float64), (self.k,)))
        tail = [math.log(amp)] if self.fit_amplitude else []
        return np.concatenate([head, tail, [math.log(noise)]])

    def __call__(self, theta, want_grad: bool):
        bw, amp, noise = self.unpack(theta)
        m = self.y.shape[0]
        scaled = np.tensordot(0.5 / (bw * bw), self.parts, axes=1)
        base = np.exp(-scaled)
        system = amp * base
        system[np.diag_indices_from(system)] += noise
        factor = cho_factor(system, lower=True, check_finite=True)
        alpha = cho_solve(factor, self.y, check_finite=False)
        logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        value = -0.5 * float(self.y @ alpha) - 0.5 * logdet - 0.5 * m * _LOG_2PI
        if not want_grad:
            return value, None
        inv = cho_solve(factor, np.eye(m), check_finite=False)
        weight = (np.outer(alpha, alpha) - inv) * (amp * base)
        grad = [0.5 * float(np.sum(weight * part)) / (b * b) for part, b in zip(self.parts, bw)]
        if self.fit_amplitude:
            grad.append(0.5 * float(np.sum(weight)))
        grad.append(0.5 * noise * float(np.trace(np.outer(alpha, alpha) - inv)))
        return value, np.array(grad)

    def safe(self, theta) -> float:
        if not np.all(np.abs(theta) < 700):
            return -math.inf
        try:
            with np.errstate(over="ignore", under="ignore"):
                value, _ = self(theta, False)
        except (LinAlgError, ValueError, FloatingPointError):
            return -math.inf
        return value if math.isfinite(value) else -math.inf


def _parts_for(z, sigma_z) -> np.ndarray:
    z = as_2d(z)
    bw = np.atleast_1d(np.asarray(sigma_z, dtype=np.float64))
    if bw.size == 1:
        return _accel.sq_dists_self(z)[None]
    if bw.size != z.shape[1]:
        raise DimensionMismatch(f"{bw.size} bandwidths for {z.shape[1]} coordinates")
    return coordinate_sq_dists(z)


def log_marginal_likelihood(z, y, sigma_z, noise: float, *, amplitude: float = 1.0, grad: bool = False):
    """GP log evidence of targets ``y`` at inputs ``z``.

    ``sigma_z`` is a scalar or one bandwidth per coordinate. With
    ``grad=True`` also returns the gradient with respect to
    ``(log sigma_z..., log amplitude, log noise)``.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < 1:
        raise EmptyInput("no observations")
    bw = np.atleast_1d(np.asarray(sigma_z, dtype=np.float64))
    if not (np.all(bw > 0) and noise > 0 and amplitude > 0 and np.all(np.isfinite(y)) and np.all(np.isfinite(bw))):
        raise SolveFailure("non-finite or non-positive GP inputs")
    evidence = _Evidence(_parts_for(z, bw), y, fit_amplitude=True)
    try:
        value, g = evidence(evidence.pack(bw, amplitude, noise), grad)
    except (LinAlgError, ValueError) as exc:
        raise SolveFailure("Cholesky of the GP covariance failed") from exc
    if not math.isfinite(value):
        raise SolveFailure("non-finite log marginal likelihood")
    return (value, g) if grad else value


def select_hyperparams(
    z,
    y,
    init_sigma=None,
    init_lambda: float | None = None,
    iterations: int = 10,
    rng: np.random.Generator | None = None,
    *,
    batch_size: int | None = None,
    per_coordinate: bool = True,
    fit_amplitude: bool = True,
    step: float = 0.1,
    max_halvings: int = 8,
    parts: np.ndarray | None = None,
) -> GpSelection:
    """Gradient ascent on the log evidence in log-parameter space.

    Each iteration tries ``step * grad`` and halves the step (at most
    ``max_halvings`` times) until the evidence does not decrease; the search
    stops early once no trial step is accepted. Missing initial values default
    to the median heuristic on ``z``, unit amplitude and ``default_lambda(m)``
    noise. ``parts`` may carry precomputed squared differences (see
    ``coordinate_sq_dists``) matching ``per_coordinate``.
    """
    z = as_2d(z)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != z.shape[0]:
        raise DimensionMismatch(f"{z.shape[0]} inputs but {y.shape[0]} targets")
    if batch_size is not None and z.shape[0] > batch_size:
        if rng is None:
            raise ValueError("rng is required to draw a batch")
        idx = np.sort(rng.choice(z.shape[0], size=batch_size, replace=False))
        z, y, parts = z[idx], y[idx], None
    m, d = z.shape
    if m < 2:
        raise EmptyInput("GP selection needs at least two observations")
    if not np.all(np.isfinite(y)):
        raise SolveFailure("non-finite targets")
    if parts is None:
        parts = coordinate_sq_dists(z) if per_coordinate else _accel.sq_dists_self(z)[None]
    sigma0 = median_heuristic(z) if init_sigma is None else init_sigma
    noise0 = default_lambda(m) if init_lambda is None else float(init_lambda)

    evidence = _Evidence(parts, y, fit_amplitude)
    theta = evidence.pack(sigma0, 1.0, noise0)
    try:
        current, grad = evidence(theta, True)
    except (LinAlgError, ValueError) as exc:
        raise SolveFailure("Cholesky of the GP covariance failed at the initial point") from exc
    initial = current
    path = [current]
    for _ in range(iterations):
        if not np.all(np.isfinite(grad)) or not np.any(grad):
            break
        for halvings in range(max_halvings + 1):
            candidate = theta + step * grad
            value = evidence.safe(candidate)
            if value >= current:
                break
            step *= 0.5
        else:
            break
        theta, current = candidate, value
        path.append(current)
        current, grad = evidence(theta, True)
        if halvings == 0:
            step *= 2.0

    bw, amp, noise = evidence.unpack(theta)
    return GpSelection(
        sigma_z=np.broadcast_to(bw, (d,)).copy(),
        noise=noise,
        amplitude=amp,
        final_lml=current,
        initial_lml=initial,
        path=tuple(path),
    )
