"""Generalized (weighted) least-squares position solution.

With a flat prior on the position offset and Gaussian errors
``eps ~ N(0, Sigma)`` the posterior of ``delta_r`` in ``b = A delta_r + eps`` is
Gaussian with mean ``(A^T Sigma^-1 A)^-1 A^T Sigma^-1 b`` and covariance
``(A^T Sigma^-1 A)^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .covmodel import CovarianceModel
from .errors import DegenerateGeometry, DimensionMismatch, InsufficientSatellites, ValidationError
from .geometry import EcefPosition, as_matrix

MAX_NORMAL_COND = 1e12


@dataclass(frozen=True, eq=False)
class SolveResult:
    delta_r_hat: np.ndarray
    posterior_cov: np.ndarray
    r_hat: EcefPosition | None = None


@dataclass(frozen=True, eq=False)
class NormalSystem:
    """Cholesky-factored normal matrix ``A^T Sigma^-1 A`` for one geometry/model pair."""

    A: np.ndarray
    precision: np.ndarray
    cho: tuple
    cov: np.ndarray

    def gain(self) -> np.ndarray:
        """3 x S matrix mapping observations to the estimate."""
        return linalg.cho_solve(self.cho, self.A.T @ self.precision, check_finite=False)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Estimate for ``b`` of shape (S,) or a batch of shape (n, S)."""
        rhs = self.A.T @ (self.precision @ np.asarray(b, dtype=float).T)
        return linalg.cho_solve(self.cho, rhs, check_finite=False).T


def normal_system(A, model: CovarianceModel) -> NormalSystem:
    """Factor the normal matrix, raising if the geometry cannot be solved.

    Raises
    ------
    InsufficientSatellites
        S < 3.
    DegenerateGeometry
        Condition number of the normal matrix above ``MAX_NORMAL_COND``.
    DimensionMismatch
        Model dimension differs from the number of rows of A.
    """
    A = as_matrix(A)
    S = A.shape[0]
    if model.S != S:
        raise DimensionMismatch(f"covariance model is {model.S} x {model.S} but A has {S} rows")
    if S < 3:
        raise InsufficientSatellites(f"need S >= 3, got {S}")
    normal = A.T @ model.precision @ A
    normal = 0.5 * (normal + normal.T)
    if not np.all(np.isfinite(normal)):
        raise DegenerateGeometry("normal matrix has non-finite entries")
    eig = np.linalg.eigvalsh(normal)
    if eig[0] <= 0 or eig[-1] > MAX_NORMAL_COND * eig[0]:
        cond = eig[-1] / eig[0] if eig[0] > 0 else np.inf
        raise DegenerateGeometry(
            f"normal matrix condition number {cond:.3g} exceeds {MAX_NORMAL_COND:.0e}"
        )
    try:
        cho = linalg.cho_factor(normal, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise DegenerateGeometry("normal matrix is not positive definite") from exc
    cov = linalg.cho_solve(cho, np.eye(3), check_finite=False)
    cov = 0.5 * (cov + cov.T)
    return NormalSystem(A, model.precision, cho, cov)


def posterior_covariance(A, model: CovarianceModel) -> np.ndarray:
    return normal_system(A, model).cov


def _observation(b, S: int) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.shape[0] != S:
        raise DimensionMismatch(f"observation vector must have length {S}, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValidationError("observation vector contains non-finite entries")
    return b


def wls_solve(A, b, model: CovarianceModel) -> SolveResult:
    """Minimize ``(b - A dr)^T Sigma^-1 (b - A dr)`` over the 3-vector ``dr``."""
    system = normal_system(A, model)
    b = _observation(b, system.A.shape[0])
    return SolveResult(system.solve(b), system.cov)


def estimate_position(r0, A, b, model: CovarianceModel) -> SolveResult:
    """Absolute position estimate ``r0 + delta_r_hat`` about the modeled position r0."""
    res = wls_solve(A, b, model)
    r0 = r0.as_array() if isinstance(r0, EcefPosition) else np.asarray(r0, dtype=float)
    return SolveResult(res.delta_r_hat, res.posterior_cov, EcefPosition.from_array(r0 + res.delta_r_hat))
