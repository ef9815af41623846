"""Observation-error covariance models and their weight matrices.

Two families carry an explicit variance scale ``gamma``:

* scaled identity, ``Sigma = gamma * I``
* composite, ``Sigma = gamma * I + K`` with a known PSD component ``K``

For both the PDOP scale is ``kappa = gamma`` and the weight matrix is
``W = kappa * Sigma^-1``.  A fully user-supplied covariance has no natural
scale and gets ``kappa = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, NotPsd, SingularMatrix, ValidationError

SYMMETRY_RTOL = 1e-10
PSD_RTOL = 1e-10
LEMMA_MIN_EIG_RTOL = 1e-12
# composite() falls back to direct factorization above this condition number
# of the known component: the lemma's inner inverse loses accuracy there.
LEMMA_MAX_COND = 1e10


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Modeled observation-error covariance with derived precision and weights.

    Attributes
    ----------
    sigma_eps : ndarray, (S, S)
        Error covariance in m^2.
    precision : ndarray, (S, S)
        Inverse of ``sigma_eps``.
    weight : ndarray, (S, S)
        ``(sigma_eps / kappa)^-1``.
    kappa : float
        PDOP scale in m^2.
    gamma : float or None
        Isotropic variance component, if the model has one.
    known : ndarray or None
        Known component added to ``gamma * I`` (None for scaled identity and
        for full-matrix models).
    """

    sigma_eps: np.ndarray
    precision: np.ndarray
    weight: np.ndarray
    kappa: float
    gamma: float | None = None
    known: np.ndarray | None = None

    def __post_init__(self):
        for name in ("sigma_eps", "precision", "weight", "known"):
            if getattr(self, name) is None:
                continue
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def S(self) -> int:
        return self.sigma_eps.shape[0]

    def subset(self, indices: Sequence[int]) -> "CovarianceModel":
        """Restrict to a subset of satellites (rows/columns of sigma_eps)."""
        idx = np.asarray(indices, dtype=int)
        if self.gamma is None:
            return full_matrix(self.sigma_eps[np.ix_(idx, idx)])
        if self.known is None:
            return scaled_identity(self.gamma, len(idx))
        return composite(self.gamma, self.known[np.ix_(idx, idx)])


def _symmetric(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains non-finite entries")
    scale = max(np.linalg.norm(m), np.finfo(float).tiny)
    if np.linalg.norm(m - m.T) > SYMMETRY_RTOL * scale:
        raise NotPsd(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def check_psd(m, name: str = "known component") -> np.ndarray:
    """Return the symmetrized matrix, raising NotPsd if it has a negative eigenvalue."""
    m = _symmetric(m, name)
    if m.size == 0:
        return m
    eig = np.linalg.eigvalsh(m)
    if eig[0] < -PSD_RTOL * max(abs(eig[-1]), abs(eig[0])):
        raise NotPsd(f"{name} has minimum eigenvalue {eig[0]:.6g}")
    return m


def _check_gamma(gamma) -> float:
    gamma = float(gamma)
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValidationError(f"gamma must be a positive finite variance, got {gamma}")
    return gamma


def _spd_inverse(m: np.ndarray) -> np.ndarray:
    try:
        c = linalg.cho_factor(m, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMatrix("covariance is not positive definite") from exc
    inv = linalg.cho_solve(c, np.eye(len(m)))
    return 0.5 * (inv + inv.T)


def scaled_identity(gamma: float, S: int) -> CovarianceModel:
    gamma = _check_gamma(gamma)
    if int(S) < 1:
        raise ValidationError(f"S must be >= 1, got {S}")
    eye = np.eye(int(S))
    return CovarianceModel(gamma * eye, eye / gamma, eye, gamma, gamma)


def precision_via_lemma(gamma: float, known) -> np.ndarray:
    """Inverse of ``gamma*I + known`` by the matrix inversion lemma.

    Returns ``(I - (gamma * known^-1 + I)^-1) / gamma``.  ``known`` must be
    strictly positive definite.
    """
    gamma = _check_gamma(gamma)
    known = _symmetric(known, "known component")
    eig = np.linalg.eigvalsh(known)
    if eig[0] <= LEMMA_MIN_EIG_RTOL * abs(eig[-1]) or eig[-1] <= 0:
        raise SingularMatrix(
            f"known component is not invertible (minimum eigenvalue {eig[0]:.3g})"
        )
    eye = np.eye(len(known))
    inner = gamma * _spd_inverse(known) + eye
    u = eye - _spd_inverse(inner)
    return 0.5 * (u + u.T) / gamma


def composite(gamma: float, known) -> CovarianceModel:
    """``Sigma = gamma*I + known`` with ``kappa = gamma``.

    The weight matrix is the lemma form ``U = I - (gamma*known^-1 + I)^-1``
    when ``known`` is well conditioned, otherwise ``gamma * Sigma^-1`` from a
    Cholesky factorization of Sigma.  A zero ``known`` gives exactly the
    scaled-identity model.
    """
    gamma = _check_gamma(gamma)
    known = check_psd(known)
    S = known.shape[0]
    if not np.any(known):
        return scaled_identity(gamma, S)
    eye = np.eye(S)
    sigma = gamma * eye + known
    eig = np.linalg.eigvalsh(known)
    if eig[0] > 0 and eig[-1] / eig[0] < LEMMA_MAX_COND:
        precision = precision_via_lemma(gamma, known)
    else:
        precision = _spd_inverse(sigma)
    return CovarianceModel(sigma, precision, gamma * precision, gamma, gamma, known)


def full_matrix(sigma) -> CovarianceModel:
    """Arbitrary SPD covariance with no isotropic part; ``kappa = 1``."""
    sigma = check_psd(sigma, "error covariance")
    precision = _spd_inverse(sigma)
    return CovarianceModel(sigma, precision, precision.copy(), 1.0, None)


def scintillation_diagonal(entries, c1: float = 1.0, c2: float = 1.0) -> np.ndarray:
    """Diagonal known-component from per-satellite scintillation indices.

    Parameters
    ----------
    entries : sequence of (S4, sigma_phi)
        Amplitude index (unitless) and phase index (rad) per satellite.
    c1, c2 : float
        Coefficients in m^2 of the variance mapping
        ``v = c1 * S4**2 + c2 * sigma_phi**2``.

    Notes
    -----
    The quadratic mapping is a configurable placeholder, not a physical model
    of scintillation-induced ranging error.  Replace ``c1``/``c2`` (or supply a
    ``known_diagonal`` directly) with values fitted to measurement campaigns.
    """
    arr = np.asarray(entries, dtype=float).reshape(-1, 2)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValidationError("S4 and sigma_phi must be finite and non-negative")
    if c1 < 0 or c2 < 0:
        raise ValidationError("scintillation coefficients must be non-negative")
    return np.diag(c1 * arr[:, 0] ** 2 + c2 * arr[:, 1] ** 2)
