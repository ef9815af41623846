"""PDOP, exact estimator error under a mismatched noise model, and bias.

If the estimator is built with covariance ``Sigma`` but the observations
actually have covariance ``Sigma_true`` and mean ``mu``, the position error
``e = r_hat - r_true`` has

    Cov[e] = G Sigma_true G^T,      E[e] = G mu,
    G = (A^T Sigma^-1 A)^-1 A^T Sigma^-1,

so ``E|e|^2 = tr(Cov[e]) + |G mu|^2``.  With a matched model and no bias this
collapses to ``kappa * PDOP^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covmodel import CovarianceModel
from .errors import DimensionMismatch, ValidationError
from .estimator import normal_system
from .geometry import DesignMatrix, as_matrix, ecef_to_geodetic, enu_rotation


@dataclass(frozen=True)
class DopReport:
    pdop: float
    rms: float
    sigma_x: float
    sigma_y: float
    sigma_z: float
    kappa: float
    hdop: float = math.nan
    vdop: float = math.nan

    def as_row(self) -> dict:
        return {
            "pdop": self.pdop, "rms": self.rms,
            "sigma_x": self.sigma_x, "sigma_y": self.sigma_y, "sigma_z": self.sigma_z,
            "kappa": self.kappa, "hdop": self.hdop, "vdop": self.vdop,
        }


@dataclass(frozen=True, eq=False)
class MismatchReport:
    """Exact second moment of the position error.

    ``optimism_ratio`` is ``expected_sq_error / pdop_predicted_sq_error``: how
    much larger the real mean squared error is than what ``kappa * PDOP^2``
    from the modeled covariance promises.
    """

    cov_r_hat: np.ndarray
    expected_sq_error: float
    pdop_predicted_sq_error: float
    optimism_ratio: float
    bias_sq: float = 0.0
    mean_error: np.ndarray | None = None

    def as_row(self) -> dict:
        c = self.cov_r_hat
        return {
            "expected_sq_error": self.expected_sq_error,
            "pdop_predicted_sq_error": self.pdop_predicted_sq_error,
            "optimism_ratio": self.optimism_ratio,
            "bias_sq": self.bias_sq,
            "cov_xx": c[0, 0], "cov_yy": c[1, 1], "cov_zz": c[2, 2],
            "cov_xy": c[0, 1], "cov_xz": c[0, 2], "cov_yz": c[1, 2],
        }


def pdop(A, model: CovarianceModel) -> DopReport:
    """PDOP = sqrt(tr((A^T W A)^-1)) together with the per-axis sigmas.

    HDOP/VDOP are filled in when ``A`` is a :class:`DesignMatrix` that knows
    its receiver; they come from rotating the position covariance into the
    local east-north-up frame and are normalized by the same ``kappa``.
    """
    system = normal_system(A, model)
    m = system.A
    normal_w = m.T @ model.weight @ m
    value = math.sqrt(np.trace(np.linalg.inv(0.5 * (normal_w + normal_w.T))))
    cov = system.cov
    sx, sy, sz = np.sqrt(np.diag(cov))
    rms = math.sqrt(np.trace(cov))
    hdop = vdop = math.nan
    if isinstance(A, DesignMatrix) and A.receiver is not None:
        g = ecef_to_geodetic(A.receiver)
        R = enu_rotation(g.latitude, g.longitude)
        enu = R @ cov @ R.T
        hdop = math.sqrt((enu[0, 0] + enu[1, 1]) / model.kappa)
        vdop = math.sqrt(enu[2, 2] / model.kappa)
    return DopReport(value, rms, float(sx), float(sy), float(sz), float(model.kappa), hdop, vdop)


def _check_dims(A, *models):
    S = as_matrix(A).shape[0]
    for m in models:
        if m.S != S:
            raise DimensionMismatch(f"covariance model is {m.S} x {m.S} but A has {S} rows")


def mismatch_covariance(A, model: CovarianceModel, true_model: CovarianceModel) -> np.ndarray:
    """Sandwich covariance ``Gamma A^T Sigma^-1 Sigma_true Sigma^-1 A Gamma``."""
    _check_dims(A, model, true_model)
    G = normal_system(A, model).gain()
    cov = G @ true_model.sigma_eps @ G.T
    return 0.5 * (cov + cov.T)


def expected_sq_error(
    A,
    model: CovarianceModel,
    true_model: CovarianceModel | None = None,
    bias=None,
) -> MismatchReport:
    """Mean squared position error when solving with ``model``.

    Parameters
    ----------
    A : DesignMatrix or array-like, (S, 3)
    model : CovarianceModel
        Covariance the estimator is built with.
    true_model : CovarianceModel, optional
        Actual observation covariance; defaults to ``model``.
    bias : array-like, (S,), optional
        Mean observation error in meters.
    """
    true_model = model if true_model is None else true_model
    _check_dims(A, model, true_model)
    system = normal_system(A, model)
    G = system.gain()
    cov = G @ true_model.sigma_eps @ G.T
    cov = 0.5 * (cov + cov.T)
    if bias is None:
        mean_err = np.zeros(3)
    else:
        bias = np.asarray(bias, dtype=float)
        if bias.shape != (system.A.shape[0],):
            raise DimensionMismatch(f"bias must have length {system.A.shape[0]}, got shape {bias.shape}")
        if not np.all(np.isfinite(bias)):
            raise ValidationError("bias contains non-finite entries")
        mean_err = G @ bias
    bias_sq = float(mean_err @ mean_err)
    total = float(np.trace(cov)) + bias_sq
    predicted = model.kappa * pdop(A, model).pdop ** 2
    return MismatchReport(cov, total, predicted, total / predicted, bias_sq, mean_err)


def pdop_error_proportionality(A, model: CovarianceModel) -> tuple[float, float, float]:
    """(PDOP, sqrt(E|e|^2), ratio) for a matched model; the ratio is sqrt(kappa)."""
    p = pdop(A, model).pdop
    root = math.sqrt(expected_sq_error(A, model).expected_sq_error)
    return p, root, root / p
