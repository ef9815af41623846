"""Seeded Monte Carlo check of the analytic position-error statistics.

Noise is drawn from the *true* covariance (plus the configured bias) and the
position is solved with the *modeled* covariance.  The empirical mean of
``|e|^2`` is compared with the analytic value through a z-score whose
standard error comes from the sample variance of the per-draw ``|e|^2``.

Reproducibility
---------------
Random numbers come from NumPy's ``Philox`` 4x64-10 counter-based bit
generator.  The sample index range is cut into blocks of ``BLOCK_SIZE``
draws; block ``k`` of stream ``s`` uses key ``(seed, s)`` and starts at
counter ``(0, 0, k, 0)``, so each block's draws are a pure function of
``(seed, s, k)``.  Blocks are evaluated in any order on any number of
threads and reassembled in index order, which makes the result independent
of the worker count.  Normal variates use ``Generator.standard_normal``
(ziggurat), whose output is stable within a NumPy release series; the version
used is recorded as ``RNG_ALGORITHM``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constellation import Scenario
from .covmodel import CovarianceModel
from .dop import expected_sq_error
from .errors import InsufficientSamples, ValidationError
from .estimator import normal_system

BLOCK_SIZE = 8192
RNG_ALGORITHM = f"numpy-{np.__version__}/Philox4x64-10/standard_normal-ziggurat"
Z_THRESHOLD = 3.0


@dataclass(frozen=True, eq=False)
class NoiseSampler:
    """Gaussian observation-noise generator ``eps = mean + L z``."""

    cholesky_factor: np.ndarray
    mean: np.ndarray

    @classmethod
    def from_covariance(cls, cov, mean=None) -> "NoiseSampler":
        cov = np.asarray(cov, dtype=float)
        L = np.linalg.cholesky(cov)
        mean = np.zeros(len(cov)) if mean is None else np.asarray(mean, dtype=float)
        if mean.shape != (len(cov),):
            raise ValidationError(f"noise mean must have length {len(cov)}")
        return cls(L, mean)

    @property
    def S(self) -> int:
        return len(self.mean)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` samples as an (n, S) array."""
        z = rng.standard_normal((n, self.S))
        return self.mean + z @ self.cholesky_factor.T


def sample_noise(sampler: NoiseSampler, rng: np.random.Generator) -> np.ndarray:
    """One noise vector of length S."""
    return sampler.draw(rng, 1)[0]


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Generator for one block of one stream; a pure function of its arguments."""
    bitgen = np.random.Philox(key=[int(seed), int(stream)], counter=[0, 0, int(block), 0])
    return np.random.Generator(bitgen)


@dataclass(frozen=True, eq=False)
class McReport:
    n_samples: int
    empirical_mean_sq_error: float
    empirical_cov: np.ndarray
    standard_error: float
    analytic_sq_error: float
    z_score: float
    seed: int
    empirical_mean_error: np.ndarray
    stream: int = 0

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= Z_THRESHOLD

    def as_row(self) -> dict:
        c = self.empirical_cov
        return {
            "n_samples": self.n_samples, "seed": self.seed, "stream": self.stream,
            "empirical_mean_sq_error": self.empirical_mean_sq_error,
            "standard_error": self.standard_error,
            "analytic_sq_error": self.analytic_sq_error,
            "z_score": self.z_score,
            "mc_pass": self.passed,
            "emp_mean_ex": self.empirical_mean_error[0],
            "emp_mean_ey": self.empirical_mean_error[1],
            "emp_mean_ez": self.empirical_mean_error[2],
            "emp_cov_xx": c[0, 0], "emp_cov_yy": c[1, 1], "emp_cov_zz": c[2, 2],
            "emp_cov_xy": c[0, 1], "emp_cov_xz": c[0, 2], "emp_cov_yz": c[1, 2],
        }


def simulate_errors(
    A,
    model: CovarianceModel,
    true_model: CovarianceModel,
    n_samples: int,
    seed: int,
    bias=None,
    offset=(0.0, 0.0, 0.0),
    stream: int = 0,
    workers: int = 1,
) -> np.ndarray:
    """Position errors ``e = r_hat - r_true`` for ``n_samples`` draws, shape (n, 3)."""
    system = normal_system(A, model)
    sampler = NoiseSampler.from_covariance(true_model.sigma_eps, bias)
    offset = np.asarray(offset, dtype=float).reshape(3)
    clean = system.A @ offset

    def run_block(k: int) -> np.ndarray:
        n = min(BLOCK_SIZE, n_samples - k * BLOCK_SIZE)
        b = clean + sampler.draw(block_rng(seed, k, stream), n)
        return system.solve(b) - offset

    n_blocks = -(-n_samples // BLOCK_SIZE)
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_block, range(n_blocks)))
    else:
        parts = [run_block(k) for k in range(n_blocks)]
    return np.concatenate(parts, axis=0)


def summarize(errors: np.ndarray, analytic: float, seed: int, stream: int = 0) -> McReport:
    n = len(errors)
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    sq = np.einsum("ij,ij->i", errors, errors)
    mean_sq = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(n))
    z = (mean_sq - analytic) / se if se > 0 else (0.0 if mean_sq == analytic else math.inf)
    cov = np.cov(errors, rowvar=False, ddof=1)
    return McReport(n, mean_sq, cov, se, float(analytic), float(z), int(seed), errors.mean(axis=0), stream)


def monte_carlo(
    A,
    model: CovarianceModel,
    true_model: CovarianceModel | None = None,
    n_samples: int = 100_000,
    seed: int = 0,
    bias=None,
    offset=(0.0, 0.0, 0.0),
    stream: int = 0,
    workers: int = 1,
    analytic: float | None = None,
) -> McReport:
    """Empirical vs analytic mean squared error for one geometry.

    ``analytic`` replaces the computed target; it exists to exercise the
    failure path and should normally be left as None.
    """
    if n_samples < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n_samples}")
    true_model = model if true_model is None else true_model
    if analytic is None:
        analytic = expected_sq_error(A, model, true_model, bias).expected_sq_error
    errors = simulate_errors(A, model, true_model, n_samples, seed, bias, offset, stream, workers)
    return summarize(errors, analytic, seed, stream)


def run_mc(scenario: Scenario, workers: int | None = None, stream: int = 0,
           n_samples: int | None = None, analytic: float | None = None) -> McReport:
    """Monte Carlo run for a scenario; the true model defaults to the modeled one."""
    if scenario.mc is None:
        raise ValidationError("scenario has no 'mc' section (n_samples, seed)")
    A, model, true_model, bias = scenario.resolve()
    return monte_carlo(
        A, model, true_model,
        n_samples=scenario.mc.n_samples if n_samples is None else n_samples,
        seed=scenario.mc.seed,
        bias=bias,
        offset=scenario.mc.offset,
        stream=stream,
        workers=scenario.mc.workers if workers is None else workers,
        analytic=analytic,
    )


def mc_convergence_sweep(scenario: Scenario, sample_counts, workers: int | None = None) -> list[McReport]:
    """One report per sample count; count ``i`` uses stream ``i + 1`` of the master seed."""
    counts = [int(c) for c in sample_counts]
    if not counts:
        raise ValidationError("sample_counts must be non-empty")
    if any(c < 2 for c in counts):
        raise InsufficientSamples("every sample count must be >= 2")
    if counts != sorted(counts):
        raise ValidationError("sample_counts must be ascending")
    return [run_mc(scenario, workers, stream=i + 1, n_samples=c) for i, c in enumerate(counts)]
