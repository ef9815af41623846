import math
from pathlib import Path

import numpy as np
import pytest

from gnsspdop.constellation import load_scenario, parse_scenario
from gnsspdop.covmodel import composite, scaled_identity
from gnsspdop.dop import expected_sq_error, mismatch_covariance
from gnsspdop.errors import ConfigError, InsufficientSamples, ValidationError
from gnsspdop.montecarlo import (
    BLOCK_SIZE,
    NoiseSampler,
    block_rng,
    mc_convergence_sweep,
    monte_carlo,
    run_mc,
    sample_noise,
    simulate_errors,
)

from conftest import random_geometry

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
N = 100_000


def within(rep, target, k=3.0):
    return abs(rep.empirical_mean_sq_error - target) <= k * rep.standard_error


class TestNoiseSampler:

    def test_degenerate_variance(self):
        mean = np.array([1.0, -2.0, 3.0, 0.5])
        s = NoiseSampler.from_covariance(1e-20 * np.eye(4), mean)
        rng = block_rng(1, 0)
        for _ in range(100):
            np.testing.assert_allclose(sample_noise(s, rng), mean, atol=1e-9)

    def test_unit_variance(self):
        # sample variance of 1e5 unit normals has sd sqrt(2 / 1e5) ~ 0.0045
        s = NoiseSampler.from_covariance(np.eye(5))
        draws = s.draw(block_rng(123, 0), N)
        var = draws.var(axis=0, ddof=1)
        assert np.all((var > 0.98) & (var < 1.02))

    def test_cholesky_reconstructs(self, rng):
        B = rng.standard_normal((6, 6))
        cov = B @ B.T + np.eye(6)
        L = NoiseSampler.from_covariance(cov).cholesky_factor
        assert np.linalg.norm(L @ L.T - cov) / np.linalg.norm(cov) < 1e-10

    def test_deterministic_stream(self):
        s = NoiseSampler.from_covariance(np.eye(3))
        a = np.stack([sample_noise(s, r) for r in [block_rng(5, 0)] for _ in range(10)])
        g = block_rng(5, 0)
        b = np.stack([sample_noise(s, g) for _ in range(10)])
        assert a.tobytes() == b.tobytes()

    def test_streams_differ(self):
        a = block_rng(5, 0).standard_normal(4)
        assert not np.array_equal(a, block_rng(5, 1).standard_normal(4))
        assert not np.array_equal(a, block_rng(5, 0, stream=1).standard_normal(4))
        assert not np.array_equal(a, block_rng(6, 0).standard_normal(4))


class TestMonteCarlo:

    def test_identity_geometry(self):
        rep = monte_carlo(np.eye(3), scaled_identity(1, 3), n_samples=N, seed=42)
        assert rep.analytic_sq_error == pytest.approx(3.0, rel=1e-14)
        assert within(rep, 3.0)

    def test_scalar_mismatch(self):
        rep = monte_carlo(np.eye(3), scaled_identity(1, 3), scaled_identity(2, 3), n_samples=N, seed=43)
        assert rep.analytic_sq_error == pytest.approx(6.0, rel=1e-14)
        assert within(rep, 6.0)

    def test_diagonal_mismatch(self, rng):
        A = random_geometry(rng, 8)
        g = 1.5
        true = composite(g, np.diag(rng.uniform(0, 4, 8)))
        rep = monte_carlo(A, scaled_identity(g, 8), true, n_samples=N, seed=44)
        assert rep.analytic_sq_error == pytest.approx(
            expected_sq_error(A, scaled_identity(g, 8), true).expected_sq_error, rel=1e-14)
        assert within(rep, rep.analytic_sq_error)
        assert rep.analytic_sq_error > g * np.trace(np.linalg.inv(A.T @ A))

    def test_z_score_definition(self):
        rep = monte_carlo(np.eye(3), scaled_identity(1, 3), n_samples=1000, seed=1)
        assert rep.z_score == pytest.approx(
            (rep.empirical_mean_sq_error - rep.analytic_sq_error) / rep.standard_error, rel=1e-14)
        assert rep.standard_error > 0

    def test_unbiased_and_covariance(self, rng):
        A = random_geometry(rng, 7)
        model = scaled_identity(1.0, 7)
        true = composite(1.0, np.diag(rng.uniform(0, 3, 7)))
        rep = monte_carlo(A, model, true, n_samples=N, seed=45)
        se = np.sqrt(np.diag(rep.empirical_cov) / N)
        assert np.all(np.abs(rep.empirical_mean_error) <= 4 * se)
        analytic = mismatch_covariance(A, model, true)
        assert np.linalg.norm(rep.empirical_cov - analytic) < 5 * np.linalg.norm(analytic) / math.sqrt(N)

    def test_offset_invariance(self, rng):
        A = random_geometry(rng, 6)
        m = scaled_identity(2.0, 6)
        a = monte_carlo(A, m, n_samples=20_000, seed=3)
        b = monte_carlo(A, m, n_samples=20_000, seed=3, offset=(120.0, -45.0, 9.0))
        assert abs(a.empirical_mean_sq_error - b.empirical_mean_sq_error) <= 3 * a.standard_error

    def test_worker_count_independence(self, rng):
        A = random_geometry(rng, 9)
        m = scaled_identity(1.0, 9)
        n = 3 * BLOCK_SIZE + 17
        e1 = simulate_errors(A, m, m, n, seed=77, workers=1)
        e4 = simulate_errors(A, m, m, n, seed=77, workers=4)
        assert e1.tobytes() == e4.tobytes()

    def test_prefix_stability(self, rng):
        # the first block does not depend on how many samples follow
        A = random_geometry(rng, 5)
        m = scaled_identity(1.0, 5)
        short = simulate_errors(A, m, m, 100, seed=8)
        long = simulate_errors(A, m, m, BLOCK_SIZE + 5, seed=8)
        assert short.tobytes() == long[:100].tobytes()

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamples):
            monte_carlo(np.eye(3), scaled_identity(1, 3), n_samples=1)

    def test_failure_hook(self):
        rep = monte_carlo(np.eye(3), scaled_identity(1, 3), n_samples=10_000, seed=1, analytic=4.0)
        assert not rep.passed


class TestRunMc:

    def test_canonical_scenario(self):
        rep = run_mc(load_scenario(SCENARIOS / "canonical_mc.json"))
        assert rep.n_samples == N and rep.seed == 42
        assert rep.passed

    def test_requires_mc_section(self):
        with pytest.raises(ValidationError):
            run_mc(load_scenario(SCENARIOS / "orthogonal.json"))

    def test_true_model_used(self):
        sc = load_scenario(SCENARIOS / "scintillation_mismatch.json")
        A, model, true, bias = sc.resolve()
        rep = run_mc(sc)
        assert rep.analytic_sq_error == pytest.approx(
            expected_sq_error(A, model, true).expected_sq_error, rel=1e-14)
        assert rep.passed


class TestConvergenceSweep:

    scenario = load_scenario(SCENARIOS / "canonical_mc.json")

    def test_scaling(self):
        reps = mc_convergence_sweep(self.scenario, [100, 1000, 10_000])
        for a, b in zip(reps, reps[1:]):
            ratio = a.standard_error / b.standard_error
            assert math.sqrt(10) / 2 < ratio < 2 * math.sqrt(10)
        assert all(abs(r.z_score) <= 3 for r in reps)
        assert [r.stream for r in reps] == [1, 2, 3]

    def test_deterministic(self):
        a = mc_convergence_sweep(self.scenario, [100, 1000])
        b = mc_convergence_sweep(self.scenario, [100, 1000])
        assert [r.as_row() for r in a] == [r.as_row() for r in b]

    def test_biased(self):
        A = self.scenario.design_matrix()
        doc = dict(self.scenario.source)
        doc["bias"] = (A.matrix @ [0.5, 0.0, 0.0]).tolist()
        sc = parse_scenario(doc)
        trace = np.trace(np.linalg.inv(A.matrix.T @ A.matrix))  # gamma = 1
        rep, = mc_convergence_sweep(sc, [N])
        assert rep.analytic_sq_error == pytest.approx(trace + 0.25, rel=1e-12)
        assert within(rep, trace + 0.25)

    @pytest.mark.parametrize("counts", [[], [1000, 100], [1, 10]])
    def test_invalid_counts(self, counts):
        with pytest.raises(ConfigError):
            mc_convergence_sweep(self.scenario, counts)
