import numpy as np
import pytest

from harqnp.mvn import (DimensionTooLarge, OracleEstimate, OrthantIntegrator, QmcParams,
                        mvn_cdf)


class TestMvnCdf:
    def test_one_dimension(self):
        est = mvn_cdf([0.0], [[1.0]])
        assert est.value == pytest.approx(0.5) and est.exact

    def test_independent(self):
        est = mvn_cdf([0.0, 0.0], np.eye(2))
        assert est.value == pytest.approx(0.25, abs=1e-6)

    def test_equicorrelated_against_monte_carlo(self):
        cov = np.full((3, 3), 0.5) + 0.5 * np.eye(3)
        est = mvn_cdf([0.0, 0.0, 0.0], cov, QmcParams(4096, 16))
        rng = np.random.default_rng(1)
        chol = np.linalg.cholesky(cov)
        n, hits = 10**7, 0
        for _ in range(10):
            w = rng.standard_normal((n // 10, 3)) @ chol.T
            hits += int((w < 0).all(axis=1).sum())
        mc = hits / n
        se = np.sqrt(mc * (1 - mc) / n)
        assert abs(est.value - mc) <= 3 * np.hypot(se, est.std_error)
        # closed form for the trivariate orthant
        assert est.value == pytest.approx(0.25, abs=1e-4)

    def test_singular_covariance(self):
        cov = np.array([[1.0, 1.0], [1.0, 1.0]])
        est = mvn_cdf([0.5, 1.0], cov)
        assert est.value == pytest.approx(0.6914624612740131, abs=1e-6)

    def test_infinite_bounds(self):
        assert mvn_cdf([-np.inf, 1.0], np.eye(2)).value == 0.0
        assert mvn_cdf([np.inf, 0.0], np.eye(2)).value == pytest.approx(0.5)

    def test_dimension_cap(self):
        with pytest.raises(DimensionTooLarge):
            mvn_cdf(np.zeros(5), np.eye(5), QmcParams(max_dim=4))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mvn_cdf([0.0, 0.0], np.eye(3))


class TestQmcParams:
    def test_power_of_two(self):
        with pytest.raises(ValueError):
            QmcParams(n_points=1000)

    def test_shifts(self):
        with pytest.raises(ValueError):
            QmcParams(n_shifts=1)


class TestOrthantIntegrator:
    def test_batch_invariance(self, rng):
        A = rng.standard_normal((4, 4))
        cov = A @ A.T + np.eye(4)
        integ = OrthantIntegrator(cov, QmcParams(512, 8), seed=3)
        U = rng.standard_normal((10, 4))
        full, _ = integ(U)
        parts = np.concatenate([integ(U[:3])[0], integ(U[3:])[0]])
        np.testing.assert_array_equal(full, parts)

    def test_matches_mvn_cdf(self, rng):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        integ = OrthantIntegrator(cov, QmcParams(2048, 8))
        u = np.array([0.3, -0.4])
        v, se = integ(u[None])
        ref = mvn_cdf(u, cov, QmcParams(4096, 16))
        assert abs(v[0] - ref.value) <= 3 * np.hypot(se[0], ref.std_error) + 1e-6


class TestOracleEstimate:
    def test_range(self):
        with pytest.raises(ValueError):
            OracleEstimate(1.2, 0.0, "x")
        with pytest.raises(ValueError):
            OracleEstimate(0.5, -1.0, "x")
