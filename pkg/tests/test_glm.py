import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glmtucker.families import BERNOULLI, GAUSSIAN, POISSON
from glmtucker.glm import ExplicitDesign, GlmOptions, GlmResult, solve_glm

ALL_FAMILIES = [GAUSSIAN, BERNOULLI, POISSON]


def brute_newton(family, y, design, beta0, iters=60):
    """Plain textbook IRLS with no ridge and no halving, as an oracle."""
    beta = beta0.copy()
    for _ in range(iters):
        eta = design @ beta
        w = family.variance(eta)
        h = design.T @ (design * w[:, None])
        g = design.T @ (y - family.mean(eta))
        step = np.linalg.solve(h, g)
        beta = beta + step
        if np.linalg.norm(step) < 1e-13:
            break
    return beta


class TestClosedForms:
    def test_gaussian_intercept_is_mean(self):
        res = solve_glm(GAUSSIAN, [1.0, 3.0], np.ones((2, 1)))
        assert res.coefficients[0] == pytest.approx(2.0, rel=1e-7)
        assert res.converged and not res.hit_bound

    def test_bernoulli_intercept_balanced(self):
        res = solve_glm(BERNOULLI, [0.0, 1.0], np.ones((2, 1)))
        assert res.coefficients[0] == pytest.approx(0.0, abs=1e-8)
        assert res.converged

    def test_poisson_intercept_log_mean(self):
        res = solve_glm(POISSON, [2.0, 4.0], np.ones((2, 1)))
        assert res.coefficients[0] == pytest.approx(np.log(3.0), rel=1e-7)
        assert res.converged

    def test_gaussian_matches_normal_equations(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((40, 5))
        y = rng.standard_normal(40)
        res = solve_glm(GAUSSIAN, y, x, options=GlmOptions(ridge=0.0))
        expected = np.linalg.solve(x.T @ x, x.T @ y)
        np.testing.assert_allclose(res.coefficients, expected, rtol=1e-9)


class TestNewtonBehaviour:
    @pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.kind)
    @pytest.mark.parametrize("seed", range(4))
    def test_objective_non_decreasing(self, family, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((30, 4))
        theta = x @ rng.uniform(-0.5, 0.5, 4)
        y = family.sample(family.mean(theta), rng)
        res = solve_glm(family, y, x)
        path = np.asarray(res.objective_path)
        assert np.all(np.diff(path) >= 0)

    @pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.kind)
    @pytest.mark.parametrize("seed", range(4))
    def test_stationarity_when_converged(self, family, seed):
        rng = np.random.default_rng(100 + seed)
        x = rng.standard_normal((50, 3))
        theta = x @ rng.uniform(-0.5, 0.5, 3)
        y = family.sample(family.mean(theta), rng)
        res = solve_glm(family, y, x)
        assert res.converged and not res.hit_bound
        resid = x.T @ (y - family.mean(x @ res.coefficients))
        bound = 1e-5 * (1.0 + np.max(np.abs(y))) * x.shape[0]
        assert np.max(np.abs(resid)) <= bound

    @pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.kind)
    def test_matches_brute_newton(self, family):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((60, 4))
        theta = x @ rng.uniform(-0.4, 0.4, 4)
        y = family.sample(family.mean(theta), rng)
        res = solve_glm(family, y, x, options=GlmOptions(ridge=0.0, tol=1e-12))
        oracle = brute_newton(family, y, x, np.zeros(4))
        np.testing.assert_allclose(res.coefficients, oracle, atol=1e-8)

    def test_warm_start_at_optimum_converges_immediately(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((25, 3))
        y = rng.standard_normal(25)
        first = solve_glm(GAUSSIAN, y, x)
        again = solve_glm(GAUSSIAN, y, x, warm_start=first.coefficients)
        assert again.converged
        np.testing.assert_allclose(again.coefficients, first.coefficients, atol=1e-12)

    @settings(deadline=None, max_examples=25)
    @given(seed=st.integers(0, 10_000))
    def test_predictor_bound_always_holds(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((20, 2))
        y = rng.binomial(1, 0.5, 20).astype(float)
        opts = GlmOptions(predictor_bound=1.5)
        res = solve_glm(BERNOULLI, y, x, options=opts)
        assert np.max(np.abs(x @ res.coefficients)) <= opts.predictor_bound + 1e-12

    def test_separation_hits_bound(self):
        # perfectly separable responses would push the intercept to infinity
        x = np.ones((4, 1))
        y = np.ones(4)
        res = solve_glm(BERNOULLI, y, x, options=GlmOptions(predictor_bound=5.0))
        assert res.hit_bound
        assert np.abs(res.coefficients[0]) <= 5.0 + 1e-12
        assert np.all(np.diff(res.objective_path) >= 0)


class TestContracts:
    def test_response_length_mismatch(self):
        with pytest.raises(ValueError):
            solve_glm(GAUSSIAN, [1.0, 2.0, 3.0], np.ones((2, 1)))

    def test_warm_start_length_mismatch(self):
        with pytest.raises(ValueError):
            solve_glm(GAUSSIAN, [1.0, 2.0], np.ones((2, 1)), warm_start=np.zeros(2))

    def test_explicit_design_adapter(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((6, 3))
        d = ExplicitDesign(m)
        beta = rng.standard_normal(3)
        w = rng.uniform(0.5, 1.5, 6)
        np.testing.assert_allclose(d.matvec(beta), m @ beta)
        np.testing.assert_allclose(d.rmatvec(m @ beta), m.T @ (m @ beta))
        np.testing.assert_allclose(d.weighted_gram(w), m.T @ np.diag(w) @ m)

    def test_result_fields_finite(self):
        res = solve_glm(POISSON, [0.0, 1.0, 2.0], np.ones((3, 1)))
        assert isinstance(res, GlmResult)
        assert np.isfinite(res.final_objective)
        assert np.all(np.isfinite(res.coefficients))

    def test_bad_options(self):
        with pytest.raises(ValueError):
            GlmOptions(tol=0.0)
        with pytest.raises(ValueError):
            GlmOptions(ridge=-1.0)
