import math

import numpy as np
import pytest

from glmtucker.decompose import FitConfig, fit
from glmtucker.families import GAUSSIAN
from glmtucker.linalg import haar_orthonormal, thin_qr
from glmtucker.metrics import angle_errors, evaluation_report, mse, response_error
from glmtucker.simulate import SimSpec, generate_noiseless


class TestMse:
    def test_identical(self):
        t = np.arange(8.0).reshape(2, 2, 2)
        assert mse(t, t) == 0.0

    def test_constant_shift(self):
        t = np.zeros((2, 3, 2))
        assert mse(t + 1.0, t) == t.size

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((2, 3, 4)), rng.standard_normal((3, 4))
        b = rng.standard_normal((2, 3, 4))
        assert mse(a, b) == pytest.approx(mse(b, a))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal((3, 2, 2)), rng.standard_normal((3, 2, 2))
        brute = sum((x - y) ** 2 for x, y in zip(a.ravel(), b.ravel()))
        assert mse(a, b) == pytest.approx(brute, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros((2, 2)), np.zeros((2, 3)))


class TestAngleErrors:
    def test_identical_factors(self):
        rng = np.random.default_rng(2)
        factors = [thin_qr(rng.standard_normal((5, 2))).q for _ in range(3)]
        assert angle_errors(factors, factors) == [0.0, 0.0, 0.0]

    def test_rotation_invariance(self):
        rng = np.random.default_rng(3)
        factors = [thin_qr(rng.standard_normal((6, 2))).q for _ in range(2)]
        rotated = [f @ haar_orthonormal(2, 2, rng) for f in factors]
        assert max(angle_errors(rotated, factors)) < 1e-10

    def test_orthogonal_complement(self):
        a = np.eye(4)[:, :2]
        b = np.eye(4)[:, 2:]
        assert angle_errors([a], [b]) == [pytest.approx(1.0, abs=1e-12)]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            angle_errors([np.eye(2)], [])


class TestResponseError:
    def test_perfect_fit(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((4, 4))
        assert response_error(m, m) == pytest.approx(0.0, abs=1e-12)

    def test_anti_correlated(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((4, 4))
        assert response_error(-m, m) == pytest.approx(2.0, abs=1e-12)

    def test_affine_invariance(self):
        rng = np.random.default_rng(6)
        m = rng.standard_normal((5, 3))
        assert response_error(2.5 * m + 1.0, m) == pytest.approx(0.0, abs=1e-12)

    def test_in_range(self):
        rng = np.random.default_rng(7)
        a, b = rng.standard_normal((6, 6)), rng.standard_normal((6, 6))
        assert 0.0 <= response_error(a, b) <= 2.0

    def test_constant_input_gives_infinity(self):
        assert response_error(np.ones((3, 3)), np.arange(9.0).reshape(3, 3)) == math.inf


class TestEvaluationReport:
    def test_noiseless_pipeline_near_zero(self):
        spec = SimSpec(
            dims=(12, 12, 12), feature_dims=(5, 5, 5), rank=(2, 2, 2),
            family=GAUSSIAN, effect_size=10.0, seed=8,
        )
        inst = generate_noiseless(spec)
        result = fit(inst.problem, FitConfig(rank=(2, 2, 2), init="spectral"))
        report = evaluation_report(result, inst.truth, GAUSSIAN, spec.effect_size)
        b_norm = np.sum((spec.effect_size * inst.truth.coefficient) ** 2)
        assert report.mse_coefficient < 1e-10 * b_norm
        assert report.max_sin_theta == max(report.per_mode_sin_theta)
        assert report.max_sin_theta < 1e-6
        assert report.response_error < 1e-10
        assert report.final_objective == result.final_objective
