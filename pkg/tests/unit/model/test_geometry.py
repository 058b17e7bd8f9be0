import math

import numpy as np
import pytest

from src.core.errors import DegenerateCovarianceError, InvalidParameterError
from src.model.geometry import (
    build_covariance,
    check_scale_conditioning,
    eval_gaussian,
    offsets_from_normals,
    quaternion_multiply,
    quaternion_to_rotmat,
    sample_position,
    sample_positions,
)

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


# =============================================================================
# build_covariance
# =============================================================================


class TestBuildCovariance:
    """协方差构造 Σ = R S Sᵀ Rᵀ"""

    def test_identity(self):
        """log_scale 为 0、单位旋转时得到单位阵"""
        np.testing.assert_allclose(build_covariance(np.zeros(3), IDENTITY), np.eye(3), atol=1e-15)

    def test_diagonal(self):
        """x 轴尺度为 2 时 Σ = diag(4, 1, 1)"""
        sigma = build_covariance(np.array([math.log(2.0), 0.0, 0.0]), IDENTITY)
        np.testing.assert_allclose(sigma, np.diag([4.0, 1.0, 1.0]), atol=1e-12)

    def test_eigenvalues_match_squared_scales(self, rng):
        """随机旋转下特征值等于 exp(2·log_scale)"""
        log_scale = np.log([1.5, 0.5, 3.0])
        for _ in range(10):
            sigma = build_covariance(log_scale, random_unit_quaternion(rng))
            np.testing.assert_allclose(np.linalg.eigvalsh(sigma), [0.25, 2.25, 9.0], atol=1e-9)
            assert np.max(np.abs(sigma - sigma.T)) <= 1e-12

    def test_rotation_equivariance(self, rng):
        """build(s, q2∘q1) = R(q2) build(s, q1) R(q2)ᵀ"""
        log_scale = rng.normal(size=3) * 0.5
        for _ in range(10):
            q1, q2 = random_unit_quaternion(rng), random_unit_quaternion(rng)
            r2 = quaternion_to_rotmat(q2)
            left = build_covariance(log_scale, quaternion_multiply(q2, q1))
            right = r2 @ build_covariance(log_scale, q1) @ r2.T
            np.testing.assert_allclose(left, right, atol=1e-10)

    @pytest.mark.parametrize(
        "log_scale,rotation",
        [
            pytest.param([np.nan, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], id="nan_scale"),
            pytest.param([0.0, 0.0, 0.0], [np.inf, 0.0, 0.0, 0.0], id="inf_rotation"),
            pytest.param([0.0, 0.0, 0.0], [1.1, 0.0, 0.0, 0.0], id="non_unit_quaternion"),
        ],
    )
    def test_invalid_input(self, log_scale, rotation):
        """非有限输入或非单位四元数被拒绝"""
        with pytest.raises(InvalidParameterError):
            build_covariance(np.array(log_scale), np.array(rotation))

    def test_conditioning_check(self):
        """尺度比超过条件数上限时报错"""
        check_scale_conditioning(np.log([1.0, 1.0, 1e-5]))
        with pytest.raises(DegenerateCovarianceError):
            check_scale_conditioning(np.log([1.0, 1.0, 1e-7]))


# =============================================================================
# eval_gaussian
# =============================================================================


class TestEvalGaussian:
    """非归一化 Gaussian 求值"""

    def test_peak_at_mean(self):
        mu = np.array([0.3, -0.2, 1.0])
        assert eval_gaussian(mu, np.eye(3), mu) == 1.0

    def test_unit_distance(self):
        value = eval_gaussian(np.zeros(3), np.eye(3), np.array([1.0, 0.0, 0.0]))
        assert value == pytest.approx(math.exp(-0.5), abs=1e-15)
        assert value == pytest.approx(0.60653, abs=1e-5)

    def test_matches_dense_solve(self, rng):
        """与直接解线性方程组的结果一致"""
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            sigma = a @ a.T + 0.5 * np.eye(3)
            mu, x = rng.normal(size=3), rng.normal(size=3)
            d = x - mu
            expected = math.exp(-0.5 * float(d @ np.linalg.solve(sigma, d)))
            assert eval_gaussian(mu, sigma, x) == pytest.approx(expected, abs=1e-12)

    def test_monotone_along_ray(self, rng):
        """沿任意射线单调递减"""
        sigma = build_covariance(np.log([0.5, 1.0, 2.0]), random_unit_quaternion(rng))
        direction = rng.normal(size=3)
        values = [eval_gaussian(np.zeros(3), sigma, t * direction) for t in np.linspace(0, 3, 20)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_degenerate(self):
        """条件数超过 1e12 时报错"""
        with pytest.raises(DegenerateCovarianceError):
            eval_gaussian(np.zeros(3), np.diag([1.0, 1.0, 1e-13]), np.ones(3))

    def test_not_positive_definite(self):
        with pytest.raises(DegenerateCovarianceError):
            eval_gaussian(np.zeros(3), np.diag([1.0, -1.0, 1.0]), np.ones(3))


# =============================================================================
# sample_position
# =============================================================================


class TestSamplePosition:
    """从 N(μ, Σ) 采样"""

    def test_vanishing_scale(self, rng):
        mu = np.array([1.0, 2.0, 3.0])
        sample = sample_position(mu, np.full(3, math.log(1e-12)), IDENTITY, rng)
        np.testing.assert_allclose(sample, mu, atol=1e-9)

    def test_definition_unrolled(self):
        """单位尺度、单位旋转时输出 μ + z，z 是 rng 的第一组正态数"""
        mu = np.array([0.5, -0.5, 2.0])
        z = np.random.default_rng(7).standard_normal(3)
        sample = sample_position(mu, np.zeros(3), IDENTITY, np.random.default_rng(7))
        np.testing.assert_allclose(sample, mu + z, atol=1e-15)

    def test_mirrored_normals(self, rng):
        """z 与 −z 的样本关于 μ 对称"""
        log_scales = rng.normal(size=(5, 3)) * 0.3
        rotations = np.stack([random_unit_quaternion(rng) for _ in range(5)])
        z = rng.standard_normal((5, 3))
        plus = offsets_from_normals(log_scales, rotations, z)
        minus = offsets_from_normals(log_scales, rotations, -z)
        np.testing.assert_allclose(plus, -minus, atol=1e-15)

    def test_empirical_moments(self, rng):
        """10⁵ 个样本的均值与协方差"""
        n = 100_000
        mu = np.array([0.2, -0.1, 1.5])
        log_scale = np.log([0.3, 0.1, 0.6])
        q = random_unit_quaternion(rng)
        samples = sample_positions(
            np.tile(mu, (n, 1)), np.tile(log_scale, (n, 1)), np.tile(q, (n, 1)), rng
        )
        sigma = build_covariance(log_scale, q)
        assert np.max(np.abs(samples.mean(axis=0) - mu)) <= 0.02 * 0.6
        error = np.linalg.norm(np.cov(samples.T) - sigma) / np.linalg.norm(sigma)
        assert error <= 0.05
