import numpy as np
import pytest

from src.model.camera import Camera
from src.model.geometry import build_covariance
from src.render.projection import project_cloud, project_gaussian
from src.render.settings import DEFAULT_RENDER_SETTINGS
from tests.helpers import make_camera, make_cloud


def rotation_about_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


class TestProjectGaussian:
    """EWA 投影"""

    def test_isotropic_on_optical_axis(self):
        """光轴上的各向同性 Gaussian：cov2d = (fσ/d)²·I + dilation·I"""
        camera = make_camera(33, 33, focal=40.0)
        sigma, depth = 0.2, 3.0
        cloud = make_cloud([[0.0, 0.0, depth]], scales=sigma)
        splat = project_gaussian(camera, cloud.gaussian(0))
        np.testing.assert_allclose(splat.mean2d, [16.0, 16.0], atol=1e-12)
        expected = ((40.0 * sigma / depth) ** 2 + DEFAULT_RENDER_SETTINGS.dilation) * np.eye(2)
        np.testing.assert_allclose(splat.cov2d, expected, atol=1e-12)
        assert splat.depth == pytest.approx(depth)
        assert splat.source_id == 0

    def test_matches_numeric_jacobian(self, rng):
        """偏离光轴时与数值雅可比构造的 cov2d 一致"""
        camera = Camera(
            fx=30.0, fy=28.0, cx=15.5, cy=14.0, width=32, height=30,
            rotation=rotation_about_y(0.2), translation=np.array([0.1, -0.2, 0.3]),
        )
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        mu = np.array([0.3, 0.2, 3.0])
        log_scale = np.log([0.1, 0.2, 0.15])
        cloud = make_cloud([mu])
        cloud.log_scales[0] = log_scale
        cloud.rotations[0] = q
        splat = project_gaussian(camera, cloud.gaussian(0))

        def pixel(p):
            t = camera.world_to_camera(p[None, :])[0]
            return np.array([camera.fx * t[0] / t[2] + camera.cx, camera.fy * t[1] / t[2] + camera.cy])

        h = 1e-6
        jac = np.stack(
            [(pixel(mu + h * e) - pixel(mu - h * e)) / (2 * h) for e in np.eye(3)], axis=1
        )
        expected = jac @ build_covariance(log_scale, q) @ jac.T + 0.3 * np.eye(2)
        np.testing.assert_allclose(splat.cov2d, expected, rtol=1e-6)
        np.testing.assert_allclose(splat.mean2d, pixel(mu), atol=1e-10)

    def test_behind_camera_is_culled(self):
        cloud = make_cloud([[0.0, 0.0, -1.0]])
        assert project_gaussian(make_camera(), cloud.gaussian(0)) is None

    def test_outside_image_is_culled(self):
        cloud = make_cloud([[50.0, 0.0, 2.0]], scales=0.01)
        assert project_gaussian(make_camera(), cloud.gaussian(0)) is None

    def test_translation_equivariance(self, rng):
        """μ 与相机中心同时平移，投影不变"""
        rotation = rotation_about_y(0.3)
        translation = np.array([0.2, 0.1, 0.5])
        base = Camera(
            fx=32.0, fy=32.0, cx=15.5, cy=15.5, width=32, height=32,
            rotation=rotation, translation=translation,
        )
        shift = rng.normal(size=3)
        moved = Camera(
            fx=32.0, fy=32.0, cx=15.5, cy=15.5, width=32, height=32,
            rotation=rotation, translation=translation - rotation @ shift,
        )
        cloud = make_cloud([[0.4, -0.1, 3.0]], scales=0.2)
        a = project_gaussian(base, cloud.gaussian(0))
        cloud.positions[0] += shift
        b = project_gaussian(moved, cloud.gaussian(0))
        np.testing.assert_allclose(a.mean2d, b.mean2d, atol=1e-10)
        np.testing.assert_allclose(a.cov2d, b.cov2d, atol=1e-10)
        assert a.depth == pytest.approx(b.depth, abs=1e-10)

    def test_sorted_by_depth_then_id(self):
        cloud = make_cloud([[0, 0, 3.0], [0, 0, 2.0], [0.1, 0, 3.0]])
        splats = project_cloud(make_camera(), cloud, 0)
        assert [int(splats.ids[i]) for i in splats.order] == [1, 0, 2]
