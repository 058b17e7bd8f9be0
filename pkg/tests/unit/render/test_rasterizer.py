import numpy as np
import pytest

from src.core.errors import NonFiniteParameterError
from src.model.gaussians import GaussianCloud, opacity_to_logit
from src.model.sh import rgb_to_sh_dc
from src.render.projection import project_cloud
from src.render.rasterizer import render
from src.render.settings import DEFAULT_RENDER_SETTINGS, EXACT_RENDER_SETTINGS, RenderSettings
from tests.helpers import make_camera, make_cloud


def random_cloud(rng: np.random.Generator, n: int, width: int, height: int) -> GaussianCloud:
    depth = rng.uniform(1.5, 5.0, size=n)
    # 部分中心落在图像外，只有尾部进入图像
    lateral = rng.uniform(-0.7, 0.7, size=(n, 2)) * depth[:, None] * np.array([1.0, height / width])
    rotations = rng.standard_normal((n, 4))
    opacities = rng.uniform(0.05, 0.95, size=n)
    opacities[: max(1, n // 10)] = 0.9995
    return GaussianCloud.from_arrays(
        positions=np.column_stack([lateral, depth]),
        log_scales=rng.uniform(np.log(0.05), np.log(0.5), size=(n, 3)),
        rotations=rotations / np.linalg.norm(rotations, axis=1, keepdims=True),
        opacity_logits=opacity_to_logit(opacities),
        sh=rgb_to_sh_dc(rng.uniform(0.0, 1.0, size=(n, 3)))[:, None, :],
    )


# 只剔除相机背后的 Gaussian
UNBOUNDED = RenderSettings(transmittance_min=0.0, cutoff_sigma=1e3)
DEFAULT_FOOTPRINT = DEFAULT_RENDER_SETTINGS.model_copy(update={"transmittance_min": 0.0})


def composite_oracle(camera, cloud, background):
    """整幅图逐 Gaussian 合成，不提前终止、不裁剪足迹"""
    splats = project_cloud(camera, cloud, 0, UNBOUNDED)
    ys, xs = np.mgrid[0 : camera.height, 0 : camera.width].astype(np.float64)
    color = np.zeros((camera.height, camera.width, 3))
    trans = np.ones((camera.height, camera.width))
    for i in splats.order:
        u, v = splats.means2d[i]
        a, b, c = splats.conics[i]
        dx, dy = xs - u, ys - v
        q = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
        alpha = np.minimum(splats.opacities[i] * np.exp(-0.5 * q), 0.999)
        color += (alpha * trans)[..., None] * splats.colors[i]
        trans *= 1.0 - alpha
    return color + trans[..., None] * np.asarray(background), trans


class TestRender:
    """前向合成"""

    def test_empty_cloud(self):
        output = render(make_camera(8, 6), GaussianCloud.empty(), background=(0.2, 0.4, 0.6))
        np.testing.assert_array_equal(output.image, np.broadcast_to([0.2, 0.4, 0.6], (6, 8, 3)))
        np.testing.assert_array_equal(output.final_transmittance, np.ones((6, 8)))

    def test_single_gaussian_on_pixel(self):
        """G′ = 1 的像素：o·c + (1−o)·background"""
        camera = make_camera(31, 31)
        o, c, bg = 0.7, np.array([0.9, 0.3, 0.1]), np.array([0.1, 0.2, 0.3])
        cloud = make_cloud([[0.0, 0.0, 3.0]], scales=0.2, opacities=o, colors=c)
        output = render(camera, cloud, background=bg)
        np.testing.assert_allclose(output.image[15, 15], o * c + (1 - o) * bg, atol=1e-12)
        contributors = output.contributors(15, 15)
        assert len(contributors) == 1 and contributors[0][0] == 0
        assert contributors[0][1] == pytest.approx(o, abs=1e-12)

    @pytest.mark.parametrize(
        "settings",
        [
            pytest.param(DEFAULT_FOOTPRINT, id="default_footprint"),
            pytest.param(EXACT_RENDER_SETTINGS, id="exact"),
        ],
    )
    def test_matches_brute_force_oracle(self, settings):
        """50 个随机场景与逐像素合成 oracle 一致"""
        rng = np.random.default_rng(2024)
        camera = make_camera(32, 32)
        for _ in range(50):
            cloud = random_cloud(rng, int(rng.integers(1, 51)), 32, 32)
            background = rng.uniform(size=3)
            output = render(camera, cloud, background, settings=settings)
            expected, _ = composite_oracle(camera, cloud, background)
            assert np.max(np.abs(output.image - expected)) <= 1e-6

    def test_tail_of_off_image_gaussian(self):
        """中心在图像外约 4.5σ 处的 Gaussian 仍然进入渲染"""
        camera = make_camera(32, 32)
        # u = 63.5，水平 σ ≈ 7.2 像素；最右列距中心 32.5 像素
        cloud = make_cloud([[3.0, 0.0, 2.0]], scales=0.25, opacities=0.9, colors=(1.0, 1.0, 1.0))
        output = render(camera, cloud)
        expected, _ = composite_oracle(camera, cloud, np.zeros(3))
        assert output.image[16, 31, 0] > 1e-5
        assert np.max(np.abs(output.image - expected)) <= 1e-6

    def test_compositing_conservation(self, rng):
        """白色 Gaussian、黑背景：T_final + Σ αT = 1"""
        camera = make_camera(32, 32)
        for _ in range(10):
            cloud = random_cloud(rng, 30, 32, 32)
            cloud.sh[:, 0, :] = rgb_to_sh_dc(np.ones(3))
            output = render(camera, cloud, settings=EXACT_RENDER_SETTINGS)
            total = output.image[..., 0] + output.final_transmittance
            assert np.max(np.abs(total - 1.0)) <= 1e-10

    def test_early_termination_close_to_exact(self, rng):
        camera = make_camera(32, 32)
        terminating = DEFAULT_RENDER_SETTINGS
        for _ in range(10):
            cloud = random_cloud(rng, 50, 32, 32)
            exact = render(camera, cloud, settings=EXACT_RENDER_SETTINGS).image
            early = render(camera, cloud, settings=terminating).image
            assert np.max(np.abs(exact - early)) <= 1e-3
            assert np.all(render(camera, cloud, settings=terminating).final_transmittance >= 0.0)

    def test_input_order_does_not_matter(self, rng):
        """打乱行顺序（id 随行移动），图像逐位一致"""
        camera = make_camera(32, 32)
        cloud = random_cloud(rng, 20, 32, 32)
        perm = rng.permutation(20)
        shuffled = GaussianCloud.from_arrays(
            cloud.positions[perm], cloud.log_scales[perm], cloud.rotations[perm],
            cloud.opacity_logits[perm], cloud.sh[perm], ids=cloud.ids[perm],
        )
        np.testing.assert_array_equal(render(camera, cloud).image, render(camera, shuffled).image)

    def test_thread_count_does_not_change_result(self, rng):
        camera = make_camera(32, 32)
        cloud = random_cloud(rng, 25, 32, 32)
        single = render(camera, cloud, settings=RenderSettings(band_height=8, workers=1))
        multi = render(camera, cloud, settings=RenderSettings(band_height=8, workers=3))
        np.testing.assert_array_equal(single.image, multi.image)
        np.testing.assert_array_equal(single.final_transmittance, multi.final_transmittance)

    def test_contributors_in_depth_order(self):
        camera = make_camera(31, 31)
        cloud = make_cloud([[0, 0, 4.0], [0, 0, 2.0]], scales=0.3, opacities=[0.5, 0.4])
        ids = [i for i, _ in render(camera, cloud).contributors(15, 15)]
        assert ids == [1, 0]

    def test_non_finite_parameter_names_id(self):
        cloud = make_cloud([[0, 0, 2.0], [0, 0, 3.0]])
        cloud.opacity_logits[1] = np.inf
        with pytest.raises(NonFiniteParameterError, match="id=1"):
            render(make_camera(), cloud)
