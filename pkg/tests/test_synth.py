import json

import numpy as np
import pytest

from pycornea.geometry import (
    CameraIntrinsics,
    intersect_many,
    look_at,
    pixel_directions,
    pose_from_gaze,
    reflect_many,
)
from pycornea.ingest import ellipse_mask, load_image_16, load_mask
from pycornea.synth import (
    Box,
    IrisSpec,
    SceneSpec,
    Sphere,
    SynthConfig,
    TrajectorySpec,
    corrupt_radii,
    default_scene,
    default_trajectory,
    load_ground_truth,
    make_dataset,
    project_limbus,
    render_frame,
    render_ground_truth_view,
    trace,
)
from pycornea.utils import ConfigError, MissingGroundTruthError


def _small_config(**kwargs) -> SynthConfig:
    base = dict(
        camera=CameraIntrinsics(1600.0, 80.0, 60.0, 160, 120),
        trajectory=TrajectorySpec(
            centers=((-3.0, 0.0, 550.0), (3.0, 2.0, 560.0), (0.0, -2.0, 540.0)),
            gazes=((0.0, 0.0, -1.0), (0.05, 0.0, -1.0), (0.0, 0.05, -1.0)),
        ),
    )
    base.update(kwargs)
    return SynthConfig(**base)


class TestSpecs:
    def test_invalid_primitives(self):
        with pytest.raises(ValueError):
            Sphere((0.0, 0.0, 100.0), 0.0, (0.5, 0.5, 0.5))
        with pytest.raises(ValueError):
            Sphere((0.0, 0.0, 100.0), 1.0, (1.5, 0.5, 0.5))
        with pytest.raises(ValueError):
            Box((0.0, 0.0, 0.0), (1.0, 0.0, 1.0), (0.5, 0.5, 0.5))
        with pytest.raises(ValueError):
            SceneSpec(ambient=1.5)

    def test_bounds_and_check_inside(self):
        scene = default_scene()
        lo, hi = scene.bounds()
        np.testing.assert_allclose(lo, [-150.0, -90.0, 240.0])
        np.testing.assert_allclose(hi, [110.0, 70.0, 360.0])
        scene.check_inside((-160.0, -100.0, 200.0), (120.0, 80.0, 400.0))
        with pytest.raises(ConfigError):
            scene.check_inside((-100.0, -100.0, 200.0), (120.0, 80.0, 400.0))
        assert SceneSpec().bounds() is None

    def test_scene_dict_round_trip(self):
        scene = default_scene()
        assert SceneSpec.from_dict(json.loads(json.dumps(scene.to_dict()))) == scene

    def test_iris_profile(self):
        iris = IrisSpec()
        colors = iris.color(np.array([[0.0, 0.0], [0.0, 1.0], [0.6, 0.8], [0.0, 2.0]]))
        np.testing.assert_allclose(colors[0], iris.colors[0])
        np.testing.assert_allclose(colors[1], iris.colors[-1])
        np.testing.assert_allclose(colors[2], colors[1])
        np.testing.assert_allclose(colors[3], colors[1])

    def test_iris_angular_perturbation(self):
        iris = IrisSpec.uniform((0.4, 0.4, 0.4))
        wavy = IrisSpec((0.0, 1.0), ((0.4, 0.4, 0.4),) * 2, angular_amplitude=0.5, angular_frequency=2)
        disks = np.array([[0.0, 0.5], [0.5, 0.0]])
        np.testing.assert_allclose(iris.color(disks), 0.4)
        np.testing.assert_allclose(wavy.color(disks)[:, 0], [0.6, 0.2])

    def test_invalid_iris(self):
        with pytest.raises(ValueError):
            IrisSpec((0.1, 1.0), ((0.1, 0.1, 0.1),) * 2)
        with pytest.raises(ValueError):
            IrisSpec((0.0, 0.5, 0.5, 1.0), ((0.1, 0.1, 0.1),) * 4)
        with pytest.raises(ValueError):
            IrisSpec((0.0, 1.0), ((0.1, 0.1, 0.1),))

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            TrajectorySpec(((0.0, 0.0, -10.0),), ((0.0, 0.0, -1.0),))
        with pytest.raises(ValueError):
            TrajectorySpec(((0.0, 0.0, 500.0),), ((0.0, 0.0, 1.0),))
        with pytest.raises(ValueError):
            TrajectorySpec((), ())

    def test_default_trajectory(self):
        trajectory = default_trajectory()
        assert trajectory.frame_count == 8
        depths = np.asarray(trajectory.centers)[:, 2]
        assert np.all((depths > 500.0) & (depths < 600.0))

    def test_from_sections(self):
        config = SynthConfig.from_sections({"synth": {"noise": 0.1, "seed": 5}})
        assert config.noise == 0.1
        assert config.seed == 5
        assert config.camera.width == 400
        with pytest.raises(ConfigError):
            SynthConfig.from_sections({"synth": {"sigma": 0.1}})
        with pytest.raises(ConfigError):
            SynthConfig.from_sections({"synth": {"noise": -1.0}})
        with pytest.raises(ConfigError):
            SynthConfig.from_sections({"camera": {"focal_length": 100.0}})


class TestTracer:
    def test_sphere_hit(self):
        scene = SceneSpec(spheres=(Sphere((0.0, 0.0, 100.0), 10.0, (0.5, 0.2, 0.1)),), ambient=0.1)
        hit, t, radiance = trace(scene, np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]))
        assert hit[0]
        assert t[0] == pytest.approx(90.0)
        np.testing.assert_allclose(radiance[0], [0.6, 0.3, 0.2])

    def test_miss_is_black(self):
        scene = SceneSpec(spheres=(Sphere((0.0, 0.0, 100.0), 10.0, (0.5, 0.2, 0.1)),), ambient=0.1)
        hit, t, radiance = trace(scene, np.zeros((1, 3)), np.array([[1.0, 0.0, 0.0]]))
        assert not hit[0]
        assert np.isinf(t[0])
        np.testing.assert_array_equal(radiance[0], 0.0)

    def test_box_hit(self):
        scene = SceneSpec(boxes=(Box((-5.0, -5.0, 50.0), (5.0, 5.0, 60.0), (0.0, 1.0, 0.0)),))
        hit, t, radiance = trace(scene, np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]))
        assert hit[0]
        assert t[0] == pytest.approx(50.0)
        np.testing.assert_allclose(radiance[0], [0.0, 1.0, 0.0])

    def test_nearest_primitive_wins(self):
        scene = SceneSpec(
            spheres=(Sphere((0.0, 0.0, 200.0), 10.0, (1.0, 0.0, 0.0)),),
            boxes=(Box((-5.0, -5.0, 50.0), (5.0, 5.0, 60.0), (0.0, 0.0, 1.0)),),
        )
        _, t, radiance = trace(scene, np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]))
        assert t[0] == pytest.approx(50.0)
        np.testing.assert_allclose(radiance[0], [0.0, 0.0, 1.0])

    def test_origin_inside_sphere(self):
        scene = SceneSpec(spheres=(Sphere((0.0, 0.0, 0.0), 10.0, (1.0, 1.0, 1.0)),))
        hit, t, _ = trace(scene, np.zeros((1, 3)), np.array([[0.0, 1.0, 0.0]]))
        assert hit[0]
        assert t[0] == pytest.approx(10.0)


class TestCorruptRadii:
    def test_zero_noise_is_identity(self, rng):
        r = np.array([10.0, 20.0, 30.0])
        np.testing.assert_array_equal(corrupt_radii(r, 0.0, rng), r)

    def test_bounded_multiplicative_noise(self, rng):
        r = np.full(1000, 20.0)
        noisy = corrupt_radii(r, 0.1, rng)
        assert np.all(noisy >= 18.0) and np.all(noisy <= 22.0)
        assert noisy.std() > 0.5


class TestFrameRender:
    def test_frontal_limbus_is_a_circle(self, model, camera):
        pose = pose_from_gaze(model, (0.0, 0.0, 550.0), (0.0, 0.0, -1.0))
        fit = project_limbus(model, pose, camera)
        assert fit.cx == pytest.approx(200.0, abs=1e-6)
        assert fit.cy == pytest.approx(150.0, abs=1e-6)
        assert fit.major == pytest.approx(1600.0 * model.base_radius / 550.0, rel=1e-6)
        assert fit.minor == pytest.approx(fit.major, rel=1e-6)

    def test_limbus_outside_image(self, model, camera):
        pose = pose_from_gaze(model, (200.0, 0.0, 550.0), (0.0, 0.0, -1.0))
        with pytest.raises(ValueError):
            project_limbus(model, pose, camera)

    def test_empty_scene_shows_iris(self, model, camera):
        pose = pose_from_gaze(model, (0.0, 0.0, 550.0), (0.0, 0.0, -1.0))
        iris = IrisSpec.uniform((0.3, 0.2, 0.1))
        rendered = render_frame(SceneSpec(), iris, model, pose, camera, skin=(0.9, 0.9, 0.9))
        mask = rendered.observation.mask
        inside = ellipse_mask(rendered.fit, mask.shape)
        assert not np.any(mask & ~inside)
        assert mask.sum() > 0.8 * inside.sum()
        image = rendered.linear
        np.testing.assert_allclose(image[mask], np.tile([0.3, 0.2, 0.1], (mask.sum(), 1)), atol=1e-5)
        np.testing.assert_allclose(image[~mask], 0.9, atol=1e-5)
        assert rendered.image.dtype == np.uint16

    def test_scene_adds_reflection(self, model, camera):
        pose = pose_from_gaze(model, (0.0, 0.0, 550.0), (0.0, 0.0, -1.0))
        iris = IrisSpec.uniform((0.1, 0.1, 0.1))
        # an enclosing sphere catches every reflected ray
        shell = Sphere((0.0, 0.0, 0.0), 5000.0, (0.5, 0.0, 0.0))
        rendered = render_frame(SceneSpec(spheres=(shell,)), iris, model, pose, camera)
        image = rendered.linear[rendered.observation.mask]
        np.testing.assert_allclose(image, np.tile([0.6, 0.1, 0.1], (len(image), 1)), atol=1e-5)

    def test_quantization_bound(self, model, camera):
        pose = pose_from_gaze(model, (0.0, 0.0, 550.0), (0.0, 0.0, -1.0))
        iris = IrisSpec.uniform((0.123456, 0.2, 0.31))
        shell = Sphere((0.0, 0.0, 0.0), 5000.0, (0.4321, 0.0, 0.05))
        rendered = render_frame(SceneSpec(spheres=(shell,)), iris, model, pose, camera, skin=(0.77, 0.61, 0.5))
        mask = rendered.observation.mask
        exact = np.empty(mask.shape + (3,))
        exact[...] = (0.77, 0.61, 0.5)
        exact[mask] = (0.123456 + 0.4321, 0.2, 0.31 + 0.05)
        assert np.max(np.abs(rendered.linear - exact)) <= 0.5 / 65535 + 1e-12

    def test_reflection_reciprocity(self, model, camera):
        pose = pose_from_gaze(model, (4.0, -2.0, 550.0), (0.1, 0.05, -1.0))
        ys, xs = np.nonzero(render_frame(SceneSpec(), IrisSpec(), model, pose, camera).observation.mask)
        d = pixel_directions(camera, ys, xs)
        hit, _, points, normals = intersect_many(model, np.zeros_like(d), d, pose)
        d, points, normals = d[hit], points[hit], normals[hit]
        r = reflect_many(d, normals)
        r /= np.linalg.norm(r, axis=-1, keepdims=True)
        shell = SceneSpec(spheres=(Sphere((0.0, 0.0, 0.0), 5000.0, (0.5, 0.5, 0.5)),))
        reached, t, _ = trace(shell, points, r)
        assert np.all(reached)
        back_hit, _, back_points, back_normals = intersect_many(model, points + t[:, None] * r, -r, pose)
        assert np.all(back_hit)
        np.testing.assert_allclose(back_points, points, atol=1e-5)
        back = reflect_many(-r, back_normals)
        np.testing.assert_allclose(back / np.linalg.norm(back, axis=-1, keepdims=True), -d, atol=1e-6)

    def test_ground_truth_view(self):
        scene = SceneSpec(spheres=(Sphere((0.0, 0.0, 300.0), 50.0, (0.8, 0.1, 0.1)),), ambient=0.05)
        intr = CameraIntrinsics.from_fov(33, 33, 40.0)
        view = render_ground_truth_view(scene, intr, look_at((0.0, 0.0, 0.0), (0.0, 0.0, 300.0)))
        assert view.shape == (33, 33, 3)
        np.testing.assert_allclose(view[16, 16], [0.85, 0.15, 0.15])
        np.testing.assert_array_equal(view[0, 0], 0.0)


class TestMakeDataset:
    def test_layout(self, tmp_path, model):
        config = _small_config(noise=0.1, seed=2)
        out = make_dataset(config, tmp_path / "data", model)
        for name in ("observations.json", "camera.json"):
            assert (out / name).is_file()
        for frame in range(3):
            image = load_image_16(out / "frames" / f"{frame:04d}.png")
            mask = load_mask(out / "masks" / f"{frame:04d}.png")
            assert image.shape == (120, 160, 3)
            assert mask.shape == (120, 160)
            assert mask.any()

    def test_noise_only_in_observations(self, tmp_path, model):
        out = make_dataset(_small_config(noise=0.1, seed=2), tmp_path / "data", model)
        noisy = json.loads((out / "observations.json").read_text())["frames"]
        gt = load_ground_truth(out)
        assert len(gt.poses) == 3
        exact = [o.r_img for o in gt.observations]
        ratio = np.array([f["r_img"] for f in noisy]) / exact
        assert np.all(np.abs(ratio - 1.0) <= 0.1 + 1e-12)
        assert np.any(ratio != 1.0)
        for f, o in zip(noisy, gt.observations):
            assert f["cx"] == o.cx and f["cy"] == o.cy

    def test_deterministic(self, tmp_path, model):
        a = make_dataset(_small_config(noise=0.05, seed=4), tmp_path / "a", model)
        b = make_dataset(_small_config(noise=0.05, seed=4), tmp_path / "b", model)
        assert (a / "observations.json").read_bytes() == (b / "observations.json").read_bytes()
        assert (a / "frames" / "0001.png").read_bytes() == (b / "frames" / "0001.png").read_bytes()

    def test_missing_ground_truth(self, tmp_path):
        (tmp_path / "capture").mkdir()
        with pytest.raises(MissingGroundTruthError):
            load_ground_truth(tmp_path / "capture")
