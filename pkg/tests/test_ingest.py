import json
import logging

import numpy as np
import pytest
from PIL import Image

from pycornea.geometry import CameraIntrinsics, CorneaModel
from pycornea.ingest import (
    CaptureManifest,
    CorneaDataset,
    EllipseFit,
    boundary_points,
    ellipse_mask,
    fit_ellipse,
    load_image_16,
    load_mask,
    observe_mask,
    save_image_16,
    save_mask,
    save_preview_8,
    to_observation,
)
from pycornea.synth import SynthConfig, TrajectorySpec, make_dataset
from pycornea.utils import ConfigError, EllipseFitError, ImageIOError, MissingGroundTruthError


def _ellipse_points(cx, cy, a, b, angle, n=100):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    c, s = np.cos(angle), np.sin(angle)
    x = cx + a * np.cos(t) * c - b * np.sin(t) * s
    y = cy + a * np.cos(t) * s + b * np.sin(t) * c
    return np.column_stack([x, y])


def _disk(shape, cx, cy, r):
    ys, xs = np.mgrid[0 : shape[0], 0 : shape[1]]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r


class TestFitEllipse:
    def test_exact_recovery(self):
        fit = fit_ellipse(_ellipse_points(120.3, 80.7, 40.0, 25.0, 0.6))
        assert fit.cx == pytest.approx(120.3, abs=1e-6)
        assert fit.cy == pytest.approx(80.7, abs=1e-6)
        assert fit.major == pytest.approx(40.0, abs=1e-6)
        assert fit.minor == pytest.approx(25.0, abs=1e-6)
        assert fit.angle == pytest.approx(0.6, abs=1e-6)
        assert fit.residual < 1e-6

    def test_small_rotated(self):
        fit = fit_ellipse(_ellipse_points(0.0, 0.0, 8.0, 4.0, np.radians(30.0)))
        assert (fit.major, fit.minor) == pytest.approx((8.0, 4.0), abs=1e-6)
        assert fit.angle == pytest.approx(np.radians(30.0), abs=1e-6)
        assert (fit.cx, fit.cy) == pytest.approx((0.0, 0.0), abs=1e-6)

    def test_angle_range(self):
        fit = fit_ellipse(_ellipse_points(0.0, 0.0, 30.0, 10.0, -0.4))
        assert 0.0 <= fit.angle < np.pi
        assert fit.angle == pytest.approx(np.pi - 0.4, abs=1e-6)

    def test_noisy_center(self, rng):
        points = _ellipse_points(200.0, 150.0, 18.0, 15.0, 1.1, n=200)
        points += rng.normal(scale=0.1, size=points.shape)
        fit = fit_ellipse(points)
        assert np.hypot(fit.cx - 200.0, fit.cy - 150.0) < 0.5
        assert fit.residual > 0.0

    def test_translation_equivariance(self, rng):
        points = _ellipse_points(60.0, 40.0, 20.0, 12.0, 0.9) + rng.normal(scale=0.2, size=(100, 2))
        fit = fit_ellipse(points)
        moved = fit_ellipse(points + [350.0, -120.0])
        assert (moved.cx, moved.cy) == pytest.approx((fit.cx + 350.0, fit.cy - 120.0), abs=1e-6)
        assert (moved.major, moved.minor, moved.angle) == pytest.approx((fit.major, fit.minor, fit.angle), abs=1e-6)
        assert moved.residual == pytest.approx(fit.residual, abs=1e-6)

    def test_rotation_equivariance(self, rng):
        points = _ellipse_points(60.0, 40.0, 20.0, 12.0, 0.9) + rng.normal(scale=0.2, size=(100, 2))
        theta = 0.7
        c, s = np.cos(theta), np.sin(theta)
        fit = fit_ellipse(points)
        turned = fit_ellipse(points @ np.array([[c, s], [-s, c]]))
        assert (turned.cx, turned.cy) == pytest.approx(
            (c * fit.cx - s * fit.cy, s * fit.cx + c * fit.cy), abs=1e-6
        )
        assert (turned.major, turned.minor) == pytest.approx((fit.major, fit.minor), abs=1e-6)
        assert np.mod(turned.angle - fit.angle - theta + np.pi / 2, np.pi) == pytest.approx(np.pi / 2, abs=1e-6)

    def test_circle(self):
        fit = fit_ellipse(_ellipse_points(10.0, 20.0, 5.0, 5.0, 0.0))
        assert fit.major == pytest.approx(fit.minor, abs=1e-6)
        assert fit.contains(np.array([10.0, 16.0]), np.array([20.0, 20.0])).tolist() == [True, False]

    def test_too_few_points(self):
        with pytest.raises(EllipseFitError):
            fit_ellipse(_ellipse_points(0.0, 0.0, 3.0, 2.0, 0.0, n=5))

    def test_coincident_points(self):
        with pytest.raises(EllipseFitError):
            fit_ellipse(np.ones((10, 2)))

    def test_dict_round_trip(self):
        fit = EllipseFit(1.0, 2.0, 3.0, 2.5, 0.1, 0.0)
        assert EllipseFit.from_dict(fit.to_dict()) == fit


class TestBoundaryPoints:
    def test_square(self):
        mask = np.zeros((8, 8), bool)
        mask[2:5, 3:6] = True
        points = boundary_points(mask)
        assert len(points) == 12
        xs, ys = points[:, 0], points[:, 1]
        assert set(xs[(ys >= 2) & (ys <= 4) & (xs < 3)]) == {2.5}
        assert set(xs[(ys >= 2) & (ys <= 4) & (xs > 5)]) == {5.5}
        assert set(ys[ys < 2]) == {1.5}
        assert set(ys[ys > 4]) == {4.5}

    def test_image_border(self):
        mask = np.zeros((4, 4), bool)
        mask[:2, :2] = True
        points = boundary_points(mask)
        assert points[:, 0].min() == -0.5
        assert points[:, 1].min() == -0.5

    def test_holes_filled(self):
        solid = _disk((60, 60), 30.0, 30.0, 20.0)
        holed = solid & ~_disk((60, 60), 33.0, 27.0, 3.0)
        np.testing.assert_array_equal(boundary_points(holed), boundary_points(solid))
        assert len(boundary_points(holed, fill_holes=False)) > len(boundary_points(solid))

    def test_disk_fit(self):
        fit = fit_ellipse(boundary_points(_disk((80, 90), 41.3, 38.6, 20.0)))
        assert fit.cx == pytest.approx(41.3, abs=0.1)
        assert fit.cy == pytest.approx(38.6, abs=0.1)
        assert fit.major == pytest.approx(20.0, abs=0.5)


class TestObservation:
    def test_to_observation_without_mask(self):
        fit = EllipseFit(10.0, 8.0, 4.0, 3.0, 0.0, 0.0)
        obs = to_observation(fit, 7, shape=(16, 20))
        assert obs.frame == 7
        assert obs.r_img == 4.0
        assert obs.minor == 3.0
        np.testing.assert_array_equal(obs.mask, ellipse_mask(fit, (16, 20)))
        assert to_observation(fit, 7).mask is None

    def test_mask_intersection(self):
        fit = EllipseFit(10.0, 8.0, 4.0, 3.0, 0.0, 0.0)
        iris = np.zeros((16, 20), bool)
        iris[:, :10] = True
        obs = to_observation(fit, 0, mask=iris)
        assert not np.any(obs.mask[:, 10:])
        assert obs.mask.sum() > 0

    def test_observe_mask(self):
        mask = _disk((64, 64), 30.0, 33.0, 12.0)
        fit, obs = observe_mask(mask, 2)
        assert obs.cx == pytest.approx(30.0, abs=0.1)
        assert obs.cy == pytest.approx(33.0, abs=0.1)
        assert obs.r_img == fit.major
        assert not np.any(obs.mask & ~mask)


class TestImageIO:
    def test_16_bit_channels(self, tmp_path):
        img = np.zeros((4, 5, 3))
        img[..., 0] = 1.0
        img[0, 0] = [0.25, 0.5, 0.75]
        save_image_16(tmp_path / "a.png", img)
        loaded = load_image_16(tmp_path / "a.png")
        assert loaded.shape == (4, 5, 3)
        np.testing.assert_allclose(loaded, img, atol=1.0 / 65535)

    def test_8_bit_upscaled_with_warning(self, tmp_path, caplog):
        Image.fromarray(np.full((3, 3, 3), 51, np.uint8)).save(tmp_path / "b.png")
        with caplog.at_level(logging.WARNING):
            loaded = load_image_16(tmp_path / "b.png")
        np.testing.assert_allclose(loaded, 0.2)
        assert "8-bit" in caplog.text

    def test_missing_image(self, tmp_path):
        with pytest.raises(ImageIOError):
            load_image_16(tmp_path / "missing.png")
        with pytest.raises(ImageIOError):
            load_mask(tmp_path / "missing.png")

    def test_mask(self, tmp_path):
        mask = _disk((10, 12), 5.0, 5.0, 3.0)
        save_mask(tmp_path / "m.png", mask)
        np.testing.assert_array_equal(load_mask(tmp_path / "m.png"), mask)
        assert set(np.unique(np.asarray(Image.open(tmp_path / "m.png")))) == {0, 255}

    def test_preview(self, tmp_path):
        save_preview_8(tmp_path / "sub" / "acc.png", np.array([[0.0, 0.5], [1.0, 2.0]]))
        assert np.asarray(Image.open(tmp_path / "sub" / "acc.png")).tolist() == [[0, 128], [255, 255]]


def _write_capture(root, n=2, ellipses=None, **extra):
    root.mkdir(parents=True, exist_ok=True)
    frames, masks = [], []
    for i in range(n):
        image = np.full((64, 64, 3), 0.3)
        save_image_16(root / f"f{i}.png", image)
        save_mask(root / f"m{i}.png", _disk((64, 64), 30.0 + i, 32.0, 12.0))
        frames.append(f"f{i}.png")
        masks.append(f"m{i}.png")
    manifest = {
        "camera": CameraIntrinsics(1600.0, 31.5, 31.5, 64, 64).to_dict(),
        "frames": frames,
        "masks": masks,
    }
    if ellipses is not None:
        manifest["ellipses"] = ellipses
    manifest.update(extra)
    (root / "manifest.json").write_text(json.dumps(manifest))
    return root / "manifest.json"


def _synthetic(tmp_path, noise=0.0):
    config = SynthConfig(
        camera=CameraIntrinsics(1600.0, 80.0, 60.0, 160, 120),
        trajectory=TrajectorySpec(
            centers=((-3.0, 0.0, 550.0), (3.0, 2.0, 560.0)),
            gazes=((0.0, 0.0, -1.0), (0.05, 0.0, -1.0)),
        ),
        noise=noise,
        seed=1,
    )
    return make_dataset(config, tmp_path / "synth")


class TestCaptureManifest:
    def test_fits_missing_ellipses(self, tmp_path):
        dataset = CorneaDataset.load(_write_capture(tmp_path / "cap"))
        assert len(dataset) == 2
        assert dataset.frame_ids == [0, 1]
        assert dataset.observations[1].cx == pytest.approx(31.0, abs=0.1)
        assert dataset.images[0].shape == (64, 64, 3)

    def test_given_ellipses(self, tmp_path):
        record = {"cx": 20.0, "cy": 21.0, "major": 9.0, "minor": 8.0, "angle": 0.0}
        path = _write_capture(tmp_path / "cap", ellipses=[record, None])
        dataset = CorneaDataset.load(path.parent)
        assert dataset.observations[0].cx == 20.0
        assert dataset.observations[0].r_img == 9.0
        assert dataset.observations[1].cx == pytest.approx(31.0, abs=0.1)

    def test_invalid_manifests(self, tmp_path):
        with pytest.raises(ConfigError):
            CaptureManifest.from_json(_write_capture(tmp_path / "a", unknown=1))
        with pytest.raises(ConfigError):
            CaptureManifest.from_json(_write_capture(tmp_path / "b", ellipses=[None]))
        path = _write_capture(tmp_path / "c")
        manifest = json.loads(path.read_text())
        manifest["masks"] = manifest["masks"][:1]
        path.write_text(json.dumps(manifest))
        with pytest.raises(ConfigError):
            CaptureManifest.from_json(path)
        del manifest["camera"]
        path.write_text(json.dumps(manifest))
        with pytest.raises(ConfigError):
            CaptureManifest.from_json(path)

    def test_mask_size_mismatch(self, tmp_path):
        path = _write_capture(tmp_path / "cap", n=1)
        save_mask(tmp_path / "cap" / "m0.png", np.ones((10, 10), bool))
        with pytest.raises(ImageIOError):
            CorneaDataset.load(path)

    def test_no_ground_truth(self, tmp_path):
        dataset = CorneaDataset.load(_write_capture(tmp_path / "cap"))
        with pytest.raises(MissingGroundTruthError):
            dataset.require_ground_truth()


class TestCorneaDataset:
    def test_missing_paths(self, tmp_path):
        with pytest.raises(ImageIOError):
            CorneaDataset.load(tmp_path / "nothing")
        (tmp_path / "empty").mkdir()
        with pytest.raises(ImageIOError):
            CorneaDataset.load(tmp_path / "empty")

    def test_synthetic_layout(self, tmp_path):
        dataset = CorneaDataset.load(_synthetic(tmp_path))
        assert len(dataset) == 2
        assert len(dataset.require_ground_truth()) == 2
        assert dataset.images[0].shape == (120, 160, 3)

    def test_training_data(self, tmp_path):
        model = CorneaModel()
        dataset = CorneaDataset.load(_synthetic(tmp_path, noise=0.05))
        data = dataset.training_data(model)
        assert data.n_frames == 2
        assert len(data.rays) == len(data.colors) > 0
        assert set(np.unique(data.rays.frames)) == {0, 1}
        first = data.rays.frames == 0
        pixels = data.rays.pixels[first]
        np.testing.assert_array_equal(data.colors[first], dataset.images[0][pixels[:, 0], pixels[:, 1]])
        assert np.all(dataset.observations[0].mask[pixels[:, 0], pixels[:, 1]])
        assert data.pose_source == "placed"
        assert dataset.training_data(model, ground_truth_poses=True).pose_source == "ground_truth"

    def test_ground_truth_poses(self, tmp_path, model):
        dataset = CorneaDataset.load(_synthetic(tmp_path))
        poses = dataset.poses(model, ground_truth=True)
        estimated = dataset.poses(model)
        for gt, est in zip(poses, estimated):
            assert np.linalg.norm(gt.translation - est.translation) < 1.0

    def test_write_and_reload(self, tmp_path):
        dataset = CorneaDataset.load(_write_capture(tmp_path / "cap"))
        out = dataset.write(tmp_path / "copy")
        again = CorneaDataset.load(out)
        assert again.frame_ids == dataset.frame_ids
        for a, b in zip(again.observations, dataset.observations):
            assert a.cx == b.cx and a.r_img == b.r_img
            np.testing.assert_array_equal(a.mask, b.mask)
        np.testing.assert_allclose(again.images[0], dataset.images[0], atol=1.0 / 65535)
        assert again.ground_truth_poses is None
