import csv
from dataclasses import replace

import numpy as np
import pytest

from pycornea.geometry import ReflectedRays, RigidPose, so3_exp
from pycornea.training import (
    AdamMoments,
    Batch,
    Draws,
    PoseDelta,
    TrainConfig,
    TrainingData,
    TrainState,
    adam_update,
    apply_pose,
    apply_poses,
    compose,
    compose_backward,
    draw,
    fit,
    load_checkpoint,
    objective,
    pose_errors,
    predict,
    radial_loss,
    radial_terms,
    recon_loss,
    recon_loss_backward,
    rotate_disks,
    save_checkpoint,
    train_step,
    training_psnr,
)
from pycornea.fields import TextureField
from pycornea.utils import CheckpointError, ConfigError, TrainingError


def _config(**kwargs) -> TrainConfig:
    base = dict(
        bbox_lo=(-20.0, -20.0, 20.0),
        bbox_hi=(20.0, 20.0, 100.0),
        scene_resolution=(4, 4, 4),
        texture_resolution=4,
        density_init=-5.0,
        near=30.0,
        far=90.0,
        n_samples=8,
        steps=6,
        batch_size=16,
        pose_warmup=0.0,
        seed=3,
        log_every=0,
    )
    base.update(kwargs)
    return TrainConfig(**base)


def _data(rng, n=24, frames=2) -> TrainingData:
    pivots = np.column_stack([rng.uniform(-1, 1, frames), rng.uniform(-1, 1, frames), np.zeros(frames)])
    rows = np.arange(n) % frames
    origins = pivots[rows] + rng.uniform(-0.5, 0.5, (n, 3))
    d = np.column_stack([rng.uniform(-0.1, 0.1, n), rng.uniform(-0.1, 0.1, n), np.ones(n)])
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    normals = rng.normal(size=(n, 3))
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
    radius = 0.8 * np.sqrt(rng.uniform(0, 1, n))
    phi = rng.uniform(0, 2 * np.pi, n)
    disks = np.column_stack([radius * np.sin(phi), radius * np.cos(phi)])
    rays = ReflectedRays(origins, d, normals, np.zeros((n, 2), np.int64), disks, rows.astype(np.int64))
    colors = rng.uniform(0.2, 0.8, (n, 3))
    poses = [RigidPose(np.eye(3), p) for p in pivots]
    return TrainingData(rays, colors, poses, list(range(10, 10 + frames)))


def _perturbed_state(seed: int, **config):
    rng = np.random.default_rng(seed)
    data = _data(rng)
    state = TrainState.initialize(_config(**config), data)
    state.scene.params = rng.normal(scale=0.5, size=state.scene.params.shape)
    state.scene.params[..., 0] -= 5.0
    state.scene.grad = np.zeros_like(state.scene.params)
    state.texture.params = rng.normal(scale=0.5, size=state.texture.params.shape)
    state.texture.grad = np.zeros_like(state.texture.params)
    state.twists = rng.normal(scale=1e-2, size=state.twists.shape)
    batch = Batch(data.rays, data.colors)
    return state, batch, draw(state, len(batch.rays))


def _fd(state, batch, draws, array, h=1e-6):
    out = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        array[idx] += h
        plus = objective(state, batch, draws, with_pose_grad=False).loss
        array[idx] -= 2 * h
        minus = objective(state, batch, draws, with_pose_grad=False).loss
        array[idx] += h
        out[idx] = (plus - minus) / (2 * h)
    return out


def _rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-10)


class TestObjectiveGradients:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences(self, seed):
        composition = "alpha" if seed % 2 else "additive"
        state, batch, draws = _perturbed_state(seed, composition=composition)
        result = objective(state, batch, draws)
        g_scene = state.scene.grad.copy()
        g_texture = state.texture.grad.copy()
        g_twists = result.grad_twists.copy()
        assert result.radial > 0.0

        assert _rel_err(g_scene, _fd(state, batch, draws, state.scene.params)) < 1e-4
        assert _rel_err(g_texture, _fd(state, batch, draws, state.texture.params)) < 1e-4
        assert _rel_err(g_twists, _fd(state, batch, draws, state.twists)) < 1e-4

    def test_deterministic_for_fixed_draws(self):
        state, batch, draws = _perturbed_state(0)
        a = objective(state, batch, draws)
        b = objective(state, batch, draws)
        assert a.loss == b.loss
        np.testing.assert_array_equal(a.grad_twists, b.grad_twists)

    def test_zero_radial_weight(self):
        state, batch, draws = _perturbed_state(1, lambda_radial=0.0)
        result = objective(state, batch, draws)
        assert result.radial == 0.0
        assert result.loss == result.recon


class TestCompose:
    def test_additive(self):
        out, _ = compose(np.array([[0.2, 0.7, 0.0]]), np.array([0.5]), np.array([[0.3, 0.6, 0.1]]))
        np.testing.assert_allclose(out, [[0.5, 1.0, 0.1]])

    def test_additive_saturation_blocks_gradient(self):
        _, tape = compose(np.array([[0.2, 0.7, 0.0]]), np.array([0.5]), np.array([[0.3, 0.6, 0.1]]))
        g_scene, g_acc, g_tex = compose_backward(tape, np.ones((1, 3)))
        np.testing.assert_array_equal(g_scene, [[1.0, 0.0, 1.0]])
        np.testing.assert_array_equal(g_tex, g_scene)
        np.testing.assert_array_equal(g_acc, [0.0])

    def test_alpha(self):
        scene = np.array([[0.3, 0.3, 0.3], [0.0, 0.0, 0.0]])
        tex = np.array([[0.9, 0.9, 0.9], [0.4, 0.5, 0.6]])
        out, tape = compose(scene, np.array([1.0, 0.0]), tex, mode="alpha")
        np.testing.assert_allclose(out, [[0.3, 0.3, 0.3], [0.4, 0.5, 0.6]])
        _, g_acc, g_tex = compose_backward(tape, np.ones((2, 3)))
        np.testing.assert_allclose(g_tex[0], 0.0)
        np.testing.assert_allclose(g_acc, [-2.7, -1.5])

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            compose(np.zeros((1, 3)), np.zeros(1), np.zeros((1, 3)), mode="screen")


class TestReconLoss:
    def test_identical(self):
        x = np.full((4, 3), 0.3)
        assert recon_loss(x, x) == 0.0

    def test_value_and_gradient(self):
        p = np.array([[0.5, 0.5, 0.5]])
        o = np.array([[0.2, 0.5, 0.8]])
        assert recon_loss(p, o) == pytest.approx(0.06)
        np.testing.assert_allclose(recon_loss_backward(p, o), [[0.2, 0.0, -0.2]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            recon_loss(np.zeros((2, 3)), np.zeros((3, 3)))

    def test_empty(self):
        with pytest.raises(ValueError):
            recon_loss(np.zeros((0, 3)), np.zeros((0, 3)))


class TestRadialLoss:
    def test_uniform_texture(self):
        field = TextureField(8, np.full((8, 8, 3), 0.4))
        assert radial_loss(field, [0.3, 0.2], angle=1.0) == pytest.approx(0.0, abs=1e-24)

    def test_zero_angle(self, rng):
        field = TextureField(8, rng.normal(size=(8, 8, 3)))
        assert radial_loss(field, [0.3, -0.4], angle=0.0) == 0.0

    def test_radially_symmetric_texture(self):
        yy, xx = np.meshgrid(np.linspace(-1, 1, 33), np.linspace(-1, 1, 33), indexing="ij")
        r = np.hypot(yy, xx)
        field = TextureField(33, np.repeat(r[..., None], 3, axis=-1))
        loss = radial_loss(field, [0.0, 0.5], angle=np.pi / 2)
        assert loss < 1e-4

    def test_angular_texture_penalized(self):
        yy, xx = np.meshgrid(np.linspace(-1, 1, 9), np.linspace(-1, 1, 9), indexing="ij")
        field = TextureField(9, np.repeat((4 * xx)[..., None], 3, axis=-1))
        assert radial_loss(field, [0.0, 0.5], angle=np.pi) > 0.1

    def test_weight_zero(self, rng):
        field = TextureField(8, rng.normal(size=(8, 8, 3)))
        loss, tape = radial_terms(field, rng.uniform(-0.5, 0.5, (5, 2)), np.ones(5), 0.0)
        assert loss == 0.0 and tape is None

    def test_rotation_stays_in_disk(self, rng):
        phi = rng.uniform(0, 2 * np.pi, 1000)
        disks = np.column_stack([np.sin(phi), np.cos(phi)])
        rotated = rotate_disks(disks, rng.uniform(0, 2 * np.pi, 1000))
        assert np.all(np.hypot(rotated[:, 0], rotated[:, 1]) <= 1.0)

    def test_angle_drawn_from_rng(self, rng):
        field = TextureField(8, rng.normal(size=(8, 8, 3)))
        a = radial_loss(field, [0.2, 0.2], rng=np.random.default_rng(5))
        b = radial_loss(field, [0.2, 0.2], rng=np.random.default_rng(5))
        assert a == b


class TestPose:
    def test_identity(self, rng):
        data = _data(rng)
        out, _ = apply_poses(np.zeros((2, 6)), data.pivots, data.rays)
        np.testing.assert_allclose(out.origins, data.rays.origins)
        np.testing.assert_allclose(out.directions, data.rays.directions)

    def test_pivot_is_fixed(self):
        delta = PoseDelta(np.array([0.1, 0.2, -0.3, 0.0, 0.0, 0.0]), np.array([1.0, 2.0, 300.0]))
        np.testing.assert_allclose(delta.as_pose().apply(delta.pivot), delta.pivot)

    def test_single_ray_matches_bundle(self, rng):
        data = _data(rng, frames=1)
        delta = PoseDelta(rng.normal(scale=0.1, size=6), data.pivots[0])
        bundle = apply_pose(delta, data.rays)
        single = apply_pose(delta, data.rays[3])
        np.testing.assert_allclose(single.origin, bundle.origins[3], atol=1e-12)
        np.testing.assert_allclose(single.direction, bundle.directions[3], atol=1e-12)
        np.testing.assert_allclose(single.origin, delta.as_pose().apply(data.rays.origins[3]))
        assert np.linalg.norm(single.direction) == pytest.approx(1.0, abs=1e-12)

    def test_preserves_angles(self, rng):
        data = _data(rng, frames=1)
        delta = PoseDelta(rng.normal(scale=0.3, size=6), data.pivots[0])
        out = apply_pose(delta, data.rays)
        before = np.sum(data.rays.directions * data.rays.normals, axis=-1)
        after = np.sum(out.directions * out.normals, axis=-1)
        np.testing.assert_allclose(after, before, atol=1e-12)
        np.testing.assert_allclose(
            out.directions @ out.directions.T, data.rays.directions @ data.rays.directions.T, atol=1e-12
        )

    def test_compose_pose(self):
        pose = RigidPose(so3_exp([0.0, 0.2, 0.0]), np.array([5.0, 0.0, 500.0]))
        delta = PoseDelta(np.array([0.0, 0.0, 0.1, 1.0, -2.0, 3.0]), pose.translation)
        composed = delta.compose(pose)
        np.testing.assert_allclose(composed.translation, pose.translation + [1.0, -2.0, 3.0])
        np.testing.assert_allclose(composed.rotation, so3_exp([0, 0, 0.1]) @ pose.rotation)


class TestAdam:
    def test_first_step_is_lr_times_sign(self):
        params = np.array([1.0, -1.0, 0.5])
        grad = np.array([0.3, -2.0, 0.0])
        moments = AdamMoments.zeros_like(params)
        adam_update(params, grad, moments, lr=0.1, eps=1e-12)
        np.testing.assert_allclose(params, [0.9, -0.9, 0.5], atol=1e-9)
        assert moments.count == 1


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.lr_pose == 1e-3 and cfg.lambda_radial == 0.1 and cfg.steps == 2000
        assert cfg.warmup_steps == 200

    def test_ablation(self):
        cfg = TrainConfig().with_ablation(no_texture=True, no_pose_opt=True, no_radial=True)
        assert not cfg.texture_decomposition
        assert cfg.lr_pose == 0.0 and not cfg.optimize_pose
        assert cfg.lambda_radial == 0.0

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"learning_rate": 1.0})

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"composition": "screen"})
        with pytest.raises(ValueError):
            TrainConfig(near=10.0, far=5.0)

    def test_round_trip(self):
        cfg = TrainConfig(steps=12, scene_resolution=(5, 6, 7))
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg


class TestTrainStep:
    def test_zero_learning_rates_leave_state_unchanged(self, rng):
        data = _data(rng)
        state = TrainState.initialize(_config(lr_scene=0.0, lr_texture=0.0, lr_pose=0.0), data)
        scene, texture = state.scene.params.copy(), state.texture.params.copy()
        state, report = train_step(state, Batch(data.rays, data.colors))
        np.testing.assert_array_equal(state.scene.params, scene)
        np.testing.assert_array_equal(state.texture.params, texture)
        np.testing.assert_array_equal(state.twists, 0.0)
        assert all(m.count == 0 for m in state.moments.values())
        assert not report.pose_active

    def test_pose_frozen_during_warmup(self, rng):
        data = _data(rng)
        state = TrainState.initialize(_config(steps=10, pose_warmup=0.5), data)
        batch = Batch(data.rays, data.colors)
        for _ in range(5):
            state, report = train_step(state, batch)
            assert not report.pose_active
        np.testing.assert_array_equal(state.twists, 0.0)
        assert state.moments["pose"].count == 0
        state, report = train_step(state, batch)
        assert report.pose_active
        assert np.any(state.twists != 0.0)

    def test_no_texture_stays_black(self, rng):
        data = _data(rng)
        state = fit(data, _config().with_ablation(no_texture=True))
        np.testing.assert_array_equal(state.texture.params, 0.0)
        np.testing.assert_array_equal(state.texture.colors(), 0.0)
        assert state.moments["texture"].count == 0

    def test_non_finite_loss(self, rng):
        data = _data(rng)
        state = TrainState.initialize(_config(), data)
        state.scene.params[...] = np.nan
        with pytest.raises(TrainingError) as info:
            train_step(state, Batch(data.rays, data.colors))
        assert info.value.diagnostics["step"] == 0
        assert not info.value.diagnostics["scene_params_finite"]

    def test_empty_batch(self, rng):
        data = _data(rng)
        state = TrainState.initialize(_config(), data)
        with pytest.raises(ValueError):
            train_step(state, Batch(data.rays.subset(slice(0, 0)), np.zeros((0, 3))))

    def test_recon_decreases_on_one_target(self, rng):
        data = _data(rng, n=2)
        one = data.rays.subset([0])
        cfg = _config(lambda_radial=0.0, stratified=False, density_init=-10.0).with_ablation(
            no_pose_opt=True
        )
        state = TrainState.initialize(cfg, data)
        batch = Batch(one, np.array([[0.95, 0.05, 0.95]]))
        losses = []
        for _ in range(100):
            state, report = train_step(state, batch)
            losses.append(report.recon)
        assert np.all(np.diff(losses) < 0.0)


class TestFit:
    def test_refuses_single_frame(self, rng):
        with pytest.raises(ValueError):
            fit(_data(rng, frames=1), _config())

    def test_loss_log(self, rng, tmp_path):
        log = tmp_path / "loss.csv"
        fit(_data(rng), _config(lambda_radial=0.0), loss_log=log)
        with open(log, newline="") as f:
            rows = list(csv.DictReader(f))
        assert [int(r["step"]) for r in rows] == list(range(6))
        assert all(float(r["radial"]) == 0.0 for r in rows)

    def test_predict_and_psnr(self, rng):
        data = _data(rng)
        state = fit(data, _config())
        pred = predict(state, data.rays, chunk=5)
        assert pred.shape == (len(data.rays), 3)
        assert np.all((pred >= 0) & (pred <= 1))
        assert training_psnr(state, data) > 0.0

    def test_callback(self, rng):
        steps = []
        fit(_data(rng), _config(), callback=lambda s, r: steps.append(r.step))
        assert steps == list(range(6))


class TestCheckpoint:
    def test_bit_identical_runs(self, tmp_path):
        paths = []
        for name in ("a", "b"):
            state = fit(_data(np.random.default_rng(7)), _config())
            path = tmp_path / f"{name}.npz"
            save_checkpoint(state, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_resume_matches_uninterrupted(self, tmp_path):
        data = _data(np.random.default_rng(8))
        full = fit(data, _config(steps=6))
        half = fit(data, _config(steps=3))
        save_checkpoint(half, tmp_path / "half.npz")
        resumed = replace(load_checkpoint(tmp_path / "half.npz"), config=_config(steps=6))
        resumed = fit(data, _config(steps=6), state=resumed)
        np.testing.assert_array_equal(resumed.scene.params, full.scene.params)
        np.testing.assert_array_equal(resumed.texture.params, full.texture.params)
        np.testing.assert_array_equal(resumed.twists, full.twists)

    def test_round_trip(self, tmp_path, rng):
        state = fit(_data(rng), _config().with_ablation(no_texture=True))
        save_checkpoint(state, tmp_path / "ck.npz")
        loaded = load_checkpoint(tmp_path / "ck.npz")
        assert loaded.config == state.config
        assert loaded.step == state.step
        assert loaded.frame_ids == [10, 11]
        assert not loaded.texture.enabled
        assert loaded.pose_source == "placed"
        np.testing.assert_array_equal(loaded.scene.params, state.scene.params)
        with np.load(tmp_path / "ck.npz") as npz:
            assert "twists" in npz.files

    def test_corrupt(self, tmp_path):
        path = tmp_path / "bad.npz"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "missing.npz")


def _placed(rng, offsets=(0.0, 2.0)):
    data = _data(rng, frames=len(offsets))
    poses = [RigidPose(np.eye(3), np.array([x, 0.0, 500.0])) for x in offsets]
    return TrainingData(data.rays, data.colors, poses, data.frame_ids), poses


class TestPoseErrors:
    def test_offset_ground_truth(self, rng, model, camera):
        data, base = _placed(rng)
        state = TrainState.initialize(_config(), data)
        truth = [RigidPose(p.rotation, p.translation + [1.0, 0.0, 0.0]) for p in base]
        errors = pose_errors(state, base, truth, model, camera)
        assert errors["initial_center_mm"] == pytest.approx(1.0)
        assert errors["refined_center_mm"] == pytest.approx(1.0)
        assert errors["initial_reprojection_px"] > 0.0

    def test_correction_composes_on_base(self, rng, model, camera):
        data, base = _placed(rng)
        state = TrainState.initialize(_config(), data)
        state.twists[:, 3] = 1.0
        truth = [RigidPose(p.rotation, p.translation + [1.0, 0.0, 0.0]) for p in base]
        errors = pose_errors(state, base, truth, model, camera)
        assert errors["refined_center_mm"] == pytest.approx(0.0, abs=1e-9)
        assert errors["refined_reprojection_px"] == pytest.approx(0.0, abs=1e-6)

    def test_rejects_other_base(self, rng, model, camera):
        data, base = _placed(rng)
        state = TrainState.initialize(_config(), data)
        shifted = [RigidPose(p.rotation, p.translation + [0.0, 0.0, 5.0]) for p in base]
        with pytest.raises(ValueError):
            pose_errors(state, shifted, base, model, camera)
        with pytest.raises(ValueError):
            pose_errors(state, base[:1], base[:1], model, camera)


class TestPoseSource:
    def test_recorded_in_checkpoint(self, rng, tmp_path):
        data = _data(rng)
        data = TrainingData(data.rays, data.colors, data.poses, data.frame_ids, pose_source="ground_truth")
        state = TrainState.initialize(_config(), data)
        assert state.pose_source == "ground_truth"
        save_checkpoint(state, tmp_path / "ck.npz")
        assert load_checkpoint(tmp_path / "ck.npz").pose_source == "ground_truth"

    def test_unknown_source(self, rng):
        data = _data(rng)
        with pytest.raises(ValueError):
            TrainingData(data.rays, data.colors, data.poses, data.frame_ids, pose_source="guessed")
