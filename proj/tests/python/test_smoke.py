"""Smoke tests for the photonpano python bindings.

The extension module location comes from PHOTONPANO_MODULE_DIR (set by ctest
to the build directory); the pure-python package wrapper is on PYTHONPATH.
"""

import os
import sys

import numpy as np
import pytest

_module_dir = os.environ.get("PHOTONPANO_MODULE_DIR")
if _module_dir:
    sys.path.insert(0, _module_dir)

pp = pytest.importorskip("_core", reason="photonpano extension module not built")


def checker(n, cell=4):
    y, x = np.mgrid[0:n, 0:n]
    return np.where(((x // cell + y // cell) % 2) == 0, 1.0, 0.2)


def test_cube_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    frames = (rng.random((20, 12, 16)) < 0.4).astype(np.uint8)
    cube = pp.PhotonCube.from_frames(frames, tau=1e-5)
    assert cube.width == 16 and cube.height == 12 and cube.num_frames == 20
    np.testing.assert_array_equal(cube.frame(3), frames[3].astype(float))

    path = tmp_path / "t.pcube"
    cube.save(path)
    back = pp.PhotonCube.load(path)
    assert back.tau == pytest.approx(1e-5)
    np.testing.assert_array_equal(back.frame(19), frames[19].astype(float))


def test_mle_flux_identity():
    phi_tau = 0.7
    mean = np.full((4, 4), 1.0 - np.exp(-phi_tau))
    flux = pp.mle_flux(mean, tau=1.0, n=100)
    np.testing.assert_allclose(flux.values, phi_tau, rtol=1e-12)
    assert flux.weights[0, 0] == 100.0


def test_warp_algebra():
    h = pp.from_params([0, 0, 0, 0, 3.0, -2.0, 0, 0])
    assert h[0, 2] == 3.0
    p = pp.to_params(pp.compose(h, pp.invert(h)))
    np.testing.assert_allclose(p, np.zeros(8), atol=1e-12)
    scaled = pp.scale_warp(h, 2.0)
    assert scaled[0, 2] == pytest.approx(6.0)


def test_apply_warp_identity():
    img = checker(16)
    values, weights = pp.apply_warp(img, np.eye(3), 16, 16)
    np.testing.assert_allclose(values, img, atol=1e-12)
    np.testing.assert_allclose(weights, 1.0)


def test_trajectory_eval_and_csv(tmp_path):
    traj = pp.Trajectory.fit([(0.0, [0] * 8), (100.0, [0, 0, 0, 0, 10.0, 0, 0, 0])])
    assert traj.eval(50.0)[4] == pytest.approx(5.0)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    back = pp.Trajectory.from_csv(path)
    assert back.eval(25.0)[4] == pytest.approx(2.5)


def test_register_recovers_translation():
    rng = np.random.default_rng(3)
    fixed_img = rng.random((96, 96))
    # smooth it a little so gradients are informative
    k = np.ones(5) / 5.0
    fixed_img = np.apply_along_axis(lambda r: np.convolve(r, k, "same"), 0, fixed_img)
    fixed_img = np.apply_along_axis(lambda r: np.convolve(r, k, "same"), 1, fixed_img)

    shift = pp.from_params([0, 0, 0, 0, 2.0, -1.0, 0, 0])
    values, weights = pp.apply_warp(fixed_img, shift, 96, 96)
    moving = pp.LinearImage(np.where(weights > 0, values / np.maximum(weights, 1e-12), 0), weights)
    fixed = pp.LinearImage(fixed_img, np.ones_like(fixed_img))

    res = pp.register_images(moving, fixed)
    assert res["converged"]
    assert res["warp"][4] == pytest.approx(2.0, abs=0.1)
    assert res["warp"][5] == pytest.approx(-1.0, abs=0.1)


def test_simulate_and_reconstruct_end_to_end():
    rng = np.random.default_rng(11)
    yy, xx = np.mgrid[0:80, 0:140]
    scene = 0.2 + 0.4 * (np.sin(xx / 9.0) * np.cos(yy / 7.0) * 0.5 + 0.5)
    scene += 0.3 * rng.random((80, 140))

    cfg = pp.SimConfig()
    cfg.fov_width = 48
    cfg.fov_height = 48
    cfg.num_frames = 3000
    cfg.tau = 1.0
    cfg.flux_at_white = 0.5
    cfg.seed = 21
    cfg.set_control_points(
        "linear_pan",
        [(0.0, [0, 0, 0, 0, 4.0, 4.0, 0, 0]), (2999.0, [0, 0, 0, 0, 60.0, 4.0, 0, 0])],
    )
    cube, truth = pp.simulate_sequence(cfg, scene)
    assert cube.num_frames == 3000

    pcfg = pp.PipelineConfig()
    pcfg.group_size = 500
    pcfg.max_iterations = 3
    traj, diag = pp.run_pipeline(cube, pcfg)
    assert diag["iterations"]
    rmse = pp.trajectory_corner_rmse(traj, truth, 48, 48)
    assert rmse < 1.0

    canvas = pp.assemble(cube, traj)
    flux = pp.resolve_flux(canvas, cube.tau)
    assert flux.valid_fraction() > 0.5
    image, validity = pp.tonemap(flux, pp.default_exposure(flux))
    assert image.shape == (canvas.height, canvas.width)
    assert validity.max() == 255


def test_deterministic_across_workers():
    scene = np.full((40, 40), 0.6)
    cfg = pp.SimConfig()
    cfg.fov_width = 16
    cfg.fov_height = 16
    cfg.num_frames = 64
    cfg.tau = 1.0
    cfg.flux_at_white = 0.4
    cfg.seed = 5
    cfg.set_control_points("linear_pan", [(0.0, [0, 0, 0, 0, 8.0, 8.0, 0, 0]),
                                          (63.0, [0, 0, 0, 0, 10.0, 8.0, 0, 0])])
    pp.set_workers(1)
    cube1, _ = pp.simulate_sequence(cfg, scene)
    pp.set_workers(6)
    cube6, _ = pp.simulate_sequence(cfg, scene)
    pp.set_workers(0)
    for f in (0, 31, 63):
        np.testing.assert_array_equal(cube1.frame(f), cube6.frame(f))


def test_error_mapping():
    with pytest.raises(pp.PhotonPanoError):
        pp.PhotonCube(0, 4, 1, 1.0)
    with pytest.raises(pp.PhotonPanoError):
        pp.to_params(np.array([[1.0, 0, 0], [0, 1, 0], [0, 0, 0]]))
