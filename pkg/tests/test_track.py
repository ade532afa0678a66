# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rkMPC.plants.kinematic import VehicleParams, VehicleState, angleDiff
from rkMPC.utils.Config import ReferenceConfig
from rkMPC.utils.Errors import ConfigError, InfeasibleSpeed, ParseError, TooFewPoints
from rkMPC.utils.Track import Track, buildReference, generateTrack, loadTrack, project


def _write(tmp_path, text, name="track.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_loadUnitSquare(tmp_path):
    path = _write(tmp_path, "# x_m,y_m,w_tr_right_m,w_tr_left_m\n0,0,1,1\n1,0,1,1\n1,1,1,1\n0,1,1,1\n")
    track = loadTrack(path)
    assert len(track) == 4
    assert track.closed
    assert_allclose(track.points, [[0, 0], [1, 0], [1, 1], [0, 1]])
    assert_allclose(track.widthLeft, np.ones(4))


def test_loadPlainHeaderAndScale(tmp_path):
    path = _write(tmp_path, "x,y\n0,0\n2,0\n2,2\n")
    track = loadTrack(path, scale=2.0)
    assert_allclose(track.points[-1], [4.0, 4.0])
    assert track.widthRight is None


def test_parseErrorCarriesLine(tmp_path):
    path = _write(tmp_path, "0,0\n1,0\nabc,1\n1,1\n")
    with pytest.raises(ParseError) as info:
        loadTrack(path)
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_inconsistentColumns(tmp_path):
    path = _write(tmp_path, "0,0\n1,0,1,1\n")
    with pytest.raises(ParseError) as info:
        loadTrack(path)
    assert info.value.line == 2


def test_duplicatesDroppedThenTooFew(tmp_path):
    path = _write(tmp_path, "0,0\n0,0\n1,0\n1,0\n")
    with pytest.raises(TooFewPoints):
        loadTrack(path)
    path = _write(tmp_path, "0,0\n0,0\n1,0\n1,1\n0,0\n", "dup.csv")
    assert len(loadTrack(path)) == 3


def test_builtinTracks():
    assert not generateTrack("line").closed
    assert loadTrack("builtin:circle").closed
    with pytest.raises(ParseError):
        generateTrack("figure8")


def test_straightReferenceSpacing(params):
    ref = buildReference(generateTrack("line"), ReferenceConfig(speed=1.5), params)
    step = np.hypot(np.diff(ref.x), np.diff(ref.y))
    assert_allclose(step, 1.5 * params.T, rtol=0.01)
    assert_allclose(ref.theta, 0.0, atol=1e-9)
    assert_allclose(ref.delta, 0.0, atol=1e-9)
    assert ref.window(len(ref) - 2, 3) is None


def test_circleReference(params):
    ref = buildReference(generateTrack("circle"), ReferenceConfig(speed=1.5), params)
    assert_allclose(ref.delta, math.atan(params.wheelbase / 2.0), atol=2e-3)
    step = np.hypot(np.diff(ref.x), np.diff(ref.y))
    assert_allclose(step, 1.5 * params.T, rtol=0.01)
    assert ref.lapLength() == pytest.approx(4.0 * math.pi, rel=1e-3)
    turn = np.sum(angleDiff(np.roll(ref.theta, -1), ref.theta))
    assert turn == pytest.approx(2.0 * math.pi, abs=1e-9)
    assert len(ref.window(len(ref) - 1, 4)) == 4


def test_curvatureProfile(params):
    refcfg = ReferenceConfig(profile="curvature", vCap=3.0, aLatMax=2.0)
    ref = buildReference(generateTrack("circle"), refcfg, params)
    assert_allclose(ref.v, 2.0, rtol=1e-2)
    with pytest.raises(InfeasibleSpeed):
        buildReference(
            generateTrack("circle"),
            ReferenceConfig(profile="curvature", aLatMax=0.01, vMinProfile=0.2),
            params,
        )


def test_speedIsClampedBeforeResampling(params):
    ref = buildReference(generateTrack("line"), ReferenceConfig(speed=6.0), params)
    step = np.hypot(np.diff(ref.x), np.diff(ref.y))
    assert_allclose(step, params.vMax * params.T, rtol=0.01)
    assert_allclose(ref.v, params.vMax)


def test_zeroSpeedIsRejected(params):
    with pytest.raises(ConfigError) as info:
        buildReference(generateTrack("line"), ReferenceConfig(speed=0.0, vMinProfile=0.0), params)
    assert info.value.key == "reference.speed"
    with pytest.raises(InfeasibleSpeed):
        buildReference(generateTrack("line"), ReferenceConfig(speed=0.0), params)


def test_ovalCurvatureProfile(params):
    refcfg = ReferenceConfig(profile="curvature", vCap=3.0, aLatMax=2.0)
    ref = buildReference(generateTrack("oval"), refcfg, params)
    arc = ref.x > 7.5
    straight = (np.abs(ref.x - 3.0) < 1.5) & (np.abs(ref.y) > 1.9)
    assert arc.any() and straight.any()
    assert_allclose(ref.v[arc], 2.0, rtol=2e-2)
    assert_allclose(ref.v[straight], 3.0)
    assert_allclose(np.abs(ref.delta[arc]), math.atan(params.wheelbase / 2.0), atol=5e-3)


def test_steeringReferenceIsClamped():
    params = VehicleParams(deltaMin=-0.1, deltaMax=0.1)
    ref = buildReference(generateTrack("circle"), ReferenceConfig(), params)
    assert np.all(np.abs(ref.delta) <= 0.1)


def test_projectSigns(params):
    ref = buildReference(generateTrack("line"), ReferenceConfig(), params)
    left = project(VehicleState(5.0, 0.3, 0.1), ref)
    right = project(VehicleState(5.0, -0.3, -0.1), ref)
    assert left.lateral == pytest.approx(0.3, abs=1e-9)
    assert right.lateral == pytest.approx(-0.3, abs=1e-9)
    assert left.heading == pytest.approx(0.1, abs=1e-9)
    assert ref.x[left.index] <= 5.0 <= ref.x[left.index + 1]

    circle = buildReference(generateTrack("circle"), ReferenceConfig(), params)
    outside = project(VehicleState(0.0, 2.5, math.pi), circle)
    assert outside.lateral == pytest.approx(-0.5, abs=2e-3)
    assert outside.heading == pytest.approx(0.0, abs=2e-2)


def test_projectMatchesDenseSampling(params):
    ref = buildReference(generateTrack("circuit"), ReferenceConfig(), params)
    pts = np.column_stack([ref.x, ref.y])
    seg = np.roll(pts, -1, axis=0) - pts
    t = np.linspace(0.0, 1.0, 201)
    dense = (pts[:, None, :] + t[None, :, None] * seg[:, None, :]).reshape(-1, 2)
    rng = np.random.default_rng(11)
    for _ in range(50):
        i = rng.integers(len(ref))
        p = pts[i] + rng.normal(0.0, 0.4, 2)
        errs = project(VehicleState(p[0], p[1], 0.0), ref)
        brute = np.min(np.hypot(*(dense - p).T))
        assert abs(errs.lateral) == pytest.approx(brute, abs=5e-3 * np.max(np.hypot(*seg.T)))


def test_trackLength():
    assert len(Track(np.zeros((5, 2)))) == 5
