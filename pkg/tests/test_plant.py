# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rkMPC.plants.dynamic import PlantConfig, PlantState, stepPlant
from rkMPC.plants.kinematic import ControlInput, VehicleParams, VehicleState, stepKinematic


def test_restIsFixedPoint(params):
    s = PlantState(0.5, -0.2, 0.3)
    nxt = stepPlant(s, ControlInput(0.0, 0.0), PlantConfig(), params)
    assert_allclose(nxt.asArray(), s.asArray(), atol=1e-12)


def test_kinematicLimit():
    """
    Infinite cornering stiffness and zero lags reproduce the nominal model
    """
    cfg = PlantConfig(
        corneringFront=math.inf, corneringRear=math.inf, steerLag=0.0, speedLag=0.0
    )
    params = VehicleParams(wheelbase=cfg.lf + cfg.lr)
    assert cfg.validate() == ""
    rng = np.random.default_rng(5)
    ps = PlantState(0.0, 0.0, 0.0, vx=1.0)
    ks = VehicleState(0.0, 0.0, 0.0)
    for _ in range(100):
        u = ControlInput(rng.uniform(0.5, 3.0), rng.uniform(-0.4, 0.4))
        ps = stepPlant(ps, u, cfg, params)
        ks = stepKinematic(ks, u, params)
        assert_allclose([ps.x, ps.y], [ks.x, ks.y], atol=1e-3)
        assert abs(math.remainder(ps.theta - ks.theta, 2 * math.pi)) < 1e-3


def test_steadyCorneringUndersteers(params):
    cfg = PlantConfig()
    u = ControlInput(1.5, 0.1)
    s = PlantState(0.0, 0.0, 0.0, vx=1.5)
    rates = []
    for _ in range(200):
        s = stepPlant(s, u, cfg, params)
        rates.append(s.yawRate)
    L = cfg.lf + cfg.lr
    K = cfg.mass / L * (cfg.lr / cfg.corneringFront - cfg.lf / cfg.corneringRear)
    linear = u.v * u.delta / (L + K * u.v ** 2)
    kinematic = u.v * math.tan(u.delta) / L
    assert abs(rates[-1] - rates[-2]) < 1e-6
    assert rates[-1] == pytest.approx(linear, rel=0.05)
    assert rates[-1] < kinematic


def test_actuatorLag(params):
    cfg = PlantConfig()
    s = stepPlant(PlantState(0.0, 0.0, 0.0), ControlInput(2.0, 0.3), cfg, params)
    assert 0.0 < s.vx < 2.0
    assert 0.0 < s.steer < 0.3
    expected = 2.0 * (1.0 - math.exp(-params.T / cfg.speedLag))
    assert s.vx == pytest.approx(expected, rel=1e-3)


def test_lowSpeedBlendIsFinite(params):
    cfg = PlantConfig()
    s = PlantState(0.0, 0.0, 0.0, vx=0.01)
    for _ in range(100):
        s = stepPlant(s, ControlInput(0.05, 0.4), cfg, params)
    assert np.all(np.isfinite(s.asArray()))
    assert s.yawRate >= 0.0


def test_configValidate():
    assert PlantConfig().validate() == ""
    assert "blend" in PlantConfig(blendSpeedLow=1.0, blendSpeedHigh=0.5).validate()
    assert "lags" in PlantConfig(steerLag=-0.1).validate()
