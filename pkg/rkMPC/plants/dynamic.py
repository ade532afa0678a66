# -*- coding: utf-8 -*-
"""
Mismatched truth plant: dynamic bicycle with linear tires, first-order steering and
speed actuator lags, and a continuous blend into the kinematic model at low speed
where the slip-angle tire model is singular.

The pose is reported at the rear axle so that the infinite-stiffness, zero-lag
limit reproduces the nominal kinematic model exactly.

Version: 1.0.0  (October 2026)
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from rkMPC.plants.kinematic import VehicleState, wrapAngle


@dataclass(frozen=True)
class PlantConfig:
    """
    Parameters of the truth plant. Default geometry and tire values approximate a
      1:10 scale racing car.

    Attributes:
        name: plant component, 'dynamic' or 'kinematic'
        mass: kg
        inertia: yaw moment of inertia, kg m^2
        lf, lr: CoG to front/rear axle, m
        corneringFront, corneringRear: linear cornering stiffness, N/rad; 'inf'
          on both gives the kinematic limit
        steerLag: steering actuator time constant, s; 0 = instantaneous
        speedLag: drivetrain time constant, s; 0 = instantaneous
        blendSpeedLow, blendSpeedHigh: below Low the plant is kinematic, above
          High fully dynamic, linear blend in between
        substeps: RK4 substeps per sampling period
        noisePose: std of additive pose noise per period (m, m, rad)
        noiseYawRate: std of additive yaw-rate noise per period, rad/s
        initialLateral: std of the initial lateral offset, m
        initialHeading: std of the initial heading offset, rad
    """

    name: str = "dynamic"
    mass: float = 3.74
    inertia: float = 0.04712
    lf: float = 0.15
    lr: float = 0.18
    corneringFront: float = 45.0
    corneringRear: float = 55.0
    steerLag: float = 0.08
    speedLag: float = 0.15
    blendSpeedLow: float = 0.3
    blendSpeedHigh: float = 0.8
    substeps: int = 5
    noisePose: float = 0.0
    noiseYawRate: float = 0.0
    initialLateral: float = 0.0
    initialHeading: float = 0.0

    def validate(self):
        """
        Returns:
            error string, empty if configuration is usable
        """
        if not self.mass > 0 or not self.inertia > 0:
            return "mass and inertia must be positive"
        if not (self.lf > 0 and self.lr > 0):
            return "axle distances must be positive"
        if not (self.corneringFront > 0 and self.corneringRear > 0):
            return "cornering stiffnesses must be positive"
        if self.steerLag < 0 or self.speedLag < 0:
            return "actuator lags must be non-negative"
        if not self.blendSpeedLow < self.blendSpeedHigh:
            return "blendSpeedLow must be below blendSpeedHigh"
        if int(self.substeps) < 1:
            return "substeps must be at least 1"
        return ""

    def kinematicLimit(self):
        return math.isinf(self.corneringFront) and math.isinf(self.corneringRear)


@dataclass(frozen=True)
class PlantState:
    """
    Rear-axle pose, body-frame longitudinal speed vx and lateral CoG velocity vy,
      yaw rate, and the actual (lagged) steering angle
    """

    x: float
    y: float
    theta: float
    vx: float = 0.0
    vy: float = 0.0
    yawRate: float = 0.0
    steer: float = 0.0

    def asArray(self):
        return np.array(
            [self.x, self.y, self.theta, self.vx, self.vy, self.yawRate, self.steer]
        )

    @classmethod
    def fromArray(cls, arr):
        return cls(*[float(a) for a in arr[:7]])

    def pose(self):
        return VehicleState(self.x, self.y, self.theta)


def _blendWeight(vx, cfg):
    if cfg.kinematicLimit():
        return 0.0
    w = (vx - cfg.blendSpeedLow) / (cfg.blendSpeedHigh - cfg.blendSpeedLow)
    return min(max(w, 0.0), 1.0)


def _derivative(s, vcmd, dcmd, cfg, h):
    """
    Right-hand side of the plant; s = [x, y, theta, vx, vy, r, steer]
    """
    x, y, th, vx, vy, r, st = s
    L = cfg.lf + cfg.lr
    w = _blendWeight(vx, cfg)

    # kinematic targets: zero slip at both axles
    rkin = vx * math.tan(st) / L
    vykin = cfg.lr * rkin
    # relaxation toward the kinematic targets, fast but RK4-stable at step h
    tau = 2.0 * h

    if w > 0.0:
        vxs = max(vx, 1e-3)
        alphaf = st - math.atan2(vy + cfg.lf * r, vxs)
        alphar = -math.atan2(vy - cfg.lr * r, vxs)
        fyf = cfg.corneringFront * alphaf
        fyr = cfg.corneringRear * alphar
        vydotdyn = (fyf * math.cos(st) + fyr) / cfg.mass - vx * r
        rdotdyn = (cfg.lf * fyf * math.cos(st) - cfg.lr * fyr) / cfg.inertia
    else:
        vydotdyn = 0.0
        rdotdyn = 0.0

    vydot = w * vydotdyn + (1.0 - w) * (vykin - vy) / tau
    rdot = w * rdotdyn + (1.0 - w) * (rkin - r) / tau

    # rear-axle velocity in the body frame: (vx, vy - lr r); kinematic part uses the
    #   zero-slip value directly so the blend cannot leak stale lateral velocity
    latdyn = vy - cfg.lr * r
    lat = w * latdyn
    yawdot = w * r + (1.0 - w) * rkin
    xdot = vx * math.cos(th) - lat * math.sin(th)
    ydot = vx * math.sin(th) + lat * math.cos(th)

    vxdot = (vcmd - vx) / cfg.speedLag if cfg.speedLag > 0 else 0.0
    stdot = (dcmd - st) / cfg.steerLag if cfg.steerLag > 0 else 0.0
    return np.array([xdot, ydot, yawdot, vxdot, vydot, rdot, stdot])


def stepPlant(state, u, cfg, params):
    """
    Advance the truth plant by one sampling period with substepped RK4. Inputs are
      held over the period; zero lags apply the command at the start of the period.

    Args:
        state: PlantState
        u: ControlInput (commanded)
        cfg: PlantConfig
        params: VehicleParams (sampling time)

    Returns:
        PlantState, heading wrapped
    """
    s = state.asArray()
    if cfg.speedLag <= 0:
        s[3] = u.v
    if cfg.steerLag <= 0:
        s[6] = u.delta
    n = int(cfg.substeps)
    h = params.T / n
    for _ in range(n):
        k1 = _derivative(s, u.v, u.delta, cfg, h)
        k2 = _derivative(s + 0.5 * h * k1, u.v, u.delta, cfg, h)
        k3 = _derivative(s + 0.5 * h * k2, u.v, u.delta, cfg, h)
        k4 = _derivative(s + h * k3, u.v, u.delta, cfg, h)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    s[2] = wrapAngle(s[2])
    return PlantState.fromArray(s)


class dynamic:
    """
    Dynamic bicycle truth plant component

    Exposed methods:
        reset(state, speed) - plant state at the given pose, rolling straight
        step(plantstate, u, rng) - advances one period, adds configured noise
        pose(plantstate) - projects the plant state onto VehicleState
    """

    def __init__(self, expassem):
        self.ea = expassem
        self.logwarn = self.ea.logwarnbase + "[Dynamic] "
        self.loginfo = self.ea.loginfobase + "[Dynamic] "
        logging.info(self.loginfo + "initializing plant object")
        self.params = self.ea.params
        self.cfg = self.ea.plantcfg
        h = self.params.T / int(self.cfg.substeps)
        for lag, name in [(self.cfg.steerLag, "steerLag"), (self.cfg.speedLag, "speedLag")]:
            if 0 < lag < 0.5 * h:
                logging.warning(
                    self.logwarn + name + " " + str(lag) + " s is short against the "
                    "integration substep " + str(h) + " s; increase 'substeps'"
                )

    def reset(self, state, speed=0.0):
        return PlantState(state.x, state.y, state.theta, vx=speed)

    def step(self, plantstate, u, rng=None):
        nxt = stepPlant(plantstate, u, self.cfg, self.params)
        if rng is not None and (self.cfg.noisePose > 0 or self.cfg.noiseYawRate > 0):
            arr = nxt.asArray()
            if self.cfg.noisePose > 0:
                arr[:3] += rng.normal(0.0, self.cfg.noisePose, 3)
            if self.cfg.noiseYawRate > 0:
                arr[5] += rng.normal(0.0, self.cfg.noiseYawRate)
            arr[2] = wrapAngle(arr[2])
            nxt = PlantState.fromArray(arr)
        return nxt

    def pose(self, plantstate):
        return plantstate.pose()
