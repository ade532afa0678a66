# -*- coding: utf-8 -*-
"""
Nominal kinematic bicycle model: state and input types, the RK4 one-period step,
the reference-point linearization used by the linear MPC, and the 'kinematic'
plant component (nominal model used as its own truth plant)

Model, reference point at the rear axle:
    xdot     = v cos(theta)
    ydot     = v sin(theta)
    thetadot = v tan(delta) / L

Version: 1.0.0  (October 2026)
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from rkMPC.utils.Errors import DegenerateReference


def wrapAngle(angle):
    """
    Wrap angle (scalar or array) to (-pi, pi]
    """
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    # np.mod maps +pi onto -pi; keep the closed end of the interval at +pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angleDiff(a, b):
    """
    Wrapped difference a - b in (-pi, pi]
    """
    return wrapAngle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


@dataclass(frozen=True)
class VehicleState:
    """
    Pose (x, y, theta) in meters and radians; theta is wrapped on construction
    """

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrapAngle(self.theta))

    def asArray(self):
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def fromArray(cls, arr):
        return cls(arr[0], arr[1], arr[2])


@dataclass(frozen=True)
class ControlInput:
    """
    Longitudinal speed v (m/s) and front steering angle delta (rad)
    """

    v: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "delta", float(self.delta))

    def asArray(self):
        return np.array([self.v, self.delta])

    @classmethod
    def fromArray(cls, arr):
        return cls(arr[0], arr[1])


@dataclass(frozen=True)
class VehicleParams:
    """
    Wheelbase (m), sampling time T (s) and actuator box
    """

    wheelbase: float = 0.33
    T: float = 0.05
    vMin: float = 0.0
    vMax: float = 4.0
    deltaMin: float = -0.4
    deltaMax: float = 0.4

    def validate(self):
        """
        Returns:
            error string, empty if parameters are usable
        """
        if not self.wheelbase > 0:
            return "wheelbase must be positive"
        if not self.T > 0:
            return "sampling time T must be positive"
        if not (self.vMin <= self.vMax and self.deltaMin <= self.deltaMax):
            return "actuator box is empty"
        return ""

    def lowerBound(self):
        return np.array([self.vMin, self.deltaMin])

    def upperBound(self):
        return np.array([self.vMax, self.deltaMax])

    def clampInput(self, u):
        """
        Clamp an input array [v, delta] into the actuator box

        Returns:
            tuple (clamped array, True if any component was moved)
        """
        u = np.asarray(u, dtype=float)
        clamped = np.minimum(np.maximum(u, self.lowerBound()), self.upperBound())
        return clamped, bool(np.any(clamped != u))


@dataclass(frozen=True)
class LinearizedModel:
    """
    Discrete model about a reference point: xbar(k+1) = A xbar(k) + B ubar(k)
      with xbar, ubar deviations from the reference point
    """

    A: np.ndarray
    B: np.ndarray
    reference: tuple  # (x_r, y_r, theta_r, v_r, delta_r)


def kinematicDerivative(states, inputs, wheelbase):
    """
    Continuous-time kinematic bicycle right-hand side, vectorized over rows

    Args:
        states: (..., 3) array of [x, y, theta]
        inputs: (..., 2) array of [v, delta]
        wheelbase: L in meters

    Returns:
        (..., 3) array of state derivatives
    """
    theta = states[..., 2]
    v = inputs[..., 0]
    delta = inputs[..., 1]
    return np.stack(
        [v * np.cos(theta), v * np.sin(theta), v * np.tan(delta) / wheelbase], axis=-1
    )


def rk4Step(states, inputs, wheelbase, T):
    """
    One fixed-step RK4 period with inputs held constant; theta is NOT wrapped so
      that batched callers can difference headings directly
    """
    states = np.asarray(states, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    k1 = kinematicDerivative(states, inputs, wheelbase)
    k2 = kinematicDerivative(states + 0.5 * T * k1, inputs, wheelbase)
    k3 = kinematicDerivative(states + 0.5 * T * k2, inputs, wheelbase)
    k4 = kinematicDerivative(states + T * k3, inputs, wheelbase)
    return states + (T / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def eulerStep(states, inputs, wheelbase, T):
    """
    One forward-Euler period; the discretization the linearization differentiates
    """
    states = np.asarray(states, dtype=float)
    return states + T * kinematicDerivative(states, np.asarray(inputs, float), wheelbase)


def stepKinematic(state, u, params):
    """
    Integrate the kinematic bicycle over one sampling period with RK4

    Args:
        state: VehicleState
        u: ControlInput
        params: VehicleParams

    Returns:
        VehicleState, heading wrapped
    """
    nxt = rk4Step(state.asArray(), u.asArray(), params.wheelbase, params.T)
    return VehicleState.fromArray(nxt)


def linearizeKinematic(ref, params):
    """
    Euler-discretized Jacobians of the kinematic bicycle about a reference point

    Args:
        ref: sequence (x_r, y_r, theta_r, v_r, delta_r)
        params: VehicleParams

    Returns:
        LinearizedModel
    """
    _, _, thr, vr, dr = [float(a) for a in ref[:5]]
    cosd = math.cos(dr)
    if abs(cosd) <= 1e-6:
        raise DegenerateReference(
            "steering reference " + str(dr) + " rad is at the tan() singularity"
        )
    T = params.T
    L = params.wheelbase
    A = np.array(
        [
            [1.0, 0.0, -vr * math.sin(thr) * T],
            [0.0, 1.0, vr * math.cos(thr) * T],
            [0.0, 0.0, 1.0],
        ]
    )
    B = np.array(
        [
            [math.cos(thr) * T, 0.0],
            [math.sin(thr) * T, 0.0],
            [math.tan(dr) * T / L, vr * T / (L * cosd ** 2)],
        ]
    )
    return LinearizedModel(A=A, B=B, reference=tuple(float(a) for a in ref[:5]))


class kinematic:
    """
    Nominal model used as the truth plant; no mismatch and no lag, optional pose
      noise from plant.noisePose

    Exposed methods:
        reset(state, speed) - returns initial plant state at the given pose
        step(plantstate, u, rng) - advances one period
        pose(plantstate) - projects the plant state onto VehicleState
    """

    def __init__(self, expassem):
        self.ea = expassem
        self.loginfo = self.ea.loginfobase + "[Kinematic] "
        logging.info(self.loginfo + "initializing plant object")
        self.params = self.ea.params
        self.cfg = self.ea.plantcfg

    def reset(self, state, speed=0.0):
        return state

    def step(self, plantstate, u, rng=None):
        nxt = stepKinematic(plantstate, u, self.params)
        if rng is not None and self.cfg.noisePose > 0:
            nxt = VehicleState.fromArray(
                nxt.asArray() + rng.normal(0.0, self.cfg.noisePose, 3)
            )
        return nxt

    def pose(self, plantstate):
        return plantstate
