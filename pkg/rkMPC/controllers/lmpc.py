# -*- coding: utf-8 -*-
"""
Linear MPC on the kinematic bicycle: time-varying affine linearization about the
reference window, condensed over the inputs and solved as a box QP.

Also holds the pieces shared by all controllers: ControllerOutput and the
time-indexed ReferenceCursor.

Version: 1.0.0  (October 2026)
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from rkMPC.plants.kinematic import ControlInput, angleDiff, eulerStep, linearizeKinematic
from rkMPC.utils.BoxQP import condense, solveSoftBoxQP
from rkMPC.utils.Errors import ReferenceExhausted
from rkMPC.utils.Track import project


@dataclass
class ControllerOutput:
    """
    Attributes:
        final: applied input, inside the actuator box
        baseline: linear MPC input U0 (equal to final for non-residual controllers)
        residual: (dv, ddelta) correction, zero for non-residual controllers
        solveTime: controller computation time, s
        diagnostics: QP iterations, converged flag, KKT residual, clamp count,
          fallback flag, flat-objective flag
    """

    final: ControlInput
    baseline: ControlInput
    residual: np.ndarray = field(default_factory=lambda: np.zeros(2))
    solveTime: float = 0.0
    diagnostics: dict = field(default_factory=dict)


class ReferenceCursor:
    """
    Time-based reference indexing: the window start advances one point per period
      and is re-synchronized to the projection only when the drift exceeds
      'resync' points
    """

    def __init__(self, ref, resync=5, logdebug=""):
        self.ref = ref
        self.resync = int(resync)
        self.logdebug = logdebug
        self.i0 = None

    def reset(self):
        self.i0 = None

    def locate(self, state):
        """
        Returns:
            index of the reference point the window starts from; the first
              tracked point follows it
        """
        n = len(self.ref)
        target = project(state, self.ref).index
        if self.i0 is None:
            self.i0 = target
        else:
            self.i0 += 1
            drift = self.i0 - target
            if self.ref.closed:
                drift = (drift + n // 2) % n - n // 2
            if abs(drift) > self.resync:
                logging.debug(
                    self.logdebug + "reference index resynchronized from "
                    + str(self.i0) + " to " + str(target)
                )
                self.i0 = target
        if self.ref.closed:
            self.i0 %= n
        return self.i0

    def window(self, count):
        W = self.ref.window(self.i0, count)
        if W is None:
            raise ReferenceExhausted(
                "open reference ends before index " + str(self.i0 + count - 1)
            )
        return W


def unwrapWindow(window, theta):
    """
    Unwrap window headings and express 'theta' on the same branch

    Returns:
        tuple (window copy with continuous headings, theta near window[0] heading)
    """
    W = np.array(window, dtype=float)
    W[:, 2] = np.unwrap(W[:, 2])
    return W, W[0, 2] + angleDiff(theta, W[0, 2])


def lmpcProblem(state, window, cfg, params, uPrev=None, activeAt=None):
    """
    Condensed tracking QP of the linear MPC

    Args:
        state: VehicleState
        window: (N+1, 5) reference points; the model is linearized at rows 0..N-1,
          rows 1..N are tracked
        cfg: MpcConfig
        params: VehicleParams
        uPrev: previously applied input, for the optional steering-rate term
        activeAt: stacked inputs at which the soft state bounds are activated,
          default the reference inputs

    Returns:
        BoxQP over the N stacked absolute inputs
    """
    N = len(window) - 1
    W, theta = unwrapWindow(window, state.theta)
    models = []
    for k in range(N):
        lin = linearizeKinematic(W[k], params)
        xr = W[k, :3]
        ur = W[k, 3:5]
        c = eulerStep(xr, ur, params.wheelbase, params.T) - lin.A @ xr - lin.B @ ur
        models.append((lin.A, lin.B, c))
    low = np.asarray(cfg.stateLow, dtype=float)
    high = np.asarray(cfg.stateHigh, dtype=float)
    soft = np.any(np.isfinite(low)) or np.any(np.isfinite(high))
    return condense(
        models,
        np.array([state.x, state.y, theta]),
        W[1:, :3],
        W[:-1, 3:5],
        cfg,
        params.lowerBound(),
        params.upperBound(),
        stateLow=low if soft else None,
        stateHigh=high if soft else None,
        uPrev=None if uPrev is None else np.asarray(uPrev, dtype=float),
        activeAt=activeAt,
    )


def shiftWarm(z, m=2):
    if z is None:
        return None
    return np.concatenate([z[m:], z[-m:]])


class lmpc:
    """
    Linear MPC component

    Exposed methods:
        reset() - forget warm start and reference index
        step(state) - ControllerOutput for the current pose

    After a step, 'plan' holds the full (N, 2) input sequence of the solve.
    """

    def __init__(self, expassem, mpccfg=None):
        self.ea = expassem
        self.logerr = self.ea.logerrbase + "[LMPC] "
        self.logwarn = self.ea.logwarnbase + "[LMPC] "
        self.loginfo = self.ea.loginfobase + "[LMPC] "
        self.logdebug = self.ea.logdebugbase + "[LMPC] "
        logging.info(self.loginfo + "initializing controller object")
        self.cfg = mpccfg if mpccfg is not None else self.ea.cfg.mpc.lmpc
        self.qpcfg = self.ea.cfg.qp
        self.params = self.ea.params
        self.cursor = ReferenceCursor(self.ea.ref, self.cfg.resyncWindow, self.logdebug)
        self.reset()

    def reset(self):
        self.cursor.reset()
        self.warm = None
        self.plan = None
        self.uPrev = None
        self.notConverged = 0

    def step(self, state):
        start = time.perf_counter()
        self.cursor.locate(state)
        W = self.cursor.window(int(self.cfg.horizon) + 1)
        _, sol = solveSoftBoxQP(
            lambda z: lmpcProblem(state, W, self.cfg, self.params, self.uPrev, z),
            self.qpcfg.tol,
            self.qpcfg.maxIter,
            self.qpcfg.omega,
            warm=shiftWarm(self.warm),
        )
        elapsed = time.perf_counter() - start
        if not sol.converged:
            self.notConverged += 1
            logging.warning(self.logwarn + "QPNotConverged, using best iterate")
        self.warm = sol.z
        self.plan = sol.z.reshape(-1, 2)
        u = ControlInput.fromArray(sol.z[:2])
        self.uPrev = u.asArray()
        logging.debug(
            self.logdebug + "index " + str(self.cursor.i0) + " u = ("
            + "{:.4f}, {:.4f}".format(u.v, u.delta) + ")"
        )
        return ControllerOutput(
            final=u,
            baseline=u,
            residual=np.zeros(2),
            solveTime=elapsed,
            diagnostics={
                "iterations": sol.iterations,
                "converged": sol.converged,
                "kkt": sol.kkt,
                "clamped": 0,
                "fallback": False,
                "flat": False,
            },
        )


def lmpcSolve(state, window, cfg, params, qpcfg):
    """
    One cold-started linear MPC solve, first input only

    Returns:
        (2,) array (v, delta)
    """
    _, sol = solveSoftBoxQP(
        lambda z: lmpcProblem(state, window, cfg, params, activeAt=z),
        qpcfg.tol,
        qpcfg.maxIter,
        qpcfg.omega,
    )
    return sol.z[:2].copy()
