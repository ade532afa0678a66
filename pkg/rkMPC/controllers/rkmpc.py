# -*- coding: utf-8 -*-
"""
Residual Koopman MPC: the linear MPC supplies U0, a second QP over the residual
Koopman model supplies the correction du, and the applied input is
clamp(U0 + du) to the actuator box.

The residual QP is posed in the local frame of the current pose around the linear
MPC plan. The lifted model propagates the deviation from the planned trajectory.
Its input channel carries the correction plus the input residual the plant showed
on its recent transitions (U_r - U_p, recovered the same way as in preprocessing);
the part of the pose change U_r cannot explain enters the raw block as a drift.

Version: 1.0.0  (October 2026)
"""

import logging
import time

import numpy as np

from rkMPC.controllers.kmpc import localWindow
from rkMPC.controllers.lmpc import ControllerOutput, lmpc, shiftWarm
from rkMPC.plants.kinematic import ControlInput, angleDiff, eulerStep, rk4Step, wrapAngle
from rkMPC.utils.BoxQP import condense, solveBoxQP
from rkMPC.utils.Errors import RKMPCError
from rkMPC.utils.Koopman import invertTransitions, transformToLocal


def planTrajectory(plan, count, params):
    """
    Nominal rollout of the linear MPC input plan from the local origin

    Args:
        plan: (M, 2) input sequence; repeated at its last row when shorter than
          'count'
        count: steps to roll out
        params: VehicleParams

    Returns:
        tuple ((count + 1, 3) local states starting at 0, (count, 2) inputs)
    """
    plan = np.asarray(plan, dtype=float).reshape(-1, 2)
    if len(plan) < count:
        plan = np.vstack([plan, np.repeat(plan[-1:], count - len(plan), axis=0)])
    plan = plan[:count]
    X = np.zeros((count + 1, 3))
    for k in range(count):
        X[k + 1] = eulerStep(X[k], plan[k], params.wheelbase, params.T)
    return X, plan


def residualProblem(state, window, plan, observed, drift, model, cfg, params):
    """
    Condensed residual QP around the linear MPC plan

    The deviation dz from the lifted plan obeys
      dz(k+1) = A dz(k) + B (du(k) + observed) + E R(theta_k) drift,  dz(0) = 0
      with E placing a pose into the raw block of z and R(theta_k) turning the
      per-period pose residual onto the planned heading. The outputs C dz track the
      gap between the local reference and the planned poses.

    Args:
        state: VehicleState, origin of the local frame
        window: (N+1, 5) global reference points, rows 1..N tracked
        plan: (M, 2) linear MPC input sequence
        observed: (2,) running estimate of the input residual U_r - U_p
        drift: (3,) running estimate of the pose residual left after U_r
        model: residual KoopmanModel
        cfg: MpcConfig of the residual controller
        params: VehicleParams

    Returns:
        BoxQP over the N stacked residuals
    """
    N = len(window) - 1
    nz = model.A.shape[0]
    W = localWindow(state, window)
    X, _ = planTrajectory(plan, N, params)
    gap = W[1:, :3] - X[1:]
    gap[:, 2] = angleDiff(W[1:, 2], X[1:, 2])
    drift = np.asarray(drift, dtype=float)
    base = model.B @ np.asarray(observed, dtype=float)
    models = []
    for k in range(N):
        c, s = np.cos(X[k, 2]), np.sin(X[k, 2])
        c_k = base.copy()
        c_k[:3] += [c * drift[0] - s * drift[1], s * drift[0] + c * drift[1], drift[2]]
        models.append((model.A, model.B, c_k))
    return condense(
        models,
        np.zeros(nz),
        gap,
        np.zeros((N, 2)),
        cfg,
        np.asarray(cfg.residualLow, dtype=float),
        np.asarray(cfg.residualHigh, dtype=float),
        outputMap=model.C,
    )


class rkmpc:
    """
    Residual Koopman MPC component, requires a residual-mode model on the assembler
      unless the residual box is pinned to a single point

    Exposed methods:
        reset() - forget warm starts, reference index and the residual estimate
        residual(state) - first correction of the residual QP
        step(state) - ControllerOutput with U0 and du reported separately
    """

    def __init__(self, expassem):
        self.ea = expassem
        self.logerr = self.ea.logerrbase + "[RKMPC] "
        self.logwarn = self.ea.logwarnbase + "[RKMPC] "
        self.loginfo = self.ea.loginfobase + "[RKMPC] "
        self.logdebug = self.ea.logdebugbase + "[RKMPC] "
        logging.info(self.loginfo + "initializing controller object")
        self.cfg = self.ea.cfg.mpc.rkmpc
        self.qpcfg = self.ea.cfg.qp
        self.params = self.ea.params
        self.threshold = self.ea.cfg.preprocess.inversionThreshold
        self.base = lmpc(self.ea, self.ea.cfg.mpc.lmpc)
        self.low = np.asarray(self.cfg.residualLow, dtype=float)
        self.high = np.asarray(self.cfg.residualHigh, dtype=float)
        self.pinned = bool(np.all(self.low == self.high))
        self.model = self.ea.rmodel
        if self.model is None and not self.pinned:
            raise RKMPCError("residual controller needs a trained residual model")
        if self.model is not None and self.model.mode != "residual":
            logging.warning(
                self.logwarn + "model was trained in '" + self.model.mode
                + "' mode, expected 'residual'"
            )
        self.reset()

    def reset(self):
        self.base.reset()
        self.warm = None
        self.observed = np.zeros(2)
        self.drift = np.zeros(3)
        self.prevPose = None
        self.prevInput = None
        self.clampCount = 0
        self.fallbackCount = 0

    def observe(self, state):
        """
        Fold the last transition into the running residual estimates, in the
          previous pose's frame: U_r inverts the nominal model on (previous pose,
          'state'), the input residual is U_r minus the input applied there, and the
          pose residual is what the nominal step under U_r leaves unexplained
        """
        if self.prevPose is None or self.cfg.observerGain <= 0.0:
            return
        pair = transformToLocal(self.prevPose, np.array([self.prevPose.asArray(), state.asArray()]))
        ur, res = invertTransitions(pair[:1], pair[1:], self.params)
        if res[0] > self.threshold or abs(ur[0, 0]) < 1e-6:
            logging.debug(self.logdebug + "transition not invertible, estimates kept")
            return
        left = pair[1] - rk4Step(pair[0], ur[0], self.params.wheelbase, self.params.T)
        left[2] = wrapAngle(left[2])
        g = self.cfg.observerGain
        self.observed += g * (ur[0] - self.prevInput - self.observed)
        self.drift += g * (left - self.drift)

    def residual(self, state):
        """
        First correction of the residual QP; expects the baseline to have stepped
          at 'state'

        Returns:
            tuple (du (2,), QPSolution or None)
        """
        if self.pinned:
            return self.low.copy(), None
        N = int(self.cfg.horizon)
        problem = residualProblem(
            state,
            self.base.cursor.window(N + 1),
            self.base.plan,
            self.observed,
            self.drift,
            self.model,
            self.cfg,
            self.params,
        )
        sol = solveBoxQP(
            problem,
            self.qpcfg.tol,
            self.qpcfg.maxIter,
            self.qpcfg.omega,
            warm=shiftWarm(self.warm),
            strict=True,
        )
        self.warm = sol.z
        return sol.z[:2].copy(), sol

    def step(self, state):
        out0 = self.base.step(state)
        start = time.perf_counter()
        fallback = False
        sol = None
        if not self.pinned:
            self.observe(state)
        try:
            du, sol = self.residual(state)
        except RKMPCError as e:
            logging.warning(self.logwarn + "FallbackToBaseline: " + str(e))
            du = np.zeros(2)
            fallback = True
            self.fallbackCount += 1
            self.warm = None
        final, moved = self.params.clampInput(out0.final.asArray() + du)
        if moved:
            self.clampCount += 1
            logging.debug(self.logdebug + "summed input clamped to the actuator box")
        elapsed = time.perf_counter() - start
        final = ControlInput.fromArray(final)
        self.base.uPrev = final.asArray()
        self.prevPose = state
        self.prevInput = final.asArray()
        diagnostics = dict(out0.diagnostics)
        diagnostics.update(
            {
                "residualIterations": 0 if sol is None else sol.iterations,
                "residualConverged": True if sol is None else sol.converged,
                "observed": self.observed.copy(),
                "drift": self.drift.copy(),
                "clamped": self.clampCount,
                "fallback": fallback,
            }
        )
        return ControllerOutput(
            final=final,
            baseline=out0.final,
            residual=du,
            solveTime=out0.solveTime + elapsed,
            diagnostics=diagnostics,
        )
