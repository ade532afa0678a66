# -*- coding: utf-8 -*-
"""
Koopman MPC baseline: the lifted linear model trained on absolute inputs replaces
the kinematic linearization. The problem is posed in the local frame of the
current pose, matching how the training windows were framed.

Version: 1.0.0  (October 2026)
"""

import logging
import time

import numpy as np

from rkMPC.controllers.lmpc import ControllerOutput, ReferenceCursor, shiftWarm
from rkMPC.plants.kinematic import ControlInput
from rkMPC.utils.BoxQP import condense, solveBoxQP
from rkMPC.utils.Koopman import transformToLocal


def localWindow(state, window):
    """
    Reference window in the frame of 'state', headings continuous from 0

    Returns:
        (N+1, 5) array; input columns unchanged
    """
    W = np.array(window, dtype=float)
    local = transformToLocal(state, W[:, :3])
    local[:, 2] = np.unwrap(np.concatenate([[0.0], local[:, 2]]))[1:]
    W[:, :3] = local
    return W


def isFlat(problem, tol=1e-12):
    """
    True when no input changes the objective beyond the regularization
    """
    H = problem.H - problem.regularization * np.eye(len(problem))
    return bool(np.max(np.abs(H)) <= tol and np.max(np.abs(problem.f)) <= tol)


class kmpc:
    """
    Koopman MPC component, requires an absolute-mode model on the assembler

    Exposed methods:
        reset() - forget warm start and reference index
        step(state) - ControllerOutput for the current pose
    """

    def __init__(self, expassem):
        self.ea = expassem
        self.logerr = self.ea.logerrbase + "[KMPC] "
        self.logwarn = self.ea.logwarnbase + "[KMPC] "
        self.loginfo = self.ea.loginfobase + "[KMPC] "
        self.logdebug = self.ea.logdebugbase + "[KMPC] "
        logging.info(self.loginfo + "initializing controller object")
        self.cfg = self.ea.cfg.mpc.kmpc
        self.qpcfg = self.ea.cfg.qp
        self.params = self.ea.params
        self.model = self.ea.kmodel
        if self.model.mode != "absolute":
            logging.warning(
                self.logwarn + "model was trained in '" + self.model.mode + "' mode, "
                "expected 'absolute'"
            )
        self.z0 = self.model.lift(np.zeros(3))
        self.cursor = ReferenceCursor(self.ea.ref, self.cfg.resyncWindow, self.logdebug)
        self.reset()

    def reset(self):
        self.cursor.reset()
        self.warm = None
        self.uPrev = None
        self.notConverged = 0

    def step(self, state):
        start = time.perf_counter()
        self.cursor.locate(state)
        N = int(self.cfg.horizon)
        W = localWindow(state, self.cursor.window(N + 1))
        problem = condense(
            [(self.model.A, self.model.B)] * N,
            self.z0,
            W[1:, :3],
            W[:-1, 3:5],
            self.cfg,
            self.params.lowerBound(),
            self.params.upperBound(),
            outputMap=self.model.C,
            uPrev=self.uPrev,
        )
        flat = isFlat(problem)
        if flat:
            logging.warning(self.logwarn + "objective is flat, inputs are arbitrary")
        sol = solveBoxQP(
            problem,
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
        u = ControlInput.fromArray(sol.z[:2])
        self.uPrev = u.asArray()
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
                "flat": flat,
            },
        )
