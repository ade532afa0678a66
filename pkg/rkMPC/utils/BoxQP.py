# -*- coding: utf-8 -*-
"""
Dense convex QP with box constraints, and the input-condensing of the tracking
MPC problems into that form.

    minimize  1/2 z' H z + f' z + const   subject to  lb <= z <= ub

The solver alternates projected Gauss-Seidel sweeps with over-relaxation and a
Newton step restricted to the free variables, accepted by projected
backtracking. Every iterate is clamped into the box and the objective never
increases.

Version: 1.0.0  (October 2026)
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from rkMPC.utils.Errors import DimensionMismatch, IllConditioned, NotConverged

logwarn = "WARNING: [QP] "
logdebug = "DEBUG: [QP] "

REGULARIZATION = 1e-9


@dataclass
class BoxQP:
    """
    H: n x n symmetric PSD; f: n; lb, ub: n (entries may be +/-inf); const: scalar
      offset of the objective; regularization: multiple of I already included in H;
      active: stacked output entries whose soft state bound is penalized, None
      without soft bounds
    """

    H: np.ndarray
    f: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    const: float = 0.0
    regularization: float = 0.0
    active: np.ndarray = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.f = np.atleast_1d(np.asarray(self.f, dtype=float))
        self.lb = np.atleast_1d(np.asarray(self.lb, dtype=float))
        self.ub = np.atleast_1d(np.asarray(self.ub, dtype=float))
        n = len(self.f)
        if self.H.shape != (n, n) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise DimensionMismatch(
                "H " + str(self.H.shape) + ", f " + str(self.f.shape) + ", lb "
                + str(self.lb.shape) + ", ub " + str(self.ub.shape)
            )
        if not np.allclose(self.H, self.H.T, rtol=0.0, atol=1e-10):
            raise DimensionMismatch("H is not symmetric")
        if np.any(self.lb > self.ub):
            raise DimensionMismatch("empty box: lb > ub")

    def __len__(self):
        return len(self.f)

    def objective(self, z):
        return float(0.5 * z @ self.H @ z + self.f @ z + self.const)


@dataclass
class QPSolution:
    z: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt: float
    history: list = field(default_factory=list)


def kktResidual(problem, z, g=None):
    """
    Infinity norm of the projected gradient z - clamp(z - grad)
    """
    if g is None:
        g = problem.H @ z + problem.f
    return float(np.max(np.abs(z - np.clip(z - g, problem.lb, problem.ub)), initial=0.0))


def _sweep(problem, z, g, omega):
    H, lb, ub = problem.H, problem.lb, problem.ub
    for i in range(len(z)):
        hii = H[i, i]
        if hii > 0.0:
            zi = min(max(z[i] - omega * g[i] / hii, lb[i]), ub[i])
        elif g[i] > 0.0 and np.isfinite(lb[i]):
            zi = lb[i]
        elif g[i] < 0.0 and np.isfinite(ub[i]):
            zi = ub[i]
        else:
            continue
        step = zi - z[i]
        if step != 0.0:
            z[i] = zi
            g += H[:, i] * step


def _newtonStep(problem, z, g, obj):
    free = (z > problem.lb) & (z < problem.ub)
    if not np.any(free):
        return z, g, obj
    Hff = problem.H[np.ix_(free, free)]
    try:
        d = -cho_solve(cho_factor(Hff), g[free])
    except LinAlgError:
        return z, g, obj
    alpha = 1.0
    for _ in range(30):
        trial = z.copy()
        trial[free] = z[free] + alpha * d
        trial = np.clip(trial, problem.lb, problem.ub)
        tobj = problem.objective(trial)
        if tobj <= obj:
            return trial, problem.H @ trial + problem.f, tobj
        alpha *= 0.5
    return z, g, obj


def solveBoxQP(problem, tol=1e-8, maxIter=2000, omega=1.2, warm=None, strict=False,
               trace=False):
    """
    Solve a box-constrained convex QP

    Args:
        problem: BoxQP
        tol: projected-gradient infinity-norm tolerance
        maxIter: iteration budget
        omega: over-relaxation factor in (0, 2)
        warm: optional starting point, clamped into the box
        strict: raise NotConverged instead of returning converged=False
        trace: record the objective after every iteration

    Returns:
        QPSolution; z is always inside the box
    """
    n = len(problem)
    try:
        cho_factor(problem.H + 1e-8 * np.eye(n))
    except LinAlgError:
        raise IllConditioned("H has a negative eigenvalue beyond -1e-8")

    if warm is None or len(warm) != n:
        z = np.zeros(n)
    else:
        z = np.asarray(warm, dtype=float).copy()
    z = np.clip(z, problem.lb, problem.ub)
    g = problem.H @ z + problem.f
    obj = problem.objective(z)
    history = [obj] if trace else []

    iters = 0
    kkt = kktResidual(problem, z, g)
    while kkt > tol and iters < maxIter:
        _sweep(problem, z, g, omega)
        obj = problem.objective(z)
        z, g, obj = _newtonStep(problem, z, g, obj)
        # refresh to shed drift from the incremental gradient updates
        g = problem.H @ z + problem.f
        iters += 1
        kkt = kktResidual(problem, z, g)
        if trace:
            history.append(obj)

    sol = QPSolution(z, problem.objective(z), iters, kkt <= tol, kkt, history)
    if not sol.converged:
        msg = (
            "box QP stopped after " + str(iters) + " iterations with KKT residual "
            + "{:.3e}".format(kkt)
        )
        if strict:
            raise NotConverged(msg, sol)
        logging.warning(logwarn + msg)
    return sol


def solveSoftBoxQP(build, tol=1e-8, maxIter=2000, omega=1.2, warm=None, passes=3):
    """
    Solve a condensed problem whose soft state bounds depend on the input sequence

    Args:
        build: callable(activeAt) -> BoxQP, activeAt None on the first pass
        passes: most solves; the problem is rebuilt with the bounds activated at
          the previous solution until the penalized set repeats

    Returns:
        tuple (last BoxQP, its QPSolution)
    """
    problem = build(None)
    sol = solveBoxQP(problem, tol, maxIter, omega, warm=warm)
    if problem.active is None:
        return problem, sol
    for _ in range(int(passes) - 1):
        nxt = build(sol.z)
        if np.array_equal(nxt.active, problem.active):
            break
        logging.debug(
            logdebug + str(int(np.sum(nxt.active))) + " soft bounds active after re-activation"
        )
        problem = nxt
        sol = solveBoxQP(problem, tol, maxIter, omega, warm=sol.z)
    return problem, sol


def condense(models, x0, yref, uref, weights, lb, ub, outputMap=None,
             stateLow=None, stateHigh=None, uPrev=None, activeAt=None,
             regularization=REGULARIZATION):
    """
    Eliminate the states of a tracking MPC by forward substitution

    Dynamics x(k+1) = A_k x(k) + B_k u(k) + c_k for k = 0..N-1, outputs
      y(k) = C x(k) with y = (x, y, theta). Cost over k = 1..N:
        sum  pw |pos - pos_ref|^2 + hw (theta - theta_ref)^2
        +    sw (v - v_ref)^2 + dw (delta - delta_ref)^2        (inputs, k = 0..N-1)
        +    rw (delta_k - delta_k-1)^2                          (optional)
        +    softState-weighted squared violations of the state bounds
      Soft-bound penalties are added for the outputs the rollout under 'activeAt'
      (default uref) predicts outside the bounds; solveSoftBoxQP moves that
      rollout to the solution.

    Args:
        models: sequence of (A, B) or (A, B, c), length N
        x0: initial state
        yref: (N x 3) output references for k = 1..N; headings already unwrapped
        uref: (N x m) input references for k = 0..N-1
        weights: MpcConfig (positionWeight, headingWeight, speedWeight,
          steerWeight, steerRateWeight, softStateWeight)
        lb, ub: per-step input bounds (length m)
        outputMap: C, default the selection of the first three states
        stateLow, stateHigh: optional (x, y, theta) soft bounds
        uPrev: previously applied input, anchors the first steering-rate term
        activeAt: stacked inputs whose rollout decides the penalized soft bounds
        regularization: multiple of I added to H

    Returns:
        BoxQP over the stacked inputs (u(0), ..., u(N-1))
    """
    N = len(models)
    if N < 1:
        raise DimensionMismatch("horizon must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    m = np.asarray(models[0][1]).shape[1]
    C = np.eye(3, n) if outputMap is None else np.asarray(outputMap, dtype=float)
    yref = np.asarray(yref, dtype=float)
    uref = np.asarray(uref, dtype=float)
    if C.shape != (3, n):
        raise DimensionMismatch("output map must be 3 x " + str(n))
    if yref.shape != (N, 3) or uref.shape != (N, m):
        raise DimensionMismatch(
            "references " + str(yref.shape) + " / " + str(uref.shape)
            + " do not match horizon " + str(N)
        )

    # row k of Gx / xfree is the state at k+1
    Gx = np.zeros((N, n, N * m))
    xfree = np.zeros((N, n))
    prevG = np.zeros((n, N * m))
    prevx = x0
    for k, model in enumerate(models):
        A = np.asarray(model[0], dtype=float)
        B = np.asarray(model[1], dtype=float)
        c = np.asarray(model[2], dtype=float) if len(model) > 2 and model[2] is not None else 0.0
        if A.shape != (n, n) or B.shape != (n, m):
            raise DimensionMismatch("model " + str(k) + " has inconsistent dimensions")
        Gk = A @ prevG
        Gk[:, k * m:(k + 1) * m] = B
        xk = A @ prevx + c
        Gx[k] = Gk
        xfree[k] = xk
        prevG, prevx = Gk, xk

    Gy = np.einsum("ij,kjl->kil", C, Gx).reshape(N * 3, N * m)
    Y0 = (xfree @ C.T).reshape(N * 3)
    Yr = yref.reshape(N * 3)
    Ur = uref.reshape(N * m)

    qdiag = np.tile(
        [weights.positionWeight, weights.positionWeight, weights.headingWeight], N
    )
    rstage = np.zeros(m)
    rstage[0] = weights.speedWeight
    if m > 1:
        rstage[1] = weights.steerWeight
    rdiag = np.tile(rstage, N)

    e0 = Y0 - Yr
    GtQ = Gy.T * qdiag
    H = 2.0 * (GtQ @ Gy + np.diag(rdiag))
    f = 2.0 * (GtQ @ e0 - rdiag * Ur)
    const = float(e0 @ (qdiag * e0) + Ur @ (rdiag * Ur))

    if weights.steerRateWeight > 0 and m > 1:
        rows, targets = [], []
        for k in range(N):
            row = np.zeros(N * m)
            row[k * m + 1] = 1.0
            if k > 0:
                row[(k - 1) * m + 1] = -1.0
                rows.append(row)
                targets.append(0.0)
            elif uPrev is not None:
                rows.append(row)
                targets.append(float(uPrev[1]))
        if rows:
            D = np.array(rows)
            d = np.array(targets)
            w = weights.steerRateWeight
            H += 2.0 * w * D.T @ D
            f -= 2.0 * w * D.T @ d
            const += float(w * d @ d)

    active = None
    if weights.softStateWeight > 0 and (stateLow is not None or stateHigh is not None):
        low = np.tile(np.asarray(stateLow if stateLow is not None else [-np.inf] * 3, float), N)
        high = np.tile(np.asarray(stateHigh if stateHigh is not None else [np.inf] * 3, float), N)
        at = Ur if activeAt is None else np.asarray(activeAt, dtype=float)
        ynom = Y0 + Gy @ at
        w = weights.softStateWeight
        active = np.concatenate([ynom > high, ynom < low])
        for bound, violated in ((high, ynom > high), (low, ynom < low)):
            for j in np.flatnonzero(violated):
                gj = Gy[j]
                off = Y0[j] - bound[j]
                H += 2.0 * w * np.outer(gj, gj)
                f += 2.0 * w * off * gj
                const += float(w * off * off)

    H = 0.5 * (H + H.T) + regularization * np.eye(N * m)
    return BoxQP(
        H,
        f,
        np.tile(np.asarray(lb, dtype=float), N),
        np.tile(np.asarray(ub, dtype=float), N),
        const,
        regularization,
        active,
    )
