# -*- coding: utf-8 -*-
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from rkMPC.utils.BoxQP import BoxQP, condense, kktResidual, solveBoxQP, solveSoftBoxQP
from rkMPC.utils.Config import MpcConfig
from rkMPC.utils.Errors import DimensionMismatch, IllConditioned, NotConverged


def _randomProblem(rng, n):
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    f = rng.normal(size=n) * 3.0
    lb = -rng.uniform(0.1, 1.5, n)
    ub = rng.uniform(0.1, 1.5, n)
    return BoxQP(H, f, lb, ub)


def _activeSetOracle(problem):
    """
    Enumerate every lower/upper/free assignment and keep the best feasible point
    """
    n = len(problem)
    best, bestz = np.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        z = np.zeros(n)
        free = np.array([p == 2 for p in pattern])
        for i, p in enumerate(pattern):
            if p == 0:
                z[i] = problem.lb[i]
            elif p == 1:
                z[i] = problem.ub[i]
        if np.any(free):
            Hff = problem.H[np.ix_(free, free)]
            rhs = -(problem.f[free] + problem.H[np.ix_(free, ~free)] @ z[~free])
            z[free] = np.linalg.solve(Hff, rhs)
        if np.any(z < problem.lb - 1e-12) or np.any(z > problem.ub + 1e-12):
            continue
        obj = problem.objective(z)
        if obj < best:
            best, bestz = obj, z
    return bestz, best


def test_scalarClamp():
    sol = solveBoxQP(BoxQP([[2.0]], [-4.0], [0.0], [1.0]))
    assert sol.converged
    assert sol.z[0] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(-3.0)


def test_zeroLinearTermGivesOrigin():
    rng = np.random.default_rng(0)
    p = _randomProblem(rng, 5)
    sol = solveBoxQP(BoxQP(p.H, np.zeros(5), p.lb, p.ub))
    assert_allclose(sol.z, 0.0, atol=1e-9)
    assert sol.iterations == 0


def test_matchesActiveSetEnumeration():
    rng = np.random.default_rng(42)
    for _ in range(50):
        problem = _randomProblem(rng, int(rng.integers(1, 5)))
        z, obj = _activeSetOracle(problem)
        sol = solveBoxQP(problem, tol=1e-10)
        assert sol.converged
        assert sol.objective == pytest.approx(obj, abs=1e-8 * max(1.0, abs(obj)))
        assert_allclose(sol.z, z, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_iteratesStayFeasibleAndObjectiveDecreases(n, seed):
    rng = np.random.default_rng(seed)
    problem = _randomProblem(rng, n)
    warm = rng.normal(size=n) * 5.0
    sol = solveBoxQP(problem, warm=warm, trace=True)
    assert np.all(sol.z >= problem.lb) and np.all(sol.z <= problem.ub)
    history = np.array(sol.history)
    assert np.all(np.diff(history) <= 1e-12 * np.maximum(1.0, np.abs(history[:-1])))
    assert sol.kkt == kktResidual(problem, sol.z)


def test_unboundedBoxIsLinearSolve():
    rng = np.random.default_rng(7)
    p = _randomProblem(rng, 6)
    inf = np.full(6, np.inf)
    sol = solveBoxQP(BoxQP(p.H, p.f, -inf, inf))
    assert_allclose(sol.z, np.linalg.solve(p.H, -p.f), atol=1e-8)


def test_singularHessianStillSolves():
    H = np.array([[1.0, 1.0], [1.0, 1.0]])
    sol = solveBoxQP(BoxQP(H, [-1.0, -1.0], [0.0, 0.0], [2.0, 0.25]))
    assert sol.converged
    assert sol.z.sum() == pytest.approx(1.0, abs=1e-7)


def test_errors():
    with pytest.raises(IllConditioned):
        solveBoxQP(BoxQP([[-1.0]], [0.0], [-1.0], [1.0]))
    with pytest.raises(DimensionMismatch):
        BoxQP([[1.0]], [0.0], [1.0], [0.0])
    with pytest.raises(DimensionMismatch):
        BoxQP(np.eye(2), [0.0], [0.0], [1.0])
    with pytest.raises(DimensionMismatch):
        BoxQP([[1.0, 2.0], [0.0, 1.0]], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0])


def test_strictRaisesWithBestIterate():
    rng = np.random.default_rng(1)
    p = _randomProblem(rng, 4)
    with pytest.raises(NotConverged) as info:
        solveBoxQP(p, maxIter=0, strict=True)
    z = info.value.solution.z
    assert np.all(z >= p.lb) and np.all(z <= p.ub)
    sol = solveBoxQP(p, maxIter=0)
    assert not sol.converged


#### condensing


def _rolloutCost(models, x0, yref, uref, w, U, uPrev=None):
    x = np.asarray(x0, dtype=float)
    cost = 0.0
    U = U.reshape(len(models), -1)
    for k, (A, B, c) in enumerate(models):
        x = A @ x + B @ U[k] + c
        e = x[:3] - yref[k]
        cost += w.positionWeight * (e[0] ** 2 + e[1] ** 2) + w.headingWeight * e[2] ** 2
        du = U[k] - uref[k]
        cost += w.speedWeight * du[0] ** 2 + w.steerWeight * du[1] ** 2
        if k > 0:
            cost += w.steerRateWeight * (U[k, 1] - U[k - 1, 1]) ** 2
        elif uPrev is not None:
            cost += w.steerRateWeight * (U[0, 1] - uPrev[1]) ** 2
    return cost


def test_condenseSingleStep():
    w = MpcConfig(positionWeight=1.0, headingWeight=0.5, speedWeight=0.1, steerWeight=0.2)
    A = np.eye(3)
    B = np.array([[0.05, 0.0], [0.0, 0.0], [0.0, 0.1]])
    problem = condense(
        [(A, B)], np.zeros(3), [[0.1, 0.0, 0.0]], [[1.0, 0.0]], w, [0.0, -0.4], [4.0, 0.4],
        regularization=0.0,
    )
    # x1 = (0.05 v, 0, 0.1 delta): cost (0.05 v - 0.1)^2 + 0.1 (v - 1)^2 + 0.5 (0.1 d)^2 + 0.2 d^2
    assert_allclose(problem.H, np.diag([2 * (0.0025 + 0.1), 2 * (0.005 + 0.2)]))
    assert_allclose(problem.f, [2 * (-0.005 - 0.1), 0.0])
    assert problem.const == pytest.approx(0.01 + 0.1)
    sol = solveBoxQP(problem)
    assert sol.z[0] == pytest.approx(0.105 / 0.1025)
    assert sol.z[1] == pytest.approx(0.0, abs=1e-12)


def test_condenseMatchesRollout():
    rng = np.random.default_rng(9)
    w = MpcConfig(
        positionWeight=1.3, headingWeight=0.7, speedWeight=0.05, steerWeight=0.2,
        steerRateWeight=0.4,
    )
    N = 5
    models = []
    for _ in range(N):
        models.append(
            (np.eye(3) + 0.1 * rng.normal(size=(3, 3)), rng.normal(size=(3, 2)), rng.normal(size=3))
        )
    x0 = rng.normal(size=3)
    yref = rng.normal(size=(N, 3))
    uref = rng.normal(size=(N, 2))
    uPrev = rng.normal(size=2)
    problem = condense(
        models, x0, yref, uref, w, [-1.0, -1.0], [1.0, 1.0], uPrev=uPrev, regularization=0.0
    )
    for _ in range(20):
        U = rng.normal(size=2 * N)
        assert problem.objective(U) == pytest.approx(
            _rolloutCost(models, x0, yref, uref, w, U, uPrev), rel=1e-9, abs=1e-9
        )


def test_condenseLiftedOutputMap():
    rng = np.random.default_rng(4)
    w = MpcConfig()
    n = 6
    A = 0.5 * rng.normal(size=(n, n))
    B = rng.normal(size=(n, 2))
    C = np.eye(3, n)
    z0 = rng.normal(size=n)
    N = 3
    yref = rng.normal(size=(N, 3))
    uref = np.zeros((N, 2))
    problem = condense([(A, B)] * N, z0, yref, uref, w, [-1, -1], [1, 1], outputMap=C, regularization=0.0)
    U = rng.normal(size=2 * N)
    models = [(A, B, np.zeros(n))] * N
    assert problem.objective(U) == pytest.approx(_rolloutCost(models, z0, yref, uref, w, U), rel=1e-9)


def test_softStateBoundPenalizesPredictedViolation():
    w = MpcConfig(positionWeight=0.0, headingWeight=0.0, speedWeight=1.0, steerWeight=1.0, softStateWeight=100.0)
    A = np.eye(3)
    B = np.array([[0.1, 0.0], [0.0, 0.0], [0.0, 0.0]])
    # uref pushes x to 0.2, beyond the soft bound 0.1
    args = ([(A, B)], np.zeros(3), [[0.0, 0.0, 0.0]], [[2.0, 0.0]], w, [-5, -1], [5, 1])
    free = solveBoxQP(condense(*args)).z
    bounded = solveBoxQP(
        condense(*args, stateLow=[-np.inf] * 3, stateHigh=[0.1, np.inf, np.inf])
    ).z
    assert free[0] == pytest.approx(2.0, abs=1e-6)
    assert bounded[0] < free[0]
    # (v - 2)^2 + (v - 1)^2 once the violated bound is penalized
    assert bounded[0] == pytest.approx(1.5, abs=1e-6)


def test_softBoundsFollowTheSolution():
    w = MpcConfig(positionWeight=1.0, headingWeight=0.0, speedWeight=0.0, steerWeight=0.0, softStateWeight=100.0)
    A = np.eye(3)
    B = np.array([[0.1, 0.0], [0.0, 0.0], [0.0, 0.0]])
    # the uref rollout stays at x = 0, the tracking optimum x = 0.3 breaks the bound 0.1

    def build(at):
        return condense(
            [(A, B)], np.zeros(3), [[0.3, 0.0, 0.0]], [[0.0, 0.0]], w, [-5, -1], [5, 1],
            stateLow=[-np.inf] * 3, stateHigh=[0.1, np.inf, np.inf], activeAt=at,
        )

    assert not build(None).active.any()
    assert solveBoxQP(build(None)).z[0] == pytest.approx(3.0, abs=1e-6)
    problem, sol = solveSoftBoxQP(build)
    assert problem.active[0]
    # (x - 0.3)^2 + 100 (x - 0.1)^2
    assert 0.1 * sol.z[0] == pytest.approx(10.3 / 101.0, abs=1e-7)
    assert condense([(A, B)], np.zeros(3), [[0.3, 0.0, 0.0]], [[0.0, 0.0]], w, [-5, -1], [5, 1]).active is None


def test_condenseShapeErrors():
    w = MpcConfig()
    with pytest.raises(DimensionMismatch):
        condense([], np.zeros(3), np.zeros((0, 3)), np.zeros((0, 2)), w, [0, 0], [1, 1])
    with pytest.raises(DimensionMismatch):
        condense([(np.eye(3), np.ones((3, 2)))], np.zeros(3), np.zeros((2, 3)), np.zeros((1, 2)), w, [0, 0], [1, 1])
