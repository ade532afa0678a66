# -*- coding: utf-8 -*-
"""
Residual Koopman pipeline: local-frame preprocessing of drive logs, recovery of
the executed input by inverting the nominal model, EDMD least squares, the neural
lifting network, pseudo-Huber training, and the JSON model file.

Lifted state z = [x, y, theta, psi(x, y, theta)]; the model evolves
    z(t+1) = A z(t) + B u(t)
with u the control residual (mode 'residual') or the absolute input (mode
'absolute', the plain Koopman baseline).

Version: 1.0.0  (October 2026)
"""

import copy
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from rkMPC.plants.kinematic import ControlInput, rk4Step, wrapAngle
from rkMPC.utils.Errors import (
    Diverged,
    DimensionMismatch,
    InsufficientData,
    InversionFailure,
    ParseError,
)
from rkMPC.utils.RunLog import readCsv, writeCsv

logwarn = "WARNING: [Koopman] "
loginfo = "INFO: [Koopman] "
logdebug = "DEBUG: [Koopman] "

MODEL_FORMAT = "rkmpc-koopman"
MODEL_VERSION = 1
DATASET_COLUMNS = ["x", "y", "theta", "x_next", "y_next", "theta_next", "u_v", "u_delta"]


#### Local frames


def transformToLocal(origin, states):
    """
    Express poses in the frame of 'origin': translate by -origin position, rotate by
      -origin heading, headings become wrap(theta - theta0). Broadcasts, so an
      (M, 1, 3) stack of origins transforms an (M, k, 3) stack of windows.

    Args:
        origin: VehicleState or array (..., 3)
        states: array (..., 3)

    Returns:
        array shaped like the broadcast of origin and states
    """
    o = origin.asArray() if hasattr(origin, "asArray") else np.asarray(origin, dtype=float)
    s = np.asarray(states, dtype=float)
    dx = s[..., 0] - o[..., 0]
    dy = s[..., 1] - o[..., 1]
    c = np.cos(o[..., 2])
    sn = np.sin(o[..., 2])
    return np.stack(
        [c * dx + sn * dy, -sn * dx + c * dy, wrapAngle(s[..., 2] - o[..., 2])], axis=-1
    )


def toGlobal(origin, local):
    """
    Inverse of transformToLocal
    """
    o = origin.asArray() if hasattr(origin, "asArray") else np.asarray(origin, dtype=float)
    s = np.asarray(local, dtype=float)
    c = np.cos(o[..., 2])
    sn = np.sin(o[..., 2])
    return np.stack(
        [
            o[..., 0] + c * s[..., 0] - sn * s[..., 1],
            o[..., 1] + sn * s[..., 0] + c * s[..., 1],
            wrapAngle(s[..., 2] + o[..., 2]),
        ],
        axis=-1,
    )


#### Executed-input recovery


def _stepResidual(states, nxt, inputs, params):
    pred = rk4Step(states, inputs, params.wheelbase, params.T)
    r = pred - nxt
    r[..., 2] = wrapAngle(r[..., 2])
    return r


def _initialGuess(states, nxt, params):
    T = params.T
    d = nxt[:, :2] - states[:, :2]
    dtheta = wrapAngle(nxt[:, 2] - states[:, 2])
    chord = np.hypot(d[:, 0], d[:, 1])
    half = 0.5 * dtheta
    # arc length from chord: s = c (dtheta/2) / sin(dtheta/2)
    factor = np.where(np.abs(half) > 1e-9, half / np.where(half == 0, 1.0, np.sin(half)), 1.0)
    mid = states[:, 2] + half
    forward = d[:, 0] * np.cos(mid) + d[:, 1] * np.sin(mid)
    v = np.sign(forward) * chord * factor / T
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(
            np.abs(v) > 1e-9, np.arctan(params.wheelbase * dtheta / (v * T)), 0.0
        )
    return np.column_stack([v, delta])


def invertTransitions(states, nxt, params, iterations=10):
    """
    Batch least-squares inversion of the nominal RK4 step: for each row find (v, delta)
      in the actuator box minimizing |step_kinematic(state, u) - next|^2

    Args:
        states, nxt: (M, 3) arrays one period apart
        params: VehicleParams

    Returns:
        tuple (inputs (M, 2), residual norms (M,))
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    nxt = np.atleast_2d(np.asarray(nxt, dtype=float))
    lo = params.lowerBound()
    hi = params.upperBound()
    u = np.clip(_initialGuess(states, nxt, params), lo, hi)
    still = (np.abs(nxt - states).max(axis=1) == 0.0)
    u[still] = 0.0
    u = np.clip(u, lo, hi)
    h = 1e-7
    for _ in range(iterations):
        r = _stepResidual(states, nxt, u, params)
        J = np.empty((len(u), 3, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            J[:, :, j] = (
                _stepResidual(states, nxt, u + e, params)
                - _stepResidual(states, nxt, u - e, params)
            ) / (2.0 * h)
        JtJ = np.einsum("mki,mkj->mij", J, J) + 1e-12 * np.eye(2)
        Jtr = np.einsum("mki,mk->mi", J, r)
        step = np.linalg.solve(JtJ, Jtr[..., None])[..., 0]
        u = np.clip(u - step, lo, hi)
        u[still] = 0.0
    res = np.linalg.norm(_stepResidual(states, nxt, u, params), axis=1)
    # delta is unobservable without motion
    u[np.abs(u[:, 0]) < 1e-9, 1] = 0.0
    return u, res


def recoverExecutedInput(localState, localNext, params, threshold=0.05):
    """
    Input that best explains one observed transition under the nominal model

    Args:
        localState, localNext: VehicleState or (3,) arrays one period apart
        params: VehicleParams
        threshold: largest accepted residual norm

    Returns:
        ControlInput
    """
    s = localState.asArray() if hasattr(localState, "asArray") else localState
    n = localNext.asArray() if hasattr(localNext, "asArray") else localNext
    u, res = invertTransitions(np.atleast_2d(s), np.atleast_2d(n), params)
    if res[0] > threshold:
        raise InversionFailure(
            "transition not reachable under the nominal model, residual "
            + "{:.3e}".format(res[0])
        )
    return ControlInput.fromArray(u[0])


#### Datasets


@dataclass(frozen=True)
class ResidualSample:
    state: np.ndarray
    nextState: np.ndarray
    du: np.ndarray


@dataclass
class KoopmanDataset:
    """
    Local-frame transitions (X -> Xnext) and their inputs U: control residuals for
      mode 'residual', commanded inputs for mode 'absolute'
    """

    X: np.ndarray
    Xnext: np.ndarray
    U: np.ndarray
    mode: str = "residual"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.X)

    def __getitem__(self, i):
        return ResidualSample(self.X[i], self.Xnext[i], self.U[i])

    def subsample(self, count, seed=0):
        """
        Seeded subset of 'count' samples, kept in their original order
        """
        if count > len(self):
            raise InsufficientData(
                "requested " + str(int(count)) + " samples from a " + self.mode
                + " dataset of " + str(len(self))
            )
        if count == len(self):
            return self
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(self), size=int(count), replace=False))
        meta = dict(self.meta)
        meta["samples"] = int(count)
        return KoopmanDataset(self.X[keep], self.Xnext[keep], self.U[keep], self.mode, meta)

    def save(self, path):
        meta = dict(self.meta)
        meta["mode"] = self.mode
        writeCsv(path, DATASET_COLUMNS, np.column_stack([self.X, self.Xnext, self.U]), meta)
        logging.info(loginfo + "dataset with " + str(len(self)) + " samples saved to " + str(path))

    @classmethod
    def load(cls, path):
        data, meta = readCsv(path, DATASET_COLUMNS)
        mode = meta.pop("mode", "residual")
        if mode not in ("residual", "absolute"):
            raise ParseError("unknown dataset mode '" + mode + "'")
        return cls(data[:, 0:3], data[:, 3:6], data[:, 6:8], mode, meta)


def _windows(log, pp):
    """
    Seeded origin selection and local-frame windows

    Returns:
        tuple (origins kept, local windows (K, Np, 3), record indices (K, Np),
          origins drawn, windows skipped)
    """
    N = len(log)
    Np = int(pp.windowLength)
    if N < Np + 1:
        raise InsufficientData(
            "drive log has " + str(N) + " records, windows need " + str(Np + 1)
        )
    count = int(math.floor(pp.conversionRatio * N))
    rng = np.random.default_rng(pp.seed)
    origins = np.sort(rng.choice(N, size=count, replace=False))
    fits = origins + Np - 1 <= N - 1
    skipped = int(np.sum(~fits))
    if skipped:
        logging.warning(
            logwarn + "WindowOverrun: skipped " + str(skipped) + " origins whose window "
            "overruns the end of the log"
        )
    kept = origins[fits]
    segment = log.segmentIds()
    crossing = segment[kept] != segment[kept + Np - 1]
    if np.any(crossing):
        logging.warning(
            logwarn + "WindowOverrun: skipped " + str(int(np.sum(crossing))) + " origins "
            "whose window crosses a drive reset"
        )
        skipped += int(np.sum(crossing))
        kept = kept[~crossing]
    idx = kept[:, None] + np.arange(Np)[None, :]
    local = transformToLocal(log.states[kept][:, None, :], log.states[idx])
    return kept, local, idx, count, skipped


def _logCounts(N, Np, ratio, drawn, kept, samples):
    logging.info(
        loginfo + "records N = " + str(N) + ", window N_p = " + str(Np)
        + ": N x N_p = " + str(N * Np)
        + ", floor(ratio N) x N_p = " + str(drawn * Np)
        + ", floor(ratio N) x (N_p - 1) = " + str(drawn * (Np - 1))
    )
    logging.info(
        loginfo + str(kept) + " windows kept, " + str(samples) + " samples emitted"
    )


def buildResidualDataset(log, params, pp, predictor=None):
    """
    Turn a drive log into residual training samples

    Each of floor(conversionRatio N) seeded origins opens a window of N_p records
      expressed in the origin's frame. For every consecutive pair, U_p is the input
      the linear MPC predicts and U_r the input recovered by inverting the nominal
      model; the sample carries du = U_r - U_p. Pairs whose inversion residual
      exceeds pp.inversionThreshold are skipped and counted.

    Args:
        log: DriveLog
        params: VehicleParams
        pp: PreprocessConfig
        predictor: callable(global pose array (3,)) -> (v, delta), required when
          pp.predictedInput is 'resolve'

    Returns:
        KoopmanDataset, mode 'residual'
    """
    kept, local, idx, drawn, skipped = _windows(log, pp)
    Np = int(pp.windowLength)
    X = local[:, :-1, :].reshape(-1, 3)
    Xn = local[:, 1:, :].reshape(-1, 3)
    src = idx[:, :-1].reshape(-1)

    if pp.predictedInput == "resolve":
        if predictor is None:
            raise DimensionMismatch("predictedInput 'resolve' needs a predictor")
        cache = {}
        Up = np.empty((len(src), 2))
        for k, j in enumerate(src):
            if j not in cache:
                cache[j] = np.asarray(predictor(log.states[j]), dtype=float)
            Up[k] = cache[j]
    else:
        Up = log.inputs[src]

    Ur, res = invertTransitions(X, Xn, params)
    ok = res <= pp.inversionThreshold
    failed = int(np.sum(~ok))
    if failed:
        logging.warning(
            logwarn + str(failed) + " transitions failed the executed-input inversion "
            "(residual above " + str(pp.inversionThreshold) + ") and were skipped"
        )
    _logCounts(len(log), Np, pp.conversionRatio, drawn, len(kept), int(np.sum(ok)))
    meta = {
        "records": len(log),
        "origins": drawn,
        "windowsSkipped": skipped,
        "inversionFailures": failed,
        "windowLength": Np,
        "samples": int(np.sum(ok)),
    }
    return KoopmanDataset(X[ok], Xn[ok], (Ur - Up)[ok], "residual", meta)


def buildAbsoluteDataset(log, params, pp):
    """
    Same windowing as buildResidualDataset, carrying the commanded absolute input;
      trains the plain Koopman baseline

    Returns:
        KoopmanDataset, mode 'absolute'
    """
    kept, local, idx, drawn, skipped = _windows(log, pp)
    Np = int(pp.windowLength)
    X = local[:, :-1, :].reshape(-1, 3)
    Xn = local[:, 1:, :].reshape(-1, 3)
    U = log.inputs[idx[:, :-1].reshape(-1)]
    _logCounts(len(log), Np, pp.conversionRatio, drawn, len(kept), len(X))
    meta = {
        "records": len(log),
        "origins": drawn,
        "windowsSkipped": skipped,
        "inversionFailures": 0,
        "windowLength": Np,
        "samples": len(X),
    }
    return KoopmanDataset(X, Xn, U, "absolute", meta)


#### Least squares


def fitEDMD(Z, Znext, U, rcond=1e-10):
    """
    Least-squares (A, B) minimizing sum |z(t+1) - A z(t) - B u(t)|^2, minimum-norm on
      rank deficiency (singular values below rcond * sigma_max are dropped)

    Args:
        Z, Znext: (M, n) lifted states
        U: (M, m) inputs

    Returns:
        tuple (A (n, n), B (n, m))
    """
    Z = np.asarray(Z, dtype=float)
    Znext = np.asarray(Znext, dtype=float)
    U = np.asarray(U, dtype=float)
    if Z.ndim != 2 or Znext.shape != Z.shape or U.ndim != 2 or len(U) != len(Z):
        raise DimensionMismatch(
            "Z " + str(Z.shape) + ", Znext " + str(Znext.shape) + ", U " + str(U.shape)
        )
    n = Z.shape[1]
    m = U.shape[1]
    if len(Z) < n + 2:
        raise InsufficientData(
            str(len(Z)) + " samples for a " + str(n) + "-dimensional lifted state"
        )
    W, _, _, _ = np.linalg.lstsq(np.hstack([Z, U]), Znext, rcond=rcond)
    return W[:n].T.copy(), W[n:n + m].T.copy()


def fitOutputMap(states, lifted, tol=1e-12):
    """
    Output map C with states = C z. With the stacked lifting the selection [I3 0] is
      exact; its mean squared residual is checked and a least-squares map is
      returned instead when it fails.

    Returns:
        tuple (C (3, n), mean squared residual of the selection matrix)
    """
    states = np.asarray(states, dtype=float)
    lifted = np.asarray(lifted, dtype=float)
    if len(states) != len(lifted):
        raise DimensionMismatch("states and lifted have different lengths")
    n = lifted.shape[1]
    if n >= 3:
        residual = float(np.mean((states - lifted[:, :3]) ** 2))
    else:
        residual = math.inf
    if residual <= tol:
        return np.eye(3, n), residual
    logging.warning(
        logwarn + "lifted state does not contain the raw state, selection residual "
        + "{:.3e}".format(residual)
    )
    W, _, _, _ = np.linalg.lstsq(lifted, states, rcond=1e-10)
    return W.T.copy(), residual


#### Lifting network


class LiftingNetwork(torch.nn.Module):
    """
    psi: R^3 -> R^nLift, two fully connected layers with ReLU after the hidden layer
      (and optionally after the output layer)
    """

    def __init__(self, nLift=16, hidden=64, reluOutput=False):
        super().__init__()
        self.nLift = int(nLift)
        self.hidden = int(hidden)
        self.reluOutput = bool(reluOutput)
        self.fc1 = torch.nn.Linear(3, self.hidden).double()
        self.fc2 = torch.nn.Linear(self.hidden, self.nLift).double()

    def forward(self, x):
        out = self.fc2(torch.relu(self.fc1(x)))
        if self.reluOutput:
            out = torch.relu(out)
        return out

    def liftTensor(self, x):
        return torch.cat([x, self(x)], dim=-1)


def liftBatch(net, states):
    """
    Stacked lifting of an (M, 3) array, returns (M, 3 + nLift)
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    with torch.no_grad():
        psi = net(torch.from_numpy(states)).numpy()
    return np.hstack([states, psi])


def lift(net, state):
    """
    z = [x, y, theta, psi(x, y, theta)]

    Args:
        net: LiftingNetwork
        state: VehicleState or (3,) array

    Returns:
        (3 + nLift,) array
    """
    s = state.asArray() if hasattr(state, "asArray") else np.asarray(state, dtype=float)
    return liftBatch(net, s[None, :])[0]


def huberCost(La, deltaHuber):
    """
    Pseudo-Huber value deltaHuber^2 (sqrt(1 + (La/deltaHuber)^2) - 1); accepts floats,
      numpy arrays and torch tensors
    """
    r = La / deltaHuber
    return deltaHuber ** 2 * ((1.0 + r * r) ** 0.5 - 1.0)


def liftingLoss(net, A, B, X, Xn, U, cfg):
    """
    Pseudo-Huber of the mean absolute one-step prediction error of the lifted model

    Args:
        net: LiftingNetwork
        A, B: torch tensors
        X, Xn, U: torch tensors of states, next states, inputs
        cfg: TrainConfig (deltaHuber, lossScope)

    Returns:
        scalar tensor
    """
    Z = net.liftTensor(X)
    Zn = net.liftTensor(Xn)
    err = Zn - (Z @ A.T + U @ B.T)
    if cfg.lossScope == "lifted":
        err = err[:, 3:]
    return huberCost(torch.mean(torch.abs(err)), cfg.deltaHuber)


#### Model


@dataclass
class KoopmanModel:
    """
    Lifted linear model z(t+1) = A z(t) + B u(t), y = C z
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    net: LiftingNetwork
    mode: str = "residual"
    meta: dict = field(default_factory=dict)

    @property
    def nLift(self):
        return self.net.nLift

    def lift(self, state):
        return lift(self.net, state)

    def predict(self, z, u):
        return self.A @ np.asarray(z, dtype=float) + self.B @ np.asarray(u, dtype=float)

    def oneStepError(self, dataset):
        """
        Mean absolute one-step error on the raw (x, y, theta) block
        """
        Z = liftBatch(self.net, dataset.X)
        Zp = Z @ self.A.T + dataset.U @ self.B.T
        return float(np.mean(np.abs(Zp @ self.C.T - dataset.Xnext)))

    def toDict(self):
        layers = []
        for layer in (self.net.fc1, self.net.fc2):
            layers.append(
                {
                    "weight": layer.weight.detach().numpy().tolist(),
                    "bias": layer.bias.detach().numpy().tolist(),
                }
            )
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "mode": self.mode,
            "dims": {
                "state": 3,
                "input": int(self.B.shape[1]),
                "lift": self.net.nLift,
                "hidden": self.net.hidden,
            },
            "reluOutput": self.net.reluOutput,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "layers": layers,
            "meta": self.meta,
        }

    @classmethod
    def fromDict(cls, doc):
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise ParseError("not a version " + str(MODEL_VERSION) + " Koopman model file")
        dims = doc["dims"]
        net = LiftingNetwork(dims["lift"], dims["hidden"], doc.get("reluOutput", False))
        with torch.no_grad():
            for layer, saved in zip((net.fc1, net.fc2), doc["layers"]):
                layer.weight.copy_(torch.tensor(saved["weight"], dtype=torch.float64))
                layer.bias.copy_(torch.tensor(saved["bias"], dtype=torch.float64))
        A = np.array(doc["A"], dtype=float)
        B = np.array(doc["B"], dtype=float)
        C = np.array(doc["C"], dtype=float)
        n = 3 + dims["lift"]
        if A.shape != (n, n) or B.shape != (n, dims["input"]) or C.shape != (3, n):
            raise DimensionMismatch("model matrices do not match the stored dimensions")
        return cls(A, B, C, net, doc.get("mode", "residual"), dict(doc.get("meta", {})))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.toDict(), f, indent=1, sort_keys=True)
        logging.info(loginfo + "model saved to " + str(path))

    @classmethod
    def load(cls, path):
        with open(path, "r") as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as e:
                raise ParseError("malformed model file: " + e.msg, e.lineno)
        return cls.fromDict(doc)


def _snapshot(net, A, B):
    return copy.deepcopy(net.state_dict()), A.clone(), B.clone()


def _modelFrom(net, snapshot, mode, meta):
    state, A, B = snapshot
    best = copy.deepcopy(net)
    best.load_state_dict(state)
    n = A.shape[0]
    return KoopmanModel(
        A.numpy().copy(), B.numpy().copy(), np.eye(3, n), best, mode, dict(meta)
    )


def trainLifting(dataset, cfg, net=None):
    """
    Alternate least-squares refits of (A, B) with Adam steps on the network weights
      against the pseudo-Huber loss; keeps the best-loss checkpoint and finishes
      with a refit on it

    Args:
        dataset: KoopmanDataset
        cfg: TrainConfig
        net: optional initialized LiftingNetwork

    Returns:
        KoopmanModel
    """
    if len(dataset) < 100:
        raise InsufficientData("training needs at least 100 samples, got " + str(len(dataset)))
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(int(cfg.seed))
    if net is None:
        net = LiftingNetwork(cfg.nLift, cfg.hidden, cfg.reluOutput)
    X = torch.from_numpy(np.ascontiguousarray(dataset.X, dtype=float))
    Xn = torch.from_numpy(np.ascontiguousarray(dataset.Xnext, dtype=float))
    U = torch.from_numpy(np.ascontiguousarray(dataset.U, dtype=float))
    M = len(dataset)

    def refit():
        with torch.no_grad():
            Z = net.liftTensor(X).numpy()
            Zn = net.liftTensor(Xn).numpy()
        A, B = fitEDMD(Z, Zn, U.numpy())
        return torch.from_numpy(A), torch.from_numpy(B)

    def fullLoss(A, B):
        with torch.no_grad():
            return float(liftingLoss(net, A, B, X, Xn, U, cfg))

    meta = {
        "samples": M,
        "nLift": net.nLift,
        "hidden": net.hidden,
        "epochs": int(cfg.epochs),
        "deltaHuber": cfg.deltaHuber,
        "lossScope": cfg.lossScope,
        "seed": int(cfg.seed),
    }
    meta.update({k: v for k, v in dataset.meta.items() if k in ("records", "origins")})

    A, B = refit()
    initial = fullLoss(A, B)
    if not math.isfinite(initial):
        raise Diverged("initial loss is not finite", None)
    best, bestEpoch = initial, 0
    checkpoint = _snapshot(net, A, B)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learningRate)
    batch = int(cfg.batchSize)

    for epoch in range(1, int(cfg.epochs) + 1):
        if (epoch - 1) % int(cfg.refitEvery) == 0:
            A, B = refit()
        perm = torch.randperm(M, generator=gen)
        for start in range(0, M, batch):
            sel = perm[start:start + batch]
            optimizer.zero_grad()
            loss = liftingLoss(net, A, B, X[sel], Xn[sel], U[sel], cfg)
            if not torch.isfinite(loss):
                meta.update({"bestLoss": best, "bestEpoch": bestEpoch})
                raise Diverged(
                    "loss became non-finite at epoch " + str(epoch),
                    _modelFrom(net, checkpoint, dataset.mode, meta),
                )
            loss.backward()
            optimizer.step()
        current = fullLoss(A, B)
        if not math.isfinite(current):
            meta.update({"bestLoss": best, "bestEpoch": bestEpoch})
            raise Diverged(
                "loss became non-finite at epoch " + str(epoch),
                _modelFrom(net, checkpoint, dataset.mode, meta),
            )
        if current < best:
            best, bestEpoch = current, epoch
            checkpoint = _snapshot(net, A, B)
        if cfg.logEvery > 0 and epoch % int(cfg.logEvery) == 0:
            logging.info(
                loginfo + "epoch " + str(epoch) + " loss " + "{:.6e}".format(current)
                + " best " + "{:.6e}".format(best)
            )

    net.load_state_dict(checkpoint[0])
    A, B = refit()
    final = fullLoss(A, B)
    if final > best:
        # the refit minimizes squared error; keep the checkpoint matrices if it loses
        A, B = checkpoint[1], checkpoint[2]
        final = best
    with torch.no_grad():
        Z = net.liftTensor(X).numpy()
    C, residual = fitOutputMap(dataset.X, Z)
    meta.update(
        {
            "initialLoss": initial,
            "bestLoss": best,
            "bestEpoch": bestEpoch,
            "finalLoss": final,
            "outputResidual": residual,
        }
    )
    logging.info(
        loginfo + "training finished: initial loss " + "{:.6e}".format(initial)
        + ", final " + "{:.6e}".format(final)
    )
    return KoopmanModel(A.numpy().copy(), B.numpy().copy(), C, net, dataset.mode, meta)
