# -*- coding: utf-8 -*-
"""
Shared builders for the unit tests
"""

import dataclasses

import numpy as np

from rkMPC.plants.kinematic import ControlInput, VehicleState, stepKinematic
from rkMPC.utils.Config import ExperimentConfig, HarnessConfig, TrackConfig
from rkMPC.utils.RunLog import DriveLog


def kinematicConfig(source="builtin:oval", **harness):
    """
    Default configuration on the noise-free nominal plant
    """
    base = ExperimentConfig()
    return dataclasses.replace(
        base,
        plant=dataclasses.replace(base.plant, name="kinematic"),
        track=TrackConfig(source=source),
        harness=dataclasses.replace(HarnessConfig(), **harness),
    )


def nominalLog(n, params, seed=0):
    """
    Nominal-model drive on smooth random inputs
    """
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi, 2)
    state = VehicleState(0.0, 0.0, 0.0)
    rows = []
    for k in range(n):
        u = ControlInput(
            1.2 + 0.3 * np.sin(0.02 * k + phase[0]), 0.2 * np.sin(0.013 * k + phase[1])
        )
        rows.append([k * params.T, state.x, state.y, state.theta, u.v, u.delta])
        state = stepKinematic(state, u, params)
    data = np.array(rows)
    return DriveLog(data[:, 0], data[:, 1:4], data[:, 4:6], params.T)


def rigid(poses, angle, shift):
    """
    Rotate (x, y) by 'angle' about the origin, translate by 'shift', add 'angle' to
      the heading
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    c, s = np.cos(angle), np.sin(angle)
    out = poses.copy()
    out[:, 0] = c * poses[:, 0] - s * poses[:, 1] + shift[0]
    out[:, 1] = s * poses[:, 0] + c * poses[:, 1] + shift[1]
    out[:, 2] = poses[:, 2] + angle
    return out
