# -*- coding: utf-8 -*-
"""
Race-track centerlines, timed reference trajectories and tracking-error frames.

Track files follow the racetrack-database convention: comma separated, lines
starting with '#' are comments, columns x_m, y_m, w_tr_right_m, w_tr_left_m. A
plain two-column x,y file is accepted as well.

Version: 1.0.0  (October 2026)
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import splev, splprep

from rkMPC.plants.kinematic import angleDiff, wrapAngle
from rkMPC.utils.Errors import ConfigError, InfeasibleSpeed, ParseError, TooFewPoints

logwarn = "WARNING: [Track] "
loginfo = "INFO: [Track] "


@dataclass(frozen=True)
class Track:
    """
    Ordered centerline points (n x 2, meters), optional right/left widths, closed
      flag. Consecutive points are distinct.
    """

    points: np.ndarray
    widthRight: np.ndarray = None
    widthLeft: np.ndarray = None
    closed: bool = True
    name: str = ""

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """
    Reference points (x_r, y_r, theta_r, v_r, delta_r) one sampling period apart
    """

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    delta: np.ndarray
    T: float
    closed: bool = True

    def __len__(self):
        return len(self.x)

    def asArray(self):
        return np.column_stack([self.x, self.y, self.theta, self.v, self.delta])

    def point(self, i):
        i = i % len(self) if self.closed else i
        return (self.x[i], self.y[i], self.theta[i], self.v[i], self.delta[i])

    def window(self, start, count):
        """
        'count' consecutive reference points from 'start', wrapped on closed tracks

        Returns:
            (count x 5) array, or None when an open reference is exhausted
        """
        idx = np.arange(start, start + count)
        if self.closed:
            idx = idx % len(self)
        elif idx[-1] >= len(self):
            return None
        return self.asArray()[idx]

    def lapLength(self):
        pts = np.column_stack([self.x, self.y])
        seg = np.diff(pts, axis=0)
        total = float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))
        if self.closed:
            total += float(np.hypot(*(pts[0] - pts[-1])))
        return total


@dataclass(frozen=True)
class TrackingErrors:
    """
    Signed lateral error (m, left of the path positive), wrapped heading error
      (rad), and index of the reference segment start the projection falls on
    """

    lateral: float
    heading: float
    index: int


def _isNumber(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _dropDuplicates(points, widths, closed):
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(np.diff(points, axis=0) != 0.0, axis=1)
    if closed and len(points) > 1 and np.all(points[-1] == points[0]):
        keep[-1] = False
    dropped = int(np.sum(~keep))
    if dropped:
        logging.warning(logwarn + "removed " + str(dropped) + " duplicate points")
    points = points[keep]
    widths = [w[keep] if w is not None else None for w in widths]
    return points, widths


def loadTrack(source, scale=1.0, closed=True):
    """
    Parse a centerline CSV

    Args:
        source: file path
        scale: uniform factor applied to coordinates and widths
        closed: treat the centerline as a closed loop

    Returns:
        Track
    """
    if isinstance(source, str) and source.startswith("builtin:"):
        return generateTrack(source[len("builtin:"):], scale)

    rows = []
    ncols = None
    with open(source, "r", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip():
                continue
            if row[0].lstrip().startswith("#"):
                continue
            fields = [c.strip() for c in row]
            if not rows and ncols is None and not any(_isNumber(c) for c in fields):
                # column header of a plain CSV
                ncols = len(fields)
                continue
            for c in fields:
                if not _isNumber(c):
                    raise ParseError("non-numeric field '" + c + "'", lineno)
            if len(fields) not in (2, 4):
                raise ParseError("expected 2 or 4 columns, got " + str(len(fields)), lineno)
            if rows and len(fields) != len(rows[0]):
                raise ParseError("inconsistent column count", lineno)
            rows.append([float(c) for c in fields])

    if not rows:
        raise TooFewPoints("no data rows in " + str(source))
    data = np.array(rows) * float(scale)
    points = data[:, :2]
    widths = [data[:, 2], data[:, 3]] if data.shape[1] == 4 else [None, None]
    points, widths = _dropDuplicates(points, widths, closed)
    if len(points) < 3:
        raise TooFewPoints("track needs at least 3 distinct points, got " + str(len(points)))
    return Track(points, widths[0], widths[1], bool(closed), str(source))


def generateTrack(name, scale=1.0):
    """
    Builtin centerlines

    Args:
        name: 'oval' (6 m straights, 2 m radius), 'circuit' (closed loop mixing
          left and right corners), 'circle' (radius 2 m) or 'line' (20 m, open)
        scale: uniform factor

    Returns:
        Track
    """
    closed = True
    if name == "oval":
        straight, radius = 6.0, 2.0
        s1 = np.column_stack([np.linspace(0.0, straight, 61)[:-1], np.full(60, -radius)])
        phi = np.linspace(-np.pi / 2, np.pi / 2, 64)[:-1]
        a1 = np.column_stack([straight + radius * np.cos(phi), radius * np.sin(phi)])
        s2 = np.column_stack([np.linspace(straight, 0.0, 61)[:-1], np.full(60, radius)])
        a2 = np.column_stack([-radius * np.cos(phi), -radius * np.sin(phi)])
        pts = np.vstack([s1, a1, s2, a2])
    elif name == "circuit":
        phi = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        r = 5.0 * (1.0 + 0.2 * np.cos(2.0 * phi) + 0.08 * np.sin(3.0 * phi))
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    elif name == "circle":
        phi = np.linspace(0.0, 2.0 * np.pi, 200, endpoint=False)
        pts = np.column_stack([2.0 * np.cos(phi), 2.0 * np.sin(phi)])
    elif name == "line":
        pts = np.column_stack([np.linspace(0.0, 20.0, 201), np.zeros(201)])
        closed = False
    else:
        raise ParseError("unknown builtin track '" + str(name) + "'")
    pts = pts * float(scale)
    width = np.full(len(pts), 1.0 * float(scale))
    return Track(pts, width, width.copy(), closed, "builtin:" + name)


def _spline(track):
    pts = track.points
    if track.closed:
        pts = np.vstack([pts, pts[:1]])
    k = min(3, len(pts) - 1)
    tck, _ = splprep([pts[:, 0], pts[:, 1]], s=0, k=k, per=1 if track.closed else 0)
    return tck


def _circleCurvature(p0, p1, p2):
    """
    Signed curvature of the circle through three points (rows), left turns positive
    """
    a = p1 - p0
    b = p2 - p1
    c = p2 - p0
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    denom = (
        np.hypot(a[..., 0], a[..., 1])
        * np.hypot(b[..., 0], b[..., 1])
        * np.hypot(c[..., 0], c[..., 1])
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(denom > 0, 2.0 * cross / denom, 0.0)
    return kappa


def _pathCurvature(pts, closed):
    """
    Three-point circle curvature at every polyline point; a closed polyline wraps
      around, an open one repeats the neighbouring value at its ends
    """
    if closed:
        return _circleCurvature(np.roll(pts, 1, axis=0), pts, np.roll(pts, -1, axis=0))
    kappa = np.zeros(len(pts))
    kappa[1:-1] = _circleCurvature(pts[:-2], pts[1:-1], pts[2:])
    kappa[0] = kappa[1]
    kappa[-1] = kappa[-2]
    return kappa


def buildReference(track, refcfg, params):
    """
    Resample the centerline into a timed reference

    Args:
        track: Track
        refcfg: ReferenceConfig (profile, speed, vCap, aLatMax, vMinProfile)
        params: VehicleParams

    Returns:
        ReferenceTrajectory
    """
    T = params.T
    tck = _spline(track)
    ndense = max(4000, 40 * len(track))
    u = np.linspace(0.0, 1.0, ndense)
    xd, yd = splev(u, tck)
    sdense = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xd), np.diff(yd)))])
    total = sdense[-1]

    if refcfg.profile == "constant":
        vprofile = np.full(ndense, float(refcfg.speed))
    else:
        dense = np.column_stack([xd, yd])
        if track.closed:
            # the last dense sample repeats the first
            kappa = _pathCurvature(dense[:-1], True)
            kappa = np.append(kappa, kappa[0])
        else:
            kappa = _pathCurvature(dense, False)
        with np.errstate(divide="ignore"):
            vlat = np.sqrt(refcfg.aLatMax / np.abs(kappa))
        vprofile = np.minimum(refcfg.vCap, vlat)
    vprofile = np.clip(vprofile, params.vMin, params.vMax)
    if np.min(vprofile) < refcfg.vMinProfile:
        worst = int(np.argmin(vprofile))
        raise InfeasibleSpeed(
            "reference speed "
            + "{:.3f}".format(vprofile[worst])
            + " m/s at s = "
            + "{:.2f}".format(sdense[worst])
            + " m is below the minimum "
            + str(refcfg.vMinProfile)
        )

    if not np.min(vprofile) > 0.0:
        raise ConfigError(
            "reference speed must be positive inside the actuator box, got "
            + "{:.3f}".format(float(np.min(vprofile))) + " m/s",
            "reference.speed" if refcfg.profile == "constant" else "reference.vMinProfile",
        )

    svals = [0.0]
    while True:
        step = float(np.interp(svals[-1], sdense, vprofile)) * T
        nxt = svals[-1] + step
        if nxt >= total - (0.5 * step if track.closed else 0.0):
            break
        svals.append(nxt)
    svals = np.array(svals)
    if track.closed:
        # stretch so the closing gap matches the local step
        closing = float(np.interp(svals[-1], sdense, vprofile)) * T
        svals = svals * (total / (svals[-1] + closing))
    if len(svals) < 3:
        raise InfeasibleSpeed("track is shorter than three reference steps")

    uq = np.interp(svals, sdense, u)
    xr, yr = splev(uq, tck)
    dx, dy = splev(uq, tck, der=1)
    xr = np.asarray(xr)
    yr = np.asarray(yr)
    theta = wrapAngle(np.arctan2(dy, dx))
    v = np.interp(svals, sdense, vprofile)

    kappa = _pathCurvature(np.column_stack([xr, yr]), track.closed)
    delta = np.arctan(params.wheelbase * kappa)
    clipped = np.clip(delta, params.deltaMin, params.deltaMax)
    if np.any(clipped != delta):
        logging.warning(
            logwarn + str(int(np.sum(clipped != delta))) + " reference steering "
            "values exceed the steering box and were clamped"
        )
    logging.info(
        loginfo + "reference with " + str(len(svals)) + " points over "
        + "{:.2f}".format(total) + " m"
    )
    return ReferenceTrajectory(xr, yr, theta, v, clipped, float(T), bool(track.closed))


def project(state, ref):
    """
    Closest point on the piecewise-linear reference path

    Args:
        state: VehicleState
        ref: ReferenceTrajectory

    Returns:
        TrackingErrors
    """
    pts = np.column_stack([ref.x, ref.y])
    if ref.closed:
        nxt = np.roll(pts, -1, axis=0)
        thnext = np.roll(ref.theta, -1)
        starts, ends, th0, th1 = pts, nxt, ref.theta, thnext
    else:
        starts, ends, th0, th1 = pts[:-1], pts[1:], ref.theta[:-1], ref.theta[1:]
        if len(starts) == 0:
            starts, ends, th0, th1 = pts, pts, ref.theta, ref.theta
    d = ends - starts
    p = np.array([state.x, state.y])
    rel = p - starts
    seglen2 = np.sum(d * d, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(seglen2 > 0, np.sum(rel * d, axis=1) / seglen2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    q = starts + t[:, None] * d
    dist2 = np.sum((p - q) ** 2, axis=1)
    i = int(np.argmin(dist2))
    dist = math.sqrt(dist2[i])
    cross = d[i, 0] * rel[i, 1] - d[i, 1] * rel[i, 0]
    lateral = math.copysign(dist, cross) if cross != 0.0 else 0.0
    thproj = th0[i] + t[i] * angleDiff(th1[i], th0[i])
    heading = angleDiff(state.theta, thproj)
    return TrackingErrors(float(lateral), float(heading), i)
