"""Jerk-minimizing quintic segments and closed-form kinematic envelopes.

A segment of duration T runs from (p0, v0, a=0) to (p1, a=0) with free end
velocity, minimizing the integral of squared jerk. Per axis the optimum is

    p(t) = (alpha/120) t^5 + (beta/24) t^4 + (gamma/6) t^3 + v0 t + p0
    v(t) = (alpha/24)  t^4 + (beta/6)  t^3 + (gamma/2) t^2 + v0
    a(t) = (alpha/6)   t^3 + (beta/2)  t^2 + gamma t
    j(t) = (alpha/2)   t^2 +  beta     t   + gamma

with, writing c = p1 - p0 - v0 T,

    alpha = 45 c / T^5,  beta = -45 c / T^4,  gamma = 15 c / T^3,

so every state is linear in (p0, v0, p1). The per-state sensitivities to c
(K1, K3, K4, K5 below for position/velocity/acceleration/jerk) are one-signed
or endpoint-extremal on [0, T], which is what makes the whole-segment
velocity/acceleration/jerk envelopes collapse to linear bounds on p1 - p0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KinematicLimits:
    """Per-axis box limits; each lower bound negative, each upper positive."""

    v_min: float
    v_max: float
    a_min: float
    a_max: float
    j_min: float
    j_max: float

    def __post_init__(self):
        for lo, hi, what in (
            (self.v_min, self.v_max, "velocity"),
            (self.a_min, self.a_max, "acceleration"),
            (self.j_min, self.j_max, "jerk"),
        ):
            if not (lo < 0.0 < hi):
                raise ValueError(f"{what} limits must straddle zero, got [{lo}, {hi}]")


@dataclass(frozen=True)
class SplineSegment:
    """One quintic segment; coefficient arrays are per axis (3,)."""

    T: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    p0: np.ndarray
    v0: np.ndarray
    p1: np.ndarray

    @property
    def end_velocity(self) -> np.ndarray:
        k3T = k3(self.T, self.T)
        return k3T * (self.p1 - self.p0) + (1.0 - self.T * k3T) * self.v0


def solve_segment(p0, v0, p1, T: float) -> SplineSegment:
    """Minimum-jerk segment between (p0, v0, a=0) and (p1, a=0), v(T) free."""
    if T <= 0.0:
        raise ValueError("segment duration must be positive")
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    c = p1 - p0 - v0 * T
    return SplineSegment(
        T=float(T),
        alpha=45.0 * c / T**5,
        beta=-45.0 * c / T**4,
        gamma=15.0 * c / T**3,
        p0=p0,
        v0=v0,
        p1=p1,
    )


def sample_segment(seg: SplineSegment, t: float):
    """Position, velocity, acceleration, jerk at local time t in [0, T]."""
    if not (0.0 <= t <= seg.T + 1e-12):
        raise ValueError(f"sample time {t} outside segment [0, {seg.T}]")
    a5, a4, a3 = seg.alpha, seg.beta, seg.gamma
    p = a5 / 120.0 * t**5 + a4 / 24.0 * t**4 + a3 / 6.0 * t**3 + seg.v0 * t + seg.p0
    v = a5 / 24.0 * t**4 + a4 / 6.0 * t**3 + a3 / 2.0 * t**2 + seg.v0
    a = a5 / 6.0 * t**3 + a4 / 2.0 * t**2 + a3 * t
    j = a5 / 2.0 * t**2 + a4 * t + a3
    return p, v, a, j


def k1(t, T):
    """Position sensitivity to c = p1 - p0 - v0 T; p(t) = p0 + v0 t + K1 c."""
    return 0.375 * t**5 / T**5 - 1.875 * t**4 / T**4 + 2.5 * t**3 / T**3


def k3(t, T):
    """Velocity sensitivity, (90 t^4)/(48 T^5) - (90 t^3)/(12 T^4) + (30 t^2)/(4 T^3).

    Monotone increasing from 0 to K3(T) = 15/(8T) on [0, T]; equals
    (15 t^2 / (8 T^5)) (t - 2T)^2, hence one-signed.
    """
    return 90.0 * t**4 / (48.0 * T**5) - 90.0 * t**3 / (12.0 * T**4) + 30.0 * t**2 / (
        4.0 * T**3
    )


def k4(t, T):
    """Acceleration sensitivity, (90 t^3)/(12 T^5) - (90 t^2)/(4 T^4) + (30 t)/(2 T^3).

    Equals (15 t / (2 T^5)) (t - T)(t - 2T): zero at both segment ends and
    nonnegative in between.
    """
    return 90.0 * t**3 / (12.0 * T**5) - 90.0 * t**2 / (4.0 * T**4) + 30.0 * t / (
        2.0 * T**3
    )


def k5(t, T):
    """Jerk sensitivity; affine-decreasing-slope quadratic with vertex at t = T,
    so extremal at the segment ends: K5(0) = 15/T^3, K5(T) = -15/(2 T^3)."""
    return 22.5 * t**2 / T**5 - 45.0 * t / T**4 + 15.0 / T**3


def k4_peak(T: float) -> tuple[float, float]:
    """Interior argmax of K4 on [0, T] and its value.

    dK4/dt is quadratic with roots T (1 +/- 1/sqrt(3)); the in-range
    stationary point is compared against both endpoints (where K4 = 0).
    """
    candidates = [0.0, T]
    disc = 1.0 / math.sqrt(3.0)
    for root in (T * (1.0 - disc), T * (1.0 + disc)):
        if 0.0 <= root <= T:
            candidates.append(root)
    t_star = max(candidates, key=lambda t: k4(t, T))
    return t_star, k4(t_star, T)


@dataclass(frozen=True)
class SegmentBounds:
    """Per-axis linear bounds on the waypoint displacement dp = p1 - p0.

    dp within all six intervals implies the continuous-time velocity,
    acceleration and jerk of the segment stay inside the limit boxes.
    """

    lb_vel: np.ndarray
    ub_vel: np.ndarray
    lb_acc: np.ndarray
    ub_acc: np.ndarray
    lb_jerk: np.ndarray
    ub_jerk: np.ndarray

    def lower(self) -> np.ndarray:
        return np.maximum(np.maximum(self.lb_vel, self.lb_acc), self.lb_jerk)

    def upper(self) -> np.ndarray:
        return np.minimum(np.minimum(self.ub_vel, self.ub_acc), self.ub_jerk)


def kinematic_bounds(v0, T: float, limits: KinematicLimits) -> SegmentBounds:
    """Displacement envelope for a segment starting at per-axis velocity v0.

    Velocity: v(t) = K3(t) c + v0 with K3 increasing 0 -> K3(T), so the
    whole-segment extreme is at t = T. Acceleration: a(t) = K4(t) c with
    K4 one-signed and peaking at k4_peak(T). Jerk: j(t) = K5(t) c, extremal
    at t = 0 (15 c/T^3) and t = T (-7.5 c/T^3); both endpoint conditions are
    folded into the max/min below. Assumes v0 itself is inside the velocity
    box, which the planner maintains recursively via the end-velocity
    identity.
    """
    if T <= 0.0:
        raise ValueError("segment duration must be positive")
    v0 = np.asarray(v0, dtype=float)
    k3T = k3(T, T)
    residual = (1.0 - T * k3T) * v0
    _, k4max = k4_peak(T)
    jcap = T**3 / 15.0
    return SegmentBounds(
        lb_vel=(limits.v_min - residual) / k3T,
        ub_vel=(limits.v_max - residual) / k3T,
        lb_acc=T * v0 + limits.a_min / k4max,
        ub_acc=T * v0 + limits.a_max / k4max,
        lb_jerk=T * v0 + max(limits.j_min * jcap, -limits.j_max * 2.0 * jcap),
        ub_jerk=T * v0 + min(limits.j_max * jcap, -limits.j_min * 2.0 * jcap),
    )


def propagate_velocity(v0, dp, T: float):
    """End velocity of a segment: v(T) = K3(T) dp + (1 - T K3(T)) v0."""
    k3T = k3(T, T)
    return k3T * np.asarray(dp, dtype=float) + (1.0 - T * k3T) * np.asarray(
        v0, dtype=float
    )
