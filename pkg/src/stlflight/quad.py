"""Nonlinear 8-state multirotor model, tracking-error dynamics, and simulation.

State x = [px, py, pz, vx, vy, vz, phi, theta]; inputs u = [f_t, u_x, u_y]
(collective thrust and the two torque-rate commands). Yaw and its derivatives
are held at zero. The vertical axis convention follows the model: gravity
enters v_z with +g, so thrust above m*g accelerates the vehicle toward
negative z.

The tracking error is e = x - G xhat with G = diag(I6, 0_{2x3}) projecting
the 9-state planner trajectory (position/velocity/acceleration) onto the
vehicle state: e1..e6 are position/velocity differences, e7 = phi, e8 = theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81


@dataclass(frozen=True)
class QuadParams:
    """Vehicle constants. m, I_x, I_y follow the model; b, l, d are rotor
    constants the model source leaves unspecified (placeholder defaults,
    used only for rotor-speed reporting)."""

    m: float = 0.5
    I_x: float = 0.2
    I_y: float = 0.2
    g: float = GRAVITY
    b: float = 1e-5
    l: float = 0.2
    d: float = 1e-6

    def __post_init__(self):
        for name in ("m", "I_x", "I_y", "b", "l", "d"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class InputBox:
    """Componentwise input bounds: f_t in [ft_min, ft_max], |u_x|, |u_y| boxes."""

    ft_min: float = 0.0
    ft_max: float = 2.0 * 0.5 * GRAVITY
    ux_min: float = -2.0
    ux_max: float = 2.0
    uy_min: float = -2.0
    uy_max: float = 2.0

    def __post_init__(self):
        if self.ft_min < 0.0:
            raise ValueError("minimum thrust must be nonnegative")
        if not (
            self.ft_min <= self.ft_max
            and self.ux_min <= self.ux_max
            and self.uy_min <= self.uy_max
        ):
            raise ValueError("input box bounds are inverted")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.ft_min, self.ux_min, self.uy_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.ft_max, self.ux_max, self.uy_max])

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lower, self.upper)


class SimulationDiverged(RuntimeError):
    """Attitude left the model's validity range or state became non-finite."""

    def __init__(self, message, t, state):
        super().__init__(message)
        self.t = t
        self.state = state


def dynamics_deriv(x: np.ndarray, u: np.ndarray, params: QuadParams) -> np.ndarray:
    """Right-hand side of the 8-state model."""
    ft, ux, uy = u
    phi, theta = x[6], x[7]
    cphi, sphi = np.cos(phi), np.sin(phi)
    ctheta, stheta = np.cos(theta), np.sin(theta)
    return np.array(
        [
            x[3],
            x[4],
            x[5],
            -(ft / params.m) * cphi * stheta,
            (ft / params.m) * sphi,
            params.g - (ft / params.m) * cphi * ctheta,
            ux / params.I_x,
            uy / params.I_y,
        ]
    )


def error_deriv(
    e: np.ndarray, a_ref: np.ndarray, u: np.ndarray, params: QuadParams
) -> np.ndarray:
    """Error dynamics de/dt = f_e(e, xhat) + g_e(e) u.

    The planner acceleration a_ref enters as a bounded disturbance; the
    planner's kinematic constraints keep it inside the acceleration box.
    """
    return error_drift(e, a_ref, params) + error_input_matrix(e, params) @ np.asarray(u)


def error_drift(e: np.ndarray, a_ref, params: QuadParams) -> np.ndarray:
    ax, ay, az = a_ref
    return np.array([e[3], e[4], e[5], -ax, -ay, params.g - az, 0.0, 0.0])


def error_input_matrix(e: np.ndarray, params: QuadParams) -> np.ndarray:
    phi, theta = e[6], e[7]
    cphi, sphi = np.cos(phi), np.sin(phi)
    ctheta, stheta = np.cos(theta), np.sin(theta)
    g_e = np.zeros((8, 3))
    g_e[3, 0] = -cphi * stheta / params.m
    g_e[4, 0] = sphi / params.m
    g_e[5, 0] = -cphi * ctheta / params.m
    g_e[6, 1] = 1.0 / params.I_x
    g_e[7, 2] = 1.0 / params.I_y
    return g_e


def error_state(x: np.ndarray, p_ref, v_ref) -> np.ndarray:
    """e = x - G xhat: position/velocity differences plus roll and pitch."""
    e = np.empty(8)
    e[0:3] = x[0:3] - p_ref
    e[3:6] = x[3:6] - v_ref
    e[6:8] = x[6:8]
    return e


@dataclass
class SimLog:
    """Fixed-step closed-loop log; arrays share the time axis."""

    t: np.ndarray
    state: np.ndarray  # (n, 8)
    error: np.ndarray  # (n, 8)
    inputs: np.ndarray  # (n, 3) post-saturation
    clamped: np.ndarray  # (n,) bool, any component saturated
    ref_p: np.ndarray  # (n, 3)
    ref_v: np.ndarray  # (n, 3)
    ref_a: np.ndarray  # (n, 3)
    lyapunov: np.ndarray | None = None  # (n,) V(e) when a level function is given
    rotor_speeds: np.ndarray | None = None  # (n, 4), NaN where infeasible
    extras: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.shape[0] > 1 else 0.0


def integrate(
    x0,
    controller,
    reference,
    t_final: float,
    dt: float,
    params: QuadParams,
    input_box: InputBox,
    lyapunov=None,
) -> SimLog:
    """Classic fixed-step 4th-order integration of the tracked closed loop.

    `controller` maps the 8-dim error state to raw inputs (saturated here);
    `reference` provides p/v/a at arbitrary times (evaluated from the spline
    closed forms, not interpolated samples). Raises SimulationDiverged when
    an attitude angle reaches pi/2 or the state stops being finite.
    """
    if dt <= 0.0 or t_final <= 0.0:
        raise ValueError("simulation step and duration must be positive")
    n = int(round(t_final / dt)) + 1
    times = np.arange(n) * dt
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (8,):
        raise ValueError("initial state must be 8-dimensional")

    # reference values at step and half-step times, computed up front
    grid = np.arange(2 * n - 1) * (dt / 2.0)
    ref_p, ref_v, ref_a = reference.evaluate(grid)

    log_state = np.empty((n, 8))
    log_err = np.empty((n, 8))
    log_u = np.empty((n, 3))
    log_clamped = np.zeros(n, dtype=bool)
    log_V = np.empty(n) if lyapunov is not None else None

    def control(x_now, gi):
        e = error_state(x_now, ref_p[gi], ref_v[gi])
        u_raw = controller(e)
        u = input_box.clamp(u_raw)
        return e, u, bool(np.any(u != u_raw))

    for k in range(n):
        gi = 2 * k
        e, u, hit = control(x, gi)
        log_state[k] = x
        log_err[k] = e
        log_u[k] = u
        log_clamped[k] = hit
        if log_V is not None:
            log_V[k] = lyapunov(e)
        if not np.all(np.isfinite(x)) or max(abs(x[6]), abs(x[7])) >= np.pi / 2.0:
            raise SimulationDiverged(
                f"simulation diverged at t={times[k]:.4f}s "
                f"(attitude {x[6]:.3f}, {x[7]:.3f} rad)",
                times[k],
                x.copy(),
            )
        if k == n - 1:
            break

        def deriv(x_s, gi_s):
            _, u_s, _ = control(x_s, gi_s)
            return dynamics_deriv(x_s, u_s, params)

        k1 = deriv(x, gi)
        k2 = deriv(x + 0.5 * dt * k1, gi + 1)
        k3 = deriv(x + 0.5 * dt * k2, gi + 1)
        k4 = deriv(x + dt * k3, gi + 2)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return SimLog(
        t=times,
        state=log_state,
        error=log_err,
        inputs=log_u,
        clamped=log_clamped,
        ref_p=ref_p[::2],
        ref_v=ref_v[::2],
        ref_a=ref_a[::2],
        lyapunov=log_V,
    )


def attitude_torques(log: SimLog, params: QuadParams) -> np.ndarray:
    """Torques realizing the commanded u_x, u_y stream: (n, 3) [T_x, T_y, T_z].

    T_x and T_y are the time derivatives of the commanded u_x and u_y
    (central differences on the log); T_z = (I_y - I_x) phi_dot theta_dot.
    """
    u = log.inputs
    dt = log.dt
    tx = np.gradient(u[:, 1], dt)
    ty = np.gradient(u[:, 2], dt)
    phi_dot = u[:, 1] / params.I_x
    theta_dot = u[:, 2] / params.I_y
    tz = (params.I_y - params.I_x) * phi_dot * theta_dot
    return np.column_stack([tx, ty, tz])


class NegativeSpindle(ValueError):
    """Commanded wrench needs a negative squared rotor speed."""

    def __init__(self, message, index: int, value: float):
        super().__init__(message)
        self.index = index
        self.value = value


def _mixer_matrix(params: QuadParams) -> np.ndarray:
    b, l, d = params.b, params.l, params.d
    return np.array(
        [
            [b, b, b, b],
            [-b * l, 0.0, b * l, 0.0],
            [0.0, -b * l, 0.0, b * l],
            [-d, d, -d, d],
        ]
    )


def rotor_allocation(ft, tx, ty, tz, params: QuadParams) -> np.ndarray:
    """Rotor speeds (rad/s) realizing thrust f_t and torques T_x, T_y, T_z.

    Solves the linear mixer system for the squared speeds and takes
    nonnegative roots; raises NegativeSpindle when the wrench is infeasible.
    """
    w_sq = np.linalg.solve(_mixer_matrix(params), np.array([ft, tx, ty, tz], dtype=float))
    for i, v in enumerate(w_sq):
        if v < 0.0:
            raise NegativeSpindle(
                f"rotor {i + 1} would need omega^2 = {v:.6g} < 0", i, float(v)
            )
    return np.sqrt(w_sq)


def rotor_allocation_log(log: SimLog, params: QuadParams) -> np.ndarray:
    """Per-step rotor speeds for a finished log; NaN rows where infeasible."""
    torques = attitude_torques(log, params)
    wrench = np.column_stack([log.inputs[:, 0], torques])
    w_sq = np.linalg.solve(_mixer_matrix(params), wrench.T).T
    speeds = np.full_like(w_sq, np.nan)
    ok = np.all(w_sq >= 0.0, axis=1)
    speeds[ok] = np.sqrt(w_sq[ok])
    return speeds
