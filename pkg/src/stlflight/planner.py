"""Waypoint planning: maximize smoothed robustness over spline trajectories
subject to the closed-form kinematic envelopes and a robustness margin.

Decision variables are the position waypoints alone. Waypoint velocities
propagate through the end-velocity identity, so sampled trajectories are
linear in the waypoints; the sampling maps below are built once per mission
by probing that linear pipeline with basis vectors, which also gives exact
analytic gradients through the smoothed robustness.

The solver is an augmented Lagrangian over the (linear) kinematic
constraints and the (nonlinear) robustness-margin constraint, with L-BFGS-B
inner iterations honoring the workspace box, restarted from randomized
straight-line seeds. Success is declared only when the exact robustness,
reduced by the inter-sample excursion margin, clears the tracking bound.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize

from .mission import Mission
from .smooth import SmoothConfig, approximation_error, smooth_robustness_gradient
from .splines import KinematicLimits, k1, k3, k4, kinematic_bounds
from .stl import Formula, MultiTrace, Predicate, horizon, robustness
from .stl.ast import AXES


class PlanStatus(enum.Enum):
    SUCCESS = "success"
    BEST_EFFORT = "best-effort"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class PlannerConfig:
    N: int
    T: float
    dt: float
    restarts: int = 4
    seed: int = 0
    smooth_C: float = 25.0
    max_outer: int = 8
    max_inner: int = 200
    feas_tol: float = 1e-6
    margin_tol: float = 1e-4
    init_noise: float = 0.10
    mu0: float = 10.0
    mu_growth: float = 5.0

    def __post_init__(self):
        if self.N < 1 or self.T <= 0.0 or self.dt <= 0.0:
            raise ValueError("N, T, dt must be positive")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"dt={self.dt} must divide the segment duration T={self.T}")
        if self.restarts < 1:
            raise ValueError("need at least one restart")

    @property
    def steps_per_segment(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def smooth(self) -> SmoothConfig:
        return SmoothConfig(C=self.smooth_C)


# -- linear sampling pipeline ------------------------------------------------


def _axis_states(w: np.ndarray, v0: float, T: float, steps: int):
    """Sampled (pos, vel, acc) of the chained segments along one axis.

    w holds the N+1 waypoint coordinates; velocities follow the end-velocity
    identity. Junction samples are not duplicated; the final waypoint closes
    the trace.
    """
    N = w.shape[0] - 1
    k3T = k3(T, T)
    q = 1.0 - T * k3T
    vels = np.empty(N + 1)
    vels[0] = v0
    for j in range(N):
        vels[j + 1] = k3T * (w[j + 1] - w[j]) + q * vels[j]
    taus = np.arange(steps) * (T / steps)
    K1, K3, K4 = k1(taus, T), k3(taus, T), k4(taus, T)
    M = N * steps + 1
    pos = np.empty(M)
    vel = np.empty(M)
    acc = np.empty(M)
    for j in range(N):
        c = w[j + 1] - w[j] - vels[j] * T
        sl = slice(j * steps, (j + 1) * steps)
        pos[sl] = w[j] + vels[j] * taus + c * K1
        vel[sl] = vels[j] + c * K3
        acc[sl] = c * K4
    pos[-1] = w[N]
    vel[-1] = vels[N]
    acc[-1] = 0.0
    return pos, vel, acc


@dataclass
class TraceMaps:
    """Linear maps from (waypoints, v0) to samples and waypoint velocities."""

    Mp: np.ndarray  # (M, N+1)
    Mv: np.ndarray
    Ma: np.ndarray
    bp: np.ndarray  # (M,) coefficient of v0
    bv: np.ndarray
    ba: np.ndarray
    vel_map: np.ndarray  # (N+1, N+1) waypoint velocities
    vel_b: np.ndarray  # (N+1,)

    @classmethod
    def build(cls, N: int, T: float, steps: int) -> "TraceMaps":
        M = N * steps + 1
        Mp = np.empty((M, N + 1))
        Mv = np.empty((M, N + 1))
        Ma = np.empty((M, N + 1))
        vel_map = np.empty((N + 1, N + 1))
        for i in range(N + 1):
            basis = np.zeros(N + 1)
            basis[i] = 1.0
            p, v, a = _axis_states(basis, 0.0, T, steps)
            Mp[:, i], Mv[:, i], Ma[:, i] = p, v, a
            vel_map[:, i] = _waypoint_velocities(basis, 0.0, T)
        p, v, a = _axis_states(np.zeros(N + 1), 1.0, T, steps)
        return cls(
            Mp=Mp,
            Mv=Mv,
            Ma=Ma,
            bp=p,
            bv=v,
            ba=a,
            vel_map=vel_map,
            vel_b=_waypoint_velocities(np.zeros(N + 1), 1.0, T),
        )


def _waypoint_velocities(w: np.ndarray, v0: float, T: float) -> np.ndarray:
    N = w.shape[0] - 1
    k3T = k3(T, T)
    q = 1.0 - T * k3T
    vels = np.empty(N + 1)
    vels[0] = v0
    for j in range(N):
        vels[j + 1] = k3T * (w[j + 1] - w[j]) + q * vels[j]
    return vels


# -- plan containers ----------------------------------------------------------


@dataclass
class WaypointPlan:
    """Per-vehicle waypoint rows (N+1, 3) with derived velocities."""

    T: float
    waypoints: dict[str, np.ndarray]
    velocities: dict[str, np.ndarray]

    @property
    def n_segments(self) -> int:
        first = next(iter(self.waypoints.values()))
        return first.shape[0] - 1

    @property
    def duration(self) -> float:
        return self.n_segments * self.T

    def to_dict(self):
        return {
            "T": float(self.T),
            "vehicles": {
                name: {
                    "waypoints": [[float(v) for v in row] for row in self.waypoints[name]],
                    "velocities": [
                        [float(v) for v in row] for row in self.velocities[name]
                    ],
                }
                for name in sorted(self.waypoints)
            },
        }

    @classmethod
    def from_dict(cls, data):
        wpts = {
            name: np.array(veh["waypoints"], dtype=float)
            for name, veh in data["vehicles"].items()
        }
        vels = {
            name: np.array(veh["velocities"], dtype=float)
            for name, veh in data["vehicles"].items()
        }
        return cls(T=float(data["T"]), waypoints=wpts, velocities=vels)


@dataclass
class SlackRecord:
    vehicle: str
    segment: int
    axis: str
    kind: str  # vel / acc / jerk
    side: str  # lb / ub
    slack: float

    def to_dict(self):
        return {
            "vehicle": self.vehicle,
            "segment": self.segment,
            "axis": self.axis,
            "kind": self.kind,
            "side": self.side,
            "slack": float(self.slack),
        }


@dataclass
class SlackReport:
    kinematic: list[SlackRecord]
    margin_slack: float | None  # rho_smooth - eps - delta, when evaluated

    def min_kinematic(self) -> float:
        return min(r.slack for r in self.kinematic)

    def all_nonnegative(self, tol: float = 0.0) -> bool:
        ok = all(r.slack >= -tol for r in self.kinematic)
        if self.margin_slack is not None:
            ok = ok and self.margin_slack >= -tol
        return ok

    def to_dict(self):
        return {
            "kinematic": [r.to_dict() for r in self.kinematic],
            "margin_slack": None
            if self.margin_slack is None
            else float(self.margin_slack),
        }


@dataclass
class PlanResult:
    status: PlanStatus
    plan: WaypointPlan | None
    rho: float
    rho_corrected: float
    rho_smooth: float
    epsilon: float
    sampling_margin: float
    delta: float
    slacks: SlackReport | None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "status": self.status.value,
            "plan": None if self.plan is None else self.plan.to_dict(),
            "rho": float(self.rho),
            "rho_corrected": float(self.rho_corrected),
            "rho_smooth": float(self.rho_smooth),
            "epsilon": float(self.epsilon),
            "sampling_margin": float(self.sampling_margin),
            "delta": float(self.delta),
            "slacks": None if self.slacks is None else self.slacks.to_dict(),
            "diagnostics": self.diagnostics,
        }

    def save(self, path):
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        )


# -- trace construction --------------------------------------------------------


def trace_from_plan(plan: WaypointPlan, dt: float) -> MultiTrace:
    """Sampled position/velocity/acceleration channels for every vehicle."""
    if dt <= 0.0:
        raise ValueError("sample period must be positive")
    steps = plan.T / dt
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"dt={dt} must divide the segment duration T={plan.T}")
    steps = int(round(steps))
    vehicles = {}
    for name, wpts in plan.waypoints.items():
        v0 = plan.velocities[name][0]
        chans = {}
        for axis_idx, _ in enumerate(AXES):
            p, v, a = _axis_states(wpts[:, axis_idx], v0[axis_idx], plan.T, steps)
            chans.setdefault("p", []).append(p)
            chans.setdefault("v", []).append(v)
            chans.setdefault("a", []).append(a)
        vehicles[name] = {k: np.column_stack(v) for k, v in chans.items()}
    return MultiTrace.from_vehicles(dt, vehicles)


class PlanReference:
    """Continuous closed-form reference for one vehicle of a plan.

    Evaluation goes through the segment polynomials, not sample
    interpolation, so the simulator sees the exact planned states.
    """

    def __init__(self, plan: WaypointPlan, vehicle: str):
        w = plan.waypoints[vehicle]
        vels = plan.velocities[vehicle]
        self.T = plan.T
        self.N = w.shape[0] - 1
        self.w = w
        self.vels = vels
        self.c = w[1:] - w[:-1] - vels[:-1] * plan.T  # (N, 3)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        seg = np.clip((t / self.T).astype(int), 0, self.N - 1)
        tau = np.clip(t - seg * self.T, 0.0, self.T)
        K1 = k1(tau, self.T)[:, None]
        K3 = k3(tau, self.T)[:, None]
        K4 = k4(tau, self.T)[:, None]
        w0 = self.w[seg]
        v0 = self.vels[seg]
        c = self.c[seg]
        p = w0 + v0 * tau[:, None] + c * K1
        v = v0 + c * K3
        a = c * K4
        return p, v, a


# -- margin for inter-sample excursions ----------------------------------------


def _channel_rate(name: str, limits: KinematicLimits) -> float:
    if ".v." in name:
        return max(limits.a_max, -limits.a_min)
    if ".a." in name:
        return max(limits.j_max, -limits.j_min)
    return max(limits.v_max, -limits.v_min)


def sampling_margin(f: Formula, dt: float, limits: KinematicLimits) -> float:
    """Bound on how far the robustness can dip between samples.

    Each predicate's value drifts at most sum_i |c_i| * rate_i per second,
    where the rate of a position channel is the velocity limit and so on;
    half a sample period of worst drift bounds the excursion.
    """
    worst = 0.0

    def visit(node):
        nonlocal worst
        if isinstance(node, Predicate):
            rate = sum(abs(c) * _channel_rate(ch, limits) for ch, c in node.terms)
            worst = max(worst, rate)
            return
        for attr in ("child", "left", "right"):
            if hasattr(node, attr):
                visit(getattr(node, attr))
        if hasattr(node, "children"):
            for c in node.children:
                visit(c)

    visit(f)
    return 0.5 * dt * worst


# -- constraint assembly --------------------------------------------------------


def _axis_constraints(w: np.ndarray, v0: float, T: float, limits) -> np.ndarray:
    """Stacked `g <= 0` values for one axis: 6 bounds per segment."""
    N = w.shape[0] - 1
    vels = _waypoint_velocities(w, v0, T)
    out = np.empty(6 * N)
    for j in range(N):
        b = kinematic_bounds(np.array([vels[j]]), T, limits)
        dp = w[j + 1] - w[j]
        out[6 * j : 6 * j + 6] = [
            b.lb_vel[0] - dp,
            dp - b.ub_vel[0],
            b.lb_acc[0] - dp,
            dp - b.ub_acc[0],
            b.lb_jerk[0] - dp,
            dp - b.ub_jerk[0],
        ]
    return out


def _probe_axis_constraints(N: int, T: float, limits):
    """Affine form g = A w + c v0 + d of the per-axis constraint stack."""
    zero = np.zeros(N + 1)
    d = _axis_constraints(zero, 0.0, T, limits)
    A = np.empty((6 * N, N + 1))
    for i in range(N + 1):
        basis = np.zeros(N + 1)
        basis[i] = 1.0
        A[:, i] = _axis_constraints(basis, 0.0, T, limits) - d
    c = _axis_constraints(zero, 1.0, T, limits) - d
    return A, c, d


# -- seeding ---------------------------------------------------------------------

_IN_REGION_RE = re.compile(r"(!?\s*\(?\s*)(\w+)\.p\s+in\s+(\w+)")


def _seed_paths(mission: Mission) -> dict[str, list[np.ndarray]]:
    """Per vehicle: region centers referenced positively, in text order."""
    paths = {uav.name: [] for uav in mission.uavs}
    for m in _IN_REGION_RE.finditer(mission.spec_text):
        negated = m.group(1).lstrip().startswith("!")
        veh, region = m.group(2), m.group(3)
        if negated or veh not in paths or region not in mission.regions:
            continue
        paths[veh].append(np.array(mission.regions[region].center))
    return paths


def _seed_waypoints(p0, targets, N):
    """Polyline p0 -> targets, resampled at N+1 evenly spaced stations."""
    pts = [np.asarray(p0, dtype=float)] + [np.asarray(t, dtype=float) for t in targets]
    if len(pts) == 1:
        return np.tile(pts[0], (N + 1, 1))
    pts = np.array(pts)
    seglen = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = seglen.sum()
    if total <= 0.0:
        return np.tile(pts[0], (N + 1, 1))
    stations = np.linspace(0.0, total, N + 1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    out = np.empty((N + 1, 3))
    for i, s in enumerate(stations):
        j = min(np.searchsorted(cum, s, side="right") - 1, len(seglen) - 1)
        frac = 0.0 if seglen[j] == 0.0 else (s - cum[j]) / seglen[j]
        out[i] = pts[j] + frac * (pts[j + 1] - pts[j])
    return out


# -- the planner ------------------------------------------------------------------


class _Problem:
    """Mission compiled to vectors: objective, gradients, constraints."""

    def __init__(self, mission: Mission, cfg: PlannerConfig, delta: float):
        self.mission = mission
        self.cfg = cfg
        self.delta = float(delta)
        self.formula = mission.formula()
        self.names = [u.name for u in mission.uavs]
        self.p0 = {u.name: np.asarray(u.position, dtype=float) for u in mission.uavs}
        self.v0 = {u.name: np.asarray(u.velocity, dtype=float) for u in mission.uavs}
        self.maps = TraceMaps.build(cfg.N, cfg.T, cfg.steps_per_segment)
        self.epsilon = approximation_error(self.formula, cfg.dt, cfg.smooth)
        self.margin = sampling_margin(self.formula, cfg.dt, mission.limits)
        self.n_per_uav = cfg.N * 3
        self.n_x = len(self.names) * self.n_per_uav

        A, c, d = _probe_axis_constraints(cfg.N, cfg.T, mission.limits)
        # expand per vehicle/axis; fixed first waypoint folds into the offset
        rows = []
        offs = []
        self._slack_index = []
        n_con_axis = A.shape[0]
        for vi, name in enumerate(self.names):
            for ai, axis in enumerate(AXES):
                G = np.zeros((n_con_axis, self.n_x))
                block = slice(vi * self.n_per_uav + ai, (vi + 1) * self.n_per_uav, 3)
                G[:, block] = A[:, 1:]
                off = A[:, 0] * self.p0[name][ai] + c * self.v0[name][ai] + d
                rows.append(G)
                offs.append(off)
                for j in range(cfg.N):
                    for kind in ("vel", "acc", "jerk"):
                        for side in ("lb", "ub"):
                            self._slack_index.append((name, j, axis, kind, side))
        self.G = np.vstack(rows)
        self.h = np.concatenate(offs)

        lo, hi = mission.workspace.lower, mission.workspace.upper
        self.bounds = [
            (lo[ai], hi[ai])
            for _ in self.names
            for _ in range(cfg.N)
            for ai in range(3)
        ]

    def unpack(self, x: np.ndarray) -> dict[str, np.ndarray]:
        wpts = {}
        for vi, name in enumerate(self.names):
            rows = x[vi * self.n_per_uav : (vi + 1) * self.n_per_uav].reshape(
                self.cfg.N, 3
            )
            wpts[name] = np.vstack([self.p0[name][None, :], rows])
        return wpts

    def pack_seed(self, wpts: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([wpts[name][1:].ravel() for name in self.names])

    def trace(self, x: np.ndarray) -> MultiTrace:
        wpts = self.unpack(x)
        channels = {}
        for name in self.names:
            w = wpts[name]
            for ai, axis in enumerate(AXES):
                v0 = self.v0[name][ai]
                channels[f"{name}.p.{axis}"] = self.maps.Mp @ w[:, ai] + self.maps.bp * v0
                channels[f"{name}.v.{axis}"] = self.maps.Mv @ w[:, ai] + self.maps.bv * v0
                channels[f"{name}.a.{axis}"] = self.maps.Ma @ w[:, ai] + self.maps.ba * v0
        return MultiTrace(self.cfg.dt, channels)

    def smooth_value_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        tr = self.trace(x)
        value, grads = smooth_robustness_gradient(self.formula, tr, self.cfg.smooth)
        gx = np.zeros(self.n_x)
        for vi, name in enumerate(self.names):
            for ai, axis in enumerate(AXES):
                acc = np.zeros(self.cfg.N + 1)
                g = grads.get(f"{name}.p.{axis}")
                if g is not None:
                    acc += self.maps.Mp.T @ g
                g = grads.get(f"{name}.v.{axis}")
                if g is not None:
                    acc += self.maps.Mv.T @ g
                g = grads.get(f"{name}.a.{axis}")
                if g is not None:
                    acc += self.maps.Ma.T @ g
                block = slice(vi * self.n_per_uav + ai, (vi + 1) * self.n_per_uav, 3)
                gx[block] = acc[1:]
        return value, gx

    def kinematic_values(self, x: np.ndarray) -> np.ndarray:
        return self.G @ x + self.h

    def waypoint_velocities(self, x: np.ndarray) -> dict[str, np.ndarray]:
        wpts = self.unpack(x)
        vels = {}
        for name in self.names:
            w = wpts[name]
            vels[name] = np.column_stack(
                [
                    self.maps.vel_map @ w[:, ai] + self.maps.vel_b * self.v0[name][ai]
                    for ai in range(3)
                ]
            )
        return vels


def _solve_one(problem: _Problem, x0: np.ndarray, required: float):
    """Augmented-Lagrangian maximization of the smoothed robustness."""
    cfg = problem.cfg
    n_kin = problem.G.shape[0]
    lam = np.zeros(n_kin + 1)
    mu = cfg.mu0
    x = x0.copy()
    prev_viol = np.inf
    evals = 0

    def phi(xv):
        nonlocal evals
        evals += 1
        value, grad = problem.smooth_value_grad(xv)
        g_kin = problem.kinematic_values(xv)
        g_margin = required - value
        g_all = np.concatenate([g_kin, [g_margin]])
        act = np.maximum(0.0, lam + mu * g_all)
        f = -value + ((act**2).sum() - (lam**2).sum()) / (2.0 * mu)
        gx = -grad + problem.G.T @ act[:n_kin] - act[n_kin] * grad
        return f, gx

    for _ in range(cfg.max_outer):
        res = scipy.optimize.minimize(
            phi,
            x,
            jac=True,
            method="L-BFGS-B",
            bounds=problem.bounds,
            options={"maxiter": cfg.max_inner, "ftol": 1e-12, "gtol": 1e-9},
        )
        x = res.x
        value, _ = problem.smooth_value_grad(x)
        g_kin = problem.kinematic_values(x)
        g_all = np.concatenate([g_kin, [required - value]])
        kin_viol = max(0.0, g_kin.max()) if n_kin else 0.0
        margin_viol = max(0.0, required - value)
        if kin_viol <= cfg.feas_tol and margin_viol <= cfg.margin_tol:
            break
        lam = np.maximum(0.0, lam + mu * g_all)
        viol = max(kin_viol, margin_viol)
        if viol > 0.25 * prev_viol:
            mu *= cfg.mu_growth
        prev_viol = viol
    return x, {"f_evals": evals, "kin_violation": float(kin_viol)}


def structurally_infeasible_regions(mission: Mission) -> list[str]:
    """Positively referenced regions that do not intersect the workspace."""
    bad = []
    ws = mission.workspace
    for m in _IN_REGION_RE.finditer(mission.spec_text):
        if m.group(1).lstrip().startswith("!"):
            continue
        region = m.group(3)
        box = mission.regions.get(region)
        if box is None:
            continue
        overlaps = all(
            box.lower[i] <= ws.upper[i] and box.upper[i] >= ws.lower[i]
            for i in range(3)
        )
        if not overlaps and region not in bad:
            bad.append(region)
    return bad


def plan(mission: Mission, cfg: PlannerConfig, delta: float) -> PlanResult:
    """Best plan over all restarts; SUCCESS only if the exact robustness,
    after the inter-sample margin, clears `delta` with all envelopes met."""
    hrz = horizon(mission.formula())
    if cfg.N * cfg.T < hrz - 1e-9:
        raise ValueError(
            f"plan duration N*T = {cfg.N * cfg.T}s is below the horizon {hrz}s"
        )
    bad_regions = structurally_infeasible_regions(mission)
    if bad_regions:
        return PlanResult(
            status=PlanStatus.INFEASIBLE,
            plan=None,
            rho=-np.inf,
            rho_corrected=-np.inf,
            rho_smooth=-np.inf,
            epsilon=np.nan,
            sampling_margin=np.nan,
            delta=delta,
            slacks=None,
            diagnostics={"unreachable_regions": bad_regions},
        )

    problem = _Problem(mission, cfg, delta)
    required = problem.epsilon + delta + problem.margin
    rng = np.random.default_rng(cfg.seed)
    extent = np.array(mission.workspace.extent)
    lo = np.array(mission.workspace.lower)
    hi = np.array(mission.workspace.upper)
    seed_paths = _seed_paths(mission)

    candidates = []
    for r in range(cfg.restarts):
        wpts0 = {}
        for name in problem.names:
            base = _seed_waypoints(problem.p0[name], seed_paths.get(name, []), cfg.N)
            if r > 0:
                base = base + rng.uniform(-1.0, 1.0, base.shape) * (
                    cfg.init_noise * extent
                )
            wpts0[name] = np.clip(base, lo, hi)
        x0 = problem.pack_seed(wpts0)
        x, info = _solve_one(problem, x0, required)
        tr = problem.trace(x)
        rho = robustness(problem.formula, tr)
        rho_corr = rho - problem.margin
        g_kin = problem.kinematic_values(x)
        kin_viol = max(0.0, g_kin.max())
        feasible = kin_viol <= 10.0 * cfg.feas_tol
        wpts = problem.unpack(x)
        path_len = sum(
            float(np.linalg.norm(np.diff(w, axis=0), axis=1).sum())
            for w in wpts.values()
        )
        candidates.append(
            {
                "x": x,
                "rho": rho,
                "rho_corr": rho_corr,
                "feasible": feasible,
                "kin_viol": kin_viol,
                "path_len": path_len,
                "restart": r,
                "f_evals": info["f_evals"],
            }
        )

    best = max(
        candidates, key=lambda c: (c["feasible"], c["rho_corr"], -c["path_len"])
    )
    x = best["x"]
    wpts = problem.unpack(x)
    vels = problem.waypoint_velocities(x)
    plan_obj = WaypointPlan(T=cfg.T, waypoints=wpts, velocities=vels)
    tr = problem.trace(x)
    rho_smooth_val, _ = problem.smooth_value_grad(x)
    slacks = _slack_report(problem, x, rho_smooth_val)

    if not best["feasible"]:
        status = PlanStatus.INFEASIBLE
    elif best["rho_corr"] >= delta:
        status = PlanStatus.SUCCESS
    else:
        status = PlanStatus.BEST_EFFORT
    return PlanResult(
        status=status,
        plan=plan_obj,
        rho=best["rho"],
        rho_corrected=best["rho_corr"],
        rho_smooth=rho_smooth_val,
        epsilon=problem.epsilon,
        sampling_margin=problem.margin,
        delta=delta,
        slacks=slacks,
        diagnostics={
            "restart_chosen": best["restart"],
            "restarts": [
                {
                    "restart": c["restart"],
                    "rho": float(c["rho"]),
                    "feasible": bool(c["feasible"]),
                    "kin_violation": float(c["kin_viol"]),
                    "f_evals": c["f_evals"],
                }
                for c in candidates
            ],
        },
    )


def _slack_report(problem: _Problem, x: np.ndarray, rho_smooth_val: float):
    g = problem.kinematic_values(x)
    records = [
        SlackRecord(
            vehicle=meta[0],
            segment=meta[1],
            axis=meta[2],
            kind=meta[3],
            side=meta[4],
            slack=-gi,
        )
        for meta, gi in zip(problem._slack_index, g)
    ]
    margin_slack = rho_smooth_val - problem.epsilon - problem.delta
    return SlackReport(kinematic=records, margin_slack=margin_slack)


def constraint_residuals(
    plan_obj: WaypointPlan,
    limits: KinematicLimits,
    delta: float,
    formula: Formula | None = None,
    dt: float | None = None,
    smooth_cfg: SmoothConfig | None = None,
) -> SlackReport:
    """Signed slack of every kinematic bound, plus the robustness margin
    slack (rho_smooth - epsilon - delta) when a formula and dt are given."""
    records = []
    for name in sorted(plan_obj.waypoints):
        w = plan_obj.waypoints[name]
        vels = plan_obj.velocities[name]
        for j in range(plan_obj.n_segments):
            b = kinematic_bounds(vels[j], plan_obj.T, limits)
            dp = w[j + 1] - w[j]
            for ai, axis in enumerate(AXES):
                for kind, lb, ub in (
                    ("vel", b.lb_vel[ai], b.ub_vel[ai]),
                    ("acc", b.lb_acc[ai], b.ub_acc[ai]),
                    ("jerk", b.lb_jerk[ai], b.ub_jerk[ai]),
                ):
                    records.append(
                        SlackRecord(name, j, axis, kind, "lb", dp[ai] - lb)
                    )
                    records.append(
                        SlackRecord(name, j, axis, kind, "ub", ub - dp[ai])
                    )
    margin_slack = None
    if formula is not None and dt is not None:
        smooth_cfg = smooth_cfg or SmoothConfig()
        from .smooth import smooth_robustness

        tr = trace_from_plan(plan_obj, dt)
        rho_s = smooth_robustness(formula, tr, smooth_cfg)
        eps = approximation_error(formula, dt, smooth_cfg)
        margin_slack = rho_s - eps - delta
    return SlackReport(kinematic=records, margin_slack=margin_slack)
