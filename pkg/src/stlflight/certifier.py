"""Sampling-based certification of level-set invariance and input bounds,
plus the end-to-end tracking-tube check.

The forward-invariance condition is checked by densely sampling the level-set
boundary against the extreme reference accelerations; the input condition by
sampling the closed sublevel set. A FAIL is definitive (the witness violates
the condition and can be re-evaluated); a PASS is sampling evidence, not a
proof, and every report says so.

The reference acceleration enters the error drift affinely, so over the
acceleration box the Lie derivative is extremized at box corners; the default
grid is therefore corners plus center.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import ControllerBundle, QuadraticForm
from .stl import Formula, MultiTrace, robustness

PASS_CAVEAT = "sampling PASS is evidence, not proof"


@dataclass(frozen=True)
class CertConfig:
    boundary_samples: int = 100_000
    interior_samples: int = 20_000
    accel_points_per_axis: int = 2  # box corners; center is always added
    tau: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.boundary_samples < 1 or self.interior_samples < 1:
            raise ValueError("sample counts must be >= 1")
        if self.accel_points_per_axis < 1:
            raise ValueError("need at least one acceleration point per axis")
        if self.tau < 0.0:
            raise ValueError("margin tolerance tau must be >= 0")


@dataclass
class CertResult:
    passed: bool
    condition: str
    worst_value: float
    worst_point: np.ndarray
    worst_accel: np.ndarray | None
    n_samples: int
    tau: float
    note: str

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "condition": self.condition,
            "worst_value": float(self.worst_value),
            "worst_point": [float(v) for v in self.worst_point],
            "worst_accel": None
            if self.worst_accel is None
            else [float(v) for v in self.worst_accel],
            "n_samples": int(self.n_samples),
            "tau": float(self.tau),
            "note": self.note,
        }


class QuadErrorSystem:
    """Vectorized tracking-error dynamics for the 8-state vehicle model."""

    def __init__(self, params):
        self.params = params

    def drift_many(self, E: np.ndarray, a_ref: np.ndarray) -> np.ndarray:
        out = np.zeros_like(E)
        out[:, 0:3] = E[:, 3:6]
        out[:, 3] = -a_ref[0]
        out[:, 4] = -a_ref[1]
        out[:, 5] = self.params.g - a_ref[2]
        return out

    def input_effect_many(self, E: np.ndarray, U: np.ndarray) -> np.ndarray:
        phi, theta = E[:, 6], E[:, 7]
        cphi, sphi = np.cos(phi), np.sin(phi)
        ctheta, stheta = np.cos(theta), np.sin(theta)
        m = self.params.m
        out = np.zeros_like(E)
        out[:, 3] = -cphi * stheta / m * U[:, 0]
        out[:, 4] = sphi / m * U[:, 0]
        out[:, 5] = -cphi * ctheta / m * U[:, 0]
        out[:, 6] = U[:, 1] / self.params.I_x
        out[:, 7] = U[:, 2] / self.params.I_y
        return out


def accel_grid(accel_box, points_per_axis: int) -> np.ndarray:
    """Corner grid of the acceleration box, plus its center."""
    lo = np.asarray(accel_box[0], dtype=float)
    hi = np.asarray(accel_box[1], dtype=float)
    axes = [np.linspace(lo[i], hi[i], points_per_axis) for i in range(3)]
    pts = [np.array(c) for c in itertools.product(*axes)]
    center = 0.5 * (lo + hi)
    if not any(np.array_equal(p, center) for p in pts):
        pts.append(center)
    return np.array(pts)


def certify_invariance_system(
    V: QuadraticForm,
    eta: float,
    controller_many,
    system,
    accel_points: np.ndarray,
    cfg: CertConfig,
) -> CertResult:
    """Core boundary check: max over samples of dV/dt must be <= -tau.

    `controller_many` maps a batch of error states to raw (unsaturated)
    inputs; `system` provides vectorized drift and input effect.
    """
    rng = np.random.default_rng(cfg.seed)
    E = V.boundary_points(eta, cfg.boundary_samples, rng)
    gradV = V.gradient_many(E)
    U = controller_many(E)
    input_part = np.einsum("mi,mi->m", gradV, system.input_effect_many(E, U))
    worst_value = -np.inf
    worst_idx = 0
    worst_accel = accel_points[0]
    for a_ref in accel_points:
        lie = np.einsum("mi,mi->m", gradV, system.drift_many(E, a_ref)) + input_part
        idx = int(np.argmax(lie))
        if lie[idx] > worst_value:
            worst_value = float(lie[idx])
            worst_idx = idx
            worst_accel = a_ref
    passed = worst_value <= -cfg.tau
    return CertResult(
        passed=passed,
        condition="invariance",
        worst_value=worst_value,
        worst_point=E[worst_idx].copy(),
        worst_accel=np.asarray(worst_accel, dtype=float),
        n_samples=E.shape[0] * accel_points.shape[0],
        tau=cfg.tau,
        note=PASS_CAVEAT if passed else "FAIL witness included; FAIL is definitive",
    )


def certify_invariance(
    bundle: ControllerBundle, accel_box, cfg: CertConfig
) -> CertResult:
    """Boundary invariance of the bundle's level set over the acceleration box."""
    system = QuadErrorSystem(bundle.params)
    pts = accel_grid(accel_box, cfg.accel_points_per_axis)
    return certify_invariance_system(
        bundle.V, bundle.eta, bundle.raw_inputs_many, system, pts, cfg
    )


def certify_inputs(bundle: ControllerBundle, cfg: CertConfig) -> CertResult:
    """Unsaturated inputs must stay inside the box on the closed sublevel set.

    Samples are boundary draws scaled radially by u^(1/2) plus a batch kept
    on the boundary itself.
    """
    rng = np.random.default_rng(cfg.seed + 1)
    shell = bundle.V.boundary_points(bundle.eta, cfg.interior_samples, rng)
    scales = np.sqrt(rng.uniform(0.0, 1.0, cfg.interior_samples))
    E = np.vstack([shell * scales[:, None], shell, np.zeros((1, 8))])
    U = bundle.raw_inputs_many(E)
    lo, hi = bundle.input_box.lower, bundle.input_box.upper
    over = np.maximum(U - hi, lo - U)  # positive where out of box
    margins = over.max(axis=1)
    worst_idx = int(np.argmax(margins))
    worst_value = float(margins[worst_idx])
    passed = worst_value <= 0.0
    return CertResult(
        passed=passed,
        condition="input-bounds",
        worst_value=worst_value,
        worst_point=E[worst_idx].copy(),
        worst_accel=None,
        n_samples=E.shape[0],
        tau=0.0,
        note=PASS_CAVEAT if passed else "FAIL witness included; FAIL is definitive",
    )


@dataclass
class CertificationReport:
    invariance: CertResult
    inputs: CertResult
    delta: dict
    config: CertConfig

    @property
    def passed(self) -> bool:
        return self.invariance.passed and self.inputs.passed

    def to_dict(self):
        return {
            "passed": self.passed,
            "invariance": self.invariance.to_dict(),
            "inputs": self.inputs.to_dict(),
            "delta": self.delta,
            "config": {
                "boundary_samples": self.config.boundary_samples,
                "interior_samples": self.config.interior_samples,
                "accel_points_per_axis": self.config.accel_points_per_axis,
                "tau": self.config.tau,
                "seed": self.config.seed,
            },
            "note": PASS_CAVEAT,
        }

    def save(self, path):
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        )


def certify_bundle(
    bundle: ControllerBundle, accel_box, cfg: CertConfig
) -> CertificationReport:
    return CertificationReport(
        invariance=certify_invariance(bundle, accel_box, cfg),
        inputs=certify_inputs(bundle, cfg),
        delta=bundle.delta_bound.to_dict(),
        config=cfg,
    )


@dataclass
class TubeReport:
    """Per-run comparison of tracking error against delta and robustness."""

    sup_error_position: float
    sup_error_velocity: float
    sup_error_translational: float
    per_vehicle: dict
    delta: float
    rho_planned: float
    rho_tracked: float
    within_delta: bool
    within_rho: bool
    chain_holds: bool

    def to_dict(self):
        return {
            "sup_error_position": float(self.sup_error_position),
            "sup_error_velocity": float(self.sup_error_velocity),
            "sup_error_translational": float(self.sup_error_translational),
            "per_vehicle": self.per_vehicle,
            "delta": float(self.delta),
            "rho_planned": float(self.rho_planned),
            "rho_tracked": float(self.rho_tracked),
            "within_delta": bool(self.within_delta),
            "within_rho": bool(self.within_rho),
            "chain_holds": bool(self.chain_holds),
        }

    def save(self, path):
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        )


def tube_check(
    logs: dict[str, "SimLog"],
    formula: Formula,
    rho_planned: float,
    delta: float,
) -> TubeReport:
    """Check sup ||C(x - G xhat)||_inf <= delta <= rho and monitor the
    tracked positions.

    The tracked robustness is evaluated on the simulation grid; chain_holds
    records whether the implication "error within delta and delta <= rho
    implies tracked robustness > 0" came out true on this run.
    """
    per_vehicle = {}
    sup_pos = sup_vel = 0.0
    dt = None
    vehicles = {}
    for name, log in sorted(logs.items()):
        if dt is None:
            dt = log.dt
        elif abs(dt - log.dt) > 1e-12:
            raise ValueError("simulation logs are not time-aligned")
        err_pos = float(np.abs(log.error[:, 0:3]).max())
        err_vel = float(np.abs(log.error[:, 3:6]).max())
        per_vehicle[name] = {
            "sup_error_position": err_pos,
            "sup_error_velocity": err_vel,
        }
        sup_pos = max(sup_pos, err_pos)
        sup_vel = max(sup_vel, err_vel)
        vehicles[name] = {"p": log.state[:, 0:3], "v": log.state[:, 3:6]}
    lengths = {v["p"].shape[0] for v in vehicles.values()}
    if len(lengths) != 1:
        raise ValueError("simulation logs are not time-aligned")
    tracked = MultiTrace.from_vehicles(dt, vehicles)
    rho_tracked = robustness(formula, tracked)
    sup_total = max(sup_pos, sup_vel)
    within_delta = sup_total <= delta
    within_rho = sup_pos < rho_planned
    chain_holds = (not (within_delta and delta <= rho_planned)) or rho_tracked > 0.0
    return TubeReport(
        sup_error_position=sup_pos,
        sup_error_velocity=sup_vel,
        sup_error_translational=sup_total,
        per_vehicle=per_vehicle,
        delta=delta,
        rho_planned=rho_planned,
        rho_tracked=float(rho_tracked),
        within_delta=within_delta,
        within_rho=within_rho,
        chain_holds=chain_holds,
    )
