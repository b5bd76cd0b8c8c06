"""Mission files: vehicles, named regions, specification text, and configs.

Missions are canonical JSON (sorted keys, two-space indent, trailing
newline) so regression fixtures diff cleanly and round-trip byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .splines import KinematicLimits
from .stl import Box, Formula, horizon, parse_spec
from .stl.ast import AXES


@dataclass(frozen=True)
class UavStart:
    name: str
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))


@dataclass
class Mission:
    name: str
    workspace: Box
    regions: dict[str, Box]
    uavs: list[UavStart]
    spec_text: str
    limits: KinematicLimits
    planner: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    cert: dict = field(default_factory=dict)
    delta: float | None = None  # overrides the bundle's bound when set
    bundle: str | None = None  # path to a serialized bundle; None = shipped default

    def channels(self) -> set[str]:
        chans = set()
        for uav in self.uavs:
            for kind in ("p", "v", "a"):
                for axis in AXES:
                    chans.add(f"{uav.name}.{kind}.{axis}")
        return chans

    def formula(self) -> Formula:
        return parse_spec(self.spec_text, regions=self.regions, channels=self.channels())

    def validate(self) -> None:
        """Invariants: starts inside the workspace, horizon within the plan."""
        if not self.uavs:
            raise ValueError("mission declares no vehicles")
        names = [u.name for u in self.uavs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate vehicle names")
        lo, hi = self.workspace.lower, self.workspace.upper
        for uav in self.uavs:
            for i in range(3):
                if not (lo[i] <= uav.position[i] <= hi[i]):
                    raise ValueError(
                        f"{uav.name} starts at {uav.position}, outside the workspace"
                    )
        f = self.formula()  # raises on undeclared regions/channels
        hrz = horizon(f)
        N = self.planner.get("N")
        T = self.planner.get("T")
        if N is not None and T is not None and N * T < hrz - 1e-9:
            raise ValueError(
                f"plan duration N*T = {N * T}s does not cover the horizon {hrz}s"
            )

    def to_dict(self):
        return {
            "name": self.name,
            "workspace": _box_dict(self.workspace),
            "regions": {n: _box_dict(b) for n, b in sorted(self.regions.items())},
            "uavs": [
                {
                    "name": u.name,
                    "position": list(u.position),
                    "velocity": list(u.velocity),
                }
                for u in self.uavs
            ],
            "spec": self.spec_text,
            "limits": {
                "v_min": self.limits.v_min,
                "v_max": self.limits.v_max,
                "a_min": self.limits.a_min,
                "a_max": self.limits.a_max,
                "j_min": self.limits.j_min,
                "j_max": self.limits.j_max,
            },
            "planner": self.planner,
            "sim": self.sim,
            "cert": self.cert,
            "delta": self.delta,
            "bundle": self.bundle,
        }

    @classmethod
    def from_dict(cls, data) -> "Mission":
        return cls(
            name=data["name"],
            workspace=_box_from(data["workspace"]),
            regions={n: _box_from(b) for n, b in data.get("regions", {}).items()},
            uavs=[
                UavStart(
                    name=u["name"],
                    position=tuple(u["position"]),
                    velocity=tuple(u.get("velocity", (0.0, 0.0, 0.0))),
                )
                for u in data["uavs"]
            ],
            spec_text=data["spec"],
            limits=KinematicLimits(**data["limits"]),
            planner=data.get("planner", {}),
            sim=data.get("sim", {}),
            cert=data.get("cert", {}),
            delta=data.get("delta"),
            bundle=data.get("bundle"),
        )

    def save(self, path) -> None:
        Path(path).write_text(canonical_json(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Mission":
        mission = cls.from_dict(json.loads(Path(path).read_text()))
        mission.validate()
        return mission


def _box_dict(box: Box):
    return {"lower": list(box.lower), "upper": list(box.upper)}


def _box_from(data) -> Box:
    return Box(lower=tuple(data["lower"]), upper=tuple(data["upper"]))


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_trace_csv(trace, path) -> None:
    """Columnar trace file: time plus one column per channel, sorted names."""
    names = sorted(trace.channels)
    header = ",".join(["time"] + names)
    times = np.arange(trace.n_samples) * trace.dt
    lines = [header]
    for i in range(trace.n_samples):
        row = [repr(float(times[i]))] + [
            repr(float(trace.channels[n][i])) for n in names
        ]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path):
    """Inverse of `write_trace_csv`; checks the time grid is uniform."""
    from .stl import MultiTrace

    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    if header[0] != "time":
        raise ValueError("trace file must start with a 'time' column")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    if data.shape[0] < 2:
        raise ValueError("trace file needs at least two samples")
    times = data[:, 0]
    dts = np.diff(times)
    if np.abs(dts - dts[0]).max() > 1e-9 * max(1.0, abs(dts[0])):
        raise ValueError("trace file is not uniformly sampled")
    channels = {name: data[:, i + 1] for i, name in enumerate(header[1:])}
    return MultiTrace(float(dts[0]), channels)
