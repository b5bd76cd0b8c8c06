"""Shipped mission fixtures for the two case studies.

The published starting positions and specification structure are kept; the
region boxes are reconstructions (the source gives no numeric extents),
sized so the shipped controller bundle's tracking bound is attainable with
margin. Both missions use the acceleration limits the bundle was certified
against.
"""

from __future__ import annotations

from .mission import Mission, UavStart
from .splines import KinematicLimits
from .stl import Box

LIMITS = KinematicLimits(
    v_min=-3.0, v_max=3.0, a_min=-1.0, a_max=1.0, j_min=-4.0, j_max=4.0
)

_PLANNER = {"N": 4, "T": 2.5, "dt": 0.125, "restarts": 4, "seed": 0, "smooth_C": 25.0}
_SIM = {"dt": 0.001}
_CERT = {"boundary_samples": 100000, "interior_samples": 20000, "seed": 0}


def reach_avoid() -> Mission:
    """Two vehicles reach a goal within 8 s, avoid a no-fly pillar, and keep
    0.2 m inf-norm separation throughout."""
    spec = (
        "( F[0,8] (uav1.p in Goal) & G[0,8] !(uav1.p in Unsafe) )\n"
        "& ( F[0,8] (uav2.p in Goal) & G[0,8] !(uav2.p in Unsafe) )\n"
        "& G[0,8] (dist_inf(uav1.p, uav2.p) >= 0.2)\n"
    )
    return Mission(
        name="reach_avoid",
        workspace=Box(lower=(-8.0, -6.0, 0.0), upper=(8.0, 8.0, 8.0)),
        regions={
            "Goal": Box(lower=(1.0, -5.0, 1.0), upper=(8.0, 7.0, 7.0)),
            "Unsafe": Box(lower=(-2.5, -2.0, 0.0), upper=(-0.5, 2.5, 8.0)),
        },
        uavs=[
            UavStart(name="uav1", position=(-5.0, 0.0, 2.75)),
            UavStart(name="uav2", position=(-5.0, 2.0, 4.0)),
        ],
        spec_text=spec,
        limits=LIMITS,
        planner=dict(_PLANNER),
        sim=dict(_SIM),
        cert=dict(_CERT),
    )


def multi_mission() -> Mission:
    """Four vehicles, 20 s horizon: a patrol pair alternates between two
    zones on a timetable while a delivery pair visits a drop-off region and
    then a base, all avoiding two pillars and keeping pairwise separation."""
    patrol = (
        "F[0,5] ({u}.p in Zone1) & F[5,10] ({u}.p in Zone2) & "
        "F[10,15] ({u}.p in Zone1) & F[15,20] ({u}.p in Zone2)"
    )
    delivery = "F[0,10] ({u}.p in Deliver) & F[10,20] ({u}.p in Base)"
    names = ["uav1", "uav2", "uav3", "uav4"]
    parts = [f"( {patrol.format(u='uav1')} )", f"( {patrol.format(u='uav2')} )"]
    parts += [f"( {delivery.format(u='uav3')} )", f"( {delivery.format(u='uav4')} )"]
    for u in names:
        parts.append(f"G[0,20] !({u}.p in Unsafe1)")
        parts.append(f"G[0,20] !({u}.p in Unsafe2)")
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            parts.append(f"G[0,20] (dist_inf({a}.p, {b}.p) >= 0.2)")
    spec = "\n& ".join(parts) + "\n"
    planner = dict(_PLANNER)
    planner.update({"N": 8, "restarts": 3})
    return Mission(
        name="multi_mission",
        workspace=Box(lower=(-12.0, -8.0, 0.0), upper=(12.0, 8.0, 8.0)),
        regions={
            "Zone1": Box(lower=(-10.5, 1.5, 1.0), upper=(-4.5, 7.5, 7.0)),
            "Zone2": Box(lower=(-10.5, -7.5, 1.0), upper=(-4.5, -1.5, 7.0)),
            "Deliver": Box(lower=(3.5, -5.0, 1.0), upper=(10.5, 2.0, 7.0)),
            "Base": Box(lower=(3.5, 3.0, 1.0), upper=(10.5, 8.0, 7.0)),
            "Unsafe1": Box(lower=(-2.5, 1.5, 0.0), upper=(-0.5, 8.0, 8.0)),
            "Unsafe2": Box(lower=(-2.5, -8.0, 0.0), upper=(-0.5, -4.5, 8.0)),
        },
        uavs=[
            UavStart(name="uav1", position=(-9.0, 4.5, 4.0)),
            UavStart(name="uav2", position=(-6.0, 4.5, 4.0)),
            UavStart(name="uav3", position=(-5.5, -1.5, 2.0)),
            UavStart(name="uav4", position=(-8.5, -1.5, 4.0)),
        ],
        spec_text=spec,
        limits=LIMITS,
        planner=planner,
        sim=dict(_SIM),
        cert=dict(_CERT),
    )


SCENARIOS = {"reach_avoid": reach_avoid, "multi_mission": multi_mission}
