"""Uniformly sampled multi-channel signals (one or more vehicles)."""

from __future__ import annotations

import numpy as np

from .ast import AXES


class TraceTooShortError(ValueError):
    """Trace does not cover the horizon needed to evaluate a formula."""


class MultiTrace:
    """Uniformly sampled scalar channels sharing one period and sample count.

    Channels are named strings ("uav1.p.x", "uav1.v.z", or anything the
    specification declares). Vehicle traces carry position/velocity/
    acceleration triplets per axis; see `from_vehicles`.
    """

    def __init__(self, dt: float, channels: dict[str, np.ndarray]):
        dt = float(dt)
        if dt <= 0.0:
            raise ValueError("sample period must be positive")
        if not channels:
            raise ValueError("trace needs at least one channel")
        arrays = {}
        n = None
        for name, vals in channels.items():
            arr = np.asarray(vals, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"channel {name!r} is not a 1-D sample array")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise ValueError("all channels must share the sample count")
            arrays[name] = arr
        if n < 1:
            raise ValueError("trace needs at least one sample")
        self.dt = dt
        self.channels = arrays
        self.n_samples = n

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(f"trace has no channel {name!r}") from None

    @classmethod
    def from_vehicles(cls, dt: float, vehicles: dict[str, dict[str, np.ndarray]]):
        """Build a trace from per-vehicle (M,3) arrays keyed "p"/"v"/"a".

        Channel names become "<vehicle>.<kind>.<axis>".
        """
        channels: dict[str, np.ndarray] = {}
        for veh, kinds in vehicles.items():
            for kind, arr in kinds.items():
                arr = np.asarray(arr, dtype=float)
                if arr.ndim != 2 or arr.shape[1] != 3:
                    raise ValueError(f"{veh}.{kind} must be an (M, 3) array")
                for j, axis in enumerate(AXES):
                    channels[f"{veh}.{kind}.{axis}"] = arr[:, j]
        return cls(dt, channels)

    def __repr__(self):
        return (
            f"MultiTrace(dt={self.dt}, n_samples={self.n_samples}, "
            f"channels={sorted(self.channels)!r})"
        )
