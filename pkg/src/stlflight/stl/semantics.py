"""Horizon, quantitative robustness, and satisfaction verdicts.

Evaluation is discrete-time over the trace's uniform sample grid. Temporal
windows snap outward (floor for the window start, ceil for the end) so the
evaluated sample window always contains the real-time interval; the
continuous-time margin between samples is the planner's concern.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ast import And, Always, Eventually, Formula, Not, Or, Predicate, Until
from .trace import MultiTrace, TraceTooShortError

_SNAP_EPS = 1e-9


class Verdict(enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


def horizon(f: Formula) -> float:
    """Minimum signal duration (seconds) needed to evaluate `f` at time 0."""
    if isinstance(f, Predicate):
        return 0.0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon(c) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return f.interval[1] + horizon(f.child)
    if isinstance(f, Until):
        return f.interval[1] + max(horizon(f.left), horizon(f.right))
    raise TypeError(f"not a formula node: {f!r}")


def window_indices(interval: tuple[float, float], dt: float) -> tuple[int, int]:
    """Outward-snapped sample-index window [ia, ib] covering [a, b]."""
    a, b = interval
    ia = int(math.floor(a / dt + _SNAP_EPS))
    ib = int(math.ceil(b / dt - _SNAP_EPS))
    return ia, max(ia, ib)


def horizon_steps(f: Formula, dt: float) -> int:
    """Number of samples past the evaluation index the recursion consumes."""
    if isinstance(f, Predicate):
        return 0
    if isinstance(f, Not):
        return horizon_steps(f.child, dt)
    if isinstance(f, (And, Or)):
        return max(horizon_steps(c, dt) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return window_indices(f.interval, dt)[1] + horizon_steps(f.child, dt)
    if isinstance(f, Until):
        return window_indices(f.interval, dt)[1] + max(
            horizon_steps(f.left, dt), horizon_steps(f.right, dt)
        )
    raise TypeError(f"not a formula node: {f!r}")


def _require_length(f, n_valid, trace):
    if n_valid <= 0:
        raise TraceTooShortError(
            f"trace of duration {trace.duration:.6g}s is too short for a "
            f"formula with horizon {horizon(f):.6g}s "
            f"(needs {horizon_steps(f, trace.dt)} samples past the start)"
        )


def robustness_signal(f: Formula, trace: MultiTrace) -> np.ndarray:
    """Robustness of `f` at every sample index where its window fits.

    Returns an array of length M - horizon_steps(f); entry k is the
    robustness of `f` evaluated at sample k.
    """
    out = _rho(f, trace)
    _require_length(f, out.shape[0], trace)
    return out


def _rho(f: Formula, trace: MultiTrace) -> np.ndarray:
    dt = trace.dt
    if isinstance(f, Predicate):
        acc = np.full(trace.n_samples, f.offset, dtype=float)
        for ch, w in f.terms:
            acc = acc + w * trace.channel(ch)
        return acc
    if isinstance(f, Not):
        return -_rho(f.child, trace)
    if isinstance(f, (And, Or)):
        parts = [_rho(c, trace) for c in f.children]
        n = min(p.shape[0] for p in parts)
        _require_length(f, n, trace)
        stack = np.stack([p[:n] for p in parts])
        return stack.min(axis=0) if isinstance(f, And) else stack.max(axis=0)
    if isinstance(f, (Always, Eventually)):
        z = _rho(f.child, trace)
        ia, ib = window_indices(f.interval, dt)
        n = z.shape[0] - ib
        _require_length(f, n, trace)
        win = sliding_window_view(z, ib - ia + 1)[ia : ia + n]
        return win.min(axis=1) if isinstance(f, Always) else win.max(axis=1)
    if isinstance(f, Until):
        zl = _rho(f.left, trace)
        zr = _rho(f.right, trace)
        ia, ib = window_indices(f.interval, dt)
        n = min(zl.shape[0], zr.shape[0]) - ib
        _require_length(f, n, trace)
        # candidate at offset j: min(right[k+j], min over left[k..k+j])
        lw = sliding_window_view(zl, ib + 1)[:n]
        rw = sliding_window_view(zr, ib + 1)[:n]
        run_min = np.minimum.accumulate(lw, axis=1)
        cand = np.minimum(rw, run_min)[:, ia : ib + 1]
        return cand.max(axis=1)
    raise TypeError(f"not a formula node: {f!r}")


def _start_index(trace: MultiTrace, t0: float) -> int:
    k = t0 / trace.dt
    k0 = int(round(k))
    if abs(k - k0) > 1e-6:
        raise ValueError(
            f"evaluation start t0={t0} must lie on the sample grid (dt={trace.dt})"
        )
    if k0 < 0:
        raise ValueError("evaluation start t0 must be >= 0")
    return k0


def robustness(f: Formula, trace: MultiTrace, t0: float = 0.0) -> float:
    """Quantitative robustness of `f` on `trace` at start time `t0`.

    Positive means the trace satisfies `f`, negative means it violates it;
    zero is inconclusive (see `satisfies`).
    """
    k0 = _start_index(trace, t0)
    sig = robustness_signal(f, trace)
    if k0 >= sig.shape[0]:
        raise TraceTooShortError(
            f"t0={t0}s plus horizon {horizon(f):.6g}s exceeds the "
            f"trace duration {trace.duration:.6g}s"
        )
    return float(sig[k0])


def satisfies(f: Formula, trace: MultiTrace, t0: float = 0.0) -> Verdict:
    """Sign of the robustness as a verdict; exactly zero stays inconclusive."""
    rho = robustness(f, trace, t0)
    if rho > 0.0:
        return Verdict.SATISFIED
    if rho < 0.0:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE
