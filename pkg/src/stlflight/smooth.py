"""Differentiable robustness surrogate and its worst-case gap.

Min/max aggregations are replaced by logsumexp smoothing with temperature C:
larger C tracks the exact semantics more tightly at the cost of sharper
exponentials (handled with max-subtraction). Each aggregation over N values
is off by at most ln(N)/C, and the gaps accumulate additively through
nesting; `approximation_error` returns that bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .stl.ast import And, Always, Eventually, Formula, Not, Or, Predicate, Until
from .stl.semantics import _require_length, _start_index, window_indices
from .stl.trace import MultiTrace, TraceTooShortError


@dataclass(frozen=True)
class SmoothConfig:
    """Temperature (1 / robustness-unit) for the logsumexp smoothing."""

    C: float = 25.0

    def __post_init__(self):
        if self.C <= 0.0:
            raise ValueError("smoothing temperature C must be positive")


def smooth_max(values, C: float) -> float:
    """(1/C) ln sum exp(C v): within [max(v), max(v) + ln(n)/C]."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("smooth_max of an empty collection")
    if C <= 0.0:
        raise ValueError("smoothing temperature C must be positive")
    m = v.max()
    return float(m + np.log(np.exp(C * (v - m)).sum()) / C)


def smooth_min(values, C: float) -> float:
    """-smooth_max(-v): within [min(v) - ln(n)/C, min(v)]."""
    v = np.asarray(values, dtype=float)
    return -smooth_max(-v, C)


def _smax(a: np.ndarray, C: float, axis: int):
    """Stable logsumexp max along `axis` plus the softmax weights."""
    m = a.max(axis=axis, keepdims=True)
    e = np.exp(C * (a - m))
    s = e.sum(axis=axis, keepdims=True)
    vals = (m + np.log(s) / C).squeeze(axis)
    return vals, e / s


def _smin(a: np.ndarray, C: float, axis: int):
    vals, w = _smax(-a, C, axis)
    return -vals, w


def _pad(g: np.ndarray, length: int) -> np.ndarray:
    """Zero-extend a gradient seed to a node's full signal length.

    Parents may evaluate a child only on a prefix of its signal (siblings
    with longer horizons shorten the shared index range)."""
    if g.shape[0] == length:
        return g
    out = np.zeros(length)
    out[: g.shape[0]] = g
    return out


def _eval(f: Formula, trace: MultiTrace, C: float, grads: dict | None):
    """Smoothed robustness signal plus a reverse-mode closure.

    Returns (vals, backward). `backward(g)` scatters d(out)/d(channel sample)
    contributions weighted by g into `grads`; it is None when grads is None.
    """
    dt = trace.dt
    if isinstance(f, Predicate):
        vals = np.full(trace.n_samples, f.offset, dtype=float)
        for ch, w in f.terms:
            vals = vals + w * trace.channel(ch)
        if grads is None:
            return vals, None

        def backward(g, _terms=f.terms, _n=trace.n_samples):
            for ch, w in _terms:
                acc = grads.setdefault(ch, np.zeros(_n))
                acc[: g.shape[0]] += w * g

        return vals, backward

    if isinstance(f, Not):
        vals, bw = _eval(f.child, trace, C, grads)
        if grads is None:
            return -vals, None
        return -vals, lambda g: bw(-g)

    if isinstance(f, (And, Or)):
        parts = [_eval(c, trace, C, grads) for c in f.children]
        n = min(p[0].shape[0] for p in parts)
        _require_length(f, n, trace)
        stack = np.stack([p[0][:n] for p in parts])
        if isinstance(f, And):
            vals, w = _smin(stack, C, axis=0)
        else:
            vals, w = _smax(stack, C, axis=0)
        if grads is None:
            return vals, None

        def backward(g, _parts=parts, _w=w, _n=n):
            g = _pad(g, _n)
            for i, (vals_i, bw) in enumerate(_parts):
                bw(_pad(_w[i] * g, vals_i.shape[0]))

        return vals, backward

    if isinstance(f, (Always, Eventually)):
        z, bw = _eval(f.child, trace, C, grads)
        ia, ib = window_indices(f.interval, dt)
        n = z.shape[0] - ib
        _require_length(f, n, trace)
        win = sliding_window_view(z, ib - ia + 1)[ia : ia + n]
        if isinstance(f, Always):
            vals, w = _smin(win, C, axis=1)
        else:
            vals, w = _smax(win, C, axis=1)
        if grads is None:
            return vals, None

        def backward(g, _bw=bw, _w=w, _ia=ia, _n=n, _nz=z.shape[0]):
            g = _pad(g, _n)
            gz = np.zeros(_nz)
            for j in range(_w.shape[1]):
                gz[_ia + j : _ia + j + _n] += _w[:, j] * g
            _bw(gz)

        return vals, backward

    if isinstance(f, Until):
        zl, bwl = _eval(f.left, trace, C, grads)
        zr, bwr = _eval(f.right, trace, C, grads)
        ia, ib = window_indices(f.interval, dt)
        n = min(zl.shape[0], zr.shape[0]) - ib
        _require_length(f, n, trace)
        lw = sliding_window_view(zl, ib + 1)[:n]
        rw = sliding_window_view(zr, ib + 1)[:n]
        # candidate at offset j: smooth_min(right[k+j], smooth_min(left[k..k+j]))
        offsets = range(ia, ib + 1)
        cand = np.empty((n, len(list(offsets))))
        prefix_w = []  # per offset: softmax weights of the prefix smooth_min
        pair_w = []
        for col, j in enumerate(range(ia, ib + 1)):
            pm, wprefix = _smin(lw[:, : j + 1], C, axis=1)
            pair = np.stack([rw[:, j], pm])
            q, wpair = _smin(pair, C, axis=0)
            cand[:, col] = q
            prefix_w.append(wprefix)
            pair_w.append(wpair)
        vals, wout = _smax(cand, C, axis=1)
        if grads is None:
            return vals, None

        def backward(g):
            g = _pad(g, n)
            gl = np.zeros(zl.shape[0])
            gr = np.zeros(zr.shape[0])
            for col, j in enumerate(range(ia, ib + 1)):
                gq = wout[:, col] * g
                gr[j : j + n] += pair_w[col][0] * gq
                gm = pair_w[col][1] * gq
                wprefix = prefix_w[col]
                for jj in range(j + 1):
                    gl[jj : jj + n] += wprefix[:, jj] * gm
            bwl(gl)
            bwr(gr)

        return vals, backward

    raise TypeError(f"not a formula node: {f!r}")


def smooth_robustness(
    f: Formula, trace: MultiTrace, cfg: SmoothConfig, t0: float = 0.0
) -> float:
    """Smoothed robustness; within approximation_error(f, dt, cfg) of the exact value."""
    k0 = _start_index(trace, t0)
    vals, _ = _eval(f, trace, cfg.C, None)
    _require_length(f, vals.shape[0], trace)
    if k0 >= vals.shape[0]:
        raise TraceTooShortError(
            f"t0={t0}s plus the formula horizon exceeds the trace duration"
        )
    return float(vals[k0])


def smooth_robustness_gradient(
    f: Formula, trace: MultiTrace, cfg: SmoothConfig, t0: float = 0.0
) -> tuple[float, dict[str, np.ndarray]]:
    """Smoothed robustness and its exact gradient w.r.t. every channel sample.

    The gradient dict maps channel name to an (M,) array; channels the
    formula never touches are absent.
    """
    k0 = _start_index(trace, t0)
    grads: dict[str, np.ndarray] = {}
    vals, backward = _eval(f, trace, cfg.C, grads)
    _require_length(f, vals.shape[0], trace)
    if k0 >= vals.shape[0]:
        raise TraceTooShortError(
            f"t0={t0}s plus the formula horizon exceeds the trace duration"
        )
    seed = np.zeros(vals.shape[0])
    seed[k0] = 1.0
    backward(seed)
    return float(vals[k0]), grads


def approximation_error(f: Formula, dt: float, cfg: SmoothConfig) -> float:
    """Worst-case |smooth - exact| bound for traces sampled at period dt.

    Each smoothed aggregation over N values contributes ln(N)/C; the
    contributions add up along the nesting of the formula. The bound is
    conservative and holds for every trace long enough to evaluate.
    """
    C = cfg.C
    if isinstance(f, Predicate):
        return 0.0
    if isinstance(f, Not):
        return approximation_error(f.child, dt, cfg)
    if isinstance(f, (And, Or)):
        worst = max(approximation_error(c, dt, cfg) for c in f.children)
        return math.log(len(f.children)) / C + worst
    if isinstance(f, (Always, Eventually)):
        ia, ib = window_indices(f.interval, dt)
        return math.log(ib - ia + 1) / C + approximation_error(f.child, dt, cfg)
    if isinstance(f, Until):
        ia, ib = window_indices(f.interval, dt)
        worst = max(
            approximation_error(f.left, dt, cfg),
            approximation_error(f.right, dt, cfg),
        )
        return (
            math.log(ib - ia + 1) / C
            + math.log(2.0) / C
            + math.log(ib + 1) / C
            + worst
        )
    raise TypeError(f"not a formula node: {f!r}")
