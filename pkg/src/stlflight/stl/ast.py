"""Formula tree for timed temporal specifications over named scalar channels.

Nodes are immutable; a formula can safely be shared between threads and
evaluated on many traces concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in 3-D, lower <= upper componentwise."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]

    def __post_init__(self):
        if len(self.lower) != 3 or len(self.upper) != 3:
            raise ValueError("Box bounds must be 3-D")
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        for lo, hi in zip(self.lower, self.upper):
            if lo > hi:
                raise ValueError(f"Box has lower {lo} > upper {hi}")

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple(0.5 * (lo + hi) for lo, hi in zip(self.lower, self.upper))

    @property
    def extent(self) -> tuple[float, float, float]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))


@dataclass(frozen=True)
class Predicate:
    """Affine predicate  sum_i coeff_i * channel_i + offset >= 0.

    The robustness of the predicate at a sample is exactly the affine value.
    """

    terms: tuple[tuple[str, float], ...]
    offset: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not self.terms:
            raise ValueError("predicate needs at least one channel term")
        object.__setattr__(
            self, "terms", tuple((str(c), float(w)) for c, w in self.terms)
        )
        object.__setattr__(self, "offset", float(self.offset))

    def channels(self) -> set[str]:
        return {c for c, _ in self.terms}


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("empty conjunction")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("empty disjunction")
        object.__setattr__(self, "children", tuple(self.children))


def _check_interval(interval):
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 <= a <= b):
        raise ValueError(f"bad time interval [{a}, {b}]: need 0 <= a <= b")
    if b == float("inf"):
        raise ValueError("unbounded intervals are not supported")
    return (a, b)


@dataclass(frozen=True)
class Always:
    interval: tuple[float, float]
    child: "Formula"

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))


@dataclass(frozen=True)
class Eventually:
    interval: tuple[float, float]
    child: "Formula"

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))


@dataclass(frozen=True)
class Until:
    interval: tuple[float, float]
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))


Formula = Predicate | Not | And | Or | Always | Eventually | Until


def in_box(prefix: str, box: Box, label: str = "") -> And:
    """Membership of the 3-D point channel `prefix` (+ .x/.y/.z) in `box`.

    Expands to a conjunction of 6 affine face predicates; the conjunction's
    robustness is the inf-norm signed distance to the box boundary, positive
    inside.
    """
    preds = []
    for axis, lo, hi in zip(AXES, box.lower, box.upper):
        ch = f"{prefix}.{axis}"
        preds.append(Predicate(terms=((ch, 1.0),), offset=-lo, label=f"{ch}>={lo}"))
        preds.append(Predicate(terms=((ch, -1.0),), offset=hi, label=f"{ch}<={hi}"))
    return And(tuple(preds))


def min_separation(prefix_a: str, prefix_b: str, margin: float) -> Or:
    """Inf-norm separation ||a - b||_inf >= margin between two 3-D channels.

    Expands to a disjunction of 6 affine predicates (escape along any axis,
    in either direction); the disjunction's robustness is ||a-b||_inf - margin.
    """
    margin = float(margin)
    preds = []
    for axis in AXES:
        ca, cb = f"{prefix_a}.{axis}", f"{prefix_b}.{axis}"
        preds.append(Predicate(terms=((ca, 1.0), (cb, -1.0)), offset=-margin))
        preds.append(Predicate(terms=((ca, -1.0), (cb, 1.0)), offset=-margin))
    return Or(tuple(preds))


def formula_channels(f: Formula) -> set[str]:
    """All channel names referenced by predicates in `f`."""
    if isinstance(f, Predicate):
        return f.channels()
    if isinstance(f, Not):
        return formula_channels(f.child)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for c in f.children:
            out |= formula_channels(c)
        return out
    if isinstance(f, (Always, Eventually)):
        return formula_channels(f.child)
    if isinstance(f, Until):
        return formula_channels(f.left) | formula_channels(f.right)
    raise TypeError(f"not a formula node: {f!r}")
