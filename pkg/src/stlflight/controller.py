"""Polynomial tracking controller, quadratic level sets, and the worst-case
tracking error they induce.

The shipped default bundle carries the published roll-channel polynomial
verbatim. The thrust and pitch channels, the level-set matrix P, and the
level eta are completions (the source gives only the roll channel): the
pitch channel mirrors the roll channel through the x/y symmetry of the
dynamics, thrust is an affine altitude law around hover, and P solves a
Lyapunov equation for the closed-loop linearization. Every completion is
admission-tested by the certifier before shipping; the worst-case error is
recomputed from this bundle's own level set rather than quoted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .quad import InputBox, QuadParams, error_input_matrix

N_ERR = 8


class MultiPoly:
    """Sparse multivariate polynomial in the 8 error coordinates.

    Stored as exponent rows (n_terms, 8) with matching coefficients;
    zero-coefficient terms are dropped on construction.
    """

    def __init__(self, terms: dict[tuple[int, ...], float]):
        cleaned = {
            tuple(int(p) for p in powers): float(c)
            for powers, c in terms.items()
            if c != 0.0
        }
        for powers in cleaned:
            if len(powers) != N_ERR or any(p < 0 for p in powers):
                raise ValueError(f"bad exponent vector {powers}")
        order = sorted(cleaned)
        self.powers = np.array(order, dtype=int).reshape(len(order), N_ERR)
        self.coeffs = np.array([cleaned[p] for p in order])

    @property
    def degree(self) -> int:
        return int(self.powers.sum(axis=1).max()) if len(self.coeffs) else 0

    def __call__(self, e) -> float:
        return float(self.eval_many(np.asarray(e, dtype=float)[None, :])[0])

    def eval_many(self, E: np.ndarray) -> np.ndarray:
        """Naive monomial-sum evaluation for a batch E of shape (m, 8)."""
        if len(self.coeffs) == 0:
            return np.zeros(E.shape[0])
        mono = np.prod(E[:, None, :] ** self.powers[None, :, :], axis=2)
        return mono @ self.coeffs

    def eval_nested(self, e) -> float:
        """Factored (Horner-by-variable) evaluation; cross-checks eval_many."""
        e = np.asarray(e, dtype=float)
        terms = list(zip(map(tuple, self.powers), self.coeffs))
        return _horner(terms, 0, e)

    def linear_part(self) -> np.ndarray:
        """Coefficients of the degree-1 monomials as an (8,) vector."""
        out = np.zeros(N_ERR)
        for powers, c in zip(self.powers, self.coeffs):
            if powers.sum() == 1:
                out[int(np.argmax(powers))] = c
        return out

    def substitute_signed_permutation(self, source_index, signs) -> "MultiPoly":
        """Polynomial q with q(e) = self(f), f_i = signs[i] * e[source_index[i]]."""
        terms: dict[tuple[int, ...], float] = {}
        for powers, c in zip(self.powers, self.coeffs):
            new_p = [0] * N_ERR
            coeff = float(c)
            for i, p in enumerate(powers):
                if p:
                    new_p[source_index[i]] += int(p)
                    coeff *= float(signs[i]) ** int(p)
            key = tuple(new_p)
            terms[key] = terms.get(key, 0.0) + coeff
        return MultiPoly(terms)

    def scaled(self, factor: float) -> "MultiPoly":
        return MultiPoly(
            {tuple(p): factor * c for p, c in zip(map(tuple, self.powers), self.coeffs)}
        )

    def to_list(self):
        return [
            {"powers": [int(p) for p in powers], "coeff": float(c)}
            for powers, c in zip(self.powers, self.coeffs)
        ]

    @classmethod
    def from_list(cls, items):
        return cls({tuple(item["powers"]): item["coeff"] for item in items})


def _horner(terms, var, e):
    """Horner ladder in e[var]; tails recurse on the remaining variables."""
    if not terms:
        return 0.0
    if var == N_ERR:
        return sum(c for _, c in terms)
    by_power: dict[int, list] = {}
    for powers, c in terms:
        by_power.setdefault(powers[var], []).append((powers, c))
    acc = 0.0
    last = None
    for p in sorted(by_power, reverse=True):
        if last is not None:
            acc *= e[var] ** (last - p)
        acc += _horner(by_power[p], var + 1, e)
        last = p
    if last:
        acc *= e[var] ** last
    return acc


@dataclass(frozen=True)
class QuadraticForm:
    """V(e) = e^T P e with P symmetric positive definite."""

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.shape != (N_ERR, N_ERR):
            raise ValueError("P must be 8x8")
        if np.abs(P - P.T).max() > 1e-9:
            raise ValueError("P must be symmetric")
        object.__setattr__(self, "P", 0.5 * (P + P.T))
        eigs = np.linalg.eigvalsh(self.P)
        if eigs.min() <= 0.0:
            raise ValueError("P must be positive definite")

    def __call__(self, e) -> float:
        e = np.asarray(e, dtype=float)
        return float(e @ self.P @ e)

    def value_many(self, E: np.ndarray) -> np.ndarray:
        return np.einsum("mi,ij,mj->m", E, self.P, E)

    def gradient(self, e) -> np.ndarray:
        return 2.0 * self.P @ np.asarray(e, dtype=float)

    def gradient_many(self, E: np.ndarray) -> np.ndarray:
        return 2.0 * E @ self.P

    def boundary_points(self, eta: float, n: int, rng) -> np.ndarray:
        """n points uniform (in the whitened metric) on {V = eta}."""
        w, U = np.linalg.eigh(self.P)
        half_inv = U @ np.diag(w**-0.5) @ U.T
        u = rng.normal(size=(n, N_ERR))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return np.sqrt(eta) * u @ half_inv.T


@dataclass(frozen=True)
class DeltaBound:
    """Per-coordinate extrema of e over the sublevel set, and their maxima."""

    per_coordinate: np.ndarray  # (8,)
    delta: float  # max over translational coordinates e1..e6
    delta_angles: float  # max over e7, e8, reported separately

    def to_dict(self):
        return {
            "per_coordinate": [float(v) for v in self.per_coordinate],
            "delta": float(self.delta),
            "delta_angles": float(self.delta_angles),
        }


def delta_from_levelset(V: QuadraticForm, eta: float) -> DeltaBound:
    """Coordinate bounding box of {e : V(e) <= eta}.

    max e_i over the ellipsoid is sqrt(eta * (P^-1)_ii); the headline value
    is the max over the translational coordinates, which is what the planner
    compares against the specification robustness. Angle bounds ride along.
    """
    if eta <= 0.0:
        raise ValueError("level eta must be positive")
    diag = np.diag(np.linalg.inv(V.P))
    per_coord = np.sqrt(eta * diag)
    return DeltaBound(
        per_coordinate=per_coord,
        delta=float(per_coord[:6].max()),
        delta_angles=float(per_coord[6:].max()),
    )


@dataclass(frozen=True)
class ControllerBundle:
    """Controller triple, level set, input box, and the induced error bound."""

    k_ft: MultiPoly
    k_ux: MultiPoly
    k_uy: MultiPoly
    V: QuadraticForm
    eta: float
    input_box: InputBox
    params: QuadParams

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("level eta must be positive")

    @property
    def delta_bound(self) -> DeltaBound:
        return delta_from_levelset(self.V, self.eta)

    @property
    def delta(self) -> float:
        return self.delta_bound.delta

    def raw_inputs(self, e) -> np.ndarray:
        return np.array([self.k_ft(e), self.k_ux(e), self.k_uy(e)])

    def raw_inputs_many(self, E: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [self.k_ft.eval_many(E), self.k_ux.eval_many(E), self.k_uy.eval_many(E)]
        )

    def controller_fn(self):
        """Unsaturated evaluator for the simulator (which applies the box)."""
        polys = (self.k_ft, self.k_ux, self.k_uy)

        def k(e):
            return np.array([p(e) for p in polys])

        return k

    def linearized_gain(self) -> np.ndarray:
        return np.vstack(
            [self.k_ft.linear_part(), self.k_ux.linear_part(), self.k_uy.linear_part()]
        )

    def to_dict(self):
        return {
            "k_ft": self.k_ft.to_list(),
            "k_ux": self.k_ux.to_list(),
            "k_uy": self.k_uy.to_list(),
            "P": [[float(v) for v in row] for row in self.V.P],
            "eta": float(self.eta),
            "input_box": {
                "ft_min": self.input_box.ft_min,
                "ft_max": self.input_box.ft_max,
                "ux_min": self.input_box.ux_min,
                "ux_max": self.input_box.ux_max,
                "uy_min": self.input_box.uy_min,
                "uy_max": self.input_box.uy_max,
            },
            "params": {
                "m": self.params.m,
                "I_x": self.params.I_x,
                "I_y": self.params.I_y,
                "g": self.params.g,
                "b": self.params.b,
                "l": self.params.l,
                "d": self.params.d,
            },
            "delta": self.delta_bound.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            k_ft=MultiPoly.from_list(data["k_ft"]),
            k_ux=MultiPoly.from_list(data["k_ux"]),
            k_uy=MultiPoly.from_list(data["k_uy"]),
            V=QuadraticForm(np.array(data["P"])),
            eta=float(data["eta"]),
            input_box=InputBox(**data["input_box"]),
            params=QuadParams(**data["params"]),
        )

    def save(self, path):
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def eval_controller(bundle: ControllerBundle, e) -> tuple[np.ndarray, bool]:
    """Inputs at error e, clamped to the bundle's box.

    The second value flags clamping: inside the certified level set the raw
    polynomials stay within the box, so a clamp means e has left it.
    """
    raw = bundle.raw_inputs(e)
    u = bundle.input_box.clamp(raw)
    return u, bool(np.any(u != raw))


def _published_roll_terms() -> dict[tuple[int, ...], float]:
    def mono(*pairs):
        powers = [0] * N_ERR
        for idx in pairs:
            powers[idx - 1] += 1
        return tuple(powers)

    return {
        mono(1, 6): 0.001,
        mono(2, 3): 0.083,
        mono(2, 6): 0.139,
        mono(3, 5): 0.070,
        mono(3, 7): -0.186,
        mono(3, 8): 0.003,
        mono(4, 6): 0.001,
        mono(5, 6): 0.120,
        mono(6, 7): -0.062,
        mono(6, 8): 0.001,
        mono(1): -0.001,
        mono(2): -0.289,
        mono(4): -0.002,
        mono(5): -0.320,
        mono(7): -1.142,
        mono(8): 0.001,
    }


def roll_controller() -> MultiPoly:
    """The published degree-2 roll-channel polynomial, verbatim."""
    return MultiPoly(_published_roll_terms())


def pitch_controller() -> MultiPoly:
    """Mirror of the roll channel through the x/y symmetry of the dynamics.

    The signed permutation f = (e2, e1, e3, e5, e4, e6, -e8, -e7) maps the
    linearized error dynamics onto themselves with (u_x, u_y) -> (-u_y, -u_x),
    so u_y(e) = -u_x(f) stabilizes the pitch/x channel exactly as the
    published polynomial stabilizes roll/y. This channel is a completion,
    not published data.
    """
    source = [1, 0, 2, 4, 3, 5, 7, 6]
    signs = [1, 1, 1, 1, 1, 1, -1, -1]
    return roll_controller().substitute_signed_permutation(source, signs).scaled(-1.0)


def thrust_controller(params: QuadParams, kp: float, kd: float) -> MultiPoly:
    """Affine altitude law around hover: f_t = m g + kp e3 + kd e6.

    Positive gains are stabilizing under the model's +g-down convention
    (thrust beyond hover accelerates toward negative z). A completion.
    """

    def mono(idx):
        powers = [0] * N_ERR
        powers[idx - 1] = 1
        return tuple(powers)

    const = tuple([0] * N_ERR)
    return MultiPoly({const: params.m * params.g, mono(3): kp, mono(6): kd})


def closed_loop_linearization(bundle: ControllerBundle) -> np.ndarray:
    """A + B K for the error dynamics at e = 0 under the bundle controller."""
    params = bundle.params
    A = np.zeros((N_ERR, N_ERR))
    A[0, 3] = A[1, 4] = A[2, 5] = 1.0
    # d/de of g_e(e) u at hover input (m g, 0, 0)
    A[3, 7] = -params.g
    A[4, 6] = params.g
    B = error_input_matrix(np.zeros(N_ERR), params)
    return A + B @ bundle.linearized_gain()


# Shipped-bundle design constants, frozen by the admission runs in the
# certifier tests. DESIGN_ACCEL is the reference-acceleration box the level
# set tolerates; missions must keep |a| within it for the bound to apply.
DEFAULT_THRUST_KP = 3.0
DEFAULT_THRUST_KD = 3.0
DESIGN_ACCEL = 1.0
_ANGLE_WEIGHT = 8.0
_LEVEL_INFLATION = 4.0
_ALPHA_GRID = np.geomspace(0.15, 2.8, 40)


def _invariant_block(A, b_dist, amax, weights):
    """Smallest disturbance-invariant ellipsoid of the block, by alpha sweep.

    For each alpha with A + (alpha/2) I Hurwitz, S solving
    A S + S A^T + alpha S + (amax^2/alpha) b b^T = 0 gives an invariant set
    {e : e^T S^-1 e <= 1} under |d| <= amax, with dV/dt <= alpha (1 - V), so
    any inflated level V <= mu > 1 keeps a strict linear decay margin.
    Returns the S minimizing the weighted coordinate extents.
    """
    best = None
    n = A.shape[0]
    for alpha in _ALPHA_GRID:
        shifted = A + 0.5 * alpha * np.eye(n)
        if np.linalg.eigvals(shifted).real.max() >= -1e-9:
            continue
        S = scipy.linalg.solve_continuous_lyapunov(
            shifted, -(amax**2 / alpha) * np.outer(b_dist, b_dist)
        )
        S = 0.5 * (S + S.T)
        if np.linalg.eigvalsh(S).min() <= 1e-12:
            continue
        score = (np.sqrt(np.diag(S)) * weights).max()
        if best is None or score < best[0]:
            best = (score, S)
    if best is None:
        raise RuntimeError("no stabilizing alpha found for the block design")
    return best[1]


def default_bundle(
    params: QuadParams | None = None,
    input_box: InputBox | None = None,
    design_accel: float = DESIGN_ACCEL,
) -> ControllerBundle:
    """The shipped bundle: published roll channel plus validated completions.

    P is block-diagonal over the roll/y, pitch/x, and thrust/z channels;
    each block is a disturbance-invariant ellipsoid for that channel's
    closed-loop linearization under reference accelerations up to
    `design_accel`, inflated to buy margin against the nonlinearities and
    cross couplings the blocks ignore. The certifier admission-tests the
    result; the induced delta is this bundle's own bound and intentionally
    not the published headline number.
    """
    params = params or QuadParams()
    input_box = input_box or InputBox()
    k_ux = roll_controller()
    k_uy = pitch_controller()
    k_ft = thrust_controller(params, DEFAULT_THRUST_KP, DEFAULT_THRUST_KD)
    lin_r = k_ux.linear_part()
    lin_p = k_uy.linear_part()
    g = params.g
    # closed-loop blocks: (e2,e5,e7) roll/y, (e1,e4,e8) pitch/x, (e3,e6) thrust/z
    A_y = np.array(
        [
            [0.0, 1.0, 0.0],
            [0.0, 0.0, g],
            [lin_r[1] / params.I_x, lin_r[4] / params.I_x, lin_r[6] / params.I_x],
        ]
    )
    A_x = np.array(
        [
            [0.0, 1.0, 0.0],
            [0.0, 0.0, -g],
            [lin_p[0] / params.I_y, lin_p[3] / params.I_y, lin_p[7] / params.I_y],
        ]
    )
    A_z = np.array(
        [[0.0, 1.0], [-DEFAULT_THRUST_KP / params.m, -DEFAULT_THRUST_KD / params.m]]
    )
    tilt_weights = np.array([1.0, 1.0, _ANGLE_WEIGHT])
    S_x = _invariant_block(A_x, np.array([0.0, 1.0, 0.0]), design_accel, tilt_weights)
    S_y = _invariant_block(A_y, np.array([0.0, 1.0, 0.0]), design_accel, tilt_weights)
    S_z = _invariant_block(A_z, np.array([0.0, 1.0]), design_accel, np.ones(2))
    P = np.zeros((N_ERR, N_ERR))
    for S, idx in ((S_x, (0, 3, 7)), (S_y, (1, 4, 6)), (S_z, (2, 5))):
        block = np.linalg.inv(S) / _LEVEL_INFLATION
        for a, i in enumerate(idx):
            for b, j in enumerate(idx):
                P[i, j] += block[a, b]
    return ControllerBundle(
        k_ft=k_ft,
        k_ux=k_ux,
        k_uy=k_uy,
        V=QuadraticForm(0.5 * (P + P.T)),
        eta=1.0,
        input_box=input_box,
        params=params,
    )
