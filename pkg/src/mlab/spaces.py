"""Norm functionals: weighted Lebesgue, Morrey, BMO, weak Lebesgue.

Sup-type norms are taken over a :class:`~mlab.lattice.BallFamily` and come
back as a :class:`NormReport` carrying the witness ball, so refinement studies
can watch where the supremum sits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Ball, BallFamily, GridFunction, ball_mask
from .weights import Weight

__all__ = [
    "MorreyParams",
    "NormReport",
    "DegenerateInputError",
    "weighted_lebesgue_norm",
    "morrey_norm",
    "weighted_mean",
    "ball_means",
    "bmo_norm",
    "bmo_equivalence_ratio",
    "weak_norm",
    "kolmogorov_functional",
    "kolmogorov_bounds",
    "mean_drift_constant",
    "weighted_mean_shift_constant",
]


class DegenerateInputError(ValueError):
    """A ratio was requested whose denominator vanishes."""


def _weight_values(w: Weight | None, f: GridFunction) -> np.ndarray:
    if w is None:
        return np.ones(f.grid.shape)
    if w.grid != f.grid:
        raise ValueError("weight and function live on different grids")
    return w.values


@dataclass(frozen=True)
class MorreyParams:
    """Exponent ``p``, Morrey index ``kappa`` and the weight pair ``(u, v)``.

    ``v`` defaults to ``u``; ``u = None`` means the unit weight.
    """

    p: float
    kappa: float
    u: Weight | None = None
    v: Weight | None = None

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"Morrey exponent must satisfy p >= 1, got {self.p}")
        if not 0 <= self.kappa < 1:
            raise ValueError(f"Morrey index must satisfy 0 <= kappa < 1, got {self.kappa}")
        if self.v is None:
            object.__setattr__(self, "v", self.u)

    def describe(self) -> dict:
        return {
            "p": self.p,
            "kappa": self.kappa,
            "u": self.u.label if self.u is not None else "const:1",
            "v": self.v.label if self.v is not None else "const:1",
        }


@dataclass(frozen=True)
class NormReport:
    norm_id: str
    value: float
    witness: Ball | None = None
    family_id: str | None = None
    params: dict = field(default_factory=dict)

    def __float__(self):
        return self.value

    def record(self) -> dict:
        return {
            "norm_id": self.norm_id,
            "params": self.params,
            "value": self.value,
            "witness_center": list(self.witness.center) if self.witness else None,
            "witness_radius": self.witness.radius if self.witness else None,
            "family_id": self.family_id,
        }


def weighted_lebesgue_norm(f: GridFunction, p: float, w: Weight | None = None) -> float:
    """``(integral |f|^p w)^(1/p)`` over the whole domain."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    wv = _weight_values(w, f)
    total = f.grid.cell_volume * float(np.sum(np.abs(f.values) ** p * wv))
    return total ** (1.0 / p)


def _argmax_report(norm_id, vals, family, params) -> NormReport:
    flat = int(np.argmax(vals))
    return NormReport(norm_id, float(vals.flat[flat]), family.ball_at(flat), family.family_id, params)


def morrey_norm(f: GridFunction, params: MorreyParams, family: BallFamily) -> NormReport:
    """``sup_B (v(B)^-kappa integral_B |f|^p u)^(1/p)`` over ``family``."""
    u = _weight_values(params.u, f)
    v = _weight_values(params.v, f)
    dv = f.grid.cell_volume
    mass = dv * family.reduce(np.abs(f.values) ** params.p * u)
    vb = dv * family.reduce(v)
    vals = (mass / vb**params.kappa) ** (1.0 / params.p)
    return _argmax_report("morrey", vals, family, params.describe())


def weighted_mean(b: GridFunction, w: Weight | None, ball: Ball) -> float:
    """``w(B)^-1 integral_B b w``; with ``w = None`` the plain ball average."""
    mask = ball_mask(b.grid, ball)
    if not mask.any():
        raise DegenerateInputError(f"ball {ball} holds no cell")
    wv = _weight_values(w, b)[mask]
    return float(np.sum(b.values[mask] * wv) / np.sum(wv))


def ball_means(b: GridFunction, family: BallFamily, w: Weight | None = None) -> np.ndarray:
    """Weighted means of ``b`` over every ball, shape ``(n_rows, n_radii)``."""
    wv = _weight_values(w, b)
    return family.reduce(b.values * wv) / family.reduce(wv)


def _oscillations(b: GridFunction, w: Weight | None, family: BallFamily) -> np.ndarray:
    wv = _weight_values(w, b)
    means = ball_means(b, family, w)
    out = np.empty((family.n_rows, family.n_radii))
    for k in range(family.n_radii):
        for rows, mask, (bb, ww) in family.windows(k, [b.values, wv]):
            dev = np.abs(bb - means[rows, k][:, None]) * ww * mask
            out[rows, k] = dev.sum(axis=1) / (ww * mask).sum(axis=1)
    return out


def bmo_norm(b: GridFunction, w: Weight | None, family: BallFamily) -> NormReport:
    """Largest (weighted) mean oscillation of ``b`` over the family."""
    osc = _oscillations(b, w, family)
    label = w.label if w is not None else "const:1"
    return _argmax_report("bmo", osc, family, {"w": label})


def bmo_equivalence_ratio(b: GridFunction, w: Weight, family: BallFamily) -> tuple[float, float]:
    """``(||b||_{*,w} / ||b||_*, ||b||_* / ||b||_{*,w})``."""
    weighted = bmo_norm(b, w, family).value
    plain = bmo_norm(b, None, family).value
    if weighted == 0 or plain == 0:
        raise DegenerateInputError("b has zero oscillation on the family; the ratio is undefined")
    return weighted / plain, plain / weighted


def weak_norm(f: GridFunction, l: float) -> float:
    """``sup_t t |{|f| > t}|^(1/l)``, exact on the discrete level sets.

    With magnitudes sorted as ``a_1 >= a_2 >= ...`` the supremum equals
    ``max_k a_k (k h^n)^(1/l)``.
    """
    if not l > 0:
        raise ValueError(f"l must be positive, got {l}")
    a = np.sort(np.abs(f.values).ravel())[::-1]
    k = np.arange(1, a.size + 1)
    return float(np.max(a * (k * f.grid.cell_volume) ** (1.0 / l)))


def kolmogorov_functional(
    f: GridFunction, l: float, r: float, family: BallFamily | None = None
) -> float:
    """``sup_E ||f chi_E||_r / ||chi_E||_h`` with ``1/h = 1/r - 1/l``.

    Without ``family`` the supremum runs over every union of cells: for a
    fixed measure the best set holds the largest magnitudes, so the value is
    a maximum over prefix sums of the decreasing rearrangement.  With
    ``family`` the sets are restricted to its balls.
    """
    if not 0 < r < l:
        raise ValueError(f"need 0 < r < l, got r={r}, l={l}")
    inv_h = 1.0 / r - 1.0 / l
    dv = f.grid.cell_volume
    mag = np.abs(f.values)
    if family is None:
        a = np.sort(mag.ravel())[::-1]
        mass = dv * np.cumsum(a**r)
        meas = dv * np.arange(1, a.size + 1)
    else:
        mass = dv * family.reduce(mag**r)
        meas = family.measures()
    return float(np.max(mass ** (1.0 / r) / meas**inv_h))


def kolmogorov_bounds(f: GridFunction, l: float, r: float) -> tuple[float, float, float]:
    """``(weak norm, N_{l,r}, (l/(l-r))^(1/r) * weak norm)``; the middle sits between the ends."""
    weak = weak_norm(f, l)
    return weak, kolmogorov_functional(f, l, r), (l / (l - r)) ** (1.0 / r) * weak


def mean_drift_constant(b: GridFunction, family: BallFamily) -> tuple[float, Ball, int]:
    """Largest ``|b_{2^{j+1}B} - b_B| / ((j+1) ||b||_*)`` over concentric dyadic pairs.

    Returns the constant, the inner ball and ``j``.
    """
    bmo = bmo_norm(b, None, family).value
    if bmo == 0:
        raise DegenerateInputError("b has zero oscillation on the family")
    means = ball_means(b, family)
    best, arg = -1.0, (0, 0, 0)
    for k in range(family.n_radii):
        for j in range(family.n_radii - k - 1):
            ratio = np.abs(means[:, k + j + 1] - means[:, k]) / ((j + 1) * bmo)
            row = int(np.argmax(ratio))
            if ratio[row] > best:
                best, arg = float(ratio[row]), (row, k, j)
    row, k, j = arg
    return best, family.ball(row, k), j


def weighted_mean_shift_constant(b: GridFunction, w: Weight, family: BallFamily) -> tuple[float, Ball]:
    """Largest ``|b_{B,w} - b_B| / ||b||_*`` over the family."""
    bmo = bmo_norm(b, None, family).value
    if bmo == 0:
        raise DegenerateInputError("b has zero oscillation on the family")
    shift = np.abs(ball_means(b, family, w) - ball_means(b, family)) / bmo
    flat = int(np.argmax(shift))
    return float(shift.flat[flat]), family.ball_at(flat)
