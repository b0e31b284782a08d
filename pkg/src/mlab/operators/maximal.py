"""Maximal operators over a ball family and the semigroup sharp maximal function.

Every maximal value at a cell is the largest ball functional over the balls
of the family that contain the cell.  When the family includes single-cell
balls, the cell itself (radius ``h/2``) also competes, which makes
``M f >= |f|`` hold exactly on the lattice.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..lattice import BallFamily, GridFunction
from ..weights import Weight
from .commutator import subset_product, subsets
from .semigroup import SemigroupSpec, semigroup_apply

__all__ = [
    "MAXIMAL_KINDS",
    "maximal_function",
    "sharp_maximal",
    "semigroup_mean_functional",
]

MAXIMAL_KINDS = ("M", "M_w", "M_alpha_r", "M_alpha_r_w")


def _finish(family: BallFamily, ball_vals: np.ndarray, single: np.ndarray) -> np.ndarray:
    out = family.spread_max(ball_vals)
    if family.policy.include_single_cell:
        out = np.maximum(out, single)
    return np.where(np.isfinite(out), out, 0.0)


def maximal_function(
    f: GridFunction,
    kind: str,
    family: BallFamily,
    *,
    alpha: float = 0.0,
    r: float = 1.0,
    w: Weight | None = None,
) -> GridFunction:
    """Hardy-Littlewood type maximal functions.

    Parameters
    ----------
    kind
        ``"M"``: ``sup |B|^-1 integral_B |f|``.
        ``"M_w"``: ``sup w(B)^-1 integral_B |f| w``.
        ``"M_alpha_r"``: ``sup (|B|^{alpha r/n - 1} integral_B |f|^r)^{1/r}``.
        ``"M_alpha_r_w"``: ``sup (w(B)^{alpha r/n - 1} integral_B |f|^r w)^{1/r}``;
        with ``alpha = 0`` this is ``M_{r,w}``.
    """
    if kind not in MAXIMAL_KINDS:
        raise ValueError(f"unknown maximal kind {kind!r}; expected one of {MAXIMAL_KINDS}")
    g = f.grid
    n = g.dim
    if not r >= 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if not 0 <= alpha < n:
        raise ValueError(f"alpha must lie in [0, {n}), got {alpha}")
    weighted = kind in ("M_w", "M_alpha_r_w")
    if weighted and w is None:
        raise ValueError(f"{kind} needs a weight")
    if weighted and w.grid != g:
        raise ValueError("weight and function live on different grids")
    a = np.abs(f.values)
    dv = g.cell_volume
    if kind == "M":
        vals = family.reduce(a) / family.counts()
        single = a
    elif kind == "M_w":
        vals = family.reduce(a * w.values) / family.reduce(w.values)
        single = a
    elif kind == "M_alpha_r":
        expo = 1.0 - alpha * r / n
        vals = (dv * family.reduce(a**r) / (dv * family.counts()) ** expo) ** (1.0 / r)
        single = a * dv ** (alpha / n)
    else:
        expo = 1.0 - alpha * r / n
        vals = (dv * family.reduce(a**r * w.values) / (dv * family.reduce(w.values)) ** expo) ** (1.0 / r)
        single = a * (w.values * dv) ** (alpha / n)
    return f.with_values(_finish(family, vals, single))


def sharp_maximal(
    spec: SemigroupSpec, f: GridFunction, family: BallFamily, *, boundary: str = "zero"
) -> GridFunction:
    """``sup_{B containing x} |B|^-1 integral_B |f - e^{-t_B L} f|`` with ``t_B = r_B^2``.

    One semigroup application per radius of the family; the result is
    shared by all balls of that radius.
    """
    counts = family.counts()
    vals = np.empty((family.n_rows, family.n_radii))
    for k, radius in enumerate(family.radii):
        dev = np.abs(f.values - semigroup_apply(spec, f, radius**2, boundary=boundary).values)
        vals[:, k] = family.reduce(dev, ks=[k])[:, 0] / counts[:, k]
    single = np.zeros(f.grid.shape)
    if family.policy.include_single_cell:
        t0 = (f.grid.h / 2.0) ** 2
        single = np.abs(f.values - semigroup_apply(spec, f, t0, boundary=boundary).values)
    return f.with_values(_finish(family, vals, single))


def semigroup_mean_functional(
    spec: SemigroupSpec,
    f: GridFunction,
    bs: Sequence[GridFunction],
    family: BallFamily,
    *,
    boundary: str = "zero",
) -> GridFunction:
    """``sup_{B containing x} |B|^-1 integral_B |e^{-t_B L}((b - b_B)_sigma f)|``.

    ``bs`` lists the symbols in ``sigma``.  The product is expanded over
    subsets so that only ``2^|sigma|`` semigroup applications per radius are
    needed; the ball means ``b_B`` enter as coefficients.
    """
    m = len(bs)
    g = f.grid
    counts = family.counts()
    means = [family.reduce(b.values) / counts for b in bs]
    raw = [b.values for b in bs]
    taus = list(subsets(m))
    vals = np.empty((family.n_rows, family.n_radii))
    for k, radius in enumerate(family.radii):
        smoothed = [
            semigroup_apply(spec, f.with_values(subset_product(raw, tau, g.shape) * f.values), radius**2, boundary=boundary).values
            for tau in taus
        ]
        for rows, mask, gathered in family.windows(k, smoothed):
            acc = np.zeros_like(gathered[0])
            for tau, arr in zip(taus, gathered):
                coef = np.ones(len(rows))
                for j in range(m):
                    if j not in tau:
                        coef = coef * (-means[j][rows, k])
                acc += coef[:, None] * arr
            vals[rows, k] = (np.abs(acc) * mask).sum(axis=1) / counts[rows, k]
    # genuine balls only: the functional is not defined for the degenerate cell
    out = family.spread_max(vals)
    return f.with_values(np.where(np.isfinite(out), out, 0.0))
