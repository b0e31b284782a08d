"""Muckenhoupt A_p / A_1 characteristics, reverse Hoelder constants and membership scans.

On a fixed lattice every characteristic is finite, so class membership is
decided from the refinement trend: a weight is declared outside a class when
its characteristic grows by more than ``growth`` between consecutive
resolutions of the same domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import Ball, BallFamily, BallPolicy, Grid, GridFunction, build_ball_family

__all__ = [
    "Weight",
    "WeightSpec",
    "WeightCharacteristics",
    "Trend",
    "CriticalIndex",
    "ClassificationError",
    "FactorizationRow",
    "parse_weight_spec",
    "ap_characteristic",
    "a1_characteristic",
    "reverse_holder_constant",
    "characteristic",
    "characteristic_trend",
    "critical_index_estimate",
    "check_ap_factorization",
]

DEFAULT_GROWTH = 1.5
DEFAULT_R_MAX = 64.0


class ClassificationError(RuntimeError):
    """Divergence flags along an r-scan were not monotone."""

    def __init__(self, message: str, scan: list[tuple[float, bool, list[float]]]):
        super().__init__(message)
        self.scan = scan


@dataclass(frozen=True, eq=False)
class Weight:
    """A strictly positive grid function."""

    base: GridFunction
    label: str = "custom"

    def __post_init__(self):
        v = self.base.values
        if not np.all(v > 0):
            raise ValueError("weight samples must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.base.grid

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    @property
    def floor(self) -> float:
        return float(self.values.min())

    def power(self, s: float) -> "Weight":
        return Weight(self.base.with_values(self.values**s), f"({self.label})^{s:g}")

    @classmethod
    def unit(cls, grid: Grid) -> "Weight":
        return cls(GridFunction.constant(grid, 1.0), "const:1")


@dataclass(frozen=True)
class WeightSpec:
    """Resolution-independent description of a weight, sampled on demand.

    ``kind`` is ``power`` (``|x|**beta``), ``const``, ``loggrid``
    (``1 + |log|x||``) or ``csv`` (samples read from ``path``; fixed grid).
    """

    kind: str
    param: float = 0.0
    path: str | None = None

    def __call__(self, grid: Grid) -> Weight:
        if self.kind == "power":
            vals = grid.radius() ** self.param
        elif self.kind == "const":
            if not self.param > 0:
                raise ValueError("constant weight must be positive")
            vals = np.full(grid.shape, float(self.param))
        elif self.kind == "loggrid":
            vals = 1.0 + np.abs(np.log(grid.radius()))
        elif self.kind == "csv":
            return Weight(GridFunction.from_csv(grid, self.path), self.label)
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        return Weight(GridFunction(grid, vals), self.label)

    @property
    def label(self) -> str:
        if self.kind in ("power", "const"):
            return f"{self.kind}:{self.param:g}"
        if self.kind == "csv":
            return f"csv:{self.path}"
        return self.kind

    def scaled_exponent(self, s: float) -> "WeightSpec":
        """Spec of ``w**s``; only defined for power and constant weights."""
        if self.kind == "power":
            return WeightSpec("power", self.param * s)
        if self.kind == "const":
            return WeightSpec("const", self.param**s)
        raise ValueError(f"w**s is not available for {self.kind} weights")


def parse_weight_spec(text: str) -> WeightSpec:
    """Parse ``power:<beta>``, ``const:<c>``, ``loggrid`` or ``csv:<path>``."""
    text = text.strip()
    head, _, tail = text.partition(":")
    if head == "power":
        return WeightSpec("power", float(tail))
    if head == "const":
        return WeightSpec("const", float(tail))
    if head == "loggrid" and not tail:
        return WeightSpec("loggrid")
    if head == "csv" and tail:
        return WeightSpec("csv", path=tail)
    raise ValueError(f"cannot parse weight spec {text!r}; expected power:<b>, const:<c>, loggrid or csv:<path>")


@dataclass(frozen=True)
class WeightCharacteristics:
    kind: str  # "A_p", "A_1" or "RH"
    p: float  # p for A_p / A_1, r for RH
    value: float
    witness: Ball
    family_id: str
    diverging: bool | None = None

    def csv_row(self, weight_label: str) -> list[str]:
        value = "DIVERGES" if self.diverging else repr(self.value)
        return [
            weight_label,
            repr(self.p),
            self.family_id,
            value,
            " ".join(repr(c) for c in self.witness.center),
            repr(self.witness.radius),
        ]


CSV_HEADER = ["weight", "p_or_r", "family_id", "value", "witness_center", "witness_radius"]


def _normalized(w: Weight) -> np.ndarray:
    # characteristics are scale invariant; centring the dynamic range keeps
    # large powers finite
    v = w.values
    c = math.sqrt(float(v.min()) * float(v.max()))
    return v / c


def _sup(values: np.ndarray, family: BallFamily, kind: str, p: float) -> WeightCharacteristics:
    flat = int(np.argmax(values))
    if not np.isfinite(values.flat[flat]):
        raise FloatingPointError(f"{kind} characteristic overflowed on family {family.family_id}")
    return WeightCharacteristics(kind, p, float(values.flat[flat]), family.ball_at(flat), family.family_id)


def ap_characteristic(w: Weight, p: float, family: BallFamily) -> WeightCharacteristics:
    """``sup_B (avg_B w) (avg_B w^{-1/(p-1)})^{p-1}`` over ``family``."""
    if not p > 1:
        raise ValueError(f"ap_characteristic needs p > 1, got {p}")
    v = _normalized(w)
    counts = family.counts()
    avg_w = family.reduce(v) / counts
    avg_dual = family.reduce(v ** (-1.0 / (p - 1.0))) / counts
    return _sup(avg_w * avg_dual ** (p - 1.0), family, "A_p", p)


def a1_characteristic(w: Weight, family: BallFamily) -> WeightCharacteristics:
    """``sup_B avg_B w / min_B w`` (the essential infimum is the cell minimum)."""
    v = _normalized(w)
    avg_w = family.reduce(v) / family.counts()
    return _sup(avg_w / family.reduce(v, "min"), family, "A_1", 1.0)


def reverse_holder_constant(w: Weight, r: float, family: BallFamily) -> WeightCharacteristics:
    """``sup_B (avg_B w^r)^{1/r} / avg_B w``."""
    if not r > 1:
        raise ValueError(f"reverse_holder_constant needs r > 1, got {r}")
    v = _normalized(w)
    counts = family.counts()
    avg_w = family.reduce(v) / counts
    avg_r = family.reduce(v**r) / counts
    return _sup(avg_r ** (1.0 / r) / avg_w, family, "RH", r)


def characteristic(w: Weight, kind: str, param: float, family: BallFamily) -> WeightCharacteristics:
    """Dispatch on ``kind`` in ``{"A_p", "A_1", "RH"}``; ``A_p`` with ``p == 1`` means ``A_1``."""
    if kind == "A_1" or (kind == "A_p" and param == 1):
        return a1_characteristic(w, family)
    if kind == "A_p":
        return ap_characteristic(w, param, family)
    if kind == "RH":
        return reverse_holder_constant(w, param, family)
    raise ValueError(f"unknown characteristic kind {kind!r}")


# ---------------------------------------------------------------------------
# refinement trends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trend:
    """Characteristic values at increasing resolutions and the divergence verdict."""

    kind: str
    param: float
    resolutions: tuple[int, ...]
    values: tuple[float, ...]
    witnesses: tuple[Ball, ...]
    growth: tuple[float, ...]
    threshold: float

    @property
    def diverging(self) -> bool:
        return any(g > self.threshold for g in self.growth)

    @property
    def member(self) -> bool:
        return not self.diverging


class _ResolutionCache:
    """Sampled weight, family and normalised samples per resolution."""

    def __init__(self, spec, dim: int, half_width: float, policy: BallPolicy):
        self.spec, self.dim, self.half_width, self.policy = spec, dim, half_width, policy
        self._store: dict[int, tuple[Weight, BallFamily]] = {}

    def get(self, n: int) -> tuple[Weight, BallFamily]:
        if n not in self._store:
            grid = Grid(self.dim, self.half_width, n)
            w = self.spec(grid) if callable(self.spec) else self.spec
            self._store[n] = (w, build_ball_family(grid, self.policy))
        return self._store[n]


def _check_resolutions(resolutions: Sequence[int]) -> tuple[int, ...]:
    res = tuple(int(n) for n in resolutions)
    if len(res) < 2:
        raise ValueError("a refinement trend needs at least two resolutions")
    if any(b <= a for a, b in zip(res, res[1:])):
        raise ValueError(f"resolutions must be strictly increasing, got {res}")
    return res


def characteristic_trend(
    spec: WeightSpec | Callable[[Grid], Weight],
    kind: str,
    param: float,
    resolutions: Sequence[int],
    *,
    dim: int = 1,
    half_width: float = 8.0,
    policy: BallPolicy | None = None,
    growth: float = DEFAULT_GROWTH,
    _cache: _ResolutionCache | None = None,
) -> Trend:
    """Evaluate a characteristic at each resolution and classify the trend."""
    res = _check_resolutions(resolutions)
    cache = _cache or _ResolutionCache(spec, dim, half_width, policy or BallPolicy())
    chars = []
    for n in res:
        w, family = cache.get(n)
        chars.append(characteristic(w, kind, param, family))
    vals = tuple(c.value for c in chars)
    factors = tuple(b / a for a, b in zip(vals, vals[1:]))
    return Trend(kind, param, res, vals, tuple(c.witness for c in chars), factors, growth)


@dataclass(frozen=True)
class CriticalIndex:
    """Estimate of ``sup{r > 1 : w in RH_r}``."""

    value: float
    bracket: tuple[float, float]
    capped: bool
    scan: tuple[tuple[float, bool], ...]

    def __str__(self):
        if self.capped:
            return f">= {self.value:g}"
        return f"{self.value:.4f} (bracket {self.bracket[0]:.4f}..{self.bracket[1]:.4f})"

    def exceeds(self, threshold: float, tol: float = 0.0) -> bool | None:
        """``True``/``False`` when decisive, ``None`` when within ``tol`` of ``threshold``."""
        if self.capped:
            return True if self.value > threshold + tol else None
        if abs(self.value - threshold) <= tol:
            return None
        return self.value > threshold


SCAN_POINTS = (1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0)


def critical_index_estimate(
    spec: WeightSpec | Callable[[Grid], Weight],
    resolutions: Sequence[int],
    tol: float = 0.01,
    *,
    dim: int = 1,
    half_width: float = 8.0,
    policy: BallPolicy | None = None,
    growth: float = DEFAULT_GROWTH,
    r_max: float = DEFAULT_R_MAX,
) -> CriticalIndex:
    """Locate the reverse-Hoelder critical index by scanning and bisecting in ``r``.

    A trial ``r`` is divergent when the reverse Hoelder constant grows by more
    than ``growth`` between consecutive resolutions.  Bounded weights never
    diverge and are reported as ``>= r_max``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    res = _check_resolutions(resolutions)
    cache = _ResolutionCache(spec, dim, half_width, policy or BallPolicy())

    def divergent(r: float) -> tuple[bool, list[float]]:
        t = characteristic_trend(spec, "RH", r, res, growth=growth, _cache=cache)
        return t.diverging, list(t.values)

    scan: list[tuple[float, bool, list[float]]] = []
    points = [r for r in SCAN_POINTS if r < r_max] + [r_max]
    for r in points:
        flag, vals = divergent(r)
        scan.append((r, flag, vals))
    flags = [f for _, f, _ in scan]
    if not flags[-1]:
        if any(flags):
            raise ClassificationError("divergence below r_max but not at r_max", scan)
        return CriticalIndex(r_max, (r_max, math.inf), True, tuple((r, f) for r, f, _ in scan))
    first = flags.index(True)
    if not all(flags[first:]):
        raise ClassificationError(
            "non-monotone divergence flags along the r-scan: "
            + ", ".join(f"r={r:g}:{'div' if f else 'ok'}" for r, f, _ in scan),
            scan,
        )
    lo = 1.0 if first == 0 else scan[first - 1][0]
    hi = scan[first][0]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        flag, vals = divergent(mid)
        scan.append((mid, flag, vals))
        if flag:
            hi = mid
        else:
            lo = mid
    return CriticalIndex(0.5 * (lo + hi), (lo, hi), False, tuple((r, f) for r, f, _ in scan))


# ---------------------------------------------------------------------------
# A_p^s factorisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorizationRow:
    beta: float
    s: float
    p: float
    left: bool  # w^s in A_p
    right: bool  # w in A_{1+(p-1)/s} and w in RH_s
    details: dict = field(default_factory=dict, compare=False)

    @property
    def agree(self) -> bool:
        return self.left == self.right


def check_ap_factorization(
    betas: Sequence[float],
    ss: Sequence[float],
    ps: Sequence[float],
    resolutions: Sequence[int],
    *,
    dim: int = 1,
    half_width: float = 8.0,
    policy: BallPolicy | None = None,
    growth: float = DEFAULT_GROWTH,
) -> list[FactorizationRow]:
    """Compare ``w^s in A_p`` with ``w in A_{1+(p-1)/s} and RH_s`` for power weights."""
    policy = policy or BallPolicy()
    res = _check_resolutions(resolutions)
    caches: dict[float, _ResolutionCache] = {}

    def trend(beta: float, kind: str, param: float) -> Trend:
        if beta not in caches:
            caches[beta] = _ResolutionCache(WeightSpec("power", beta), dim, half_width, policy)
        return characteristic_trend(None, kind, param, res, growth=growth, _cache=caches[beta])

    rows = []
    for beta in betas:
        for s in ss:
            for p in ps:
                if s <= 1 or p < 1:
                    raise ValueError(f"need s > 1 and p >= 1, got s={s}, p={p}")
                left = trend(beta * s, "A_p", p)
                right_a = trend(beta, "A_p", 1.0 + (p - 1.0) / s)
                right_rh = trend(beta, "RH", s)
                rows.append(
                    FactorizationRow(
                        beta,
                        s,
                        p,
                        left.member,
                        right_a.member and right_rh.member,
                        {
                            "left_growth": left.growth,
                            "right_ap_growth": right_a.growth,
                            "right_rh_growth": right_rh.growth,
                        },
                    )
                )
    return rows
