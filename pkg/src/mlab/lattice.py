"""Cell-centred lattices on [-R, R]^n, grid functions, balls and ball families.

Every quantity in the toolkit lives on a :class:`Grid`.  Sample points sit at
cell centres ``x_i = -R + (i + 1/2) h`` with an even number of cells per axis,
so the origin is a cell corner and never a sample.  Balls are closed metric
balls; a cell belongs to a ball iff its centre does (midpoint rule).

A :class:`BallFamily` is the finite surrogate for "all balls of R^n".  Its
centres are grid samples on a stride sub-lattice (optionally plus the origin)
and its radii are dyadic multiples of ``h``.  Per-ball reductions (sums,
minima) and the reverse operation (the maximum over all balls containing a
cell) are computed with dyadic window tables, so each ball costs O(log) work
and summation order depends only on the ball's own cells.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "Ball",
    "BallPolicy",
    "BallFamily",
    "EmptyRegionError",
    "ConfigurationError",
    "integrate",
    "lebesgue_measure",
    "build_ball_family",
    "ball_mask",
]


class EmptyRegionError(ValueError):
    """A region selected no grid cell."""


class ConfigurationError(ValueError):
    """Invalid grid, policy or parameter combination."""


# ---------------------------------------------------------------------------
# Grid and grid functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Cell-centred grid on ``[-R, R]^dim`` with ``n`` cells per axis."""

    dim: int
    half_width: float
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ConfigurationError(f"half_width must be positive, got {self.half_width}")
        if self.n <= 0 or self.n % 2:
            raise ConfigurationError(f"points per axis must be a positive even integer, got {self.n}")
        object.__setattr__(self, "half_width", float(self.half_width))
        if self.h * self.n != 2.0 * self.half_width:
            raise ConfigurationError(
                f"h*N != 2R in floating point for R={self.half_width}, N={self.n}; "
                "choose N so that 2R/N is exactly representable"
            )

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    def axis(self) -> np.ndarray:
        """Sample coordinates along one axis."""
        return -self.half_width + (np.arange(self.n) + 0.5) * self.h

    def axis_units(self) -> np.ndarray:
        """Sample coordinates along one axis in units of ``h`` (exact half-integers)."""
        return np.arange(self.n) + 0.5 - self.n / 2

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the grid shape (``ij`` indexing)."""
        ax = self.axis()
        if self.dim == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))

    def radius(self) -> np.ndarray:
        """``|x|`` at every sample."""
        if self.dim == 1:
            return np.abs(self.axis())
        x, y = self.coords()
        return np.hypot(x, y)

    def sample(self, fn: Callable[..., np.ndarray]) -> "GridFunction":
        """Evaluate ``fn(*coords)`` on the grid."""
        vals = np.asarray(fn(*self.coords()), dtype=float)
        return GridFunction(self, np.broadcast_to(vals, self.shape).copy())

    def nearest_index(self, point: Sequence[float] | float) -> tuple[int, ...]:
        """Index of the cell whose centre is closest to ``point`` (ties go up)."""
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        if pt.size != self.dim:
            raise ValueError(f"point has {pt.size} coordinates, grid has dim {self.dim}")
        idx = np.floor((pt + self.half_width) / self.h).astype(int)
        return tuple(int(v) for v in np.clip(idx, 0, self.n - 1))

    def refine(self, n: int) -> "Grid":
        return Grid(self.dim, self.half_width, n)

    def descriptor(self) -> dict:
        return {"dim": self.dim, "R": self.half_width, "N": self.n}


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples, one per cell of ``grid``; immutable after construction."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.size:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError(f"values have shape {vals.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __add__(self, other):
        return self.with_values(self.values + _raw(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - _raw(other))

    def __mul__(self, other):
        return self.with_values(self.values * _raw(other))

    __rmul__ = __mul__

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def at(self, point) -> float:
        """Value at the nearest sample to ``point``."""
        return float(self.values[self.grid.nearest_index(point)])

    def to_csv(self, target=None) -> str | None:
        """Write ``index per axis, coordinate per axis, value`` rows in lexicographic order."""
        g = self.grid
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = ["i", "j"][: g.dim]
        writer.writerow(names + ["x", "y"][: g.dim] + ["value"])
        ax = g.axis()
        for idx in np.ndindex(*g.shape):
            writer.writerow(
                [*idx, *(repr(float(ax[k])) for k in idx), repr(float(self.values[idx]))]
            )
        text = buf.getvalue()
        if target is None:
            return text
        if isinstance(target, (str, os.PathLike)):
            with open(target, "w", newline="") as fh:
                fh.write(text)
        else:
            target.write(text)
        return None

    @classmethod
    def from_csv(cls, grid: Grid, source) -> "GridFunction":
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source, newline="") as fh:
                rows = list(csv.reader(fh))
        else:
            rows = list(csv.reader(io.StringIO(str(source))))
        vals = np.empty(grid.shape)
        seen = 0
        for row in rows[1:]:
            if not row:
                continue
            idx = tuple(int(v) for v in row[: grid.dim])
            vals[idx] = float(row[-1])
            seen += 1
        if seen != grid.size:
            raise ValueError(f"CSV holds {seen} samples, grid needs {grid.size}")
        return cls(grid, vals)


def _raw(other):
    return other.values if isinstance(other, GridFunction) else other


# ---------------------------------------------------------------------------
# Balls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Closed ball ``{x : |x - center| <= radius}``."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def t(self) -> float:
        """Semigroup time attached to the ball, ``r_B**2``."""
        return self.radius**2

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


def ball_mask(grid: Grid, ball: Ball) -> np.ndarray:
    """Boolean mask of cells whose centre lies in ``ball``."""
    if len(ball.center) != grid.dim:
        raise ValueError("ball and grid dimensions differ")
    u = grid.axis_units()
    ru = ball.radius / grid.h
    tol = 1e-9 * max(1.0, ru * ru)
    d2 = None
    for k, c in enumerate(ball.center):
        du = (u - c / grid.h) ** 2
        if grid.dim == 2:
            du = du[:, None] if k == 0 else du[None, :]
        d2 = du if d2 is None else d2 + du
    return d2 <= ru * ru + tol


def integrate(f: GridFunction, region: Ball | None = None) -> float:
    """Midpoint-rule integral of ``f`` over ``region`` (whole domain when ``None``)."""
    g = f.grid
    if region is None:
        return g.cell_volume * float(np.sum(f.values))
    mask = ball_mask(g, region)
    if not mask.any():
        raise EmptyRegionError(f"ball {region} contains no cell centre of the grid")
    return g.cell_volume * float(np.sum(f.values[mask]))


def lebesgue_measure(ball: Ball, grid: Grid) -> float:
    """Discrete measure ``h^dim * #cells`` of ``ball`` on ``grid``."""
    return grid.cell_volume * int(np.count_nonzero(ball_mask(grid, ball)))


# ---------------------------------------------------------------------------
# Dyadic window tables
# ---------------------------------------------------------------------------


class _WindowTable:
    """Sparse table for segment reductions along the last axis of a 2-D image.

    Level ``j`` holds the reduction of ``2**j`` consecutive entries.  Levels are
    built on demand from the highest cached level below them.
    """

    def __init__(self, image: np.ndarray, op: Callable):
        self.op = op
        self.levels = {0: image}

    def get(self, j: int) -> np.ndarray:
        if j in self.levels:
            return self.levels[j]
        top = max(l for l in self.levels if l < j)
        arr = self.levels[top]
        for l in range(top + 1, j + 1):
            w = 1 << (l - 1)
            arr = self.op(arr[:, :-w], arr[:, w:])
            self.levels[l] = arr
        return arr

    def keep_only(self, keep: set[int]) -> None:
        top = max(self.levels)
        for l in list(self.levels):
            if l != 0 and l != top and l not in keep:
                del self.levels[l]

    def segment(self, rows: np.ndarray, starts: np.ndarray, length: int) -> np.ndarray:
        """Reduce ``length`` entries beginning at ``(rows, starts)``."""
        out = None
        pos = starts.copy()
        for j in range(length.bit_length() - 1, -1, -1):
            if not (length >> j) & 1:
                continue
            vals = self.get(j)[rows, pos]
            out = vals if out is None else self.op(out, vals)
            pos = pos + (1 << j)
        return out


def _grid_stencil(dim: int, m: int) -> list[tuple[int, int, int]]:
    """Rows ``(dr, dc_start, length)`` of the lattice disc ``|d| <= m``."""
    if dim == 1:
        return [(0, -m, 2 * m + 1)]
    rows = []
    for dr in range(-m, m + 1):
        w = math.isqrt(m * m - dr * dr)
        rows.append((dr, -w, 2 * w + 1))
    return rows


def _origin_stencil(dim: int, m: int) -> list[tuple[int, int, int]]:
    """Rows of the origin-centred disc relative to the cell at index ``N/2``.

    Cell ``N/2 + a`` has coordinate ``(a + 1/2) h``.
    """
    if dim == 1:
        return [(0, -m, 2 * m)]
    rows = []
    for a in range(-m, m):
        k = 4 * m * m - (2 * a + 1) ** 2
        if k < 1:
            continue
        omax = math.isqrt(k)
        if omax % 2 == 0:
            omax -= 1
        rows.append((a, (-omax - 1) // 2, omax + 1))
    return rows


# ---------------------------------------------------------------------------
# Ball families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallPolicy:
    """How a ball family is enumerated.

    ``radius_exponents`` defaults to ``k = 1 .. floor(log2(R/h)) - 1`` (radii
    ``2**k h``).  ``max_centers`` optionally caps centres per axis by raising the
    effective stride to ``max(stride, N // max_centers)``.  With
    ``include_grid_centers=False`` only origin-centred balls are enumerated.
    """

    stride: int = 1
    radius_exponents: tuple[int, ...] | None = None
    include_origin: bool = True
    include_single_cell: bool = True
    max_centers: int | None = None
    include_grid_centers: bool = True

    def __post_init__(self):
        if self.stride < 1:
            raise ConfigurationError(f"stride must be >= 1, got {self.stride}")
        if self.radius_exponents is not None:
            exps = tuple(sorted(set(int(k) for k in self.radius_exponents)))
            if not exps or exps[0] < 0:
                raise ConfigurationError("radius exponents must be non-negative integers")
            object.__setattr__(self, "radius_exponents", exps)
        if self.max_centers is not None and self.max_centers < 1:
            raise ConfigurationError("max_centers must be positive")
        if not (self.include_grid_centers or self.include_origin):
            raise ConfigurationError("a ball family needs grid centres, the origin, or both")

    @classmethod
    def origin_only(cls, radius_exponents: tuple[int, ...] | None = None) -> "BallPolicy":
        return cls(radius_exponents=radius_exponents, include_grid_centers=False)

    def effective_stride(self, grid: Grid) -> int:
        s = self.stride
        if self.max_centers is not None:
            s = max(s, grid.n // self.max_centers)
        return max(1, min(s, grid.n))

    def exponents(self, grid: Grid) -> tuple[int, ...]:
        if self.radius_exponents is not None:
            return self.radius_exponents
        top = int(math.floor(math.log2(grid.half_width / grid.h) + 1e-12))
        return tuple(range(1, top))

    def descriptor(self) -> dict:
        return {
            "stride": self.stride,
            "radius_exponents": list(self.radius_exponents) if self.radius_exponents else None,
            "include_origin": self.include_origin,
            "include_single_cell": self.include_single_cell,
            "max_centers": self.max_centers,
            "include_grid_centers": self.include_grid_centers,
        }


@dataclass(eq=False)
class BallFamily:
    """Finite family of balls: centre rows x dyadic radii.

    Balls are enumerated centre-major: centres in lexicographic coordinate
    order (the origin, when present, sits at its lexicographic position) and
    radii ascending within a centre.  Per-ball arrays have shape
    ``(n_rows, n_radii)``; ``ravel()`` order is the enumeration order.
    """

    grid: Grid
    policy: BallPolicy
    center_index: np.ndarray  # (n_grid_centres, dim) sample indices, lexicographic
    radii_cells: tuple[int, ...]
    origin_row: int | None
    _counts: np.ndarray | None = field(default=None, repr=False)

    # -- geometry ---------------------------------------------------------
    @property
    def n_rows(self) -> int:
        return len(self.center_index) + (self.origin_row is not None)

    @property
    def n_radii(self) -> int:
        return len(self.radii_cells)

    @property
    def n_balls(self) -> int:
        return self.n_rows * self.n_radii

    @property
    def radii(self) -> np.ndarray:
        return np.asarray(self.radii_cells, dtype=float) * self.grid.h

    @property
    def grid_rows(self) -> np.ndarray:
        """Row numbers of grid-sample centres (all rows except the origin)."""
        rows = np.arange(self.n_rows)
        if self.origin_row is None:
            return rows
        return np.delete(rows, self.origin_row)

    def center_coords(self) -> np.ndarray:
        ax = self.grid.axis()
        pts = ax[self.center_index]
        if self.origin_row is not None:
            pts = np.insert(pts, self.origin_row, np.zeros(self.grid.dim), axis=0)
        return pts

    def ball(self, row: int, k: int) -> Ball:
        return Ball(tuple(self.center_coords()[row]), self.radii[k])

    def ball_at(self, flat: int) -> Ball:
        row, k = divmod(int(flat), self.n_radii)
        return self.ball(row, k)

    def __iter__(self) -> Iterator[Ball]:
        pts = self.center_coords()
        for row in range(self.n_rows):
            for r in self.radii:
                yield Ball(tuple(pts[row]), r)

    def __len__(self) -> int:
        return self.n_balls

    @property
    def family_id(self) -> str:
        g, p = self.grid, self.policy
        ks = self.policy.exponents(g)
        return (
            f"d{g.dim}-R{g.half_width:g}-N{g.n}-s{p.effective_stride(g)}"
            f"-k{ks[0]}..{ks[-1]}-o{int(self.origin_row is not None)}"
            f"-c{int(p.include_single_cell)}"
            + ("" if p.include_grid_centers else "-g0")
        )

    def descriptor(self) -> dict:
        return {"family_id": self.family_id, "grid": self.grid.descriptor(), "policy": self.policy.descriptor()}

    def ball_cells(self, row: int, k: int) -> tuple[np.ndarray, ...]:
        """Grid indices of the cells in ball ``(row, k)`` (in-domain only)."""
        m = self.radii_cells[k]
        if row == self.origin_row:
            ref = (self.grid.n // 2,) * self.grid.dim
            stencil = _origin_stencil(self.grid.dim, m)
        else:
            gi = row - (self.origin_row is not None and row > self.origin_row)
            ref = tuple(int(v) for v in self.center_index[gi])
            stencil = _grid_stencil(self.grid.dim, m)
        n = self.grid.n
        if self.grid.dim == 1:
            (_, dc, length), = stencil
            cols = np.arange(ref[0] + dc, ref[0] + dc + length)
            return (cols[(cols >= 0) & (cols < n)],)
        ii, jj = [], []
        for dr, dc, length in stencil:
            r = ref[0] + dr
            if not 0 <= r < n:
                continue
            cols = np.arange(ref[1] + dc, ref[1] + dc + length)
            cols = cols[(cols >= 0) & (cols < n)]
            ii.append(np.full(cols.size, r))
            jj.append(cols)
        return (np.concatenate(ii), np.concatenate(jj))

    # -- reductions ---------------------------------------------------------
    def _pad(self) -> int:
        return max(self.radii_cells) + 1

    def _padded(self, values: np.ndarray, fill: float) -> np.ndarray:
        p = self._pad()
        v = np.asarray(values, dtype=float).reshape(self.grid.shape)
        if self.grid.dim == 1:
            out = np.full((1, self.grid.n + 2 * p), fill)
            out[0, p : p + self.grid.n] = v
        else:
            out = np.full((self.grid.n + 2 * p,) * 2, fill)
            out[p : p + self.grid.n, p : p + self.grid.n] = v
        return out

    def _stencil_reduce(self, table: _WindowTable, stencil, ref_rows, ref_cols, op) -> np.ndarray:
        out = None
        for dr, dc, length in stencil:
            vals = table.segment(ref_rows + dr, ref_cols + dc, length)
            out = vals if out is None else op(out, vals)
        return out

    def _ref_positions(self) -> tuple[np.ndarray, np.ndarray]:
        p = self._pad()
        if self.grid.dim == 1:
            return np.zeros(len(self.center_index), dtype=int), self.center_index[:, 0] + p
        return self.center_index[:, 0] + p, self.center_index[:, 1] + p

    def reduce(self, values, op: str = "sum", ks: Sequence[int] | None = None) -> np.ndarray:
        """Reduce ``values`` over every ball; returns an ``(n_rows, n_radii)`` array.

        ``op`` is ``"sum"`` (plain cell sums, no ``h`` factor), ``"min"`` or
        ``"max"``.  Cells outside the domain are ignored.  When ``ks`` is given
        only those radius columns are computed and the result has
        ``len(ks)`` columns.
        """
        ufunc, fill = {"sum": (np.add, 0.0), "min": (np.minimum, np.inf), "max": (np.maximum, -np.inf)}[op]
        table = _WindowTable(self._padded(values, fill), ufunc)
        rr, cc = self._ref_positions()
        p = self._pad()
        half = self.grid.n // 2 + p
        ks = range(self.n_radii) if ks is None else list(ks)
        out = np.empty((self.n_rows, len(ks)))
        grid_rows = self.grid_rows
        dim = self.grid.dim
        for col, k in enumerate(ks):
            m = self.radii_cells[k]
            out[grid_rows, col] = self._stencil_reduce(table, _grid_stencil(dim, m), rr, cc, ufunc)
            if self.origin_row is not None:
                orow = np.array([0 if dim == 1 else half])
                out[self.origin_row, col] = self._stencil_reduce(
                    table, _origin_stencil(dim, m), orow, np.array([half]), ufunc
                )[0]
            if dim == 1:
                table.keep_only({0})
        return out

    def counts(self) -> np.ndarray:
        """Number of in-domain cells of every ball."""
        if self._counts is None:
            self._counts = self.reduce(np.ones(self.grid.shape))
            self._counts.setflags(write=False)
        return self._counts

    def measures(self) -> np.ndarray:
        return self.counts() * self.grid.cell_volume

    def spread_max(self, ball_values: np.ndarray) -> np.ndarray:
        """``out[x] = max`` of ``ball_values`` over balls containing cell ``x``.

        Cells covered by no ball get ``-inf``.
        """
        ball_values = np.asarray(ball_values, dtype=float)
        g = self.grid
        dim = g.dim
        p = self._pad()
        out = np.full(g.shape, -np.inf)
        if dim == 1:
            qr = np.zeros(g.n, dtype=int)
            qc = np.arange(g.n) + p
        else:
            ii, jj = np.meshgrid(np.arange(g.n), np.arange(g.n), indexing="ij")
            qr, qc = ii.ravel() + p, jj.ravel() + p
        grid_rows = self.grid_rows
        for k, m in enumerate(self.radii_cells):
            img = np.full(g.shape, -np.inf)
            img[tuple(self.center_index.T)] = ball_values[grid_rows, k]
            table = _WindowTable(self._padded(img, -np.inf), np.maximum)
            # the lattice disc is symmetric: x is in ball(c) iff c is in disc(x)
            vals = self._stencil_reduce(table, _grid_stencil(dim, m), qr, qc, np.maximum)
            np.maximum(out, vals.reshape(g.shape), out=out)
            if self.origin_row is not None:
                cells = self.ball_cells(self.origin_row, k)
                out[cells] = np.maximum(out[cells], ball_values[self.origin_row, k])
        return out

    def windows(self, k: int, arrays: Sequence[np.ndarray], chunk: int = 1 << 22):
        """Yield ``(rows, mask, [gathered arrays])`` for all balls of radius index ``k``.

        Gathered arrays have shape ``(len(rows), L)`` where ``L`` is the stencil
        size; ``mask`` flags in-domain cells.  Used for ball functionals that are
        not plain sums (oscillations, absolute values of ball-dependent data).
        """
        g = self.grid
        dim = g.dim
        m = self.radii_cells[k]
        p = self._pad()
        padded = [self._padded(a, 0.0) for a in arrays]
        inside = self._padded(np.ones(g.shape), 0.0) > 0

        def offsets(stencil):
            dr, dc = [], []
            for r, c0, length in stencil:
                dr.extend([r] * length)
                dc.extend(range(c0, c0 + length))
            return np.asarray(dr), np.asarray(dc)

        groups = []
        rr, cc = self._ref_positions()
        groups.append((self.grid_rows, rr, cc, offsets(_grid_stencil(dim, m))))
        if self.origin_row is not None:
            half = g.n // 2 + p
            groups.append(
                (
                    np.array([self.origin_row]),
                    np.array([0 if dim == 1 else half]),
                    np.array([half]),
                    offsets(_origin_stencil(dim, m)),
                )
            )
        for rows, r0, c0, (dr, dc) in groups:
            step = max(1, chunk // max(1, dr.size))
            for s in range(0, len(rows), step):
                ri = r0[s : s + step, None] + dr[None, :]
                ci = c0[s : s + step, None] + dc[None, :]
                yield rows[s : s + step], inside[ri, ci], [a[ri, ci] for a in padded]


def build_ball_family(grid: Grid, policy: BallPolicy | None = None) -> BallFamily:
    """Enumerate the ball family for ``grid`` under ``policy``."""
    policy = policy or BallPolicy()
    if grid.n < 4:
        raise ConfigurationError(f"grid with N={grid.n} is too small to host any ball")
    exps = policy.exponents(grid)
    if not exps:
        raise ConfigurationError(f"grid with N={grid.n} admits no dyadic radius 2^k h with k >= 1")
    radii_cells = tuple(1 << k for k in exps)
    s = policy.effective_stride(grid)
    axis_idx = np.arange(s // 2, grid.n, s)
    if not policy.include_grid_centers:
        centers = np.zeros((0, grid.dim), dtype=int)
    elif grid.dim == 1:
        centers = axis_idx[:, None]
    else:
        ii, jj = np.meshgrid(axis_idx, axis_idx, indexing="ij")
        centers = np.stack([ii.ravel(), jj.ravel()], axis=1)
    origin_row = None
    if policy.include_origin:
        # sample coordinates are never 0, so the first axis decides the
        # lexicographic position of the origin
        origin_row = int(np.count_nonzero(grid.axis_units()[centers[:, 0]] < 0))
    return BallFamily(grid, policy, centers.astype(int), radii_cells, origin_row)
