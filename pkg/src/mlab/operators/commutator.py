"""Multilinear commutators of fractional integrals and their subset expansion."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from ..lattice import GridFunction
from .fractional import TimeQuadrature, _check_alpha, fractional_kernel, riesz_weights
from .semigroup import SemigroupSpec, convolve_offsets

__all__ = [
    "CommutatorSpec",
    "kernel_weights",
    "multilinear_commutator",
    "sigma_expansion",
    "subsets",
    "subset_product",
]


@dataclass(frozen=True, eq=False)
class CommutatorSpec:
    """Order ``alpha`` and the symbols ``b_1 .. b_m`` of a multilinear commutator."""

    alpha: float
    bs: tuple[GridFunction, ...]

    def __post_init__(self):
        bs = tuple(self.bs)
        object.__setattr__(self, "bs", bs)
        if not bs:
            raise ValueError("a commutator needs at least one symbol; use the fractional integral for m = 0")
        grid = bs[0].grid
        if any(b.grid != grid for b in bs):
            raise ValueError("all symbols must live on the same grid")
        _check_alpha(self.alpha, grid.dim)

    @property
    def m(self) -> int:
        return len(self.bs)

    @property
    def grid(self):
        return self.bs[0].grid


def subsets(m: int, size: int | None = None):
    """Subsets of ``{0..m-1}`` as sorted tuples, by size then lexicographically."""
    sizes = range(m + 1) if size is None else [size]
    for j in sizes:
        yield from combinations(range(m), j)


def subset_product(values: Sequence[np.ndarray], sigma: Sequence[int], shape) -> np.ndarray:
    """``prod_{j in sigma} values[j]``; the empty product is one."""
    out = np.ones(shape)
    for j in sigma:
        out = out * values[j]
    return out


def kernel_weights(grid, alpha: float, semigroup: SemigroupSpec | None = None, quad: TimeQuadrature | None = None):
    """Offset weights of ``K_alpha``: Riesz when ``semigroup`` is ``None``, otherwise time-integrated."""
    if semigroup is None:
        return riesz_weights(grid, alpha)
    return fractional_kernel(semigroup, grid, alpha, quad).weights


def _dense_rows(kern: np.ndarray, grid, block: int = 256):
    """Yield ``(rows, K)`` with ``K[i, j]`` the kernel weight between flat cells ``rows[i]`` and ``j``."""
    n = grid.n
    if grid.dim == 1:
        idx = np.arange(n)
        for s in range(0, n, block):
            rows = idx[s : s + block]
            yield rows, kern[rows[:, None] - idx[None, :] + n - 1]
        return
    ii, jj = np.divmod(np.arange(n * n), n)
    for s in range(0, n * n, block):
        r = slice(s, s + block)
        yield np.arange(n * n)[r], kern[ii[r, None] - ii[None, :] + n - 1, jj[r, None] - jj[None, :] + n - 1]


def multilinear_commutator(
    spec: CommutatorSpec,
    f: GridFunction,
    semigroup: SemigroupSpec | None = None,
    quad: TimeQuadrature | None = None,
) -> GridFunction:
    """``integral prod_j (b_j(y) - b_j(z)) K_alpha(y, z) f(z) dz`` by a dense double sum.

    The diagonal factor ``b_j(y) - b_j(y)`` is exactly zero, so the self cell
    contributes nothing.  Rows are processed in blocks and each row is summed
    with numpy's pairwise reduction, so the result does not depend on BLAS.
    """
    grid = spec.grid
    if f.grid != grid:
        raise ValueError("f and the symbols live on different grids")
    kern = kernel_weights(grid, spec.alpha, semigroup, quad)
    fv = f.values.ravel()
    bv = [b.values.ravel() for b in spec.bs]
    out = np.empty(grid.size)
    for rows, K in _dense_rows(kern, grid):
        prod = K * fv[None, :]
        for b in bv:
            prod = prod * (b[rows, None] - b[None, :])
        out[rows] = prod.sum(axis=1)
    return f.with_values(out.reshape(grid.shape))


def sigma_expansion(
    spec: CommutatorSpec,
    lambdas: Sequence[float],
    f: GridFunction,
    semigroup: SemigroupSpec | None = None,
    quad: TimeQuadrature | None = None,
) -> GridFunction:
    """Subset expansion of the commutator around constants ``lambda_j``.

    ``sum_i sum_{|sigma| = i} (-1)^{m-i} (b(y) - lambda)_sigma K((b - lambda)_{sigma'} f)(y)``.
    """
    if len(lambdas) != spec.m:
        raise ValueError(f"need {spec.m} constants, got {len(lambdas)}")
    grid = spec.grid
    kern = kernel_weights(grid, spec.alpha, semigroup, quad)
    shifted = [b.values - lam for b, lam in zip(spec.bs, lambdas)]
    everyone = set(range(spec.m))
    out = np.zeros(grid.shape)
    for sigma in subsets(spec.m):
        rest = sorted(everyone - set(sigma))
        inner = convolve_offsets(kern, subset_product(shifted, rest, grid.shape) * f.values)
        sign = -1.0 if (spec.m - len(sigma)) % 2 else 1.0
        out += sign * subset_product(shifted, sigma, grid.shape) * inner
    return f.with_values(out)
