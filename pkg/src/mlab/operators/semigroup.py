"""Semigroup kernels of the form ``p_t(x, y) = t^{-n/2} g(|x - y|^2 / t)``.

Kernels are discretised as cell masses: the weight attached to offset ``d``
is the integral of ``p_t`` over the cell centred at ``d h``.  For the heat
profile these masses are differences of error functions and sum to one over
the full lattice; other profiles are integrated with Gauss-Legendre rules.
Convolutions extend functions by zero outside the domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate as _quad
from scipy import ndimage, signal, special

from ..lattice import Grid, GridFunction

__all__ = [
    "SemigroupSpec",
    "GaussianAudit",
    "ResolutionWarning",
    "audit_gaussian_bound",
    "cell_kernel",
    "convolve_offsets",
    "semigroup_apply",
    "annulus_bound_ratio",
]


class ResolutionWarning(UserWarning):
    """The kernel is narrower than the grid can resolve."""


@dataclass(frozen=True)
class SemigroupSpec:
    """Radial kernel profile ``g`` with Gaussian-bound constants ``(C, c)``.

    Parameters
    ----------
    profile
        Positive, bounded, non-increasing ``g(u)`` evaluated on arrays.
    dim
        Spatial dimension of the kernel.
    C, c
        Constants of the bound ``p_t(x, y) <= C t^{-n/2} exp(-c |x-y|^2 / t)``.
    name
        ``"heat"`` switches on the closed forms for ``g(u) = (4 pi)^{-n/2} e^{-u/4}``.
    """

    profile: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    dim: int
    C: float
    c: float
    name: str = "custom"

    @classmethod
    def heat(cls, dim: int = 1) -> "SemigroupSpec":
        norm = (4.0 * math.pi) ** (-dim / 2.0)
        return cls(lambda u: norm * np.exp(-np.asarray(u) / 4.0), dim, norm, 0.25, "heat")

    @property
    def is_heat(self) -> bool:
        return self.name == "heat"

    def __hash__(self):
        return hash((self.name, self.dim, self.C, self.c, None if self.is_heat else id(self.profile)))

    def __eq__(self, other):
        if not isinstance(other, SemigroupSpec):
            return NotImplemented
        same_profile = self.profile is other.profile or (self.is_heat and other.is_heat)
        return same_profile and (self.name, self.dim, self.C, self.c) == (other.name, other.dim, other.C, other.c)

    def g0(self) -> float:
        return float(self.profile(np.array([0.0]))[0])

    def density(self, t, rho):
        """``p_t`` at distance ``rho``."""
        t = np.asarray(t, dtype=float)
        rho = np.asarray(rho, dtype=float)
        return t ** (-self.dim / 2.0) * self.profile(rho**2 / t)

    def bound(self, t, rho):
        t = np.asarray(t, dtype=float)
        rho = np.asarray(rho, dtype=float)
        return self.C * t ** (-self.dim / 2.0) * np.exp(-self.c * rho**2 / t)

    def total_mass(self) -> float:
        """Integral of ``p_t`` over R^n (independent of ``t``)."""
        if self.is_heat:
            return 1.0
        if self.dim == 1:
            val, _ = _quad.quad(lambda s: float(self.profile(np.array([s * s]))[0]), 0, np.inf, limit=200)
            return 2.0 * val
        val, _ = _quad.quad(lambda v: float(self.profile(np.array([v]))[0]), 0, np.inf, limit=200)
        return math.pi * val


@dataclass(frozen=True)
class GaussianAudit:
    max_ratio: float
    witness: tuple[float, float]
    violations: int
    positive: bool
    monotone: bool
    decays: bool

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.positive and self.monotone and self.decays


def audit_gaussian_bound(
    spec: SemigroupSpec,
    ts=None,
    rhos=None,
    *,
    rtol: float = 1e-12,
    epsilon: float = 0.5,
) -> GaussianAudit:
    """Check the profile conditions and the Gaussian upper bound on samples.

    The bound is violated at ``(t, rho)`` when ``p_t(rho)`` exceeds the
    bound by more than the relative slack ``rtol``.
    """
    ts = np.geomspace(1e-4, 1e4, 33) if ts is None else np.asarray(ts, dtype=float)
    rhos = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 61)]) if rhos is None else np.asarray(rhos, dtype=float)
    T, P = np.meshgrid(ts, rhos, indexing="ij")
    with np.errstate(under="ignore"):
        val = spec.density(T, P)
        bnd = spec.bound(T, P)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bnd > 0, val / bnd, np.where(val > 0, np.inf, 0.0))
    flat = int(np.argmax(ratio))
    violations = int(np.count_nonzero(val > bnd * (1.0 + rtol)))

    u = np.concatenate([[0.0], np.geomspace(1e-6, 1e3, 400)])
    g = np.asarray(spec.profile(u), dtype=float)
    positive = bool(np.all(g > 0))
    monotone = bool(np.all(np.diff(g) <= 0) and np.isfinite(g).all())
    r = np.geomspace(1.0, 2.0**12, 25)
    with np.errstate(under="ignore"):
        tail = r ** (spec.dim + epsilon) * spec.profile(r**2)
    decays = bool(tail[-1] <= 1e-3 * max(tail.max(), 1e-300) and np.all(np.diff(tail[len(tail) // 2 :]) <= 0))
    return GaussianAudit(float(ratio.flat[flat]), (float(T.flat[flat]), float(P.flat[flat])), violations, positive, monotone, decays)


# ---------------------------------------------------------------------------
# discrete kernels
# ---------------------------------------------------------------------------


def _heat_masses_1d(n: int, h: float, t: float) -> np.ndarray:
    """Heat-kernel masses of the cells at offsets ``-(n-1) .. n-1``."""
    d = np.arange(n, dtype=float)
    a = h / (2.0 * math.sqrt(t))
    # erfc differences keep precision in the far tail
    half = 0.5 * (special.erfc((d - 0.5) * a) - special.erfc((d + 0.5) * a))
    half[0] = special.erf(0.5 * a)
    return np.concatenate([half[:0:-1], half])


def _gl_cell_masses(spec: SemigroupSpec, n: int, h: float, t: float, order: int = 6) -> np.ndarray:
    """Cell masses of a general profile by tensor Gauss-Legendre rules."""
    sub = int(min(32, max(1, math.ceil(2.0 * h / math.sqrt(t)))))
    x, wq = np.polynomial.legendre.leggauss(order)
    # nodes of ``sub`` sub-intervals of one cell, in units of h
    pts = ((np.arange(sub)[:, None] + 0.5 * (x[None, :] + 1.0)) / sub - 0.5).ravel()
    wts = np.tile(wq / (2.0 * sub), sub)
    d = np.arange(-(n - 1), n, dtype=float)
    near = np.abs(d) <= 4
    if spec.dim == 1:
        s = (d[:, None] + pts[None, :]) * h
        masses = h * (spec.density(t, np.abs(s)) * wts).sum(axis=1)
        return masses
    # dim 2: Gauss-Legendre near the origin, midpoint elsewhere
    dx, dy = np.meshgrid(d, d, indexing="ij")
    masses = h * h * spec.density(t, h * np.hypot(dx, dy))
    idx = np.nonzero(near)[0]
    px, py = np.meshgrid(pts, pts, indexing="ij")
    ww = np.outer(wts, wts)
    for i in idx:
        for j in idx:
            rho = h * np.hypot(d[i] + px, d[j] + py)
            masses[i, j] = h * h * float((spec.density(t, rho) * ww).sum())
    return masses


def cell_kernel(spec: SemigroupSpec, grid: Grid, t: float) -> np.ndarray:
    """Normalised cell masses of ``p_t`` over offsets ``-(N-1) .. N-1`` per axis."""
    if spec.dim != grid.dim:
        raise ValueError(f"semigroup of dimension {spec.dim} applied on a dim-{grid.dim} grid")
    return _cell_kernel(spec, grid.dim, grid.n, grid.h, float(t))


@lru_cache(maxsize=256)
def _cell_kernel(spec: SemigroupSpec, dim: int, n: int, h: float, t: float) -> np.ndarray:
    if spec.is_heat:
        k1 = _heat_masses_1d(n, h, t)
        # the masses over all of Z telescope to one; add back what lies
        # beyond the window before normalising
        outside = special.erfc((n - 0.5) * h / (2.0 * math.sqrt(t)))
        k1 = k1 / (k1.sum() + outside)
        out = k1 if dim == 1 else np.outer(k1, k1)
    else:
        out = _gl_cell_masses(spec, n, h, t) / spec.total_mass()
    out.setflags(write=False)
    return out


def convolve_offsets(kernel: np.ndarray, values: np.ndarray, *, separable: np.ndarray | None = None) -> np.ndarray:
    """Apply an offset kernel (centre at index ``N-1`` per axis) with zero extension.

    Kernels must be even in every axis.  One-dimensional and separable
    two-dimensional kernels are applied by direct summation; other
    two-dimensional kernels go through an FFT.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return ndimage.convolve1d(values, kernel, mode="constant", cval=0.0)
    if separable is not None:
        tmp = ndimage.convolve1d(values, separable, axis=0, mode="constant", cval=0.0)
        return ndimage.convolve1d(tmp, separable, axis=1, mode="constant", cval=0.0)
    n = values.shape[0]
    full = signal.fftconvolve(values, kernel, mode="full")
    return full[n - 1 : 2 * n - 1, n - 1 : 2 * n - 1]


def semigroup_apply(spec: SemigroupSpec, f: GridFunction, t: float, *, boundary: str = "zero") -> GridFunction:
    """``e^{-tL} f`` as a discrete convolution with the cell-mass kernel.

    Parameters
    ----------
    boundary
        ``"zero"`` extends ``f`` by zero outside the domain.  ``"renormalized"``
        divides by ``e^{-tL} 1`` so that constants are reproduced exactly on
        the whole domain.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    g = f.grid
    if t < g.h**2 / 100.0:
        warnings.warn(f"t={t:g} is below h^2/100; the kernel is under-resolved", ResolutionWarning, stacklevel=2)
    kern = cell_kernel(spec, g, t)
    sep = None
    if spec.is_heat and g.dim == 2:
        sep = _cell_kernel(spec, 1, g.n, g.h, float(t))
    out = convolve_offsets(kern, f.values, separable=sep)
    if boundary == "renormalized":
        out = out / convolve_offsets(kern, np.ones(g.shape), separable=sep)
    elif boundary != "zero":
        raise ValueError(f"unknown boundary mode {boundary!r}")
    return f.with_values(out)


def annulus_bound_ratio(spec: SemigroupSpec, radius: float, k: int, n_samples: int = 64) -> float:
    """Largest ``p_{t_B}(y, z) |2^{k+1}B| / (e^{-c 4^{k-1}} 2^{(k+1)n})`` over sampled pairs.

    ``y`` ranges over the ball of radius ``radius`` centred at 0 and ``z`` over
    the annulus ``2^{k+1}B minus 2^k B`` (for ``k = 0`` over ``2B``).  The
    distance ``|y - z|`` is at least ``(2^k - 1) r_B`` for ``k >= 1``.
    """
    n = spec.dim
    t = radius**2
    lo = 0.0 if k == 0 else (2.0**k - 1.0) * radius
    hi = (2.0 ** (k + 1) + 1.0) * radius
    rho = np.linspace(lo, hi, n_samples)
    vol = (2.0 if n == 1 else math.pi) * (2.0 ** (k + 1) * radius) ** n
    decay = math.exp(-spec.c * 4.0 ** (k - 1)) * 2.0 ** ((k + 1) * n)
    return float(np.max(spec.density(t, rho)) * vol / decay)
