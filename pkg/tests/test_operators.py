import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gaussian, indicator
from mlab.harness import interior_rel_l2
from mlab.lattice import BallPolicy, ConfigurationError, Grid, GridFunction, build_ball_family
from mlab.operators import (
    CommutatorSpec,
    ResolutionWarning,
    SemigroupSpec,
    TimeQuadrature,
    annulus_bound_ratio,
    audit_gaussian_bound,
    difference_kernel,
    generalized_fractional,
    maximal_function,
    multilinear_commutator,
    riesz_constant,
    riesz_potential,
    riesz_potential_at,
    semigroup_apply,
    sharp_maximal,
    sigma_expansion,
)
from mlab.weights import WeightSpec

HEAT = SemigroupSpec.heat(1)
SMALL = Grid(1, 4.0, 64)
SMALL_FAM = build_ball_family(SMALL)


@pytest.fixture(scope="module")
def g1024():
    return Grid(1, 8.0, 1024)


vectors = st.integers(0, 2**16).map(lambda s: GridFunction(SMALL, np.random.default_rng(s).normal(size=64)))


# -- semigroup ----------------------------------------------------------------


def test_heat_profile_passes_audit():
    audit = audit_gaussian_bound(HEAT)
    assert audit.ok and audit.max_ratio <= 1 + 1e-12


def test_heavy_tailed_profile_fails_audit():
    lorentz = SemigroupSpec(lambda u: 1.0 / (1.0 + np.asarray(u)) ** 2, 1, 1.0, 0.25)
    audit = audit_gaussian_bound(lorentz)
    assert audit.violations > 0 and not audit.ok


def test_semigroup_of_zero(grid1):
    assert np.all(semigroup_apply(HEAT, GridFunction.zeros(grid1), 0.3).values == 0)


def test_heat_evolves_gaussian_density(g1024):
    # variance s^2 becomes s^2 + 2t
    s2, t = 0.25, 0.25
    x = g1024.coords()[0]
    f = GridFunction(g1024, np.exp(-(x**2) / (2 * s2)) / math.sqrt(2 * math.pi * s2))
    v = s2 + 2 * t
    exact = GridFunction(g1024, np.exp(-(x**2) / (2 * v)) / math.sqrt(2 * math.pi * v))
    assert interior_rel_l2(semigroup_apply(HEAT, f, t), exact) <= 1e-3


def test_semigroup_conserves_mass_and_constants(grid1):
    f = gaussian(grid1, 0.5)
    out = semigroup_apply(HEAT, f, 0.5)
    assert out.values.sum() == pytest.approx(f.values.sum(), rel=1e-12)
    one = GridFunction.constant(grid1, 1.0)
    np.testing.assert_allclose(semigroup_apply(HEAT, one, 4.0, boundary="renormalized").values, 1.0, atol=1e-12)


def test_semigroup_warns_when_underresolved(grid1):
    with pytest.warns(ResolutionWarning):
        semigroup_apply(HEAT, gaussian(grid1), grid1.h**2 / 1000)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_annulus_bound_ratio_is_finite(k):
    val = annulus_bound_ratio(HEAT, 0.5, k)
    assert 0 < val < math.inf


# -- Riesz potential ----------------------------------------------------------


def test_riesz_constant_at_half():
    assert riesz_constant(0.5, 1) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)


def test_riesz_of_zero(grid1):
    assert np.all(riesz_potential(GridFunction.zeros(grid1), 0.5).values == 0)


def test_riesz_of_interval_at_origin():
    g = Grid(1, 4.0, 1024)
    val = riesz_potential_at(indicator(g, -1.0, 1.0), 0.5, 0.0)
    assert val == pytest.approx(4 / math.sqrt(2 * math.pi), rel=0.01)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
def test_riesz_rejects_order(grid1, alpha):
    with pytest.raises(ValueError):
        riesz_potential(gaussian(grid1), alpha)


@given(f=vectors, g=vectors, a=st.floats(-5, 5))
def test_riesz_is_linear(f, g, a):
    lhs = riesz_potential(f * a + g, 0.5).values
    rhs = a * riesz_potential(f, 0.5).values + riesz_potential(g, 0.5).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a)) * 64)


# -- generalized fractional integral --------------------------------------------


def test_generalized_fractional_of_zero(grid1):
    assert np.all(generalized_fractional(HEAT, GridFunction.zeros(grid1), 0.5).values == 0)


def test_quadrature_needs_nodes():
    with pytest.raises(ConfigurationError):
        TimeQuadrature(nodes=4)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_heat_fractional_matches_riesz(g1024, alpha):
    for f in (gaussian(g1024, 0.25), gaussian(g1024, 1.0), indicator(g1024, -1.0, 1.0)):
        gen = generalized_fractional(HEAT, f, alpha)
        assert interior_rel_l2(gen, riesz_potential(f, alpha)) <= 1e-3


def test_fractional_positive_and_dominated(grid1):
    x = grid1.coords()[0]
    f = GridFunction(grid1, np.sin(3 * x) * np.exp(-(x**2)))
    gen = generalized_fractional(HEAT, f, 0.5)
    assert np.all(gen.values <= riesz_potential(f.abs(), 0.5).values + 1e-8)
    assert np.all(generalized_fractional(HEAT, f.abs(), 0.5).values >= 0)


# -- difference kernel ----------------------------------------------------------


def test_difference_kernel_vanishes_as_t_shrinks():
    assert abs(difference_kernel(HEAT, 0.5, 1e-12, 1.0)) <= 1e-8


def test_difference_kernel_ratio_stable_under_doubling():
    rhos = (0.25, 0.5, 1.0, 2.0, 4.0)

    def sup_ratio(nodes):
        return max(abs(difference_kernel(HEAT, 0.5, f * r * r, r, nodes, rtol=0.1)) * r ** (1 - 0.5 + 2) / (f * r * r)
                   for r in rhos for f in (0.01, 0.1, 1.0))

    a, b = sup_ratio(64), sup_ratio(128)
    assert math.isfinite(a) and abs(b / a - 1) <= 0.1


@pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
def test_difference_kernel_shape(t):
    # positive core for rho << sqrt(t); beyond it the kernel is close to
    # -t * Laplacian of c rho^{alpha-1}, negative and decaying like rho^{alpha-3}
    a, s = 0.5, math.sqrt(t)
    assert difference_kernel(HEAT, a, t, 0.05 * s) > 0
    far = [difference_kernel(HEAT, a, t, k * s) for k in (4, 8, 16, 32)]
    assert all(v < 0 for v in far)
    assert all(abs(u) > abs(v) for u, v in zip(far, far[1:]))
    rho = 32 * s
    tail = -t * (1 - a) * (2 - a) * riesz_constant(a, 1) * rho ** (a - 3)
    assert far[-1] == pytest.approx(tail, rel=0.02)


# -- commutators --------------------------------------------------------------


def test_commutator_needs_a_symbol():
    with pytest.raises(ValueError):
        CommutatorSpec(0.5, ())


def test_commutator_with_constant_symbols_vanishes(grid1, rng):
    f = gaussian(grid1)
    const = GridFunction.constant(grid1, 3.0)
    other = GridFunction(grid1, rng.normal(size=grid1.shape))
    for bs in [(const,), (const, other)]:
        out = multilinear_commutator(CommutatorSpec(0.5, bs), f)
        assert np.max(np.abs(out.values)) <= 1e-12


def test_commutator_matches_brute_double_sum():
    g = Grid(1, 4.0, 256)
    x = g.coords()[0]
    b = GridFunction(g, x.copy())
    f = indicator(g, 0.0, 1.0)
    out = multilinear_commutator(CommutatorSpec(0.5, (b,)), f)
    i = g.nearest_index(2.0)[0]
    c = math.gamma(0.25) / (math.sqrt(math.pi) * 2**0.5 * math.gamma(0.25))
    total = 0.0
    for j in range(g.n):
        if j != i:  # the diagonal factor b(y) - b(y) is zero
            d = abs(x[i] - x[j])
            # the kernel integrated exactly over cell j
            cell = ((d + g.h / 2) ** 0.5 - (d - g.h / 2) ** 0.5) / 0.5
            total += (x[i] - x[j]) * c * cell * f.values[j]
    assert out.values[i] == pytest.approx(total, rel=1e-10)


@given(seed=st.integers(0, 2**16), m=st.sampled_from([2, 3]))
def test_commutator_symmetric_in_symbols(seed, m):
    r = np.random.default_rng(seed)
    bs = [GridFunction(SMALL, r.normal(size=64)) for _ in range(m)]
    f = GridFunction(SMALL, r.normal(size=64))
    a = multilinear_commutator(CommutatorSpec(0.5, tuple(bs)), f).values
    b = multilinear_commutator(CommutatorSpec(0.5, tuple(reversed(bs))), f).values
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * np.max(np.abs(a)))


@given(seed=st.integers(0, 2**16), m=st.sampled_from([1, 2]))
def test_sigma_expansion_identity(seed, m):
    r = np.random.default_rng(seed)
    x = SMALL.coords()[0]
    bs = tuple(GridFunction(SMALL, np.sin(r.uniform(0.5, 2) * x + r.uniform(0, 3))) for _ in range(m))
    f = gaussian(SMALL)
    lam = r.uniform(-2, 2, size=m)
    spec = CommutatorSpec(0.5, bs)
    direct = multilinear_commutator(spec, f).values
    expanded = sigma_expansion(spec, lam, f).values
    assert np.max(np.abs(direct - expanded)) <= 1e-10 * np.max(np.abs(direct))


@given(f=vectors, g=vectors)
def test_commutator_is_linear_in_f(f, g):
    spec = CommutatorSpec(0.5, (SMALL.sample(np.sin),))
    lhs = multilinear_commutator(spec, f + g).values
    rhs = multilinear_commutator(spec, f).values + multilinear_commutator(spec, g).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.max(np.abs(lhs)) + 1e-14)


# -- maximal functions ----------------------------------------------------------


def test_maximal_of_constant(grid1):
    fam = build_ball_family(grid1)
    out = maximal_function(GridFunction.constant(grid1, 2.5), "M", fam)
    assert np.all(out.values == 2.5)


def test_maximal_of_interval_away_from_it(g1024):
    out = maximal_function(indicator(g1024, -1.0, 1.0), "M", build_ball_family(g1024))
    assert out.at(3.0) == pytest.approx(0.5, rel=0.05)


def test_fractional_maximal_at_origin(g1024):
    out = maximal_function(indicator(g1024, -1.0, 1.0), "M_alpha_r", build_ball_family(g1024), alpha=0.5, r=1)
    assert out.at(0.0) == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_weighted_maximal_needs_weight(grid1):
    with pytest.raises(ValueError):
        maximal_function(gaussian(grid1), "M_w", build_ball_family(grid1))


@given(f=vectors, kind=st.sampled_from(["M", "M_w", "M_alpha_r", "M_alpha_r_w"]))
def test_maximal_dominates_modulus(f, kind):
    w = WeightSpec("power", -0.5)(SMALL)
    out = maximal_function(f, kind, SMALL_FAM, alpha=0.0, r=1.5, w=w)
    assert np.all(out.values >= np.abs(f.values) * (1 - 1e-12))


@given(f=vectors, seed=st.integers(0, 2**16))
def test_maximal_is_monotone(f, seed):
    bigger = GridFunction(SMALL, np.abs(f.values) + np.random.default_rng(seed).exponential(size=64))
    a = maximal_function(f, "M", SMALL_FAM).values
    b = maximal_function(bigger, "M", SMALL_FAM).values
    assert np.all(a <= b * (1 + 1e-12))


# -- sharp maximal --------------------------------------------------------------


def test_sharp_of_constant_vanishes(grid1):
    out = sharp_maximal(HEAT, GridFunction.constant(grid1, 4.0), build_ball_family(grid1), boundary="renormalized")
    assert np.max(np.abs(out.values)) <= 1e-12


def test_sharp_matches_per_ball_brute_force():
    g = Grid(1, 4.0, 64)
    fam = build_ball_family(g, BallPolicy(stride=3))
    f = indicator(g, -1.0, 1.0)
    fast = sharp_maximal(HEAT, f, fam).values
    slow = np.abs(f.values - semigroup_apply(HEAT, f, (g.h / 2) ** 2).values)
    for row in range(fam.n_rows):
        for k in range(fam.n_radii):
            cells = fam.ball_cells(row, k)
            smooth = semigroup_apply(HEAT, f, fam.radii[k] ** 2).values
            mean = np.abs(f.values - smooth)[cells].mean()
            slow[cells] = np.maximum(slow[cells], mean)
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-14)
    edge, far = fast[g.nearest_index(1.0)], fast[g.nearest_index(3.9)]
    assert edge > 0 and far < edge


@pytest.mark.filterwarnings("error::mlab.operators.ResolutionWarning")
def test_sharp_does_not_underresolve(grid1):
    with warnings.catch_warnings():
        sharp_maximal(HEAT, gaussian(grid1), build_ball_family(grid1))
