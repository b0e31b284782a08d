import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlab.lattice import Ball, BallPolicy, Grid, GridFunction, build_ball_family
from mlab.weights import (
    CSV_HEADER,
    Weight,
    WeightCharacteristics,
    WeightSpec,
    a1_characteristic,
    ap_characteristic,
    characteristic_trend,
    check_ap_factorization,
    critical_index_estimate,
    parse_weight_spec,
    reverse_holder_constant,
)

ORIGIN = BallPolicy.origin_only()
# ten doublings: slow power-law divergences (2^0.1 per doubling) become visible
WIDE = (64, 65536)


@pytest.fixture(scope="module")
def fam512():
    g = Grid(1, 8.0, 512)
    return g, build_ball_family(g)


def _random_weight(g: Grid, seed: int) -> Weight:
    r = np.random.default_rng(seed)
    return Weight(GridFunction(g, np.exp(r.normal(size=g.shape))))


# -- spec parsing -----------------------------------------------------------


@pytest.mark.parametrize("text,kind,param", [("power:-0.5", "power", -0.5), ("const:2", "const", 2.0),
                                             ("loggrid", "loggrid", 0.0)])
def test_parse_weight_spec(text, kind, param):
    spec = parse_weight_spec(text)
    assert (spec.kind, spec.param) == (kind, param)


@pytest.mark.parametrize("text", ["power", "gauss:1", "csv:", "loggrid:3"])
def test_parse_weight_spec_rejects(text):
    with pytest.raises(ValueError):
        parse_weight_spec(text)


def test_weight_must_be_positive():
    g = Grid(1, 1.0, 8)
    with pytest.raises(ValueError):
        Weight(GridFunction(g, np.r_[np.ones(7), 0.0]))


def test_csv_weight_round_trip(tmp_path):
    g = Grid(1, 2.0, 32)
    w = WeightSpec("power", -0.25)(g)
    path = tmp_path / "w.csv"
    w.base.to_csv(path)
    back = parse_weight_spec(f"csv:{path}")(g)
    np.testing.assert_array_equal(back.values, w.values)


# -- characteristics: closed-form and trivial cases ----------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_constant_weight_characteristics_are_one(fam512, p):
    g, fam = fam512
    w = Weight.unit(g)
    assert ap_characteristic(w, p, fam).value == pytest.approx(1.0, abs=1e-12)
    assert a1_characteristic(w, fam).value == pytest.approx(1.0, abs=1e-12)
    assert reverse_holder_constant(w, p, fam).value == pytest.approx(1.0, abs=1e-12)


def test_a2_of_inverse_sqrt_on_origin_balls():
    # closed form: (2 r^{-1/2}) (2/3 r^{1/2}) = 4/3 on every origin-centred interval
    g = Grid(1, 8.0, 1024)
    ch = ap_characteristic(WeightSpec("power", -0.5)(g), 2.0, build_ball_family(g, ORIGIN))
    assert ch.value == pytest.approx(4 / 3, rel=0.02)


def test_a1_of_inverse_sqrt_is_stable():
    tr = characteristic_trend(WeightSpec("power", -0.5), "A_1", 1, (512, 1024))
    assert tr.member and abs(tr.growth[0] - 1) < 0.1


def test_a1_of_growing_weight_diverges():
    # grows like 2^{1/2} per doubling, so the wide span is needed
    tr = characteristic_trend(WeightSpec("power", 0.5), "A_1", 1, WIDE)
    assert tr.diverging
    assert not tr.member


def test_reverse_holder_inside_and_outside_critical_index():
    ok = characteristic_trend(WeightSpec("power", -0.5), "RH", 1.5, (512, 1024))
    assert ok.member and abs(ok.growth[0] - 1) < 0.1
    bad = characteristic_trend(WeightSpec("power", -0.5), "RH", 2.5, WIDE, policy=ORIGIN)
    assert bad.diverging


def test_witness_of_divergent_a1_covers_the_origin():
    # the best ball reaches the cell next to the origin (minimum h/2) from one
    # side, where the average of |x| is largest
    g = Grid(1, 8.0, 1024)
    fam = build_ball_family(g)
    ch = a1_characteristic(WeightSpec("power", 1.0)(g), fam)
    assert abs(ch.witness.center[0]) <= ch.witness.radius + g.h / 2
    assert ch.value == pytest.approx(ch.witness.radius / (g.h / 2), rel=0.01)
    assert ch.witness.radius == fam.radii[-1]


def test_csv_row_marks_divergence():
    ch = WeightCharacteristics("A_1", 1.0, 7.0, Ball((0.0,), 0.5), "fam", diverging=True)
    row = ch.csv_row("power:1")
    assert len(row) == len(CSV_HEADER)
    assert row[3] == "DIVERGES"


# -- critical index ---------------------------------------------------------


@pytest.mark.parametrize("beta,expected", [(-0.5, 2.0), (-0.75, 4 / 3)])
def test_critical_index_of_power_weights(beta, expected):
    ci = critical_index_estimate(WeightSpec("power", beta), WIDE, policy=ORIGIN)
    assert abs(ci.value - expected) <= 0.1
    assert ci.bracket[0] <= ci.value <= ci.bracket[1]


def test_critical_index_of_constant_is_capped():
    ci = critical_index_estimate(WeightSpec("const", 1.0), WIDE, policy=ORIGIN)
    assert ci.capped and ci.value >= 64
    assert ci.exceeds(10.0) is True


def test_critical_index_flags_near_threshold():
    ci = critical_index_estimate(WeightSpec("power", -0.5), WIDE, policy=ORIGIN)
    assert ci.exceeds(ci.value, tol=0.01) is None
    assert ci.exceeds(1.5) is True and ci.exceeds(3.0) is False


# -- factorization table ----------------------------------------------------


def test_factorization_examples():
    rows = check_ap_factorization([-0.5, 0.0], [1.5, 2.5], [1.0, 3.0], WIDE, policy=ORIGIN)
    table = {(r.beta, r.s, r.p): (r.left, r.right) for r in rows}
    assert table[(-0.5, 1.5, 1.0)] == (True, True)
    assert table[(-0.5, 2.5, 1.0)] == (False, False)
    assert all(table[(0.0, s, p)] == (True, True) for s in (1.5, 2.5) for p in (1.0, 3.0))
    assert all(r.agree for r in rows)


@pytest.mark.parametrize("beta", [-0.5, 0.5, 1.5, -1.5])
def test_duality_of_power_weights(beta):
    # w in A_2 iff w^{-1} in A_2, judged by the same divergence test
    a = characteristic_trend(WeightSpec("power", beta), "A_p", 2.0, WIDE, policy=ORIGIN)
    b = characteristic_trend(WeightSpec("power", -beta), "A_p", 2.0, WIDE, policy=ORIGIN)
    assert a.member == b.member == (abs(beta) < 1)


# -- properties -------------------------------------------------------------


@given(seed=st.integers(0, 2**16), p=st.floats(1.1, 4.0), dp=st.floats(0.1, 3.0))
def test_ap_non_increasing_in_p(seed, p, dp):
    g = Grid(1, 2.0, 32)
    fam = build_ball_family(g)
    w = _random_weight(g, seed)
    lo, hi = ap_characteristic(w, p, fam).value, ap_characteristic(w, p + dp, fam).value
    assert hi <= lo * (1 + 1e-12)
    assert hi >= 1 - 1e-12


@given(seed=st.integers(0, 2**16), r=st.floats(1.05, 4.0), dr=st.floats(0.1, 3.0))
def test_reverse_holder_non_decreasing_in_r(seed, r, dr):
    g = Grid(1, 2.0, 32)
    fam = build_ball_family(g)
    w = _random_weight(g, seed)
    assert reverse_holder_constant(w, r + dr, fam).value >= reverse_holder_constant(w, r, fam).value * (1 - 1e-12)


@given(seed=st.integers(0, 2**16), c=st.floats(1e-3, 1e3), p=st.floats(1.1, 4.0))
def test_ap_scale_invariant(seed, c, p):
    g = Grid(1, 2.0, 32)
    fam = build_ball_family(g)
    w = _random_weight(g, seed)
    scaled = Weight(GridFunction(g, c * w.values))
    assert ap_characteristic(scaled, p, fam).value == pytest.approx(ap_characteristic(w, p, fam).value, rel=1e-12)
