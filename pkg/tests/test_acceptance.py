"""End-to-end acceptance criteria, one test per criterion.

Each test prints a ``criterion <k>: PASS|FAIL`` line (visible without ``-s``)
before asserting, so a plain ``pytest`` run doubles as the acceptance report.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import indicator
from mlab.harness import FAIL, GATED, PASS, CheckContext, TestFamily, interior_rel_l2, refinement_study, run_check
from mlab.lattice import BallPolicy, Grid, build_ball_family
from mlab.operators import (SemigroupSpec, generalized_fractional, maximal_function, riesz_potential,
                            riesz_potential_at)
from mlab.weights import WeightSpec, ap_characteristic, characteristic_trend, critical_index_estimate

WIDE = (64, 65536)
ORIGIN = BallPolicy.origin_only()


@pytest.fixture
def verdict(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def test_c01_heat_fractional_integral_matches_riesz(verdict):
    g = Grid(1, 8.0, 1024)
    f = g.sample(lambda x: np.exp(-x * x / 2))
    heat = SemigroupSpec.heat(1)
    start = time.perf_counter()
    errs = {a: interior_rel_l2(generalized_fractional(heat, f, a), riesz_potential(f, a)) for a in (0.25, 0.5)}
    secs = time.perf_counter() - start
    verdict(1, max(errs.values()) <= 1e-3 and secs <= 60,
            f"rel-L2 {', '.join(f'α={a}: {e:.2e}' for a, e in errs.items())}; {secs:.1f} s")


def test_c02_riesz_constant(verdict):
    g = Grid(1, 4.0, 1024)
    val = riesz_potential_at(indicator(g, -1.0, 1.0), 0.5, (0.0,))
    exact = 4 / math.sqrt(2 * math.pi)
    verdict(2, abs(val / exact - 1) <= 0.01, f"I_1/2 χ(0) = {val:.5f}, exact {exact:.5f}")


def test_c03_a2_of_inverse_sqrt(verdict):
    g = Grid(1, 8.0, 1024)
    val = ap_characteristic(WeightSpec("power", -0.5)(g), 2.0, build_ball_family(g, ORIGIN)).value
    verdict(3, abs(val / (4 / 3) - 1) <= 0.02, f"A_2 = {val:.4f}, target 4/3")


def test_c04_critical_indices(verdict):
    got = {b: critical_index_estimate(WeightSpec("power", b), WIDE, policy=ORIGIN).value for b in (-0.5, -0.75)}
    ok = abs(got[-0.5] - 2.0) <= 0.1 and abs(got[-0.75] - 4 / 3) <= 0.1
    verdict(4, ok, f"r_w(|x|^-1/2) = {got[-0.5]:.3f}, r_w(|x|^-3/4) = {got[-0.75]:.3f}")


def test_c05_factorization_agreement(verdict):
    rep = run_check("CHK-L7", CheckContext(), (512, 1024))
    where = rep.measurements[-1].where
    ok = where["cases"] == 60 and where["agreement"] == 1.0
    verdict(5, ok, f"{where['cases']} cases, agreement {where['agreement']:.0%}")


def test_c06_subset_expansion(verdict):
    rep = run_check("CHK-SIGMA")
    worst = max(m.value for m in rep.measurements)
    verdict(6, worst <= 1e-10, f"max relative deviation {worst:.1e}")


def test_c07_constant_symbol_commutator(verdict):
    rep = run_check("CHK-TRIV-COMM")
    worst = max(m.value for m in rep.measurements)
    verdict(7, worst <= 1e-12, f"max |output| {worst:.1e} over m = 1, 2, 3")


def test_c08_kolmogorov_sandwich(verdict):
    rep = run_check("CHK-KOLM")
    count = sum(m.value for m in rep.measurements)
    verdict(8, count == 0 and rep.verdict == PASS, f"{count:g} violations in 1000 random functions per resolution")


def test_c09_difference_kernel_node_doubling(verdict):
    rep = run_check("CHK-L14")
    ok = rep.verdict == PASS and all(1 / 1.1 <= t <= 1.1 for t in rep.trends)
    verdict(9, ok, f"sup ratios {[round(m.value, 4) for m in rep.measurements]}, trends {[round(t, 4) for t in rep.trends]}")


STABLE = ["CHK-L15", "CHK-L16", "CHK-L9", "CHK-L10", "CHK-L11", "CHK-L12", "CHK-CHAIN", "CHK-WEAK", "CHK-EQUIV",
          pytest.param("CHK-THM1", marks=pytest.mark.xfail(
              strict=True, reason="log-symbol commutator ratio grows like |log h| on the lattice; see README"))]


@pytest.mark.parametrize("check_id", STABLE)
def test_c10_bounded_operators_are_stable(verdict, check_id):
    start = time.perf_counter()
    study = refinement_study(check_id, (512, 1024))
    secs = time.perf_counter() - start
    ok = (all(math.isfinite(v) for v in study.values) and all(t <= 1.2 for t in study.trends)
          and study.verdict == PASS and secs <= 600)
    verdict(10, ok, f"{check_id}: C = {[f'{v:.4g}' for v in study.values]}, "
                    f"trend {[round(t, 4) for t in study.trends]}, {secs:.0f} s")


def test_c11_negative_control_fires(verdict):
    tr = characteristic_trend(WeightSpec("power", 1.0), "A_1", 1, (512, 1024))
    neg = run_check("CHK-NEG-A1", CheckContext())
    gated = run_check("CHK-NEG-THM1", CheckContext())
    ok = tr.growth[0] > 1.5 and neg.verdict == FAIL and neg.as_expected and gated.verdict == GATED
    verdict(11, ok, f"A_1 growth {tr.growth[0]:.3f}, control verdict {neg.verdict}, theorem {gated.verdict}")


def test_c12_sweep_is_deterministic(verdict, tmp_path):
    outs = []
    for threads in ("1", "4"):
        env = {**os.environ, "MLAB_THREADS": threads}
        subprocess.run([sys.executable, "-m", "mlab.cli", "sweep", "--out", f"s{threads}"], cwd=tmp_path, env=env,
                       capture_output=True, text=True, timeout=1800)
        outs.append((tmp_path / f"s{threads}" / "report.json").read_bytes())
    verdict(12, outs[0] == outs[1], f"report.json {len(outs[0])} bytes, identical = {outs[0] == outs[1]}")


def test_c13_maximal_function_dominates(verdict):
    g = Grid(1, 8.0, 1024)
    fam = build_ball_family(g)
    tf = TestFamily.standard(g)
    bad = 0
    for f in (*tf.functions.values(), *tf.symbols.values()):
        mf = maximal_function(f, "M", fam)
        bad += int(np.sum(mf.values < np.abs(f.values) * (1 - 1e-12)))
    verdict(13, bad == 0, f"{bad} pointwise violations over {len(tf.functions) + len(tf.symbols)} functions")
