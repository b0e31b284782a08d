"""Power weights |x|^beta: which Muckenhoupt and reverse Hölder classes they join.

Membership is judged by trend, not by a single number: a finite lattice can
only ever produce a finite characteristic, so we watch whether it grows as
the grid is refined.
"""

from mlab.lattice import BallPolicy, Grid, build_ball_family
from mlab.weights import WeightSpec, ap_characteristic, characteristic_trend, critical_index_estimate

ORIGIN = BallPolicy.origin_only()

# On intervals centred at 0 the A_2 product of |x|^{-1/2} is exactly 4/3.
g = Grid(1, 8.0, 1024)
w = WeightSpec("power", -0.5)
ch = ap_characteristic(w(g), 2.0, build_ball_family(g, ORIGIN))
print(f"A_2(|x|^-1/2) on origin balls, N=1024: {ch.value:.4f}  (closed form 4/3)")

# A_1 holds for |x|^{-1/2}; for |x|^{+1/2} it fails, but only by a factor
# 2^{1/2} per doubling, so a wide resolution span is needed to see it.
for beta, span in ((-0.5, (512, 1024)), (0.5, (64, 65536))):
    tr = characteristic_trend(WeightSpec("power", beta), "A_1", 1, span)
    print(f"A_1(|x|^{beta:+}) over N={span}: growth {tr.growth[0]:.3f}, member={tr.member}")

# The reverse Hölder index of |x|^beta (beta < 0) is -1/beta.  Large indices
# are overestimated: near the index the divergence per doubling is so slow
# that even ten doublings cannot separate it from a bounded sequence.
for beta in (-0.5, -0.75, -0.25):
    ci = critical_index_estimate(WeightSpec("power", beta), (64, 65536), policy=ORIGIN)
    print(f"critical index of |x|^{beta}: {ci.value:.3f}  (exact {-1 / beta:.3f}), bracket {ci.bracket}")
