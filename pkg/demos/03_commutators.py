"""Multilinear commutators and their Morrey-space size.

The commutator of the fractional integral with symbols b_1..b_m has kernel
prod (b_j(y) - b_j(z)) K_alpha(y, z).  Shifting any b_j by a constant changes
nothing, and a constant symbol kills the whole operator.
"""

import numpy as np

from mlab.harness import CheckContext, TestFamily, refinement_study
from mlab.lattice import Grid, GridFunction
from mlab.operators import CommutatorSpec, multilinear_commutator

g = Grid(1, 8.0, 512)
tf = TestFamily.standard(g)
f = tf.functions["gauss:0.5"]
b = tf.symbols["log"]

out = multilinear_commutator(CommutatorSpec(0.5, (b,)), f)
shifted = multilinear_commutator(CommutatorSpec(0.5, (b + 5.0,)), f)
print(f"|[b, I]f| max {np.max(np.abs(out.values)):.4f}; change under b -> b + 5: "
      f"{np.max(np.abs(out.values - shifted.values)):.1e}")
zero = multilinear_commutator(CommutatorSpec(0.5, (GridFunction.constant(g, 3.0), b)), f)
print(f"constant first symbol, m=2: max |output| {np.max(np.abs(zero.values)):.1e}")

# The weighted Morrey bound for the commutator under grid refinement.  With a
# logarithmic symbol the lattice sup keeps creeping upward, roughly like the
# number of available ball scales.
study = refinement_study("CHK-THM1", (256, 512, 1024), CheckContext())
for row in study.table():
    print(f"  N={row['N']:<5} C={row['value']:.4f} trend={row['trend']}")
print("verdict:", study.verdict)
