"""Weighted Morrey-space toolkit on a lattice.

Grids and ball families (:mod:`mlab.lattice`), Muckenhoupt machinery
(:mod:`mlab.weights`), norm functionals (:mod:`mlab.spaces`), operators
(:mod:`mlab.operators`) and a registry of executable inequality checks
(:mod:`mlab.harness`).
"""

__version__ = "0.1.0"
