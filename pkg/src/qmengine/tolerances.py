"""Shared numerical tolerances.

All bounds are absolute bounds on Hilbert-Schmidt norms; validation checks on
non-normalized operators scale them by max(1, norm of the operand).  The
values are calibrated for double-precision eigendecompositions at dimensions
up to ~16, where roundoff stays well below 1e-11.
"""

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
MAJORIZATION_TOL = 1e-9
KRAUS_TOL = 1e-9
PERIPHERAL_TOL = 1e-9
PROBABILITY_FLOOR = 1e-12
