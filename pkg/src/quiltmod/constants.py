"""Frozen convention constants.

These were calibrated once against independent oracles (chart-based exterior
derivative by central finite differences, and the anchor/splitting evaluation
of the canonical 2-form) and are validated by the test suite; they are not
tunable knobs.

Conventions they refer to:
  * faces are stored in traversal order, in(e_i) = out(e_{i+1}), with the
    face relation g_{e_k} ... g_{e_1} = 1 (path-composition order);
  * the wedge of two algebra-valued 1-forms is
    <a ^ b>(X, Y) = <a(X), b(Y)> - <a(Y), b(X)>  (no inner 1/2);
  * tangent vectors are left-trivialized (velocity of g_e is g_e X_e).
"""

# d(omega) = KAPPA * sum_e <[X_e, Y_e], Z_e> pulled back along the moment map.
CARTAN_KAPPA = 0.5

# The structure (Dirac) action of the residual gauge algebra is minus the
# derivative of the gauge action h.g = h_in g h_out^-1; with that sign the
# moment identity holds with prefactor +1/2 as stated.
STRUCTURE_ACTION_SIGN = -1.0

# Overall sign relating combinatorial crossing signs to the surface
# orientation implied by the corner-rotation map (calibrated against the
# fusion-built bivector).
ORIENT_SIGN = 1.0
