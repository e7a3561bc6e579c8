"""Solving a classically unsolvable first-order system.

The complex equation (D_x + i D_y - 2 (x + i y) D_z) U = f on R^3 is the
standard example of a smooth linear PDE with no classical (or even
distributional) solution in any neighborhood, for suitable smooth f.
Splitting U = V + i W into real and imaginary parts gives a 2x2 real
first-order system.

Pointwise, in jet space, nothing is wrong with it: at every point the
prolonged linear system has full rank, so jets of arbitrary order exist.
The construction below turns those jets into a staged sequence of smooth
functions that satisfies the system to growing order at a dense set of
points -- a generalized solution with dense singularities.
"""

from densepde import (
    DensePointStream,
    construct_sequence,
    prolong,
    range_condition_check,
    rank_condition,
    to_text,
    verify_solution,
)
from densepde.systems import lewy_operator

op = lewy_operator("x", "0")  # right-hand side f = x + 0i
print("the system (homogeneous form):")
for g in op.equations:
    print("   ", to_text(g), "= 0")

# Step 1: rank certificates.  At rational points everything is exact:
# rank is computed by Gaussian elimination over the rationals, so
# "solvable" below is a proof, not a float observation.

points = DensePointStream(op.domain).prefix(5)
for level in range(3):
    certs = [rank_condition(op, a, level) for a in points]
    assert all(c.holds and c.strict and c.arithmetic == "exact" for c in certs)
    c = certs[0]
    print(
        f"level {level}: {len(prolong(op, level).equations)} equations, "
        f"rank {c.rank_p} = row count at all {len(points)} points (exact)"
    )

report = range_condition_check(op, points, 2)
print("range condition 0 in R^l at every point/level:", report.all_ok)

# Step 2: construct.  Stage nu solves the prolonged system at points
# z_0..z_nu, takes Taylor polynomials of the solved jets, and glues them
# with smooth bumps whose supports are pairwise disjoint.

seq = construct_sequence(op, points[:3], [0, 1, 1])
print(
    f"constructed {seq.stage_count} stages, "
    f"arithmetic: {'exact' if seq.exact else 'float'}"
)

# Step 3: verify.  Every derivative of every error term, up to the stage
# order, is evaluated at the construction points.  With rational data the
# zeros are literal.

result = verify_solution(op, seq, arithmetic="exact")
print("verification:", "PASS" if result.passed else "FAIL",
      f"({result.arithmetic})")

# The classical impossibility is not contradicted: the singular set of
# the generalized solution is dense.  The construction shows exactly how
# much of the equation can be satisfied, and where.
