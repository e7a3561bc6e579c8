"""A sequence of smooth functions that is "eventually zero to every order"
at a dense set of points, without any term being zero anywhere.

This is the basic object the whole library is built around: generalized
functions are sequences of smooth functions, considered modulo sequences
whose derivatives eventually vanish at every point of a dense set.  The
staged products below are the classic example.
"""

from fractions import Fraction as F

from densepde import (
    DensePointStream,
    check_vanishing,
    example_sequence,
    to_text,
)

# Take the first 6 dyadic points of (0, 1) and let stage nu use the
# points x_0..x_nu with a growing exponent l_nu = nu + 1:
#
#     w_nu(x) = (x - x_0)^{l_nu} * ... * (x - x_nu)^{l_nu}

points = [p[0] for p in DensePointStream(((F(0), F(1)),)).prefix(6)]
orders = [nu + 1 for nu in range(6)]
seq = example_sequence(points, orders)

print("points:", ", ".join(str(x) for x in points))
for nu in (0, 1, 2):
    print(f"w_{nu} =", to_text(seq.terms[nu]))
print("...")

# No w_nu is the zero function.  But fix any point x_j and any derivative
# order: from stage max(j, ...) on, every term contains the factor
# (x - x_j) to a power exceeding the order, so all those derivatives are
# exactly zero there.  The check below does exhaustive symbolic
# differentiation and exact rational evaluation -- no tolerances.

for j, x in enumerate(points):
    report = check_vanishing(seq, [(x,)], orders[j] - 1, arithmetic="exact")
    entry = report.entries[0]
    print(
        f"at x = {x}: derivatives up to order {orders[j] - 1} vanish "
        f"from stage {entry.witness} on (exact)"
    )

# The witness index grows with the point: later points are "repaired"
# later in the sequence.  That is what lets the singular set -- where
# nothing is repaired -- be dense and even uncountable, while the
# sequence still defines a perfectly good generalized function.
