"""Constructor: dense streams, bumps, Taylor glue, staged sequences,
bracket interpolation."""

from fractions import Fraction as F

import pytest

from densepde.construct import (
    BumpFunction,
    ConstructionError,
    DensePointStream,
    SolveFailure,
    bracket_interpolate,
    construct_sequence,
    make_bumps,
    solve_on_discrete_set,
    taylor_from_jet,
)
from densepde.expr import differentiate, evaluate_exact, evaluate_float
from densepde.jets import jet_of_function, parse_pde_text
from densepde.multiindex import MultiIndex
from densepde.parser import Context, parse_expression

UNIT = ((F(0), F(1)),)
UNIT2 = ((F(0), F(1)), (F(0), F(1)))

TRANSPORT = """
dim: 1
vars: x
order: 1
domain: (0,1)
eq: u_x - u
"""


class TestDensePointStream:
    def test_dyadic_prefix_2d(self):
        got = DensePointStream(UNIT2).prefix(4)
        assert got == [
            (F(1, 2), F(1, 2)),
            (F(1, 4), F(1, 4)),
            (F(1, 4), F(3, 4)),
            (F(3, 4), F(1, 4)),
        ]

    def test_points_distinct(self):
        pts = DensePointStream(UNIT2).prefix(40)
        assert len(set(pts)) == 40

    def test_diagonal_distinct_and_inside(self):
        box = ((F(-1), F(1)), (F(0), F(2)))
        pts = DensePointStream(box, "diagonal").prefix(30)
        assert len(set(pts)) == 30
        for p in pts:
            assert all(lo < c < hi for c, (lo, hi) in zip(p, box))

    def test_dyadic_gets_dense(self):
        # every dyadic rational with denominator 8 appears eventually
        pts = set(DensePointStream(UNIT).prefix(7))
        assert {(F(k, 8),) for k in (1, 3, 5, 7)} <= pts

    def test_bad_scheme(self):
        with pytest.raises(ValueError):
            DensePointStream(UNIT, "random")

    def test_scaled_box(self):
        pts = DensePointStream(((F(2), F(4)),)).prefix(1)
        assert pts == [(F(3),)]


class TestBumps:
    CTX = Context(("x",))

    def test_declared_radii(self):
        bumps = make_bumps([(F(1, 4),), (F(3, 4),)], UNIT, self.CTX, F(1, 2))
        assert [b.r_out for b in bumps] == [F(1, 8), F(1, 8)]
        assert [b.r_in for b in bumps] == [F(1, 16), F(1, 16)]

    def test_supports_disjoint_and_interior(self):
        pts = [(F(1, 2),), (F(9, 16),), (F(15, 16),)]
        bumps = make_bumps(pts, UNIT, self.CTX, F(1, 2))
        for i, a in enumerate(bumps):
            assert a.center[0] - a.r_out > 0
            assert a.center[0] + a.r_out < 1
            for b in bumps[i + 1 :]:
                gap = abs(a.center[0] - b.center[0])
                assert a.r_out + b.r_out < gap

    def test_duplicate_points_rejected(self):
        with pytest.raises(ValueError):
            make_bumps([(F(1, 2),), (F(1, 2),)], UNIT, self.CTX)

    def test_point_on_boundary_rejected(self):
        with pytest.raises(ValueError):
            make_bumps([(F(0),)], UNIT, self.CTX)

    def test_partition_values(self):
        [b] = make_bumps([(F(1, 2),)], UNIT, self.CTX)
        assert b.value([0.5]) == 1.0
        assert b.value([0.95]) == 0.0
        mid = float(b.center[0]) + float(b.r_in + b.r_out) / 2
        assert 0.0 <= b.value([mid]) <= 1.0


class TestTaylor:
    CTX = Context(("x", "y"))

    def test_reproduces_jet(self):
        u = parse_expression("x^3*y + y^2", self.CTX)
        a = (F(1, 3), F(1, 5))
        jet = jet_of_function(u, self.CTX, a, 3)
        [poly] = taylor_from_jet(self.CTX, a, jet)
        back = jet_of_function(poly, self.CTX, a, 3)
        assert back.values == jet.values

    def test_degree_three_polynomial_recovered_exactly(self):
        u = parse_expression("1 + x - y^2 + x*y", self.CTX)
        a = (F(1, 2), F(1, 2))
        [poly] = taylor_from_jet(
            self.CTX, a, jet_of_function(u, self.CTX, a, 2)
        )
        for pt in [(F(0), F(0)), (F(1), F(-1)), (F(2, 7), F(3, 11))]:
            assignment = dict(zip(self.CTX.space_vars(), pt))
            assert evaluate_exact(poly, assignment) == evaluate_exact(
                u, assignment
            )


class TestDiscreteSolve:
    def test_transport_glued_solution(self):
        op = parse_pde_text(TRANSPORT)
        pts = [(F(1, 4),), (F(3, 4),)]
        ds = solve_on_discrete_set(op, pts, 2, seed={(1, (0,)): 1})
        assert ds.exact
        fn = ds.functions[0]
        # at each construction point the glued function takes the pinned
        # jet value; off all supports it is exactly zero
        for a in pts:
            assert fn.value_exact(a) == 1
        assert fn.value_exact((F(1, 2),)) == 0

    def test_derivative_matches_jet_at_point(self):
        op = parse_pde_text(TRANSPORT)
        a = (F(1, 4),)
        ds = solve_on_discrete_set(op, [a], 2, seed={(1, (0,)): 1})
        e = ds.functions[0].expression()
        ctx = op.context
        d = differentiate(e, ctx.space(1))
        assert evaluate_exact(d, {ctx.space(1): a[0]}) == ds.jets[a].value(
            1, MultiIndex((1,))
        )

    def test_unsolvable_names_point(self):
        impossible = parse_pde_text("""
dim: 1
vars: x
order: 1
domain: (0,1)
eq: u_x^2 + 1
""")
        with pytest.raises(SolveFailure) as info:
            solve_on_discrete_set(impossible, [(F(1, 2),)], 0)
        assert info.value.point == (F(1, 2),)
        assert info.value.result.residual > 0


class TestSequence:
    def test_stages_grow(self):
        op = parse_pde_text(TRANSPORT)
        pts = [(F(1, 4),), (F(3, 4),), (F(1, 8),)]
        seq = construct_sequence(op, pts, [0, 1, 2], seed={(1, (0,)): 1})
        assert seq.stage_count == 3
        assert [len(s.bumps) for s in seq.stages] == [1, 2, 3]
        assert seq.exact

    def test_schedule_must_be_monotone(self):
        op = parse_pde_text(TRANSPORT)
        with pytest.raises(ValueError):
            construct_sequence(op, [(F(1, 4),), (F(3, 4),)], [2, 1])

    def test_partial_sequence_on_failure(self):
        mixed = parse_pde_text("""
dim: 1
vars: x
order: 1
domain: (0,1)
eq: u_x^2 - 1 + 2*x
""")
        # solvable at x < 1/2 (rhs positive), impossible at x > 1/2
        with pytest.raises(ConstructionError) as info:
            construct_sequence(mixed, [(F(1, 4),), (F(3, 4),)], [0, 0])
        assert info.value.stage == 1
        assert info.value.partial.stage_count == 1


class TestBracket:
    def test_interpolates_linear_operator(self):
        op = parse_pde_text("""
dim: 1
vars: x
order: 0
domain: (0,1)
eq: u - x
""")
        ctx = op.context
        f = parse_expression("0", ctx)
        u_minus = parse_expression("0", ctx)
        u_plus = parse_expression("1", ctx)
        pts = [(F(1, 4),), (F(3, 4),)]
        res = bracket_interpolate(op, f, u_minus, u_plus, pts)
        for a in pts:
            assert res.residuals[a] <= 1e-12
            # interpolant equals x at each point: u(a) = a
            assert res.function.value(a) == pytest.approx(float(a[0]), abs=1e-10)

    def test_bracket_violation_names_point(self):
        op = parse_pde_text("""
dim: 1
vars: x
order: 0
domain: (0,1)
eq: u - 2
""")
        ctx = op.context
        with pytest.raises(ValueError) as info:
            bracket_interpolate(
                op,
                parse_expression("0", ctx),
                parse_expression("0", ctx),
                parse_expression("1", ctx),
                [(F(1, 2),)],
            )
        assert "1/2" in str(info.value)
