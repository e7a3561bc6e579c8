"""Construction of generalized-solution sequences: dense point streams,
Taylor polynomials with prescribed jets, disjoint bump gluing, and the
staged sequences whose error terms vanish to growing order at the points
used.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .expr import (
    Bump,
    Const,
    Expr,
    Var,
    differentiate_multi,
    evaluate_exact,
    evaluate_float,
    is_rational_closed,
    simplify,
    spow,
    sprod,
    ssum,
    ExactnessUnavailable,
    ONE,
    MINUS_ONE,
    ZERO,
)
from .jets import Jet, PdeOperator, ProlongedSystem, apply_operator, prolong
from .multiindex import MultiIndex, multi_indices, zero_index
from .parser import Context
from .ranges import JetSolveResult, solve_jets_triangular

Point = tuple[Fraction, ...]
Box = tuple[tuple[Fraction, Fraction], ...]


# ---------------------------------------------------------------------------
# dense point enumeration

@dataclass(frozen=True)
class DensePointStream:
    """Deterministic stream of distinct rational points, dense in the box.

    dyadic: per level d, all points with every coordinate an odd multiple
    of 2^-d across the interval, lexicographic within the level.
    diagonal: per-axis enumeration of all reduced fractions in (0, 1)
    ordered by denominator, combined by diagonal sweep over index sums.
    """

    box: Box
    scheme: str = "dyadic"

    def __post_init__(self):
        if self.scheme not in ("dyadic", "diagonal"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.box:
            raise ValueError("empty box")
        for lo, hi in self.box:
            if not lo < hi:
                raise ValueError("degenerate box interval")

    def _unit_points(self) -> Iterator[tuple[Fraction, ...]]:
        n = len(self.box)
        if self.scheme == "dyadic":
            for d in itertools.count(1):
                denom = 1 << d
                odds = [Fraction(i, denom) for i in range(1, denom, 2)]
                for combo in itertools.product(odds, repeat=n):
                    yield combo
        else:
            axis = _reduced_fractions()
            cache: list[Fraction] = []

            def at(i: int) -> Fraction:
                while len(cache) <= i:
                    cache.append(next(axis))
                return cache[i]

            for total in itertools.count(0):
                for combo in _compositions(total, n):
                    yield tuple(at(i) for i in combo)

    def points(self) -> Iterator[Point]:
        for unit in self._unit_points():
            yield tuple(
                lo + (hi - lo) * t for t, (lo, hi) in zip(unit, self.box)
            )

    def prefix(self, count: int) -> list[Point]:
        if count < 1:
            raise ValueError("count must be >= 1")
        return list(itertools.islice(self.points(), count))


def _reduced_fractions() -> Iterator[Fraction]:
    """1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ... all reduced fractions in (0,1)."""
    for q in itertools.count(2):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                yield Fraction(p, q)


def _compositions(total: int, n: int) -> Iterator[tuple[int, ...]]:
    if n == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, n - 1):
            yield (head,) + rest


def enumerate_dense(box: Box, scheme: str = "dyadic", count: int = 1) -> list[Point]:
    return DensePointStream(box, scheme).prefix(count)


# ---------------------------------------------------------------------------
# bump functions

@dataclass(frozen=True)
class BumpFunction:
    """Smooth bump: 1 on the closed ball of radius r_in around the center,
    0 outside the open ball of radius r_out, values in [0, 1]."""

    context: Context
    center: Point
    r_in: Fraction
    r_out: Fraction

    def node(self, deriv: MultiIndex | None = None) -> Bump:
        if deriv is None:
            deriv = zero_index(self.context.n)
        return Bump(
            self.center, self.r_in, self.r_out, self.context.space_vars(), deriv
        )

    def value(self, point: Sequence) -> float:
        assignment = {v: x for v, x in zip(self.context.space_vars(), point)}
        return evaluate_float(self.node(), assignment)

    def region(self, point: Sequence[Fraction]) -> str:
        from .expr import _bump_region

        return _bump_region(self.node(), tuple(Fraction(c) for c in point))


def _sqrt_lower(f: Fraction) -> Fraction:
    """Exact rational lower bound for sqrt(f), tight to about 2^-32."""
    if f < 0:
        raise ValueError("negative radicand")
    scale = 1 << 32
    return Fraction(math.isqrt(f.numerator * f.denominator * scale * scale),
                    f.denominator * scale)


def make_bumps(
    points: Sequence[Point],
    box: Box,
    context: Context,
    shrink: Fraction = Fraction(1, 2),
) -> list[BumpFunction]:
    """Bumps with pairwise disjoint supports inside the box.

    r_out = shrink * min(half the distance to the nearest other point,
    distance to the box boundary); r_in = r_out / 2.
    """
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    pts = [tuple(Fraction(c) for c in p) for p in points]
    if len(set(pts)) != len(pts):
        raise ValueError("duplicate points")
    for p in pts:
        if not all(lo < c < hi for c, (lo, hi) in zip(p, box)):
            raise ValueError(f"point {p} not strictly inside the box")
    out = []
    for a in pts:
        boundary = min(
            min(c - lo, hi - c) for c, (lo, hi) in zip(a, box)
        )
        limit = boundary
        for b in pts:
            if b is a:
                continue
            d2 = sum((ca - cb) ** 2 for ca, cb in zip(a, b))
            half = _sqrt_lower(d2) / 2
            limit = min(limit, half)
        r_out = shrink * limit
        out.append(BumpFunction(context, a, r_out / 2, r_out))
    return out


# ---------------------------------------------------------------------------
# Taylor polynomials from jets

def taylor_from_jet(context: Context, a: Point, jet: Jet) -> list[Expr]:
    """Per unknown, the polynomial with D^p P(a) = jet value at (u, p)."""
    space = context.space_vars()
    out = []
    for unknown in range(1, context.k + 1):
        terms = []
        for p in multi_indices(context.n, jet.order):
            coeff = jet.value(unknown, p)
            if coeff == 0:
                continue
            c = Fraction(coeff) if isinstance(coeff, (int, Fraction)) else Fraction(coeff)
            monomial = [Const(c / p.factorial())]
            for axis, count in enumerate(p.entries):
                if count:
                    monomial.append(
                        spow(ssum([Var(space[axis]), Const(-a[axis])]), count)
                    )
            terms.append(sprod(monomial))
        out.append(ssum(terms))
    return out


# ---------------------------------------------------------------------------
# assembled functions

@dataclass(frozen=True)
class AssembledFunction:
    """Finite sum of bump * polynomial pieces with disjoint supports,
    plus an optional global background term (bracket interpolation)."""

    context: Context
    pieces: tuple[tuple[BumpFunction, Expr], ...]
    background: Expr | None = None

    def expression(self) -> Expr:
        terms = [sprod([bump.node(), poly]) for bump, poly in self.pieces]
        if self.background is not None:
            terms.append(self.background)
        return ssum(terms)

    def value(self, point: Sequence) -> float:
        assignment = {
            v: x for v, x in zip(self.context.space_vars(), point)
        }
        return evaluate_float(self.expression(), assignment)

    def value_exact(self, point: Sequence[Fraction]) -> Fraction:
        assignment = {
            v: Fraction(x) for v, x in zip(self.context.space_vars(), point)
        }
        return evaluate_exact(self.expression(), assignment)


class SolveFailure(Exception):
    def __init__(self, point: Point, result: JetSolveResult):
        self.point = point
        self.result = result
        super().__init__(
            f"{result.status} at point ({', '.join(str(c) for c in point)}): "
            f"residual floor {result.residual:.3g} {result.detail}"
        )


@dataclass(frozen=True)
class DiscreteSolve:
    """Result of solving on a finite point set: one assembled function per
    unknown, with the jets and bumps that built it."""

    functions: tuple[AssembledFunction, ...]
    jets: dict[Point, Jet]
    bumps: list[BumpFunction]
    level: int

    @property
    def exact(self) -> bool:
        return all(j.exact for j in self.jets.values())


def solve_on_discrete_set(
    op: PdeOperator,
    points: Sequence[Point],
    level: int,
    tol: float = 1e-12,
    shrink: Fraction = Fraction(1, 2),
    seed=None,
    system: ProlongedSystem | None = None,
) -> DiscreteSolve:
    """Solve the prolonged system at each point, take the Taylor
    polynomial of the solved jet, and glue the pieces with disjoint
    bumps.  Raises SolveFailure at the first unsolvable point."""
    pts = [tuple(Fraction(c) for c in p) for p in points]
    sys = system if system is not None and system.level == level else prolong(op, level)
    jets: dict[Point, Jet] = {}
    for a in pts:
        res = solve_jets_triangular(sys, a, seed=seed, tol=tol)
        if not res.solved:
            raise SolveFailure(a, res)
        jets[a] = res.jet
    bumps = make_bumps(pts, op.domain, op.context, shrink)
    polys = {a: taylor_from_jet(op.context, a, jets[a]) for a in pts}
    functions = tuple(
        AssembledFunction(
            op.context,
            tuple((bump, polys[a][unknown]) for bump, a in zip(bumps, pts)),
        )
        for unknown in range(op.k)
    )
    return DiscreteSolve(functions, jets, bumps, level)


# ---------------------------------------------------------------------------
# staged sequences

@dataclass(frozen=True)
class SolutionSequence:
    """The staged sequence: stage nu solves on the points z_0..z_nu at
    prolongation level l_nu."""

    operator: PdeOperator
    points: tuple[Point, ...]
    orders: tuple[int, ...]
    stages: tuple[DiscreteSolve, ...]

    def __post_init__(self):
        if len(self.points) != len(self.orders) or len(self.points) != len(self.stages):
            raise ValueError("points, orders and stages must align")
        if any(b < a for a, b in zip(self.orders, self.orders[1:])):
            raise ValueError("order schedule must be non-decreasing")

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    @property
    def exact(self) -> bool:
        return all(s.exact for s in self.stages)

    def stage_expressions(self, nu: int) -> list[Expr]:
        return [f.expression() for f in self.stages[nu].functions]


class ConstructionError(Exception):
    def __init__(self, stage: int, cause: SolveFailure, partial: SolutionSequence):
        self.stage = stage
        self.cause = cause
        self.partial = partial
        super().__init__(f"stage {stage} failed: {cause}")


def validate_schedule(orders: Sequence[int]):
    orders = list(orders)
    if any(l < 0 for l in orders):
        raise ValueError("levels must be >= 0")
    if any(b < a for a, b in zip(orders, orders[1:])):
        raise ValueError("order schedule must be non-decreasing")
    return orders


def construct_sequence(
    op: PdeOperator,
    points: Sequence[Point],
    orders: Sequence[int],
    tol: float = 1e-12,
    shrink: Fraction = Fraction(1, 2),
    seed=None,
) -> SolutionSequence:
    """Build the staged sequence: stage nu uses points z_0..z_nu at level
    l_nu.  A failing stage raises ConstructionError carrying the partial
    sequence built so far."""
    pts = [tuple(Fraction(c) for c in p) for p in points]
    orders = validate_schedule(orders)
    if len(pts) != len(orders):
        raise ValueError("need one level per stage")
    top = prolong(op, orders[-1]) if orders else None
    stages: list[DiscreteSolve] = []
    for nu, level in enumerate(orders):
        try:
            stage = solve_on_discrete_set(
                op, pts[: nu + 1], level, tol=tol, shrink=shrink, seed=seed,
                system=top.restrict(level) if top is not None else None,
            )
        except SolveFailure as exc:
            partial = SolutionSequence(
                op, tuple(pts[:nu]), tuple(orders[:nu]), tuple(stages)
            )
            raise ConstructionError(nu, exc, partial) from exc
        stages.append(stage)
    return SolutionSequence(op, tuple(pts), tuple(orders), tuple(stages))


# ---------------------------------------------------------------------------
# bracket interpolation (convex combination of a sub/super solution pair)

@dataclass(frozen=True)
class BracketResult:
    function: AssembledFunction
    lambdas: dict[Point, float]
    residuals: dict[Point, float]


def bracket_interpolate(
    op: PdeOperator,
    f: Expr,
    u_minus: Expr,
    u_plus: Expr,
    points: Sequence[Point],
    ball: tuple[Point, Fraction] | None = None,
    tol: float = 1e-12,
    shrink: Fraction = Fraction(1, 2),
) -> BracketResult:
    """Interpolate between a sub- and a supersolution so the equation
    holds at each given point, glued by a partition of unity that is 1
    near each point and sums to 1 everywhere.

    Requires T u_minus <= f <= T u_plus at every point (checked; violation
    is rejected naming the point).
    """
    if op.k != 1 or op.r != 1:
        raise ValueError("bracket interpolation applies to scalar operators")
    pts = [tuple(Fraction(c) for c in p) for p in points]
    if ball is not None:
        center, delta = ball
        for a in pts:
            d2 = sum((ca - cc) ** 2 for ca, cc in zip(a, center))
            if d2 >= Fraction(delta) ** 2:
                raise ValueError(f"point {a} outside the prescribed ball")

    def action(u: Expr, a: Point) -> float:
        return float(apply_operator(op, u, a)[0])

    f_at = {}
    assignment_of = lambda a: {
        v: x for v, x in zip(op.context.space_vars(), a)
    }
    for a in pts:
        f_at[a] = evaluate_float(f, assignment_of(a))
        lo = action(u_minus, a) - f_at[a]
        hi = action(u_plus, a) - f_at[a]
        where = "(" + ", ".join(str(c) for c in a) + ")"
        if lo > 0:
            raise ValueError(
                f"bracket violated at {where}: T u_minus exceeds f ({lo:+.3g})"
            )
        if hi < 0:
            raise ValueError(
                f"bracket violated at {where}: T u_plus below f ({hi:+.3g})"
            )

    lambdas: dict[Point, float] = {}
    residuals: dict[Point, float] = {}
    u_minus = simplify(u_minus)
    u_plus = simplify(u_plus)
    for a in pts:
        lo_l, hi_l = 0.0, 1.0

        def h(lam: float) -> float:
            u_lam = simplify(
                ssum([sprod([Const(Fraction(1 - lam)), u_minus]),
                      sprod([Const(Fraction(lam)), u_plus])])
            )
            return action(u_lam, a) - f_at[a]

        h_lo, h_hi = h(lo_l), h(hi_l)
        lam = 0.5
        for _ in range(200):
            lam = 0.5 * (lo_l + hi_l)
            val = h(lam)
            if abs(val) <= tol:
                break
            if (val < 0) == (h_lo < 0):
                lo_l, h_lo = lam, val
            else:
                hi_l, h_hi = lam, val
        lambdas[a] = lam
        residuals[a] = abs(h(lam))
        if residuals[a] > tol:
            raise ValueError(
                f"bisection stalled at {a}: residual {residuals[a]:.3g}"
            )

    bumps = make_bumps(pts, op.domain, op.context, shrink)
    u_of = {}
    for a in pts:
        lam = Fraction(lambdas[a])
        u_of[a] = simplify(
            ssum([sprod([Const(1 - lam), u_minus]), sprod([Const(lam), u_plus])])
        )
    pieces = tuple((bump, u_of[a]) for bump, a in zip(bumps, pts))
    # background: (1 - sum of bumps) * average of the interpolants,
    # so the partition weights are each 1 near their point and sum to 1
    avg = sprod([Const(Fraction(1, len(pts))), ssum(list(u_of.values()))])
    one_minus = ssum([ONE] + [sprod([MINUS_ONE, b.node()]) for b in bumps])
    background = sprod([one_minus, avg])
    function = AssembledFunction(op.context, pieces, background=background)
    return BracketResult(function, lambdas, residuals)
