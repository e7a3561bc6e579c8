"""Verification of generalized solutions: the vanishing condition on
sequences of error terms, probes for the associated ideals, and the
classical one-dimensional model sequence.

A sequence (w_nu) satisfies the vanishing condition at a point x for
derivative order l when some witness index nu exists with
D^p w_mu(x) = 0 for every mu >= nu and every |p| <= l.  Checks work on a
finite truncation of the sequence and report the witness found, so a PASS
is exhaustive up to the truncation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .expr import (
    Const,
    Expr,
    ExactnessUnavailable,
    Var,
    differentiate,
    evaluate_exact,
    evaluate_float,
    jet_variables,
    spow,
    sprod,
    ssum,
    substitute,
)
from .jets import PdeOperator
from .multiindex import MultiIndex, multi_indices, zero_index
from .parser import Context

Point = tuple[Fraction, ...]

DEFAULT_FLOAT_TOL = 1e-10


@dataclass(frozen=True)
class FunctionSequence:
    """Finite truncation w_0, ..., w_N of a sequence of smooth functions.

    approximate[mu] marks terms whose coefficients came from float
    computations; their "zeros" are only meaningful to a tolerance even
    though the stored coefficients are rational.
    """

    context: Context
    terms: tuple[Expr, ...]
    provenance: str = ""
    approximate: tuple[bool, ...] | None = None

    def __post_init__(self):
        for w in self.terms:
            if jet_variables(w):
                raise ValueError("sequence terms must not contain jet variables")
        if self.approximate is not None and len(self.approximate) != len(self.terms):
            raise ValueError("need one approximate flag per term")

    @property
    def truncation(self) -> int:
        return len(self.terms) - 1

    def term(self, mu: int) -> Expr:
        return self.terms[mu]

    def is_approximate(self, mu: int) -> bool:
        return bool(self.approximate and self.approximate[mu])


def constant_sequence(context: Context, psi: Expr, truncation: int) -> FunctionSequence:
    return FunctionSequence(context, (psi,) * (truncation + 1), "constant")


# ---------------------------------------------------------------------------
# derivative cache

class _DerivativeTable:
    """All D^p of one expression up to a maximal order, computed once each
    by peeling the first nonzero axis."""

    def __init__(self, context: Context, base: Expr):
        self.context = context
        self.cache: dict[MultiIndex, Expr] = {zero_index(context.n): base}

    def get(self, p: MultiIndex) -> Expr:
        if p not in self.cache:
            axis = p.first_nonzero_axis()
            lower = self.get(p.minus_axis(axis))
            self.cache[p] = differentiate(lower, self.context.space(axis))
        return self.cache[p]


def _eval_term(context: Context, expr: Expr, point: Point, arithmetic: str):
    """Value at a rational point: (value, was_exact)."""
    assignment = {v: x for v, x in zip(context.space_vars(), point)}
    if arithmetic in ("auto", "exact"):
        try:
            return evaluate_exact(expr, assignment), True
        except ExactnessUnavailable:
            if arithmetic == "exact":
                raise
    return evaluate_float(expr, assignment), False


# ---------------------------------------------------------------------------
# vanishing reports

@dataclass(frozen=True)
class Failure:
    term: int
    index: MultiIndex
    value: float


@dataclass(frozen=True)
class VanishingEntry:
    point: Point
    order: int
    witness: int | None
    exact: bool
    failures: tuple[Failure, ...] = ()

    @property
    def holds(self) -> bool:
        return self.witness is not None


@dataclass(frozen=True)
class VanishingReport:
    truncation: int
    arithmetic: str
    tolerance: float
    entries: tuple[VanishingEntry, ...]

    @property
    def holds(self) -> bool:
        return all(e.holds for e in self.entries)

    def entry(self, point: Point, order: int) -> VanishingEntry:
        for e in self.entries:
            if e.point == point and e.order == order:
                return e
        raise KeyError((point, order))

    def to_json(self) -> str:
        data = {
            "truncation": self.truncation,
            "arithmetic": self.arithmetic,
            "tolerance": self.tolerance,
            "entries": [
                {
                    "point": [str(c) for c in e.point],
                    "order": e.order,
                    "witness": e.witness,
                    "exact": e.exact,
                    "verified_range": [
                        e.witness, self.truncation
                    ] if e.witness is not None else None,
                }
                for e in self.entries
            ],
        }
        return json.dumps(data, indent=2, sort_keys=True)


def check_vanishing(
    seq: FunctionSequence,
    points: Sequence[Point],
    orders: int | Sequence[int],
    arithmetic: str = "auto",
    tol: float = DEFAULT_FLOAT_TOL,
) -> VanishingReport:
    """Exhaustive vanishing-condition scan over the truncation.

    For each (point, order) pair the witness is the least nu such that all
    later terms have every derivative up to the order equal to zero at the
    point.  In exact arithmetic "zero" is literal; in float arithmetic it
    means within tol in absolute value.
    """
    if arithmetic not in ("auto", "exact", "float"):
        raise ValueError(f"unknown arithmetic {arithmetic!r}")
    pts = [tuple(Fraction(c) for c in p) for p in points]
    if isinstance(orders, int):
        order_list = [orders] * len(pts)
    else:
        order_list = list(orders)
        if len(order_list) != len(pts):
            raise ValueError("need one order per point")
    ctx = seq.context
    max_order = max(order_list, default=0)
    tables = [_DerivativeTable(ctx, w) for w in seq.terms]
    entries = []
    all_exact = True
    for a, order in zip(pts, order_list):
        witness: int | None = 0
        point_exact = True
        fails: list[Failure] = []
        for mu, table in enumerate(tables):
            ok = True
            term_arith = "float" if seq.is_approximate(mu) else arithmetic
            for p in multi_indices(ctx.n, order):
                value, was_exact = _eval_term(
                    ctx, table.get(p), a, term_arith
                )
                point_exact = point_exact and was_exact
                zero = value == 0 if was_exact else abs(value) <= tol
                if not zero:
                    fails.append(Failure(mu, p, float(value)))
                    ok = False
            if not ok:
                witness = mu + 1 if mu + 1 <= seq.truncation else None
        all_exact = all_exact and point_exact
        entries.append(
            VanishingEntry(a, order, witness, point_exact, tuple(fails))
        )
        _ = max_order
    mode = arithmetic if arithmetic != "auto" else (
        "exact" if all_exact else "float"
    )
    return VanishingReport(seq.truncation, mode, tol, tuple(entries))


# ---------------------------------------------------------------------------
# error sequences of staged solutions

def error_sequence(op: PdeOperator, seq) -> list[FunctionSequence]:
    """One sequence per equation: w_{j,nu} = G_j applied to stage nu.

    Jet variables in G_j are replaced by the matching symbolic derivatives
    of the assembled stage functions.
    """
    ctx = op.context
    space = ctx.space_vars()
    per_equation: list[list[Expr]] = [[] for _ in op.equations]
    for nu in range(seq.stage_count):
        components = seq.stage_expressions(nu)
        tables = [_DerivativeTable(ctx, comp) for comp in components]
        for j, g in enumerate(op.equations):
            mapping = {
                v: tables[v.unknown - 1].get(v.index)
                for v in jet_variables(g)
            }
            per_equation[j].append(substitute(g, mapping))
    flags = tuple(not stage.exact for stage in seq.stages)
    return [
        FunctionSequence(
            ctx, tuple(terms), provenance=f"equation {j + 1}",
            approximate=flags,
        )
        for j, terms in enumerate(per_equation)
    ]


@dataclass(frozen=True)
class VerificationFailure:
    equation: int
    stage: int
    point: Point
    index: MultiIndex
    value: float

    def describe(self) -> str:
        return (
            f"equation {self.equation}, stage {self.stage}, point "
            f"({', '.join(str(c) for c in self.point)}), derivative "
            f"{self.index}: value {self.value:.3g}"
        )


@dataclass(frozen=True)
class VerificationResult:
    passed: bool
    degenerate: bool
    arithmetic: str
    tolerance: float
    reports: tuple[VanishingReport, ...]
    failures: tuple[VerificationFailure, ...]

    def to_json(self) -> str:
        data = {
            "passed": self.passed,
            "degenerate": self.degenerate,
            "arithmetic": self.arithmetic,
            "tolerance": self.tolerance,
            "failures": [f.describe() for f in self.failures],
            "reports": [json.loads(r.to_json()) for r in self.reports],
        }
        return json.dumps(data, indent=2, sort_keys=True)


def verify_solution(
    op: PdeOperator,
    seq,
    arithmetic: str = "auto",
    tol: float = DEFAULT_FLOAT_TOL,
) -> VerificationResult:
    """Check the staged sequence against the vanishing condition.

    PASS means: for every equation, every stage nu, and every point
    z_0..z_nu of that stage, all derivatives of the error term up to the
    stage order vanish at the point.  That gives every (point, order) pair
    a witness no later than the stage that introduced it.  An empty
    sequence passes vacuously and is flagged degenerate.
    """
    if seq.stage_count == 0:
        return VerificationResult(True, True, arithmetic, tol, (), ())
    errors = error_sequence(op, seq)
    reports: list[VanishingReport] = []
    failures: list[VerificationFailure] = []
    modes = set()
    for j, err in enumerate(errors, start=1):
        # exhaustive scan at the finest requirement: every point, top order
        report = check_vanishing(
            err,
            seq.points,
            [max(seq.orders)] * len(seq.points),
            arithmetic=arithmetic,
            tol=tol,
        )
        reports.append(report)
        modes.add(report.arithmetic)
        ctx = op.context
        tables = [_DerivativeTable(ctx, w) for w in err.terms]
        for nu in range(seq.stage_count):
            order = seq.orders[nu]
            stage_arith = "float" if err.is_approximate(nu) else arithmetic
            for point in seq.points[: nu + 1]:
                for p in multi_indices(ctx.n, order):
                    value, was_exact = _eval_term(
                        ctx, tables[nu].get(p), point, stage_arith
                    )
                    zero = value == 0 if was_exact else abs(value) <= tol
                    if not zero:
                        failures.append(
                            VerificationFailure(j, nu, point, p, float(value))
                        )
    mode = "exact" if modes == {"exact"} else "float"
    return VerificationResult(
        not failures, False, mode, tol, tuple(reports), tuple(failures)
    )


# ---------------------------------------------------------------------------
# the classical one-dimensional model sequence

def example_sequence(
    points: Sequence[Fraction],
    orders: Sequence[int],
    context: Context | None = None,
) -> FunctionSequence:
    """w_nu = (x - x_0)^{l_nu} * ... * (x - x_nu)^{l_nu} on the line.

    Every derivative of w_mu up to order l_nu - 1 vanishes at x_j for all
    mu >= max(j, nu), so the vanishing condition holds at each point even
    though no term is eventually identically zero.
    """
    ctx = context if context is not None else Context(("x",))
    if ctx.n != 1:
        raise ValueError("the model sequence is one-dimensional")
    pts = [Fraction(c) for c in points]
    orders = list(orders)
    if len(pts) != len(orders):
        raise ValueError("need one exponent per point")
    if any(b < a for a, b in zip(orders, orders[1:])):
        raise ValueError("exponent schedule must be non-decreasing")
    if any(l < 1 for l in orders):
        raise ValueError("exponents must be >= 1")
    x = Var(ctx.space(1))
    terms = []
    for nu, l in enumerate(orders):
        terms.append(
            sprod(
                [spow(ssum([x, Const(-pts[j])]), l) for j in range(nu + 1)]
            )
        )
    return FunctionSequence(ctx, tuple(terms), provenance="model sequence")


# ---------------------------------------------------------------------------
# ideal probes

@dataclass(frozen=True)
class SingularityComplement:
    """A dense set of regular points; the singularity set is its
    complement in the box."""

    points: tuple[Point, ...]
    box: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        for a in self.points:
            if not all(lo < c < hi for c, (lo, hi) in zip(a, self.box)):
                raise ValueError(f"point {a} outside the box")

    def point_set(self) -> frozenset[Point]:
        return frozenset(self.points)


def diagonal_probe(
    context: Context,
    psi: Expr,
    points: Sequence[Point],
    order: int,
    arithmetic: str = "auto",
    tol: float = DEFAULT_FLOAT_TOL,
) -> tuple[bool, VanishingReport]:
    """Membership probe for a single function: psi belongs to the ideal
    slice iff all its derivatives up to the order vanish at every point,
    i.e. the constant sequence (psi, psi, ...) satisfies the vanishing
    condition there."""
    seq = constant_sequence(context, psi, truncation=1)
    report = check_vanishing(seq, points, order, arithmetic=arithmetic, tol=tol)
    return report.holds, report


@dataclass(frozen=True)
class ClosureReport:
    pairs: tuple[tuple[int, int, int | None], ...]
    closed: bool


def family_closure_check(family: Sequence[SingularityComplement]) -> ClosureReport:
    """Filter-base check on the finite family: for each pair of dense sets
    some member must be contained in their intersection.  (With finite
    stand-ins for the dense sets this is a set-inclusion check.)"""
    sets = [f.point_set() for f in family]
    pairs = []
    closed = True
    for i in range(len(sets)):
        for j in range(i, len(sets)):
            meet = sets[i] & sets[j]
            found = None
            for k, s in enumerate(sets):
                if s <= meet:
                    found = k
                    break
            if found is None:
                closed = False
            pairs.append((i, j, found))
    return ClosureReport(tuple(pairs), closed)
