"""Range-condition certification: exact rank certificates for linear
operators and the triangular level-by-level jet solver for nonlinear ones.

The key algorithmic fact used throughout: every prolongation level is
affine in the jet coordinates it newly introduces, so solvability in jet
space reduces to one order-m root search plus a chain of linear solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .expr import (
    Const,
    EvaluationError,
    ExactnessUnavailable,
    Expr,
    JetVar,
    Var,
    differentiate,
    evaluate_exact,
    evaluate_float,
    is_rational_closed,
    jet_variables,
    substitute,
    ZERO,
)
from .jets import Jet, PdeOperator, ProlongedSystem, prolong
from .linalg import (
    FLOAT_RANK_TOL,
    exact_least_norm,
    exact_rank,
    float_least_norm,
    float_rank,
    residual_floor,
)
from .multiindex import MultiIndex, jet_count, multi_indices, multi_indices_of_order
from .newton import multistart_newton


class NotLinearError(Exception):
    """The operator is not affine in its jet coordinates."""


def jet_columns(n: int, k: int, order: int) -> list[tuple[int, MultiIndex]]:
    """Column layout of the linear systems: jet coordinates of order <=
    `order`, graded-lex in the multi-index, then by unknown."""
    return [(u, p) for p in multi_indices(n, order) for u in range(1, k + 1)]


@dataclass(frozen=True)
class LinearDecomposition:
    """Affine form of every prolonged equation: offset + sum coeff * jet."""

    system: ProlongedSystem
    offsets: dict[tuple[int, MultiIndex], Expr]
    coefficients: dict[tuple[int, MultiIndex], dict[tuple[int, MultiIndex], Expr]]

    @property
    def columns(self) -> list[tuple[int, MultiIndex]]:
        op = self.system.operator
        return jet_columns(op.n, op.k, self.system.top_order)

    def rows(self) -> list[tuple[int, MultiIndex]]:
        return [(j, p) for j, p, _ in self.system.items()]

    def reassemble(self, row: tuple[int, MultiIndex]) -> Expr:
        op = self.system.operator
        terms = [self.offsets[row]]
        for (u, q), c in self.coefficients[row].items():
            terms.append(c * Var(op.context.jet(u, q)))
        out = ZERO
        for t in terms:
            out = out + t
        return out


def linearize(sys: ProlongedSystem) -> LinearDecomposition | None:
    """Extract the affine structure of the system, or None when some
    equation is nonlinear in a jet coordinate."""
    offsets = {}
    coefficients = {}
    for j, p, e in sys.items():
        jvars = sorted(
            jet_variables(e), key=lambda v: (v.index.grlex_key(), v.unknown)
        )
        coeffs = {}
        for v in jvars:
            c = differentiate(e, v)
            if jet_variables(c):
                return None
            coeffs[(v.unknown, v.index)] = c
        offsets[(j, p)] = substitute(e, {v: ZERO for v in jvars})
        coefficients[(j, p)] = coeffs
    return LinearDecomposition(sys, offsets, coefficients)


def _eval_entry(e: Expr, assignment, exact: bool):
    if exact:
        return evaluate_exact(e, assignment)
    return evaluate_float(e, assignment)


def assemble_linear_system(dec: LinearDecomposition, x: Sequence):
    """Numeric coefficient matrix P and augmented matrix Q at the point x.

    Returns (P, Q, arithmetic) where the matrices are lists of rows of
    Fractions in exact mode, floats otherwise; Q appends the column of
    negated offsets.
    """
    op = dec.system.operator
    if not op.contains(x):
        raise ValueError(f"point {tuple(x)} outside the domain box")
    assignment = {v: xi for v, xi in zip(op.context.space_vars(), x)}
    exact = all(isinstance(xi, (int, Fraction)) for xi in x) and all(
        is_rational_closed(e)
        for row in dec.rows()
        for e in [dec.offsets[row], *dec.coefficients[row].values()]
    )
    columns = dec.columns
    col_index = {uq: i for i, uq in enumerate(columns)}
    p_rows, q_rows = [], []
    zero = Fraction(0) if exact else 0.0
    for row_key in dec.rows():
        row = [zero] * len(columns)
        for uq, c in dec.coefficients[row_key].items():
            row[col_index[uq]] = _eval_entry(c, assignment, exact)
        offset = _eval_entry(dec.offsets[row_key], assignment, exact)
        p_rows.append(row)
        q_rows.append(row + [-offset])
    return p_rows, q_rows, ("exact" if exact else "float")


@dataclass(frozen=True)
class RankCertificate:
    """Solvability certificate for a linear operator at one point/level.

    holds: rank P = rank Q (the prolonged linear system is consistent).
    strict: additionally full row rank, so the system is solvable for
    every right-hand side (the nondegeneracy the rank discussion of the
    linear case aims at).
    """

    point: tuple
    level: int
    rank_p: int
    rank_q: int
    n_rows: int
    n_cols: int
    holds: bool
    strict: bool
    arithmetic: str
    tolerance: float | None = None

    def __post_init__(self):
        if self.strict and not self.holds:
            raise ValueError("strict certificate must hold")

    @property
    def jet_coordinate_count(self) -> int:
        return self.n_cols

    def to_json(self):
        return {
            "point": [str(c) for c in self.point],
            "level": self.level,
            "rank_p": self.rank_p,
            "rank_q": self.rank_q,
            "rows": self.n_rows,
            "cols": self.n_cols,
            "holds": self.holds,
            "strict": self.strict,
            "arithmetic": self.arithmetic,
            "tolerance": self.tolerance,
        }


def rank_condition(op: PdeOperator, x: Sequence, level: int) -> RankCertificate:
    """Certify rank P^l(x) = rank Q^l(x) by exact elimination when the
    data is rational, float elimination with a disclosed tolerance else."""
    sys = prolong(op, level)
    dec = linearize(sys)
    if dec is None:
        raise NotLinearError("operator is not linear in its jet coordinates")
    p_rows, q_rows, arithmetic = assemble_linear_system(dec, x)
    if arithmetic == "exact":
        rank_p = exact_rank(p_rows)
        rank_q = exact_rank(q_rows)
        tol = None
    else:
        rank_p = float_rank(p_rows)
        rank_q = float_rank(q_rows)
        tol = FLOAT_RANK_TOL
    holds = rank_p == rank_q
    strict = holds and rank_p == len(p_rows)
    return RankCertificate(
        point=tuple(x),
        level=level,
        rank_p=rank_p,
        rank_q=rank_q,
        n_rows=len(p_rows),
        n_cols=len(p_rows[0]) if p_rows else 0,
        holds=holds,
        strict=strict,
        arithmetic=arithmetic,
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# triangular jet solving

@dataclass
class JetSolveResult:
    status: str  # solved | no-solution | solver-failed
    jet: Jet | None
    residual: float
    arithmetic: str
    failed_level: int | None = None
    detail: str = ""

    @property
    def solved(self) -> bool:
        return self.status == "solved"


SeedLike = "Jet | dict[tuple[int, MultiIndex], Fraction | float] | None"


def _seed_values(seed, n) -> dict:
    if seed is None:
        return {}
    if isinstance(seed, Jet):
        return dict(seed.values)
    return {
        (u, MultiIndex(p) if isinstance(p, tuple) else p): v
        for (u, p), v in seed.items()
    }


def solve_jets_triangular(
    sys: ProlongedSystem,
    x: Sequence,
    seed=None,
    tol: float = 1e-12,
) -> JetSolveResult:
    """Solve all prolonged equations at the point x for a dense jet of
    order m + level.

    Level 0 solves the base equations for the jets up to order m: exactly
    by a minimum-norm rational solve when they are affine (seed entries are
    then pinned as hard constraints), by damped multistart Newton from the
    seed otherwise.  Each later level is affine in its newly introduced
    top-order jets and is solved by a minimum-norm linear solve with the
    lower-order jets held fixed; the result is exact whenever level 0 was.
    """
    op = sys.operator
    if not op.contains(x):
        raise ValueError(f"point {tuple(x)} outside the domain box")
    n, k, m = op.n, op.k, op.order
    context = op.context
    space_assignment = {v: xi for v, xi in zip(context.space_vars(), x)}
    point_rational = all(isinstance(xi, (int, Fraction)) for xi in x)
    seed_vals = _seed_values(seed, n)

    known: dict[tuple[int, MultiIndex], Fraction | float] = {}
    exact_so_far = point_rational

    # --- level 0: base equations, jets of order <= m
    base_eqs = [e for j, p, e in sys.items_at_level(0)]
    base_cols = jet_columns(n, k, m)
    base_result = _solve_base_level(
        base_eqs, base_cols, context, space_assignment, point_rational, seed_vals, tol
    )
    if base_result.status != "ok":
        return JetSolveResult(
            status=base_result.status,
            jet=None,
            residual=base_result.residual,
            arithmetic=base_result.arithmetic,
            failed_level=0,
            detail=base_result.detail,
        )
    known.update(base_result.values)
    exact_so_far = exact_so_far and base_result.arithmetic == "exact"

    # --- levels >= 1: affine in the new top-order jets
    for lam in range(1, sys.level + 1):
        top = m + lam
        new_cols = [
            (u, q)
            for q in multi_indices_of_order(n, top)
            for u in range(1, k + 1)
        ]
        eqs = [e for j, p, e in sys.items_at_level(lam)]
        ok, values, arithmetic, floor, detail = _solve_affine_level(
            eqs, new_cols, context, space_assignment, known, exact_so_far, tol
        )
        if not ok:
            return JetSolveResult(
                status="no-solution",
                jet=None,
                residual=floor,
                arithmetic=arithmetic,
                failed_level=lam,
                detail=detail,
            )
        known.update(values)
        exact_so_far = exact_so_far and arithmetic == "exact"

    jet = Jet(n, k, sys.top_order, known)
    residual = _max_residual(sys, context, space_assignment, jet)
    if exact_so_far:
        status = "solved" if residual == 0 else "solver-failed"
    else:
        status = "solved" if residual <= tol else "solver-failed"
    return JetSolveResult(
        status=status,
        jet=jet if status == "solved" else jet,
        residual=float(residual),
        arithmetic="exact" if exact_so_far else "float",
    )


@dataclass
class _BaseResult:
    status: str  # ok | no-solution | solver-failed
    values: dict = field(default_factory=dict)
    residual: float = 0.0
    arithmetic: str = "exact"
    detail: str = ""


def _affine_coefficients(eqs, cols, context):
    """Affine (offset, coefficient) expressions of eqs in the given jet
    columns; None when some equation is not affine in them."""
    offsets, rows = [], []
    col_set = set(cols)
    zero_map = {context.jet(u, q): ZERO for (u, q) in cols}
    for e in eqs:
        coeffs = {}
        for v in jet_variables(e):
            uq = (v.unknown, v.index)
            if uq not in col_set:
                continue
            c = differentiate(e, v)
            if any((w.unknown, w.index) in col_set for w in jet_variables(c)):
                return None
            coeffs[uq] = c
        offsets.append(substitute(e, zero_map))
        rows.append(coeffs)
    return offsets, rows


def _solve_base_level(
    eqs, cols, context, space_assignment, point_rational, seed_vals, tol
) -> _BaseResult:
    affine = _affine_coefficients(eqs, cols, context)
    if affine is not None:
        offsets, rows = affine
        return _solve_affine_base(
            offsets, rows, cols, context, space_assignment, point_rational,
            seed_vals, tol,
        )
    return _solve_newton_base(eqs, cols, context, space_assignment, seed_vals, tol)


def _solve_affine_base(
    offsets, rows, cols, context, space_assignment, point_rational, seed_vals, tol
):
    exprs = list(offsets)
    for r in rows:
        exprs.extend(r.values())
    exact = point_rational and all(is_rational_closed(e) for e in exprs)
    exact = exact and all(
        isinstance(v, (int, Fraction)) for v in seed_vals.values()
    )
    col_index = {uq: i for i, uq in enumerate(cols)}
    pinned = {uq: seed_vals[uq] for uq in cols if uq in seed_vals}
    free_cols = [uq for uq in cols if uq not in pinned]
    free_index = {uq: i for i, uq in enumerate(free_cols)}

    def build(exact_mode):
        zero = Fraction(0) if exact_mode else 0.0
        a, b = [], []
        for offset, coeffs in zip(offsets, rows):
            row = [zero] * len(free_cols)
            rhs = -_eval_entry(offset, space_assignment, exact_mode)
            for uq, c in coeffs.items():
                val = _eval_entry(c, space_assignment, exact_mode)
                if uq in pinned:
                    pv = pinned[uq]
                    rhs -= val * (Fraction(pv) if exact_mode else float(pv))
                else:
                    row[free_index[uq]] = val
            a.append(row)
            b.append(rhs)
        return a, b

    if exact:
        a, b = build(True)
        solution = exact_least_norm(a, b)
        if solution is None:
            af, bf = build(False)
            return _BaseResult(
                "no-solution",
                residual=residual_floor(af, bf),
                arithmetic="exact",
                detail="inconsistent affine system at level 0",
            )
        values = {uq: Fraction(pinned[uq]) for uq in pinned}
        values.update({uq: solution[free_index[uq]] for uq in free_cols})
        return _BaseResult("ok", values, 0.0, "exact")
    a, b = build(False)
    floor = residual_floor(a, b)
    if floor > max(tol, 1e-9):
        return _BaseResult(
            "no-solution", residual=floor, arithmetic="float",
            detail="inconsistent affine system at level 0",
        )
    xsol = float_least_norm(a, b)
    values = {uq: float(pinned[uq]) for uq in pinned}
    values.update({uq: float(xsol[free_index[uq]]) for uq in free_cols})
    return _BaseResult("ok", values, floor, "float")


def _solve_newton_base(eqs, cols, context, space_assignment, seed_vals, tol):
    present: list[tuple[int, MultiIndex]] = []
    seen = set()
    for e in eqs:
        for v in jet_variables(e):
            uq = (v.unknown, v.index)
            if uq not in seen and uq in set(cols):
                seen.add(uq)
                present.append(uq)
    present.sort(key=lambda uq: (uq[1].grlex_key(), uq[0]))
    index = {uq: i for i, uq in enumerate(present)}
    jvars = [context.jet(u, q) for u, q in present]
    space_f = {v: float(val) for v, val in space_assignment.items()}
    partials = [[differentiate(e, v) for v in jvars] for e in eqs]

    def assignment(vec):
        a = dict(space_f)
        a.update({v: float(val) for v, val in zip(jvars, vec)})
        return a

    def fun(vec):
        a = assignment(vec)
        return np.array([evaluate_float(e, a) for e in eqs])

    def jac(vec):
        a = assignment(vec)
        return np.array(
            [[evaluate_float(p, a) for p in row] for row in partials]
        )

    seeds = []
    if seed_vals:
        seeds.append([float(seed_vals.get(uq, 0.0)) for uq in present])
    best, results = multistart_newton(fun, jac, len(present), seeds, tol=tol)
    if best is None:
        stationary = [r for r in results if r.stationary]
        if stationary:
            floor = min(r.residual for r in stationary)
            return _BaseResult(
                "no-solution", residual=floor, arithmetic="float",
                detail="all Newton starts reached a stationary residual floor",
            )
        floor = min(r.residual for r in results)
        return _BaseResult(
            "solver-failed", residual=floor, arithmetic="float",
            detail="Newton did not converge from any start",
        )
    values = {uq: float(seed_vals.get(uq, 0.0)) for uq in cols}
    values.update({uq: float(best.x[i]) for uq, i in index.items()})
    return _BaseResult("ok", values, best.residual, "float")


def _solve_affine_level(eqs, new_cols, context, space_assignment, known, exact, tol):
    """Solve the equations of one prolongation level for the new top-order
    jets, lower-order jets fixed at their known values."""
    known_exprs = {
        context.jet(u, q): Const(Fraction(v)) for (u, q), v in known.items()
    }
    exact = exact and all(
        isinstance(v, (int, Fraction)) for v in known.values()
    )
    new_set = set(new_cols)
    col_index = {uq: i for i, uq in enumerate(new_cols)}

    def eval_mixed(e, exact_mode):
        a = dict(space_assignment)
        if not exact_mode:
            a = {v: float(val) for v, val in a.items()}
        a.update(
            {
                v: (c.value if exact_mode else float(c.value))
                for v, c in known_exprs.items()
            }
        )
        for u, q in new_cols:
            a[context.jet(u, q)] = Fraction(0) if exact_mode else 0.0
        if exact_mode:
            return evaluate_exact(e, a)
        return evaluate_float(e, a)

    exact = exact and all(is_rational_closed(e) for e in eqs)

    def build(exact_mode):
        zero = Fraction(0) if exact_mode else 0.0
        a, b = [], []
        for e in eqs:
            row = [zero] * len(new_cols)
            for v in jet_variables(e):
                uq = (v.unknown, v.index)
                if uq in new_set:
                    c = differentiate(e, v)
                    # quasilinearity: the top-order coefficient involves
                    # only lower-order jets
                    row[col_index[uq]] = eval_mixed(c, exact_mode)
            b.append(-eval_mixed(e, exact_mode))
            a.append(row)
        return a, b

    if exact:
        a, b = build(True)
        solution = exact_least_norm(a, b)
        if solution is None:
            af, bf = build(False)
            return False, {}, "exact", residual_floor(af, bf), "inconsistent level"
        values = {uq: solution[i] for uq, i in col_index.items()}
        return True, values, "exact", 0.0, ""
    a, b = build(False)
    floor = residual_floor(a, b)
    if floor > max(tol, 1e-9):
        return False, {}, "float", floor, "inconsistent level"
    xsol = float_least_norm(a, b)
    values = {uq: float(xsol[i]) for uq, i in col_index.items()}
    return True, values, "float", floor, ""


def _max_residual(sys: ProlongedSystem, context, space_assignment, jet: Jet):
    """Largest |F_{j,p}| at the solved jet; exact zero stays exact."""
    assignment = dict(space_assignment)
    assignment.update(jet.assignment(context))
    exact = jet.exact and all(
        isinstance(v, (int, Fraction)) for v in space_assignment.values()
    )
    worst = Fraction(0) if exact else 0.0
    for j, p, e in sys.items():
        if exact and is_rational_closed(e):
            val = abs(evaluate_exact(e, assignment))
        else:
            fa = {v: float(val) for v, val in assignment.items()}
            val = abs(evaluate_float(e, fa))
            exact = False
            worst = float(worst)
        worst = max(worst, val)
    return worst


# ---------------------------------------------------------------------------
# aggregated range reports

@dataclass
class RangeEntry:
    point: tuple
    level: int
    outcome: str  # solved | rank-certified | no-solution | solver-failed
    certificate: RankCertificate | None = None
    jet: Jet | None = None
    residual: float = 0.0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome in ("solved", "rank-certified")


@dataclass
class RangeReport:
    entries: list[RangeEntry]
    l_max: int
    tolerance: float

    @property
    def all_ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def to_json(self):
        points: dict[str, dict] = {}
        for e in self.entries:
            key = "(" + ", ".join(str(c) for c in e.point) + ")"
            level_map = points.setdefault(key, {})
            rec: dict = {"outcome": e.outcome}
            if e.certificate is not None:
                rec["certificate"] = e.certificate.to_json()
            if e.jet is not None:
                rec["jet"] = jet_to_json(e.jet)
            if e.outcome in ("no-solution", "solver-failed"):
                rec["residual_floor"] = e.residual
            if e.detail:
                rec["detail"] = e.detail
            level_map[str(e.level)] = rec
        return {
            "l_max": self.l_max,
            "tolerance": self.tolerance,
            "all_ok": self.all_ok,
            "points": points,
        }


def jet_to_json(jet: Jet):
    if jet.exact:
        arithmetic = "exact"
        fmt = str
    else:
        arithmetic = "float"
        fmt = float
    return {
        "order": jet.order,
        "arithmetic": arithmetic,
        "values": {
            f"{u};{p}": fmt(v)
            for (u, p), v in sorted(
                jet.values.items(), key=lambda kv: (kv[0][1].grlex_key(), kv[0][0])
            )
        },
    }


def range_condition_check(
    op: PdeOperator,
    points: Sequence[Sequence],
    l_max: int,
    tol: float = 1e-12,
) -> RangeReport:
    """Check solvability (0 in the prolonged range) at every sample point
    and every level l <= l_max; failures become report entries."""
    top = prolong(op, l_max)
    linear = linearize(top) is not None
    entries = []
    for x in points:
        for level in range(l_max + 1):
            sys = top.restrict(level)
            if linear:
                cert = rank_condition(op, x, level)
                if cert.holds:
                    entries.append(
                        RangeEntry(tuple(x), level, "rank-certified", certificate=cert)
                    )
                else:
                    dec = linearize(sys)
                    _p, q_rows, arithmetic = assemble_linear_system(dec, x)
                    a = [row[:-1] for row in q_rows]
                    b = [row[-1] for row in q_rows]
                    entries.append(
                        RangeEntry(
                            tuple(x), level, "no-solution",
                            certificate=cert,
                            residual=residual_floor(a, b),
                            detail="rank deficiency: inconsistent linear system",
                        )
                    )
            else:
                res = solve_jets_triangular(sys, x, tol=tol)
                entries.append(
                    RangeEntry(
                        tuple(x), level, res.status,
                        jet=res.jet if res.solved else None,
                        residual=res.residual,
                        detail=res.detail,
                    )
                )
    return RangeReport(entries, l_max, tol)
