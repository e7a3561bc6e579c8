"""Expression trees over space variables and jet coordinates.

Constants are exact rationals.  An expression with no transcendental node
and only integer exponents is "rational-closed" and evaluates exactly.
All nodes are immutable; operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

from .multiindex import MultiIndex, zero_index

Number = Union[int, Fraction, float]


class EvaluationError(Exception):
    """Division by zero, log of a non-positive number, and similar."""


class ExactnessUnavailable(Exception):
    """Raised by exact evaluation when a non-rational subtree is reached."""


# ---------------------------------------------------------------------------
# variables

@dataclass(frozen=True)
class SpaceVar:
    axis: int  # 1-based
    name: str = field(compare=False)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class JetVar:
    """Jet coordinate: value of D^p applied to one unknown."""

    unknown: int  # 1-based
    index: MultiIndex
    name: str = field(compare=False)

    @property
    def order(self) -> int:
        return self.index.order

    def __str__(self):
        return self.name


Variable = Union[SpaceVar, JetVar]


# ---------------------------------------------------------------------------
# nodes

class Expr:
    """Base class; construct through the smart constructors below."""

    __slots__ = ()

    def __add__(self, other):
        return ssum([self, as_expr(other)])

    __radd__ = __add__

    def __sub__(self, other):
        return ssum([self, sprod([MINUS_ONE, as_expr(other)])])

    def __rsub__(self, other):
        return ssum([as_expr(other), sprod([MINUS_ONE, self])])

    def __mul__(self, other):
        return sprod([self, as_expr(other)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        return squot(self, as_expr(other))

    def __rtruediv__(self, other):
        return squot(as_expr(other), self)

    def __pow__(self, exponent):
        return spow(self, Fraction(exponent))

    def __neg__(self):
        return sprod([MINUS_ONE, self])

    def __str__(self):
        from .printer import to_text

        return to_text(self)

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True, repr=False)
class Var(Expr):
    var: Variable


@dataclass(frozen=True, repr=False)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True, repr=False)
class Prod(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True, repr=False)
class Quot(Expr):
    numer: Expr
    denom: Expr


FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True, repr=False)
class Fn(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


@dataclass(frozen=True, repr=False)
class Bump(Expr):
    """Smooth bump (or one of its partial derivatives) centered at a point.

    Identically 1 on the closed ball of radius r_in around the center,
    identically 0 outside the open ball of radius r_out, built from the
    standard exp(-1/t) transition in the squared radius.  `deriv` is the
    multi-index of the partial derivative taken; plateau and exterior
    evaluations of any derivative are exact rationals (1 or 0).
    """

    center: tuple[Fraction, ...]
    r_in: Fraction
    r_out: Fraction
    space_vars: tuple[SpaceVar, ...]
    deriv: MultiIndex

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise ValueError("need 0 < r_in < r_out")
        if len(self.center) != len(self.space_vars):
            raise ValueError("center/space variable dimension mismatch")


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    if isinstance(x, float):
        return Const(Fraction(x))
    raise TypeError(f"cannot convert {x!r} to Expr")


def const(x) -> Const:
    return Const(Fraction(x))


def var(v: Variable) -> Var:
    return Var(v)


# ---------------------------------------------------------------------------
# canonical ordering

_RANK = {Const: 0, Var: 1, Pow: 2, Prod: 3, Quot: 4, Fn: 5, Sum: 6, Bump: 7}


def sort_key(e: Expr):
    """Total order on expressions; used for canonical child order."""
    if isinstance(e, Const):
        return (0, e.value)
    if isinstance(e, Var):
        v = e.var
        if isinstance(v, SpaceVar):
            return (1, 0, v.axis, ())
        return (1, 1, v.unknown, v.index.entries)
    if isinstance(e, Pow):
        return (2, sort_key(e.base), e.exponent)
    if isinstance(e, Prod):
        return (3, tuple(sort_key(f) for f in e.factors))
    if isinstance(e, Quot):
        return (4, sort_key(e.numer), sort_key(e.denom))
    if isinstance(e, Fn):
        return (5, e.name, sort_key(e.arg))
    if isinstance(e, Sum):
        return (6, tuple(sort_key(t) for t in e.terms))
    if isinstance(e, Bump):
        return (7, e.center, e.r_in, e.r_out, e.deriv.entries)
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# smart constructors (each returns a canonical node)

def ssum(terms) -> Expr:
    """Canonical sum: flattened, constants folded, like terms collected."""
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    # split each term into rational coefficient * rest
    groups: dict[tuple, tuple[Expr, Fraction]] = {}
    constant = Fraction(0)
    for t in flat:
        coeff, rest = _split_coeff(t)
        if rest is None:
            constant += coeff
            continue
        key = sort_key(rest)
        if key in groups:
            prev, c = groups[key]
            groups[key] = (prev, c + coeff)
        else:
            groups[key] = (rest, coeff)
    out: list[Expr] = []
    for key in sorted(groups):
        rest, c = groups[key]
        if c == 0:
            continue
        if c == 1:
            out.append(rest)
        else:
            out.append(_attach_coeff(c, rest))
    if constant != 0:
        out.insert(0, Const(constant))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Sum(tuple(out))


def _split_coeff(t: Expr) -> tuple[Fraction, Expr | None]:
    if isinstance(t, Const):
        return t.value, None
    if isinstance(t, Prod):
        consts = [f for f in t.factors if isinstance(f, Const)]
        rest = [f for f in t.factors if not isinstance(f, Const)]
        c = Fraction(1)
        for k in consts:
            c *= k.value
        if not rest:
            return c, None
        if len(rest) == 1:
            return c, rest[0]
        return c, Prod(tuple(rest))
    return Fraction(1), t


def _attach_coeff(c: Fraction, rest: Expr) -> Expr:
    if isinstance(rest, Prod):
        return Prod((Const(c),) + rest.factors)
    return Prod((Const(c), rest))


def sprod(factors) -> Expr:
    """Canonical product: flattened, constants folded, equal bases merged."""
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Prod):
            flat.extend(f.factors)
        else:
            flat.append(f)
    constant = Fraction(1)
    groups: dict[tuple, tuple[Expr, Fraction]] = {}
    for f in flat:
        if isinstance(f, Const):
            constant *= f.value
            continue
        if isinstance(f, Pow):
            base, exp = f.base, f.exponent
        else:
            base, exp = f, Fraction(1)
        key = sort_key(base)
        if key in groups:
            b, e = groups[key]
            groups[key] = (b, e + exp)
        else:
            groups[key] = (base, exp)
    if constant == 0:
        return ZERO
    out: list[Expr] = []
    for key in sorted(groups):
        base, exp = groups[key]
        p = spow(base, exp)
        if isinstance(p, Const):
            constant *= p.value
        else:
            out.append(p)
    if not out:
        return Const(constant)
    if constant != 1:
        out.insert(0, Const(constant))
    if len(out) == 1:
        return out[0]
    return Prod(tuple(out))


def spow(base: Expr, exponent) -> Expr:
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and exponent.denominator == 1:
        if base.value == 0 and exponent < 0:
            raise EvaluationError("0 raised to a negative power")
        return Const(base.value ** exponent.numerator)
    if isinstance(base, Pow):
        return spow(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def squot(numer: Expr, denom: Expr) -> Expr:
    if isinstance(denom, Const):
        if denom.value == 0:
            raise EvaluationError("literal division by zero")
        return sprod([Const(1 / denom.value), numer])
    if isinstance(numer, Const) and numer.value == 0:
        return ZERO
    if numer == denom:
        return ONE
    return Quot(numer, denom)


_FN_AT_ZERO = {"sin": Fraction(0), "exp": Fraction(1), "sqrt": Fraction(0)}


def sfn(name: str, arg: Expr) -> Expr:
    if isinstance(arg, Const):
        v = arg.value
        if v == 0 and name in _FN_AT_ZERO:
            return Const(_FN_AT_ZERO[name])
        if v == 0 and name == "cos":
            return ONE
        if v == 1 and name == "log":
            return ZERO
        if v == 1 and name == "sqrt":
            return ONE
    return Fn(name, arg)


def simplify(e: Expr) -> Expr:
    """Canonical form: constant folding, identities, flattening, sorted
    children.  Evaluation-equivalent to the input on all valid assignments."""
    if isinstance(e, (Const, Var, Bump)):
        return e
    if isinstance(e, Sum):
        return ssum([simplify(t) for t in e.terms])
    if isinstance(e, Prod):
        return sprod([simplify(f) for f in e.factors])
    if isinstance(e, Pow):
        return spow(simplify(e.base), e.exponent)
    if isinstance(e, Quot):
        return squot(simplify(e.numer), simplify(e.denom))
    if isinstance(e, Fn):
        return sfn(e.name, simplify(e.arg))
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# structure queries

def free_variables(e: Expr) -> set[Variable]:
    out: set[Variable] = set()
    _collect_vars(e, out)
    return out


def _collect_vars(e: Expr, out: set):
    if isinstance(e, Var):
        out.add(e.var)
    elif isinstance(e, Sum):
        for t in e.terms:
            _collect_vars(t, out)
    elif isinstance(e, Prod):
        for f in e.factors:
            _collect_vars(f, out)
    elif isinstance(e, Pow):
        _collect_vars(e.base, out)
    elif isinstance(e, Quot):
        _collect_vars(e.numer, out)
        _collect_vars(e.denom, out)
    elif isinstance(e, Fn):
        _collect_vars(e.arg, out)
    elif isinstance(e, Bump):
        out.update(e.space_vars)


def jet_variables(e: Expr) -> set[JetVar]:
    return {v for v in free_variables(e) if isinstance(v, JetVar)}


def is_rational_closed(e: Expr) -> bool:
    """True iff e contains no transcendental node and only integer exponents."""
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, Sum):
        return all(is_rational_closed(t) for t in e.terms)
    if isinstance(e, Prod):
        return all(is_rational_closed(f) for f in e.factors)
    if isinstance(e, Pow):
        return e.exponent.denominator == 1 and is_rational_closed(e.base)
    if isinstance(e, Quot):
        return is_rational_closed(e.numer) and is_rational_closed(e.denom)
    if isinstance(e, (Fn, Bump)):
        return False
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e: Expr, v: Variable) -> Expr:
    """Partial derivative treating all other variables as independent."""
    return simplify(_diff(e, v))


def _diff(e: Expr, v: Variable) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.var == v else ZERO
    if isinstance(e, Sum):
        return ssum([_diff(t, v) for t in e.terms])
    if isinstance(e, Prod):
        terms = []
        for i, f in enumerate(e.factors):
            df = _diff(f, v)
            if df == ZERO:
                continue
            rest = list(e.factors[:i]) + list(e.factors[i + 1 :])
            terms.append(sprod([df] + rest))
        return ssum(terms)
    if isinstance(e, Pow):
        db = _diff(e.base, v)
        if db == ZERO:
            return ZERO
        return sprod([Const(e.exponent), spow(e.base, e.exponent - 1), db])
    if isinstance(e, Quot):
        dn = _diff(e.numer, v)
        dd = _diff(e.denom, v)
        num = ssum([sprod([dn, e.denom]), sprod([MINUS_ONE, e.numer, dd])])
        return squot(num, spow(e.denom, 2))
    if isinstance(e, Fn):
        da = _diff(e.arg, v)
        if da == ZERO:
            return ZERO
        if e.name == "sin":
            outer = sfn("cos", e.arg)
        elif e.name == "cos":
            outer = sprod([MINUS_ONE, sfn("sin", e.arg)])
        elif e.name == "exp":
            outer = e
        elif e.name == "log":
            outer = squot(ONE, e.arg)
        elif e.name == "sqrt":
            outer = squot(ONE, sprod([Const(2), e]))
        else:  # pragma: no cover
            raise TypeError(e.name)
        return sprod([outer, da])
    if isinstance(e, Bump):
        if isinstance(v, SpaceVar) and v in e.space_vars:
            axis = e.space_vars.index(v) + 1
            return Bump(e.center, e.r_in, e.r_out, e.space_vars, e.deriv.plus_axis(axis))
        return ZERO
    raise TypeError(type(e))


def differentiate_multi(e: Expr, space_vars, p: MultiIndex) -> Expr:
    """D^p along the given ordered space variables."""
    out = e
    for axis, count in enumerate(p.entries, start=1):
        for _ in range(count):
            out = differentiate(out, space_vars[axis - 1])
    return out


# ---------------------------------------------------------------------------
# substitution

def substitute(e: Expr, mapping: Mapping[Variable, Expr]) -> Expr:
    """Simultaneous substitution of variables by expressions, then simplify."""
    return simplify(_subst(e, dict(mapping)))


def _subst(e: Expr, mapping) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.var, e)
    if isinstance(e, Sum):
        return Sum(tuple(_subst(t, mapping) for t in e.terms))
    if isinstance(e, Prod):
        return Prod(tuple(_subst(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_subst(e.base, mapping), e.exponent)
    if isinstance(e, Quot):
        return Quot(_subst(e.numer, mapping), _subst(e.denom, mapping))
    if isinstance(e, Fn):
        return Fn(e.name, _subst(e.arg, mapping))
    if isinstance(e, Bump):
        for sv in e.space_vars:
            if sv in mapping:
                raise ValueError("cannot substitute a bump's space variable")
        return e
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# evaluation

def evaluate_float(e: Expr, assignment: Mapping[Variable, Number]) -> float:
    """IEEE double evaluation; raises EvaluationError instead of NaN."""
    return float(_eval(e, assignment, exact=False))


def evaluate_exact(e: Expr, assignment: Mapping[Variable, Number]) -> Fraction:
    """Exact rational evaluation.

    Requires a rational-closed expression, except that bump nodes evaluate
    exactly at points on their plateau or outside their support; elsewhere
    ExactnessUnavailable is raised.
    """
    out = _eval(e, assignment, exact=True)
    return Fraction(out)


def _eval(e: Expr, assignment, exact: bool):
    if isinstance(e, Const):
        return e.value if exact else float(e.value)
    if isinstance(e, Var):
        try:
            v = assignment[e.var]
        except KeyError:
            raise EvaluationError(f"no value assigned to {e.var}") from None
        return Fraction(v) if exact else float(v)
    if isinstance(e, Sum):
        return sum(_eval(t, assignment, exact) for t in e.terms)
    if isinstance(e, Prod):
        out = Fraction(1) if exact else 1.0
        for f in e.factors:
            out *= _eval(f, assignment, exact)
        return out
    if isinstance(e, Pow):
        b = _eval(e.base, assignment, exact)
        if e.exponent.denominator == 1:
            k = e.exponent.numerator
            if b == 0 and k < 0:
                raise EvaluationError("zero raised to a negative power")
            return b ** k
        if exact:
            raise ExactnessUnavailable("non-integer exponent")
        if b < 0:
            raise EvaluationError("negative base with fractional exponent")
        return float(b) ** float(e.exponent)
    if isinstance(e, Quot):
        d = _eval(e.denom, assignment, exact)
        if d == 0:
            raise EvaluationError("division by zero")
        return _eval(e.numer, assignment, exact) / d
    if isinstance(e, Fn):
        if exact:
            raise ExactnessUnavailable(f"function {e.name}")
        a = _eval(e.arg, assignment, exact)
        if e.name == "log":
            if a <= 0:
                raise EvaluationError("log of a non-positive number")
            return math.log(a)
        if e.name == "sqrt":
            if a < 0:
                raise EvaluationError("sqrt of a negative number")
            return math.sqrt(a)
        return getattr(math, e.name)(a)
    if isinstance(e, Bump):
        return _eval_bump(e, assignment, exact)
    raise TypeError(type(e))


def _bump_region(e: Bump, point: tuple[Fraction, ...]) -> str:
    """'plateau', 'outside' or 'transition', decided exactly for rationals."""
    t = sum((x - c) ** 2 for x, c in zip(point, e.center))
    if t <= e.r_in ** 2:
        return "plateau"
    if t >= e.r_out ** 2:
        return "outside"
    return "transition"


def _eval_bump(e: Bump, assignment, exact: bool):
    try:
        point = tuple(Fraction(assignment[v]) for v in e.space_vars)
    except KeyError as exc:
        raise EvaluationError(f"no value assigned to {exc.args[0]}") from None
    except (ValueError, OverflowError):
        # non-rational coordinates: only the float transition path applies
        if exact:
            raise ExactnessUnavailable("bump at a non-rational point") from None
        point = None
    if point is not None:
        region = _bump_region(e, point)
        if region == "plateau":
            v = Fraction(1) if e.deriv.order == 0 else Fraction(0)
            return v if exact else float(v)
        if region == "outside":
            return Fraction(0) if exact else 0.0
        if exact:
            raise ExactnessUnavailable("bump evaluated in its transition region")
    expr = _bump_transition_derivative(e)
    try:
        return _eval(expr, assignment, exact=False)
    except OverflowError:
        # exp overflow at the edge of the annulus: the profile saturates
        return 0.0


_TRANSITION_CACHE: dict[Bump, Expr] = {}


def _bump_transition_derivative(e: Bump) -> Expr:
    """Closed form of D^deriv of the bump, valid on the open transition
    annulus: phi = 1 / (1 + exp(1/(b - t) - 1/(t - c))) with t = |x - a|^2."""
    key = Bump(e.center, e.r_in, e.r_out, e.space_vars, e.deriv)
    if key in _TRANSITION_CACHE:
        return _TRANSITION_CACHE[key]
    base_key = Bump(e.center, e.r_in, e.r_out, e.space_vars, zero_index(len(e.center)))
    if base_key not in _TRANSITION_CACHE:
        t = ssum(
            [
                spow(ssum([Var(v), Const(-c)]), 2)
                for v, c in zip(e.space_vars, e.center)
            ]
        )
        b = Const(e.r_out ** 2)
        c0 = Const(e.r_in ** 2)
        h = ssum(
            [
                squot(ONE, ssum([b, sprod([MINUS_ONE, t])])),
                sprod([MINUS_ONE, squot(ONE, ssum([t, sprod([MINUS_ONE, c0])]))]),
            ]
        )
        _TRANSITION_CACHE[base_key] = squot(ONE, ssum([ONE, sfn("exp", h)]))
    expr = _TRANSITION_CACHE[base_key]
    built = zero_index(len(e.center))
    while built != e.deriv:
        axis = next(
            i + 1
            for i in range(len(e.center))
            if built.entries[i] < e.deriv.entries[i]
        )
        next_key = Bump(e.center, e.r_in, e.r_out, e.space_vars, built.plus_axis(axis))
        if next_key in _TRANSITION_CACHE:
            expr = _TRANSITION_CACHE[next_key]
        else:
            expr = differentiate(expr, e.space_vars[axis - 1])
            _TRANSITION_CACHE[next_key] = expr
        built = built.plus_axis(axis)
    return expr
