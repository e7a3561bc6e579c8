"""Rational and floating-point linear algebra for the range analysis.

Rational routines use Fraction arithmetic throughout, so every rank and
every solution they report is exact.  Float routines delegate to numpy and
carry an explicit zero tolerance.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

Row = list[Fraction]
FLOAT_RANK_TOL = 1e-9


def exact_rank(rows: list[Row]) -> int:
    """Rank by Gaussian elimination over the rationals."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(n_cols):
        pivot = None
        for r in range(row, n_rows):
            if m[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        pv = m[row][col]
        for r in range(row + 1, n_rows):
            if m[r][col] != 0:
                factor = m[r][col] / pv
                for c in range(col, n_cols):
                    m[r][c] -= factor * m[row][c]
        row += 1
        rank += 1
        if row == n_rows:
            break
    return rank


def float_rank(matrix, tol: float = FLOAT_RANK_TOL) -> int:
    """Rank with singular values below tol * s_max treated as zero."""
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def independent_rows(rows: list[Row]) -> list[int]:
    """Indices of a maximal linearly independent subset of rows, greedily
    in order (deterministic)."""
    out: list[int] = []
    basis: list[Row] = []
    for i, r in enumerate(rows):
        candidate = basis + [list(r)]
        if exact_rank(candidate) == len(candidate):
            out.append(i)
            basis = candidate
    return out


def exact_solve_square(a: list[Row], b: Row) -> Row:
    """Solve a nonsingular square rational system."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix")
        m[col], m[pivot] = m[pivot], m[col]
        pv = m[col][col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col] / pv
                for c in range(col, n + 1):
                    m[r][c] -= factor * m[col][c]
    return [m[i][n] / m[i][i] for i in range(n)]


def exact_least_norm(a: list[Row], b: Row) -> list[Fraction] | None:
    """Minimum-Euclidean-norm exact solution of A x = b, or None when the
    system is inconsistent.

    Computed as x = A_R^T y with (A_R A_R^T) y = b_R over an independent
    row subset R, then verified against every equation.
    """
    if not a:
        return []
    n_cols = len(a[0])
    rows = [[Fraction(v) for v in row] for row in a]
    rhs = [Fraction(v) for v in b]
    keep = independent_rows(rows)
    if not keep:
        # zero matrix: solvable iff b == 0
        if any(v != 0 for v in rhs):
            return None
        return [Fraction(0)] * n_cols
    ar = [rows[i] for i in keep]
    br = [rhs[i] for i in keep]
    gram = [[sum(x * y for x, y in zip(r1, r2)) for r2 in ar] for r1 in ar]
    y = exact_solve_square(gram, br)
    x = [sum(ar[i][c] * y[i] for i in range(len(ar))) for c in range(n_cols)]
    for row, want in zip(rows, rhs):
        if sum(rc * xc for rc, xc in zip(row, x)) != want:
            return None
    return x


def float_least_norm(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution (numpy lstsq)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return np.zeros(a.shape[1] if a.ndim == 2 else 0)
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return x


def residual_floor(a, b) -> float:
    """Norm of the least-squares residual: how close A x = b can get."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return float(np.linalg.norm(b))
    x = float_least_norm(a, b)
    return float(np.linalg.norm(a @ x - b))
