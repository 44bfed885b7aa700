"""Exact rational linear algebra: feasibility by phase-one simplex and null spaces."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def feasible_point(rows: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """Return some x >= 0 with rows @ x == rhs, or None if none exists.

    Dense tableau, one artificial variable per row, Bland's rule so the
    method cannot cycle.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    tab = []
    for row, r in zip(rows, rhs):
        row = [Fraction(v) for v in row]
        r = Fraction(r)
        if r < 0:
            row = [-v for v in row]
            r = -r
        art = [Fraction(0)] * m
        tab.append(row + art + [r])
    for i in range(m):
        tab[i][n + i] = Fraction(1)
    basis = [n + i for i in range(m)]
    width = n + m
    # objective: minimise the sum of artificials; reduced costs kept in `cost`
    cost = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(width + 1):
            cost[j] -= tab[i][j]
    for i in range(m):
        cost[n + i] = Fraction(0)

    while True:
        col = next((j for j in range(width) if cost[j] < 0), None)
        if col is None:
            break
        best = None
        for i in range(m):
            a = tab[i][col]
            if a > 0:
                ratio = tab[i][width] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # unbounded cannot happen for phase one
            break
        _pivot(tab, cost, best[1], col)
        basis[best[1]] = col

    if cost[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = tab[i][width]
    return x


def _pivot(tab, cost, r, c):
    piv = tab[r][c]
    row = [v / piv for v in tab[r]]
    tab[r] = row
    for i, other in enumerate(tab):
        if i != r and other[c] != 0:
            f = other[c]
            tab[i] = [a - f * b for a, b in zip(other, row)]
    if cost[c] != 0:
        f = cost[c]
        cost[:] = [a - f * b for a, b in zip(cost, row)]


def nullspace(rows: Sequence[Sequence], n: int) -> list[list[Fraction]]:
    """Basis of {x : rows @ x = 0} from the reduced row echelon form.

    The basis is canonical for the given row set and column order.
    """
    mat = [[Fraction(v) for v in row] for row in rows]
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        piv = mat[r][c]
        mat[r] = [v / piv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -mat[i][f]
        basis.append(v)
    return basis


def rank(rows: Sequence[Sequence], n: int) -> int:
    return n - len(nullspace(rows, n))
