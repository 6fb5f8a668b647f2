"""Exact row reduction over the rationals.

Matrices are lists of rows of ``Fraction``.  Everything here is small
(desk-scale systems), so plain Gauss-Jordan elimination is enough.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    if not rows:
        return [], []
    ncols = len(rows[0])
    # rows are kept sparse ({column: value}); the systems met here are mostly zeros
    pending = [{c: Fraction(x) for c, x in enumerate(row) if x} for row in rows]
    pending = [r for r in pending if r]
    done: dict[int, dict[int, Fraction]] = {}  # pivot column -> normalized row
    for row in pending:
        for c in sorted(set(row) & set(done)):
            f = row.get(c)
            if f:
                for k, v in done[c].items():
                    w = row.get(k, 0) - f * v
                    if w:
                        row[k] = w
                    else:
                        row.pop(k, None)
        if not row:
            continue
        c = min(row)
        inv = 1 / row[c]
        row = {k: v * inv for k, v in row.items()}
        for other in done.values():
            f = other.get(c)
            if f:
                for k, v in row.items():
                    w = other.get(k, 0) - f * v
                    if w:
                        other[k] = w
                    else:
                        other.pop(k, None)
        done[c] = row
    pivots = sorted(done)
    return [[done[p].get(k, Fraction(0)) for k in range(ncols)] for p in pivots], pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {v : rows . v = 0}, one vector per free column, in column order.

    The basis is the canonical one read off the reduced echelon form, so the
    output depends only on the row space.
    """
    red, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction] | None:
    """One solution of rows . x = rhs, or None when inconsistent."""
    ncols = len(rows[0]) if rows else 0
    aug = [list(r) + [Fraction(b)] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(red, pivots):
        x[p] = row[-1]
    return x


def inverse(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    aug = [list(map(Fraction, r)) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red]


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(len(b[0]))]
            for i in range(len(a))]


class Echelon:
    """Incrementally grown echelon basis of sparse vectors ({key: value}).

    Keys only need a total order; each stored row has its smallest key as
    pivot, so reduction proceeds through increasing keys and terminates."""

    def __init__(self):
        self.rows: dict = {}

    def residual(self, vec: dict) -> dict:
        v = {k: Fraction(x) for k, x in vec.items() if x}
        while True:
            hits = [k for k in v if k in self.rows]
            if not hits:
                return v
            k = min(hits)
            f = v[k]
            for j, x in self.rows[k].items():
                w = v.get(j, 0) - f * x
                if w:
                    v[j] = w
                else:
                    v.pop(j, None)

    def add(self, vec: dict) -> bool:
        """Insert; False if the vector was already in the span."""
        v = self.residual(vec)
        if not v:
            return False
        p = min(v)
        inv = 1 / v[p]
        self.rows[p] = {k: x * inv for k, x in v.items()}
        return True

    def __contains__(self, vec: dict) -> bool:
        return not self.residual(vec)
