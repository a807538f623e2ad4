"""Exact sparse linear algebra over the rationals.

Rows are dicts ``column -> coefficient``.  Elimination is fraction-free:
rows are scaled to primitive integer vectors and combined by
cross-multiplication, with the content divided out after every step so
entries stay small.  Rationals only appear at the end, when nullspace
vectors are read off.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence


class DimensionCapError(RuntimeError):
    """The linear system is larger than the configured cap."""


def _primitive(row: Mapping[int, object]) -> dict[int, int]:
    """Scale a rational row to a primitive integer row with positive leading entry."""
    items = [(c, Fraction(v)) for c, v in row.items() if v]
    if not items:
        return {}
    den = reduce(lcm, (v.denominator for _, v in items), 1)
    ints = {c: int(v * den) for c, v in items}
    g = reduce(gcd, ints.values())
    if ints[min(ints)] < 0:
        g = -g
    return {c: v // g for c, v in ints.items()}


def _combine(r: dict, rc: int, p: dict, pc: int) -> dict:
    """``pc*r - rc*p``, made primitive again."""
    out = {c: v * pc for c, v in r.items()}
    for c, v in p.items():
        s = out.get(c, 0) - rc * v
        if s:
            out[c] = s
        else:
            out.pop(c, None)
    if not out:
        return out
    g = reduce(gcd, out.values())
    if out[min(out)] < 0:
        g = -g
    return {c: v // g for c, v in out.items()}


class Echelon:
    """Incremental row echelon form with free pivot choice.

    Pivot rows are kept in creation order; every pivot row is free of the
    pivot columns created before it, which is enough to read off the
    nullspace by back substitution.
    """

    def __init__(self, ncols: int, cap: int | None = None):
        self.ncols = ncols
        self.cap = cap
        self.pivot_rows: list[tuple[int, dict]] = []
        self._order: dict[int, int] = {}

    @property
    def rank(self) -> int:
        return len(self.pivot_rows)

    def reduce(self, row: Mapping[int, object]) -> dict:
        r = _primitive(row)
        heap = [self._order[c] for c in r if c in self._order]
        heapq.heapify(heap)
        while heap:
            k = heapq.heappop(heap)
            pc, prow = self.pivot_rows[k]
            rc = r.get(pc)
            if not rc:
                continue
            r = _combine(r, rc, prow, prow[pc])
            for c in prow:
                if c in self._order and self._order[c] > k and c in r:
                    heapq.heappush(heap, self._order[c])
        return r

    def add(self, row: Mapping[int, object]) -> bool:
        """Insert a row; returns True when it raised the rank."""
        r = self.reduce(row)
        if not r:
            return False
        # sparsest choice: smallest magnitude entry, ties by column index
        pc = min(r, key=lambda c: (abs(r[c]), c))
        if r[pc] < 0:
            r = {c: -v for c, v in r.items()}
        self._order[pc] = len(self.pivot_rows)
        self.pivot_rows.append((pc, r))
        if self.cap is not None and len(self.pivot_rows) > self.cap:
            raise DimensionCapError(f"rank exceeds cap {self.cap}")
        return True

    def nullspace(self) -> list[list[Fraction]]:
        """Nullspace basis in reduced row echelon form (column order)."""
        pivots = {pc for pc, _ in self.pivot_rows}
        free = [c for c in range(self.ncols) if c not in pivots]
        forms: dict[int, dict[int, Fraction]] = {f: {f: Fraction(1)} for f in free}
        for pc, prow in reversed(self.pivot_rows):
            acc: dict[int, Fraction] = {}
            pv = prow[pc]
            for c, v in prow.items():
                if c == pc:
                    continue
                for f, w in forms[c].items():
                    s = acc.get(f, 0) - Fraction(v) * w / pv
                    if s:
                        acc[f] = s
                    else:
                        acc.pop(f, None)
            forms[pc] = acc
        vecs = []
        for f in free:
            v = [Fraction(0)] * self.ncols
            for c, form in forms.items():
                w = form.get(f)
                if w:
                    v[c] = w
            vecs.append(v)
        return rref(vecs)


def nullspace(
    rows: Iterable[Mapping[int, object]], ncols: int, cap: int | None = None
) -> list[list[Fraction]]:
    ech = Echelon(ncols, cap)
    for r in rows:
        ech.add(r)
    return ech.nullspace()


def rank(rows: Iterable[Mapping[int, object]], ncols: int) -> int:
    ech = Echelon(ncols)
    for r in rows:
        ech.add(r)
    return ech.rank


def rref(vectors: Sequence[Sequence[object]]) -> list[list[Fraction]]:
    """Reduced row echelon form of dense rows, zero rows dropped."""
    m = [[Fraction(x) for x in v] for v in vectors]
    if not m:
        return []
    n = len(m[0])
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        m[row] = [x / pv for x in m[row]]
        for i in range(len(m)):
            if i != row and m[i][col]:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[row])]
        row += 1
        if row == len(m):
            break
    return m[:row]


def dense_rank(vectors: Sequence[Sequence[object]]) -> int:
    return len(rref(vectors))


def solve_in_span(
    basis: Sequence[Sequence[object]], target: Sequence[object]
) -> list[Fraction] | None:
    """Coefficients c with sum c_i basis_i == target, or None if outside the span."""
    k = len(basis)
    if k == 0:
        return [] if not any(target) else None
    n = len(target)
    # augmented system: columns are basis vectors, last column the target
    rows = [[Fraction(basis[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(n)]
    red = rref(rows)
    coeffs = [Fraction(0)] * k
    for r in red:
        lead = next(i for i, x in enumerate(r) if x)
        if lead == k:
            return None
        coeffs[lead] = r[k]
    return coeffs
