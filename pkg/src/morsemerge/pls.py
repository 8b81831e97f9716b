"""Lower-star discrete gradient construction on cell complexes.

A vector field is a ``frozenset`` of ``(face, coface)`` pairs and a critical
set is a ``frozenset`` of cells; both are compared by plain set equality.
Grayscale data is a mapping from 0-cells to real values.
"""
from __future__ import annotations

import heapq
import threading
from fractions import Fraction
from typing import Mapping, Optional, Protocol, Sequence

from .complex import Cell, DomainError, Subcomplex

VectorField = frozenset
CriticalSet = frozenset


class FieldGenerator(Protocol):
    """A uniformly ``k``-local rule turning (subcomplex, data) into a gradient field."""

    k: int

    def run(self, S: Subcomplex, data: Mapping) -> tuple:
        ...


def uniquify(values: Mapping, order: Optional[Sequence] = None, exact: bool = False) -> dict:
    """Break ties in ``values`` with a small linear ramp over ``order``.

    Inputs whose values are already pairwise distinct are returned unchanged.
    Otherwise every value gets ``eps * index`` added, where ``index`` is the
    position in ``order`` (row-major from the top-left pixel by default) and
    ``eps = gap / (2 * len(values))`` for the minimum nonzero gap, so the
    relative order of originally distinct values is preserved.
    """
    values = dict(values)
    if len(set(values.values())) == len(values):
        return values
    if order is None:
        order = sorted(values, key=lambda c: tuple(reversed(c)))
    distinct = sorted(set(values.values()))
    gaps = [b - a for a, b in zip(distinct, distinct[1:])]
    gap = min(gaps) if gaps else 1
    n = len(values)
    if exact:
        eps = Fraction(gap) / (2 * n)
        out = {c: Fraction(values[c]) + eps * i for i, c in enumerate(order)}
    else:
        eps = gap / (2 * n)
        out = {c: values[c] + eps * i for i, c in enumerate(order)}
        if len(set(out.values())) != n:
            return uniquify(values, order, exact=True)
    return out


def restrict(values: Mapping, S: Subcomplex) -> dict:
    """Grayscale values restricted to the 0-cells of ``S``."""
    return {v: values[v] for v in S.vertex_list}


def g_sequence(c: Cell, values: Mapping, ambient) -> tuple:
    """Vertex values of ``c`` in strictly descending order."""
    return tuple(sorted((values[v] for v in ambient.vertices(c)), reverse=True))


def lower_star(x: Cell, S: Subcomplex, values: Mapping) -> frozenset:
    """Cells of ``S`` whose maximal vertex value is attained at ``x``."""
    amb = S.ambient
    if x not in S.cells or amb.dim(x) != 0:
        raise DomainError(f"{x!r} is not a vertex of the subcomplex")
    gx = values[x]
    out = {x}
    for c in amb.star_cells(x):
        if c in S.cells and all(values[y] < gx for y in amb.vertices(c) if y != x):
            out.add(c)
    return frozenset(out)


def _check_unique(S: Subcomplex, values: Mapping):
    vals = [values[v] for v in S.vertex_list]
    if len(set(vals)) != len(vals):
        raise DomainError("grayscale values are not unique on the subcomplex; uniquify first")


def _process_star(x, star, amb, V, C):
    """Classify one lower star; ``star`` maps each cell other than ``x`` to its sort key."""
    if not star:
        C.append(x)
        return
    # a cell with two vertices is an edge in every complex we build
    edges = [c for c, key in star.items() if len(key[0]) == 2]
    delta = min(edges, key=star.__getitem__)
    V.append((x, delta))
    if len(edges) == len(star):
        C.extend(e for e in edges if e != delta)
        return
    cofaces_of = amb.cofaces
    # free[c] counts faces of c inside the lower star that are not yet paired
    free = {c: 0 for c in star}
    cofaces = {}
    for c in (x, *star):
        up = [t for t in cofaces_of(c) if t in star]
        cofaces[c] = up
        for t in up:
            free[t] += 1
    done = {x, delta}
    for t in cofaces[x]:
        free[t] -= 1

    def release(c, pq):
        for t in cofaces[c]:
            free[t] -= 1
            if free[t] == 1 and t not in done:
                heapq.heappush(pq, star[t])

    pq_zero = [star[e] for e in edges if e != delta]
    heapq.heapify(pq_zero)
    pq_one: list = []
    release(delta, pq_one)
    while pq_one or pq_zero:
        while pq_one:
            _, a = heapq.heappop(pq_one)
            if a in done:
                continue
            if not free[a]:
                heapq.heappush(pq_zero, star[a])
                continue
            p = next(f for f in amb.faces(a) if f in star and f not in done)
            V.append((p, a))
            done.add(p)
            done.add(a)
            release(a, pq_one)
            release(p, pq_one)
        while pq_zero:
            _, gamma = heapq.heappop(pq_zero)
            if gamma in done:
                continue
            C.append(gamma)
            done.add(gamma)
            release(gamma, pq_one)
            break


def process_lower_stars(S: Subcomplex, values: Mapping) -> tuple:
    """Gradient field and critical cells of ``S`` from vertex values.

    Each lower star is processed on its own: the vertex is paired with its
    lowest edge, then two priority queues ordered by descending vertex-value
    sequences are drained. Cells with one unpaired face get paired from the
    first queue, which is always emptied before the second queue surrenders a
    new critical cell.

    Returns ``(V, C)`` as frozensets. Values must be unique on ``S``.
    """
    _check_unique(S, values)
    amb = S.ambient
    cells = S.cells
    upper = amb.upper_star
    V: list = []
    C: list = []
    for x in S.vertex_list:
        gx = values[x]
        star = {}
        for c, others in upper(x):
            if c not in cells:
                continue
            if len(others) == 1:
                g = values[others[0]]
                if g < gx:
                    star[c] = ((gx, g), c)
                continue
            vals = sorted(map(values.__getitem__, others), reverse=True)
            if vals[0] < gx:
                star[c] = ((gx, *vals), c)
        _process_star(x, star, amb, V, C)
    return frozenset(V), frozenset(C)


def locality_of_pls() -> int:
    """Locality radius of :func:`process_lower_stars`."""
    return 1


class ProcessLowerStars:
    """:func:`process_lower_stars` as a uniformly 1-local field generator."""

    k = locality_of_pls()

    def run(self, S: Subcomplex, values: Mapping) -> tuple:
        return process_lower_stars(S, values)

    def __repr__(self):
        return "ProcessLowerStars(k=1)"


class CountingGenerator:
    """Wraps a generator and records the cell count of every invocation."""

    def __init__(self, gen: FieldGenerator):
        self.gen = gen
        self.k = gen.k
        self.sizes: list = []
        self._lock = threading.Lock()

    def run(self, S: Subcomplex, values: Mapping) -> tuple:
        with self._lock:
            self.sizes.append(len(S))
        return self.gen.run(S, values)

    @property
    def calls(self) -> int:
        return len(self.sizes)

    @property
    def peak(self) -> int:
        return max(self.sizes, default=0)


def matched_cells(V: VectorField) -> frozenset:
    return frozenset(c for pair in V for c in pair)


def is_matching(V: VectorField) -> bool:
    """True when no cell occurs in two pairs of ``V``."""
    seen = set()
    for s, t in V:
        if s in seen or t in seen or s == t:
            return False
        seen.add(s)
        seen.add(t)
    return True


def field_problems(S: Subcomplex, V: VectorField, C: CriticalSet) -> list:
    """Violations of the face/coface, matching and partition invariants."""
    amb = S.ambient
    problems = []
    for s, t in V:
        if s not in amb.faces(t):
            problems.append(f"{s!r} is not a codimension-1 face of {t!r}")
    if not is_matching(V):
        problems.append("some cell appears in more than one pair")
    used = matched_cells(V)
    if used & C:
        problems.append("critical cells also appear in pairs")
    if (used | C) != S.cells:
        problems.append("pairs and critical cells do not partition the subcomplex")
    if len(S) != 2 * len(V) + len(C):
        problems.append(f"|S|={len(S)} but 2|V|+|C|={2 * len(V) + len(C)}")
    return problems
