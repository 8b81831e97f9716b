"""Reassembling a global gradient field from fields computed on a two-set cover.

Every function here that takes a generator returns exactly the field the
generator would produce on the whole complex ``K``; the only exception is
:func:`naive_merge`, kept to demonstrate why corrections are needed.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

from .complex import (
    CubicalGrid,
    DomainError,
    Subcomplex,
    antithetic_witness,
    neighborhood,
)
from .pls import FieldGenerator, VectorField, is_matching, matched_cells, restrict

log = logging.getLogger(__name__)

VARIANTS = ("naive", "thm_general", "cor_intersection", "cor_antithetic", "thm_2d_pls")


class NotAntitheticError(DomainError):
    """The two covering sets fail ``(U & W)[n] == U[n] & W[n]`` at radius ``n``."""

    def __init__(self, n: int):
        super().__init__(f"covering sets are not in antithetic position (fails at n={n})")
        self.n = n


def run_fields(gen: FieldGenerator, parts: list, values: Mapping, workers: int = 1) -> list:
    """Run ``gen`` on every subcomplex in ``parts``; independent runs may overlap in time."""
    if workers <= 1 or len(parts) < 2:
        return [gen.run(S, values)[0] for S in parts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return [r[0] for r in pool.map(lambda S: gen.run(S, values), parts)]


def _check_cover(K: Subcomplex, U: Subcomplex, W: Subcomplex):
    U._check(W)
    U._check(K)
    if (U | W) != K:
        raise DomainError("U and W do not cover K")


def _note(stats: Optional[dict], **sizes):
    if stats is not None:
        stats.update(sizes)


def naive_merge(VU: VectorField, VW: VectorField) -> tuple:
    """Plain union of two fields, with a flag telling whether it is still a matching."""
    V = VU | VW
    return V, is_matching(V)


def merge_thm_general(gen: FieldGenerator, K: Subcomplex, U: Subcomplex, W: Subcomplex,
                      values: Mapping, k: Optional[int] = None, workers: int = 1,
                      stats: Optional[dict] = None) -> VectorField:
    """Merge through the enlargements ``U[k], W[k], U[2k+1], W[2k+1]``.

    Mistakes in ``V(U[k])`` are exactly the pairs missing from
    ``V(U[2k+1])`` (and likewise for ``W``); both sets are removed from the
    union of the ``k``-enlarged fields.
    """
    _check_cover(K, U, W)
    k = gen.k if k is None else k
    Uk, Wk = neighborhood(U, k, K), neighborhood(W, k, K)
    U2, W2 = neighborhood(Uk, k + 1, K), neighborhood(Wk, k + 1, K)
    A, B, A2, B2 = run_fields(gen, [Uk, Wk, U2, W2], values, workers)
    _note(stats, U_k=len(Uk), W_k=len(Wk), U_2k1=len(U2), W_2k1=len(W2),
          mistakes_U=len(A - A2), mistakes_W=len(B - B2))
    return (A | B) - (A - A2) - (B - B2)


def merge_cor_intersection(gen: FieldGenerator, K: Subcomplex, U: Subcomplex, W: Subcomplex,
                           values: Mapping, k: Optional[int] = None, workers: int = 1,
                           stats: Optional[dict] = None) -> VectorField:
    """Merge with corrections computed on ``U[k] & W[k]`` and ``U[2k+1] & W[2k+1]`` only."""
    _check_cover(K, U, W)
    k = gen.k if k is None else k
    Uk, Wk = neighborhood(U, k, K), neighborhood(W, k, K)
    U2, W2 = neighborhood(Uk, k + 1, K), neighborhood(Wk, k + 1, K)
    I1, I2 = Uk & Wk, U2 & W2
    A, B, C1, C2 = run_fields(gen, [Uk, Wk, I1, I2], values, workers)
    _note(stats, U_k=len(Uk), W_k=len(Wk), cap_k=len(I1), cap_2k1=len(I2),
          corrections=len(C1 - C2))
    return (A | B) - (C1 - C2)


def merge_cor_antithetic(gen: FieldGenerator, K: Subcomplex, U: Subcomplex, W: Subcomplex,
                         values: Mapping, k: Optional[int] = None, n_max: Optional[int] = None,
                         workers: int = 1, stats: Optional[dict] = None) -> VectorField:
    """Merge for an antithetic pair, enlarging only ``U & W`` for the corrections.

    The pair is checked for antithetic position up to ``n_max``, which
    defaults to ``2k + 1``, the largest radius the formula consults.
    """
    _check_cover(K, U, W)
    k = gen.k if k is None else k
    n_max = 2 * k + 1 if n_max is None else n_max
    n = antithetic_witness(U, W, n_max, within=K)
    if n is not None:
        raise NotAntitheticError(n)
    cap = U & W
    cap_k = neighborhood(cap, k, K)
    cap_2k1 = neighborhood(cap_k, k + 1, K)
    Uk, Wk = neighborhood(U, k, K), neighborhood(W, k, K)
    A, B, C1, C2 = run_fields(gen, [Uk, Wk, cap_k, cap_2k1], values, workers)
    _note(stats, U=len(U), W=len(W), cap=len(cap), U_k=len(Uk), W_k=len(Wk),
          cap_k=len(cap_k), cap_2k1=len(cap_2k1), corrections=len(C1 - C2))
    return (A | B) - (C1 - C2)


def merge_thm_2d(VU: VectorField, VW: VectorField, V_cap: VectorField,
                 V_cap1: VectorField) -> VectorField:
    """``(V(U) | V(W)) - (V(U & W) - V((U & W)[1]))`` for overlapping grid strips."""
    return (VU | VW) - (V_cap - V_cap1)


def box_of(S: Subcomplex) -> Optional[tuple]:
    """Pixel bounds ``(lo, hi)`` if ``S`` is a full rectangular block of a grid, else None."""
    amb = S.ambient
    if not isinstance(amb, CubicalGrid) or not S.cells:
        return None
    coords = list(zip(*S.cells))
    lo = tuple(min(c) // 2 for c in coords)
    hi = tuple(max(c) // 2 for c in coords)
    if any(min(c) % 2 or max(c) % 2 for c in coords):
        return None
    size = 1
    for l, h in zip(lo, hi):
        size *= 2 * (h - l) + 1
    return (lo, hi) if size == len(S) else None


def strip_axis(K: Subcomplex, U: Subcomplex, W: Subcomplex) -> int:
    """Axis along which ``U`` and ``W`` split the grid rectangle ``K`` into two strips.

    ``U`` must start at the low end of ``K`` and ``W`` end at the high end,
    sharing the full extent of ``K`` in the other axis, with an overlap at
    least one square wide. Raises :class:`DomainError` otherwise.
    """
    boxes = [box_of(S) for S in (K, U, W)]
    if any(b is None for b in boxes) or K.ambient.ndim != 2:
        raise DomainError("K, U and W must be rectangular blocks of a 2D grid")
    (klo, khi), (ulo, uhi), (wlo, whi) = boxes
    for axis in (0, 1):
        other = 1 - axis
        same = all(lo[other] == klo[other] and hi[other] == khi[other]
                   for lo, hi in ((ulo, uhi), (wlo, whi)))
        a, b, c, d = ulo[axis], wlo[axis], uhi[axis], whi[axis]
        if same and a == klo[axis] and d == khi[axis] and a < b < c < d:
            return axis
    raise DomainError("U and W are not overlapping strips [a,c]xJ, [b,d]xJ with a<b<c<d "
                      "whose overlap contains a 2-cell")


def merge_2d(gen: FieldGenerator, K: Subcomplex, U: Subcomplex, W: Subcomplex,
             values: Mapping, workers: int = 1, stats: Optional[dict] = None) -> VectorField:
    """Run the lean strip formula end to end; no enlargement of ``U`` or ``W`` is built."""
    _check_cover(K, U, W)
    strip_axis(K, U, W)
    cap = U & W
    cap1 = neighborhood(cap, 1, K)
    VU, VW, Vc, Vc1 = run_fields(gen, [U, W, cap, cap1], values, workers)
    _note(stats, U=len(U), W=len(W), cap=len(cap), cap_1=len(cap1), corrections=len(Vc - Vc1))
    return merge_thm_2d(VU, VW, Vc, Vc1)


def recover_critical(K: Subcomplex, V: VectorField) -> frozenset:
    """Cells of ``K`` that take part in no pair of ``V``."""
    if not is_matching(V):
        raise DomainError("vector field is not a matching")
    used = matched_cells(V)
    if not used <= K.cells:
        raise DomainError("vector field uses cells outside K")
    return K.cells - used


def run_algorithm1(gen: FieldGenerator, K: Subcomplex, U1: Subcomplex, U2: Subcomplex,
                   values: Mapping, k: Optional[int] = None, workers: int = 1) -> tuple:
    """Two-set pipeline: enlarged patch fields, intersection corrections, critical cells.

    Returns ``(V, C)``.
    """
    _check_cover(K, U1, U2)
    k = gen.k if k is None else k
    enlarged = []
    for Ui in (U1, U2):
        Uk = neighborhood(Ui, k, K)
        U2k1 = neighborhood(Uk, k + 1, K)
        enlarged.append((Uk, U2k1, restrict(values, Uk)))

    def evaluate(item):
        S, data = item
        return gen.run(S, data)[0]

    jobs = [(Uk, data) for Uk, _, data in enlarged]
    I1 = enlarged[0][0] & enlarged[1][0]
    I2 = enlarged[0][1] & enlarged[1][1]
    jobs += [(I1, restrict(values, I1)), (I2, restrict(values, I2))]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            A1, A2, A12k, A12k1 = pool.map(evaluate, jobs)
    else:
        A1, A2, A12k, A12k1 = map(evaluate, jobs)
    V = (A1 | A2) - (A12k - A12k1)
    return V, recover_critical(K, V)


@dataclass(frozen=True)
class MergePlan:
    """A two-set cover of ``K`` plus the merge formula to apply."""

    K: Subcomplex
    U: Subcomplex
    W: Subcomplex
    variant: str = "cor_intersection"
    k: Optional[int] = None

    def validate(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown merge variant {self.variant!r}")
        if self.variant != "naive":
            _check_cover(self.K, self.U, self.W)
        if self.variant == "thm_2d_pls":
            strip_axis(self.K, self.U, self.W)
        if self.variant == "cor_antithetic":
            k = 1 if self.k is None else self.k
            n = antithetic_witness(self.U, self.W, 2 * k + 1, within=self.K)
            if n is not None:
                raise NotAntitheticError(n)

    def run(self, gen: FieldGenerator, values: Mapping, workers: int = 1,
            stats: Optional[dict] = None) -> VectorField:
        self.validate()
        if self.variant == "naive":
            VU, VW = run_fields(gen, [self.U, self.W], values, workers)
            V, ok = naive_merge(VU, VW)
            _note(stats, U=len(self.U), W=len(self.W), valid_matching=int(ok))
            return V
        if self.variant == "thm_general":
            return merge_thm_general(gen, self.K, self.U, self.W, values, self.k, workers, stats)
        if self.variant == "cor_intersection":
            return merge_cor_intersection(gen, self.K, self.U, self.W, values, self.k, workers, stats)
        if self.variant == "cor_antithetic":
            return merge_cor_antithetic(gen, self.K, self.U, self.W, values, self.k,
                                        workers=workers, stats=stats)
        return merge_2d(gen, self.K, self.U, self.W, values, workers, stats)
