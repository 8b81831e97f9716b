"""Patch-grid pipeline for 2D images.

The image is cut into an ``m x l`` grid of disjoint pixel blocks ``P#[i, j]``
(column ``i``, row ``j``; 0-based here). Each block is enlarged by one star in
each direction, ``P[i, j] = P#[i, j][1, 1]``, so neighbouring patches overlap
in a strip one square wide. Fields are computed on the patches and on a fixed
family of overlaps, then stitched with the lean strip formula: first along
every row, then along the overlaps between consecutive rows, and finally down
the column of row strips.

Ledger families, keyed by ``(i, j)``:

========== =====================================================================
``P``       ``P[i,j]``
``Pi1``     ``P[i,j] & P[i+1,j]``
``Pj1``     ``P[i,j] & P[i,j+1]``
``Pcap``    ``Q[i,j] & Q[i+1,j]`` with ``Q[i,j] = P[i,j] & P[i,j+1]``
``Pi1_10``  ``P*[i,j][1,0] & P[i+1,j][1,0]`` with ``P*`` the union along the row
``Pcap_10`` ``Q*[i,j][1,0] & Q[i+1,j][1,0]``
``Pj1_01``  ``R[i,j] = P[i,j][0,1] & P[i,j+1][0,1]``
``Pcap_01`` ``R[i,j] & R[i+1,j]``
``Pcap_11`` ``R*[i,j][1,0] & R[i+1,j][1,0]``
========== =====================================================================
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .complex import CubicalGrid, DomainError, Subcomplex, directional_enlarge, full
from .merge import recover_critical
from .pls import CountingGenerator, FieldGenerator, ProcessLowerStars, is_matching, matched_cells

log = logging.getLogger(__name__)

FAMILIES = ("P", "Pi1", "Pj1", "Pcap", "Pi1_10", "Pcap_10", "Pj1_01", "Pcap_01", "Pcap_11")


def split_sizes(n: int, parts: int) -> list:
    """Near-equal block sizes; the first ``n % parts`` blocks take one extra pixel."""
    q, r = divmod(n, parts)
    return [q + (1 if i < r else 0) for i in range(parts)]


def _bounds(n: int, parts: int) -> list:
    out, start = [], 0
    for size in split_sizes(n, parts):
        out.append((start, start + size - 1))
        start += size
    return out


@dataclass
class PatchGrid:
    grid: CubicalGrid
    m: int
    l: int
    cols: list
    rows: list
    disjoint: dict = field(repr=False)
    patches: dict = field(repr=False)

    def pixel_count(self, i: int, j: int) -> int:
        (x0, x1), (y0, y1) = self.cols[i], self.rows[j]
        return (x1 - x0 + 1) * (y1 - y0 + 1)


def partition(grid: CubicalGrid, m: int, l: int) -> PatchGrid:
    """Cut the image into ``m`` columns and ``l`` rows of pixel blocks."""
    if grid.ndim != 2:
        raise DomainError("partition needs a 2D grid")
    w, h = grid.shape
    if m < 1 or l < 1 or m > w or l > h:
        raise DomainError(f"cannot cut a {w}x{h} image into {m}x{l} patches")
    cols, rows = _bounds(w, m), _bounds(h, l)
    disjoint, patches = {}, {}
    for i, (x0, x1) in enumerate(cols):
        for j, (y0, y1) in enumerate(rows):
            disjoint[i, j] = grid.box((x0, y0), (x1, y1))
            patches[i, j] = directional_enlarge(disjoint[i, j], 1, 1)
    return PatchGrid(grid, m, l, cols, rows, disjoint, patches)


def ledger_subcomplexes(pg: PatchGrid) -> dict:
    """Every subcomplex the preprocessing step runs the generator on, by family."""
    m, l, P = pg.m, pg.l, pg.patches
    enl = directional_enlarge
    out = {name: {} for name in FAMILIES}
    Q = {(i, j): P[i, j] & P[i, j + 1] for i in range(m) for j in range(l - 1)}
    R = {(i, j): enl(P[i, j], 0, 1) & enl(P[i, j + 1], 0, 1) for i in range(m) for j in range(l - 1)}
    for j in range(l):
        star_p = None
        star_q = star_r = None
        for i in range(m):
            out["P"][i, j] = P[i, j]
            star_p = P[i, j] if star_p is None else star_p | P[i, j]
            if j < l - 1:
                out["Pj1"][i, j] = Q[i, j]
                out["Pj1_01"][i, j] = R[i, j]
                star_q = Q[i, j] if star_q is None else star_q | Q[i, j]
                star_r = R[i, j] if star_r is None else star_r | R[i, j]
            if i == m - 1:
                continue
            out["Pi1"][i, j] = P[i, j] & P[i + 1, j]
            out["Pi1_10"][i, j] = enl(star_p, 1, 0) & enl(P[i + 1, j], 1, 0)
            if j < l - 1:
                out["Pcap"][i, j] = Q[i, j] & Q[i + 1, j]
                out["Pcap_10"][i, j] = enl(star_q, 1, 0) & enl(Q[i + 1, j], 1, 0)
                out["Pcap_01"][i, j] = R[i, j] & R[i + 1, j]
                out["Pcap_11"][i, j] = enl(star_r, 1, 0) & enl(R[i + 1, j], 1, 0)
    return out


@dataclass
class FieldLedger:
    subcomplexes: dict
    fields: dict

    def largest(self) -> int:
        return max((len(S) for fam in self.subcomplexes.values() for S in fam.values()), default=0)


def precompute_ledger(gen: FieldGenerator, pg: PatchGrid, values: Mapping,
                      workers: int = 1) -> FieldLedger:
    """Run the generator on every ledger subcomplex; runs are independent."""
    subs = ledger_subcomplexes(pg)
    jobs = [(name, key, S) for name, fam in subs.items() for key, S in fam.items()]

    def job(item):
        return gen.run(item[2], values)[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, jobs))
    else:
        results = [job(item) for item in jobs]
    fields = {name: {} for name in FAMILIES}
    for (name, key, _), V in zip(jobs, results):
        fields[name][key] = V
    return FieldLedger(subs, fields)


def _sweep(first, items, corrections, where, violations):
    acc = first
    for i, (nxt, (minus, plus)) in enumerate(zip(items, corrections)):
        acc = (acc | nxt) - (minus - plus)
        if not is_matching(acc):
            violations.append(f"{where}: not a matching after update {i + 1}")
    return acc


def run_distributed(grid: CubicalGrid, values: Mapping, m: int, l: int,
                    gen: Optional[FieldGenerator] = None, workers: int = 1,
                    literal: bool = False, stats: Optional[dict] = None) -> tuple:
    """Whole-image field assembled from an ``m x l`` patch grid; returns ``(V, C)``.

    With ``literal=True`` the third sweep subtracts ``Pcap_10 - Pcap_11`` and
    the final sweep unions the previous row strip instead of the running
    accumulator. That variant drops earlier rows and is kept for comparison;
    the default uses ``Pcap_01 - Pcap_11`` and the accumulator.
    """
    counter = CountingGenerator(gen or ProcessLowerStars())
    pg = partition(grid, m, l)
    ledger = precompute_ledger(counter, pg, values, workers)
    F = ledger.fields
    violations: list = []

    rows = []
    for j in range(l):
        rows.append(_sweep(
            F["P"][0, j],
            [F["P"][i + 1, j] for i in range(m - 1)],
            [(F["Pi1"][i, j], F["Pi1_10"][i, j]) for i in range(m - 1)],
            f"row {j}", violations))
    caps, caps01 = [], []
    for j in range(l - 1):
        caps.append(_sweep(
            F["Pj1"][0, j],
            [F["Pj1"][i + 1, j] for i in range(m - 1)],
            [(F["Pcap"][i, j], F["Pcap_10"][i, j]) for i in range(m - 1)],
            f"row overlap {j}", violations))
        minus = "Pcap_10" if literal else "Pcap_01"
        caps01.append(_sweep(
            F["Pj1_01"][0, j],
            [F["Pj1_01"][i + 1, j] for i in range(m - 1)],
            [(F[minus][i, j], F["Pcap_11"][i, j]) for i in range(m - 1)],
            f"enlarged row overlap {j}", violations))

    acc = rows[0]
    for j in range(l - 1):
        left = rows[j] if literal else acc
        acc = (left | rows[j + 1]) - (caps[j] - caps01[j])
        if not is_matching(acc):
            violations.append(f"column: not a matching after update {j + 1}")
    K = full(grid)
    C = recover_critical(K, acc) if is_matching(acc) else K.cells - matched_cells(acc)
    for v in violations:
        log.warning(v)
    if stats is not None:
        stats.update(
            patches=f"{m}x{l}",
            generator_calls=counter.calls,
            peak_cells=counter.peak,
            largest_ledger_subcomplex=ledger.largest(),
            image_cells=len(K),
            violations=len(violations),
        )
        stats["_ledger"] = ledger
        stats["_violations"] = violations
    return acc, C
