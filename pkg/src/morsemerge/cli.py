"""Command line front end: load an image or tree, build a field, verify, report.

Examples::

    morsemerge --mode oracle --input img.pgm
    morsemerge --mode distributed --input img.pgm --patches 3x2 --verify
    morsemerge --mode merge-2d --seed 7 --size 16x16 --split 8 --overlap 2 --verify
    morsemerge --mode tree --input tree.txt --r 3 --verify --bench times.csv

Reports are plain text and byte-identical across runs on the same input;
wall times go only to the ``--bench`` CSV.
"""
from __future__ import annotations

import argparse
import csv
import logging
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .complex import CubicalGrid, DomainError, Subcomplex, Tree, full
from .distributed import run_distributed
from .merge import MergePlan, recover_critical
from .pls import CountingGenerator, ProcessLowerStars, is_matching, matched_cells, uniquify
from .trees import build_jet_cover, merge_on_tree, parse_edge_list

MODES = ("oracle", "naive", "merge-general", "merge-intersection", "merge-antithetic",
         "merge-2d", "distributed", "tree")
MERGE_VARIANT = {
    "naive": "naive",
    "merge-general": "thm_general",
    "merge-intersection": "cor_intersection",
    "merge-antithetic": "cor_antithetic",
    "merge-2d": "thm_2d_pls",
}
MAX_DIFFS = 10


# ---------------------------------------------------------------- PGM input

class PGMError(DomainError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (byte offset {offset})")
        self.offset = offset


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_space(self):
        d = self.data
        while self.pos < len(d):
            ch = d[self.pos]
            if ch == ord("#"):
                while self.pos < len(d) and d[self.pos] not in b"\r\n":
                    self.pos += 1
            elif chr(ch).isspace():
                self.pos += 1
            else:
                break

    def token(self, what: str) -> bytes:
        self.skip_space()
        start = self.pos
        d = self.data
        while self.pos < len(d) and not chr(d[self.pos]).isspace() and d[self.pos] != ord("#"):
            self.pos += 1
        if start == self.pos:
            raise PGMError(f"missing {what}", start)
        return d[start:self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        if not tok.isdigit():
            self.pos = start
            self.skip_space()
            raise PGMError(f"bad {what} {tok!r}", self.pos)
        return int(tok)


def parse_pgm(data: bytes) -> tuple:
    """``(width, height, maxval, samples)`` from P2 or P5 bytes; samples are row-major."""
    rd = _Reader(data)
    magic = rd.token("magic number")
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"not a P2/P5 file (magic {magic!r})", 0)
    w = rd.integer("width")
    h = rd.integer("height")
    maxval = rd.integer("maxval")
    if w < 1 or h < 1:
        raise PGMError(f"empty image {w}x{h}", rd.pos)
    if not 0 < maxval < 65536:
        raise PGMError(f"maxval {maxval} out of range", rd.pos)
    n = w * h
    if magic == b"P2":
        samples = []
        for _ in range(n):
            rd.skip_space()
            if rd.pos >= len(data):
                raise PGMError(f"truncated raster: {len(samples)} of {n} samples", rd.pos)
            at = rd.pos
            v = rd.integer("sample")
            if v > maxval:
                raise PGMError(f"sample {v} exceeds maxval {maxval}", at)
            samples.append(v)
        return w, h, maxval, samples
    if rd.pos >= len(data) or not chr(data[rd.pos]).isspace():
        raise PGMError("missing whitespace after maxval", rd.pos)
    start = rd.pos + 1
    width = 1 if maxval < 256 else 2
    raster = data[start:start + n * width]
    if len(raster) < n * width:
        raise PGMError(f"truncated raster: {len(raster)} of {n * width} bytes", start + len(raster))
    if width == 1:
        samples = list(raster)
    else:
        samples = [int.from_bytes(raster[i:i + 2], "big") for i in range(0, len(raster), 2)]
    for i, v in enumerate(samples):
        if v > maxval:
            raise PGMError(f"sample {v} exceeds maxval {maxval}", start + i * width)
    return w, h, maxval, samples


def image_complex(w: int, h: int, samples: Sequence) -> tuple:
    """Grid and uniquified vertex values for a row-major raster.

    A single row or column becomes a path complex, so a ``1 x n`` image is
    the path of ``n`` vertices.
    """
    if h == 1 or w == 1:
        grid = CubicalGrid((max(w, h),))
        raw = {(2 * i,): samples[i] for i in range(w * h)}
    else:
        grid = CubicalGrid((w, h))
        raw = {(2 * (i % w), 2 * (i // w)): samples[i] for i in range(w * h)}
    return grid, uniquify(raw)


def load_pgm(path) -> tuple:
    """``(grid, values)`` for a PGM file."""
    w, h, _, samples = parse_pgm(Path(path).read_bytes())
    return image_complex(w, h, samples)


def random_image(w: int, h: int, seed: int, levels: int = 256) -> tuple:
    rng = random.Random(seed)
    return image_complex(w, h, [rng.randrange(levels) for _ in range(w * h)])


def tree_values(T: Tree, seed: int) -> dict:
    rng = random.Random(seed)
    return uniquify({(v,): rng.random() for v in sorted(T.adj)})


# ---------------------------------------------------------------- reports

@dataclass
class FieldReport:
    complex: str
    mode: str
    V: frozenset
    C: frozenset
    metrics: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    verdict: Optional[str] = None
    diffs: list = field(default_factory=list)


def describe(amb) -> str:
    if isinstance(amb, CubicalGrid):
        return f"{amb.kind} " + "x".join(map(str, amb.shape))
    if isinstance(amb, Tree):
        return f"tree {len(amb)} root={amb.root}"
    return repr(amb)


def fmt_cell(c) -> str:
    return "(" + ",".join(map(str, c)) + ")"


def _cell_key(c):
    return (len(c), c)


def format_report(rep: FieldReport) -> str:
    lines = [f"complex {rep.complex}", f"mode {rep.mode}"]
    for s, t in sorted(rep.V, key=lambda p: (_cell_key(p[0]), _cell_key(p[1]))):
        lines.append(f"pair {fmt_cell(s)} <= {fmt_cell(t)}")
    for c in sorted(rep.C, key=_cell_key):
        lines.append(f"critical {fmt_cell(c)}")
    for key in sorted(rep.metrics):
        lines.append(f"metric {key} {rep.metrics[key]}")
    for step in rep.steps:
        lines.append("step " + " ".join(str(x) for x in step))
    if rep.verdict is not None:
        lines.append(f"verdict {rep.verdict}")
        lines.extend(f"diff {d}" for d in rep.diffs)
    return "\n".join(lines) + "\n"


def _parse_label(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def _parse_cell(text: str) -> tuple:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise DomainError(f"bad cell {text!r}")
    return tuple(_parse_label(t) for t in text[1:-1].split(",") if t)


def parse_report(text: str) -> FieldReport:
    """Inverse of :func:`format_report`."""
    rep = FieldReport("", "", frozenset(), frozenset())
    V, C = set(), set()
    for lineno, line in enumerate(text.splitlines(), 1):
        head, _, rest = line.partition(" ")
        if head == "complex":
            rep.complex = rest
        elif head == "mode":
            rep.mode = rest
        elif head == "pair":
            s, sep, t = rest.partition(" <= ")
            if not sep:
                raise DomainError(f"line {lineno}: bad pair {rest!r}")
            V.add((_parse_cell(s), _parse_cell(t)))
        elif head == "critical":
            C.add(_parse_cell(rest))
        elif head == "metric":
            key, _, val = rest.partition(" ")
            rep.metrics[key] = _parse_label(val)
        elif head == "step":
            rep.steps.append(tuple(_parse_label(x) for x in rest.split()))
        elif head == "verdict":
            rep.verdict = rest
        elif head == "diff":
            rep.diffs.append(rest)
        elif line.strip():
            raise DomainError(f"line {lineno}: unknown record {head!r}")
    rep.V, rep.C = frozenset(V), frozenset(C)
    return rep


def emit_field(rep: FieldReport, path) -> None:
    Path(path).write_text(format_report(rep), encoding="utf-8")


def verify(a: FieldReport, b: FieldReport) -> tuple:
    """``("exact-equal", [])`` or ``("differs", first diffs)`` comparing ``a`` against ``b``."""
    if a.complex != b.complex:
        raise DomainError(f"reports describe different complexes: {a.complex!r} vs {b.complex!r}")
    diffs = [f"+pair {fmt_cell(s)} <= {fmt_cell(t)}" for s, t in sorted(a.V - b.V)]
    diffs += [f"-pair {fmt_cell(s)} <= {fmt_cell(t)}" for s, t in sorted(b.V - a.V)]
    diffs += [f"+critical {fmt_cell(c)}" for c in sorted(a.C - b.C)]
    diffs += [f"-critical {fmt_cell(c)}" for c in sorted(b.C - a.C)]
    if not diffs:
        return "exact-equal", []
    return "differs", diffs[:MAX_DIFFS]


# ---------------------------------------------------------------- execution

def parse_patches(text: str) -> tuple:
    try:
        m, l = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MxL, got {text!r}")
    return m, l


def strip_cover(grid: CubicalGrid, split: Optional[int], overlap: int) -> tuple:
    """``U`` = pixel columns ``[0, split + overlap - 1]``, ``W`` = ``[split, w - 1]``."""
    w = grid.shape[0]
    split = w // 2 if split is None else split
    if overlap < 1 or not 0 < split < w or split + overlap > w:
        raise DomainError(f"cannot split width {w} at column {split} with overlap {overlap}")
    top = tuple(n - 1 for n in grid.shape)
    U = grid.box((0,) * grid.ndim, (split + overlap - 1,) + top[1:])
    W = grid.box((split,) + (0,) * (grid.ndim - 1), top)
    return U, W


def _clean(stats: dict) -> dict:
    return {k: v for k, v in stats.items() if not k.startswith("_") and not isinstance(v, (list, dict))}


def execute(args) -> tuple:
    """Run one mode; returns ``(report, oracle_fields_or_None, bench_row)``."""
    mode = args.mode
    if mode == "tree":
        if not args.input:
            raise DomainError("tree mode needs --input with an edge list")
        T = parse_edge_list(Path(args.input).read_text())
        values = tree_values(T, args.seed)
        K = full(T)
    else:
        if args.input:
            grid, values = load_pgm(args.input)
        else:
            w, h = parse_patches(args.size)
            grid, values = random_image(w, h, args.seed)
        K = full(grid)
    amb = K.ambient
    gen = CountingGenerator(ProcessLowerStars())
    stats: dict = {}
    steps: list = []
    t0 = time.perf_counter()
    if mode == "oracle":
        V, C = gen.run(K, values)
    elif mode in MERGE_VARIANT:
        U, W = strip_cover(amb, args.split, args.overlap)
        stats.update(U=len(U), W=len(W), cap=len(U & W))
        plan = MergePlan(K, U, W, MERGE_VARIANT[mode], args.k)
        V = plan.run(gen, values, stats=stats)
        C = recover_critical(K, V) if is_matching(V) else K.cells - matched_cells(V)
        if mode == "naive":
            stats["valid_matching"] = int(is_matching(V))
    elif mode == "distributed":
        if amb.ndim != 2:
            raise DomainError("distributed mode needs a 2D image")
        m, l = args.patches
        V, C = run_distributed(amb, values, m, l, gen=gen, stats=stats)
    else:
        cover = build_jet_cover(amb, args.r)
        rep = cover.report
        stats.update(cover_sets=len(cover), covering=int(rep.covering),
                     max_set_diameter=rep.max_diameter, nerve_is_forest=int(rep.nerve_is_forest))
        V, C = merge_on_tree(gen, amb, cover, values, args.k, stats=stats)
        steps = [(s.parent, s.child, s.U, s.W, s.cap, s.formula) for s in stats.pop("steps")]
        stats["max_cap_ratio"] = f"{stats['max_cap_ratio']:.4f}"
    elapsed = time.perf_counter() - t0
    metrics = _clean(stats)
    metrics.update(cells=len(K), pairs=len(V), critical=len(C),
                   generator_calls=gen.calls, peak_subcomplex=gen.peak)
    report = FieldReport(describe(amb), mode, frozenset(V), frozenset(C), metrics, steps)
    oracle = None
    if args.verify:
        oracle = ProcessLowerStars().run(K, values) if mode != "oracle" else (V, C)
        ref = FieldReport(report.complex, "oracle", *oracle)
        report.verdict, report.diffs = verify(report, ref)
    bench = dict(mode=mode, complex=report.complex, cells=len(K), generator_calls=gen.calls,
                 peak_subcomplex=gen.peak, seconds=f"{elapsed:.6f}")
    return report, oracle, bench


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morsemerge", description=__doc__.split("\n\n")[0])
    p.add_argument("--mode", choices=MODES, default="oracle")
    p.add_argument("--input", help="PGM image (P2/P5), or an edge list in tree mode")
    p.add_argument("--size", default="16x16", help="WxH of the random image used without --input")
    p.add_argument("--seed", type=int, default=0, help="seed for generated images and tree values")
    p.add_argument("--patches", type=parse_patches, default=(2, 2), help="patch grid MxL")
    p.add_argument("--split", type=int, help="first pixel column of the second strip")
    p.add_argument("--overlap", type=int, default=2, help="pixel columns shared by the strips")
    p.add_argument("--k", type=int, help="locality override for the merge formulas")
    p.add_argument("--r", type=int, default=2, help="jet cover radius in tree mode")
    p.add_argument("--verify", action="store_true", help="compare against the whole-complex field")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--bench", help="append a size/time CSV row to this file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report, _, bench = execute(args)
    except (DomainError, OSError) as exc:
        print(f"morsemerge: error: {exc}", file=sys.stderr)
        return 2
    text = format_report(report)
    if args.report:
        emit_field(report, args.report)
    else:
        sys.stdout.write(text)
    if args.bench:
        path = Path(args.bench)
        new = not path.exists() or path.stat().st_size == 0
        with path.open("a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(bench))
            if new:
                writer.writeheader()
            writer.writerow(bench)
    if args.verify and report.verdict != "exact-equal":
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
