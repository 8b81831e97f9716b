"""Simplicial trees, jet covers with a margin, product covers and tree merging.

Trees are rooted at ``v0`` and stored as parent arrays (see
:class:`morsemerge.complex.Tree`); ``v`` lies on ``[v0, t)`` exactly when
``v`` is an ancestor of ``t`` other than ``t`` itself.

Metric subsets are turned into subcomplexes in one of two ways:

* vertex mode (default): keep the qualifying vertices, plus every edge whose
  two endpoints qualify;
* metric mode (``metric=True``): treat the tree as a metric graph, take the
  open point set and return the closure of every cell it meets.

The jet cover is built in metric mode. In vertex mode consecutive bands share
no vertex and the edges between them are covered by nothing.
"""
from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .complex import Ambient, Cell, DomainError, Subcomplex, Tree, closure, full, neighborhood
from .merge import NotAntitheticError, merge_cor_antithetic, merge_cor_intersection, recover_critical
from .pls import FieldGenerator, ProcessLowerStars

log = logging.getLogger(__name__)

SimplicialTree = Tree


def _require(T: Tree, v):
    if v not in T.adj:
        raise DomainError(f"{v!r} is not a vertex of the tree")


def _from_vertices(T: Tree, verts: Iterable) -> Subcomplex:
    vs = set(verts)
    cells = {(v,) for v in vs}
    for v in vs:
        p = T.parent[v]
        if p is not None and p in vs:
            cells.add(T.edge(p, v))
    return Subcomplex(T, frozenset(cells))


def _from_edges(T: Tree, children: Iterable) -> Subcomplex:
    """Closure of the edges ``(parent(c), c)`` for the given child endpoints."""
    cells = set()
    for c in children:
        p = T.parent[c]
        cells.update(((p,), (c,), T.edge(p, c)))
    return Subcomplex(T, frozenset(cells))


def descendants(T: Tree, v, max_dist: Optional[int] = None) -> dict:
    """Strict descendants of ``v`` mapped to their distance from ``v``."""
    out = {}
    stack = [(w, 1) for w in T.children[v]]
    while stack:
        w, d = stack.pop()
        if max_dist is not None and d > max_dist:
            continue
        out[w] = d
        stack.extend((x, d + 1) for x in T.children[w])
    return out


def jet_vertices(T: Tree, v) -> frozenset:
    """Vertices ``t`` with ``v`` on ``[v0, t)``: the strict descendants of ``v``."""
    _require(T, v)
    return frozenset(descendants(T, v))


def jet(T: Tree, v, metric: bool = False) -> Subcomplex:
    _require(T, v)
    ds = descendants(T, v)
    return _from_edges(T, ds) if metric else _from_vertices(T, ds)


def ball_vertices(T: Tree, v, r: int) -> frozenset:
    """Vertices at distance ``< r`` from ``v`` (the open ball)."""
    _require(T, v)
    return frozenset(w for w, d in _bfs(T, v, r).items() if d < r)


def sphere_vertices(T: Tree, v, r: int) -> frozenset:
    _require(T, v)
    return frozenset(w for w, d in _bfs(T, v, r).items() if d == r)


def _bfs(T: Tree, v, limit: int) -> dict:
    dist = {v: 0}
    frontier = [v]
    for d in range(1, limit + 1):
        nxt = []
        for u in frontier:
            for w in T.adj[u]:
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def ball(T: Tree, v, r: int, metric: bool = False) -> Subcomplex:
    """Open ball ``B(v, r)`` as a subcomplex.

    In metric mode the open ball meets every edge with an endpoint at
    distance ``< r``, so the closure reaches the vertices at distance ``r``.
    """
    if not metric:
        return _from_vertices(T, ball_vertices(T, v, r))
    _require(T, v)
    dist = _bfs(T, v, r)
    cells = {(w,) for w, d in dist.items() if d <= r}
    for w, d in dist.items():
        if d >= 1:
            u = next(x for x in T.adj[w] if dist.get(x) == d - 1)
            cells.add(T.edge(u, w))
    return Subcomplex(T, frozenset(cells))


def sphere(T: Tree, v, r: int) -> Subcomplex:
    return _from_vertices(T, sphere_vertices(T, v, r))


def jet_band(T: Tree, v, l1: int, l2: int, metric: bool = False) -> Subcomplex:
    """``J(v; l1, l2)``: jet points of ``v`` strictly between distance ``l1`` and ``l2``.

    This is the bounded jet ``J(v, l2)`` with the open ball and the sphere of
    radius ``l1`` removed. Vertex mode keeps descendants at distance
    ``l1 < d < l2``; metric mode returns the closure of the edges whose lower
    endpoint lies at distance ``l1 + 1 .. l2``.
    """
    _require(T, v)
    if not l2 > l1 > 0:
        raise DomainError(f"jet band needs l2 > l1 > 0, got ({l1}, {l2})")
    ds = descendants(T, v, l2)
    if metric:
        return _from_edges(T, (w for w, d in ds.items() if l1 < d <= l2))
    return _from_vertices(T, (w for w, d in ds.items() if l1 < d < l2))


# ---------------------------------------------------------------- jet covers

def nerve(sets: Sequence[Subcomplex]) -> frozenset:
    """Maximal simplices of the nerve, as frozensets of set indices."""
    member: dict = {}
    for i, S in enumerate(sets):
        for c in S.cells:
            member.setdefault(c, []).append(i)
    faces = {frozenset(ix) for ix in member.values()}
    faces |= {frozenset([i]) for i, S in enumerate(sets) if S}
    by_size = sorted(faces, key=len, reverse=True)
    maximal: list = []
    for f in by_size:
        if not any(f < g for g in maximal):
            maximal.append(f)
    return frozenset(maximal)


def nerve_edges(simplices: Iterable[frozenset]) -> set:
    return {frozenset(p) for s in simplices for p in itertools.combinations(sorted(s), 2)}


def is_forest(n: int, edges: Iterable[frozenset]) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        a, b = tuple(e)
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def vertex_diameter(T: Tree, S: Subcomplex) -> int:
    """Largest tree distance between two vertices of ``S`` (double sweep, exact on trees)."""
    vs = [c[0] for c in S.cells if len(c) == 1]
    if len(vs) < 2:
        return 0
    a = max(vs, key=lambda w: T.distance(vs[0], w))
    return max(T.distance(a, w) for w in vs)


@dataclass
class JetCoverReport:
    covering: bool
    max_diameter: int
    diameter_bound: int
    nerve_dimension: int
    nerve_is_forest: bool
    margin_checked: Optional[int] = None
    margin_holds: Optional[bool] = None

    @property
    def diameter_ok(self) -> bool:
        return self.max_diameter <= self.diameter_bound


@dataclass
class JetCover:
    """Root ball ``B(v0, 2r)`` and bands ``J(v; r-1, 3r)`` for ``v`` at depth ``(2n-1)r``.

    ``labels[i]`` is ``("ball", v0)`` or ``("band", v, n)``; empty bands are
    dropped. ``parent[i]`` is the index of the set one level up in the nerve.
    """

    tree: Tree
    r: int
    sets: list
    labels: list
    parent: list
    report: Optional[JetCoverReport] = None

    def __len__(self):
        return len(self.sets)

    def nerve(self) -> frozenset:
        return nerve(self.sets)

    def enlarged(self, n: int) -> list:
        K = full(self.tree)
        return [neighborhood(S, n, K) for S in self.sets]


def margin_holds(cover: JetCover, n: int) -> bool:
    """True when enlarging every set by ``n`` leaves the nerve unchanged."""
    return nerve(cover.enlarged(n)) == cover.nerve()


def build_jet_cover(T: Tree, r: int, margin: Optional[int] = None, check: bool = True) -> JetCover:
    """Cover ``T`` by the root ball and jet bands and check its properties.

    The report records covering, the largest set diameter against ``6r`` and
    the nerve shape. With ``margin`` given, the nerve after enlarging every
    set by ``margin`` is compared with the original one.
    """
    if not isinstance(T, Tree):
        raise DomainError("build_jet_cover needs a Tree")
    if r <= 1:
        raise DomainError("jet cover needs r > 1")
    v0 = T.root
    sets = [ball(T, v0, 2 * r, metric=True)]
    labels = [("ball", v0)]
    parent = [None]
    owner = {v0: 0}  # nearest set index seen on the way down from the root
    height = max(T.depth.values())
    for v in T.bfs_order:
        d = T.depth[v]
        p = T.parent[v]
        if p is not None and v not in owner:
            owner[v] = owner[p]
        if d % (2 * r) != r or d + r - 1 >= height:
            continue
        band = jet_band(T, v, r - 1, 3 * r, metric=True)
        if not band:
            continue
        n = (d // r + 1) // 2
        sets.append(band)
        labels.append(("band", v, n))
        parent.append(owner[v])
        owner[v] = len(sets) - 1
    cover = JetCover(T, r, sets, labels, parent)
    if check:
        cover.report = cover_report(cover, margin)
    return cover


def cover_report(cover: JetCover, margin: Optional[int] = None) -> JetCoverReport:
    T, r = cover.tree, cover.r
    covered = set()
    for S in cover.sets:
        covered |= S.cells
    K = full(T)
    simplices = cover.nerve()
    dim = max((len(s) for s in simplices), default=1) - 1
    rep = JetCoverReport(
        covering=covered == K.cells,
        max_diameter=max(vertex_diameter(T, S) for S in cover.sets),
        diameter_bound=6 * r,
        nerve_dimension=dim,
        nerve_is_forest=dim <= 1 and is_forest(len(cover), nerve_edges(simplices)),
    )
    if margin is not None:
        rep.margin_checked = margin
        rep.margin_holds = nerve([neighborhood(S, margin, K) for S in cover.sets]) == simplices
    return rep


def random_tree(n: int, rng: random.Random, max_valence: int = 4, depth_bias: float = 0.5) -> Tree:
    """Random tree on ``0..n-1`` rooted at 0 with every vertex degree ``<= max_valence``.

    With probability ``depth_bias`` a new vertex hangs off one of the most
    recent vertices, which stretches the tree; otherwise the parent is uniform.
    """
    if n < 1:
        raise DomainError("tree needs at least one vertex")
    deg = [0] * n
    open_ = [0]
    edges = []
    for v in range(1, n):
        if rng.random() < depth_bias:
            pool = open_[-4:]
        else:
            pool = open_
        p = rng.choice(pool)
        edges.append((p, v))
        deg[p] += 1
        deg[v] += 1
        if deg[p] >= max_valence:
            open_.remove(p)
        if deg[v] < max_valence:
            open_.append(v)
    return Tree(edges, root=0, vertices=range(n))


def binary_tree(depth: int) -> Tree:
    """Complete binary tree with heap numbering, root 0, leaves at ``depth``."""
    n = 2 ** (depth + 1) - 1
    return Tree([((v - 1) // 2, v) for v in range(1, n)], root=0, vertices=range(n))


def path_tree(n: int) -> Tree:
    return Tree([(i, i + 1) for i in range(n - 1)], root=0, vertices=range(n))


def parse_edge_list(text: str) -> Tree:
    """Tree from ``u v`` lines; the root is the first token of the first line.

    A first line holding a single token names the root without adding an
    edge. Blank lines and ``#`` comments are skipped. Labels are integers
    when every label parses as one.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) > 2 or (len(toks) == 1 and rows):
            raise DomainError(f"line {lineno}: expected 'u v', got {raw!r}")
        rows.append(toks)
    if not rows:
        raise DomainError("empty edge list")
    labels = [t for row in rows for t in row]
    try:
        conv = {t: int(t) for t in labels}
    except ValueError:
        conv = {t: t for t in labels}
    root = conv[rows[0][0]]
    edges = [(conv[a], conv[b]) for a, b in (row for row in rows if len(row) == 2)]
    return Tree(edges, root=root, vertices=[root])


# ---------------------------------------------------------------- products

class ProductComplex(Ambient):
    """Cartesian product of trees; a cell is a tuple of one tree cell per factor."""

    def __init__(self, factors: Sequence[Tree]):
        if not factors:
            raise DomainError("product needs at least one factor")
        self.factors = tuple(factors)

    def __repr__(self):
        return f"ProductComplex({list(self.factors)!r})"

    @property
    def kind(self) -> str:
        return "product"

    def dim(self, c: Cell) -> int:
        return sum(len(x) - 1 for x in c)

    def contains(self, c: Cell) -> bool:
        return len(c) == len(self.factors) and all(T.contains(x) for T, x in zip(self.factors, c))

    def faces(self, c: Cell) -> tuple:
        out = []
        for i, (T, x) in enumerate(zip(self.factors, c)):
            for f in T.faces(x):
                out.append(c[:i] + (f,) + c[i + 1:])
        return tuple(out)

    def cofaces(self, c: Cell) -> tuple:
        out = []
        for i, (T, x) in enumerate(zip(self.factors, c)):
            for f in T.cofaces(x):
                out.append(c[:i] + (f,) + c[i + 1:])
        return tuple(out)

    def vertices(self, c: Cell) -> tuple:
        return tuple(itertools.product(*((( (v,) for v in x)) for x in c)))

    def cells(self):
        return itertools.product(*(list(T.cells()) for T in self.factors))

    @property
    def diameter(self) -> int:
        return sum(T.diameter for T in self.factors)

    def distance(self, x: tuple, y: tuple) -> int:
        """l1 path metric between product vertices given as tuples of tree vertices."""
        return sum(T.distance(a, b) for T, a, b in zip(self.factors, x, y))


@dataclass(frozen=True)
class HypercubeIndex:
    """Choice ``(V_1, ..., V_D)`` of cover-set indices; ``None`` marks an empty slot.

    Empty slots may only form a suffix; ``d`` is the number of filled slots.
    """

    choice: tuple

    def __post_init__(self):
        seen_empty = False
        for c in self.choice:
            if c is None:
                seen_empty = True
            elif seen_empty:
                raise DomainError(f"empty slots must form a suffix: {self.choice}")

    @property
    def d(self) -> int:
        return sum(c is not None for c in self.choice)

    def stratum(self) -> int:
        return len(self.choice) - self.d


@dataclass
class ProductCover:
    complex: ProductComplex
    covers: list
    index: list = field(repr=False)

    def slice_cells(self, i: int, j: int) -> frozenset:
        """``pi_i^{-1}(V)`` for the ``j``-th set of factor ``i``."""
        S = self.covers[i].sets[j].cells
        return frozenset(c for c in self._cells if c[i] in S)

    @property
    def _cells(self) -> frozenset:
        if not hasattr(self, "_all"):
            self._all = frozenset(self.complex.cells())
        return self._all

    def cube(self, x: HypercubeIndex) -> Subcomplex:
        """``C_x``: the intersection of the slices picked by the filled slots of ``x``."""
        sets = [self.covers[i].sets[j].cells for i, j in enumerate(x.choice) if j is not None]
        cells = frozenset(c for c in self._cells if all(c[i] in S for i, S in enumerate(sets)))
        return Subcomplex(self.complex, cells)

    def strata(self) -> dict:
        out: dict = {}
        for x in self.index:
            out.setdefault(x.stratum(), []).append(x)
        return out

    def restrict(self, X: Subcomplex, stratum: int = 0) -> dict:
        """Cover of ``X`` by its intersections with the cubes of one stratum."""
        if X.ambient is not self.complex:
            raise DomainError("subset lives in a different complex")
        return {x: self.cube(x) & X for x in self.strata().get(stratum, [])}


def product_cover(trees: Sequence[Tree], r: int) -> ProductCover:
    """Per-factor jet covers and every hypercube index over them."""
    if not trees:
        raise DomainError("product cover needs D >= 1")
    covers = [build_jet_cover(T, r, check=False) for T in trees]
    D = len(trees)
    index = []
    for d in range(D + 1):
        for head in itertools.product(*(range(len(covers[i])) for i in range(d))):
            index.append(HypercubeIndex(tuple(head) + (None,) * (D - d)))
    return ProductCover(ProductComplex(trees), covers, index)


def lipschitz_violations(pc: ProductComplex, rng: random.Random, samples: int = 200) -> list:
    """Sampled pairs where a coordinate projection would stretch the product metric."""
    verts = [list(T.adj) for T in pc.factors]
    bad = []
    for _ in range(samples):
        x = tuple(rng.choice(v) for v in verts)
        y = tuple(rng.choice(v) for v in verts)
        d = pc.distance(x, y)
        for i, T in enumerate(pc.factors):
            if T.distance(x[i], y[i]) > d:
                bad.append((x, y, i))
    return bad


# ---------------------------------------------------------------- merging

@dataclass
class FoldStep:
    parent: int
    child: int
    U: int
    W: int
    cap: int
    formula: str

    @property
    def ratio(self) -> float:
        return self.cap / max(1, min(self.U, self.W))


def merge_on_tree(gen: Optional[FieldGenerator], T: Tree, cover: JetCover, values: Mapping,
                  k: Optional[int] = None, workers: int = 1,
                  stats: Optional[dict] = None) -> tuple:
    """Field of the whole tree from a jet cover, folded bottom-up along the nerve.

    Each node's region (its set plus the regions of its children) is built
    by merging in one child region at a time with the antithetic formula,
    inside the union of the two pieces. A pair that is not antithetic falls
    back to the intersection formula with a warning. Returns ``(V, C)``; with
    ``stats`` given, ``stats["steps"]`` lists a :class:`FoldStep` per merge.
    """
    gen = gen or ProcessLowerStars()
    n = len(cover)
    if n == 0:
        raise DomainError("empty cover")
    kids: dict = {i: [] for i in range(n)}
    for i, p in enumerate(cover.parent):
        if p is not None:
            kids[p].append(i)
    steps: list = []
    region: dict = {}
    field_: dict = {}
    order = []
    stack = [i for i in range(n) if cover.parent[i] is None]
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(kids[i])
    for i in reversed(order):
        U = cover.sets[i]
        V = None
        for c in kids[i]:
            W = region[c]
            K_t = U | W
            try:
                V = merge_cor_antithetic(gen, K_t, U, W, values, k, workers=workers)
                formula = "cor_antithetic"
            except NotAntitheticError as exc:
                log.warning("sets %s and %s are not antithetic (n=%d); using the intersection formula",
                            cover.labels[i], cover.labels[c], exc.n)
                V = merge_cor_intersection(gen, K_t, U, W, values, k, workers=workers)
                formula = "cor_intersection"
            steps.append(FoldStep(i, c, len(U), len(W), len(U & W), formula))
            U = K_t
        region[i], field_[i] = U, V
    roots = [i for i in range(n) if cover.parent[i] is None]
    K = full(T)
    if len(roots) != 1 or region[roots[0]] != K:
        raise DomainError("cover sets do not fold into the whole tree")
    V = field_[roots[0]]
    if V is None:
        V = gen.run(K, values)[0]
    if stats is not None:
        stats["steps"] = steps
        stats["max_cap_ratio"] = max((s.ratio for s in steps), default=0.0)
    return V, recover_critical(K, V)
