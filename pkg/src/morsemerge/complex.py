"""Cell complexes, subcomplexes and neighborhood algebra.

Two kinds of ambient complex are supported:

* :class:`CubicalGrid` -- the cubical complex of a 1D path or a 2D pixel grid.
  Cells are encoded in doubled (Khalimsky) coordinates: the pixel in column
  ``i`` and row ``j`` is the vertex ``(2i, 2j)``, and a coordinate is odd
  exactly along the axes in which the cube has extent.
* :class:`Tree` -- a finite simplicial tree. Cells are ``(v,)`` for vertices
  and ``(u, v)`` with ``u < v`` for edges.

Any object implementing the :class:`Ambient` methods can be used by the rest
of the package; a product of trees lives in :mod:`morsemerge.trees`.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional

Cell = tuple


class DomainError(ValueError):
    """Raised when an operation is applied outside its domain."""


class Ambient:
    """Interface of an ambient regular cell complex.

    Subclasses must provide ``dim``, ``faces``, ``cofaces``, ``vertices``,
    ``contains``, ``cells`` and ``diameter``. ``closure`` and ``star_cells``
    have generic implementations that subclasses may override.
    """

    def dim(self, c: Cell) -> int:
        raise NotImplementedError

    def faces(self, c: Cell) -> tuple:
        """Codimension-1 faces of ``c``."""
        raise NotImplementedError

    def cofaces(self, c: Cell) -> tuple:
        """Codimension-1 cofaces of ``c`` in the ambient complex."""
        raise NotImplementedError

    def vertices(self, c: Cell) -> tuple:
        raise NotImplementedError

    def contains(self, c: Cell) -> bool:
        raise NotImplementedError

    def cells(self) -> Iterator[Cell]:
        raise NotImplementedError

    @property
    def diameter(self) -> int:
        """Number of star steps after which every neighborhood is stable."""
        raise NotImplementedError

    def closure(self, c: Cell) -> tuple:
        """All faces of ``c`` of every codimension, ``c`` included."""
        out = {c}
        todo = [c]
        while todo:
            for f in self.faces(todo.pop()):
                if f not in out:
                    out.add(f)
                    todo.append(f)
        return tuple(out)

    def star_cells(self, v: Cell) -> tuple:
        """Cells of the ambient that have the vertex ``v`` as a face."""
        out = {v}
        todo = [v]
        while todo:
            for f in self.cofaces(todo.pop()):
                if f not in out:
                    out.add(f)
                    todo.append(f)
        return tuple(out)

    def upper_star(self, v: Cell) -> tuple:
        """Pairs ``(c, others)`` for every cell ``c != v`` containing ``v``.

        ``others`` are the vertices of ``c`` other than ``v``.
        """
        cache = self.__dict__.setdefault("_upper", {})
        out = cache.get(v)
        if out is None:
            out = cache[v] = tuple((c, tuple(y for y in self.vertices(c) if y != v))
                                   for c in self.star_cells(v) if c != v)
        return out

    def closed_star(self, v: Cell) -> frozenset:
        """Closure of :meth:`star_cells`, the star of ``v`` as a subcomplex."""
        return frozenset(f for c in self.star_cells(v) for f in self.closure(c))


@dataclass(frozen=True)
class CubicalGrid(Ambient):
    """Cubical complex of a path (``shape=(n,)``) or a pixel grid (``(w, h)``).

    ``shape`` counts vertices (pixels) per axis.
    """

    shape: tuple
    _closure: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _star: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _faces: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _cofaces: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _vertices: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _closed_star: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if len(shape) not in (1, 2) or min(shape) < 1:
            raise DomainError(f"unsupported grid shape {self.shape!r}")
        object.__setattr__(self, "shape", shape)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def kind(self) -> str:
        return "path" if self.ndim == 1 else "grid2d"

    def vertex(self, *pixel: int) -> Cell:
        return tuple(2 * p for p in pixel)

    def dim(self, c: Cell) -> int:
        return (c[0] & 1) + (c[1] & 1) if len(c) == 2 else c[0] & 1

    def contains(self, c: Cell) -> bool:
        return len(c) == self.ndim and all(0 <= x <= 2 * (n - 1) for x, n in zip(c, self.shape))

    def faces(self, c: Cell) -> tuple:
        out = self._faces.get(c)
        if out is None:
            out = []
            for a, x in enumerate(c):
                if x & 1:
                    out.append(c[:a] + (x - 1,) + c[a + 1:])
                    out.append(c[:a] + (x + 1,) + c[a + 1:])
            out = self._faces[c] = tuple(out)
        return out

    def cofaces(self, c: Cell) -> tuple:
        out = self._cofaces.get(c)
        if out is None:
            out = self._cofaces[c] = self._make_cofaces(c)
        return out

    def _make_cofaces(self, c: Cell) -> tuple:
        out = []
        for a, x in enumerate(c):
            if not x & 1:
                top = 2 * (self.shape[a] - 1)
                if x > 0:
                    out.append(c[:a] + (x - 1,) + c[a + 1:])
                if x < top:
                    out.append(c[:a] + (x + 1,) + c[a + 1:])
        return tuple(out)

    def vertices(self, c: Cell) -> tuple:
        out = self._vertices.get(c)
        if out is None:
            out = tuple(itertools.product(*(((x - 1, x + 1) if x & 1 else (x,)) for x in c)))
            self._vertices[c] = out
        return out

    def closure(self, c: Cell) -> tuple:
        out = self._closure.get(c)
        if out is None:
            out = tuple(itertools.product(*(((x - 1, x, x + 1) if x & 1 else (x,)) for x in c)))
            self._closure[c] = out
        return out

    def star_cells(self, v: Cell) -> tuple:
        out = self._star.get(v)
        if out is None:
            axes = []
            for x, n in zip(v, self.shape):
                axes.append(tuple(y for y in (x - 1, x, x + 1) if 0 <= y <= 2 * (n - 1)))
            out = tuple(itertools.product(*axes))
            self._star[v] = out
        return out

    def closed_star(self, v: Cell) -> frozenset:
        out = self._closed_star.get(v)
        if out is None:
            axes = []
            for x, n in zip(v, self.shape):
                axes.append(range(max(x - 2, 0), min(x + 2, 2 * (n - 1)) + 1))
            out = self._closed_star[v] = frozenset(itertools.product(*axes))
        return out

    def cells(self) -> Iterator[Cell]:
        return itertools.product(*(range(2 * n - 1) for n in self.shape))

    @property
    def diameter(self) -> int:
        return max(self.shape)

    def box(self, lo: tuple, hi: tuple) -> "Subcomplex":
        """Full subcomplex spanned by the pixels ``lo <= p <= hi`` (inclusive, clamped)."""
        ranges = []
        for a, n in enumerate(self.shape):
            l, h = max(lo[a], 0), min(hi[a], n - 1)
            if l > h:
                return Subcomplex(self, frozenset())
            ranges.append(range(2 * l, 2 * h + 1))
        return Subcomplex(self, frozenset(itertools.product(*ranges)))


class Tree(Ambient):
    """A finite simplicial tree rooted at ``root``, each edge of length 1."""

    def __init__(self, edges: Iterable[tuple], root: Optional[int] = None, vertices: Iterable = ()):
        adj: dict = {v: [] for v in vertices}
        for u, v in edges:
            if u == v:
                raise DomainError(f"self-loop at {u}")
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        if not adj:
            raise DomainError("empty tree")
        if root is None:
            root = min(adj)
        if root not in adj:
            raise DomainError(f"root {root!r} is not a vertex")
        self.root = root
        self.adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}
        parent = {root: None}
        depth = {root: 0}
        order = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in self.adj[u]:
                if w in parent:
                    if parent[u] != w:
                        raise DomainError("graph has a cycle")
                    continue
                parent[w] = u
                depth[w] = depth[u] + 1
                order.append(w)
                queue.append(w)
        if len(parent) != len(self.adj):
            raise DomainError("graph is disconnected")
        if sum(len(ns) for ns in self.adj.values()) != 2 * (len(self.adj) - 1):
            raise DomainError("graph has a cycle")
        self.parent = parent
        self.depth = depth
        self.bfs_order = order
        self.children = {v: tuple(w for w in self.adj[v] if parent.get(w) == v) for v in self.adj}

    def __repr__(self):
        return f"Tree(n={len(self.adj)}, root={self.root!r})"

    @property
    def kind(self) -> str:
        return "tree"

    def __len__(self):
        return len(self.adj)

    def dim(self, c: Cell) -> int:
        return len(c) - 1

    def contains(self, c: Cell) -> bool:
        if len(c) == 1:
            return c[0] in self.adj
        if len(c) == 2:
            u, v = c
            return u < v and u in self.adj and v in self.adj[u]
        return False

    def faces(self, c: Cell) -> tuple:
        return ((c[0],), (c[1],)) if len(c) == 2 else ()

    def cofaces(self, c: Cell) -> tuple:
        if len(c) != 1:
            return ()
        v = c[0]
        return tuple((min(v, w), max(v, w)) for w in self.adj[v])

    def vertices(self, c: Cell) -> tuple:
        return tuple((v,) for v in c)

    def closure(self, c: Cell) -> tuple:
        return (c, (c[0],), (c[1],)) if len(c) == 2 else (c,)

    def star_cells(self, v: Cell) -> tuple:
        return (v,) + self.cofaces(v)

    def cells(self) -> Iterator[Cell]:
        for v in self.adj:
            yield (v,)
            for w in self.adj[v]:
                if v < w:
                    yield (v, w)

    def edge(self, u, v) -> Cell:
        return (u, v) if u < v else (v, u)

    def distances_from(self, v) -> dict:
        """Path-metric distances from ``v`` to every vertex (BFS)."""
        dist = {v: 0}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in self.adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def is_ancestor(self, a, t) -> bool:
        """True when ``a`` lies on the geodesic from the root to ``t`` (``a == t`` allowed)."""
        da = self.depth[a]
        while t is not None and self.depth[t] > da:
            t = self.parent[t]
        return t == a

    def distance(self, u, v) -> int:
        du, dv = self.depth[u], self.depth[v]
        d = 0
        while du > dv:
            u, du, d = self.parent[u], du - 1, d + 1
        while dv > du:
            v, dv, d = self.parent[v], dv - 1, d + 1
        while u != v:
            u, v, d = self.parent[u], self.parent[v], d + 2
        return d

    @cached_property
    def diameter(self) -> int:
        far = self.distances_from(self.root)
        a = max(far, key=far.get)
        far = self.distances_from(a)
        return max(far.values())


@dataclass(frozen=True, eq=False)
class Subcomplex:
    """A set of cells of an ambient complex, normally closed under faces.

    Equality compares the ambient and the cell set; iteration is in canonical
    (lexicographic) cell order.
    """

    ambient: Ambient
    cells: frozenset

    def __eq__(self, other):
        if not isinstance(other, Subcomplex):
            return NotImplemented
        return self.ambient == other.ambient and self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __len__(self):
        return len(self.cells)

    def __contains__(self, c):
        return c in self.cells

    def __iter__(self):
        return iter(self.sorted())

    def __bool__(self):
        return bool(self.cells)

    def __repr__(self):
        return f"Subcomplex({len(self.cells)} cells of {self.ambient!r})"

    def sorted(self) -> list:
        return sorted(self.cells)

    @cached_property
    def vertex_list(self) -> tuple:
        dim = self.ambient.dim
        return tuple(c for c in self.cells if dim(c) == 0)

    def _check(self, other: "Subcomplex"):
        if self.ambient is not other.ambient and self.ambient != other.ambient:
            raise DomainError("subcomplexes live in different ambient complexes")

    def __or__(self, other: "Subcomplex") -> "Subcomplex":
        self._check(other)
        return Subcomplex(self.ambient, self.cells | other.cells)

    def __and__(self, other: "Subcomplex") -> "Subcomplex":
        self._check(other)
        return Subcomplex(self.ambient, self.cells & other.cells)

    def __sub__(self, other: "Subcomplex") -> frozenset:
        """Raw cell-set difference; generally not a closed subcomplex."""
        self._check(other)
        return self.cells - other.cells

    def __le__(self, other: "Subcomplex") -> bool:
        self._check(other)
        return self.cells <= other.cells

    def is_closed(self) -> bool:
        faces = self.ambient.faces
        return all(f in self.cells for c in self.cells for f in faces(c))

    def cofaces(self, c: Cell) -> frozenset:
        """Codimension-1 cofaces of ``c`` lying in this subcomplex."""
        if c not in self.cells:
            raise DomainError(f"cell {c!r} is not in the subcomplex")
        return frozenset(t for t in self.ambient.cofaces(c) if t in self.cells)


def full(ambient: Ambient) -> Subcomplex:
    return Subcomplex(ambient, frozenset(ambient.cells()))


def closure(ambient: Ambient, cells: Iterable[Cell]) -> Subcomplex:
    """Smallest subcomplex containing ``cells``."""
    cl = ambient.closure
    out = set()
    for c in cells:
        if not ambient.contains(c):
            raise DomainError(f"{c!r} is not a cell of {ambient!r}")
        out.update(cl(c))
    return Subcomplex(ambient, frozenset(out))


def union(*parts: Subcomplex) -> Subcomplex:
    out = parts[0]
    for p in parts[1:]:
        out = out | p
    return out


def intersect(*parts: Subcomplex) -> Subcomplex:
    out = parts[0]
    for p in parts[1:]:
        out = out & p
    return out


def difference(S: Subcomplex, T: Subcomplex) -> frozenset:
    return S - T


def complement_closure(S: Subcomplex, within: Optional[Subcomplex] = None) -> Subcomplex:
    """Closure of the cells of ``within`` (default: the ambient) not in ``S``."""
    base = within.cells if within is not None else frozenset(S.ambient.cells())
    return closure(S.ambient, base - S.cells)


def neighborhood(S: Subcomplex, n: int, within: Optional[Subcomplex] = None) -> Subcomplex:
    """The ``n``-neighborhood ``S[n]``: ``n`` iterated stars of ``S``.

    Cells are adjacent when their closures meet; in a cubical or simplicial
    complex that happens exactly when they share a vertex. With ``within``
    given, stars are taken inside that subcomplex instead of the ambient.
    """
    if n < 0:
        raise DomainError("neighborhood radius must be nonnegative")
    amb = S.ambient
    limit = within.cells if within is not None else None
    if limit is not None and not S.cells <= limit:
        raise DomainError("subcomplex is not contained in the restricting complex")
    cells = set(S.cells)
    dim, star, cl, cstar = amb.dim, amb.star_cells, amb.closure, amb.closed_star
    frontier = list(S.vertex_list)
    seen_vertices = set(frontier)
    for _ in range(n):
        if not frontier:
            break
        added = set()
        for v in frontier:
            st = star(v)
            if limit is None or limit.issuperset(st):
                added |= cstar(v)
            else:
                for c in st:
                    if c in limit:
                        added.update(cl(c))
        added -= cells
        cells |= added
        frontier = [c for c in added if dim(c) == 0 and c not in seen_vertices]
        seen_vertices.update(frontier)
    return Subcomplex(amb, frozenset(cells))


def k_border(S: Subcomplex, k: int, within: Optional[Subcomplex] = None) -> frozenset:
    """Cells of ``S`` whose ``k``-neighborhood is not contained in ``S``."""
    if k < 1:
        raise DomainError("k must be positive")
    amb = S.ambient
    out = set()
    for c in S.cells:
        nb = neighborhood(Subcomplex(amb, frozenset(amb.closure(c))), k, within)
        if not nb.cells <= S.cells:
            out.add(c)
    return frozenset(out)


def directional_enlarge(S: Subcomplex, a: int, b: int) -> Subcomplex:
    """``S[a, b]``: ``a`` horizontal stars followed by ``b`` vertical stars.

    A horizontal star adds every cell obtained from a cell of ``S`` by giving
    it extent along the horizontal axis, plus faces. ``S[n, n]`` equals
    ``neighborhood(S, n)`` on a 2D grid.
    """
    amb = S.ambient
    if not isinstance(amb, CubicalGrid) or amb.ndim != 2:
        raise DomainError("directional enlargement needs a 2D grid")
    if a < 0 or b < 0:
        raise DomainError("enlargement radii must be nonnegative")
    cells = set(S.cells)
    for axis, steps in ((0, a), (1, b)):
        top = 2 * (amb.shape[axis] - 1)
        for _ in range(steps):
            added = set()
            for c in cells:
                x = c[axis]
                if x & 1:
                    continue
                for y in (x - 1, x + 1):
                    if 0 <= y <= top:
                        t = c[:axis] + (y,) + c[axis + 1:]
                        added.update(amb.closure(t))
            cells |= added
    return Subcomplex(amb, frozenset(cells))


def antithetic_witness(U: Subcomplex, W: Subcomplex, n_max: Optional[int] = None,
                       within: Optional[Subcomplex] = None) -> Optional[int]:
    """First ``n <= n_max`` with ``(U & W)[n] != U[n] & W[n]``, or None.

    ``n_max`` defaults to the ambient diameter; the scan stops early once all
    three neighborhoods are stable.
    """
    U._check(W)
    if n_max is None:
        n_max = U.ambient.diameter
    cap, u, w = U & W, U, W
    for n in range(n_max + 1):
        if cap != (u & w):
            return n
        if n == n_max:
            break
        nxt = (neighborhood(cap, 1, within), neighborhood(u, 1, within), neighborhood(w, 1, within))
        if nxt[0] == cap and nxt[1] == u and nxt[2] == w:
            break
        cap, u, w = nxt
    return None


def is_antithetic(U: Subcomplex, W: Subcomplex, n_max: Optional[int] = None,
                  within: Optional[Subcomplex] = None) -> bool:
    return antithetic_witness(U, W, n_max, within) is None
