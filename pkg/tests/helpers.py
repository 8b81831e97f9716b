"""Shared builders for the test suite."""
from morsemerge.complex import CubicalGrid, closure, full
from morsemerge.pls import uniquify

ACCEPTANCE_LINES = []

# four-pixel path with values 1, 3, 4, 2 at positions 0..3
PATH_VALUES = (1, 3, 4, 2)


def example_path():
    """``(grid, K, U, W, values)``; vertex labels are the values, so ``(4,)`` is "vertex 4"."""
    G = CubicalGrid((4,))
    K = full(G)
    values = {(2 * i,): v for i, v in enumerate(PATH_VALUES)}
    U = G.box((0,), (2,))
    W = G.box((1,), (3,))
    return G, K, U, W, values


def cell_named(name):
    """Cells of the example path named by vertex value, so "43" is the edge between 4 and 3."""
    pos = {v: 2 * i for i, v in enumerate(PATH_VALUES)}
    if len(name) == 1:
        return (pos[int(name)],)
    a, b = pos[int(name[0])], pos[int(name[1])]
    return ((a + b) // 2,)


def pair(a, b):
    return (cell_named(a), cell_named(b))


def random_values(K, rng, levels=256):
    return uniquify({v: rng.randrange(levels) for v in K.vertex_list})


def random_image(rng, w, h, levels=256):
    G = CubicalGrid((w, h))
    K = full(G)
    return G, K, random_values(K, rng, levels)


def random_rectangle_cover(G, rng):
    """A random pixel rectangle ``U`` and the closure of the rest of the grid."""
    lo, hi = [], []
    for n in G.shape:
        a, b = sorted(rng.sample(range(n), 2)) if n > 1 else (0, 0)
        lo.append(a)
        hi.append(b)
    K = full(G)
    U = G.box(tuple(lo), tuple(hi))
    W = closure(G, K.cells - U.cells)
    if not W:
        W = U
    return U, W


def strip_cover(G, rng, axis=0, min_overlap=1):
    """Strips ``[0, c]`` and ``[b, n-1]`` along ``axis`` sharing ``c - b + 1 >= min_overlap`` pixels.

    Needs ``n >= min_overlap + 2`` pixels along the axis.
    """
    n = G.shape[axis]
    top = tuple(s - 1 for s in G.shape)
    b = rng.randint(1, n - 1 - min_overlap)
    c = rng.randint(b + min_overlap - 1, n - 2)
    lo_u, hi_u = [0, 0], list(top)
    lo_w, hi_w = [0, 0], list(top)
    hi_u[axis] = c
    lo_w[axis] = b
    return G.box(tuple(lo_u), tuple(hi_u)), G.box(tuple(lo_w), tuple(hi_w))


def random_subcomplex(G, rng, density=0.3):
    cells = [c for c in G.cells() if rng.random() < density]
    return closure(G, cells)

