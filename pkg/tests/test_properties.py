import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from helpers import random_rectangle_cover, random_subcomplex
from morsemerge.cli import FieldReport, format_report, parse_report
from morsemerge.complex import CubicalGrid, closure, full, k_border, neighborhood
from morsemerge.merge import merge_cor_antithetic, merge_cor_intersection, merge_thm_general, recover_critical
from morsemerge.pls import ProcessLowerStars, field_problems, process_lower_stars, uniquify
from morsemerge.trees import HypercubeIndex, product_cover, random_tree

PLS = ProcessLowerStars()
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def grids(draw, max_side=7):
    ndim = draw(st.integers(1, 2))
    shape = tuple(draw(st.integers(1, max_side)) for _ in range(ndim))
    return CubicalGrid(shape)


@st.composite
def subcomplexes(draw, max_side=7):
    G = draw(grids(max_side))
    rng = random.Random(draw(st.integers(0, 2 ** 32)))
    return G, random_subcomplex(G, rng, draw(st.floats(0.05, 0.6)))


@st.composite
def valued_images(draw, max_side=8):
    G = draw(grids(max_side))
    K = full(G)
    raw = draw(st.lists(st.integers(0, 15), min_size=len(K.vertex_list), max_size=len(K.vertex_list)))
    return G, K, uniquify(dict(zip(K.vertex_list, raw)))


@FAST
@given(subcomplexes(), st.integers(0, 3))
def test_neighborhoods_closed_and_monotone(gs, n):
    G, S = gs
    assert S.is_closed()
    N = neighborhood(S, n)
    assert N.is_closed()
    assert S <= neighborhood(S, 1) or not S
    assert N <= neighborhood(S, n + 1)


@FAST
@given(grids())
def test_whole_complex_is_its_own_neighborhood(G):
    K = full(G)
    assert neighborhood(K, 1) == K


@FAST
@given(grids(), st.data())
def test_encoding_soundness(G, data):
    c = data.draw(st.sampled_from(sorted(G.cells())))
    assert len(G.faces(c)) == 2 * G.dim(c)
    for d in G.cofaces(c):
        assert c in G.faces(d)
    assert set(closure(G, [c]).cells) == set(G.closure(c))


@FAST
@given(subcomplexes(), st.integers(1, 2))
def test_k_border_inside(gs, k):
    G, S = gs
    B = k_border(S, k)
    assert B <= S.cells
    assert (not B) == (neighborhood(S, k) == S)


@FAST
@given(valued_images())
def test_pls_partition_and_faces(img):
    G, K, vals = img
    V, C = process_lower_stars(K, vals)
    assert field_problems(K, V, C) == []
    for s, t in V:
        # both cells sit in the lower star of the same vertex
        top = lambda c: max(G.vertices(c), key=vals.__getitem__)
        assert top(s) == top(t)


@FAST
@given(valued_images())
def test_monotone_invariance(img):
    G, K, vals = img
    bent = {v: 3 * x ** 3 - 7 for v, x in vals.items()}
    assert process_lower_stars(K, vals) == process_lower_stars(K, bent)


@FAST
@given(st.integers(2, 4), st.integers(0, 2 ** 32))
def test_disjoint_union_identity(pieces, seed):
    rng = random.Random(seed)
    G = CubicalGrid((4 * pieces, 5))
    comps = [G.box((4 * i, 0), (4 * i + rng.randint(0, 2), rng.randint(0, 4))) for i in range(pieces)]
    K = comps[0]
    for c in comps[1:]:
        K = K | c
    vals = uniquify({v: rng.randrange(9) for v in full(G).vertex_list})
    whole = process_lower_stars(K, vals)[0]
    assert whole == frozenset().union(*(process_lower_stars(c, vals)[0] for c in comps))


@FAST
@given(valued_images(max_side=7), st.integers(0, 2 ** 32))
def test_merge_variants_equal_oracle(img, seed):
    G, K, vals = img
    U, W = random_rectangle_cover(G, random.Random(seed))
    V = process_lower_stars(K, vals)[0]
    assert merge_thm_general(PLS, K, U, W, vals) == V
    assert merge_cor_intersection(PLS, K, U, W, vals) == V
    assert merge_cor_antithetic(PLS, K, U, W, vals) == V
    assert recover_critical(K, V) == process_lower_stars(K, vals)[1]


@FAST
@given(st.dictionaries(st.tuples(st.integers(0, 30)), st.integers(0, 5), min_size=1, max_size=20))
def test_uniquify_preserves_strict_order(raw):
    u = uniquify(raw)
    assert len(set(u.values())) == len(u)
    for a in raw:
        for b in raw:
            if raw[a] < raw[b]:
                assert u[a] < u[b]


@FAST
@given(valued_images(max_side=5))
def test_report_round_trip(img):
    G, K, vals = img
    V, C = process_lower_stars(K, vals)
    rep = FieldReport("grid " + "x".join(map(str, G.shape)), "oracle", V, C, metrics={"cells": len(K)})
    back = parse_report(format_report(rep))
    assert (back.V, back.C) == (V, C)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_strata_partition_the_index(seed):
    rng = random.Random(seed)
    trees = [random_tree(rng.randint(5, 25), rng) for _ in range(2)]
    pc = product_cover(trees, 2)
    strata = pc.strata()
    seen = [x for xs in strata.values() for x in xs]
    assert len(seen) == len(set(seen)) == len(pc.index)
    for s, xs in strata.items():
        assert all(isinstance(x, HypercubeIndex) and x.stratum() == s for x in xs)
