import random

import pytest

from helpers import (
    cell_named,
    example_path,
    pair,
    random_image,
    random_rectangle_cover,
    random_subcomplex,
    strip_cover,
)
from morsemerge.complex import (
    CubicalGrid,
    DomainError,
    complement_closure,
    full,
    is_antithetic,
    neighborhood,
)
from morsemerge.merge import (
    MergePlan,
    NotAntitheticError,
    merge_2d,
    merge_cor_antithetic,
    merge_cor_intersection,
    merge_thm_2d,
    merge_thm_general,
    naive_merge,
    recover_critical,
    run_algorithm1,
    strip_axis,
)
from morsemerge.pls import ProcessLowerStars, field_problems, process_lower_stars
from morsemerge.trees import build_jet_cover, path_tree

PLS = ProcessLowerStars()


def oracle(K, vals):
    return process_lower_stars(K, vals)


def test_naive_merge_example_fails():
    G, K, U, W, vals = example_path()
    V, ok = naive_merge(PLS.run(U, vals)[0], PLS.run(W, vals)[0])
    assert V == {pair("3", "31"), pair("4", "43"), pair("4", "42")}
    assert not ok
    assert V != oracle(K, vals)[0]
    assert V - oracle(K, vals)[0] == {pair("4", "43")}


def test_naive_merge_trivial_cases():
    G, K, U, W, vals = example_path()
    VU = PLS.run(U, vals)[0]
    assert naive_merge(VU, VU) == (VU, True)
    G = CubicalGrid((7, 3))
    a, b = G.box((0, 0), (1, 2)), G.box((4, 0), (6, 2))
    vals = {v: i for i, v in enumerate(full(G).vertex_list)}
    assert naive_merge(PLS.run(a, vals)[0], PLS.run(b, vals)[0])[1]


@pytest.mark.parametrize("merge", [merge_thm_general, merge_cor_intersection])
def test_example_merges(merge):
    G, K, U, W, vals = example_path()
    assert merge(PLS, K, U, W, vals) == {pair("3", "31"), pair("4", "42")}


def test_whole_complex_cover():
    G, K, vals = random_image(random.Random(3), 6, 6)
    V = oracle(K, vals)[0]
    assert merge_thm_general(PLS, K, K, K, vals) == V
    assert merge_cor_intersection(PLS, K, K, K, vals) == V
    assert merge_cor_antithetic(PLS, K, K, K, vals) == V


def test_random_strip_covers(rng):
    for _ in range(15):
        G, K, vals = random_image(rng, 16, 16)
        U, W = strip_cover(G, rng, axis=rng.randint(0, 1))
        V = oracle(K, vals)[0]
        stats = {}
        assert merge_thm_general(PLS, K, U, W, vals) == V
        assert merge_cor_intersection(PLS, K, U, W, vals) == V
        assert merge_cor_antithetic(PLS, K, U, W, vals, stats=stats) == V
        assert stats["cap_k"] < len(K)


def test_random_rectangle_covers(rng):
    for _ in range(15):
        G, K, vals = random_image(rng, rng.randint(3, 12), rng.randint(3, 12))
        U, W = random_rectangle_cover(G, rng)
        V = oracle(K, vals)[0]
        assert merge_thm_general(PLS, K, U, W, vals) == V
        assert merge_cor_intersection(PLS, K, U, W, vals) == V


def test_intersection_merge_two_patches_20x20(rng):
    G, K, vals = random_image(rng, 20, 20)
    U, W = G.box((0, 0), (10, 19)), G.box((10, 0), (19, 19))
    assert merge_cor_intersection(PLS, K, U, W, vals) == oracle(K, vals)[0]


def test_separated_cover_reduces_to_union(rng):
    G = CubicalGrid((9, 4))
    a, b = G.box((0, 0), (3, 3)), G.box((5, 0), (8, 3))
    K = a | b
    vals = {v: rng.random() for v in full(G).vertex_list}
    V = merge_cor_intersection(PLS, K, a, b, vals)
    assert V == PLS.run(a, vals)[0] | PLS.run(b, vals)[0] == oracle(K, vals)[0]


def test_containment_and_mistake_localisation(rng):
    for _ in range(10):
        G, K, vals = random_image(rng, 10, 9)
        U, W = random_rectangle_cover(G, rng)
        Uk, Wk = neighborhood(U, 1, K), neighborhood(W, 1, K)
        A, B = PLS.run(Uk, vals)[0], PLS.run(Wk, vals)[0]
        V = oracle(K, vals)[0]
        assert V <= A | B
        for s, t in (A | B) - V:
            assert s in (Uk & Wk).cells


def test_covers_are_antithetic_inside_their_union(rng):
    # with stars taken inside K = U | W, any closed cover is antithetic
    for _ in range(20):
        G, K, vals = random_image(rng, rng.randint(2, 9), rng.randint(2, 9))
        U = random_subcomplex(G, rng, 0.2)
        W = complement_closure(U, K) | random_subcomplex(G, rng, 0.1)
        assert is_antithetic(U, W, G.diameter, within=U | W)
        if U:
            assert merge_cor_antithetic(PLS, K, U, W, vals) == oracle(K, vals)[0]


def test_antithetic_rejection_reports_n(monkeypatch):
    import morsemerge.merge as merge_mod

    monkeypatch.setattr(merge_mod, "antithetic_witness", lambda *a, **kw: 2)
    G, K, U, W, vals = example_path()
    with pytest.raises(NotAntitheticError) as info:
        merge_cor_antithetic(PLS, K, U, W, vals)
    assert info.value.n == 2
    with pytest.raises(NotAntitheticError):
        MergePlan(K, U, W, "cor_antithetic").validate()


def test_cover_required():
    G, K, U, W, vals = example_path()
    with pytest.raises(DomainError):
        merge_thm_general(PLS, K, U, U, vals)


def test_thm_2d_examples(rng):
    G, K, vals = random_image(rng, 8, 8)
    U, W = G.box((0, 0), (4, 7)), G.box((3, 0), (7, 7))
    assert merge_2d(PLS, K, U, W, vals) == oracle(K, vals)[0]


def test_thm_2d_quiet_seam():
    # the overlap pixels hold the global minima, so nothing at the seam needs fixing
    G = CubicalGrid((8, 5))
    K = full(G)
    vals = {v: (0 if v[0] in (6, 8) else 1000) + 10 * v[0] + v[1] for v in K.vertex_list}
    U, W = G.box((0, 0), (4, 4)), G.box((3, 0), (7, 4))
    stats = {}
    assert merge_2d(PLS, K, U, W, vals, stats=stats) == oracle(K, vals)[0]
    assert stats["corrections"] == 0
    VU, VW = PLS.run(U, vals)[0], PLS.run(W, vals)[0]
    assert VU | VW == oracle(K, vals)[0]


def test_thm_2d_transposed(rng):
    G, K, vals = random_image(rng, 7, 9)
    U, W = G.box((0, 0), (6, 4)), G.box((0, 3), (6, 8))
    assert strip_axis(K, U, W) == 1
    V = merge_2d(PLS, K, U, W, vals)
    assert V == oracle(K, vals)[0]
    T = CubicalGrid((9, 7))
    tv = {(y, x): g for (x, y), g in vals.items()}
    TU, TW = T.box((0, 0), (4, 6)), T.box((3, 0), (8, 6))
    VT = merge_2d(PLS, full(T), TU, TW, tv)
    assert {((s[1], s[0]), (t[1], t[0])) for s, t in VT} == V


def test_thm_2d_preconditions():
    G = CubicalGrid((8, 4))
    K = full(G)
    vals = {v: i for i, v in enumerate(K.vertex_list)}
    with pytest.raises(DomainError):
        merge_2d(PLS, K, G.box((0, 0), (4, 3)), G.box((4, 0), (7, 3)), vals)
    with pytest.raises(DomainError):
        MergePlan(K, G.box((0, 0), (4, 3)), G.box((4, 0), (7, 3)), "thm_2d_pls").validate()


def test_recover_critical():
    G, K, U, W, vals = example_path()
    assert recover_critical(K, oracle(K, vals)[0]) == {cell_named(n) for n in ("1", "2", "43")}
    assert recover_critical(K, frozenset()) == K.cells
    with pytest.raises(DomainError):
        recover_critical(K, frozenset({pair("4", "43"), pair("4", "42")}))


def test_algorithm1(rng):
    G, K, U, W, vals = example_path()
    assert run_algorithm1(PLS, K, U, W, vals) == oracle(K, vals)
    G, K, vals = random_image(rng, 24, 24)
    U, W = G.box((0, 0), (12, 23)), G.box((12, 0), (23, 23))
    assert run_algorithm1(PLS, K, U, W, vals, workers=4) == oracle(K, vals)
    assert run_algorithm1(PLS, K, K, U, vals) == oracle(K, vals)


def test_merge_plan_variants_agree(rng):
    G, K, vals = random_image(rng, 12, 10)
    U, W = G.box((0, 0), (6, 9)), G.box((4, 0), (11, 9))
    fields = {v: MergePlan(K, U, W, v).run(PLS, vals)
              for v in ("thm_general", "cor_intersection", "cor_antithetic", "thm_2d_pls")}
    assert len(set(fields.values())) == 1
    V = fields["thm_general"]
    assert field_problems(K, V, recover_critical(K, V)) == []
    with pytest.raises(DomainError):
        MergePlan(K, U, W, "bogus").validate()


def test_tree_two_band_cover():
    T = path_tree(11)
    cover = build_jet_cover(T, 2)
    K = full(T)
    assert len(cover) == 3
    U = cover.sets[0] | cover.sets[1]
    W = cover.sets[2] | cover.sets[1]
    vals = {(v,): ((v * 7) % 13) + v / 100 for v in T.adj}
    assert merge_cor_antithetic(PLS, K, U, W, vals) == oracle(K, vals)[0]
    band1, band2 = cover.sets[1], cover.sets[2]
    K2 = band1 | band2
    assert merge_cor_antithetic(PLS, K2, band1, band2, vals) == oracle(K2, vals)[0]
