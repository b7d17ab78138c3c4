import csv
from fractions import Fraction

import networkx as nx
import pytest

from hegtree.groupcore import is_finite_order, primitive_root
from hegtree.treeact import (
    InconclusiveError,
    PreconditionError,
    classify,
    closure_index,
    common_conjugator_into_factor,
    elementary_closure,
    epsilon_axis,
    fixed_subtree,
    in_cyclic_subgroup,
    length_function,
    root_count,
    serre_fixed_point,
    stable_norm,
    translation_length,
    tree_center,
)


def ball_graph(action, radius):
    ball = action.ball(radius)
    G = nx.Graph()
    for v in ball:
        for w in action.neighbors(v):
            if w in ball:
                G.add_edge(v, w)
    return ball, G


@pytest.mark.parametrize("name", ["z23_tree", "amalgam_tree", "mixed_tree", "f2_tree"])
def test_ball_is_a_tree_and_distances_match_bfs(name, request):
    action = request.getfixturevalue(name)
    radius = 6 if name in ("z23_tree", "amalgam_tree") else 4
    ball, G = ball_graph(action, radius)
    assert nx.is_tree(G)
    sample = sorted(ball)[:40]
    for u in sample:
        lengths = nx.single_source_shortest_path_length(G, u)
        for v, d in lengths.items():
            assert action.distance(u, v) == d
    for v, r in ball.items():
        assert action.depth(v) == r


def test_ball_layers_consistent(z23_tree):
    big = z23_tree.ball(8)
    small = z23_tree.ball(5)
    assert {v for v, r in big.items() if r <= 5} == set(small)
    assert len(z23_tree.ball(8)) == 91


def test_act_examples(z23, z23_tree):
    A = z23_tree.factor_vertex(0)
    assert z23_tree.act(z23.identity(), A) == A
    assert z23_tree.act(z23.parse("s"), A) == A
    v = z23_tree.act(z23.parse("s t"), A)
    assert z23_tree.distance(A, v) == 2


def test_action_is_isometric(z23, z23_tree):
    verts = sorted(z23_tree.ball(4))
    for g in z23.ball(3):
        for u in verts[::5]:
            for v in verts[::7]:
                assert z23_tree.distance(z23_tree.act(g, u), z23_tree.act(g, v)) == z23_tree.distance(u, v)


def test_classify_examples(z23, z23_tree):
    c = classify(z23.parse("s"), z23_tree)
    assert c.is_elliptic and c.fixed_vertex == z23_tree.factor_vertex(0)
    c = classify(z23.parse("s t"), z23_tree)
    assert c.is_loxodromic and c.length == 2
    for k in range(1, 6):
        assert translation_length(z23.parse("s t") ** k, z23_tree) == 2 * k


def test_translation_length_examples(z23, z23_tree):
    assert translation_length(z23.identity(), z23_tree) == 0
    assert translation_length(z23.parse("t"), z23_tree) == 0
    g = z23.parse("s t s t2")
    ball = z23_tree.ball(10)
    brute = min(z23_tree.distance(x, z23_tree.act(g, x)) for x in ball)
    assert translation_length(g, z23_tree) == brute == 4


@pytest.mark.parametrize("name", ["z23_tree", "amalgam_tree", "mixed_tree"])
def test_dichotomy_and_fixed_vertex(name, request):
    action = request.getfixturevalue(name)
    for g in action.spec.ball(4 if name != "mixed_tree" else 3):
        c = classify(g, action)
        assert c.is_elliptic != c.is_loxodromic
        if c.is_elliptic:
            assert action.act(g, c.fixed_vertex) == c.fixed_vertex
            assert is_finite_order(g) or g.is_identity()
        else:
            w = c.axis_window(2)
            assert action.act(g, w[0]) == w[c.length]


def test_conjugation_and_power_invariance(z23, z23_tree):
    pool = z23.ball(4)
    hs = z23.ball(2)
    for g in pool:
        tl = translation_length(g, z23_tree)
        for h in hs:
            assert translation_length(h * g * h.inverse(), z23_tree) == tl
        for k in range(-5, 6):
            assert translation_length(g ** k, z23_tree) == abs(k) * tl


def test_stable_norm_examples(z23, z23_tree, f2, f2_tree):
    exact, seq = stable_norm(z23.parse("s t"), z23_tree, 6)
    assert exact == 2 and seq == [Fraction(2)] * 6
    exact, seq = stable_norm(f2.parse("x"), f2_tree, 4)
    assert exact == 1 and all(r == 1 for r in seq)
    exact, seq = stable_norm(z23.parse("t"), z23_tree, 5)
    assert exact == 0 and all(r >= 0 for r in seq)
    g = z23.parse("t s t s t2 t2")
    exact, seq = stable_norm(g, z23_tree, 8)
    assert all(r >= exact for r in seq)
    assert seq[-1] - exact <= seq[0] - exact


def test_length_function_tree_law(z23, z23_tree):
    for g in z23.ball(5):
        c = classify(g, z23_tree)
        if not c.is_loxodromic:
            continue
        # the window runs forward from the axis point, so pull it back too
        window = c.axis_window(6)
        back = [z23_tree.act(g ** -3, x) for x in window]
        d_axis = min(z23_tree.distance(z23_tree.base, x) for x in window + back)
        for n in range(1, 5):
            assert length_function(g ** n, z23_tree) == n * c.length + 2 * d_axis


def test_epsilon_axis(z23, z23_tree):
    g = z23.parse("s t")
    ax = epsilon_axis(g, 0, z23_tree, 5)
    assert z23_tree.base in ax
    assert all(z23_tree.distance(x, z23_tree.act(g, x)) == 2 for x in ax)
    # the axis is a line: every vertex on it has exactly two axis neighbours unless at the ball edge
    assert len(epsilon_axis(g, 20, z23_tree, 4)) == len(z23_tree.ball(4))
    fix = fixed_subtree(z23.parse("t"), z23_tree, 3)
    assert z23_tree.factor_vertex(1) in fix
    assert all(z23_tree.act(z23.parse("t"), v) == v for v in fix)


def test_serre_fixed_point_examples(z23, z23_tree):
    s = z23.parse("s")
    assert serre_fixed_point([s, s.inverse()], z23_tree).vertex == z23_tree.factor_vertex(0)
    assert serre_fixed_point([], z23_tree).vertex == z23_tree.base
    w = z23.parse("s t s t2 s t")
    t = z23.parse("t")
    X = [t, t.inverse(), w * s * w.inverse(), w * s.inverse() * w.inverse()]
    res = serre_fixed_point(X, z23_tree)
    assert not res.ok
    a, b = res.witness
    assert classify(a * b, z23_tree).is_loxodromic
    with pytest.raises(PreconditionError):
        serre_fixed_point([t], z23_tree)


def test_serre_success_means_elliptic_subgroup(z23, z23_tree):
    h = z23.parse("t s")
    X = [h * z23.parse("t") * h.inverse(), h * z23.parse("t2") * h.inverse()]
    res = serre_fixed_point(X, z23_tree)
    assert res.ok
    words = [z23.identity()]
    for _ in range(4):
        words = [u * x for u in words for x in X]
        assert all(classify(u, z23_tree).is_elliptic for u in words)


def test_tree_center_examples(z23, z23_tree):
    g = z23.parse("s t")
    path = z23_tree.geodesic(z23_tree.base, z23_tree.act(g ** 2, z23_tree.base))
    assert len(path) == 5
    assert tree_center(path, z23_tree) == path[2]
    assert tree_center([path[0]], z23_tree) == path[0]
    centre = tree_center(path[:4], z23_tree)
    assert set(centre) == {path[1], path[2]}
    with pytest.raises(PreconditionError):
        tree_center([path[0], path[2]], z23_tree)


def test_common_conjugator_examples(z23, z23_tree):
    res = common_conjugator_into_factor([z23.parse("t s t2"), z23.parse("t s^-1 t2")], z23_tree)
    assert res.ok and res.factor == 0 and res.conjugator == z23.parse("t")
    res = common_conjugator_into_factor([z23.parse("s"), z23.parse("t")], z23_tree)
    assert not res.ok
    assert classify(res.witness[0] * res.witness[1], z23_tree).is_loxodromic
    res = common_conjugator_into_factor([], z23_tree)
    assert res.ok and res.factor == 0 and res.conjugator.is_identity()


def test_root_count_examples(z23, z23_tree, f2, f2_tree):
    st_ = z23.parse("s t")
    assert root_count(st_ ** 2, 2, z23_tree) == (1, [st_])
    assert root_count(st_, 2, z23_tree) == (0, [])
    x = f2.parse("x")
    assert root_count(x ** 2, 2, f2_tree) == (1, [x])
    with pytest.raises(PreconditionError):
        root_count(z23.parse("t"), 2, z23_tree)


def test_root_count_complete_in_amalgam(amalgam, amalgam_tree):
    pool = amalgam.ball(4)
    for a in pool[::7]:
        if not classify(a, amalgam_tree).is_loxodromic:
            continue
        for m in (1, 2, 3):
            count, roots = root_count(a, m, amalgam_tree)
            brute = sorted(b for b in pool if b ** m == a)
            assert set(brute) <= set(roots)
            assert all(b ** m == a for b in roots)
            assert count <= len(amalgam.edge_group)


def test_elementary_closure_examples(z23, z23_tree, f2, f2_tree):
    x = f2.parse("x")
    E = elementary_closure(x ** 2, f2_tree, 3)
    assert E == sorted(x ** k for k in range(-3, 4))
    E = elementary_closure(z23.parse("s t"), z23_tree, 2)
    assert all(in_cyclic_subgroup(f, z23.parse("s t"), z23_tree) for f in E)
    xy = f2.parse("x y")
    E = elementary_closure(xy, f2_tree, 4)
    assert E == sorted(xy ** k for k in range(-2, 3))
    z, _ = primitive_root(x ** 2)
    assert closure_index(x ** 2, f2_tree, 3) == 1 and z == x
    with pytest.raises(PreconditionError):
        elementary_closure(z23.parse("t"), z23_tree, 2)


def test_export_ball_csv(tmp_path, z23_tree):
    path = tmp_path / "ball.csv"
    z23_tree.export_ball_csv(3, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["parent", "child", "representative"]
    assert len(rows) - 1 == len(z23_tree.ball(3)) - 1


def test_f2_uses_cayley_tree(f2, f2_tree):
    assert translation_length(f2.parse("x"), f2_tree) == 1
    assert translation_length(f2.parse("x y x^-1"), f2_tree) == 1
    assert length_function(f2.parse("x y x^-1"), f2_tree) == 3


def test_inconclusive_is_an_exception():
    assert issubclass(InconclusiveError, Exception)
