import random
from fractions import Fraction

import networkx as nx
import pytest

from hegtree.hypcheck import (
    FiniteGraphBall,
    GraphPath,
    axis_path,
    check_axis_lower_bound,
    four_point_delta,
    gamma_model_ball,
    gromov_product,
    hausdorff_distance,
    is_local_quasi_geodesic,
    is_quasi_geodesic,
    measure_delta,
    measure_delta_report,
)
from hegtree.treeact import PreconditionError, classify, epsilon_axis


def path_graph_ball(n):
    return FiniteGraphBall.from_edges([(i, i + 1) for i in range(n)])


def test_gromov_product_examples():
    # a triangle with d(C,A)=3, d(C,B)=4, d(A,B)=5 realised in a tree with legs 1, 2, 3 from a centre
    edges = [("C", "c1"), ("c1", "c2"), ("c2", "o"), ("o", "A"), ("o", "b1"), ("b1", "B")]
    ball = FiniteGraphBall.from_edges(edges)
    assert (ball.distance("C", "A"), ball.distance("C", "B"), ball.distance("A", "B")) == (4, 5, 3)
    assert gromov_product("A", "B", "C", ball) == Fraction(4 + 5 - 3, 2)
    G = nx.Graph()
    nx.add_path(G, ["C", "x", "y", "A"])
    nx.add_path(G, ["C", "p", "q", "r", "B"])
    nx.add_path(G, ["A", "u", "B"])
    H = FiniteGraphBall(G)
    assert gromov_product("A", "B", "C", H) == Fraction(3 + 4 - 2, 2)
    P = path_graph_ball(5)
    assert gromov_product(2, 2, 0, P) == 2
    assert gromov_product(0, 3, 0, P) == 0


def test_gromov_product_is_half_integer():
    ball = FiniteGraphBall.cycle(5)
    for a in range(5):
        for b in range(5):
            g = gromov_product(a, b, 0, ball)
            assert isinstance(g, Fraction) and (2 * g).denominator == 1


def test_delta_examples():
    assert measure_delta(FiniteGraphBall.from_edges([], vertices=["v"])) == 0
    assert measure_delta(path_graph_ball(6)) == 0
    C4 = FiniteGraphBall.cycle(4)
    # thin triangles measured at all metric-graph points give 2 on the square;
    # the four-point condition gives 1
    assert measure_delta(C4) == 2
    assert four_point_delta(C4) == 1
    # edge midpoints on the two sides at C are a whole unit apart
    assert measure_delta(FiniteGraphBall.cycle(3)) == 1


def test_delta_of_tree_balls_is_zero(z23_tree, amalgam_tree, f2_tree):
    for action, r in ((z23_tree, 6), (amalgam_tree, 4), (f2_tree, 3)):
        ball = FiniteGraphBall.from_tree_action(action, r)
        assert ball.is_tree()
        assert measure_delta(ball) == 0


def test_delta_report_modes():
    rep = measure_delta_report(FiniteGraphBall.cycle(6))
    assert rep.mode == "exhaustive" and rep.triples_examined == rep.triples_total
    big = gamma_model_ball(1, 4)
    rep = measure_delta_report(big, triple_budget=500, seed=3)
    assert rep.mode == "sampled" and rep.triples_examined == 500
    again = measure_delta_report(big, triple_budget=500, seed=3)
    assert rep.to_json() == again.to_json()
    rep = measure_delta_report(FiniteGraphBall.cycle(6), geodesics="canonical")
    assert rep.delta <= measure_delta(FiniteGraphBall.cycle(6))


def test_delta_agrees_with_brute_force_on_small_graphs():
    rng = random.Random(2)
    checked = 0
    while checked < 6:
        G = nx.gnm_random_graph(7, 9, seed=rng.randint(0, 10 ** 6))
        if not nx.is_connected(G):
            continue
        checked += 1
        assert measure_delta(FiniteGraphBall(G)) == brute_delta(G)


def brute_delta(G):
    """Tripod thinness on the barycentric subdivision, every geodesic enumerated.

    Subdividing turns edge midpoints into vertices and doubles distances, so
    points at parameter t on two sides from C are vertices at index 2t.
    """
    H = nx.Graph()
    for u, v in G.edges:
        H.add_edge(("v", u), ("m", u, v))
        H.add_edge(("m", u, v), ("v", v))
    dH = dict(nx.all_pairs_shortest_path_length(H))
    worst = 0
    V = [("v", x) for x in G]
    for c in V:
        for a in V:
            for b in V:
                insize2 = dH[c][a] + dH[c][b] - dH[a][b]   # twice the doubled product
                for p in nx.all_shortest_paths(H, c, a):
                    for q in nx.all_shortest_paths(H, c, b):
                        for t in range(insize2 // 2 + 1):
                            worst = max(worst, dH[p[t]][q[t]])
    return Fraction(worst, 2)


def test_quasi_geodesic_examples(z23, z23_tree):
    P = path_graph_ball(5)
    assert is_quasi_geodesic(GraphPath((0, 1, 2, 3), P)).ok
    back = GraphPath((0, 1, 0), P)
    res = is_quasi_geodesic(back)
    assert not res.ok and res.subpath(back) == (0, 1, 0) and res.slack == -2
    g = z23.parse("s t s t2")
    assert is_quasi_geodesic(axis_path(g, z23_tree, 3)).ok
    with pytest.raises(ValueError):
        GraphPath((0, 2), P)


def test_local_quasi_geodesic_examples():
    P = path_graph_ball(3)
    zig = GraphPath((0, 1, 0, 1, 0, 1), P)
    assert is_local_quasi_geodesic(zig, 1).ok
    assert not is_local_quasi_geodesic(zig, 2).ok
    straight = GraphPath((0, 1, 2, 3), P)
    for M in (1, 2, 5):
        assert is_local_quasi_geodesic(straight, M).ok
    assert is_quasi_geodesic(zig, kappa=5, eps=1).ok == is_local_quasi_geodesic(zig, 10, 5, 1).ok


def test_axis_windows_are_geodesic(z23, z23_tree, amalgam, amalgam_tree):
    for spec, action in ((z23, z23_tree), (amalgam, amalgam_tree)):
        for g in spec.ball(4):
            if classify(g, action).is_loxodromic:
                assert is_quasi_geodesic(axis_path(g, action, 3)).ok


def test_hausdorff_examples(z23, z23_tree):
    A = [z23_tree.base, z23_tree.factor_vertex(1)]
    assert hausdorff_distance(A, A, z23_tree) == 0
    v, w = A
    assert hausdorff_distance([v], [w], z23_tree) == z23_tree.distance(v, w)
    g = z23.parse("s t")
    ax2 = epsilon_axis(g ** 2, 0, z23_tree, 6)
    ax3 = epsilon_axis(g ** 3, 0, z23_tree, 6)
    assert hausdorff_distance(ax2, ax3, z23_tree) == 0


def test_hausdorff_is_pseudometric(z23_tree):
    verts = sorted(z23_tree.ball(4))
    rng = random.Random(7)
    for _ in range(60):
        A, B, C = (rng.sample(verts, rng.randint(1, 5)) for _ in range(3))
        dab = hausdorff_distance(A, B, z23_tree)
        assert dab == hausdorff_distance(B, A, z23_tree)
        assert dab <= hausdorff_distance(A, C, z23_tree) + hausdorff_distance(C, B, z23_tree)


def test_axis_lower_bound_examples(z23, z23_tree):
    g = z23.parse("s t")
    on = check_axis_lower_bound(g, z23_tree.base, z23_tree)
    assert on.ok and on.slack == 0 and on.displacement == on.translation == 2
    h = z23.parse("t s t")
    far = [v for v in z23_tree.ball(6)
           if check_axis_lower_bound(g, v, z23_tree).axis_distance == 3]
    assert far
    for v in far:
        res = check_axis_lower_bound(g, v, z23_tree)
        assert res.displacement == 2 + 6 and res.slack == 0
    with pytest.raises(PreconditionError):
        check_axis_lower_bound(z23.parse("t"), z23_tree.base, z23_tree)
    assert check_axis_lower_bound(h * g * h.inverse(), z23_tree.base, z23_tree).slack == 0


def test_gamma_model_small_radius():
    ball = gamma_model_ball(1, 3)
    assert not ball.is_tree()
    assert measure_delta(ball) <= 2


def test_csv_round_trip(tmp_path):
    ball = FiniteGraphBall.cycle(5)
    path = tmp_path / "c5.csv"
    ball.to_csv(path)
    again = FiniteGraphBall.from_csv(path)
    assert len(again) == 5 and measure_delta(again) == measure_delta(ball)
