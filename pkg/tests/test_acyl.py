import csv
import json

import pytest

from hegtree.acyl import (
    EXACT,
    ESTIMATE,
    SampleSpec,
    acyl_profile,
    bowditch_bound_check,
    check_power_length,
    coarse_stabilizer,
    estimate_product_constants,
    injectivity_radius,
    minimal_k,
    same_closure,
    segment_stabilizer,
    segments,
    verify_kn_acylindrical,
)
from hegtree.groupcore import FiniteGroup, GroupSpec
from hegtree.treeact import InconclusiveError, PreconditionError, TreeAction


def test_kn_examples(z23_tree, amalgam_tree):
    assert verify_kn_acylindrical(z23_tree, 1, 1, 6).ok
    res = verify_kn_acylindrical(z23_tree, 1, 0, 6)
    assert not res.ok and len(res.witness) == 2 and len(res.witness_stabilizer) == 1
    assert verify_kn_acylindrical(amalgam_tree, 1, 2, 5).ok
    assert not verify_kn_acylindrical(amalgam_tree, 2, 1, 5).ok
    assert minimal_k(amalgam_tree, 1, 6) == 3
    assert minimal_k(z23_tree, 1, 4) == 1
    with pytest.raises(ValueError):
        verify_kn_acylindrical(z23_tree, 0, 1, 3)


def test_free_products_are_1_1(mixed_tree, f2_tree, z23_tree):
    for action in (mixed_tree, f2_tree, z23_tree):
        assert verify_kn_acylindrical(action, 1, 1, 4).ok


def test_segments_are_geodesics(amalgam_tree):
    segs = list(segments(amalgam_tree, 3, 3))
    assert segs
    for p in segs:
        assert amalgam_tree.distance(p[0], p[-1]) == 3
    assert len(set(segs)) == len(segs)


def test_segment_stabilizer_matches_enumeration(amalgam, amalgam_tree):
    pool = amalgam.ball(5)
    for k in (1, 2, 3):
        for path in list(segments(amalgam_tree, k, 2))[::5]:
            stab = segment_stabilizer(path, amalgam_tree)
            assert all(all(amalgam_tree.act(g, v) == v for v in path) for g in stab)
            brute = {g for g in pool if all(amalgam_tree.act(g, v) == v for v in path)}
            assert brute <= set(stab)
            assert len(stab) == len(set(stab))


@pytest.mark.parametrize("name", ["z23_tree", "amalgam_tree", "mixed_tree"])
def test_coarse_stabilizer_complete(name, request):
    action = request.getfixturevalue(name)
    pool = action.spec.ball(5 if name != "mixed_tree" else 4)
    for u in sorted(action.ball(2))[:6]:
        for sigma in (2, 3):
            got = coarse_stabilizer(u, sigma, action)
            assert len(got) == len(set(got))
            assert all(action.distance(u, action.act(g, u)) < sigma for g in got)
            brute = {g for g in pool if action.distance(u, action.act(g, u)) < sigma}
            assert brute <= set(got)


def test_bowditch_examples(z23_tree, amalgam_tree):
    rep = bowditch_bound_check(z23_tree, 2, 1, 1, 8)
    assert rep.bound == 5 and rep.min_distance == 13
    assert rep.status == "pass" and rep.violations == 0 and rep.pairs_checked > 0
    assert rep.max_count <= rep.bound
    rep = bowditch_bound_check(amalgam_tree, 2, 1, 2, 7)
    assert rep.bound == 18 and rep.status == "pass"
    # no pair in a radius-6 ball is 13 apart, so nothing is checked
    rep = bowditch_bound_check(z23_tree, 2, 1, 1, 6)
    assert rep.status == "inconclusive" and rep.pairs_checked == 0
    assert "exhaustive" in rep.completeness
    json.dumps(rep.to_json())
    with pytest.raises(ValueError):
        bowditch_bound_check(z23_tree, 1, 1, 1, 4)


def test_acyl_profile(tmp_path, z23_tree):
    prof = acyl_profile(z23_tree, 1, 1, 6)
    assert prof.rows
    path = tmp_path / "profile.csv"
    prof.to_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == len(prof.rows)


def test_injectivity_radius(z23_tree, f2_tree, amalgam_tree):
    assert injectivity_radius(z23_tree, 4) == 2
    assert injectivity_radius(f2_tree, 2) == 1
    assert injectivity_radius(amalgam_tree, 4) >= 1
    finite = TreeAction(GroupSpec.free_product(FiniteGroup.cyclic(3, "t")))
    with pytest.raises(InconclusiveError):
        injectivity_radius(finite, 3)


def test_power_length_examples(z23, z23_tree, f2, f2_tree):
    rep = check_power_length(z23_tree, z23.parse("s t"), 6)
    assert rep.ok and rep.lengths[4] - rep.lengths[1] == 6
    rep = check_power_length(f2_tree, f2.parse("x"), 5)
    assert rep.ok and rep.lengths == [1, 2, 3, 4, 5]
    rep = check_power_length(z23_tree, z23.parse("t s t2 s t"), 5)
    assert rep.ok
    with pytest.raises(PreconditionError):
        check_power_length(z23_tree, z23.parse("t"), 3)


def test_same_closure(f2, z23):
    x = f2.parse("x")
    assert same_closure(x ** 2, x ** 3)
    assert not same_closure(x, f2.parse("y"))
    st_ = z23.parse("s t")
    assert same_closure(st_, st_ ** -2)


def test_constants_f2(f2_tree):
    rep = estimate_product_constants(f2_tree, SampleSpec(max_word_length=3, sample_size=80))
    assert rep["C0"] == 1
    assert rep["delta"] == 0 and rep.constants["delta"].tag == EXACT
    assert rep.constants["N0"].tag == ESTIMATE
    assert rep.partial            # no elliptics in a free group
    json.dumps(rep.to_json())


def test_constants_z23_examples(z23_tree):
    S = SampleSpec(max_word_length=4, sample_size=120,
                   loxodromic_words=["t s t", "s t s t", "t2 s t2 s"], elliptic_words=["s"])
    rep = estimate_product_constants(z23_tree, S)
    assert rep["C1"] == 1
    rep = estimate_product_constants(z23_tree, SampleSpec(max_word_length=2, sample_size=40,
                                                         elliptic_words=["t"]))
    assert rep["K"] == 2
    with pytest.raises(PreconditionError):
        estimate_product_constants(z23_tree, SampleSpec(loxodromic_words=["s"]))


def test_constants_full_sample_c1_is_two(z23_tree):
    # with every short loxodromic a, b = s is not always enough: (s t) s is elliptic
    rep = estimate_product_constants(z23_tree, SampleSpec(max_word_length=4, sample_size=300,
                                                         elliptic_words=["s"]))
    assert rep["C1"] == 2


def test_constants_are_monotone_in_sample(z23_tree):
    prev = None
    for size in (10, 40, 120, 240):
        rep = estimate_product_constants(z23_tree, SampleSpec(max_word_length=3, sample_size=size, seed=4))
        cur = (rep["N0"], rep["N1"], rep["C0"], rep["C1"])
        if prev is not None:
            assert all(c >= p for c, p in zip(cur, prev))
        prev = cur
