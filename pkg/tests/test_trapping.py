import numpy as np
import pytest

from qcldpc import codes, trapping

FIX = "src/qcldpc/fixtures"


@pytest.fixture(scope="module")
def c1():
    return codes.lift(codes.load_exponent_matrix(f"{FIX}/c1.txt"))


@pytest.fixture(scope="module")
def tanner():
    return codes.lift(codes.load_exponent_matrix(f"{FIX}/tanner155.txt"))


def test_classify_counts(tanner):
    ts = trapping.classify(tanner, [0])
    assert (ts.a, ts.b) == (1, 3)            # lone degree-3 VN
    assert ts.is_ets and not ts.is_lets
    with pytest.raises(ValueError):
        trapping.classify(tanner, [])
    with pytest.raises(ValueError):
        trapping.classify(tanner, [9999])


def test_classify_known_lets(tanner):
    lets = trapping.enumerate_lets(tanner, 5, 3)
    ts = lets[0]
    again = trapping.classify(tanner, ts.vns)
    assert again == ts
    assert again.is_lets
    assert len(again.sat_cns) == 6 and len(again.unsat_cns) == 3
    # every unsatisfied CN has odd internal degree
    for c in again.unsat_cns:
        assert again.cn_degrees[c] == 1


def test_c1_census(c1):
    lets = trapping.enumerate_lets(c1, 5, 5)
    assert len(lets) == 64
    assert all((t.a, t.b) == (5, 5) and t.is_lets for t in lets)
    assert trapping.count_structures(c1, lets) == 1
    groups = trapping.group_by_tslp(c1, lets)
    assert len(groups) == 1 and groups[0].multiplicity == 64


def test_tanner_census(tanner):
    lets = trapping.enumerate_lets(tanner, 5, 3)
    assert len(lets) == 155
    assert all((t.a, t.b) == (5, 3) for t in lets)


def test_shift_closure(c1):
    lets = trapping.enumerate_lets(c1, 5, 5)
    found = {t.vns for t in lets}
    for t in lets[:4]:
        for shift in (1, 7, 63):
            assert trapping._shift_vns(t.vns, c1.p, shift) in found


def test_enumeration_respects_bounds(c1):
    for t in trapping.enumerate_lets(c1, 4, 6):
        assert t.a <= 4 and t.b <= 6 and t.is_lets


def test_tslp_fields(c1):
    lets = trapping.enumerate_lets(c1, 5, 5)
    ts = lets[0]
    tslp = trapping.compute_tslp(c1, ts)
    assert len(tslp.vn_layers) == 5
    assert tslp.j_count == len(tslp.ts_layers) == 5    # K5: all layers distinct
    assert len(tslp.mis_cns) == 10 and len(tslp.unsat_cns) == 5
    for typ, internal, ext in tslp.mis_cns:
        assert len(internal) == 2
        assert all(0 <= p < 5 for p in internal)       # positions, not VN ids
        assert len(ext) >= 1 and all(0 <= z < c1.n_b for z in ext)
    for typ, internal, ext in tslp.unsat_cns:
        assert 0 <= internal < 5


def test_group_members_share_tslp(c1):
    lets = trapping.enumerate_lets(c1, 5, 5)
    groups = trapping.group_by_tslp(c1, lets)
    grp = groups[0]
    ref = grp.tslp
    for member in grp.members[:6]:
        t = trapping.compute_tslp(c1, member)
        assert t.ts_layers == ref.ts_layers
        assert sorted(t.vn_layers) == sorted(ref.vn_layers)


def test_structure_certificate_distinguishes(tanner, c1):
    t1 = trapping.enumerate_lets(tanner, 5, 3)[0]
    t2 = trapping.enumerate_lets(c1, 5, 5)[0]
    c_a = trapping._structure_certificate(tanner, t1, labeled=False)
    c_b = trapping._structure_certificate(c1, t2, labeled=False)
    assert c_a != c_b                                  # K_{2,3} cycle vs K5


def test_is_pure_cycle(tanner):
    lets = trapping.enumerate_lets(tanner, 5, 3)
    # the (5,3) sets of this code are not pure cycles (K_{2,3} has 6 edges)
    assert not trapping._is_pure_cycle(tanner, lets[0].vns)
