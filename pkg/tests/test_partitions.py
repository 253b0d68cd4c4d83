import itertools

import pytest
from hypothesis import given, strategies as st
from sympy import bell as sympy_bell
from sympy.utilities.iterables import multiset_partitions

from kolab.partitions import (Partition, bell, enumerate_partitions, proper_partitions, select_tuple,
                              successors)


def brute_force(k):
    """Independent oracle: sympy's set-partition generator, canonicalized."""
    out = set()
    for blocks in multiset_partitions(list(range(1, k + 1))):
        out.add(tuple(sorted(tuple(sorted(b)) for b in blocks)))
    return out


def as_key(p):
    return tuple(sorted(p.blocks))


def test_empty_index_set_has_no_partitions():
    assert enumerate_partitions(0) == []


def test_singleton():
    assert [str(p) for p in enumerate_partitions(1)] == ["{{1}}"]


@pytest.mark.parametrize("k", range(1, 9))
def test_counts_match_bell(k):
    assert len(enumerate_partitions(k)) == int(sympy_bell(k)) == bell(k)


@pytest.mark.parametrize("k", range(1, 7))
def test_matches_brute_force(k):
    got = [as_key(p) for p in enumerate_partitions(k)]
    assert len(got) == len(set(got))
    assert set(got) == brute_force(k)


def test_bell_triangle_values():
    assert [bell(k) for k in range(9)] == [1, 1, 2, 5, 15, 52, 203, 877, 4140]


def test_order_is_deterministic_and_sorted_by_rgs():
    parts = enumerate_partitions(5)
    rgs = [p.rgs() for p in parts]
    assert rgs == sorted(rgs)
    assert [p.rgs() for p in enumerate_partitions(5)] == rgs


def test_blocks_ordered_by_minimum():
    for p in enumerate_partitions(6):
        mins = [b[0] for b in p.blocks]
        assert mins == sorted(mins)
        assert all(list(b) == sorted(b) for b in p.blocks)


@pytest.mark.parametrize("k,count", [(1, 0), (2, 1), (4, 14)])
def test_proper_partitions(k, count):
    parts = proper_partitions(k)
    assert len(parts) == count
    assert all(p.size > 1 for p in parts)


def test_proper_k2_is_two_singletons():
    assert [str(p) for p in proper_partitions(2)] == ["{{1},{2}}"]


@pytest.mark.parametrize("k", [-1, 9])
def test_rejects_out_of_range(k):
    with pytest.raises(ValueError):
        enumerate_partitions(k)


def test_proper_rejects_zero():
    with pytest.raises(ValueError):
        proper_partitions(0)


def test_select_tuple_example():
    p = Partition.from_blocks([[1, 3], [2]])
    u = ("u0", "u1", "u2", "u3")
    assert select_tuple(p, 1, u) == ("u0", "u1", "u3")
    assert select_tuple(p, 2, u) == ("u0", "u2")
    with pytest.raises(IndexError):
        select_tuple(p, 3, u)
    with pytest.raises(ValueError):
        select_tuple(p, 1, u[:3])


@pytest.mark.parametrize("k", range(1, 6))
def test_successors_bijective(k):
    grown = [q for p in enumerate_partitions(k) for q in successors(p)]
    assert len(grown) == len(set(grown)) == bell(k + 1)
    assert set(grown) == set(enumerate_partitions(k + 1))


def test_successor_order():
    p = Partition.from_blocks([[1, 2], [3]])
    assert [str(q) for q in successors(p)] == ["{{1,2},{3},{4}}", "{{1,2,4},{3}}", "{{1,2},{3,4}}"]


def test_non_canonical_blocks_rejected():
    with pytest.raises(ValueError):
        Partition(3, ((2,), (1, 3)))
    with pytest.raises(ValueError):
        Partition(3, ((1,), (3,)))


@given(st.integers(1, 7).flatmap(lambda k: st.lists(st.integers(0, k - 1), min_size=k, max_size=k)))
def test_from_blocks_canonicalizes_any_labelling(labels):
    k = len(labels)
    groups = {}
    for i, lab in enumerate(labels, start=1):
        groups.setdefault(lab, []).append(i)
    blocks = list(groups.values())
    p = Partition.from_blocks(reversed(blocks), k)
    assert sorted(itertools.chain.from_iterable(p.blocks)) == list(range(1, k + 1))
    assert Partition.from_rgs(p.rgs()) == p
    assert p.canonical() == p
    assert p in set(enumerate_partitions(k))


@given(st.integers(1, 6), st.data())
def test_select_tuple_covers_indices(k, data):
    parts = enumerate_partitions(k)
    p = data.draw(st.sampled_from(parts))
    u = tuple(range(k + 1))
    seen = []
    for i in range(1, p.size + 1):
        sel = select_tuple(p, i, u)
        assert sel[0] == 0
        assert list(sel[1:]) == sorted(sel[1:])
        seen.extend(sel[1:])
    assert sorted(seen) == list(range(1, k + 1))
