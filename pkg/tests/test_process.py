from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from hardy_lorentz.errors import (
    EnumerationCapExceeded,
    NonCenteredTerminal,
    NotAMartingale,
    NotAnAntichain,
    NotMeasurable,
    TreeMismatch,
)
from hardy_lorentz.filtration import build_tree, split_tree, uniform_tree
from hardy_lorentz.process import (
    AdaptedSequence,
    Martingale,
    StoppingTime,
    cond_quad_variation,
    differences,
    enumerate_stopping_times,
    level_crossing_time,
    martingale_from_terminal,
    maximal,
    predictable_cond_quad_variation,
    quad_variation,
    stopped,
    stopping_time_count,
    stopping_time_matrix,
    zero_martingale,
)


def test_one_step_martingale(one_step):
    assert one_step.values[0] == 0
    assert list(one_step.terminal) == [1, -1]
    assert list(differences(one_step).values[1:]) == [1, -1]
    assert all(v == 1 for v in maximal(one_step).terminal)
    assert all(v == 1 for v in quad_variation(one_step).terminal)
    assert all(v == 1 for v in cond_quad_variation(one_step).terminal)


def test_non_centered_and_non_martingale():
    t = uniform_tree(2, 1)
    with pytest.raises(NonCenteredTerminal):
        martingale_from_terminal(t, [1, 0])
    with pytest.raises(NotAMartingale):
        Martingale(t, np.array([0, 1, 2], dtype=object))


def test_zero_martingale():
    z = martingale_from_terminal(uniform_tree(2, 2), [0, 0, 0, 0])
    assert not z.values.any()
    assert not maximal(z).values.any()


def test_two_step_quadratic_variation():
    t = uniform_tree(2, 2)
    f = martingale_from_terminal(t, [2, 0, -2, 0])
    # d_1 = +-1, d_2 = +-1 on every path
    assert all(v == 2 for v in quad_variation(f, squared=True).terminal)
    assert np.allclose(quad_variation(f).terminal.astype(float), math.sqrt(2))


def test_skewed_one_step_has_unit_s():
    p = 0.3
    c = math.sqrt(p * (1 - p))
    t = split_tree([p, 1 - p], mode="float")
    f = martingale_from_terminal(t, [(1 - p) / c, -p / c])
    assert np.allclose(cond_quad_variation(f).terminal, 1.0)


def test_monotone_path_star():
    t = build_tree({"levels": 2, "root": {"mass": 1, "children": [
        {"mass": "1/2", "children": [{"mass": "1/4"}, {"mass": "1/4"}]},
        {"mass": "1/2", "children": [{"mass": "1/4"}, {"mass": "1/4"}]},
    ]}})
    f = martingale_from_terminal(t, [1, 0, -1, 0])
    assert list(f.values[:2]) == [0, Fraction(1, 2)]
    assert maximal(f).terminal[0] == 1


def test_stopped_examples(one_step):
    t = one_step.tree
    assert np.all(stopped(one_step, StoppingTime.never(t)).values == one_step.values)
    assert not stopped(one_step, StoppingTime.constant(t, 0)).values.any()
    assert np.all(stopped(one_step, StoppingTime(t, tuple(t.leaves))).values == one_step.values)
    with pytest.raises(TreeMismatch):
        stopped(one_step, StoppingTime.never(uniform_tree(2, 1)))


def test_antichain_validation():
    t = uniform_tree(2, 2)
    with pytest.raises(NotAnAntichain):
        StoppingTime(t, (0, 1))
    with pytest.raises(NotAnAntichain):
        StoppingTime(t, (99,))


@pytest.mark.parametrize(
    "tree,count",
    [
        (uniform_tree(2, 1), 5),
        (uniform_tree(2, 2), 26),
        (build_tree({"levels": 1, "root": {"mass": 1, "children": [{"mass": 1}]}}), 3),
        (uniform_tree(2, 4), 458330),
    ],
)
def test_stopping_time_counts(tree, count):
    assert stopping_time_count(tree) == count
    if count < 1000:
        listed = list(enumerate_stopping_times(tree))
        assert len(listed) == len(set(listed)) == count


def _brute_force_antichains(tree):
    out = set()
    nodes = range(tree.size)
    for mask in range(1 << tree.size):
        members = [i for i in nodes if mask >> i & 1]
        try:
            out.add(StoppingTime(tree, tuple(members)).stop_set)
        except NotAnAntichain:
            pass
    return out


def test_enumeration_matches_brute_force():
    for tree in (uniform_tree(2, 2), uniform_tree(3, 1), split_tree([Fraction(1, 3)] * 3)):
        listed = {nu.stop_set for nu in enumerate_stopping_times(tree)}
        assert listed == _brute_force_antichains(tree)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapExceeded):
        stopping_time_matrix(uniform_tree(2, 4), cap=1000)


def test_level_crossing_examples(one_step):
    s = predictable_cond_quad_variation(one_step)
    assert level_crossing_time(s, 0.5).stop_set == (0,)
    assert level_crossing_time(s, 1).stop_set == ()
    assert level_crossing_time(s, -1).stop_set == (0,)


def test_level_crossing_measurability():
    t = uniform_tree(2, 1)
    seq = AdaptedSequence(t, np.array([0, 5, 0]))
    with pytest.raises(NotMeasurable):
        level_crossing_time(seq, 1, lookahead=True)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_process_invariants(seed):
    tree, f = random_instance(seed)
    s2 = cond_quad_variation(f, squared=True).values
    S2 = quad_variation(f, squared=True).values
    kids = tree.parent >= 0
    assert np.all(s2[kids] >= s2[tree.parent[kids]])
    assert np.all(S2[kids] >= S2[tree.parent[kids]])
    assert np.all(maximal(f).terminal >= np.abs(f.terminal))
    stat = predictable_cond_quad_variation(f, squared=True)
    thresholds = sorted({Fraction(0), *stat.values})
    prev = None
    for th in thresholds:
        cur = level_crossing_time(stat, th).leaf_times()
        if prev is not None:
            assert np.all(prev <= cur)
        prev = cur


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_optional_stopping_and_pythagoras(seed):
    tree, f = random_instance(seed, depth=(1, 2))
    if stopping_time_count(tree) > 5000:
        return
    total = cond_quad_variation(f, squared=True).terminal
    for nu in enumerate_stopping_times(tree):
        fn = stopped(f, nu)
        Martingale(tree, fn.values)  # validates
        rest = cond_quad_variation(f - fn, squared=True).terminal
        head = cond_quad_variation(fn, squared=True).terminal
        assert np.all(rest + head == total)


def test_zero_helper():
    z = zero_martingale(uniform_tree(3, 2, mode="float"))
    assert z.values.dtype == np.float64 and not z.values.any()
