from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from hardy_lorentz.filtration import uniform_tree
from hardy_lorentz.hardy import (
    all_norms,
    envelope_norm,
    envelope_violations,
    equivalence_study,
    h_norm,
    minimal_envelope,
    qd_norm,
    random_valid_envelope,
)
from hardy_lorentz.process import martingale_from_terminal, zero_martingale


def test_one_step_norms(one_step):
    assert h_norm(one_step, "s", (2, 2)) == 1
    assert h_norm(one_step, "star", (1, 3)) == h_norm(one_step, "S", (1, 3))
    assert qd_norm(one_step, "Q", (2, 2)) == 1
    norms = all_norms(one_step, (Fraction(1, 2), 1))
    assert set(norms.values()) == {1.0}


def test_zero_martingale_norms():
    z = zero_martingale(uniform_tree(2, 2))
    assert set(all_norms(z, (1, 1)).values()) == {0.0}
    assert not minimal_envelope(z, "Q").values.any()


def test_one_step_envelope(one_step):
    env = minimal_envelope(one_step, "Q")
    assert env.values[0] == 1


def test_two_step_envelope():
    # |d_2| = 1 under the first level-1 atom, 0 under the second
    t = uniform_tree(2, 2)
    f = martingale_from_terminal(t, [2, 0, -1, -1])
    env = minimal_envelope(f, "Q")
    left, right = t.by_level[1]
    assert env.values[left] != env.values[right]
    assert env.values[0] == max(env.values[left], env.values[right]) or env.values[0] == 1
    assert env.values[0] == 1  # S_1^2 = 1 everywhere
    assert env.values[left] == 2 and env.values[right] == 1
    assert envelope_violations(env, f) == []


def test_d_norm_of_deterministic_maximum():
    t = uniform_tree(2, 2)
    f = martingale_from_terminal(t, [3, 3, -3, -3])
    assert qd_norm(f, "D", (1, 1)) == 3


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_minimal_envelope_is_valid_and_minimal(seed):
    tree, f = random_instance(seed)
    rng = np.random.default_rng(seed)
    for target in ("Q", "D"):
        env = minimal_envelope(f, target)
        assert envelope_violations(env, f) == []
        for _ in range(5):
            other = random_valid_envelope(env, rng)
            assert envelope_violations(other, f) == []
            assert np.all(env.values <= other.values)
            assert envelope_norm(env, (1, 1)) <= envelope_norm(other, (1, 1))


def test_equivalence_study_scale_invariant():
    insts = [(f"x{s}", random_instance(s)[1]) for s in range(20)]
    rows, summary = equivalence_study(insts, (1, 2))
    rows7, _ = equivalence_study([(i, f.scale(7)) for i, f in insts], (1, 2))
    assert rows and summary
    for a, b in zip(rows, rows7):
        assert math.isfinite(a["ratio"]) and a["ratio"] > 0
        assert math.isclose(a["ratio"], b["ratio"], rel_tol=1e-10)
    assert {"instance_id", "R", "p", "q", "norm_kind_a", "norm_kind_b", "ratio"} == set(rows[0])
