from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from hardy_lorentz.atomic import (
    AtomicDecomposition,
    TriAtom,
    coefficient_norm,
    decompose,
    decompose_QD,
    decompose_s,
    dual_witness,
    orthogonality_check,
    partial_sum_convergence,
    validate_atom,
)
from hardy_lorentz.bmo import StoppingSequence
from hardy_lorentz.errors import ChainViolated, DegenerateSequence, InvalidExponent
from hardy_lorentz.filtration import uniform_tree
from hardy_lorentz.process import Martingale, StoppingTime, zero_martingale

HALF = Fraction(1, 2)


def test_one_step_s_decomposition(one_step):
    dec = decompose_s(one_step, 1)
    assert dec.window == (-1, -1)
    (term,) = dec.terms
    assert term.k == -1 and term.mu == Fraction(3, 2)
    assert term.nu.stop_set == (0,)
    assert list(term.atom.a.terminal) == [Fraction(2, 3), Fraction(-2, 3)]
    assert validate_atom(term.atom)["ok"]
    norm, ratio = coefficient_norm(dec, 1)
    assert norm == 1.5 and ratio == 1.5
    assert partial_sum_convergence(one_step, 1, 1) == [1.0, 0.0]


def test_one_step_d_decomposition(one_step):
    dec = decompose_QD(one_step, 1, "D")
    assert [(t.k, t.mu) for t in dec.terms] == [(-1, Fraction(3, 2))]


def test_zero_martingale_empty():
    z = zero_martingale(uniform_tree(2, 2))
    for kind in ("s", "Q", "D"):
        dec = decompose(z, 1, kind)
        assert dec.terms == () and dec.window is None
        assert coefficient_norm(dec, 1) == (0.0, 0.0)


def test_invalid_p(one_step):
    with pytest.raises(InvalidExponent):
        decompose_s(one_step, 0)


def test_validate_atom_failures():
    t = uniform_tree(2, 1)
    bad = Martingale(t, np.array([1, 1, 1], dtype=object), check=False)
    rep = validate_atom(TriAtom(bad, StoppingTime.constant(t, 1), 1, 1))
    assert not rep["ok"] and rep["node"] == 0
    big = Martingale(t, np.array([0, 5, -5], dtype=object))
    rep = validate_atom(TriAtom(big, StoppingTime.constant(t, 0), 3, 1))
    assert not rep["ok"] and rep["check"] == "bound"
    assert validate_atom(TriAtom(zero_martingale(t), StoppingTime.never(t), 1, 1))["ok"]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), kind=st.sampled_from(["s", "Q", "D"]), p=st.sampled_from([HALF, 1, 2]))
def test_decomposition_contract(seed, kind, p):
    _, f = random_instance(seed)
    for base in (None, "auto"):
        dec = decompose(f, p, kind, base=base)
        assert dec.reconstruction_exact()
        assert dec.nu_monotone()
        assert all(validate_atom(t.atom)["ok"] for t in dec.terms)
        if dec.window is None:
            continue
        wide = decompose(f, p, kind, window=(dec.window[0] - 2, dec.window[1] + 2), base=base)
        extra = [t for t in wide.terms if not dec.window[0] <= t.k <= dec.window[1]]
        assert all(t.mu == 0 and not t.atom.a.values.any() for t in extra)
        assert wide.reconstruction_exact()


def test_float_reconstruction():
    for seed in range(20):
        _, f = random_instance(seed, mode="float", distribution="gaussian")
        for kind in ("s", "Q", "D"):
            assert decompose(f, HALF, kind).reconstruction_error() <= 1e-10


def test_anchored_base_is_scale_equivariant():
    _, f = random_instance(8)
    for kind in ("s", "Q", "D"):
        a = coefficient_norm(decompose(f, 1, kind, base="auto"), 2)[1]
        b = coefficient_norm(decompose(f.scale(7), 1, kind, base="auto"), 2)[1]
        assert math.isclose(a, b, rel_tol=1e-12)


def test_partial_sums_nonincreasing():
    for seed in range(10):
        _, f = random_instance(seed)
        seq = partial_sum_convergence(f, HALF, 2)
        assert seq[-1] == 0
        assert all(b <= a * (1 + 1e-12) for a, b in zip(seq, seq[1:]))


def test_doc_round_trip():
    _, f = random_instance(4)
    dec = decompose(f, HALF, "Q", base="auto")
    again = AtomicDecomposition.from_doc(f, dec.to_doc())
    assert again.to_doc() == dec.to_doc()
    assert again.reconstruction_exact()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), kind=st.sampled_from(["s", "Q", "D"]))
def test_orthogonality(seed, kind):
    from hardy_lorentz.generate import pair_martingale

    tree, f = random_instance(seed)
    g = pair_martingale(tree, seed + 1)
    for p in (HALF, 1):
        dec = decompose(f, p, kind)
        for row in orthogonality_check(dec, g):
            assert row["identity_exact"] and row["ok"]
        for row in orthogonality_check(dec, f):
            assert row["identity_exact"]
        zero_rows = orthogonality_check(dec, zero_martingale(tree))
        assert all(r["pairing"] == 0 for r in zero_rows)


def test_chain_violation_raised(one_step):
    dec = decompose_s(one_step, 1)
    t = dec.terms[0]
    # an oversized "atom" breaks the final link of the chain
    fake = TriAtom(t.atom.a.scale(10), t.nu, 1, 1)
    bad = AtomicDecomposition(one_step, "s", 1, 3, dec.window, (type(t)(t.k, t.mu, fake),))
    with pytest.raises(ChainViolated) as info:
        orthogonality_check(bad, one_step)
    assert info.value.k == -1


def test_dual_witness(one_step):
    tree = one_step.tree
    seq = StoppingSequence(tree, (0, 0), {0: StoppingTime.constant(tree, 0)})
    f, ratio = dual_witness(one_step, seq, 1, 2)
    assert list(f.terminal) == [1, -1]  # g / ||g||_2
    assert ratio == 1.0
    f7, ratio7 = dual_witness(one_step.scale(7), seq, 1, 2)
    assert np.all(f7.values == f.values) and ratio7 == ratio
    with pytest.raises(DegenerateSequence):
        dual_witness(zero_martingale(tree), seq, 1, 2)


def test_dual_witness_r1_and_scaling():
    for seed in range(10):
        tree, g = random_instance(seed)
        seq = StoppingSequence(tree, (-1, 1), {k: StoppingTime.constant(tree, n) for k, n in zip((-1, 0, 1), (0, 0, 1))})
        for r in (1, 2, 3):
            _, a = dual_witness(g, seq, HALF, r)
            _, b = dual_witness(g.scale(7), seq, HALF, r)
            assert math.isfinite(a) and math.isclose(a, b, rel_tol=1e-10)
