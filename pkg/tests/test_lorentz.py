from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hardy_lorentz.errors import InvalidIndex, NegativeThreshold, PropertyViolated
from hardy_lorentz.lorentz import (
    LorentzIndex,
    StepRearrangement,
    check_rearrangement_properties,
    distribution,
    holder_lorentz_ratio,
    lorentz_norm,
    lp_norm,
    rearrangement,
    rearrangement_norm,
    rearrangement_norm_lambda,
)

Q = Fraction


def quadrature_norm(r: StepRearrangement, p: float, q: float) -> float:
    """Numeric (q/p) int_0^1 t^{q/p-1} mu_t^q dt, substituting u = t^{q/p}
    so the integrand has no singularity at 0."""
    if not len(r):
        return 0.0
    T = [float(t) for t in r.cum_masses]
    if math.isinf(q):
        # sup of t^{1/p} mu_t: sample points converging to each breakpoint from the left
        best = 0.0
        lo = 0.0
        for hi in T:
            ts = hi - (hi - lo) * 2.0 ** -np.arange(1, 60)
            best = max(best, max(t ** (1 / p) * float(r.mu(t)) for t in ts))
            lo = hi
        return best
    e = q / p
    pts = [t**e for t in T]
    val, _ = integrate.quad(lambda u: float(r.mu(u ** (1 / e))) ** q, 0.0, pts[-1], points=pts[:-1], limit=200, epsabs=0, epsrel=1e-13)
    return val ** (1 / q)


def test_examples():
    assert lorentz_norm([2, 1, 1, 1], [Q(1, 4)] * 4, (1, 1)) == 1.25
    w = Q(1, 3)
    for p, q in [(1, 1), (2, 1), (Q(1, 2), 2), (1, math.inf)]:
        assert math.isclose(lorentz_norm([1, 0, 0], [w] * 3, (p, q)), float(w) ** (1 / float(p)), rel_tol=1e-15)


def test_distribution_examples():
    m = [Q(1, 4), Q(3, 4)]
    assert distribution([1, 0], m, 0) == Q(1, 4)
    assert distribution([1, 0], m, 1) == 0
    assert distribution([2, 2], m, 1) == 1
    with pytest.raises(NegativeThreshold):
        distribution([1, 0], m, -1)


def test_rearrangement_examples():
    r = rearrangement([3, 1, -1, 1], [Q(1, 4)] * 4)
    assert r.values == (3, 1) and r.cum_masses == (Q(1, 4), 1)
    assert rearrangement([5, 5], [Q(1, 2)] * 2).values == (5,)
    assert len(rearrangement([0, 0], [Q(1, 2)] * 2)) == 0


def test_invalid_index():
    with pytest.raises(InvalidIndex):
        LorentzIndex(0, 1)
    with pytest.raises(InvalidIndex):
        LorentzIndex(math.inf, 1)
    with pytest.raises(InvalidIndex):
        LorentzIndex(1, -1)
    assert LorentzIndex("1/2", "inf").q_infinite


def _mu_direct(values, masses, t):
    """inf{s >= 0 : lambda_s <= t} over the finite candidate set."""
    cands = sorted({0, *(abs(v) for v in values)})
    return min(s for s in cands if distribution(values, masses, s) <= t)


@settings(max_examples=60, deadline=None)
@given(vals=st.lists(st.integers(-5, 5), min_size=1, max_size=8), seed=st.integers(0, 1000))
def test_rearrangement_matches_inf_definition(vals, seed):
    rng = np.random.default_rng(seed)
    w = [int(x) for x in rng.integers(1, 6, size=len(vals))]
    masses = [Q(x, sum(w)) for x in w]
    r = rearrangement(vals, masses)
    for k in range(0, 41):
        t = Q(k, 40)
        assert r.mu(t) == _mu_direct(vals, masses, t)


@settings(max_examples=60, deadline=None)
@given(vals=st.lists(st.integers(-9, 9), min_size=1, max_size=8), seed=st.integers(0, 1000))
def test_mu_and_lambda_forms_agree(vals, seed):
    rng = np.random.default_rng(seed)
    w = [int(x) for x in rng.integers(1, 6, size=len(vals))]
    masses = [Q(x, sum(w)) for x in w]
    r = rearrangement(vals, masses)
    for idx in [(1, 1), (2, 1), (Q(1, 2), 2), (1, 3), (2, math.inf)]:
        a, b = rearrangement_norm(r, idx), rearrangement_norm_lambda(r, idx)
        assert math.isclose(a, b, rel_tol=1e-14, abs_tol=0)


def test_quadrature_oracle_batch():
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(60):
        n = int(rng.integers(1, 9))
        vals = rng.normal(size=n)
        w = rng.random(n) + 0.05
        masses = w / w.sum()
        r = rearrangement(vals, masses)
        for p in (0.5, 1, 2):
            for q in (0.5, 1, 2, math.inf):
                exact = rearrangement_norm(r, (p, q))
                num = quadrature_norm(r, p, q)
                worst = max(worst, abs(exact - num) / exact)
    assert worst <= 1e-8


def test_lp_identity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 7))
        vals = [int(v) for v in rng.integers(-4, 5, size=n)]
        w = [int(x) for x in rng.integers(1, 5, size=n)]
        masses = [Q(x, sum(w)) for x in w]
        for p in (1, 2, 3):
            assert lorentz_norm(vals, masses, (p, p)) == lp_norm(vals, masses, p)
        a, b = lorentz_norm(vals, masses, (Q(1, 2), Q(1, 2))), lp_norm(vals, masses, Q(1, 2))
        assert math.isclose(a, b, rel_tol=1e-14)


def test_rearrangement_properties():
    m = [Q(1, 2), Q(1, 2)]
    counts = check_rearrangement_properties([1, 0], [1, 0], m)
    assert all(c > 0 for c in counts.values())
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = [int(v) for v in rng.integers(-4, 5, size=4)]
        y = [int(v) for v in rng.integers(-4, 5, size=4)]
        check_rearrangement_properties(x, y, [Q(1, 4)] * 4)
    r = rearrangement([1, -3], m)
    assert rearrangement([-2, 6], m).values == tuple(2 * v for v in r.values)


def test_property_violation_is_reported(monkeypatch):
    import hardy_lorentz.lorentz as lz

    monkeypatch.setattr(lz, "distribution", lambda values, masses, s: -s if values == [1, 0] else 0)
    with pytest.raises(PropertyViolated) as info:
        lz.check_rearrangement_properties([1, 0], [1, 0], [Q(1, 2)] * 2)
    assert info.value.which


def test_holder_examples():
    m = [Q(1, 4)] * 4
    ind = [1, 0, 0, 0]
    assert math.isclose(holder_lorentz_ratio(ind, ind, m, 2, 2, 2, 2), 1.0)
    assert holder_lorentz_ratio([1, 0, 0, 0], [0, 1, 0, 0], m, 2, 2, 2, 2) == 0.0


@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.integers(-6, 6), min_size=2, max_size=6), bump=st.integers(0, 3))
def test_monotone_under_domination(vals, bump):
    m = [Q(1, len(vals))] * len(vals)
    bigger = [abs(v) + bump for v in vals]
    for idx in [(1, 1), (Q(1, 2), 1), (2, math.inf)]:
        assert lorentz_norm(vals, m, idx) <= lorentz_norm(bigger, m, idx)


def test_quasi_triangle_sanity_bound():
    rng = np.random.default_rng(5)
    for p, q in [(0.5, 0.5), (1, 2), (2, 1)]:
        K = 0.0
        for _ in range(50):
            x, y = rng.normal(size=5), rng.normal(size=5)
            m = np.full(5, 0.2)
            lhs = lorentz_norm(x + y, m, (p, q))
            K = max(K, lhs / (lorentz_norm(x, m, (p, q)) + lorentz_norm(y, m, (p, q))))
        assert K < 2 ** (1 / min(p, q, 1) + 2)
