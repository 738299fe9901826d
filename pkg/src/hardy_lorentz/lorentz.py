"""Distribution functions, decreasing rearrangements and Lorentz quasi-norms
of simple functions on a finite probability space.

A simple function is given by two parallel arrays: its values and the
masses of the atoms carrying them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import arith
from .errors import InvalidIndex, NegativeThreshold, PropertyViolated


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float) and math.isfinite(x):
        return Fraction(x)
    return None


@dataclass(frozen=True)
class LorentzIndex:
    p: float
    q: float

    def __post_init__(self):
        if isinstance(self.p, str) or isinstance(self.q, str):
            object.__setattr__(self, "p", parse_exponent(self.p))
            object.__setattr__(self, "q", parse_exponent(self.q))
        try:
            ok_p = 0 < self.p < math.inf
            ok_q = 0 < self.q <= math.inf
        except TypeError as exc:
            raise InvalidIndex(f"bad exponents ({self.p!r}, {self.q!r})") from exc
        if not (ok_p and ok_q):
            raise InvalidIndex(f"need 0 < p < inf and 0 < q <= inf, got ({self.p}, {self.q})")

    @property
    def q_infinite(self) -> bool:
        return self.q == math.inf

    @property
    def q_over_p(self):
        fp, fq = _as_fraction(self.p), _as_fraction(self.q)
        if fp is not None and fq is not None:
            return fq / fp
        return float(self.q) / float(self.p)

    @property
    def inv_p(self):
        fp = _as_fraction(self.p)
        return 1 / fp if fp is not None else 1.0 / float(self.p)


def parse_exponent(x):
    """Exponent from a number or a "p/q" / "inf" string."""
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        return Fraction(x.strip())
    return x


def as_index(idx) -> LorentzIndex:
    if isinstance(idx, LorentzIndex):
        return idx
    p, q = idx
    return LorentzIndex(p, q)


@dataclass(frozen=True)
class StepRearrangement:
    """mu_t = values[i] on [T_{i-1}, T_i) with T_0 = 0; mu_t = 0 beyond T_m.

    Only nonzero |values| are listed, so the zero function is empty.
    """

    values: tuple
    cum_masses: tuple

    def __post_init__(self):
        v, t = self.values, self.cum_masses
        if len(v) != len(t):
            raise ValueError("values and cumulative masses differ in length")
        if any(a <= b for a, b in zip(v, v[1:])) or any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError("rearrangement steps must be strictly monotone")

    def __len__(self):
        return len(self.values)

    def mu(self, t) -> float:
        for v, T in zip(self.values, self.cum_masses):
            if t < T:
                return v
        return 0

    def distribution(self, s):
        """lambda_s recovered from the steps: mass of {|x| > s}."""
        out = 0
        for v, T in zip(self.values, self.cum_masses):
            if v > s:
                out = T
        return out

    def map_values(self, fn) -> "StepRearrangement":
        """Apply an increasing map with fn(0) = 0 to the values.

        Values that collide after the map (e.g. float square roots) merge.
        """
        vals: list = []
        cum: list = []
        for v, T in zip(self.values, self.cum_masses):
            w = fn(v)
            if vals and w >= vals[-1]:
                cum[-1] = T
            else:
                vals.append(w)
                cum.append(T)
        return StepRearrangement(tuple(vals), tuple(cum))


def distribution(values, masses, s):
    """lambda_s(x) = P(|x| > s), strict inequality."""
    if s < 0:
        raise NegativeThreshold(f"threshold {s} < 0")
    total = 0
    for x, m in zip(values, masses):
        if abs(x) > s:
            total = total + m
    return total


def rearrangement(values, masses) -> StepRearrangement:
    """Merge equal |values|, sort descending, accumulate masses."""
    groups: dict = {}
    for x, m in zip(values, masses):
        a = abs(x)
        if a != 0:
            groups[a] = groups.get(a, 0) + m
    vals = sorted(groups, reverse=True)
    cum = []
    running = 0
    for v in vals:
        running = running + groups[v]
        cum.append(running)
    return StepRearrangement(tuple(vals), tuple(cum))


def rearrangement_norm(r: StepRearrangement, idx) -> float:
    """||x||_{p,q} from the step form of mu_t.

    q < inf: (sum_i v_i^q (T_i^{q/p} - T_{i-1}^{q/p}))^{1/q}
    q = inf: max_i T_i^{1/p} v_i
    Exact in the inner sum when inputs are Fractions and exponents integral.
    """
    idx = as_index(idx)
    if not len(r):
        return 0.0
    if idx.q_infinite:
        return max(float(arith.power(T, idx.inv_p)) * float(v) for v, T in zip(r.values, r.cum_masses))
    e = idx.q_over_p
    total = 0
    prev = 0
    for v, T in zip(r.values, r.cum_masses):
        cur = arith.power(T, e)
        total = total + arith.power(v, idx.q) * (cur - prev)
        prev = cur
    return float(arith.power(total, _inv(idx.q)))


def rearrangement_norm_lambda(r: StepRearrangement, idx) -> float:
    """Same quasi-norm through the distribution-function form
    (q int_0^inf (t lambda_t^{1/p})^q dt/t)^{1/q}; on a step function the
    integral is sum_i T_i^{q/p} (v_i^q - v_{i+1}^q) with v_{m+1} = 0.
    """
    idx = as_index(idx)
    if not len(r):
        return 0.0
    if idx.q_infinite:
        return max(float(v) * float(arith.power(T, idx.inv_p)) for v, T in zip(r.values, r.cum_masses))
    e = idx.q_over_p
    nxt = list(r.values[1:]) + [0]
    total = 0
    for v, w, T in zip(r.values, nxt, r.cum_masses):
        total = total + arith.power(T, e) * (arith.power(v, idx.q) - arith.power(w, idx.q))
    return float(arith.power(total, _inv(idx.q)))


def _inv(q):
    fq = _as_fraction(q)
    return 1 / fq if fq is not None else 1.0 / q


def lorentz_norm(values, masses, idx) -> float:
    return rearrangement_norm(rearrangement(values, masses), idx)


def lp_norm(values, masses, p) -> float:
    """(E|x|^p)^{1/p} summed leaf by leaf."""
    total = 0
    for x, m in zip(values, masses):
        total = total + m * arith.power(abs(x), p)
    return float(arith.power(total, _inv(p)))


def sup_norm(values) -> float:
    return float(max((abs(x) for x in values), default=0))


def _grid(values, masses) -> tuple[list, list]:
    vals = sorted({abs(x) for x in values})
    s_grid = [0] + vals + [(a + b) / 2 for a, b in zip(vals, vals[1:])]
    cum = sorted({m for m in np.cumsum(list(masses)).tolist()} | {0})
    t_grid = cum + [(a + b) / 2 for a, b in zip(cum, cum[1:])]
    return s_grid, t_grid


def _le(a, b, tol: float) -> bool:
    if tol == 0.0:
        return a <= b
    return float(a) <= float(b) + tol * max(1.0, abs(float(b)))


def check_rearrangement_properties(x, y, masses, scalar=-2, tol: float = 0.0) -> dict:
    """Verify the five distribution / rearrangement properties on (x, y).

    Domination properties use u = min(|x|, |y|) <= v = max(|x|, |y|).
    Raises PropertyViolated with a witness; returns counts of checks made.
    """
    x = list(x)
    y = list(y)
    masses = list(masses)
    xy = [a + b for a, b in zip(x, y)]
    u = [min(abs(a), abs(b)) for a, b in zip(x, y)]
    v = [max(abs(a), abs(b)) for a, b in zip(x, y)]
    sx, tx = _grid(x + y + xy, masses)
    rx, ry, rxy = rearrangement(x, masses), rearrangement(y, masses), rearrangement(xy, masses)
    ru, rv = rearrangement(u, masses), rearrangement(v, masses)
    rax = rearrangement([scalar * a for a in x], masses)
    counts = dict.fromkeys(["lambda_monotone", "lambda_subadditive", "mu_homogeneous", "mu_monotone", "mu_subadditive"], 0)
    for s in sx:
        if not _le(distribution(u, masses, s), distribution(v, masses, s), tol):
            raise PropertyViolated("lambda_monotone", s)
        counts["lambda_monotone"] += 1
        for s2 in sx:
            lhs = distribution(xy, masses, s + s2)
            rhs = distribution(x, masses, s) + distribution(y, masses, s2)
            if not _le(lhs, rhs, tol):
                raise PropertyViolated("lambda_subadditive", (s, s2))
            counts["lambda_subadditive"] += 1
    for t in tx:
        a, b = rax.mu(t), abs(scalar) * rx.mu(t)
        if (a != b) if tol == 0.0 else abs(float(a) - float(b)) > tol * max(1.0, abs(float(b))):
            raise PropertyViolated("mu_homogeneous", t)
        counts["mu_homogeneous"] += 1
        if not _le(ru.mu(t), rv.mu(t), tol):
            raise PropertyViolated("mu_monotone", t)
        counts["mu_monotone"] += 1
        for t2 in tx:
            if not _le(rxy.mu(t + t2), rx.mu(t) + ry.mu(t2), tol):
                raise PropertyViolated("mu_subadditive", (t, t2))
            counts["mu_subadditive"] += 1
    return counts


def holder_exponents(p1, q1, p2, q2) -> tuple:
    def inv(a):
        return 0 if a == math.inf else _inv(a)

    ip = inv(p1) + inv(p2)
    iq = inv(q1) + inv(q2)
    p = 1 / ip
    q = math.inf if iq == 0 else 1 / iq
    return p, q


def holder_lorentz_ratio(x, y, masses, p1, q1, p2, q2) -> float:
    """||xy||_{p,q} / (||x||_{p1,q1} ||y||_{p2,q2}); 0 when both sides vanish."""
    p, q = holder_exponents(p1, q1, p2, q2)
    prod = [a * b for a, b in zip(x, y)]
    top = lorentz_norm(prod, masses, (p, q))
    bottom = lorentz_norm(x, masses, (p1, q1)) * lorentz_norm(y, masses, (p2, q2))
    if bottom == 0:
        if top == 0:
            return 0.0
        raise ZeroDivisionError("product has positive norm but a factor vanishes")
    return top / bottom
