"""Constructive atomic decompositions and the duality pairing checks.

The canonical decomposition stops at the first crossing of 2^k by a
predictable statistic (s_{n+1}(f) for s-type atoms, the minimal envelope for
Q/D types) and telescopes f = sum_k (f^{nu_{k+1}} - f^{nu_k}). Thresholds are
compared on squares so rational mode stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import arith
from .errors import ChainViolated, DegenerateSequence, InvalidExponent
from .filtration import FiltrationTree
from .hardy import h_norm, minimal_envelope, qd_norm
from .lorentz import LorentzIndex, as_index
from .process import (
    Martingale,
    StoppingTime,
    closure_values,
    cond_quad_variation,
    first_crossing,
    martingale_from_terminal,
    predictable_cond_quad_variation,
    quad_variation,
    stopped,
    zero_martingale,
)

CATEGORY_OF = {"s": 1, "Q": 2, "D": 3}
DEFAULT_A = 3


def _check_p(p) -> None:
    if not p > 0:
        raise InvalidExponent(f"p must be positive, got {p}")


def _exact_p(p):
    """p as a Fraction when possible, so that 1/p is exact."""
    if isinstance(p, (int, Fraction)):
        return Fraction(p)
    if isinstance(p, str):
        return Fraction(p)
    return p


def _parse_p(text: str):
    """Inverse of arith.fmt for exponents: "p/q" or integers stay exact."""
    if any(ch in text for ch in ".eEn"):
        return float(text)
    return Fraction(text)


def _le(a, b, mode: str) -> bool:
    if mode == arith.RATIONAL and isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    a, b = float(a), float(b)
    return a <= b + arith.FLOAT_RTOL * max(abs(a), abs(b), 1e-300)


def _eq(a, b, mode: str) -> bool:
    if mode == arith.RATIONAL and isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return arith.close(float(a), float(b), arith.FLOAT)


@dataclass(frozen=True, eq=False)
class TriAtom:
    """A (category, p, infinity)-atom with its stopping time."""

    a: Martingale
    nu: StoppingTime
    category: int
    p: object

    def stat_squared(self) -> np.ndarray:
        """Node values of s(a)^2, S(a)^2 or (a*)^2 depending on category."""
        if self.category == 1:
            return cond_quad_variation(self.a, squared=True).values
        if self.category == 2:
            return quad_variation(self.a, squared=True).values
        star = np.abs(self.a.values)
        tree = self.a.tree
        for n in range(1, tree.levels + 1):
            lvl = tree.by_level[n]
            star[lvl] = np.maximum(star[lvl], star[tree.parent[lvl]])
        return star * star


def validate_atom(atom: TriAtom) -> dict:
    """Check vanishing before nu and the category bound ||stat(a)||_inf <= P(nu<inf)^{-1/p}.

    Returns {"ok", "check", "node", "detail"}; ``node`` is a violating node.
    """
    a = atom.a
    tree = a.tree
    mode = tree.mode
    zero = arith.to_number(0, mode)
    early = np.flatnonzero(atom.nu.at_least())
    for i in early:
        if a.values[i] != zero:
            return {"ok": False, "check": "vanishing", "node": int(i), "detail": f"a = {a.values[i]} where nu >= n"}
    P = atom.nu.prob_finite()
    stat2 = atom.stat_squared()
    if P == 0:
        nz = np.flatnonzero(a.values != zero)
        if len(nz):
            return {"ok": False, "check": "bound", "node": int(nz[0]), "detail": "nonzero atom with P(nu<inf) = 0"}
        return {"ok": True, "check": None, "node": None, "detail": ""}
    bound2 = arith.power(P, -2 / _exact_p(atom.p))
    leaves = tree.leaves
    j = int(np.argmax(np.asarray(stat2[leaves], dtype=np.float64)))
    worst = max(stat2[leaves]) if mode == arith.RATIONAL else stat2[leaves][j]
    if not _le(worst, bound2, mode):
        node = int(leaves[[k for k in range(len(leaves)) if stat2[leaves[k]] == worst][0]])
        return {"ok": False, "check": "bound", "node": node, "detail": f"stat^2 = {worst} > {bound2}"}
    return {"ok": True, "check": None, "node": None, "detail": ""}


@dataclass(frozen=True, eq=False)
class DecompositionTerm:
    k: int
    mu: object
    atom: TriAtom

    @property
    def nu(self) -> StoppingTime:
        return self.atom.nu


@dataclass(frozen=True, eq=False)
class AtomicDecomposition:
    """f = sum_k mu_k a^k over the window [k_min, k_max] (None if f = 0)."""

    source: Martingale
    kind: str
    p: object
    A: object
    window: tuple[int, int] | None
    terms: tuple[DecompositionTerm, ...]
    base: object = 1

    @property
    def tree(self) -> FiltrationTree:
        return self.source.tree

    @property
    def category(self) -> int:
        return CATEGORY_OF[self.kind]

    def mus(self) -> list:
        return [t.mu for t in self.terms]

    def reconstruct(self) -> Martingale:
        tree = self.tree
        acc = arith.zeros(tree.size, tree.mode)
        for t in self.terms:
            acc = acc + t.atom.a.values * t.mu
        return Martingale(tree, acc, check=False)

    def reconstruction_error(self) -> float:
        """max |f - sum mu a| / max |f| (0 if both vanish)."""
        diff = np.abs(np.asarray(self.reconstruct().values - self.source.values, dtype=np.float64))
        scale = float(np.max(np.abs(np.asarray(self.source.values, dtype=np.float64)), initial=0.0))
        err = float(np.max(diff, initial=0.0))
        return err / scale if scale else err

    def reconstruction_exact(self) -> bool:
        rec = self.reconstruct().values
        if self.tree.mode == arith.RATIONAL:
            return bool(np.all(rec == self.source.values))
        return self.reconstruction_error() <= 1e-10

    def nu_monotone(self) -> bool:
        times = [t.nu.leaf_times() for t in self.terms]
        return all(np.all(a <= b) for a, b in zip(times, times[1:]))

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "p": arith.fmt(self.p),
            "A": arith.fmt(self.A),
            "base": arith.fmt(self.base),
            "window": list(self.window) if self.window else None,
            "terms": [
                {
                    "k": t.k,
                    "mu": arith.fmt(t.mu),
                    "nu": list(t.nu.stop_set),
                    "atom": [arith.fmt(x) for x in t.atom.a.terminal],
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_doc(cls, source: Martingale, doc: dict) -> "AtomicDecomposition":
        tree = source.tree
        mode = tree.mode
        p = _parse_p(doc["p"])
        terms = []
        for t in doc["terms"]:
            vals = closure_values(tree, arith.to_array(t["atom"], mode))
            a = Martingale(tree, vals, check=False)
            nu = StoppingTime(tree, tuple(t["nu"]))
            terms.append(DecompositionTerm(int(t["k"]), arith.to_number(t["mu"], mode), TriAtom(a, nu, CATEGORY_OF[doc["kind"]], p)))
        window = tuple(doc["window"]) if doc["window"] is not None else None
        base = arith.to_number(doc.get("base", "1"), mode)
        return cls(source, doc["kind"], p, arith.to_number(doc["A"], mode), window, tuple(terms), base)


def _pow2(k: int, mode: str, squared: bool):
    base = 4 if squared else 2
    return Fraction(base) ** k if mode == arith.RATIONAL else float(base) ** k


def _natural_window(stat: np.ndarray, squared: bool) -> tuple[int, int] | None:
    """(k_min, k_max) with every positive stat above 2^{k_min} and none
    above 2^{k_max}; in squared form against 4^k."""
    pos = [Fraction(x) for x in stat if x > 0]
    if not pos:
        return None
    flog = arith.floor_log4 if squared else arith.floor_log2
    lo, hi = min(pos), max(pos)
    return flog(lo) - 1, -flog(1 / hi)  # ceil(log x) = -floor(log 1/x)


def _resolve_base(base, stat: np.ndarray, squared: bool, mode: str):
    """(c in stat units, c as a plain factor) for thresholds c 2^k.

    ``"auto"`` anchors the thresholds at the largest statistic value M,
    c = M / 2^floor(log2 M), which makes the construction commute with
    every rescaling of f (the plain 2^k grid only commutes with powers of 2).
    """
    one = arith.to_number(1, mode)
    if base is None:
        return one, one
    if base == "auto":
        top = max((Fraction(x) for x in stat if x > 0), default=None)
        if top is None:
            return one, one
        flog = arith.floor_log4 if squared else arith.floor_log2
        c_stat = top / (Fraction(4 if squared else 2) ** flog(top))
    else:
        c = Fraction(base) if not isinstance(base, float) else Fraction(base)
        if c <= 0:
            raise InvalidExponent(f"threshold base must be positive, got {base}")
        c_stat = c * c if squared else c
    c_plain = c_stat
    if squared:
        root = arith.power(c_stat, Fraction(1, 2))
        c_plain = Fraction(root) if not isinstance(root, Fraction) else root
        num, den = c_stat.numerator, c_stat.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            c_plain = Fraction(rn, rd)
    if mode == arith.FLOAT:
        return float(c_stat), float(c_plain)
    return c_stat, c_plain


def _decompose(f: Martingale, p, stat, squared: bool, kind: str, A, window, base=None) -> AtomicDecomposition:
    _check_p(p)
    tree = f.tree
    mode = tree.mode
    A = arith.to_number(A, mode)
    c_stat, c_plain = _resolve_base(base, stat, squared, mode)
    natural = _natural_window(stat / c_stat, squared)
    if natural is None:
        return AtomicDecomposition(f, kind, p, A, None, (), c_plain)
    if window is None:
        window = (natural[0], natural[1] - 1)
    lo, hi = window
    cross = {k: first_crossing(tree, stat, c_stat * _pow2(k, mode, squared)) for k in range(lo, hi + 2)}
    if stopped(f, cross[lo]).values.any() or np.any(stopped(f, cross[hi + 1]).values != f.values):
        raise ValueError(f"window {window} does not cover the decomposition")
    inv_p = 1 / _exact_p(p)
    category = CATEGORY_OF[kind]
    terms = []
    zero = arith.to_number(0, mode)
    for k in range(lo, hi + 1):
        nu = cross[k]
        inc = stopped(f, cross[k + 1]).values - stopped(f, nu).values
        P = nu.prob_finite()
        if not np.any(inc != zero) or P == 0:
            mu = zero
            a = zero_martingale(tree)
        else:
            mu = A * c_plain * _pow2(k, mode, False) * arith.power(P, inv_p)
            if mode == arith.RATIONAL and not isinstance(mu, Fraction):
                mu = Fraction(mu)  # irrational power: use the exact value of the float
            a = Martingale(tree, inc / mu, check=False)
        terms.append(DecompositionTerm(k, mu, TriAtom(a, nu, category, p)))
    return AtomicDecomposition(f, kind, p, A, (lo, hi), tuple(terms), c_plain)


def decompose_s(f: Martingale, p, A=DEFAULT_A, window=None, base=None) -> AtomicDecomposition:
    """s-type decomposition with nu_k = first n such that s_{n+1}(f) > c 2^k
    (c = 1 unless ``base`` is given; see :func:`_resolve_base`)."""
    _check_p(p)
    stat = predictable_cond_quad_variation(f, squared=True).values
    return _decompose(f, p, stat, True, "s", A, window, base)


def decompose_QD(f: Martingale, p, target: str, A=DEFAULT_A, window=None, base=None) -> AtomicDecomposition:
    """Q- or D-type decomposition stopping where the minimal envelope exceeds c 2^k."""
    _check_p(p)
    env = minimal_envelope(f, target)
    return _decompose(f, p, env.values, env.squared, target, A, window, base)


def decompose(f: Martingale, p, kind: str, A=DEFAULT_A, window=None, base=None) -> AtomicDecomposition:
    if kind == "s":
        return decompose_s(f, p, A, window, base)
    return decompose_QD(f, p, kind, A, window, base)


def source_norm(f: Martingale, kind: str, idx) -> float:
    return h_norm(f, "s", idx) if kind == "s" else qd_norm(f, kind, idx)


def coefficient_norm(dec: AtomicDecomposition, q) -> tuple[float, float]:
    """(||(mu_k)||_{l_q}, ratio against the source norm at (p, q)); 0/0 -> 0."""
    q = as_index((1, q)).q
    if not q > 0:
        raise InvalidExponent(f"q must be positive, got {q}")
    mus = np.array([float(m) for m in dec.mus()], dtype=np.float64)
    if math.isinf(q):
        norm = float(np.max(mus, initial=0.0))
    else:
        norm = float(np.sum(mus ** float(q)) ** (1.0 / float(q)))
    ref = source_norm(dec.source, dec.kind, LorentzIndex(dec.p, q))
    if ref == 0:
        return norm, 0.0
    return norm, norm / ref


def partial_sum_convergence(f: Martingale, p, q, kind: str = "s", base=None) -> list[float]:
    """||f - sum_{k=k_min}^{n} mu_k a^k|| for n = k_min - 1 (empty) .. k_max."""
    dec = decompose(f, p, kind, base=base)
    idx = LorentzIndex(p, q)
    rest = f
    out = [source_norm(rest, kind, idx)]
    for t in dec.terms:
        rest = rest - t.atom.a.scale(t.mu)
        out.append(source_norm(rest, kind, idx))
    return out


def _pairing(tree: FiltrationTree, x: np.ndarray, y: np.ndarray):
    return (tree.leaf_masses() * x * y).sum()


def orthogonality_check(dec: AtomicDecomposition, g: Martingale, raise_on_fail: bool = True) -> list[dict]:
    """E(a^k g) = E(a^k (g - g^{nu_k})) and the Hölder chain
    |E(a(g-g^nu))| <= E|a(g-g^nu)| <= ||a||_2 ||g-g^nu||_2
    <= ||stat(a)||_2 ||g-g^nu||_2 <= ||stat(a)||_inf P^{1/2} ||g-g^nu||_2
    <= P^{1/2-1/p} ||g-g^nu||_2, compared on squares.
    """
    tree = dec.tree
    mode = tree.mode
    m = tree.leaf_masses()
    rows = []
    for t in dec.terms:
        a = t.atom.a.terminal
        resid = g.terminal - stopped(g, t.nu).terminal
        lhs = _pairing(tree, a, g.terminal)
        rhs = _pairing(tree, a, resid)
        abs_pair = (m * np.abs(a * resid)).sum()
        a2 = (m * a * a).sum()
        r2 = (m * resid * resid).sum()
        stat2 = t.atom.stat_squared()[tree.leaves]
        st2 = (m * stat2).sum()
        sup2 = max(stat2) if len(stat2) else 0
        P = t.nu.prob_finite()
        chain = {
            "identity": _eq(lhs, rhs, mode),
            "abs": _le(abs(rhs), abs_pair, mode),
            "cauchy_schwarz": _le(abs_pair * abs_pair, a2 * r2, mode),
            "stat_l2": _le(a2, st2, mode),
            "support": _le(st2, sup2 * P, mode),
            "atom_bound": P == 0 or _le(sup2 * P, arith.power(P, 1 - 2 / _exact_p(dec.p)), mode),
        }
        for link, ok in chain.items():
            if not ok and raise_on_fail:
                raise ChainViolated(t.k, link, f"k={t.k}")
        rf = math.sqrt(float(r2))
        Pf = float(P)
        rows.append(
            {
                "k": t.k,
                "pairing": float(lhs),
                "identity_exact": bool(lhs == rhs),
                "slack_abs": float(abs_pair) - abs(float(rhs)),
                "slack_cauchy_schwarz": math.sqrt(float(a2)) * rf - float(abs_pair),
                "slack_atom_bound": (Pf ** (0.5 - 1 / float(dec.p)) * rf - math.sqrt(float(sup2) * Pf)) * rf if Pf else 0.0,
                "ok": all(chain.values()),
            }
        )
    return rows


def dual_witness(g: Martingale, seq, p, r, q=2) -> tuple[Martingale, float]:
    """Witness f = sum_k 2^k P(nu_k<inf)^{1/r'} (h_k - h_k^{nu_k}) with
    h_k = |g - g^{nu_k}|^{r-1} sign(.) / ||g - g^{nu_k}||_r^{r-1}, and the
    ratio ||f||_{H^s_{p,q}} / (sum_k (2^k P(nu_k<inf)^{1/p})^q)^{1/q}.

    Terms with g = g^{nu_k} are skipped. Computed in floating point; on a
    rational tree the float terminal values are carried over exactly.
    """
    _check_p(p)
    if not r >= 1:
        raise InvalidExponent(f"r must be >= 1, got {r}")
    tree = g.tree
    m = np.asarray(tree.leaf_masses(), dtype=np.float64)
    gN = np.asarray(g.terminal, dtype=np.float64)
    inv_rp = 1.0 - 1.0 / float(r)
    total = np.zeros(len(m))
    den = 0.0
    used = 0
    for k, nu in seq.times.items():
        D = gN - np.asarray(stopped(g, nu).terminal, dtype=np.float64)
        norm_r = float(np.sum(m * np.abs(D) ** r)) ** (1.0 / r)
        if norm_r == 0:
            continue
        h = np.abs(D) ** (r - 1) * np.sign(D) / norm_r ** (r - 1)
        H = np.asarray(closure_values(tree.to_mode(arith.FLOAT), h), dtype=np.float64)
        anc = nu.stop_ancestor()[tree.leaves]
        Hnu = np.where(anc >= 0, H[np.maximum(anc, 0)], h)
        P = float(nu.prob_finite())
        total += 2.0**k * P**inv_rp * (h - Hnu)
        den += (2.0**k * P ** (1.0 / float(p))) ** float(q)
        used += 1
    if not used:
        raise DegenerateSequence("every term of the sequence vanishes")
    total -= float(np.sum(m * total))  # remove rounding drift from the mean
    if tree.mode == arith.RATIONAL:
        vals = arith.to_array([Fraction(x) for x in total], tree.mode)
        vals = vals - (tree.leaf_masses() * vals).sum()
    else:
        vals = total
    f = martingale_from_terminal(tree, vals)
    ratio = h_norm(f, "s", LorentzIndex(p, q)) / den ** (1.0 / float(q))
    return f, ratio
