"""Fractional integral I_alpha f = sum_k b_{k-1}^alpha d_k f, where b_k is the
mass of the level-k atom, and the boundedness experiments built on it."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import arith
from .atomic import TriAtom
from .errors import ExponentMismatch, InvalidExponent, NegativeAlpha, ParameterOutOfRange, PreconditionFailed
from .filtration import FiltrationTree, regularity_constant
from .hardy import h_norm
from .lorentz import LorentzIndex
from .process import (
    AdaptedSequence,
    Martingale,
    differences,
    enumerate_stopping_times,
    maximal,
    stopped,
)


def b_process(tree: FiltrationTree) -> AdaptedSequence:
    """b_k on a level-k atom is its mass."""
    return AdaptedSequence(tree, tree.mass.copy())


def _exact(x):
    return Fraction(x) if isinstance(x, float) else x


def _coefficients(tree: FiltrationTree, alpha) -> np.ndarray:
    """b^alpha per node; on rational trees non-integer powers are stored as
    the exact rational value of their float approximation."""
    if tree.mode == arith.RATIONAL:
        return np.array([_exact(arith.power(m, alpha)) for m in tree.mass], dtype=object)
    return np.power(tree.mass_float, float(alpha))


def fractional_integral(f: Martingale, alpha) -> Martingale:
    if alpha < 0:
        raise NegativeAlpha(f"alpha must be >= 0, got {alpha}")
    tree = f.tree
    d = differences(f).values
    coef = _coefficients(tree, alpha)
    out = arith.zeros(tree.size, tree.mode)
    for n in range(1, tree.levels + 1):
        lvl = tree.by_level[n]
        par = tree.parent[lvl]
        # b_{n-1} is F_{n-1}-measurable, shared by siblings: still a martingale
        out[lvl] = out[par] + coef[par] * d[lvl]
    return Martingale(tree, out, check=False)


def _subtree_leaf_mask(tree: FiltrationTree, node: int) -> np.ndarray:
    mask = np.zeros(len(tree.leaves), dtype=bool)
    mask[tree.leaf_lo[node] : tree.leaf_hi[node]] = True
    return mask


def lemma62_check(f: Martingale, B: int, alpha) -> dict:
    """For f with f* <= chi_B: whether (I_alpha f)* vanishes off B, and
    ||(I_alpha f)*||_inf / P(B)^alpha."""
    tree = f.tree
    if not 0 <= B < tree.size:
        raise PreconditionFailed(f"node {B} not in tree")
    star = maximal(f).terminal
    inside = _subtree_leaf_mask(tree, B)
    one = arith.to_number(1, tree.mode)
    if any(v != 0 for v in star[~inside]) or any(v > one for v in star[inside]):
        raise PreconditionFailed("f* is not dominated by the indicator of B")
    istar = maximal(fractional_integral(f, alpha)).terminal
    support_ok = bool(all(v == 0 for v in istar[~inside]))
    top = float(max(istar, default=0))
    return {"support_ok": support_ok, "ratio": top / float(tree.mass[B]) ** float(alpha)}


def _check_alpha(p1, p2, alpha):
    expect = 1 / Fraction(p1) - 1 / Fraction(p2) if not isinstance(p1, float) and not isinstance(p2, float) else 1 / p1 - 1 / p2
    if alpha is None:
        return expect
    if isinstance(alpha, float) or isinstance(expect, float):
        ok = abs(float(alpha) - float(expect)) <= 1e-12 * max(1.0, abs(float(expect)))
    else:
        ok = Fraction(alpha) == expect
    if not ok:
        raise ExponentMismatch(f"alpha = {alpha} but 1/p1 - 1/p2 = {expect}")
    return alpha


def atom_boundedness(atom: TriAtom, p1, p2, q2, alpha=None) -> dict:
    """||I_alpha a||_{H*_{p2,q2}} for a star-type atom, with the instance
    constant C = ||(I_alpha a)*||_inf P(nu<inf)^{1/p1-alpha} that bounds it
    (the Lorentz norm of a function supported on {nu<inf})."""
    if atom.category != 3:
        raise InvalidExponent("atom_boundedness expects a star-type (category 3) atom")
    if not (0 < p1 < p2):
        raise InvalidExponent(f"need 0 < p1 < p2, got p1={p1}, p2={p2}")
    alpha = _check_alpha(p1, p2, alpha)
    Ia = fractional_integral(atom.a, alpha)
    norm = h_norm(Ia, "star", LorentzIndex(p2, q2))
    star = maximal(Ia).terminal
    P = float(atom.nu.prob_finite())
    sup = float(max(abs(float(v)) for v in star))
    c_inst = sup * P ** (1.0 / float(p1) - float(alpha)) if P else 0.0
    finite = atom.nu.finite_leaves()
    support_ok = bool(all(v == 0 for v in star[~finite]))
    return {"norm": norm, "chain_bound": c_inst, "support_ok": support_ok, "within_bound": norm <= c_inst * (1 + 1e-9)}


def check_study_parameters(p1, q1, p2, q2, alpha) -> None:
    """0 < q1 <= 1, q1 <= q2, q1 <= p2, 0 < p1 <= p2 and alpha = 1/p1 - 1/p2."""
    if not (0 < q1 <= 1):
        raise ParameterOutOfRange(f"q1 = {q1} must lie in (0, 1]")
    if not (q1 <= q2 and q1 <= p2):
        raise ParameterOutOfRange("need q1 <= q2 and q1 <= p2")
    if not (0 < p1 <= p2):
        raise ParameterOutOfRange(f"need 0 < p1 <= p2, got {p1}, {p2}")
    try:
        _check_alpha(p1, p2, alpha)
    except ExponentMismatch as exc:
        raise ParameterOutOfRange(str(exc)) from exc


def boundedness_study(p1, q1, p2, q2, alpha, instances) -> list[dict]:
    """Rows (instance_id, R, alpha, p1, q1, p2, q2, ratio) of
    ||I_alpha f||_{H*_{p2,q2}} / ||f||_{H*_{p1,q1}}; zero-norm f skipped."""
    check_study_parameters(p1, q1, p2, q2, alpha)
    rows = []
    for inst_id, f in instances:
        den = h_norm(f, "star", LorentzIndex(p1, q1))
        if den == 0:
            continue
        num = h_norm(fractional_integral(f, alpha), "star", LorentzIndex(p2, q2))
        rows.append(
            {
                "instance_id": inst_id,
                "R": float(regularity_constant(f.tree)),
                "alpha": float(alpha),
                "p1": float(p1),
                "q1": float(q1),
                "p2": float(p2),
                "q2": float(q2),
                "ratio": num / den,
            }
        )
    return rows


def stopping_commutes(f: Martingale, alpha, cap: int = 10**4) -> bool:
    """(I_alpha f)^nu == I_alpha(f^nu) for every enumerated stop rule."""
    If = fractional_integral(f, alpha)
    for nu in enumerate_stopping_times(f.tree, cap):
        lhs = stopped(If, nu).values
        rhs = fractional_integral(stopped(f, nu), alpha).values
        if not np.all(lhs == rhs):
            return False
    return True
