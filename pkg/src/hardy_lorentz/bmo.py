"""Lipschitz norms BMO_r(alpha) and the stopping-time-sequence norm
BMO_{r,q}(alpha).

All BMO quantities are computed in floating point. Everything reduces to
per-node oscillations osc_r(A) = int_A |g - g(A)|^r: for a stop rule nu,
||g - g^nu||_r^r is the sum of osc_r over its stop nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import kernels
from .errors import EnumerationCapExceeded, InvalidExponent
from .filtration import FiltrationTree, regularity_constant
from .process import (
    DEFAULT_ENUMERATION_CAP,
    Martingale,
    StoppingTime,
    first_crossing,
    maximal,
    predictable_cond_quad_variation,
    quad_variation,
    stopping_time_count,
    stopping_time_matrix,
)

DEFAULT_SEQUENCE_CAP = 10**7


def _check_r_alpha(r, alpha) -> None:
    if not r >= 1 or not math.isfinite(r):
        raise InvalidExponent(f"r must be a finite number >= 1, got {r}")
    if not alpha >= 0:
        raise InvalidExponent(f"alpha must be >= 0, got {alpha}")


def _check_q(q) -> None:
    if not q >= 1 or not math.isfinite(q):
        raise InvalidExponent(f"q must be a finite number >= 1, got {q}")


def oscillations(g: Martingale, r: float) -> np.ndarray:
    """osc_r(A) = sum over leaves w under A of P(w) |g_N(w) - g(A)|^r."""
    tree = g.tree
    vals = np.asarray(g.values, dtype=np.float64)
    term = vals[tree.leaves]
    m = tree.mass_float[tree.leaves]
    out = np.zeros(tree.size)
    for a in range(tree.size):
        lo, hi = tree.leaf_lo[a], tree.leaf_hi[a]
        out[a] = float(np.sum(m[lo:hi] * np.abs(term[lo:hi] - vals[a]) ** r))
    return out


def _atom_ratio(osc, mass, r, alpha):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = osc ** (1.0 / r) / mass ** (1.0 / r + alpha)
    return np.where(osc > 0, out, 0.0)


def bmo_exact(g: Martingale, r: float, alpha: float) -> float:
    """sup_n sup_{A atom of F_n} P(A)^{-1/r-alpha} (int_A |g - E_n g|^r)^{1/r}.

    Unions of atoms never beat their best atom because t -> t^{1+r alpha}
    is superadditive; :func:`bmo_exact_subsets` checks this by brute force.
    """
    _check_r_alpha(r, alpha)
    osc = oscillations(g, r)
    return float(np.max(_atom_ratio(osc, g.tree.mass_float, r, alpha)))


def bmo_exact_subsets(g: Martingale, r: float, alpha: float, max_atoms: int = 8) -> float:
    """Same supremum over every union of same-level atoms (levels with more
    than ``max_atoms`` atoms fall back to single atoms)."""
    _check_r_alpha(r, alpha)
    tree = g.tree
    osc = oscillations(g, r)
    mass = tree.mass_float
    best = 0.0
    for lvl in tree.by_level:
        atoms = list(lvl)
        sizes = range(1, len(atoms) + 1) if len(atoms) <= max_atoms else (1,)
        for size in sizes:
            for sub in combinations(atoms, size):
                o = float(osc[list(sub)].sum())
                if o > 0:
                    best = max(best, o ** (1.0 / r) / float(mass[list(sub)].sum()) ** (1.0 / r + alpha))
    return best


def bmo_stopping(g: Martingale, r: float, alpha: float, cap: int = DEFAULT_ENUMERATION_CAP, return_witness: bool = False):
    """sup over every stop rule nu of P(nu<inf)^{-1/r-alpha} ||g - g^nu||_r,
    by exhaustive enumeration; P(nu<inf) = 0 contributes 0."""
    _check_r_alpha(r, alpha)
    rows = stopping_time_matrix(g.tree, cap)
    osc = oscillations(g, r)
    so, sm = kernels.antichain_sums(rows, osc, g.tree.mass_float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where((sm > 0) & (so > 0), so ** (1.0 / r) / sm ** (1.0 / r + alpha), 0.0)
    i = int(np.argmax(ratio))
    value = float(ratio[i])
    if return_witness:
        return value, StoppingTime.from_mask(g.tree, rows[i])
    return value


# -- stopping time sequences --------------------------------------------------


@dataclass(frozen=True, eq=False)
class StoppingSequence:
    """{nu_k} on the window [k_min, k_max]; missing k mean nu_k = infinity."""

    tree: FiltrationTree
    window: tuple[int, int]
    times: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.window
        if lo > hi:
            raise ValueError(f"empty window {self.window}")
        clean = {}
        for k, nu in self.times.items():
            if not lo <= k <= hi:
                raise ValueError(f"index {k} outside window {self.window}")
            if nu is not None and nu.stop_set:
                clean[int(k)] = nu
        object.__setattr__(self, "times", dict(sorted(clean.items())))

    def ks(self) -> range:
        return range(self.window[0], self.window[1] + 1)

    def get(self, k: int) -> StoppingTime:
        return self.times.get(k) or StoppingTime.never(self.tree)

    def to_doc(self) -> dict:
        return {"window": list(self.window), "nu": {str(k): list(nu.stop_set) for k, nu in self.times.items()}}

    @classmethod
    def from_doc(cls, tree: FiltrationTree, doc: dict) -> "StoppingSequence":
        times = {int(k): StoppingTime(tree, tuple(v)) for k, v in doc["nu"].items()}
        return cls(tree, tuple(doc["window"]), times)


@dataclass(frozen=True, eq=False)
class BmoEstimate:
    """A lower bound on ||g||_{BMO_{r,q}(alpha)} with the sequence attaining it."""

    value: float
    witness: StoppingSequence
    method: str

    def to_doc(self) -> dict:
        return {"value": self.value, "method": self.method, "witness": self.witness.to_doc()}


def _exponent(alpha, exponent):
    return 1.0 + alpha if exponent is None else float(exponent)


def duality_exponent(p) -> float:
    """Denominator exponent 1/p used in the duality statements."""
    return 1.0 / float(p)


def _ratio_from_terms(num: np.ndarray, den_q: np.ndarray, q: float) -> float:
    d = float(den_q.sum())
    if d <= 0:
        return math.nan
    return float(num.sum()) / d ** (1.0 / q)


def sequence_terms(g: Martingale, seq: StoppingSequence, r, q, alpha, exponent=None):
    """Per-k numerator terms 2^k P^{1-1/r} ||g - g^nu_k||_r and denominator
    terms (2^k P^e)^q (e = 1 + alpha unless given)."""
    e = _exponent(alpha, exponent)
    osc = oscillations(g, r)
    mass = g.tree.mass_float
    num, den = [], []
    for k, nu in seq.times.items():
        idx = list(nu.stop_set)
        P = float(mass[idx].sum())
        o = float(osc[idx].sum())
        num.append(2.0**k * P ** (1.0 - 1.0 / r) * o ** (1.0 / r))
        den.append((2.0**k * P**e) ** q)
    return np.array(num), np.array(den)


def sequence_ratio(g: Martingale, seq: StoppingSequence, r, q, alpha, exponent=None) -> float:
    """The defining ratio at one sequence; NaN when every nu_k is infinite."""
    num, den = sequence_terms(g, seq, r, q, alpha, exponent)
    return _ratio_from_terms(num, den, q)


def _pool_weights(osc, mass, rows, r, e):
    so, sm = kernels.antichain_sums(rows, osc, mass)
    c = sm ** (1.0 - 1.0 / r) * so ** (1.0 / r)
    w = sm**e
    return c, w


def pareto_filter(c: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Indices of pool entries not dominated (larger c, smaller w).

    Dropping dominated entries cannot lower the best sequence ratio: the
    ratio is nondecreasing in every numerator term and nonincreasing in
    every denominator term.
    """
    order = np.lexsort((-c, w))  # w ascending, then c descending
    keep = []
    best_c = -math.inf
    for j in order:
        if c[j] > best_c:
            keep.append(int(j))
            best_c = c[j]
    return np.array(sorted(keep), dtype=np.int64)


def _seq_from_assignment(tree, window, rows, assign) -> StoppingSequence:
    times = {}
    for k, j in zip(range(window[0], window[1] + 1), assign):
        times[k] = StoppingTime.from_mask(tree, rows[int(j)])
    return StoppingSequence(tree, window, times)


def bmo_seq_exhaustive(
    g: Martingale,
    r,
    q,
    alpha,
    window: tuple[int, int],
    cap: int = DEFAULT_SEQUENCE_CAP,
    exponent=None,
    prune: bool = True,
    return_witness: bool = False,
):
    """Exact maximum of the defining ratio over every assignment of a stop
    rule (or infinity) to each k in ``window``.

    With ``prune`` the pool is first reduced to its non-dominated entries,
    which is lossless (see :func:`pareto_filter`); the search itself is a
    brute-force scan in :mod:`kernels`.
    """
    _check_r_alpha(r, alpha)
    _check_q(q)
    e = _exponent(alpha, exponent)
    tree = g.tree
    rows = stopping_time_matrix(tree, DEFAULT_ENUMERATION_CAP)
    c, w = _pool_weights(oscillations(g, r), tree.mass_float, rows, r, e)
    keep = pareto_filter(c, w) if prune else np.arange(len(c))
    k_len = window[1] - window[0] + 1
    if len(keep) ** k_len > cap:
        raise EnumerationCapExceeded(f"{len(keep)}^{k_len} sequences exceed cap {cap}")
    scale = 2.0 ** np.arange(window[0], window[1] + 1)
    best, assign = kernels.sequence_search(c[keep], w[keep], scale, q)
    value = max(best, 0.0)
    if return_witness:
        return value, _seq_from_assignment(tree, window, rows[keep], assign)
    return value


# -- estimator ----------------------------------------------------------------


@dataclass
class EstimatorConfig:
    window: tuple[int, int] | None = None
    pool_cap: int = 200_000
    random_sequences: int = 64
    max_iterations: int = 200
    seed: int = 0
    exponent: float | None = None
    families: tuple[str, ...] = ("singleton", "level-crossing", "random", "parametric", "local-search")


def default_window(g: Martingale) -> tuple[int, int]:
    """[floor(log2 m) - 2, ceil(log2 M) + 1] for the positive values of
    s_{n+1}(g); (0, 0) for the zero martingale."""
    s = np.asarray(predictable_cond_quad_variation(g).values, dtype=np.float64)
    pos = s[s > 0]
    if not len(pos):
        return (0, 0)
    return (math.floor(math.log2(pos.min())) - 2, math.ceil(math.log2(pos.max())) + 1)


def _envelope(c: np.ndarray, W: np.ndarray):
    """Upper envelope over z >= 0 of the lines c_j - W_j z.

    Returns (line indices in order of increasing z, interior breakpoints).
    """
    order = np.lexsort((-c, -W))  # W descending, ties: larger c first
    lines: list[int] = []
    for j in order:
        if lines and W[lines[-1]] == W[j]:
            continue
        while len(lines) >= 2:
            a, b = lines[-2], lines[-1]
            # b is useless if j overtakes a no later than b does
            z_ab = (c[a] - c[b]) / (W[a] - W[b])
            z_aj = (c[a] - c[j]) / (W[a] - W[j])
            if z_aj <= z_ab:
                lines.pop()
            else:
                break
        lines.append(int(j))
    bps = [(c[a] - c[b]) / (W[a] - W[b]) for a, b in zip(lines, lines[1:])]
    # drop segments that end before z = 0
    while bps and bps[0] <= 0:
        lines.pop(0)
        bps.pop(0)
    return np.array(lines, dtype=np.int64), np.array(bps, dtype=np.float64)


def parametric_search(c: np.ndarray, w: np.ndarray, scale: np.ndarray, q: float):
    """Best assignment of pool entries to slots for the sequence ratio.

    For q > 1, max_x R(x)^{q'}/q' = max_s max_x sum_k [s t_k c_x - (s t_k w_x)^q / q]
    and for fixed s the inner max splits over slots; each slot's best
    response follows the upper envelope of the lines c_j - w_j^q z at
    z = (s t_k)^{q-1}/q, so scanning one s per envelope interval is exact
    for the given pool. For q = 1 the best single entry is optimal.
    Returns (ratio, assignment) or (nan, None) if no valid assignment.
    """
    m = len(c)
    k_len = len(scale)
    if q == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            rat = np.where(w > 0, c / w, -np.inf)
        j = int(np.argmax(rat))
        if not np.isfinite(rat[j]):
            return math.nan, None
        zero = np.flatnonzero((c == 0) & (w == 0))
        fill = int(zero[0]) if len(zero) else j
        assign = np.full(k_len, fill, dtype=np.int64)
        assign[0] = j
        return float(rat[j]), assign
    W = w**q
    lines, bps = _envelope(c, W)
    s_points = []
    for t in scale:
        for z in bps:
            s_points.append((q * z) ** (1.0 / (q - 1.0)) / t)
    s_points = np.unique(np.array(s_points, dtype=np.float64))
    if len(s_points):
        cands = np.concatenate([[s_points[0] / 2], (s_points[:-1] + s_points[1:]) / 2, [s_points[-1] * 2]])
    else:
        cands = np.array([1.0])
    z = (cands[:, None] * scale[None, :]) ** (q - 1.0) / q
    pos = np.searchsorted(bps, z, side="right")
    assign = lines[pos]
    num = (scale[None, :] * c[assign]).sum(axis=1)
    den = ((scale[None, :] * w[assign]) ** q).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den ** (1.0 / q), -np.inf)
    i = int(np.argmax(ratio))
    if not np.isfinite(ratio[i]):
        return math.nan, None
    del m
    return float(ratio[i]), assign[i]


def _random_mask(tree: FiltrationTree, rng: np.random.Generator) -> np.ndarray:
    rho = rng.uniform(0.1, 0.9)
    marks = rng.random(tree.size) < rho
    return first_crossing(tree, marks.astype(np.int64), 0).mask


def _crossing_sequences(g: Martingale, window) -> list[tuple[str, StoppingSequence]]:
    tree = g.tree
    stats = {
        "s": np.asarray(predictable_cond_quad_variation(g).values, dtype=np.float64),
        "S": np.asarray(quad_variation(g).values, dtype=np.float64),
        "star": np.asarray(maximal(g).values, dtype=np.float64),
    }
    out = []
    lo, hi = window
    for name, stat in stats.items():
        base = {k: first_crossing(tree, stat, 2.0**k) for k in range(lo, hi + 1)}
        # the ratio is shift invariant, so shifting re-centres the window
        for shift in range(-(hi - lo), hi - lo + 1):
            times = {}
            for k in range(lo, hi + 1):
                if lo <= k + shift <= hi:
                    times[k] = base[k + shift]
            seq = StoppingSequence(tree, window, times)
            if seq.times:
                out.append((name, seq))
    return out


class _LocalSearch:
    """Steepest ascent over single-node toggles of one slot's stop set."""

    def __init__(self, g: Martingale, r, q, e, window):
        tree = g.tree
        self.tree = tree
        self.osc = oscillations(g, r)
        self.mass = tree.mass_float
        self.r, self.q, self.e = r, q, e
        self.scale = 2.0 ** np.arange(window[0], window[1] + 1)
        self.window = window
        anc = tree.ancestor.copy()
        # strict ancestors only
        for j in range(tree.size):
            anc[tree.level[j] :, j] = -1
        self.strict_anc = anc

    def _terms(self, O, P):
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.where(P > 0, P ** (1.0 - 1.0 / self.r) * O ** (1.0 / self.r), 0.0)
        den = P**self.e
        return num, den

    def ratio(self, masks) -> float:
        O = np.array([self.osc[m].sum() for m in masks])
        P = np.array([self.mass[m].sum() for m in masks])
        num, den = self._terms(O, P)
        return _ratio_from_terms(self.scale * num, (self.scale * den) ** self.q, self.q)

    def _conflict(self, mask, weights):
        mw = np.where(mask, weights, 0.0)
        prefix = np.concatenate([[0.0], np.cumsum(mw)])
        sub = prefix[self.tree.end] - prefix[np.arange(self.tree.size)]
        padded = np.concatenate([mw, [0.0]])
        anc = padded[self.strict_anc].sum(axis=0)  # -1 hits the zero pad
        return sub + anc

    def run(self, masks: list[np.ndarray], max_iter: int):
        masks = [m.copy() for m in masks]
        O = np.array([self.osc[m].sum() for m in masks])
        P = np.array([self.mass[m].sum() for m in masks])
        num, den = self._terms(O, P)
        num = self.scale * num
        den = (self.scale * den) ** self.q
        current = _ratio_from_terms(num, den, self.q)
        if math.isnan(current):
            current = -math.inf
        for _ in range(max_iter):
            best_val, best_move = current, None
            for k in range(len(masks)):
                mask = masks[k]
                newO = O[k] - self._conflict(mask, self.osc) + np.where(mask, 0.0, self.osc)
                newP = P[k] - self._conflict(mask, self.mass) + np.where(mask, 0.0, self.mass)
                newO = np.maximum(newO, 0.0)
                newP = np.maximum(newP, 0.0)
                n_k, d_k = self._terms(newO, newP)
                n_tot = num.sum() - num[k] + self.scale[k] * n_k
                d_tot = den.sum() - den[k] + (self.scale[k] * d_k) ** self.q
                with np.errstate(divide="ignore", invalid="ignore"):
                    vals = np.where(d_tot > 0, n_tot / d_tot ** (1.0 / self.q), -np.inf)
                j = int(np.argmax(vals))
                if vals[j] > best_val * (1 + 1e-13) + 1e-300:
                    best_val, best_move = float(vals[j]), (k, j)
            if best_move is None:
                break
            k, j = best_move
            mask = masks[k]
            if mask[j]:
                mask[j] = False
            else:
                tree = self.tree
                mask[j : tree.end[j]] = False
                for a in self.strict_anc[:, j]:
                    if a >= 0:
                        mask[a] = False
                mask[j] = True
            O[k] = self.osc[mask].sum()
            P[k] = self.mass[mask].sum()
            n_k, d_k = self._terms(np.array([O[k]]), np.array([P[k]]))
            num[k] = self.scale[k] * n_k[0]
            den[k] = (self.scale[k] * d_k[0]) ** self.q
            current = best_val
        return current, masks


def bmo_seq_estimate(g: Martingale, r, q, alpha, config: EstimatorConfig | None = None) -> BmoEstimate:
    """Lower bound on ||g||_{BMO_{r,q}(alpha)}: the best ratio found over
    singleton sequences, level-crossing sequences of s(g), S(g) and g*,
    seeded random sequences, the parametric best-response scan over the
    stop-rule pool, and steepest-ascent local search from the best of these.

    When the full stop-rule pool fits under ``config.pool_cap`` the
    parametric scan is exact for the window.
    """
    _check_r_alpha(r, alpha)
    _check_q(q)
    config = config or EstimatorConfig()
    tree = g.tree
    e = _exponent(alpha, config.exponent)
    window = tuple(config.window) if config.window is not None else default_window(g)
    ks = list(range(window[0], window[1] + 1))
    scale = 2.0 ** np.array(ks, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    osc = oscillations(g, r)
    mass = tree.mass_float

    if not np.any(osc > 0):
        return BmoEstimate(0.0, StoppingSequence(tree, window), "singleton")

    if stopping_time_count(tree) <= config.pool_cap:
        rows = stopping_time_matrix(tree, config.pool_cap)
    else:
        extra = [np.eye(tree.size, dtype=bool)]
        extra.append(np.array([StoppingTime.constant(tree, n).mask for n in range(tree.levels + 1)]))
        extra.append(np.array([_random_mask(tree, rng) for _ in range(4 * tree.size)]))
        rows = np.unique(np.vstack(extra + [np.zeros((1, tree.size), dtype=bool)]), axis=0)
    c, w = _pool_weights(osc, mass, rows, r, e)

    best_val, best_seq, best_method = -math.inf, None, None

    def offer(seq: StoppingSequence, method: str):
        nonlocal best_val, best_seq, best_method
        val = sequence_ratio(g, seq, r, q, alpha, config.exponent)
        if not math.isnan(val) and val > best_val:
            best_val, best_seq, best_method = val, seq, method

    fam = config.families
    if "singleton" in fam:
        with np.errstate(divide="ignore", invalid="ignore"):
            single = np.where(w > 0, c / w, -np.inf)
        j = int(np.argmax(single))
        k0 = 0 if window[0] <= 0 <= window[1] else window[0]
        offer(StoppingSequence(tree, window, {k0: StoppingTime.from_mask(tree, rows[j])}), "singleton")
    if "level-crossing" in fam:
        for _, seq in _crossing_sequences(g, window):
            offer(seq, "level-crossing")
    if "random" in fam:
        for _ in range(config.random_sequences):
            times = {}
            for k in ks:
                if rng.random() < 0.5:
                    times[k] = StoppingTime.from_mask(tree, rows[rng.integers(len(rows))])
            seq = StoppingSequence(tree, window, times)
            if seq.times:
                offer(seq, "random")
    if "parametric" in fam:
        keep = pareto_filter(c, w)
        val, assign = parametric_search(c[keep], w[keep], scale, q)
        if assign is not None:
            offer(_seq_from_assignment(tree, window, rows[keep], assign), "parametric")
    if "local-search" in fam and best_seq is not None:
        ls = _LocalSearch(g, r, q, e, window)
        start = [best_seq.get(k).mask for k in ks]
        _, masks = ls.run(start, config.max_iterations)
        times = {k: StoppingTime.from_mask(tree, m) for k, m in zip(ks, masks)}
        offer(StoppingSequence(tree, window, times), "local-search")

    if best_seq is None:
        return BmoEstimate(0.0, StoppingSequence(tree, window), "singleton")
    return BmoEstimate(best_val, best_seq, best_method)


def jn_study(instances, r_list=(1, 1.5, 3, 4), q=2, alpha=0.0, config: EstimatorConfig | None = None) -> list[dict]:
    """Ratios of the BMO_{r,q}(alpha) estimate to the r = 2 estimate.

    ``instances`` yields (instance_id, martingale); zero martingales are
    skipped. All estimates share the window of the instance.
    """
    rows = []
    for inst_id, g in instances:
        cfg = EstimatorConfig(**vars(config)) if config else EstimatorConfig()
        if cfg.window is None:
            cfg.window = default_window(g)
        base = bmo_seq_estimate(g, 2, q, alpha, cfg)
        if base.value == 0:
            continue
        R = float(regularity_constant(g.tree))
        for r in r_list:
            est = base if r == 2 else bmo_seq_estimate(g, r, q, alpha, cfg)
            rows.append(
                {
                    "instance_id": inst_id,
                    "R": R,
                    "r": float(r),
                    "q": float(q),
                    "alpha": float(alpha),
                    "estimate_r": est.value,
                    "estimate_2": base.value,
                    "ratio": est.value / base.value,
                }
            )
    return rows
