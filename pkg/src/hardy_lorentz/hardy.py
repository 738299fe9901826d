"""Hardy-Lorentz functionals: H*, H^S, H^s and the predictable-envelope
norms Q and D."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import arith
from .filtration import regularity_constant
from .lorentz import StepRearrangement, as_index, rearrangement, rearrangement_norm
from .process import (
    AdaptedSequence,
    Martingale,
    cond_quad_variation,
    maximal,
    quad_variation,
)

KINDS = ("star", "S", "s")
TARGETS = ("Q", "D")
ALL_NORMS = KINDS + TARGETS


def _sqrt_steps(r: StepRearrangement) -> StepRearrangement:
    return r.map_values(lambda v: math.sqrt(float(v)))


def functional_rearrangement(f: Martingale, kind: str) -> StepRearrangement:
    """Rearrangement of f*, S(f) or s(f) on the leaves.

    S and s are rearranged through their exact squares, so the step masses
    stay exact on rational trees.
    """
    masses = f.tree.leaf_masses()
    if kind == "star":
        return rearrangement(maximal(f).terminal, masses)
    if kind == "S":
        return _sqrt_steps(rearrangement(quad_variation(f, squared=True).terminal, masses))
    if kind == "s":
        return _sqrt_steps(rearrangement(cond_quad_variation(f, squared=True).terminal, masses))
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def h_norm(f: Martingale, kind: str, idx) -> float:
    """||f*||_{p,q}, ||S(f)||_{p,q} or ||s(f)||_{p,q}."""
    idx = as_index(idx)
    return rearrangement_norm(functional_rearrangement(f, kind), idx)


@dataclass(frozen=True, eq=False)
class EnvelopeSequence:
    """Nondecreasing adapted lambda_n dominating the next-step statistic.

    For target Q the values are stored squared (lambda_n^2), which keeps the
    greedy construction exact on rational trees.
    """

    tree: object
    values: np.ndarray
    target: str
    squared: bool

    @property
    def terminal(self) -> np.ndarray:
        return self.values[self.tree.leaves]

    def terminal_rearrangement(self) -> StepRearrangement:
        r = rearrangement(self.terminal, self.tree.leaf_masses())
        return _sqrt_steps(r) if self.squared else r

    def plain_values(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.values, dtype=np.float64)) if self.squared else self.values


def envelope_target(f: Martingale, target: str) -> tuple[np.ndarray, bool]:
    """The statistic an envelope must dominate one step ahead: S_n^2 or |f_n|."""
    if target == "Q":
        return quad_variation(f, squared=True).values, True
    if target == "D":
        return np.abs(f.values), False
    raise ValueError(f"target must be one of {TARGETS}, got {target!r}")


def minimal_envelope(f: Martingale, target: str) -> EnvelopeSequence:
    """Pointwise least envelope: lambda_n(A) = max(lambda_{n-1}(parent),
    max over children c of target_{n+1}(c)), with lambda_N = lambda_{N-1}."""
    tree = f.tree
    stat, squared = envelope_target(f, target)
    lam = arith.zeros(tree.size, tree.mode)
    for n in range(tree.levels + 1):
        for a in tree.by_level[n]:
            best = lam[tree.parent[a]] if n else lam[a]
            for c in tree.children[a]:
                if stat[c] > best:
                    best = stat[c]
            lam[a] = best
    return EnvelopeSequence(tree, lam, target, squared)


def envelope_violations(env: EnvelopeSequence, f: Martingale) -> list[str]:
    """Exact validity check: nonnegative, nondecreasing, dominating."""
    tree = f.tree
    stat, squared = envelope_target(f, env.target)
    if squared != env.squared:
        return ["squared flag does not match target"]
    lam = env.values
    bad = []
    for i in range(tree.size):
        if lam[i] < 0:
            bad.append(f"negative at node {i}")
        par = tree.parent[i]
        if par >= 0:
            if lam[i] < lam[par]:
                bad.append(f"decreases at node {i}")
            if stat[i] > lam[par]:
                bad.append(f"target at node {i} exceeds lambda of parent")
    return bad


def random_valid_envelope(env: EnvelopeSequence, rng: np.random.Generator, spread: float = 1.0) -> EnvelopeSequence:
    """Perturb an envelope upward while keeping it nondecreasing and adapted."""
    tree = env.tree
    base = env.values
    scale = float(np.max(np.asarray(base, dtype=np.float64), initial=0.0)) or 1.0
    noise = rng.exponential(spread * scale, size=tree.size) * (rng.random(tree.size) < 0.5)
    if tree.mode == arith.RATIONAL:
        noise = np.array([arith.to_number(round(float(z), 6), tree.mode) for z in noise], dtype=object)
    out = base + noise
    for n in range(1, tree.levels + 1):
        lvl = tree.by_level[n]
        out[lvl] = np.maximum(out[lvl], out[tree.parent[lvl]])
    return EnvelopeSequence(tree, out, env.target, env.squared)


def envelope_norm(env: EnvelopeSequence, idx) -> float:
    return rearrangement_norm(env.terminal_rearrangement(), as_index(idx))


def qd_norm(f: Martingale, target: str, idx) -> float:
    """||f||_Q or ||f||_D: the minimal envelope attains the infimum."""
    return envelope_norm(minimal_envelope(f, target), idx)


def all_norms(f: Martingale, idx) -> dict[str, float]:
    out = {k: h_norm(f, k, idx) for k in KINDS}
    out.update({t: qd_norm(f, t, idx) for t in TARGETS})
    return out


def equivalence_study(instances, idx) -> tuple[list[dict], dict]:
    """Pairwise ratios of the five norms over (instance_id, martingale) pairs.

    For p > 1 the plain Lorentz norm of f_N is compared as well (kind "L").
    Zero martingales produce no rows.
    """
    from .lorentz import lorentz_norm

    idx = as_index(idx)
    rows = []
    for inst_id, f in instances:
        norms = all_norms(f, idx)
        if float(idx.p) > 1:
            norms["L"] = lorentz_norm(f.terminal, f.tree.leaf_masses(), idx)
        if all(v == 0 for v in norms.values()):
            continue
        R = float(regularity_constant(f.tree))
        for a, b in combinations(list(norms), 2):
            rows.append(
                {
                    "instance_id": inst_id,
                    "R": R,
                    "p": float(idx.p),
                    "q": float(idx.q),
                    "norm_kind_a": a,
                    "norm_kind_b": b,
                    "ratio": norms[a] / norms[b],
                }
            )
    return rows, summarize(rows, ("norm_kind_a", "norm_kind_b"))


def summarize(rows: list[dict], keys: tuple[str, ...], value: str = "ratio") -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault("/".join(str(r[k]) for k in keys), []).append(r[value])
    return {
        k: {"count": len(v), "min": min(v), "median": statistics.median(v), "max": max(v)}
        for k, v in sorted(groups.items())
    }
