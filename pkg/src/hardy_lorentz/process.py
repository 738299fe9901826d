"""Martingales, adapted sequences and stopping times on a filtration tree.

Every process is a node-indexed array: the value at a level-n node is the
process at time n on that atom. Rational trees carry ``Fraction`` object
arrays so identities can be checked exactly; square roots (S, s) are only
taken at the end, the ``squared=True`` variants stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from . import arith
from .errors import (
    EnumerationCapExceeded,
    NonCenteredTerminal,
    NotAMartingale,
    NotAnAntichain,
    NotMeasurable,
    TreeMismatch,
)
from .filtration import FiltrationTree, expectations_all, leaf_array

DEFAULT_ENUMERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class AdaptedSequence:
    tree: FiltrationTree
    values: np.ndarray

    def at_level(self, n: int) -> np.ndarray:
        return self.values[self.tree.by_level[n]]

    @property
    def terminal(self) -> np.ndarray:
        return self.values[self.tree.leaves]

    def map(self, fn) -> "AdaptedSequence":
        return AdaptedSequence(self.tree, fn(self.values))


class Martingale(AdaptedSequence):
    """Adapted sequence with E_n f_{n+1} = f_n and f_0 = 0."""

    def __init__(self, tree: FiltrationTree, values: np.ndarray, check: bool = True):
        values = np.asarray(values)
        if tree.mode == arith.RATIONAL and values.dtype != object:
            values = arith.to_array(values, tree.mode)
        elif tree.mode == arith.FLOAT:
            values = values.astype(np.float64)
        if values.shape != (tree.size,):
            raise NotAMartingale(f"expected {tree.size} node values, got shape {values.shape}")
        super().__init__(tree, values)
        if check:
            self._check()

    def _check(self) -> None:
        tree = self.tree
        expected = expectations_all(tree, self.terminal)
        if not arith.allclose(expected, self.values, tree.mode):
            bad = int(np.argmax(np.abs(np.asarray(expected - self.values, dtype=np.float64))))
            raise NotAMartingale(f"martingale property fails at node {bad}")
        if not arith.close(self.values[0], 0, tree.mode):
            raise NonCenteredTerminal(f"f_0 = {self.values[0]} is not 0")

    def __add__(self, other: "Martingale") -> "Martingale":
        _same_tree(self, other)
        return Martingale(self.tree, self.values + other.values, check=False)

    def __sub__(self, other: "Martingale") -> "Martingale":
        _same_tree(self, other)
        return Martingale(self.tree, self.values - other.values, check=False)

    def __neg__(self) -> "Martingale":
        return Martingale(self.tree, -self.values, check=False)

    def scale(self, c) -> "Martingale":
        c = arith.to_number(c, self.tree.mode)
        return Martingale(self.tree, self.values * c, check=False)

    def mean_square(self):
        """E f_N^2."""
        return _dot(self.tree.leaf_masses(), self.terminal * self.terminal)


def _dot(a: np.ndarray, b: np.ndarray):
    return (a * b).sum()


def _same_tree(a, b) -> None:
    if a.tree is not b.tree:
        raise TreeMismatch("processes live on different trees")


def center(tree: FiltrationTree, leaf_values) -> np.ndarray:
    """Subtract the mean so the terminal values satisfy f_0 = 0."""
    x = leaf_array(tree, leaf_values)
    return x - _dot(tree.leaf_masses(), x)


def martingale_from_terminal(tree: FiltrationTree, leaf_values) -> Martingale:
    x = leaf_array(tree, leaf_values)
    mean = _dot(tree.leaf_masses(), x)
    if not arith.close(mean, 0, tree.mode):
        raise NonCenteredTerminal(f"terminal mean is {mean}; center it first")
    values = expectations_all(tree, x)
    if tree.mode == arith.FLOAT:
        values[0] = 0.0
    return Martingale(tree, values, check=False)


def zero_martingale(tree: FiltrationTree) -> Martingale:
    return Martingale(tree, arith.zeros(tree.size, tree.mode), check=False)


def closure_values(tree: FiltrationTree, leaf_values) -> np.ndarray:
    """E_n X at every node, without requiring E X = 0."""
    return expectations_all(tree, leaf_values)


def differences(f: AdaptedSequence) -> AdaptedSequence:
    """d_n f at every level-n node; d_0 f = f_0 (zero for martingales)."""
    tree = f.tree
    d = f.values.copy()
    kids = tree.parent >= 0
    d[kids] = f.values[kids] - f.values[tree.parent[kids]]
    return AdaptedSequence(tree, d)


def _path_accumulate(tree: FiltrationTree, step: np.ndarray, op) -> np.ndarray:
    out = step.copy()
    for n in range(1, tree.levels + 1):
        lvl = tree.by_level[n]
        out[lvl] = op(out[tree.parent[lvl]], step[lvl])
    return out


def maximal(f: AdaptedSequence) -> AdaptedSequence:
    """f*_n = max_{i<=n} |f_i| along each path."""
    return AdaptedSequence(f.tree, _path_accumulate(f.tree, np.abs(f.values), np.maximum))


def quad_variation(f: AdaptedSequence, squared: bool = False) -> AdaptedSequence:
    """S_n(f); with ``squared`` the exact S_n(f)^2."""
    d = differences(f).values
    s2 = _path_accumulate(f.tree, d * d, np.add)
    return AdaptedSequence(f.tree, s2 if squared else _sqrt(s2))


def conditional_variance_step(f: AdaptedSequence) -> np.ndarray:
    """E_n |d_{n+1} f|^2 on every level-n atom (zero on leaves)."""
    tree = f.tree
    d = differences(f).values
    acc = arith.zeros(tree.size, tree.mode)
    kids = np.flatnonzero(tree.parent >= 0)
    np.add.at(acc, tree.parent[kids], tree.mass[kids] * d[kids] * d[kids])
    return acc / tree.mass


def cond_quad_variation(f: AdaptedSequence, squared: bool = False) -> AdaptedSequence:
    """s_n(f) at level-n nodes; constant over siblings (F_{n-1}-measurable)."""
    tree = f.tree
    cv = conditional_variance_step(f)
    s2 = arith.zeros(tree.size, tree.mode)
    for n in range(1, tree.levels + 1):
        lvl = tree.by_level[n]
        par = tree.parent[lvl]
        s2[lvl] = s2[par] + cv[par]
    return AdaptedSequence(tree, s2 if squared else _sqrt(s2))


def predictable_cond_quad_variation(f: AdaptedSequence, squared: bool = False) -> AdaptedSequence:
    """s_{n+1}(f) placed at level-n nodes (s_{N+1} := s_N on leaves)."""
    s2 = cond_quad_variation(f, squared=True).values + conditional_variance_step(f)
    return AdaptedSequence(f.tree, s2 if squared else _sqrt(s2))


def _sqrt(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.asarray(a, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class StoppingTime:
    """Stop rule given by an antichain of stop nodes; elsewhere nu = infinity."""

    tree: FiltrationTree
    stop_set: tuple[int, ...]

    def __post_init__(self):
        s = tuple(sorted(int(i) for i in self.stop_set))
        if len(set(s)) != len(s):
            raise NotAnAntichain("duplicate stop nodes")
        for a in s:
            if not 0 <= a < self.tree.size:
                raise NotAnAntichain(f"node {a} not in tree")
        # preorder: if a is an ancestor of some later member, it is also an
        # ancestor of the member right after it
        for a, b in zip(s, s[1:]):
            if self.tree.is_ancestor_or_self(a, b):
                raise NotAnAntichain(f"node {a} is an ancestor of node {b}")
        object.__setattr__(self, "stop_set", s)

    def __eq__(self, other):
        return isinstance(other, StoppingTime) and other.tree is self.tree and other.stop_set == self.stop_set

    def __hash__(self):
        return hash(self.stop_set)

    def __repr__(self):
        return f"StoppingTime({list(self.stop_set)})"

    @classmethod
    def never(cls, tree: FiltrationTree) -> "StoppingTime":
        return cls(tree, ())

    @classmethod
    def constant(cls, tree: FiltrationTree, n: int) -> "StoppingTime":
        return cls(tree, tuple(int(i) for i in tree.by_level[n]))

    @classmethod
    def from_mask(cls, tree: FiltrationTree, mask) -> "StoppingTime":
        return cls(tree, tuple(int(i) for i in np.flatnonzero(mask)))

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.tree.size, dtype=bool)
        m[list(self.stop_set)] = True
        return m

    def prob_finite(self):
        """P(nu < infinity)."""
        return sum((self.tree.mass[i] for i in self.stop_set), arith.to_number(0, self.tree.mode))

    def stop_ancestor(self) -> np.ndarray:
        """For each node, the stop node at or above it, or -1."""
        tree = self.tree
        out = np.full(tree.size, -1, dtype=np.int64)
        for s in self.stop_set:
            out[s : tree.end[s]] = s
        return out

    def leaf_times(self) -> np.ndarray:
        """nu at each leaf (float so that infinity is representable)."""
        anc = self.stop_ancestor()[self.tree.leaves]
        t = np.full(len(anc), math.inf)
        hit = anc >= 0
        t[hit] = self.tree.level[anc[hit]]
        return t

    def finite_leaves(self) -> np.ndarray:
        return self.stop_ancestor()[self.tree.leaves] >= 0

    def at_least(self) -> np.ndarray:
        """Node mask of {nu >= n} at each level-n node (no stop strictly above)."""
        tree = self.tree
        anc = self.stop_ancestor()
        strict = np.zeros(tree.size, dtype=bool)
        kids = tree.parent >= 0
        strict[kids] = anc[tree.parent[kids]] >= 0
        return ~strict


def stopped(f: AdaptedSequence, nu: StoppingTime) -> AdaptedSequence:
    """f^nu: each path frozen at its stop node."""
    if nu.tree is not f.tree:
        raise TreeMismatch("stopping time and process live on different trees")
    anc = nu.stop_ancestor()
    vals = f.values.copy()
    hit = anc >= 0
    vals[hit] = f.values[anc[hit]]
    if isinstance(f, Martingale):
        return Martingale(f.tree, vals, check=False)
    return AdaptedSequence(f.tree, vals)


def stopping_time_count(tree: FiltrationTree) -> int:
    """T(leaf) = 2, T(node) = 1 + prod T(child)."""
    count = [0] * tree.size
    for i in range(tree.size - 1, -1, -1):
        kids = tree.nodes[i].children
        if not kids:
            count[i] = 2
        else:
            prod = 1
            for c in kids:
                prod *= count[c]
            count[i] = 1 + prod
    return count[0]


def stopping_time_matrix(tree: FiltrationTree, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Every stop rule as a boolean membership row, in canonical order.

    Row 0 is nu = infinity; within a subtree, "stop here" comes last.
    """
    total = stopping_time_count(tree)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} stopping times exceed cap {cap}")
    n = tree.size
    options: list[np.ndarray | None] = [None] * n
    for i in range(n - 1, -1, -1):
        kids = tree.nodes[i].children
        here = np.zeros((1, n), dtype=bool)
        here[0, i] = True
        if not kids:
            rows = np.vstack([np.zeros((1, n), dtype=bool), here])
        else:
            rows = options[kids[0]]
            for c in kids[1:]:
                other = options[c]
                rows = np.repeat(rows, len(other), axis=0) | np.tile(other, (len(rows), 1))
            rows = np.vstack([rows, here])
        for c in kids:
            options[c] = None
        options[i] = rows
    return options[0]


def enumerate_stopping_times(tree: FiltrationTree, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[StoppingTime]:
    for row in stopping_time_matrix(tree, cap):
        yield StoppingTime(tree, tuple(int(i) for i in np.flatnonzero(row)))


def first_crossing(tree: FiltrationTree, deciding: np.ndarray, threshold) -> StoppingTime:
    """Stop at the first node whose (F_n-measurable) value exceeds threshold."""
    crossed = np.asarray(deciding > threshold, dtype=bool)
    blocked = np.zeros(tree.size, dtype=bool)
    for n in range(1, tree.levels + 1):
        lvl = tree.by_level[n]
        par = tree.parent[lvl]
        blocked[lvl] = blocked[par] | crossed[par]
    return StoppingTime.from_mask(tree, crossed & ~blocked)


def level_crossing_time(seq: AdaptedSequence, threshold, lookahead: bool = False, squared: bool = False) -> StoppingTime:
    """nu = inf{n : lambda_n > threshold} with strict inequality.

    With ``lookahead`` the sequence is read one step ahead (as for s_{n+1}):
    the decision at a level-n atom uses the common value of its children,
    which must agree (else ``NotMeasurable``). With ``squared`` the sequence
    holds squares and is compared against threshold**2.
    """
    tree = seq.tree
    vals = seq.values
    if lookahead:
        deciding = vals.copy()
        for i in range(tree.size):
            kids = tree.children[i]
            if len(kids):
                first = vals[kids[0]]
                if any(vals[c] != first for c in kids[1:]):
                    raise NotMeasurable(f"one-step-ahead value varies below node {i}")
                deciding[i] = first
    else:
        deciding = vals
    if squared:
        if threshold < 0:
            return StoppingTime(tree, (0,))
        threshold = threshold * threshold
    return first_crossing(tree, deciding, threshold)
