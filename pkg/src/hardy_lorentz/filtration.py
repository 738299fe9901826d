"""Finite filtrations as rooted trees of atoms.

Level ``n`` of the tree is the partition generating F_n; a node is an atom
and its mass is its probability. Nodes are indexed depth-first (children in
input order), so every subtree is a contiguous index range and the leaves
under a node are a contiguous slice of ``tree.leaves``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from . import arith
from .errors import (
    EmptyLevel,
    LevelOutOfRange,
    MassMismatch,
    MissingLeafValue,
    NonPositiveMass,
)


@dataclass(frozen=True)
class Node:
    index: int
    level: int
    mass: Any
    parent: int | None
    children: tuple[int, ...]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class FiltrationTree:
    """Validated, immutable atom tree. Build it with :func:`build_tree`."""

    def __init__(self, levels: int, nodes: list[Node], mode: str):
        self.levels = levels
        self.mode = mode
        self.nodes = tuple(nodes)
        n = len(nodes)
        self.size = n
        self.parent = _frozen(np.array([-1 if x.parent is None else x.parent for x in nodes], dtype=np.int64))
        self.level = _frozen(np.array([x.level for x in nodes], dtype=np.int64))
        mass = arith.to_array([x.mass for x in nodes], mode)
        self.mass = _frozen(mass)
        self.mass_float = _frozen(np.asarray(mass, dtype=np.float64))
        self.children = tuple(np.array(x.children, dtype=np.int64) for x in nodes)
        self.by_level = tuple(_frozen(np.flatnonzero(self.level == k)) for k in range(levels + 1))
        self.leaves = self.by_level[levels]
        # subtree ranges [i, end[i]) and leaf slices [leaf_lo[i], leaf_hi[i])
        end = np.arange(1, n + 1, dtype=np.int64)
        for i in range(n - 1, -1, -1):
            if nodes[i].children:
                end[i] = end[nodes[i].children[-1]]
        self.end = _frozen(end)
        leaf_rank = np.cumsum(self.level == levels)
        before = np.concatenate([[0], leaf_rank])
        self.leaf_lo = _frozen(before[np.arange(n)].astype(np.int64))
        self.leaf_hi = _frozen(before[end].astype(np.int64))
        # ancestor of every node at every level (-1 when the level is deeper)
        anc = np.full((levels + 1, n), -1, dtype=np.int64)
        for i in range(n):
            lvl = nodes[i].level
            anc[lvl, i] = i
            if lvl:
                anc[:lvl, i] = anc[:lvl, nodes[i].parent]
        self.ancestor = _frozen(anc)

    def __repr__(self) -> str:
        return f"FiltrationTree(levels={self.levels}, nodes={self.size}, leaves={len(self.leaves)}, mode={self.mode!r})"

    @property
    def tolerance(self) -> float:
        return 0.0 if self.mode == arith.RATIONAL else arith.FLOAT_RTOL

    def leaf_masses(self) -> np.ndarray:
        return self.mass[self.leaves]

    def leaf_ancestors(self, level: int) -> np.ndarray:
        """Index of the level-``level`` atom containing each leaf."""
        return self.ancestor[level, self.leaves]

    def is_ancestor_or_self(self, a: int, b: int) -> bool:
        return a <= b < self.end[a]

    def to_mode(self, mode: str) -> "FiltrationTree":
        if mode == self.mode:
            return self
        return build_tree(to_spec(self), mode=mode)


def _parse_node(doc: dict, level: int, parent: int | None, nodes: list[Node], mode: str, levels: int) -> int:
    mass = arith.to_number(doc["mass"], mode)
    if not mass > 0:
        raise NonPositiveMass(f"node at level {level} has mass {mass}")
    idx = len(nodes)
    nodes.append(None)  # placeholder keeps preorder indices
    kids = doc.get("children") or []
    if level > levels:
        raise EmptyLevel(f"node at level {level} exceeds declared depth {levels}")
    if level < levels and not kids:
        raise EmptyLevel(f"non-terminal node {idx} at level {level} has no children")
    if level == levels and kids:
        raise EmptyLevel(f"node {idx} at terminal level {levels} has children")
    child_idx = tuple(_parse_node(k, level + 1, idx, nodes, mode, levels) for k in kids)
    if child_idx:
        total = sum((nodes[c].mass for c in child_idx), arith.to_number(0, mode))
        if not arith.close(total, mass, mode):
            raise MassMismatch(f"children of node {idx} sum to {total}, parent mass {mass}")
    nodes[idx] = Node(idx, level, mass, parent, child_idx)
    return idx


def _depth(doc: dict) -> int:
    kids = doc.get("children") or []
    return 0 if not kids else 1 + max(_depth(k) for k in kids)


def build_tree(spec: dict, mode: str = arith.RATIONAL) -> FiltrationTree:
    """Validate a nested mass description and freeze it into a tree.

    ``spec`` is either ``{"levels": N, "root": {...}}`` or a bare root node
    ``{"mass": m, "children": [...]}``; masses may be numbers or decimal /
    ``"p/q"`` strings.
    """
    arith.check_mode(mode)
    root = spec["root"] if "root" in spec else spec
    levels = int(spec["levels"]) if "levels" in spec else _depth(root)
    if levels < 1:
        raise EmptyLevel("a filtration needs at least one level below the root")
    nodes: list[Node] = []
    _parse_node(root, 0, None, nodes, mode, levels)
    if not arith.close(nodes[0].mass, arith.to_number(1, mode), mode):
        raise MassMismatch(f"root mass is {nodes[0].mass}, expected 1")
    return FiltrationTree(levels, nodes, mode)


def to_spec(tree: FiltrationTree) -> dict:
    def node_doc(i: int) -> dict:
        doc: dict = {"mass": arith.fmt(tree.mass[i])}
        kids = tree.nodes[i].children
        if kids:
            doc["children"] = [node_doc(int(c)) for c in kids]
        return doc

    return {"levels": tree.levels, "root": node_doc(0)}


def uniform_tree(branching: int, depth: int, mode: str = arith.RATIONAL) -> FiltrationTree:
    """Every atom splits into ``branching`` children of equal mass."""

    def node(mass: Fraction, level: int) -> dict:
        if level == depth:
            return {"mass": mass}
        return {"mass": mass, "children": [node(mass / branching, level + 1) for _ in range(branching)]}

    return build_tree({"levels": depth, "root": node(Fraction(1), 0)}, mode=mode)


def split_tree(masses: Iterable, mode: str = arith.RATIONAL) -> FiltrationTree:
    """Depth-one tree whose leaves carry ``masses``."""
    return build_tree({"levels": 1, "root": {"mass": 1, "children": [{"mass": m} for m in masses]}}, mode=mode)


def regularity_constant(tree: FiltrationTree):
    """Least R with f_n <= R f_{n-1} for all nonnegative martingales.

    On an atom tree this is the largest parent/child mass ratio: the
    indicator martingale of a child atom attains it.
    """
    kids = np.flatnonzero(tree.parent >= 0)
    ratios = [tree.mass[tree.parent[i]] / tree.mass[i] for i in kids]
    return max(ratios)


def atoms_at(tree: FiltrationTree, n: int) -> list[Node]:
    _check_level(tree, n)
    return [tree.nodes[i] for i in tree.by_level[n]]


def _check_level(tree: FiltrationTree, n: int) -> None:
    if not 0 <= n <= tree.levels:
        raise LevelOutOfRange(f"level {n} outside [0, {tree.levels}]")


def leaf_array(tree: FiltrationTree, leaf_values) -> np.ndarray:
    """Accept a sequence (canonical leaf order) or a {leaf index: value} map."""
    if isinstance(leaf_values, dict):
        missing = [int(i) for i in tree.leaves if int(i) not in leaf_values]
        if missing:
            raise MissingLeafValue(f"no value for leaves {missing}")
        vals = [leaf_values[int(i)] for i in tree.leaves]
    else:
        vals = list(leaf_values)
        if len(vals) != len(tree.leaves):
            raise MissingLeafValue(f"expected {len(tree.leaves)} leaf values, got {len(vals)}")
    if isinstance(leaf_values, np.ndarray) and leaf_values.dtype == np.float64 and tree.mode == arith.FLOAT:
        return np.array(leaf_values, dtype=np.float64)
    return arith.to_array(vals, tree.mode)


def expectations_all(tree: FiltrationTree, leaf_values) -> np.ndarray:
    """E_n of the terminal variable at every node (node-indexed array)."""
    x = leaf_array(tree, leaf_values)
    acc = arith.zeros(tree.size, tree.mode)
    acc[tree.leaves] = tree.leaf_masses() * x
    # bottom-up sums avoid the cancellation of global prefix sums
    for n in range(tree.levels, 0, -1):
        lvl = tree.by_level[n]
        np.add.at(acc, tree.parent[lvl], acc[lvl])
    out = acc / tree.mass
    out[tree.leaves] = x
    return out


def conditional_expectation(tree: FiltrationTree, leaf_values, n: int) -> np.ndarray:
    """E_n of the terminal variable, one value per level-``n`` atom."""
    _check_level(tree, n)
    return expectations_all(tree, leaf_values)[tree.by_level[n]]
