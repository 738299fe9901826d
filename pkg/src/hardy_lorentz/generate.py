"""Seeded instance generators: random filtration trees and martingales."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import arith
from .errors import InvalidSpec
from .filtration import FiltrationTree, build_tree
from .process import Martingale, center, martingale_from_terminal

KINDS = ("dyadic", "ternary", "random")
DISTRIBUTIONS = ("uniform", "gaussian", "sparse-sign")


@dataclass(frozen=True)
class InstanceSpec:
    kind: str = "dyadic"
    depth: int = 2
    branching: tuple[int, int] = (2, 3)
    min_ratio: float = 0.2
    distribution: str = "uniform"
    seed: int = 0
    mode: str = arith.RATIONAL

    def __post_init__(self):
        object.__setattr__(self, "branching", tuple(int(b) for b in self.branching))
        if self.kind not in KINDS:
            raise InvalidSpec(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidSpec(f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}")
        if int(self.depth) < 1:
            raise InvalidSpec(f"depth must be >= 1, got {self.depth}")
        lo, hi = self.branching
        if not 2 <= lo <= hi:
            raise InvalidSpec(f"branching bounds must satisfy 2 <= lo <= hi, got {self.branching}")
        if not 0 < self.min_ratio <= 1:
            raise InvalidSpec(f"min_ratio must lie in (0, 1], got {self.min_ratio}")
        if self.kind == "random" and self.min_ratio * hi > 1:
            raise InvalidSpec(f"min_ratio {self.min_ratio} is infeasible with {hi} children")
        if self.mode not in arith.MODES:
            raise InvalidSpec(f"mode must be one of {arith.MODES}, got {self.mode!r}")

    def to_doc(self) -> dict:
        doc = asdict(self)
        doc["branching"] = list(self.branching)
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "InstanceSpec":
        try:
            return cls(**doc)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc


def _random_tree_doc(spec: InstanceSpec, rng: np.random.Generator) -> dict:
    lo, hi = spec.branching
    floor = Fraction(spec.min_ratio).limit_denominator(1000)

    def node(mass: Fraction, level: int) -> dict:
        if level == spec.depth:
            return {"mass": mass}
        if spec.kind == "dyadic":
            shares = [Fraction(1, 2)] * 2
        elif spec.kind == "ternary":
            shares = [Fraction(1, 3)] * 3
        else:
            b = int(rng.integers(lo, hi + 1))
            w = [int(x) for x in rng.integers(1, 11, size=b)]
            if spec.distribution == "sparse-sign":
                # equal sibling shares in pairs give the sign pattern room to cancel
                w = [w[i // 2] for i in range(b)]
            rest = 1 - b * floor
            shares = [floor + rest * Fraction(x, sum(w)) for x in w]
        return {"mass": mass, "children": [node(mass * s, level + 1) for s in shares]}

    return {"levels": spec.depth, "root": node(Fraction(1), 0)}


def _sparse_sign(tree: FiltrationTree, rng: np.random.Generator) -> list[int]:
    """Values in {-1, 0, 1} paired over equal-mass leaves, so the mean is 0."""
    masses = tree.leaf_masses()
    vals = [0] * len(masses)
    groups: dict = {}
    for i, m in enumerate(masses):
        groups.setdefault(Fraction(m) if tree.mode == arith.RATIONAL else float(m), []).append(i)
    for idx in groups.values():
        order = rng.permutation(len(idx))
        for a, b in zip(order[0::2], order[1::2]):
            s = int(rng.choice([-1, 0, 1]))
            vals[idx[a]], vals[idx[b]] = s, -s
    return vals


def generate_tree(spec: InstanceSpec, rng: np.random.Generator | None = None) -> FiltrationTree:
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    return build_tree(_random_tree_doc(spec, rng), mode=spec.mode)


def generate(spec: InstanceSpec) -> tuple[FiltrationTree, Martingale]:
    """Deterministic (tree, martingale) for ``spec``; terminal values centred."""
    rng = np.random.default_rng(spec.seed)
    tree = generate_tree(spec, rng)
    n = len(tree.leaves)
    if spec.distribution == "sparse-sign":
        return tree, martingale_from_terminal(tree, _sparse_sign(tree, rng))
    if spec.distribution == "uniform":
        raw = [Fraction(int(x), 1000) for x in rng.integers(-1000, 1001, size=n)]
    else:
        raw = [Fraction(int(round(x * 16)), 16) for x in rng.normal(size=n)]
    x = arith.to_array(raw, tree.mode)
    return tree, martingale_from_terminal(tree, center(tree, x))


def pair_martingale(tree: FiltrationTree, seed: int, distribution: str = "uniform") -> Martingale:
    """A second martingale on an existing tree (for pairings)."""
    rng = np.random.default_rng(seed)
    n = len(tree.leaves)
    if distribution == "sparse-sign":
        return martingale_from_terminal(tree, _sparse_sign(tree, rng))
    raw = [Fraction(int(x), 1000) for x in rng.integers(-1000, 1001, size=n)]
    return martingale_from_terminal(tree, center(tree, arith.to_array(raw, tree.mode)))


@dataclass
class InstanceBlock:
    """A reproducible batch: per-instance choices drawn from ``seed``."""

    count: int
    seed: int = 0
    kind: str | list = "random"
    depth: int | list = field(default_factory=lambda: [1, 3])
    branching: list = field(default_factory=lambda: [2, 3])
    min_ratio: float = 0.2
    distribution: str | list = field(default_factory=lambda: list(DISTRIBUTIONS))
    mode: str = arith.RATIONAL

    def specs(self) -> list[tuple[str, InstanceSpec]]:
        rng = np.random.default_rng(self.seed)
        out = []
        for i in range(int(self.count)):
            kind = self.kind if isinstance(self.kind, str) else str(rng.choice(self.kind))
            depth = self.depth if isinstance(self.depth, int) else int(rng.integers(self.depth[0], self.depth[1] + 1))
            dist = self.distribution if isinstance(self.distribution, str) else str(rng.choice(self.distribution))
            seed = int(rng.integers(0, 2**31 - 1))
            spec = InstanceSpec(kind, depth, tuple(self.branching), self.min_ratio, dist, seed, self.mode)
            out.append((f"i{self.seed:04d}-{i:05d}", spec))
        return out
