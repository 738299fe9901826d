from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from hardy_lorentz.filtration import build_tree, split_tree, uniform_tree
from hardy_lorentz.generate import InstanceSpec, generate
from hardy_lorentz.process import center, martingale_from_terminal


@pytest.fixture
def one_step():
    tree = uniform_tree(2, 1)
    return martingale_from_terminal(tree, [1, -1])


def random_martingale(tree, rng, integers=True):
    n = len(tree.leaves)
    if integers:
        x = [int(v) for v in rng.integers(-6, 7, size=n)]
    else:
        x = list(rng.normal(size=n))
    return martingale_from_terminal(tree, center(tree, x))


def random_instance(seed, depth=(1, 3), kind="random", mode="rational", distribution="uniform"):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(depth[0], depth[1] + 1))
    return generate(InstanceSpec(kind, d, (2, 3), 0.2, distribution, seed, mode))


__all__ = ["ACCEPTANCE", "Fraction", "build_tree", "split_tree", "uniform_tree", "random_martingale", "random_instance"]


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
