"""JSON documents for trees, martingales, stopping times and decompositions.

Numbers are written as strings ("p/q" for rationals, repr for floats) so a
parse/serialize round trip is the identity and output is byte-stable.
"""

from __future__ import annotations

import json

from . import arith
from .atomic import AtomicDecomposition
from .errors import InvalidSpec
from .filtration import FiltrationTree, build_tree, to_spec
from .process import Martingale, StoppingTime, martingale_from_terminal

SCHEMA = 1


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def tree_doc(tree: FiltrationTree) -> dict:
    return to_spec(tree)


def parse_tree(doc: dict, mode: str = arith.RATIONAL) -> FiltrationTree:
    return build_tree(doc, mode=mode)


def martingale_doc(f: Martingale) -> dict:
    return {"tree": to_spec(f.tree), "terminal": [arith.fmt(x) for x in f.terminal]}


def parse_martingale(doc: dict, mode: str = arith.RATIONAL, tree: FiltrationTree | None = None) -> Martingale:
    if "terminal" not in doc:
        raise InvalidSpec("martingale document needs a 'terminal' list")
    if tree is None:
        if "tree" not in doc:
            raise InvalidSpec("martingale document needs a 'tree'")
        tree = parse_tree(doc["tree"], mode)
    vals = arith.to_array([str(v) if not isinstance(v, str) else v for v in doc["terminal"]], tree.mode)
    return martingale_from_terminal(tree, vals)


def stopping_time_doc(nu: StoppingTime) -> list[int]:
    return list(nu.stop_set)


def parse_stopping_time(tree: FiltrationTree, doc) -> StoppingTime:
    return StoppingTime(tree, tuple(int(i) for i in doc))


def decomposition_doc(dec: AtomicDecomposition) -> dict:
    return {"schema": SCHEMA, "source": martingale_doc(dec.source), "decomposition": dec.to_doc()}


def parse_decomposition(doc: dict, mode: str = arith.RATIONAL) -> AtomicDecomposition:
    source = parse_martingale(doc["source"], mode)
    return AtomicDecomposition.from_doc(source, doc["decomposition"])
