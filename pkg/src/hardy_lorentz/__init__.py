"""Exact computations for martingale Hardy-Lorentz spaces on finite filtration trees."""

from __future__ import annotations

__version__ = "0.1.0"

from .atomic import coefficient_norm, decompose, decompose_QD, decompose_s, orthogonality_check, validate_atom  # noqa: E402
from .bmo import bmo_exact, bmo_seq_estimate, bmo_seq_exhaustive, bmo_stopping  # noqa: E402
from .filtration import FiltrationTree, build_tree, regularity_constant, split_tree, uniform_tree  # noqa: E402
from .fracint import fractional_integral  # noqa: E402
from .hardy import h_norm, minimal_envelope, qd_norm  # noqa: E402
from .lorentz import LorentzIndex, lorentz_norm  # noqa: E402
from .process import Martingale, StoppingTime, martingale_from_terminal  # noqa: E402

__all__ = [
    "FiltrationTree",
    "LorentzIndex",
    "Martingale",
    "StoppingTime",
    "bmo_exact",
    "bmo_seq_estimate",
    "bmo_seq_exhaustive",
    "bmo_stopping",
    "build_tree",
    "coefficient_norm",
    "decompose",
    "decompose_QD",
    "decompose_s",
    "fractional_integral",
    "h_norm",
    "lorentz_norm",
    "martingale_from_terminal",
    "minimal_envelope",
    "orthogonality_check",
    "qd_norm",
    "regularity_constant",
    "split_tree",
    "uniform_tree",
    "validate_atom",
]
