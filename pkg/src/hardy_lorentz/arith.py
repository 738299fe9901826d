"""Arithmetic modes: exact ``Fraction`` object arrays or float64 arrays."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

import numpy as np

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

FLOAT_RTOL = 1e-12


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def to_number(x, mode: str):
    """Convert a number or a decimal / "p/q" string into the mode's scalar."""
    if mode == RATIONAL:
        if isinstance(x, str):
            return Fraction(x.strip())
        if isinstance(x, float):
            # floats typed by hand are meant as decimals, not binary fractions
            return Fraction(repr(x))
        return Fraction(x)
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    return float(x)


def to_array(values, mode: str) -> np.ndarray:
    if mode == RATIONAL:
        return np.array([to_number(v, mode) for v in values], dtype=object)
    return np.array([to_number(v, mode) for v in values], dtype=np.float64)


def zeros(n: int, mode: str) -> np.ndarray:
    if mode == RATIONAL:
        out = np.empty(n, dtype=object)
        out[:] = [Fraction(0)] * n
        return out
    return np.zeros(n, dtype=np.float64)


def as_float(arr) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64) if np.ndim(arr) else float(arr)


def exact_exponent(e) -> int | None:
    """Return ``e`` as an int when it is an exact integer, else None."""
    if isinstance(e, bool):
        return None
    if isinstance(e, int):
        return e
    if isinstance(e, Rational):
        return int(e) if Fraction(e).denominator == 1 else None
    if isinstance(e, float) and e.is_integer():
        return int(e)
    return None


def power(x, e):
    """x**e, exact when x is a Fraction and e an integer; float otherwise."""
    ie = exact_exponent(e)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        x = Fraction(int(x))
    if isinstance(x, Fraction) and ie is not None:
        if x == 0 and ie <= 0:
            return Fraction(1) if ie == 0 else math.inf
        return x**ie
    xf = float(x)
    ef = float(e)
    if xf == 0.0:
        return 1.0 if ef == 0 else (0.0 if ef > 0 else math.inf)
    return xf**ef


def power_array(arr: np.ndarray, e) -> np.ndarray:
    if arr.dtype == object:
        ie = exact_exponent(e)
        if ie is not None:
            return np.array([power(x, ie) for x in arr], dtype=object)
        arr = arr.astype(np.float64)
    with np.errstate(divide="ignore"):
        return np.power(arr, float(e))


def close(a, b, mode: str, rtol: float | None = None) -> bool:
    """Mode-dependent equality: exact in rational mode, relative in float."""
    if mode == RATIONAL and rtol is None:
        return a == b
    rtol = FLOAT_RTOL if rtol is None else rtol
    a = float(a)
    b = float(b)
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def allclose(a: np.ndarray, b: np.ndarray, mode: str, rtol: float | None = None) -> bool:
    if mode == RATIONAL and rtol is None and a.dtype == object and b.dtype == object:
        return bool(np.all(a == b))
    rtol = FLOAT_RTOL if rtol is None else rtol
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    return bool(np.all(np.abs(a - b) <= rtol * scale))


def fmt(x) -> str:
    """Serialise a scalar: "p/q" (or integer) for Fractions, repr for floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def floor_log2(x) -> int:
    """Largest integer k with 2**k <= x, exact for Fractions (x > 0)."""
    if isinstance(x, Fraction):
        n, d = x.numerator, x.denominator
        k = n.bit_length() - d.bit_length()
        # adjust so that 2**k <= n/d < 2**(k+1)
        while _pow2(k) > x:
            k -= 1
        while _pow2(k + 1) <= x:
            k += 1
        return k
    k = math.floor(math.log2(x))
    while 2.0**k > x:
        k -= 1
    while 2.0 ** (k + 1) <= x:
        k += 1
    return k


def floor_log4(x) -> int:
    """Largest k with 4**k <= x; used on squared statistics."""
    if isinstance(x, Fraction):
        k = floor_log2(x) // 2
        while _pow2(2 * k) > x:
            k -= 1
        while _pow2(2 * k + 2) <= x:
            k += 1
        return k
    return floor_log2(math.sqrt(x))


def _pow2(k: int) -> Fraction:
    return Fraction(2) ** k
