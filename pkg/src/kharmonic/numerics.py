"""Precision backends and finite-difference stencils.

Two kinds of arrays circulate in this package: ordinary float64 ndarrays and
object ndarrays of ``gmpy2.mpfr`` values.  High-order finite differences
amplify sample rounding by 1/h^j, so verification of residuals that involve
sixth or eighth derivatives is done in extended precision; everything else
(flows, energies, spectra) stays in float64.  All elementwise helpers here
dispatch on the array dtype so the calling code is written once.

Stencil weights are solved exactly over the rationals and converted to the
working precision at the point of use.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import gmpy2

# Default mpfr precision (bits).  ~48 decimal digits: enough that an 8th
# derivative at N=512 keeps >20 significant digits after the 1/h^8 blow-up.
HP_BITS = 160

_hp_ready = False


def hp_context(bits: int = HP_BITS) -> None:
    """Set the global gmpy2 working precision used by the hp backend."""
    global _hp_ready
    gmpy2.get_context().precision = bits
    _hp_ready = True


def _ensure_hp() -> None:
    if not _hp_ready:
        hp_context()


def is_hp(x) -> bool:
    """True if x is an object ndarray (or scalar) of mpfr values."""
    if isinstance(x, np.ndarray):
        return x.dtype == object
    return isinstance(x, (gmpy2.mpfr, gmpy2.mpq))


def hp_float(x) -> gmpy2.mpfr:
    _ensure_hp()
    if isinstance(x, Fraction):
        return gmpy2.mpfr(x.numerator) / gmpy2.mpfr(x.denominator)
    return gmpy2.mpfr(x)


def hp_array(x) -> np.ndarray:
    """Convert array-like (floats are exact) to an object array of mpfr."""
    _ensure_hp()
    a = np.asarray(x)
    out = np.empty(a.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(np.asarray(a).reshape(-1)):
        flat[i] = gmpy2.mpfr(v)
    return out


def hp_pi() -> gmpy2.mpfr:
    _ensure_hp()
    return gmpy2.const_pi()


def hp_sqrt(x):
    _ensure_hp()
    return gmpy2.sqrt(gmpy2.mpfr(x))


_hp_cos_u = np.frompyfunc(gmpy2.cos, 1, 1)
_hp_sin_u = np.frompyfunc(gmpy2.sin, 1, 1)
_hp_cosh_u = np.frompyfunc(gmpy2.cosh, 1, 1)
_hp_sinh_u = np.frompyfunc(gmpy2.sinh, 1, 1)
_hp_sqrt_u = np.frompyfunc(gmpy2.sqrt, 1, 1)


def elem_cos(x):
    if is_hp(x):
        _ensure_hp()
        return _hp_cos_u(x)
    return np.cos(x)


def elem_sin(x):
    if is_hp(x):
        _ensure_hp()
        return _hp_sin_u(x)
    return np.sin(x)


def elem_cosh(x):
    if is_hp(x):
        _ensure_hp()
        return _hp_cosh_u(x)
    return np.cosh(x)


def elem_sinh(x):
    if is_hp(x):
        _ensure_hp()
        return _hp_sinh_u(x)
    return np.sinh(x)


def elem_sqrt(x):
    if is_hp(x):
        _ensure_hp()
        return _hp_sqrt_u(x)
    return np.sqrt(x)


def to_float(x):
    """Convert scalar or array (either backend) to float64."""
    if isinstance(x, np.ndarray):
        if x.dtype == object:
            return np.array([float(v) for v in x.reshape(-1)],
                            dtype=float).reshape(x.shape)
        return x.astype(float)
    return float(x)


def zeros_like_backend(shape, hp: bool):
    if hp:
        _ensure_hp()
        out = np.empty(shape, dtype=object)
        out.reshape(-1)[:] = [gmpy2.mpfr(0)] * out.size
        return out
    return np.zeros(shape)


# ---------------------------------------------------------------------------
# Finite-difference stencils
# ---------------------------------------------------------------------------

SUPPORTED_ORDERS = (2, 4, 6, 8)


@lru_cache(maxsize=None)
def stencil(j: int, order: int) -> tuple[tuple[int, ...], tuple[Fraction, ...]]:
    """Central-difference offsets and exact rational weights.

    The returned weights are dimensionless; divide the weighted sum by h**j.
    Exactness on monomials up to degree >= order + j - 1 follows from the
    Vandermonde construction; the symmetric stencil gains one extra order.
    """
    if j < 1:
        raise ValueError("derivative order j must be >= 1")
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"accuracy order must be one of {SUPPORTED_ORDERS}")
    w = (j + 1) // 2 + order // 2 - 1
    offsets = tuple(range(-w, w + 1))
    n = len(offsets)
    rows = [[Fraction(m) ** r for m in offsets] for r in range(n)]
    rhs = [Fraction(0)] * n
    rhs[j] = Fraction(math.factorial(j))
    aug = [row[:] + [rhs[i]] for i, row in enumerate(rows)]
    for c in range(n):
        p = next(r for r in range(c, n) if aug[r][c] != 0)
        aug[c], aug[p] = aug[p], aug[c]
        piv = aug[c][c]
        aug[c] = [x / piv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    weights = tuple(aug[i][n] for i in range(n))
    return offsets, weights


def stencil_for(j: int, order: int, hp: bool):
    """Offsets plus weights materialized in the requested precision."""
    offsets, weights = stencil(j, order)
    if hp:
        _ensure_hp()
        w = [hp_float(x) for x in weights]
    else:
        w = [float(x) for x in weights]
    return offsets, w


def apply_stencil_periodic(values: np.ndarray, j: int, order: int, h):
    """j-th derivative of periodically sampled values (axis 0)."""
    hp = is_hp(values)
    offsets, weights = stencil_for(j, order, hp)
    out = weights[0] * np.roll(values, -offsets[0], axis=0)
    for o, w in zip(offsets[1:], weights[1:]):
        out = out + w * np.roll(values, -o, axis=0)
    return out / h ** j


def apply_stencil_interval(values: np.ndarray, j: int, order: int, h):
    """Centered stencil on a non-periodic grid.

    Rows closer to an edge than the stencil half-width are filled with zeros;
    the caller masks them out (the validity margin (order/2)*j used by the
    bookkeeping is at least the half-width, so masked rows cover these).
    """
    hp = is_hp(values)
    offsets, weights = stencil_for(j, order, hp)
    n = values.shape[0]
    w_half = offsets[-1]
    out = zeros_like_backend(values.shape, hp)
    sl = slice(w_half, n - w_half)
    acc = weights[0] * values[w_half + offsets[0]:n - w_half + offsets[0]]
    for o, w in zip(offsets[1:], weights[1:]):
        acc = acc + w * values[w_half + o:n - w_half + o]
    out[sl] = acc / h ** j
    return out


def erode_mask(valid: np.ndarray, margin: int) -> np.ndarray:
    """Shrink a validity mask by `margin` nodes on each side of every run."""
    if margin <= 0:
        return valid.copy()
    out = valid.copy()
    for s in range(1, margin + 1):
        shifted_fwd = np.concatenate([valid[s:], np.zeros(s, dtype=bool)])
        shifted_back = np.concatenate([np.zeros(s, dtype=bool), valid[:-s]])
        out &= shifted_fwd & shifted_back
    return out
