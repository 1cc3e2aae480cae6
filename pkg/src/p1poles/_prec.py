"""Working-precision helpers around gmpy2 complex numbers."""
from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction

import gmpy2

DEFAULT_DIGITS = 34

_LOG2_10 = math.log2(10.0)


def bits(digits: int) -> int:
    return int(math.ceil(digits * _LOG2_10)) + 8


@contextmanager
def working_precision(digits: int = DEFAULT_DIGITS):
    """Run the body with gmpy2 arithmetic at ``digits`` significant decimals."""
    with gmpy2.context(gmpy2.get_context(), precision=bits(digits)) as ctx:
        yield ctx


def mpc(v) -> gmpy2.mpc:
    """Convert numbers, strings, rationals and pairs to a gmpy2 mpc at the current precision."""
    if isinstance(v, _MPC):
        return v
    if isinstance(v, (tuple, list)):
        re, im = v
        return gmpy2.mpc(_mpfr(re), _mpfr(im))
    if isinstance(v, str):
        return gmpy2.mpc(v.replace(" ", ""))
    if isinstance(v, complex):
        return gmpy2.mpc(v)
    if hasattr(v, "imag") and hasattr(v, "real") and not isinstance(v, (int, Fraction)):
        # mpmath and numpy scalars
        try:
            return gmpy2.mpc(_mpfr(v.real), _mpfr(v.imag))
        except TypeError:
            pass
    return gmpy2.mpc(_mpfr(v))


_MPC = type(gmpy2.mpc())


def precision_of(*vals) -> int:
    """Largest mantissa size (bits) among gmpy2 values, 53 if none."""
    p = 53
    for v in vals:
        if isinstance(v, _MPC):
            p = max(p, v.precision[0])
        elif isinstance(v, type(gmpy2.mpfr())):
            p = max(p, v.precision)
    return p


@contextmanager
def precision_like(*vals):
    with gmpy2.context(gmpy2.get_context(), precision=precision_of(*vals)) as ctx:
        yield ctx


def _mpfr(v):
    if isinstance(v, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator))
    if isinstance(v, (int, float, str)) or isinstance(v, type(gmpy2.mpq())):
        return gmpy2.mpfr(v)
    try:
        return gmpy2.mpfr(v)
    except TypeError:
        return gmpy2.mpfr(str(v))


def pair(v) -> list[float]:
    c = complex(v)
    return [c.real, c.imag]


def cabs(v) -> float:
    return float(abs(v))


def tiny(digits: int):
    return gmpy2.mpfr(10) ** (-digits)
