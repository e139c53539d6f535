"""Working-precision handling.

Double precision runs on numpy arrays. Extended precision runs on gmpy2
scalars inside object arrays for the hot loops (gauge recursion, Taylor
stepping) and on mpmath for root finding and interpolation.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import gmpy2
import mpmath
import numpy as np


@dataclass(frozen=True)
class Precision:
    """``dps=None`` means IEEE double; otherwise decimal digits."""

    dps: int | None = None

    @property
    def extended(self) -> bool:
        return self.dps is not None

    @property
    def bits(self) -> int:
        return 53 if self.dps is None else int(self.dps * 3.3219280948873626) + 16

    def eps(self) -> float:
        return 2.0 ** (-self.bits)


DOUBLE = Precision(None)


@contextlib.contextmanager
def working_precision(prec: Precision):
    """Set both mpmath and gmpy2 to ``prec`` for the duration of the block."""
    if not prec.extended:
        yield
        return
    old_prec = mpmath.mp.prec
    with gmpy2.context(gmpy2.get_context(), precision=prec.bits):
        mpmath.mp.prec = prec.bits
        try:
            yield
        finally:
            mpmath.mp.prec = old_prec


def to_gmpy(x):
    """Exact conversion of an mpmath/float/int real to gmpy2.mpfr."""
    if isinstance(x, gmpy2.mpfr):
        return x
    if isinstance(x, (int, np.integer)):
        return gmpy2.mpfr(int(x))
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    v = gmpy2.mul_2exp(gmpy2.mpfr(int(man)), int(exp))
    return -v if sign else v


def to_gmpy_complex(z):
    z = mpmath.mpc(z)
    return gmpy2.mpc(to_gmpy(z.real), to_gmpy(z.imag))


def to_mpmath(x):
    """gmpy2/float/complex scalar to the matching mpmath type."""
    if isinstance(x, (complex, np.complexfloating)) or type(x).__name__ == "mpc":
        return mpmath.mpc(mpmath.mpf(x.real), mpmath.mpf(x.imag))
    return mpmath.mpf(x)


def object_array(values, shape=None):
    arr = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        arr[i] = v
    return arr if shape is None else arr.reshape(shape)


def gmpy_zeros(shape, complex_: bool = True):
    arr = np.empty(shape, dtype=object)
    zero = gmpy2.mpc(0) if complex_ else gmpy2.mpfr(0)
    arr.fill(zero)
    return arr
