"""Vector-valued Chebyshev interpolation in double or gmpy2 arithmetic.

The per-power coefficients of ĥ₂ do not depend on ε, so one interpolant
built from a batch of engine evaluations serves a whole ε-ladder.
"""

from __future__ import annotations

import math

import gmpy2
import numpy as np


def _cos(x, extended):
    return gmpy2.cos(x) if extended else math.cos(x)


def _pi(extended):
    return gmpy2.const_pi() if extended else math.pi


def nodes(center, half_width, K: int, extended: bool = False):
    """First-kind Chebyshev points on [center − hw, center + hw]."""
    pi = _pi(extended)
    return [center + half_width * _cos(pi * (2 * k + 1) / (2 * K), extended) for k in range(K)]


class ChebModel:
    """f(x) ≈ Σ_j c_j T_j((x − center)/hw) for an array of components."""

    def __init__(self, values, center, half_width, extended: bool = False):
        vals = np.asarray(values, dtype=object if extended else complex)
        K = vals.shape[0]
        self.K = K
        self.center = center
        self.hw = half_width
        self.extended = extended
        pi = _pi(extended)
        coeffs = []
        for j in range(K):
            w = np.array([_cos(pi * j * (2 * k + 1) / (2 * K), extended) for k in range(K)], dtype=object if extended else float)
            c = (w[:, None] * vals.reshape(K, -1)).sum(axis=0) * (gmpy2.mpq(2, K) if extended else 2.0 / K)
            coeffs.append(c)
        coeffs[0] = coeffs[0] / 2
        self.coeffs = np.array(coeffs, dtype=object if extended else complex).reshape((K,) + vals.shape[1:])

    def tail(self) -> float:
        """Size of the last three coefficients relative to the largest (convergence diagnostic)."""
        mags = np.abs(self.coeffs.reshape(self.K, -1).astype(complex))
        top = float(np.max(mags)) if mags.size else 0.0
        if top == 0.0:
            return 0.0
        return float(np.max(mags[-3:])) / top

    def _u(self, x):
        return (x - self.center) / self.hw

    def __call__(self, x):
        u = self._u(x)
        b1 = b2 = 0
        for c in self.coeffs[:0:-1]:
            b1, b2 = c + 2 * u * b1 - b2, b1
        return self.coeffs[0] + u * b1 - b2

    def derivative(self) -> "ChebModel":
        K = self.K
        d = [None] * (K + 1)
        zero = self.coeffs[0] * 0
        d[K] = zero
        d[K - 1] = zero
        for j in range(K - 1, 0, -1):
            d[j - 1] = d[j + 1] + 2 * j * self.coeffs[j]
        d[0] = d[0] / 2
        out = ChebModel.__new__(ChebModel)
        out.K = K
        out.center, out.hw, out.extended = self.center, self.hw, self.extended
        out.coeffs = np.array([c / self.hw for c in d[:K]], dtype=self.coeffs.dtype)
        return out
