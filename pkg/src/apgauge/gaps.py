"""Spectral gaps around θ₀²: endpoints σ₋^max, σ₊^min and their ε-expansions."""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2

from .asymptotics import ExpansionFit, fit_expansion
from .errors import ConvergenceError
from .spectral import ResonantModel


@dataclass
class GapResult:
    eps: float
    lower: object  # σ₋^max
    upper: object  # σ₊^min
    zeta_minus: object
    zeta_plus: object
    boundary: bool  # an extremum sits at the edge of the model interval

    @property
    def gap(self):
        d = self.upper - self.lower
        return d if d > 0 else d * 0

    def to_json(self) -> dict:
        return {
            "eps": float(self.eps),
            "lower": str(self.lower),
            "upper": str(self.upper),
            "gap": str(self.gap),
            "zeta_minus": str(self.zeta_minus),
            "zeta_plus": str(self.zeta_plus),
            "boundary": self.boundary,
        }


def _refine(f, a, b, fa, fb, tol, ftol=0, max_iter=600):
    """Root of f in [a, b] with f(a)·f(b) ≤ 0 (Illinois false position with periodic bisection).

    Stops when the bracket is below ``tol``, successive iterates differ by less
    than ``tol`` or |f| ≤ ``ftol``.
    """
    if fa == 0:
        return a
    if fb == 0:
        return b
    side = 0
    prev = None
    for it in range(max_iter):
        if it % 4 == 3:
            c = (a + b) / 2
        else:
            c = (a * fb - b * fa) / (fb - fa)
            if not (min(a, b) < c < max(a, b)):
                c = (a + b) / 2
        fc = f(c)
        if abs(fc) <= ftol or abs(b - a) <= tol or (prev is not None and abs(c - prev) <= tol and it % 4 != 3):
            return c
        prev = c
        if (fc > 0) == (fb > 0):
            b, fb = c, fc
            if side == -1:
                fa /= 2
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb /= 2
            side = 1
    raise ConvergenceError("critical-point refinement did not converge")


def gap_endpoints(model: ResonantModel, eps, grid: int = 201) -> GapResult:
    """Maximise σ₋ and minimise σ₊ over the model interval |ζ| ≤ w."""
    with model._ctx():
        w = model.w
        zs = [w * (2 * k - (grid - 1)) / (grid - 1) for k in range(grid)]
        sig = [model.sigma(z, eps) for z in zs]
        unit = gmpy2.mpfr(2) ** (-gmpy2.get_context().precision + 10) if model.extended else 1e-15
        tol = w * unit
        ftol = 4 * abs(model.theta0) * unit
        boundary = False
        out = []
        for branch, sign in ((0, 1), (1, -1)):
            vals = [sign * s[branch] for s in sig]
            i = max(range(grid), key=lambda k: vals[k])
            if i in (0, grid - 1):
                boundary = True
                out.append((zs[i], sig[i][branch]))
                continue

            def df(z, branch=branch, sign=sign):
                return sign * model.dsigma(z, eps)[branch]

            a, b = zs[i - 1], zs[i + 1]
            fa, fb = df(a), df(b)
            if fa * fb > 0:
                # extremum not bracketed by the derivative: keep the grid point
                z = zs[i]
            else:
                z = _refine(df, a, b, fa, fb, tol, ftol)
            cand = model.sigma(z, eps)[branch]
            if sign * cand < vals[i]:
                z, cand = zs[i], sig[i][branch]
            out.append((z, cand))
        (zm, lo), (zp, hi) = out
        return GapResult(eps, lo, hi, zm, zp, boundary)


def gap_expansion(model: ResonantModel, ladder, exponents=None, **fit_kw) -> tuple[ExpansionFit, list[GapResult]]:
    """Gap lengths along ``ladder`` fitted on ε¹..ε^{N−1} (or the given exponents)."""
    N = (model.kt - 1) // 2
    if exponents is None:
        exponents = list(range(1, max(N, 2)))
    results = [gap_endpoints(model, e) for e in ladder]
    fit = fit_expansion([float(r.eps) for r in results], [float(r.gap) for r in results], exponents, **fit_kw)
    return fit, results


def leading_gap_prediction(model: ResonantModel) -> float:
    """2|ν|: the predicted ε¹ coefficient of the gap."""
    return 2 * abs(model.nu)
