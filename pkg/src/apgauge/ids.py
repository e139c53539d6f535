"""Integrated density of states N(λ) = (2π)⁻¹·meas{ξ : G(ξ) ≤ λ} of H₂.

Off the zones G = ĥ₂(·;0), which is even and increasing on ξ > 0, so its
sublevel set is [−ξ*, ξ*] with ĥ₂(ξ*;0) = λ. Zone contributions are added
and the off-zone overlap removed:

    meas = 2ξ* − Σ_Z |Z ∩ [−ξ*, ξ*]| + Σ_Z meas{ξ ∈ Z : G(ξ) ≤ λ}.

Zones far from the level contribute zero net measure. For λ = θ₀² the zone
pair ±θ₀ is handled in the local variable ζ on |ζ| ≤ w, where w is smaller
than the zone half-width; outside |ζ| ≤ w the branches are strictly above
(σ₊) or below (σ₋) the level, which gives

    meas = 2(θ₀ − w) + meas{|ζ| ≤ w : σ₊ ≤ λ} + meas{|ζ| ≤ w : σ₋ ≤ λ},

independent of the zone width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import mpmath
import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .asymptotics import ExpansionFit, PowerFit, fit_expansion, fit_power
from .errors import DomainError
from .gaps import _refine, gap_endpoints
from .lattice import Frequency, neg
from .potential import Potential
from .precision import Precision
from .spectral import RegularModel, ResonantModel, SpectralMap

DEGENERATE_TOL = 1e-12

# --------------------------------------------------------------------------
# general double-precision evaluation


@dataclass
class IdsResult:
    lam: float
    eps: float
    value: object
    method: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"lambda": self.lam, "eps": self.eps, "value": str(self.value), "method": self.method, "details": self.details}


def _h_scalar(smap: SpectralMap, eps):
    return lambda x: float(smap.h0([x], eps)[0])


def _root_positive(f, lam, upper):
    """Largest-branch root of f(ξ) = λ on [0, upper] (f increasing away from 0)."""
    if f(0.0) > lam:
        return 0.0
    hi = upper
    while f(hi) <= lam:
        hi *= 2
    return brentq(lambda x: f(x) - lam, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _zone_measure(smap: SpectralMap, zone, lam, eps, grid: int) -> float:
    """meas{ξ ∈ zone : G(ξ) ≤ λ} by sampling, extremum refinement and bracketing."""
    lo, hi = zone.lo, zone.hi
    # open interval: stay strictly inside
    xs = np.linspace(lo, hi, grid + 2)[1:-1]
    g = smap.G(xs, eps) - lam

    def G1(x):
        return float(smap.G([x], eps)[0]) - lam

    pts = list(xs)
    # local extrema that might cross the level between samples
    for i in range(1, len(xs) - 1):
        if (g[i] - g[i - 1]) * (g[i + 1] - g[i]) < 0:
            sgn = 1.0 if g[i] > g[i - 1] else -1.0
            r = minimize_scalar(lambda x: -sgn * G1(x), bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                                options={"xatol": 1e-15})
            pts.append(float(r.x))
    pts = np.array(sorted(set(pts)))
    vals = np.array([G1(x) for x in pts]) if len(pts) != len(xs) else g
    edges = [lo]
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0 or fa * fb < 0:
            edges.append(a if fa == 0 else brentq(G1, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    edges.append(hi)
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        mid = 0.5 * (a + b)
        if G1(mid) <= 0:
            total += b - a
    return total


def ids_value(smap: SpectralMap, lam: float, eps: float, grid: int = 256, margin_factor: float = 8.0) -> IdsResult:
    """N(λ; H₂) in double precision from the engine directly."""
    pot = smap.engine.potential
    vnorm = sum(abs(v) for k, v in pot.coefficients.items())
    h = _h_scalar(smap, eps)
    xs = _root_positive(h, lam, math.sqrt(abs(lam) + 4 * eps * vnorm) + 1.0)
    total = 2 * xs
    near = []
    for z in smap.zones:
        v = abs(z.value)
        inter = max(0.0, min(z.hi, xs) - max(z.lo, -xs))
        reach = 2 * v * z.half_width + z.half_width**2 + margin_factor * eps * vnorm
        if abs(v * v - lam) > reach:
            full = v * v < lam
            total += (2 * z.half_width if full else 0.0) - inter
        else:
            near.append(z.theta)
            total += _zone_measure(smap, z, lam, eps, grid) - inter
    return IdsResult(lam, eps, total / (2 * math.pi), "direct", {"xi_star": xs, "near_zones": [list(t) for t in near]})


# --------------------------------------------------------------------------
# local-model evaluation (any precision)


def _sublevel_measure(f, a, b, lam, grid, tol, ftol, extremum=None):
    """meas{x ∈ [a, b] : f(x) ≤ λ} for a smooth f with few crossings."""
    pts = [a + (b - a) * k / (grid - 1) for k in range(grid)]
    if extremum is not None and a < extremum < b:
        pts = sorted(pts + [extremum])
    vals = [f(x) - lam for x in pts]
    cuts = [a]
    for i in range(len(pts) - 1):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0:
            cuts.append(pts[i])
        elif fa * fb < 0:
            cuts.append(_refine(lambda x: f(x) - lam, pts[i], pts[i + 1], fa, fb, tol, ftol))
    cuts.append(b)
    total = 0 * a
    for x, y in zip(cuts, cuts[1:]):
        if f((x + y) / 2) <= lam:
            total += y - x
    return total


class ResonantIds:
    """N(θ₀² + shift) from the local 2×2 model of the zone pair ±θ₀."""

    def __init__(self, model: ResonantModel, grid: int = 201):
        self.model = model
        self.grid = grid

    def value(self, eps, lam=None) -> IdsResult:
        m = self.model
        with m._ctx():
            th = m.theta0
            lam_v = th * th if lam is None else m._num(lam)
            w = m.w
            ext = m.extended
            unit = gmpy2.mpfr(2) ** (-gmpy2.get_context().precision + 10) if ext else 1e-15
            tol, ftol = w * unit, 4 * th * th * unit
            lo_pl, _ = m.sigma(-w, eps)
            lo_pr, _ = m.sigma(w, eps)
            _, hi_pl = m.sigma(-w, eps)
            _, hi_pr = m.sigma(w, eps)
            if not (hi_pl > lam_v and hi_pr > lam_v and lo_pl < lam_v and lo_pr < lam_v):
                raise DomainError("level is not separated from the branches at the model edge; reduce ε")
            gp = gap_endpoints(m, eps, grid=self.grid)
            mp = _sublevel_measure(lambda z: m.sigma(z, eps)[1], -w, w, lam_v, self.grid, tol, ftol, gp.zeta_plus)
            mm = _sublevel_measure(lambda z: m.sigma(z, eps)[0], -w, w, lam_v, self.grid, tol, ftol, gp.zeta_minus)
            total = 2 * (th - w) + mp + mm
            pi = gmpy2.const_pi() if ext else math.pi
            return IdsResult(float(lam_v), float(eps), total / (2 * pi), "resonant-model",
                             {"theta0": list(m.theta), "measure_plus": str(mp), "measure_minus": str(mm),
                              "gap_lower": str(gp.lower), "gap_upper": str(gp.upper)})


class RegularIds:
    """N(λ) = ξ*/π for λ whose root ξ* stays clear of every zone."""

    def __init__(self, model: RegularModel, smap_zones, margin: float = 0.0):
        self.model = model
        self.zones = smap_zones
        self.margin = margin

    def value(self, lam, eps) -> IdsResult:
        m = self.model
        with m._ctx():
            xs = m.root(lam, eps)
            x = float(xs)
            for z in self.zones:
                if z.lo - self.margin < x < z.hi + self.margin or z.lo - self.margin < -x < z.hi + self.margin:
                    raise DomainError(f"root {x:.6g} is within the margin of the zone of {z.theta}")
            pi = gmpy2.const_pi() if m.extended else math.pi
            return IdsResult(float(lam), float(eps), xs / pi, "regular-model", {"xi_star": str(xs)})


# --------------------------------------------------------------------------
# classification


def _as_fraction(lam) -> Fraction | None:
    if isinstance(lam, Fraction):
        return lam
    if isinstance(lam, int):
        return Fraction(lam)
    if isinstance(lam, float):
        return Fraction(lam)
    if isinstance(lam, str):
        try:
            return Fraction(lam.strip())
        except ValueError:
            return None
    return None


def resonant_frequency(potential: Potential, lam, max_order: int = 64) -> Frequency | None:
    """θ₀ ∈ Θ_∞ with value √λ > 0, or None.

    Exact when λ is rational and the basis is (1) or (1, √d); otherwise the
    shell Θ_{max_order} is searched with 150-digit values.
    """
    theta = potential.frequency_set
    basis = potential.basis
    q = _as_fraction(lam)
    if q is not None and q <= 0:
        return None
    candidates: list[Frequency] = []
    exact = False
    if q is not None:
        num, den = q.numerator, q.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        root_rational = rn * rn == num and rd * rd == den
        if basis.dim == 1 and basis.generators[0].strip() == "1":
            exact = True
            if root_rational and rd == 1:
                candidates = [(rn,)]
        elif basis.quadratic_radicand() is not None:
            exact = True
            d = basis.quadratic_radicand()
            if root_rational and rd == 1:
                candidates.append((rn, 0))
            qd = q / d
            n2, d2 = qd.numerator, qd.denominator
            if math.isqrt(n2) ** 2 == n2 and d2 == 1:
                candidates.append((0, math.isqrt(n2)))
    if exact:
        for c in candidates:
            try:
                theta.order(c, max_order)
                return c
            except ValueError:
                continue
        return None
    with mpmath.workdps(160):
        target = mpmath.sqrt(mpmath.mpf(str(lam)) if not isinstance(lam, Fraction) else mpmath.mpf(lam.numerator) / lam.denominator)
        for t in theta.shell(max_order, nonzero=True):
            v = basis.value(t, Precision(160))
            if v > 0 and abs(v - target) < mpmath.mpf(10) ** -150:
                return t
    return None


@dataclass
class CaseLabel:
    label: str
    k: int | None = None
    theta0: Frequency | None = None
    tau: float = 0.0
    nu: complex = 0j
    s2: float | None = None
    g2: complex | None = None
    discriminant: float | None = None
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "k": self.k,
            "theta0": list(self.theta0) if self.theta0 is not None else None,
            "tau": self.tau,
            "nu": [self.nu.real, self.nu.imag],
            "s2": self.s2,
            "g2": [self.g2.real, self.g2.imag] if self.g2 is not None else None,
            "discriminant": self.discriminant,
            "s2_squared_minus_abs_g2_squared": (self.s2**2 - abs(self.g2) ** 2) if self.g2 is not None and self.s2 is not None else None,
            "degenerate": self.degenerate,
        }


def _near(a: float, b: float, tol: float = DEGENERATE_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def label_from_data(tau: float, nu: complex, s2: float | None, g2: complex | None, theta0=None) -> CaseLabel:
    """Case label for λ = θ₀² from τ, ν, s₂(0), g₂(0)."""
    if abs(nu) > 0:
        D = s2 * tau - (nu * np.conj(g2)).real if s2 is not None else None
        base = dict(theta0=theta0, tau=tau, nu=nu, s2=s2, g2=g2, discriminant=D)
        if _near(abs(tau), abs(nu)):
            scale = abs(s2 * tau) + abs(nu * g2) if s2 is not None else 1.0
            if D is None or abs(D) <= DEGENERATE_TOL * max(scale, 1e-300):
                return CaseLabel("res_half_integer", None, degenerate=True, **base)
            if D < 0:
                return CaseLabel("res_inside_gap", **base)
            return CaseLabel("res_half_integer", 3, **base)
        if abs(tau) < abs(nu):
            return CaseLabel("res_inside_gap", **base)
        return CaseLabel("res_integer", 1, **base)
    base = dict(theta0=theta0, tau=tau, nu=nu, s2=s2, g2=g2)
    if tau != 0:
        return CaseLabel("res_integer", 1, **base)
    diff = s2 * s2 - abs(g2) ** 2
    if abs(diff) <= DEGENERATE_TOL * max(s2 * s2 + abs(g2) ** 2, 1e-300):
        return CaseLabel("res_half_integer", None, degenerate=True, **base)
    if diff < 0:
        return CaseLabel("res_inside_gap", **base)
    return CaseLabel("res_integer", 2, **base)


def classify(potential: Potential, lam, engine=None, model_width: float = 0.01, K: int = 16) -> CaseLabel:
    """Case label of λ; the gauge engine supplies s₂(0), g₂(0) for resonant λ."""
    q = _as_fraction(lam)
    lam_f = float(q) if q is not None else float(lam)
    tau = potential.tau
    if lam_f < 0:
        return CaseLabel("negative", tau=tau)
    if lam_f == 0:
        name = "zero_tau_pos" if tau > 0 else "zero_tau_neg" if tau < 0 else "zero_tau_zero"
        return CaseLabel(name, tau=tau)
    th = resonant_frequency(potential, lam)
    if th is None:
        return CaseLabel("nonresonant", tau=tau)
    if potential.basis.value(th) < 0:
        th = neg(th)
    nu = complex(potential.coefficient(th))
    if engine is None:
        raise DomainError("a gauge engine is required to classify a resonant λ")
    model = ResonantModel(engine, th, model_width, K=K)
    data = model.local_data(0.0, 0.0)
    s2 = float(data.s_by_degree[2])
    g2 = complex(data.g_by_degree[2])
    return label_from_data(tau, nu, s2, g2, th)


# --------------------------------------------------------------------------
# expansions


def exponent_set(label: CaseLabel, N: int) -> list[float]:
    """Exponents of N(λ; ε) − N(λ; 0) predicted by the case label."""
    name = label.label
    if name in ("negative", "zero_tau_pos", "res_inside_gap"):
        return []
    if name == "zero_tau_neg":
        return [0.5 + p for p in range(N)]
    if name == "zero_tau_zero":
        return [1.0 + p for p in range(N)]
    if name == "res_half_integer":
        k = label.k if label.k is not None else 3
        return [k / 2 + p for p in range(N)]
    start = label.k if (name == "res_integer" and label.k) else 1
    return [float(p) for p in range(start, start + N)]


@dataclass
class IdsExpansion:
    label: CaseLabel
    base: float
    fit: ExpansionFit | None
    power: PowerFit | None
    values: list
    constant: bool

    def to_json(self) -> dict:
        return {
            "label": self.label.to_json(),
            "base": self.base,
            "fit": self.fit.to_json() if self.fit else None,
            "power_fit": self.power.to_json() if self.power else None,
            "values": [str(v) for v in self.values],
            "constant": self.constant,
        }


def ids_expansion(evaluate, ladder, label: CaseLabel, base: float, N: int, power_corrections=None, **fit_kw) -> IdsExpansion:
    """Fit N(λ; ε) − base on the label's exponent set (plus a free-exponent fit).

    ``evaluate(eps)`` returns N(λ; ε).
    """
    vals = [evaluate(e) for e in ladder]
    diffs = [float(v) - base for v in vals]
    exps = exponent_set(label, N)
    constant = all(abs(d) <= 1e-10 for d in diffs)
    fit = fit_expansion(ladder, diffs, exps, **fit_kw) if exps and not constant else None
    power = None
    if not constant and all(d != 0 for d in diffs):
        # a (0.5,) correction makes the half-integer fits degenerate to exponent 1
        corr = power_corrections if power_corrections is not None else (1.0,)
        power = fit_power(ladder, diffs, corr)
    return IdsExpansion(label, base, fit, power, vals, constant)


def degenerate_k(fit: ExpansionFit, N: int, factor: float = 10.0) -> tuple[int | None, bool]:
    """Smallest k ≥ 4 whose ε^{k/2} coefficient exceeds ``factor``·residual; (cap, True) if none."""
    cap = 2 * N - 2
    for a, c in zip(fit.exponents, fit.coefficients):
        k = int(round(2 * a))
        if k >= 4 and abs(c) > factor * fit.residual_norm:
            return min(k, cap), k >= cap
    return cap, True


def shift_identity(smap_v: SpectralMap, smap_shift: SpectralMap, lam: float, eps: float, tau: float) -> float:
    """|N(λ; V) − N(λ − ετ; V − τ)| (should vanish)."""
    a = ids_value(smap_v, lam, eps).value
    b = ids_value(smap_shift, lam - eps * tau, eps).value
    return abs(a - b)


def nonresonant_a1(tau: float, lam: float) -> float:
    return -tau / (2 * math.pi * math.sqrt(lam))

