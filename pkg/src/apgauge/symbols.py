"""Symbol calculus for quasi-periodic pseudo-differential operators.

A symbol a(ξ, x) = Σ_θ â(ξ, θ) e^{2iθx} acts on exponentials by
A e_ξ = Σ_θ â(ξ, θ) e_{ξ+2θ}, so composition reads

    (AB)ˆ(ξ, η) = Σ_{θ+φ=η} â(ξ+2θ, φ) b̂(ξ, θ).

Coefficients are kept as exact expression trees (sums of monomials in the
atoms ξ+2φ, φ_θ(ξ+2φ) and χ̃_θ(ξ+2φ)). This representation grows quickly
with the order and serves as the structural reference for low orders; the
production recursion in :mod:`apgauge.gauge` works pointwise in ξ.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import gmpy2
import numpy as np
from scipy.special import expit

from .errors import ShellTooLarge
from .lattice import Basis, Frequency, add

# --------------------------------------------------------------------------
# mollifiers and cut-offs


@dataclass(frozen=True)
class Mollifier:
    """φ = 1 − ψ with ψ = 1 on |x| ≤ inner and ψ = 0 on |x| ≥ outer.

    The transition is S((|x| − inner)/(outer − inner)) with
    S(t) = h(t)/(h(t) + h(1 − t)), where h(t) = exp(−1/t^power) for t > 0.
    """

    name: str
    inner: float = 0.25
    outer: float = 0.5
    power: int = 1

    def __post_init__(self):
        if not (0 < self.inner < self.outer <= 0.5) or self.inner < 0.25:
            raise ValueError("mollifier must have ψ = 1 on [-1/4, 1/4] and support in [-1/2, 1/2]")

    def phi(self, x):
        """Vectorized φ in double precision; exactly 0 / 1 on the flat parts."""
        x = np.asarray(x, dtype=float)
        t = np.abs(x)
        t = (t - self.inner) / (self.outer - self.inner)
        out = np.where(t >= 1.0, 1.0, 0.0)
        mid = (t > 0.0) & (t < 1.0)
        if np.any(mid):
            tm = t[mid]
            z = 1.0 / tm**self.power - 1.0 / (1.0 - tm) ** self.power
            out = out.astype(float)
            out[mid] = expit(-z)
        return out

    def phi_gmpy(self, x):
        """φ for one gmpy2/mpmath real at the current gmpy2 precision."""
        x = gmpy2.mpfr(x) if not isinstance(x, gmpy2.mpfr) else x
        t = (abs(x) - gmpy2.mpfr(self.inner)) / gmpy2.mpfr(self.outer - self.inner)
        if t <= 0:
            return gmpy2.mpfr(0)
        if t >= 1:
            return gmpy2.mpfr(1)
        z = 1 / t**self.power - 1 / (1 - t) ** self.power
        return 1 / (1 + gmpy2.exp(z))

    def closed_form(self) -> str:
        p = "" if self.power == 1 else f"^{self.power}"
        return (
            f"phi(x) = S((|x| - {self.inner}) / {self.outer - self.inner}), "
            f"S(t) = 1 / (1 + exp(1/t{p} - 1/(1-t){p})) on (0,1), S = 0 for t <= 0, 1 for t >= 1"
        )


STANDARD = Mollifier("standard")
ALTERNATE = Mollifier("alternate", inner=0.3, outer=0.45, power=2)

MOLLIFIERS = {m.name: m for m in (STANDARD, ALTERNATE)}


@dataclass(frozen=True)
class CutoffFamily:
    """φ_θ(ξ) = φ((ξ+θ)·4|θ|/width) and χ̃_θ(ξ) = φ_θ(ξ)/(4(ξ+θ)θ).

    ``width`` is δ for quasi-periodic runs and ε_n^{1/2} inside dyadic windows.
    """

    width: float
    mollifier: Mollifier = STANDARD

    def arg(self, theta_value, xi):
        return (xi + theta_value) * 4.0 * abs(theta_value) / self.width

    def phi(self, theta_value: float, xi):
        if theta_value == 0:
            return np.zeros_like(np.asarray(xi, dtype=float))
        return self.mollifier.phi(self.arg(theta_value, np.asarray(xi, dtype=float)))

    def chi(self, theta_value: float, xi):
        xi = np.asarray(xi, dtype=float)
        if theta_value == 0:
            return np.zeros_like(xi)
        ph = self.phi(theta_value, xi)
        den = 4.0 * (xi + theta_value) * theta_value
        safe = np.where(ph == 0.0, 1.0, den)
        return np.where(ph == 0.0, 0.0, ph / safe)

    def phi_gmpy(self, theta_value, xi):
        if theta_value == 0:
            return gmpy2.mpfr(0)
        w = gmpy2.mpfr(self.width) if not isinstance(self.width, gmpy2.mpfr) else self.width
        return self.mollifier.phi_gmpy((xi + theta_value) * 4 * abs(theta_value) / w)

    def half_width(self, theta_value: float) -> float:
        return self.width / (4.0 * abs(theta_value))

    def zone(self, theta_value: float) -> tuple[float, float]:
        """R(θ): open interval centred at −θ."""
        hw = self.half_width(theta_value)
        return (-theta_value - hw, -theta_value + hw)

    def wide_zone(self, theta_value: float) -> tuple[float, float]:
        hw = 10.0 * self.half_width(theta_value)
        return (-theta_value - hw, -theta_value + hw)

    def transition_bands(self, theta_value: float) -> tuple[tuple[float, float], tuple[float, float]]:
        """ξ-intervals where 0 < φ_θ < 1 (left and right of −θ)."""
        scale = self.width / (4.0 * abs(theta_value))
        a, b = self.mollifier.inner * scale, self.mollifier.outer * scale
        c = -theta_value
        return ((c - b, c - a), (c + a, c + b))


# --------------------------------------------------------------------------
# expression trees

# atoms: ("xi", φ) -> ξ + 2φ ; ("phi", θ, φ) -> φ_θ(ξ+2φ) ; ("chi", θ, φ) -> χ̃_θ(ξ+2φ)
Atom = tuple
Monomial = tuple  # sorted tuple of atoms (with repetition)


def _shift_atom(atom: Atom, by: Frequency) -> Atom:
    if atom[0] == "xi":
        return ("xi", add(atom[1], by))
    return (atom[0], atom[1], add(atom[2], by))


class CoefficientFn:
    """A finite sum Σ c_m Π atoms, evaluable at real ξ (scalar or array)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, complex] | None = None):
        acc: dict[Monomial, complex] = {}
        for m, c in (terms or {}).items():
            key = tuple(sorted(m))
            acc[key] = acc.get(key, 0) + c
        self.terms = {m: c for m, c in acc.items() if c != 0}

    # constructors
    @classmethod
    def const(cls, c: complex) -> "CoefficientFn":
        return cls({(): c})

    @classmethod
    def xi(cls, dim: int, shift: Frequency | None = None) -> "CoefficientFn":
        return cls({(("xi", shift or (0,) * dim),): 1.0})

    @classmethod
    def phi(cls, theta: Frequency, shift: Frequency | None = None) -> "CoefficientFn":
        if not any(theta):
            return cls()
        return cls({(("phi", tuple(theta), shift or (0,) * len(theta)),): 1.0})

    @classmethod
    def chi(cls, theta: Frequency, shift: Frequency | None = None) -> "CoefficientFn":
        if not any(theta):
            return cls()
        return cls({(("chi", tuple(theta), shift or (0,) * len(theta)),): 1.0})

    # algebra
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "CoefficientFn") -> "CoefficientFn":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return CoefficientFn({m: c for m, c in out.items() if c != 0})

    def __neg__(self) -> "CoefficientFn":
        return self.scale(-1)

    def __sub__(self, other: "CoefficientFn") -> "CoefficientFn":
        return self + (-other)

    def scale(self, c: complex) -> "CoefficientFn":
        if c == 0:
            return CoefficientFn()
        return CoefficientFn({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other: "CoefficientFn") -> "CoefficientFn":
        out: dict = defaultdict(complex)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out[tuple(sorted(m1 + m2))] += c1 * c2
        return CoefficientFn(out)

    def shift(self, by: Frequency) -> "CoefficientFn":
        """ξ ↦ ξ + 2·by."""
        if not any(by):
            return self
        return CoefficientFn({tuple(sorted(_shift_atom(a, by) for a in m)): c for m, c in self.terms.items()})

    def atoms(self) -> set:
        return {a for m in self.terms for a in m}

    # evaluation
    def evaluate(self, xi, basis: Basis, family: CutoffFamily):
        xi_arr = np.asarray(xi, dtype=float)
        cache: dict = {}

        def atom_value(a):
            if a in cache:
                return cache[a]
            if a[0] == "xi":
                v = xi_arr + 2.0 * basis.value(a[1])
            else:
                th = basis.value(a[1])
                at = xi_arr + 2.0 * basis.value(a[2])
                v = family.phi(th, at) if a[0] == "phi" else family.chi(th, at)
            cache[a] = v
            return v

        total = np.zeros_like(xi_arr, dtype=complex)
        for m, c in self.terms.items():
            term = np.full_like(xi_arr, c, dtype=complex)
            for a in m:
                term = term * atom_value(a)
            total = total + term
        return total if total.ndim else complex(total)

    def flat_on(self, lo: float, hi: float, basis: Basis, family: CutoffFamily) -> bool:
        """True if every cut-off atom is identically 0 or 1 on [lo, hi].

        Then the expression restricted to [lo, hi] is a rational function of ξ.
        """
        for a in self.atoms():
            if a[0] == "xi":
                continue
            th = basis.value(a[1])
            off = 2.0 * basis.value(a[2])
            for b_lo, b_hi in family.transition_bands(th):
                if b_lo - off < hi and lo < b_hi - off:
                    return False
        return True

    def to_json(self) -> list:
        out = []
        for m, c in sorted(self.terms.items(), key=lambda kv: repr(kv[0])):
            out.append({"c": [c.real, c.imag], "atoms": [list(a[:1]) + [list(x) for x in a[1:]] for a in m]})
        return out

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"CoefficientFn({len(self.terms)} terms)"


class GradedSymbol:
    """Mapping (ε-power p, frequency θ) → CoefficientFn."""

    def __init__(self, dim: int, terms: Mapping[tuple[int, Frequency], CoefficientFn] | None = None):
        self.dim = dim
        self.terms: dict[tuple[int, Frequency], CoefficientFn] = {}
        for k, v in (terms or {}).items():
            if not v.is_zero():
                self.terms[(k[0], tuple(k[1]))] = v

    @property
    def zero(self) -> Frequency:
        return (0,) * self.dim

    @classmethod
    def multiplication(cls, coeffs: Mapping[Frequency, complex], power: int = 1, dim: int | None = None) -> "GradedSymbol":
        """Multiplication by ε^power Σ c_θ e^{2iθx}."""
        d = dim if dim is not None else len(next(iter(coeffs)))
        return cls(d, {(power, tuple(t)): CoefficientFn.const(c) for t, c in coeffs.items() if c != 0})

    @classmethod
    def laplacian(cls, dim: int) -> "GradedSymbol":
        """H₀ = −d²/dx² with symbol ξ²."""
        x = CoefficientFn.xi(dim)
        return cls(dim, {(0, (0,) * dim): x * x})

    def __add__(self, other: "GradedSymbol") -> "GradedSymbol":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return GradedSymbol(self.dim, out)

    def scale(self, c: complex) -> "GradedSymbol":
        return GradedSymbol(self.dim, {k: v.scale(c) for k, v in self.terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def degree_part(self, p: int) -> "GradedSymbol":
        return GradedSymbol(self.dim, {k: v for k, v in self.terms.items() if k[0] == p})

    def degrees(self) -> list[int]:
        return sorted({k[0] for k in self.terms})

    def support(self, p: int | None = None) -> set[Frequency]:
        return {k[1] for k in self.terms if p is None or k[0] == p}

    def coefficient(self, p: int, theta: Frequency) -> CoefficientFn:
        return self.terms.get((p, tuple(theta)), CoefficientFn())

    def evaluate(self, xi, theta: Frequency, eps: float, basis: Basis, family: CutoffFamily):
        total = 0
        for (p, t), f in self.terms.items():
            if t == tuple(theta):
                total = total + eps**p * f.evaluate(xi, basis, family)
        return total

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"power": p, "theta": list(t), "fn": f.to_json()} for (p, t), f in sorted(self.terms.items())],
        }


def compose(a: GradedSymbol, b: GradedSymbol, max_degree: int | None = None, cap: int | None = None) -> GradedSymbol:
    """(AB)ˆ(ξ, η) = Σ_{θ+φ=η} â(ξ+2θ, φ)·b̂(ξ, θ), powers adding."""
    out: dict = {}
    for (q, th), bf in b.terms.items():
        for (p, ph), af in a.terms.items():
            deg = p + q
            if max_degree is not None and deg > max_degree:
                continue
            key = (deg, add(th, ph))
            term = af.shift(th) * bf
            out[key] = out[key] + term if key in out else term
    res = GradedSymbol(a.dim, out)
    if cap is not None and len(res.support()) > cap:
        raise ShellTooLarge(f"composition support has {len(res.support())} frequencies, cap {cap}")
    return res


def ad(a: GradedSymbol, b: GradedSymbol, max_degree: int | None = None) -> GradedSymbol:
    """ad(A; B) = i(AB − BA)."""
    return (compose(a, b, max_degree) - compose(b, a, max_degree)).scale(1j)


def natural(a: GradedSymbol) -> GradedSymbol:
    """a^♮: the coefficient at θ multiplied by φ_θ(ξ); φ₀ ≡ 0 removes the diagonal."""
    return GradedSymbol(a.dim, {(p, t): f * CoefficientFn.phi(t) for (p, t), f in a.terms.items() if any(t)})


def chi_kernel(theta: Frequency) -> CoefficientFn:
    return CoefficientFn.chi(tuple(theta))


def solve_commutator(a: GradedSymbol) -> GradedSymbol:
    """ψ̂ = i·â·χ̃, the solution of ad(H₀; Ψ) + A^♮ = 0."""
    return GradedSymbol(a.dim, {(p, t): f * chi_kernel(t).scale(1j) for (p, t), f in a.terms.items() if any(t)})


# --------------------------------------------------------------------------
# norms


def symbol_norm(
    table: Mapping[Frequency, Callable | CoefficientFn],
    basis: Basis,
    family: CutoffFamily,
    xi_range: tuple[float, float] | None = None,
    per_unit: int = 4096,
    extra_points: Iterable[float] = (),
) -> float:
    """⦀b⦀ = Σ_θ sup_ξ |b̂(ξ, θ)|, the sup taken on a uniform grid plus all zone endpoints."""
    if not table:
        return 0.0
    freqs = list(table)
    vals = [abs(basis.value(t)) for t in freqs]
    if xi_range is None:
        R = 2.0 * max(vals + [1.0]) + 1.0
        xi_range = (-R, R)
    lo, hi = xi_range
    n = max(2, int(math.ceil((hi - lo) * per_unit)) + 1)
    grid = np.linspace(lo, hi, n)
    pts = [grid, np.asarray(list(extra_points), dtype=float)]
    ends = []
    for t in freqs:
        v = basis.value(t)
        if v != 0:
            ends.extend(family.zone(v))
    pts.append(np.asarray(ends, dtype=float))
    xs = np.unique(np.concatenate(pts))
    total = 0.0
    for t, f in table.items():
        y = f.evaluate(xs, basis, family) if hasattr(f, "evaluate") else f(xs)
        total += float(np.max(np.abs(y))) if len(xs) else 0.0
    return total


def graded_norm_table(sym: GradedSymbol, eps: float) -> dict[Frequency, Callable]:
    """Per-frequency callables ξ ↦ Σ_p ε^p ĉ_p(ξ, θ) for :func:`symbol_norm`."""
    by_theta: dict[Frequency, list] = defaultdict(list)
    for (p, t), f in sym.terms.items():
        by_theta[t].append((p, f))
    return {t: _Summed(parts, eps) for t, parts in by_theta.items()}


class _Summed:
    def __init__(self, parts, eps):
        self.parts, self.eps = parts, eps

    def evaluate(self, xi, basis, family):
        return sum(self.eps**p * f.evaluate(xi, basis, family) for p, f in self.parts)


def dumps(sym: GradedSymbol) -> str:
    return json.dumps(sym.to_json())
