"""Quasi-periodic and smooth almost-periodic potentials.

V(x) = Σ_θ V̂_θ e^{2iθx} with V̂_{-θ} = conj(V̂_θ). Quasi-periodic potentials
carry a finite coefficient table. Almost-periodic potentials follow the decay
rule V̂_θ = C·Z(θ)^{-P}·e^{iα(θ)}, where α is a seeded pseudo-random phase,
and are enumerated up to a finite order on demand.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import mpmath
import numpy as np

from .errors import ApgaugeError, InvalidPotential
from .lattice import Basis, Frequency, FrequencySet, l1_ball_size, frequency_set_for, neg
from .precision import DOUBLE, Precision

NORM_LIMIT = 0.01
IMAG_TOL = 1e-12


@dataclass(frozen=True)
class DecayRule:
    """|V̂_θ| = C·Z^{-P}; phases are a deterministic function of (seed, θ)."""

    C: float
    P: float
    seed: int = 0
    tau: float = 0.0

    def phase(self, theta: Frequency) -> float:
        """α(θ) with α(-θ) = -α(θ)."""
        if not any(theta):
            return 0.0
        first = next(c for c in theta if c)
        canon = theta if first > 0 else neg(theta)
        digest = hashlib.sha256(f"{self.seed}:{canon}".encode()).digest()
        a = 2.0 * math.pi * int.from_bytes(digest[:8], "big") / 2.0**64
        return a if first > 0 else -a

    def magnitude(self, order):
        """C·Z^{-P}; an mpf so that astronomically large orders stay representable."""
        return mpmath.mpf(self.C) * mpmath.power(mpmath.mpf(order), -self.P)

    def coefficient(self, theta: Frequency, order: int) -> complex:
        if not any(theta):
            return complex(self.tau)
        mag = float(self.magnitude(order))
        a = self.phase(theta)
        return complex(mag * math.cos(a), mag * math.sin(a))


@dataclass
class Potential:
    basis: Basis
    coefficients: Mapping[Frequency, complex]
    decay: DecayRule | None = None
    truncation: int | None = None
    _theta: FrequencySet | None = field(default=None, repr=False)

    def __post_init__(self):
        d = self.basis.dim
        table: dict[Frequency, complex] = {}
        for k, v in dict(self.coefficients).items():
            k = tuple(int(x) for x in k)
            if len(k) != d:
                raise InvalidPotential(f"frequency {k} does not match basis dimension {d}")
            table[k] = complex(v)
        for k, v in list(table.items()):
            m = neg(k)
            if m in table:
                if abs(table[m] - v.conjugate()) > 1e-14 * max(1.0, abs(v)):
                    raise InvalidPotential(f"coefficients at {k} and {m} are not conjugate")
            else:
                table[m] = v.conjugate()
        zero = (0,) * d
        if zero in table and abs(table[zero].imag) > 1e-15:
            raise InvalidPotential("mean value τ must be real")
        self.coefficients = {k: v for k, v in table.items() if v != 0 or not any(k)}
        if zero not in self.coefficients:
            self.coefficients[zero] = 0j
        nrm = self.norm2()
        if not nrm < NORM_LIMIT:
            raise InvalidPotential(f"‖V‖₂ = {nrm:.4g} is not below {NORM_LIMIT}")

    # construction -----------------------------------------------------

    @classmethod
    def from_decay(cls, basis: Basis, rule: DecayRule, max_order: int) -> "Potential":
        theta = FrequencySet.standard(basis)
        coeffs = {t: rule.coefficient(t, theta.order(t)) for t in theta.shell(max_order)}
        return cls(basis, coeffs, decay=rule, truncation=max_order, _theta=theta)

    # basic data -------------------------------------------------------

    @property
    def zero(self) -> Frequency:
        return (0,) * self.basis.dim

    @property
    def tau(self) -> float:
        return self.coefficients[self.zero].real

    @cached_property
    def support(self) -> tuple[Frequency, ...]:
        return tuple(sorted((k for k, v in self.coefficients.items() if any(k) and v != 0)))

    @property
    def frequency_set(self) -> FrequencySet:
        """Θ: the support itself for trigonometric polynomials, {0, ±e_i} under a decay rule."""
        if self._theta is None:
            if self.decay is not None:
                self._theta = FrequencySet.standard(self.basis)
            else:
                self._theta = frequency_set_for(self.basis, self.support)
        return self._theta

    def coefficient(self, theta: Frequency) -> complex:
        """Stored V̂_θ (0 outside the stored table, including beyond the truncation)."""
        return self.coefficients.get(tuple(theta), 0j)

    def norm2(self) -> float:
        """ℓ² norm of the non-constant coefficients (the L² mean of V − τ)."""
        s = math.fsum(abs(v) ** 2 for k, v in self.coefficients.items() if any(k))
        if self.decay is not None and self.truncation is not None:
            s += self.tail_l2_squared(self.truncation)
        return math.sqrt(s)

    def tail_l2_squared(self, L: int) -> float:
        """Σ_{Z>L} #T_Z C² Z^{-2P} for a decay rule (0 otherwise)."""
        if self.decay is None:
            return 0.0
        d = self.basis.dim
        C, P = self.decay.C, self.decay.P
        total = mpmath.mpf(0)
        for Z in range(L + 1, L + 400):
            count = l1_ball_size(d, Z) - l1_ball_size(d, Z - 1)
            total += count * mpmath.mpf(C) ** 2 * mpmath.power(Z, -2 * P)
        return float(total)

    def tail_sup_bound(self, L: int) -> float:
        """Σ_{Z>L} #T_Z·C·Z^{-P}: sup-norm bound on V − V_L."""
        if self.decay is None:
            return 0.0
        d = self.basis.dim
        C, P = self.decay.C, self.decay.P
        total = mpmath.mpf(0)
        for Z in range(L + 1, L + 2000):
            count = l1_ball_size(d, Z) - l1_ball_size(d, Z - 1)
            term = count * mpmath.mpf(C) * mpmath.power(Z, -P)
            total += term
            if term < total * mpmath.mpf(10) ** -20:
                break
        return float(total)

    def truncate(self, L: int) -> "Potential":
        """Drop all frequencies of order > L (orders measured in this potential's Θ)."""
        theta = self.frequency_set
        if self.decay is not None:
            return Potential.from_decay(self.basis, self.decay, L)
        keep = {k: v for k, v in self.coefficients.items() if theta.order(k) <= L}
        return Potential(self.basis, keep, _theta=theta)

    # periodicity -------------------------------------------------------

    @cached_property
    def fundamental(self) -> Frequency | None:
        """Lattice vector g with every frequency an integer multiple of g, if one exists."""
        if self.decay is not None:
            return None
        if not self.support:
            return (1,) if self.basis.dim == 1 else None
        base = self.support[0]
        d = len(base)
        for v in self.support[1:]:
            if any(base[i] * v[j] != base[j] * v[i] for i in range(d) for j in range(i + 1, d)):
                return None
        gb = 0
        for c in base:
            gb = math.gcd(gb, c)
        direction = tuple(c // gb for c in base)
        if next(c for c in direction if c) < 0:
            direction = neg(direction)
        idx = next(i for i, c in enumerate(direction) if c)
        step = 0
        for v in self.support:
            step = math.gcd(step, v[idx] // direction[idx])
        return tuple(step * c for c in direction)

    @property
    def is_periodic(self) -> bool:
        return self.fundamental is not None

    @property
    def period(self) -> float:
        """Spatial period π/|ω| for periodic V (V(x) = Σ V̂ e^{2iθx})."""
        g = self.fundamental
        if g is None:
            raise InvalidPotential("potential is not periodic")
        return math.pi / abs(self.basis.value(g))

    def harmonics(self) -> dict[int, complex]:
        """Periodic V as {k: V̂} with θ = k·g for the fundamental g."""
        g = self.fundamental
        if g is None:
            raise InvalidPotential("potential is not periodic")
        out = {}
        idx = next(i for i, c in enumerate(g) if c)
        for k, v in self.coefficients.items():
            out[k[idx] // g[idx]] = v
        return out

    # evaluation ---------------------------------------------------------

    def evaluate(self, x, prec: Precision = DOUBLE):
        if not prec.extended:
            x = np.asarray(x, dtype=float)
            total = np.zeros_like(x, dtype=complex)
            for k, v in self.coefficients.items():
                total = total + v * np.exp(2j * self.basis.value(k) * x)
            if np.any(np.abs(total.imag) > IMAG_TOL):
                raise ApgaugeError("potential evaluation has a non-negligible imaginary part")
            return total.real
        x = mpmath.mpf(x)
        return mpmath.re(mpmath.fsum(mpmath.mpc(v) * mpmath.expj(2 * self.basis.value(k, prec) * x) for k, v in self.coefficients.items()))

    # serialization -------------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "generators": list(self.basis.generators),
            "coefficients": [
                {"coeffs": list(k), "re": v.real, "im": v.imag}
                for k, v in sorted(self.coefficients.items())
            ],
        }
        if self.decay is not None:
            doc["decay"] = {"C": self.decay.C, "P": self.decay.P, "seed": self.decay.seed, "tau": self.decay.tau}
            doc["truncation"] = self.truncation
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Potential":
        basis = Basis(tuple(doc["generators"]))
        if "decay" in doc and doc["decay"] is not None:
            d = doc["decay"]
            rule = DecayRule(float(d["C"]), float(d["P"]), int(d.get("seed", 0)), float(d.get("tau", 0.0)))
            return cls.from_decay(basis, rule, int(doc.get("truncation") or 1))
        coeffs = {tuple(c["coeffs"]): complex(c.get("re", 0.0), c.get("im", 0.0)) for c in doc["coefficients"]}
        return cls(basis, coeffs)

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def single_harmonic(amplitude: float, tau: float = 0.0, basis: Basis | None = None) -> Potential:
    """V = τ + 2a·cos(2x) on the basis (1,): V̂_{±1} = a."""
    basis = basis or Basis(("1",))
    return Potential(basis, {(1,): amplitude, (-1,): amplitude, (0,): tau})
