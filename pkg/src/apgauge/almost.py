"""Dyadic ε-windows for smooth almost-periodic potentials and super-resonant energies.

Window n covers ε ∈ [ε_n/4, ε_n] with ε_n = 2^{-n}ε₀. Inside it the potential
is truncated at order L̃(n) = ceil(ε_n^{-2N/P}), the gauge recursion runs 3N
steps and zones have half-width ε_n^{1/2}/(4|θ|).

Super-resonant candidates are built on the basis (1, √d): frequencies are
exact pairs a + b√d, and values that cancel catastrophically are evaluated as
(a² − db²)/(a − b√d), so 60 digits suffice even for orders near 10^20000.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import mpmath

from .asymptotics import StitchReport, fit_expansion, stitch
from .errors import ConfigError, DomainError, GeometryError, SearchExhausted, SmoothnessViolation
from .gauge import GaugeEngine
from .lattice import Basis, Frequency, FrequencySet, l1
from .potential import DecayRule, Potential
from .precision import DOUBLE, Precision
from .symbols import STANDARD, CutoffFamily, Mollifier

DPS = 60
SMOOTHNESS_LIMIT = 1.0 / 8.0


# --------------------------------------------------------------------------
# smoothness and the schedule


def minimal_smoothness(N: int, P0: float) -> int:
    """Smallest integer P with 3NP₀/P < 1/8."""
    return math.floor(24 * N * P0) + 1


def check_smoothness(N: int, P0: float, P: float) -> None:
    ratio = 3 * N * P0 / P
    if not ratio < SMOOTHNESS_LIMIT:
        raise SmoothnessViolation(
            f"3NP₀/P = {ratio:.4g} is not below 1/8 (N={N}, P₀={P0}, P={P}); "
            f"minimal admissible P is {minimal_smoothness(N, P0)}",
            "decay.P",
        )


@dataclass(frozen=True)
class Window:
    n: int
    eps: float
    L: int
    shell_order: int
    count: int
    count_bound: int
    zone_measure: float
    measure_bound: float
    min_clearance: float
    chain_ok: bool

    @property
    def ok(self) -> bool:
        return (self.count <= self.count_bound and self.zone_measure < self.measure_bound
                and self.min_clearance > 0 and self.chain_ok)

    def to_json(self) -> dict:
        return {
            "n": self.n, "eps": self.eps, "L": self.L, "shell_order": self.shell_order,
            "count": self.count, "count_bound": self.count_bound,
            "zone_measure": self.zone_measure, "measure_bound": self.measure_bound,
            "min_clearance": self.min_clearance, "chain_ok": self.chain_ok, "ok": self.ok,
        }


@dataclass
class DyadicSchedule:
    potential: Potential
    N: int
    eps0: float
    P0: float
    n_max: int
    windows: list[Window] = field(default_factory=list)

    @property
    def k_tilde(self) -> int:
        return 3 * self.N

    def eps(self, n: int):
        """ε_n as an mpf (n may be far beyond double range)."""
        with mpmath.workdps(DPS):
            return mpmath.ldexp(mpmath.mpf(self.eps0), -n)

    def L(self, n: int) -> int:
        """Truncation order; the support order for a trigonometric polynomial."""
        if self.potential.decay is None:
            return _support_order(self.potential)
        with mpmath.workdps(DPS):
            x = mpmath.power(self.eps(n), -mpmath.mpf(2 * self.N) / self.potential.decay.P)
            return int(mpmath.ceil(x))

    def shell_order(self, n: int) -> int:
        """Orders present in H₂ for window n: 3N·L̃(n)."""
        return self.k_tilde * self.L(n)

    def width(self, n: int):
        """Zone width parameter ε_n^{1/2}."""
        with mpmath.workdps(DPS):
            return mpmath.sqrt(self.eps(n))

    def family(self, n: int, mollifier: Mollifier = STANDARD) -> CutoffFamily:
        return CutoffFamily(float(self.width(n)), mollifier)

    def first_window_containing(self, order: int) -> int:
        """Smallest n with shell_order(n) ≥ order."""
        if self.potential.decay is None:
            raise DomainError("trigonometric polynomials have a fixed shell")
        P = self.potential.decay.P
        with mpmath.workdps(DPS):
            target = mpmath.mpf(order) / self.k_tilde
            guess = mpmath.log(self.eps0, 2) + P / (2 * self.N) * mpmath.log(target, 2)
            n = max(0, int(mpmath.floor(guess)) - 2)
        while self.shell_order(n) < order:
            n += 1
        while n > 0 and self.shell_order(n - 1) >= order:
            n -= 1
        return n

    def to_json(self) -> dict:
        return {
            "eps0": self.eps0, "N": self.N, "P0": self.P0, "n_max": self.n_max,
            "P": self.potential.decay.P if self.potential.decay else None,
            "windows": [w.to_json() for w in self.windows],
        }


def _support_order(potential: Potential) -> int:
    theta = potential.frequency_set
    return max([theta.order(t) for t in potential.support] + [1])


def _check_window(potential: Potential, schedule: DyadicSchedule, n: int) -> Window:
    basis = potential.basis
    eps = schedule.eps(n)
    L = schedule.L(n)
    Zw = schedule.shell_order(n)
    theta_set = FrequencySet.standard(basis) if potential.decay is not None else potential.frequency_set
    members = theta_set.shell(Zw, nonzero=True)
    width = float(schedule.width(n))
    centres = sorted((-basis.value(t), width / (4.0 * abs(basis.value(t)))) for t in members)
    clearance = math.inf
    for (c1, h1), (c2, h2) in zip(centres, centres[1:]):
        clearance = min(clearance, (c2 - c1) - 10.0 * (h1 + h2))
    measure = math.fsum(2.0 * h for _, h in centres)
    l = theta_set.l
    # the integer-norm bound |θ₂ − θ₁| ≥ 1/(√d·Z) against the wide-zone length
    chain_ok = True
    d = basis.quadratic_radicand()
    if d is not None:
        chain_ok = 20.0 * width * math.sqrt(d) * Zw < 1.0 / (math.sqrt(d) * 2 * Zw)
    return Window(
        n=n, eps=float(eps), L=L, shell_order=Zw, count=len(members),
        count_bound=(3 * schedule.N * L * 3) ** (3 * l),
        zone_measure=measure, measure_bound=float(eps) ** (1.0 / 6.0),
        min_clearance=clearance, chain_ok=chain_ok,
    )


def build_schedule(potential: Potential, N: int, eps0: float | None = None, n_max: int = 12,
                   P0: float = 1.0) -> DyadicSchedule:
    """Dyadic schedule with every window up to ``n_max`` checked.

    Without ``eps0`` the largest dyadic ε₀ whose windows all pass is chosen.
    """
    if N < 1:
        raise ConfigError("N must be at least 1", "N")
    if potential.decay is not None:
        check_smoothness(N, P0, potential.decay.P)
    candidates = [eps0] if eps0 is not None else [2.0**-k for k in range(1, 200)]
    last = None
    for e0 in candidates:
        sched = DyadicSchedule(potential, N, float(e0), P0, n_max)
        windows = [_check_window(potential, sched, n) for n in range(n_max + 1)]
        sched.windows = windows
        bad = [w for w in windows if not w.ok]
        if not bad:
            return sched
        last = bad[0]
    raise GeometryError(
        f"window {last.n} fails: clearance {last.min_clearance:.3g}, measure {last.zone_measure:.3g} "
        f"vs {last.measure_bound:.3g}, count {last.count} vs {last.count_bound}"
    )


@dataclass
class WindowRun:
    n: int
    eps: float
    L: int
    potential: Potential
    engine: GaugeEngine


def run_window(schedule: DyadicSchedule, n: int, prec: Precision = DOUBLE,
               mollifier: Mollifier = STANDARD) -> WindowRun:
    """Gauge engine for window n: V truncated at L̃(n), zones of width ε_n^{1/2}."""
    if n < 0:
        raise DomainError("window index must be non-negative")
    pot = schedule.potential
    L = schedule.L(n)
    truncated = pot.truncate(L) if pot.decay is not None else pot
    engine = GaugeEngine(truncated, schedule.family(n, mollifier), N=schedule.N,
                         k_tilde=schedule.k_tilde, prec=prec)
    return WindowRun(n, float(schedule.eps(n)), L, truncated, engine)


def f2_tail_difference(schedule: DyadicSchedule, xi: float, n_from: int, n_to: int) -> float:
    """Σ over θ entering between windows of |V̂_θ|²/((ξ+2θ)²−ξ²), ξ off every zone."""
    pot = schedule.potential
    basis = pot.basis
    theta_set = FrequencySet.standard(basis) if pot.decay is not None else pot.frequency_set
    lo, hi = schedule.shell_order(n_from), schedule.shell_order(n_to)
    total = 0.0
    rule = pot.decay
    for t in theta_set.shell(hi, nonzero=True):
        Z = theta_set.order(t)
        if Z <= lo:
            continue
        v = basis.value(t)
        mag2 = float(rule.magnitude(Z)) ** 2 if rule is not None else abs(pot.coefficient(t)) ** 2
        total += mag2 / ((xi + 2 * v) ** 2 - xi**2)
    return -total


# --------------------------------------------------------------------------
# arithmetic in Z[√d]


def int_str(x: int) -> str:
    """Decimal digits of an arbitrarily long integer."""
    old = sys.get_int_max_str_digits()
    sys.set_int_max_str_digits(0)
    try:
        return str(x)
    finally:
        sys.set_int_max_str_digits(old)

Pair = tuple[int, int]


def qmul(x: Pair, y: Pair, d: int) -> Pair:
    return (x[0] * y[0] + d * x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def qpow(x: Pair, k: int, d: int) -> Pair:
    out, base = (1, 0), x
    while k:
        if k & 1:
            out = qmul(out, base, d)
        base = qmul(base, base, d)
        k >>= 1
    return out


def qvalue(x: Pair, d: int):
    """a + b√d as an mpf at the working precision, without cancellation."""
    a, b = x
    r = mpmath.sqrt(d)
    if a == 0 or b == 0 or (a > 0) == (b > 0):
        return mpmath.mpf(a) + mpmath.mpf(b) * r
    return mpmath.mpf(a * a - d * b * b) / (mpmath.mpf(a) - mpmath.mpf(b) * r)


def small_unit(d: int) -> Pair:
    """Positive unit s < 1 of Z[√d] from the smallest solution of p² − dq² = ±1."""
    q = 1
    while True:
        for sgn in (-1, 1):
            m = d * q * q + sgn
            p = math.isqrt(m)
            if p > 0 and p * p == m:
                # p − q√d has modulus 1/(p + q√d) < 1
                return (-p, q) if p * p < d * q * q else (p, -q)
        q += 1


# --------------------------------------------------------------------------
# super-resonance construction


def modified_width(eps, mag, theta_abs):
    """δ_n(θ) = min(ε_n|V̂_θ|/(100|θ|), |V̂_θ|²/(72θ²))."""
    return min(eps * mag / (100 * theta_abs), mag**2 / (72 * theta_abs**2))


@dataclass
class Stage:
    j: int
    theta: Pair
    order: int
    value: object
    magnitude: object
    n: int
    k: int
    k_tilde: int
    delta: object
    offset_lo: object
    offset_hi: object

    def to_json(self) -> dict:
        s = lambda x: mpmath.nstr(x, 20)
        return {
            "j": self.j, "theta_coeffs": [int_str(self.theta[0]), int_str(self.theta[1])],
            "order_log10": float(mpmath.log10(self.order)), "theta_value": s(self.value),
            "n_j": self.n, "k_j": self.k, "k_tilde_j": self.k_tilde, "n_prime_j": self.k_tilde,
            "delta": s(self.delta),
            "interval": {"centre": "-theta_j", "offset_lo": s(self.offset_lo), "offset_hi": s(self.offset_hi)},
        }


@dataclass
class Certificate:
    """Checks at one stage, all evaluated at the final ξ*."""

    j: int
    offset: object
    in_modified_zone: bool
    modified_inside_zone: bool
    clear_k: bool
    clear_k_tilde: bool
    f2_k: object
    f2_k_tilde: object
    tail_k: object
    tail_k_tilde: object
    f2_jump_lower: object
    jump_ok: bool

    def to_json(self) -> dict:
        s = lambda x: mpmath.nstr(x, 15)
        return {
            "j": self.j, "offset": s(self.offset), "condition_a": self.in_modified_zone,
            "modified_inside_zone": self.modified_inside_zone,
            "clear_k": self.clear_k, "condition_b": self.clear_k_tilde,
            "f2_k": s(self.f2_k), "f2_k_tilde": s(self.f2_k_tilde),
            "tail_bound_k": s(self.tail_k), "tail_bound_k_tilde": s(self.tail_k_tilde),
            "f2_jump_lower": s(self.f2_jump_lower), "jump_at_least_one": self.jump_ok,
        }


@dataclass
class SuperResonanceCandidate:
    d: int
    stages: list[Stage]
    rho: object
    xi_star: object
    certificates: list[Certificate] = field(default_factory=list)
    failure_stage: int | None = None
    message: str = ""

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def complete(self) -> bool:
        return self.failure_stage is None

    @property
    def valid(self) -> bool:
        return self.complete and all(
            c.in_modified_zone and c.modified_inside_zone and c.clear_k and c.clear_k_tilde and c.jump_ok
            for c in self.certificates
        )

    @property
    def xi_star_decimal(self) -> str:
        return mpmath.nstr(self.xi_star, 40, strip_zeros=False) if self.xi_star is not None else ""

    def offset(self, j: int):
        """ξ* + θ_j computed exactly from the integer pairs."""
        last = self.stages[-1].theta
        t = self.stages[j].theta
        with mpmath.workdps(DPS):
            return qvalue((t[0] - last[0], t[1] - last[1]), self.d) + self.rho

    def to_json(self) -> dict:
        last = self.stages[-1] if self.stages else None
        return {
            "xi_star_decimal": self.xi_star_decimal,
            "representation": None if last is None else {
                "minus_theta_coeffs": [int_str(-last.theta[0]), int_str(-last.theta[1])],
                "plus_offset": mpmath.nstr(self.rho, 30),
                "radicand": self.d,
            },
            "trace": [s.to_json() for s in self.stages],
            "certificates": [c.to_json() for c in self.certificates],
            "complete": self.complete, "valid": self.valid,
            "failure_stage": self.failure_stage, "message": self.message,
        }


def _magnitude(potential: Potential, theta: Pair, order):
    rule = potential.decay
    if rule is not None:
        return rule.magnitude(order)
    return mpmath.mpf(abs(potential.coefficient(theta)))


def _first_theta(schedule: DyadicSchedule, d: int, start: tuple[float, float]) -> Pair:
    """Lowest-order θ beyond window 0 with −θ inside ``start``."""
    lo, hi = start
    Z = schedule.shell_order(0) + 1
    for Z in range(Z, Z + 200):
        best = None
        for b in range(-Z, Z + 1):
            for a in {Z - abs(b), -(Z - abs(b))}:
                v = a + b * math.sqrt(d)
                if lo < -v < hi:
                    gap = abs(-v - 0.5 * (lo + hi))
                    if best is None or gap < best[0]:
                        best = (gap, (a, b))
        if best is not None:
            return best[1]
    raise SearchExhausted(f"no frequency with -θ in {start}")


def find_super_resonance(schedule: DyadicSchedule, depth: int = 3,
                         start: tuple[float, float] = (0.5, 0.9), z_cut: int = 8) -> SuperResonanceCandidate:
    """Nested construction of ξ* close to −θ_1, −θ_2, ... (τ = 0).

    Stage j: θ_j first appears in window n_j, ξ* lies within δ_{n_j}(θ_j) of
    −θ_j, and k̃_j is the first window whose zone around −θ_j no longer holds ξ*.
    θ_{j+1} = θ_j − m·s^k with s the small unit places −θ_{j+1} inside that shell.
    """
    pot = schedule.potential
    basis = pot.basis
    d = basis.quadratic_radicand()
    if d is None:
        raise DomainError("the construction needs the basis (1, sqrt(d))")
    if pot.decay is None:
        raise DomainError("a decay rule is required: trigonometric polynomials have a discrete Θ_∞")
    if pot.tau != 0:
        raise DomainError("only the τ = 0 variant is constructed")
    if depth < 1:
        raise ConfigError("depth must be at least 1", "depth")
    unit = small_unit(d)
    stages: list[Stage] = []
    with mpmath.workdps(DPS):
        log_unit = -mpmath.log(qvalue(unit, d))
        theta = _first_theta(schedule, d, start)
        failure, message = None, ""
        for j in range(depth):
            Z = l1(theta)
            val = qvalue(theta, d)
            mag = _magnitude(pot, theta, Z)
            n = schedule.first_window_containing(Z)
            prev = stages[-1].k_tilde if stages else 0
            if n <= prev:
                failure, message = j, f"θ_{j + 1} enters at window {n}, not after {prev}"
                break
            delta = modified_width(schedule.eps(n), mag, abs(val))
            # k̃: first window whose whole zone shell lies inside (0, δ)
            half = lambda m: schedule.width(m) / (4 * abs(val))
            guess = int(mpmath.floor(2 * mpmath.log(half(n) / delta, 2))) + n - 2
            n_star = max(n + 1, guess)
            while half(n_star - 1) > delta:
                n_star += 1
            while n_star > n + 1 and half(n_star - 2) <= delta:
                n_star -= 1
            lo, hi = half(n_star), half(n_star - 1)
            stages.append(Stage(j + 1, theta, Z, val, mag, n, n - 1, n_star, delta, lo, hi))
            if j == depth - 1:
                break
            # next frequency: θ_j − θ_{j+1} = m·s^k in the middle half of (lo, hi)
            a, b = lo + (hi - lo) / 4, hi - (hi - lo) / 4
            k = int(mpmath.ceil(mpmath.log(4 / (b - a)) / log_unit))
            sk = qpow(unit, k, d)
            sv = qvalue(sk, d)
            m = int(mpmath.nint((a + b) / 2 / sv))
            x = (m * sk[0], m * sk[1])
            if not a < qvalue(x, d) < b:
                failure, message = j + 1, "unit multiple missed the target shell"
                break
            theta = (theta[0] - x[0], theta[1] - x[1])
        if not stages:
            raise SearchExhausted(message or "no stage constructed")
        last = stages[-1]
        rho = mpmath.sqrt(last.offset_lo * last.offset_hi)
        xi = -qvalue(last.theta, d) + rho
    cand = SuperResonanceCandidate(d, stages, rho, xi, failure_stage=failure, message=message)
    cand.certificates = [_certify(schedule, cand, j, z_cut) for j in range(len(stages))]
    return cand


# --------------------------------------------------------------------------
# second-order symbol along the construction


def _low_members(basis: Basis, z_cut: int) -> list[tuple[Frequency, int]]:
    theta_set = FrequencySet.standard(basis)
    return [(t, theta_set.order(t)) for t in theta_set.shell(z_cut, nonzero=True)]


def _distance_floor(cand: SuperResonanceCandidate, Zb, shift=0):
    """Lower bound on |ξ*+θ| for every non-chain θ of order ≤ Zb."""
    r = mpmath.sqrt(cand.d)
    best = None
    for j, s in enumerate(cand.stages):
        bound = 1 / (r * (Zb + s.order)) - abs(cand.offset(j) + shift)
        best = bound if best is None else max(best, bound)
    return best


def window_f2(schedule: DyadicSchedule, cand: SuperResonanceCandidate, n: int, eta=0,
              z_cut: int = 8, mollifier: Mollifier = STANDARD):
    """f₂(ξ*+η; n) and a bound on the part beyond the enumerated orders.

    Orders ≤ ``z_cut`` and the chain frequencies are summed exactly; the rest
    of Θ'_{3NL̃(n)} is bounded blockwise using the integer-norm distance floor.
    """
    pot = schedule.potential
    basis = pot.basis
    with mpmath.workdps(DPS):
        xi = cand.xi_star + eta
        width = schedule.width(n)
        Zw = schedule.shell_order(n)
        total = mpmath.mpf(0)
        chain = {s.theta for s in cand.stages}
        for t, Z in _low_members(basis, min(z_cut, Zw)):
            if t in chain:
                continue
            mag = _magnitude(pot, t, Z)
            if mag == 0:
                continue
            v = basis.value(t, Precision(DPS))
            o = xi + v
            phi = float(mollifier.phi(float(o * 4 * abs(v) / width)))
            total += phi * mag**2 / (4 * v * o)
        for j, s in enumerate(cand.stages):
            if s.order > Zw or s.order <= z_cut:
                continue
            o = cand.offset(j) + eta
            mag = _magnitude(pot, s.theta, s.order)
            phi = float(mollifier.phi(float(o * 4 * abs(s.value) / width)))
            total += phi * mag**2 / (4 * s.value * o)
        tail = _tail_bound(schedule, cand, z_cut, Zw, xi, eta)
        return -total, tail


def _tail_bound(schedule, cand, z_cut, Zw, xi, eta):
    pot = schedule.potential
    if pot.decay is None or Zw <= z_cut:
        return mpmath.mpf(0)
    C, P = mpmath.mpf(pot.decay.C), pot.decay.P
    rd = mpmath.sqrt(cand.d)
    bound = mpmath.mpf(0)
    Za = z_cut + 1
    while Za <= Zw:
        Zb = min(2 * Za - 1, Zw)
        D = _distance_floor(cand, Zb, eta)
        if D <= 0:
            return mpmath.inf
        count = 4 * mpmath.mpf(Zb) * (Zb - Za + 1)
        per = max(rd * Zb * 2 / xi, 2 / (xi * D)) / 4
        term = count * C**2 * mpmath.power(Za, -2 * P) * per
        bound += term
        if term < bound * mpmath.mpf(10) ** -30 and Za > 10**6:
            # geometric decay of later blocks is far faster than the block count grows
            bound *= 1 + mpmath.mpf(10) ** -20
            break
        Za = Zb + 1
    return bound


def _clear_of_zones(schedule, cand, n) -> bool:
    """ξ* ∉ 𝓡(n): every θ ∈ Θ'_{3NL̃(n)} keeps |ξ*+θ| ≥ ε_n^{1/2}/(4|θ|)."""
    with mpmath.workdps(DPS):
        xi = cand.xi_star
        r = schedule.width(n)
        Zw = schedule.shell_order(n)
        rd = mpmath.sqrt(cand.d)
        # small |θ| < ξ/2: then |ξ+θ| > ξ/2 while the half-width is at most r√d·Zw/4
        if not xi / 2 >= r * rd * Zw / 4:
            return False
        # |θ| ≥ ξ/2: half-width ≤ r/(2ξ), compared with the non-chain distance floor
        D = _distance_floor(cand, Zw)
        if not D >= r / (2 * xi):
            return False
        for j, s in enumerate(cand.stages):
            if s.order <= Zw and abs(cand.offset(j)) < r / (4 * abs(s.value)):
                return False
        return True


def _certify(schedule, cand, j, z_cut) -> Certificate:
    s = cand.stages[j]
    with mpmath.workdps(DPS):
        off = cand.offset(j)
        in_mod = abs(off) < s.delta
        inside = s.delta <= schedule.width(s.n) / (4 * abs(s.value))
        f_k, t_k = window_f2(schedule, cand, s.k, z_cut=z_cut)
        f_kt, t_kt = window_f2(schedule, cand, s.k_tilde, z_cut=z_cut)
        lower = abs(f_kt - f_k) - t_k - t_kt
    return Certificate(
        j=s.j, offset=off, in_modified_zone=bool(in_mod), modified_inside_zone=bool(inside),
        clear_k=_clear_of_zones(schedule, cand, s.k), clear_k_tilde=_clear_of_zones(schedule, cand, s.k_tilde),
        f2_k=f_k, f2_k_tilde=f_kt, tail_k=t_k, tail_k_tilde=t_kt,
        f2_jump_lower=lower, jump_ok=bool(lower >= 1),
    )


# --------------------------------------------------------------------------
# oscillation of the ε²-coefficient


def predicted_jump(schedule: DyadicSchedule, cand: SuperResonanceCandidate, j: int):
    """(2πξ*)⁻¹·ε_{k̃_j}^{-1/2}·|V̂_{θ_j}|²/(9|θ_j|)."""
    s = cand.stages[j]
    with mpmath.workdps(DPS):
        return s.magnitude**2 / (9 * abs(s.value) * schedule.width(s.k_tilde) * 2 * mpmath.pi * cand.xi_star)


def window_ladder(schedule: DyadicSchedule, cand: SuperResonanceCandidate, n: int, points: int = 8,
                  z_cut: int = 8):
    """t ↦ (N(ξ*²; tε_n) − ξ*/π)/ε_n² on t ∈ [1/4, 1] from the window's second-order branch.

    The branch g(ξ) = ξ² + ε²f₂(ξ; n) is solved for g(ξ*+η) = ξ*² by fixed point.
    """
    ts = [4.0 ** (-i / (points - 1)) for i in range(points)][::-1]
    values = []
    with mpmath.workdps(DPS):
        en = schedule.eps(n)
        xi = cand.xi_star
        for t in ts:
            e2 = (t * en) ** 2
            eta = mpmath.mpf(0)
            for _ in range(50):
                f, _tail = window_f2(schedule, cand, n, eta, z_cut)
                new = -e2 * f / (2 * xi + eta)
                if abs(new - eta) <= abs(new) * mpmath.mpf(10) ** -(DPS - 10):
                    eta = new
                    break
                eta = new
            values.append(float(eta / (mpmath.pi * en**2)))
    return ts, values


@dataclass
class OscillationReport:
    windows: list[int]
    fits: dict
    closed_form: dict
    stitch: StitchReport
    jumps: list[dict]

    @property
    def oscillates(self) -> bool:
        return (not self.stitch.consistent) and all(j["ok"] for j in self.jumps)

    def to_json(self) -> dict:
        return {
            "windows": self.windows,
            "fits": {str(n): f.to_json() for n, f in self.fits.items()},
            "closed_form_eps2": {str(n): v for n, v in self.closed_form.items()},
            "stitch": self.stitch.to_json(),
            "jumps": self.jumps,
            "oscillates": self.oscillates,
        }


def demonstrate_oscillation(schedule: DyadicSchedule, cand: SuperResonanceCandidate, points: int = 8,
                            z_cut: int = 8, floor_rtol: float = 1e-9) -> OscillationReport:
    """Per-window ε² coefficients along the trace, their stitch and the jump checks."""
    if len(cand.stages) < 2:
        raise DomainError("at least two stages are needed")
    windows = sorted({n for s in cand.stages for n in (s.k, s.k_tilde)})
    fits, closed = {}, {}
    for n in windows:
        ts, ys = window_ladder(schedule, cand, n, points, z_cut)
        fits[n] = fit_expansion(ts, ys, [2, 4, 6])
        with mpmath.workdps(DPS):
            f, _ = window_f2(schedule, cand, n, z_cut=z_cut)
            closed[n] = float(-f / (2 * mpmath.pi * cand.xi_star))
    scale = max(abs(f.coefficient(2)) for f in fits.values())
    report = stitch(fits, M=1, floor=floor_rtol * scale)
    jumps = []
    for j, s in enumerate(cand.stages):
        if s.k not in fits or s.k_tilde not in fits:
            continue
        diff = abs(fits[s.k_tilde].coefficient(2) - fits[s.k].coefficient(2))
        pred = float(predicted_jump(schedule, cand, j)) if schedule.potential.decay else 0.0
        jumps.append({"j": s.j, "k": s.k, "k_tilde": s.k_tilde, "difference": diff,
                      "predicted": pred, "ok": bool(diff >= pred > 0)})
    return OscillationReport(windows, fits, closed, report, jumps)


def quasi_periodic_control(potential: Potential) -> Potential:
    """Order-one part of a decay-rule potential: same C, phases and τ."""
    rule = potential.decay
    if rule is None:
        return potential
    theta_set = FrequencySet.standard(potential.basis)
    coeffs = {t: rule.coefficient(t, 1) for t in theta_set.shell(1)}
    return Potential(potential.basis, coeffs)


def control_schedule(schedule: DyadicSchedule) -> DyadicSchedule:
    """Schedule with the same ε₀ for the quasi-periodic control."""
    ctrl = quasi_periodic_control(schedule.potential)
    sched = DyadicSchedule(ctrl, schedule.N, schedule.eps0, schedule.P0, schedule.n_max)
    sched.windows = [_check_window(ctrl, sched, n) for n in range(schedule.n_max + 1)]
    return sched


def control_oscillation(schedule: DyadicSchedule, cand: SuperResonanceCandidate, points: int = 8,
                        floor_rtol: float = 1e-9) -> OscillationReport:
    """The same windows and ξ* for the quasi-periodic control potential."""
    ctrl = control_schedule(schedule)
    windows = sorted({n for s in cand.stages for n in (s.k, s.k_tilde)})
    fits, closed = {}, {}
    for n in windows:
        ts, ys = window_ladder(ctrl, cand, n, points)
        fits[n] = fit_expansion(ts, ys, [2, 4, 6])
        with mpmath.workdps(DPS):
            f, _ = window_f2(ctrl, cand, n)
            closed[n] = float(-f / (2 * mpmath.pi * cand.xi_star))
    scale = max(abs(f.coefficient(2)) for f in fits.values())
    return OscillationReport(windows, fits, closed, stitch(fits, M=1, floor=floor_rtol * scale), [])


def decay_potential(generators=("1", "sqrt(2)"), C: float = 0.003, P: float = 60, seed: int = 0,
                    tau: float = 0.0, max_order: int = 4) -> Potential:
    """Smooth almost-periodic potential V̂_θ = C·Z^{-P}e^{iα(θ)}, stored to ``max_order``."""
    return Potential.from_decay(Basis(tuple(generators)), DecayRule(C, P, seed, tau), max_order)
