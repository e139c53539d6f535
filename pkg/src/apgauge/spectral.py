"""Resonance zones, 2×2 fiber matrices and the spectral map G.

Inside the zone R(θ) (centred at −θ) the operator H₂ couples e_ξ only with
e_{ξ+2θ}, so its spectrum there comes from the Hermitian matrix

    M(ξ) = [[ĥ₂(ξ;0),        conj ĥ₂(ξ;θ)],
            [ĥ₂(ξ;θ),         ĥ₂(ξ+2θ;0)  ]].

G(ξ) is ĥ₂(ξ;0) off the zones and the larger (ξ > 0) or smaller (ξ < 0)
eigenvalue of M(ξ) inside them. At exact zone endpoints G is taken as the
limit from inside, which for an open zone is simply the matrix value.

Local models use the variable ζ with ξ = θ₀ + ζ for a resonant frequency of
positive value θ₀, and write

    ĥ₂(θ₀+ζ;0) = (θ₀+ζ)² + μ + f(θ₀+ζ),   ĥ₂(ζ−θ₀;0) = (ζ−θ₀)² + μ + f(ζ−θ₀),
    ĥ₂(ζ−θ₀;θ₀) = εν + g,   s = (f(ζ−θ₀) + f(ζ+θ₀))/2,   t = (f(ζ−θ₀) − f(ζ+θ₀))/2,

so that σ± = ζ² + θ₀² + μ + s ± ((2ζθ₀ − t)² + |εν + g|²)^{1/2}.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .chebyshev import ChebModel, nodes
from .errors import DomainError, GeometryError
from .gauge import GaugeEngine
from .lattice import Basis, Frequency, neg
from .precision import to_gmpy, working_precision
from .symbols import CutoffFamily

# --------------------------------------------------------------------------
# zones


@dataclass(frozen=True)
class ResonanceZone:
    theta: Frequency
    value: float
    half_width: float

    @property
    def center(self) -> float:
        return -self.value

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    @property
    def wide_half_width(self) -> float:
        return 10.0 * self.half_width

    def contains(self, xi: float) -> bool:
        return self.lo < xi < self.hi

    def to_json(self) -> dict:
        return {"theta": list(self.theta), "center": self.center, "half_width": self.half_width}


@dataclass
class ZoneSet:
    """Zones sorted by centre."""

    zones: list[ResonanceZone]
    _centers: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.zones = sorted(self.zones, key=lambda z: z.center)
        self._centers = [z.center for z in self.zones]
        self._by_theta = {z.theta: z for z in self.zones}

    def __len__(self):
        return len(self.zones)

    def __iter__(self):
        return iter(self.zones)

    def get(self, theta: Frequency) -> ResonanceZone | None:
        return self._by_theta.get(tuple(theta))

    def check_disjoint(self, wide: bool = True) -> None:
        for a, b in zip(self.zones, self.zones[1:]):
            ha = a.wide_half_width if wide else a.half_width
            hb = b.wide_half_width if wide else b.half_width
            if a.center + ha >= b.center - hb:
                kind = "wide zones" if wide else "zones"
                raise GeometryError(f"{kind} of {a.theta} and {b.theta} overlap; reduce the zone width")

    def locate(self, xi: float) -> ResonanceZone | None:
        """The zone whose open interval contains ξ, if any."""
        i = bisect.bisect_left(self._centers, xi)
        for j in (i - 1, i):
            if 0 <= j < len(self.zones) and self.zones[j].contains(xi):
                return self.zones[j]
        return None

    def locate_many(self, xi) -> np.ndarray:
        """Index into ``zones`` for each ξ, −1 off the zones."""
        xi = np.asarray(xi, dtype=float)
        if not self.zones:
            return np.full(xi.shape, -1, dtype=int)
        c = np.asarray(self._centers)
        hw = np.asarray([z.half_width for z in self.zones])
        i = np.searchsorted(c, xi)
        out = np.full(xi.shape, -1, dtype=int)
        for j in (i - 1, i):
            ok = (j >= 0) & (j < len(c))
            jj = np.clip(j, 0, len(c) - 1)
            inside = ok & (np.abs(xi - c[jj]) < hw[jj])
            out = np.where(inside, jj, out)
        return out

    def measure(self) -> float:
        return math.fsum(2 * z.half_width for z in self.zones)

    def to_json(self) -> list:
        return [z.to_json() for z in self.zones]


def build_zones(freqs, basis: Basis, family: CutoffFamily, check: bool = True) -> ZoneSet:
    """R(θ) for every θ in ``freqs`` (0 excluded), both disjointness levels checked."""
    zones = []
    for t in freqs:
        t = tuple(t)
        if not any(t):
            raise DomainError("the zero frequency has no resonance zone")
        v = basis.value(t)
        zones.append(ResonanceZone(t, v, family.half_width(v)))
    zs = ZoneSet(zones)
    if check:
        zs.check_disjoint(wide=False)
        zs.check_disjoint(wide=True)
    return zs


# --------------------------------------------------------------------------
# local data and eigenvalues


@dataclass
class ResonanceLocalData:
    zeta: object
    theta0: object
    mu: object
    s: object
    t: object
    nu: complex
    g: object
    eps: object
    s_by_degree: list = field(default_factory=list)
    t_by_degree: list = field(default_factory=list)
    g_by_degree: list = field(default_factory=list)


def _sqrt(x):
    return gmpy2.sqrt(x) if isinstance(x, gmpy2.mpfr) else np.sqrt(x)


def sigma_pm(data: ResonanceLocalData):
    z, th = data.zeta, data.theta0
    mid = z * z + th * th + data.mu + data.s
    a = 2 * z * th - data.t
    c = data.eps * data.nu + data.g
    r = _sqrt(a * a + abs(c) ** 2)
    return mid - r, mid + r


def fiber_matrix(diag, partner, off) -> np.ndarray:
    """M with M[0,0] = ĥ₂(ξ;0), M[1,1] = ĥ₂(ξ+2θ;0), M[1,0] = ĥ₂(ξ;θ)."""
    return np.array([[diag, np.conj(off)], [off, partner]], dtype=complex)


def eig2(a, b, c):
    """Eigenvalues (low, high) of [[a, c̄], [c, b]] for real a, b."""
    mid = (a + b) / 2
    r = _sqrt(((a - b) / 2) ** 2 + abs(c) ** 2)
    return mid - r, mid + r


# --------------------------------------------------------------------------
# batched evaluation in double precision


@dataclass
class FiberTable:
    """Per-degree coefficients at a batch of points (double precision)."""

    xi: np.ndarray
    zone: np.ndarray  # index into the zone set, −1 off zones
    diag: np.ndarray  # (k̃+1, P) real
    partner: np.ndarray  # (k̃+1, P) real, zeros off zones
    off: np.ndarray  # (k̃+1, P) complex, zeros off zones

    @staticmethod
    def _poly(coeffs, eps):
        powers = eps ** np.arange(coeffs.shape[0])
        return np.tensordot(powers, coeffs, axes=1)

    def h0(self, eps: float) -> np.ndarray:
        return self._poly(self.diag, eps)

    def eigen(self, eps: float):
        a = self._poly(self.diag, eps)
        b = self._poly(self.partner, eps)
        c = self._poly(self.off, eps)
        return eig2(a, b, c)

    def G(self, eps: float) -> np.ndarray:
        a = self._poly(self.diag, eps)
        inz = self.zone >= 0
        if not np.any(inz):
            return a
        lo, hi = self.eigen(eps)
        return np.where(inz, np.where(self.xi > 0, hi, lo), a)


class SpectralMap:
    """G and ĥ₂(·;0) for one engine (fixed potential, N and cut-off family)."""

    def __init__(self, engine: GaugeEngine, zones: ZoneSet | None = None):
        self.engine = engine
        self.basis = engine.basis
        if zones is None:
            freqs = engine.theta_set.shell(engine.step * engine.k_tilde, nonzero=True)
            zones = build_zones(freqs, self.basis, engine.family)
        self.zones = zones

    def table(self, xi) -> FiberTable:
        if self.engine.prec.extended:
            raise DomainError("batched fiber tables are double precision; use the local models")
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        kt = self.engine.k_tilde
        zi = self.zones.locate_many(xi)
        inz = np.nonzero(zi >= 0)[0]
        partners = np.array([xi[i] + 2 * self.zones.zones[zi[i]].value for i in inz])
        pts = np.concatenate([xi, partners])
        run = self.engine.run(pts)
        P = len(xi)
        zero = self.engine.theta_set.zero
        diag = np.zeros((kt + 1, P))
        partner = np.zeros((kt + 1, P))
        off = np.zeros((kt + 1, P), dtype=complex)
        for d in range(kt + 1):
            h = run.h2.get(d, {})
            if zero in h:
                diag[d] = h[zero][:P, 0].real
                partner[d, inz] = h[zero][P:, 0].real
            for k, i in enumerate(inz):
                arr = h.get(self.zones.zones[zi[i]].theta)
                if arr is not None:
                    off[d, i] = arr[i, 0]
        return FiberTable(xi, zi, diag, partner, off)

    def G(self, xi, eps: float) -> np.ndarray:
        return self.table(xi).G(eps)

    def h0(self, xi, eps: float) -> np.ndarray:
        return self.table(xi).h0(eps)

    def fiber(self, xi: float, eps: float) -> np.ndarray | None:
        t = self.table([xi])
        if t.zone[0] < 0:
            return None
        return fiber_matrix(t.h0(eps)[0], t._poly(t.partner, eps)[0], t._poly(t.off, eps)[0])


# --------------------------------------------------------------------------
# local Chebyshev models (double or extended precision)


def flat_width(engine: GaugeEngine, centers, w: float, max_halvings: int = 60, refine: int = 24) -> float:
    """Nearly the largest width ≤ w such that no cut-off switches on any [c − w, c + w].

    Dyadic halving finds a flat width, bisection then grows it towards the
    first switch and a 2% safety margin is kept.
    """
    def flat(x):
        return not any(engine.transition_hits(float(c) - x, float(c) + x) for c in centers)

    w0 = w = float(w)
    for _ in range(max_halvings):
        if flat(w):
            break
        w /= 2
    else:
        raise DomainError(f"no cut-off-flat neighbourhood found around {list(map(float, centers))}")
    if w < w0:
        lo, hi = w, 2 * w
        for _ in range(refine):
            mid = (lo + hi) / 2
            if flat(mid):
                lo = mid
            else:
                hi = mid
        w = 0.98 * lo
    return w


class _ModelBase:
    def __init__(self, engine: GaugeEngine, K: int):
        self.engine = engine
        self.K = K
        self.extended = engine.prec.extended
        self.kt = engine.k_tilde

    def _ctx(self):
        return working_precision(self.engine.prec)

    def _num(self, x):
        return to_gmpy(x) if self.extended else float(x)

    def _powers(self, eps):
        eps = self._num(eps)
        out = [eps ** d for d in range(self.kt + 1)]
        return out


class RegularModel(_ModelBase):
    """ĥ₂(ξ;0) on [ξ₀ − w, ξ₀ + w], valid when no cut-off switches there."""

    def __init__(self, engine: GaugeEngine, xi0, w, K: int = 16):
        super().__init__(engine, K)
        with self._ctx():
            w = flat_width(engine, [xi0], w)
            self.xi0, self.w = self._num(xi0), self._num(w)
            xs = nodes(self.xi0, self.w, K, self.extended)
            run = engine.run(xs)
            zero = engine.theta_set.zero
            vals = np.empty((K, self.kt), dtype=object if self.extended else complex)
            for d in range(1, self.kt + 1):
                arr = run.h2.get(d, {}).get(zero)
                vals[:, d - 1] = arr[:, 0] if arr is not None else 0
            self.model = ChebModel(vals, self.xi0, self.w, self.extended)
            self.dmodel = self.model.derivative()

    def coefficients(self, xi):
        """[f_1, …, f_k̃] at ξ (f_1 = τ)."""
        with self._ctx():
            return list(self.model(self._num(xi)))

    def h(self, xi, eps):
        with self._ctx():
            xi = self._num(xi)
            c = self.model(xi)
            p = self._powers(eps)
            return xi * xi + sum((p[d + 1] * c[d]).real for d in range(self.kt))

    def dh(self, xi, eps):
        with self._ctx():
            xi = self._num(xi)
            c = self.dmodel(xi)
            p = self._powers(eps)
            return 2 * xi + sum((p[d + 1] * c[d]).real for d in range(self.kt))

    def root(self, lam, eps, tol=None, lo=None, hi=None):
        """ξ in [lo, hi] (default the model interval) with ĥ₂(ξ;0) = λ.

        Newton, safeguarded by bisection.
        """
        with self._ctx():
            lam = self._num(lam)
            lo = self.xi0 - self.w if lo is None else self._num(lo)
            hi = self.xi0 + self.w if hi is None else self._num(hi)
            flo, fhi = self.h(lo, eps) - lam, self.h(hi, eps) - lam
            if flo * fhi > 0:
                raise DomainError("level is not attained inside the regular model interval")
            if tol is None:
                tol = self.w * (gmpy2.mpfr(2) ** (-gmpy2.get_context().precision + 8) if self.extended else 1e-15)
            x = lo - flo * (hi - lo) / (fhi - flo)
            for _ in range(200):
                f = self.h(x, eps) - lam
                if f == 0:
                    return x
                if (f < 0) == (flo < 0):
                    lo, flo = x, f
                else:
                    hi = x
                step = f / self.dh(x, eps)
                nx = x - step
                if not (lo < nx < hi):
                    nx = (lo + hi) / 2
                if abs(nx - x) <= tol:
                    return nx
                x = nx
            raise DomainError("regular-model root did not converge")


class ResonantModel(_ModelBase):
    """Per-degree 2×2 data near the zone pair of θ₀ (value taken positive).

    Components, as functions of ζ on [−w, w]:
    A_d = ĥ₂(θ₀+ζ;0), B_d = ĥ₂(ζ−θ₀;0), C_d = ĥ₂(ζ−θ₀;θ₀) for d = 1..k̃.
    """

    def __init__(self, engine: GaugeEngine, theta0: Frequency, w, K: int = 16):
        super().__init__(engine, K)
        theta0 = tuple(theta0)
        if engine.basis.value(theta0) < 0:
            theta0 = neg(theta0)
        self.theta = theta0
        self.theta_float = engine.basis.value(theta0)
        with self._ctx():
            self.theta0 = to_gmpy(engine.basis.value(theta0, engine.prec)) if self.extended else self.theta_float
            tf = self.theta_float
            self.w = self._num(flat_width(engine, [tf, -tf], w))
            zero = self._num(0)
            zs = nodes(zero, self.w, K, self.extended)
            pts = [self.theta0 + z for z in zs] + [z - self.theta0 for z in zs]
            run = engine.run(pts)
            z0 = engine.theta_set.zero
            vals = np.empty((K, 3, self.kt), dtype=object if self.extended else complex)
            for d in range(1, self.kt + 1):
                h = run.h2.get(d, {})
                diag = h.get(z0)
                offd = h.get(theta0)
                for k in range(K):
                    vals[k, 0, d - 1] = diag[k, 0] if diag is not None else 0
                    vals[k, 1, d - 1] = diag[K + k, 0] if diag is not None else 0
                    vals[k, 2, d - 1] = offd[K + k, 0] if offd is not None else 0
            self.nu = complex(engine.potential.coefficient(theta0))
            self.model = ChebModel(vals, zero, self.w, self.extended)
            self.dmodel = self.model.derivative()

    def _parts(self, model, zeta, eps):
        c = model(zeta)
        p = self._powers(eps)
        A = sum((p[d + 1] * c[0][d]).real for d in range(self.kt))
        B = sum((p[d + 1] * c[1][d]).real for d in range(self.kt))
        C = sum(p[d + 1] * c[2][d] for d in range(self.kt))
        return A, B, C

    def matrix_entries(self, zeta, eps):
        """(ĥ₂(θ₀+ζ;0), ĥ₂(ζ−θ₀;0), ĥ₂(ζ−θ₀;θ₀))."""
        with self._ctx():
            z = self._num(zeta)
            A, B, C = self._parts(self.model, z, eps)
            return (self.theta0 + z) ** 2 + A, (z - self.theta0) ** 2 + B, C

    def sigma(self, zeta, eps):
        with self._ctx():
            a, b, c = self.matrix_entries(zeta, eps)
            return eig2(a, b, c)

    def dsigma(self, zeta, eps):
        """(σ₋′, σ₊′) in ζ."""
        with self._ctx():
            z = self._num(zeta)
            a, b, c = self.matrix_entries(z, eps)
            dA, dB, dC = self._parts(self.dmodel, z, eps)
            da = 2 * (self.theta0 + z) + dA
            db = 2 * (z - self.theta0) + dB
            u = (a - b) / 2
            du = (da - db) / 2
            r = _sqrt(u * u + abs(c) ** 2)
            dr = (u * du + (c.conjugate() * dC).real) / r
            mid = (da + db) / 2
            return mid - dr, mid + dr

    def local_data(self, zeta, eps) -> ResonanceLocalData:
        with self._ctx():
            z = self._num(zeta)
            e = self._num(eps)
            c = self.model(z)
            p = self._powers(eps)
            s_d = [((c[0][d] + c[1][d]) / 2).real for d in range(1, self.kt)]
            t_d = [((c[1][d] - c[0][d]) / 2).real for d in range(1, self.kt)]
            g_d = [c[2][d] for d in range(1, self.kt)]
            tau = ((c[0][0] + c[1][0]) / 2).real
            g1 = c[2][0] - (gmpy2.mpc(self.nu) if self.extended else self.nu)
            s = sum(p[d + 2] * s_d[d] for d in range(self.kt - 1))
            t = sum(p[d + 2] * t_d[d] for d in range(self.kt - 1))
            g = p[1] * g1 + sum(p[d + 2] * g_d[d] for d in range(self.kt - 1))
            return ResonanceLocalData(
                zeta=z, theta0=self.theta0, mu=e * tau, s=s, t=t, nu=self.nu, g=g, eps=e,
                s_by_degree=[0, 0] + s_d, t_by_degree=[0, 0] + t_d, g_by_degree=[0, g1] + g_d,
            )

    def G(self, xi, eps):
        """G at ξ = ±θ₀ + ζ with |ζ| ≤ w."""
        with self._ctx():
            xi = self._num(xi)
            if xi > 0:
                return self.sigma(xi - self.theta0, eps)[1]
            return self.sigma(xi + self.theta0, eps)[0]
