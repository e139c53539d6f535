"""The k̃-step gauge-transform recursion.

Two implementations share the same recursion:

* :func:`symbolic_gauge` runs it on exact expression trees
  (:mod:`apgauge.symbols`). It is exponential in the order and is used for
  low orders, structural checks and JSON dumps.
* :class:`GaugeEngine` runs it pointwise. At a base point ξ an operator of
  ε-degree d is stored as a map θ ↦ vector over base states s, holding
  â(ξ+2s, θ). Only states of lattice order ≤ c_d = r₀ + L_V(k̃ − d) are kept,
  which is exactly what the degree-k̃ output at s = 0 needs. Vectors are
  complex128 arrays of shape (points, states) in double precision and gmpy2
  object arrays otherwise.

Recursion (Ψ_l is homogeneous of degree l, Q_l := ad(H₀; Ψ_l)):

    B_1 = εV
    B_l = Σ_{j=1}^{l-1} 1/j! Σ_{k_1+…+k_j=l-1} ad(εV; Ψ_{k_1}, …, Ψ_{k_j})
    T_l = Σ_{j=2}^{l}   1/j! Σ_{k_1+…+k_j=l}   ad(Q_{k_1}; Ψ_{k_2}, …, Ψ_{k_j})
    Q_l = −(B_l + T_l)^♮,   ψ̂_l = i(b̂_l + t̂_l)χ̃
    ĥ₂(ξ; θ) = ξ²δ_{θ,0} + ŷ(ξ, θ)(1 − φ_θ(ξ)),   Y = Σ_{l≤k̃} (B_l + T_l)

with multi-commutators nested from the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
import numpy as np

from .errors import ApgaugeError, DomainError
from .lattice import Frequency, FrequencySet, add
from .potential import Potential
from .precision import DOUBLE, Precision, to_gmpy, working_precision
from .symbols import (
    CoefficientFn,
    CutoffFamily,
    GradedSymbol,
    ad,
    natural,
    solve_commutator,
    symbol_norm,
)


@lru_cache(maxsize=None)
def compositions(n: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """Ordered tuples of ``parts`` positive integers summing to n."""
    if parts == 1:
        return ((n,),) if n >= 1 else ()
    out = []
    for first in range(1, n - parts + 2):
        for rest in compositions(n - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def default_k_tilde(N: int) -> int:
    return 2 * N + 1


# --------------------------------------------------------------------------
# symbolic reference


@dataclass
class SymbolicGaugeRun:
    N: int
    k_tilde: int
    psi: dict[int, GradedSymbol]
    B: dict[int, GradedSymbol]
    T: dict[int, GradedSymbol]
    Y: GradedSymbol
    h2: GradedSymbol


def symbolic_gauge(potential: Potential, k_tilde: int) -> SymbolicGaugeRun:
    """Expression-tree recursion up to degree ``k_tilde`` (keep k̃ ≤ 4)."""
    d = potential.basis.dim
    V = GradedSymbol.multiplication(potential.coefficients, power=1, dim=d)
    psi: dict[int, GradedSymbol] = {}
    B: dict[int, GradedSymbol] = {1: V}
    T: dict[int, GradedSymbol] = {}
    Q: dict[int, GradedSymbol] = {}
    memo: dict = {}

    def nested(start_key, start: GradedSymbol, seq: tuple[int, ...]) -> GradedSymbol:
        key = (start_key, seq)
        if key in memo:
            return memo[key]
        val = start if not seq else ad(nested(start_key, start, seq[:-1]), psi[seq[-1]], max_degree=k_tilde)
        memo[key] = val
        return val

    for l in range(1, k_tilde + 1):
        if l >= 2:
            b = GradedSymbol(d)
            for j in range(1, l):
                for seq in compositions(l - 1, j):
                    b = b + nested("V", V, seq).scale(1.0 / math.factorial(j))
            t = GradedSymbol(d)
            for j in range(2, l + 1):
                for seq in compositions(l, j):
                    t = t + nested(("Q", seq[0]), Q[seq[0]], seq[1:]).scale(1.0 / math.factorial(j))
            B[l], T[l] = b, t
        bt = B[l] + T.get(l, GradedSymbol(d))
        Q[l] = -natural(bt)
        if l < k_tilde:
            psi[l] = solve_commutator(bt)
    Y = GradedSymbol(d)
    for l in range(1, k_tilde + 1):
        Y = Y + B[l] + T.get(l, GradedSymbol(d))
    h2 = GradedSymbol.laplacian(d) + Y - natural(Y)
    return SymbolicGaugeRun(N=(k_tilde - 1) // 2, k_tilde=k_tilde, psi=psi, B=B, T=T, Y=Y, h2=h2)


def extract_f(run: SymbolicGaugeRun, p: int, theta: Frequency) -> CoefficientFn:
    """ε^p-coefficient of ĥ₂(·; θ)."""
    theta = tuple(theta)
    if not any(theta) and p < 2:
        raise DomainError("f_p(ξ; 0) is defined for p ≥ 2")
    if p < 1 or p > run.k_tilde:
        raise DomainError(f"power {p} outside 1..{run.k_tilde}")
    return run.h2.coefficient(p, theta)


# --------------------------------------------------------------------------
# pointwise engine


class StateSpace:
    """Θ_R sorted by order, with prefix counts and shift maps."""

    def __init__(self, theta_set: FrequencySet, R: int):
        self.theta_set = theta_set
        self.R = R
        self.states = theta_set.shell(R, by_order=True)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.orders = np.array([theta_set.order(s) for s in self.states])
        self.count = [int(np.sum(self.orders <= c)) for c in range(R + 1)]
        self._shift: dict = {}

    def n(self, c: int) -> int:
        return self.count[c] if c >= 0 else 0

    def shift_index(self, theta: Frequency, m: int) -> np.ndarray:
        key = (theta, m)
        if key not in self._shift:
            try:
                self._shift[key] = np.array([self.index[add(s, theta)] for s in self.states[:m]], dtype=np.intp)
            except KeyError as exc:
                raise ApgaugeError(f"shift by {theta} leaves the state space") from exc
        return self._shift[key]


@dataclass
class GaugeRun:
    """Engine output at a batch of base points.

    ``h2[d][θ]`` has shape (points, n₀) and holds the ε^d coefficient of
    ĥ₂(ξ+2s; θ) for the n₀ base states s of order ≤ r₀ (s = 0 first).
    """

    xi: object
    k_tilde: int
    r0: int
    space: StateSpace
    h2: dict[int, dict[Frequency, np.ndarray]]
    psi: dict[int, dict[Frequency, np.ndarray]] = field(default_factory=dict)
    BT: dict[int, dict[Frequency, np.ndarray]] = field(default_factory=dict)
    cancellation: float = 0.0
    extended: bool = False
    nonflat: np.ndarray | None = None

    @property
    def N(self) -> int:
        return (self.k_tilde - 1) // 2

    def coefficients(self, theta: Frequency, s: Frequency | None = None):
        """List over degree 0..k̃ of arrays (points,) for ĥ₂(ξ+2s; θ)."""
        theta = tuple(theta)
        col = 0 if s is None else self.space.index[tuple(s)]
        out = []
        for d in range(self.k_tilde + 1):
            arr = self.h2.get(d, {}).get(theta)
            if arr is None:
                out.append(None)
            else:
                out.append(arr[:, col])
        return out

    def value(self, theta: Frequency, eps, s: Frequency | None = None):
        total = None
        for d, c in enumerate(self.coefficients(theta, s)):
            if c is None:
                continue
            term = c * (eps**d)
            total = term if total is None else total + term
        if total is None:
            n = len(self.xi)
            return np.zeros(n, dtype=object if self.extended else complex)
        return total

    def support(self) -> dict[int, set[Frequency]]:
        return {d: set(m) for d, m in self.h2.items()}


class GaugeEngine:
    """Pointwise gauge recursion for one potential and cut-off family."""

    def __init__(
        self,
        potential: Potential,
        family: CutoffFamily,
        N: int = 3,
        k_tilde: int | None = None,
        r0: int = 0,
        prec: Precision = DOUBLE,
    ):
        self.potential = potential
        self.family = family
        self.N = N
        self.k_tilde = k_tilde if k_tilde is not None else default_k_tilde(N)
        if self.k_tilde <= 2 * N and k_tilde is None:
            raise DomainError("k̃ must exceed 2N")
        self.r0 = r0
        self.prec = prec
        self.theta_set = potential.frequency_set
        self.step = max([self.theta_set.order(t) for t in potential.support] + [1])
        self.R = r0 + self.step * self.k_tilde
        self.space = StateSpace(self.theta_set, self.R)
        self.basis = potential.basis
        self._setup_values()

    # windows -----------------------------------------------------------
    def cols(self, d: int) -> int:
        return self.space.n(self.r0 + self.step * (self.k_tilde - d))

    def _setup_values(self):
        with working_precision(self.prec):
            if self.prec.extended:
                self.state_values = np.array([to_gmpy(self.basis.value(s, self.prec)) for s in self.space.states], dtype=object)
                self.I = gmpy2.mpc(0, 1)
                self.V = {t: gmpy2.mpc(v.real, v.imag) for t, v in self.potential.coefficients.items() if v != 0}
                self.width = gmpy2.mpfr(self.family.width)
            else:
                self.state_values = np.array([self.basis.value(s) for s in self.space.states])
                self.I = 1j
                self.V = {t: complex(v) for t, v in self.potential.coefficients.items() if v != 0}
                self.width = self.family.width
        self.theta_values = {}

    def _tv(self, theta):
        if theta not in self.theta_values:
            if self.prec.extended:
                self.theta_values[theta] = to_gmpy(self.basis.value(theta, self.prec))
            else:
                self.theta_values[theta] = self.basis.value(theta)
        return self.theta_values[theta]

    # cut-off tables -----------------------------------------------------
    def _tables(self, xi_col, theta, m):
        """(Φ_θ, X_θ) over the first m base states, shape (points, m)."""
        tv = self._tv(theta)
        pts = xi_col + 2 * self.state_values[None, :m]
        if not self.prec.extended:
            arg = (pts + tv) * (4.0 * abs(tv) / self.width)
            ph = self.family.mollifier.phi(arg)
            den = 4.0 * (pts + tv) * tv
            X = np.where(ph == 0.0, 0.0, ph / np.where(ph == 0.0, 1.0, den))
            return ph, X
        moll = self.family.mollifier
        scale = 4 * abs(tv) / self.width
        ph = np.frompyfunc(lambda a: moll.phi_gmpy((a + tv) * scale), 1, 1)(pts)
        X = np.frompyfunc(lambda f, a: f / (4 * (a + tv) * tv) if f != 0 else gmpy2.mpfr(0), 2, 1)(ph, pts)
        return ph, X

    # object algebra -----------------------------------------------------
    @staticmethod
    def _acc(target: dict, key, val):
        if key in target:
            target[key] = target[key] + val
        else:
            target[key] = val

    def _compose(self, A: dict, B: dict, m: int) -> dict:
        """(AB) restricted to the first m base states."""
        out: dict = {}
        sp = self.space
        for th, bv in B.items():
            bcol = bv[:, :m]
            for ph, av in A.items():
                idx = sp.shift_index(th, m)
                self._acc(out, add(th, ph), av[:, idx] * bcol)
        return out

    def _ad(self, A: dict, Bm: dict, m: int) -> dict:
        ab = self._compose(A, Bm, m)
        ba = self._compose(Bm, A, m)
        out = {}
        for k in set(ab) | set(ba):
            v = ab.get(k)
            w = ba.get(k)
            diff = v - w if (v is not None and w is not None) else (v if w is None else -w)
            out[k] = diff * self.I
        return out

    # main ---------------------------------------------------------------
    def run(self, xi, keep: bool = False) -> GaugeRun:
        """Run the recursion at the base points ``xi`` (sequence of reals)."""
        with working_precision(self.prec):
            return self._run(xi, keep)

    def _run(self, xi, keep):
        kt = self.k_tilde
        ext = self.prec.extended
        if ext:
            xs = np.array([to_gmpy(x) for x in xi], dtype=object)
        else:
            xs = np.asarray(xi, dtype=float)
        P = len(xs)
        xi_col = xs[:, None]
        m1 = self.cols(1)

        def const_vec(c, m):
            if ext:
                a = np.empty((P, m), dtype=object)
                a.fill(c)
                return a
            return np.full((P, m), c, dtype=complex)

        V = {t: const_vec(c, m1) for t, c in self.V.items()}
        tables: dict = {}

        def table(theta, m):
            got = tables.get(theta)
            if got is None:
                dmin = max(1, -(-self.theta_set.order(theta) // self.step))
                got = self._tables(xi_col, theta, max(m, self.cols(dmin)))
                tables[theta] = got
            return got[0][:, :m], got[1][:, :m]

        def natural_of(obj, m):
            out = {}
            for t, v in obj.items():
                if any(t):
                    out[t] = v[:, :m] * table(t, m)[0]
            return out

        def solve_of(obj, m):
            out = {}
            for t, v in obj.items():
                if any(t):
                    out[t] = v[:, :m] * table(t, m)[1] * self.I
            return out

        psi: dict[int, dict] = {}
        BT: dict[int, dict] = {}
        Q: dict[int, dict] = {}
        memo: dict = {}

        def deg_of(start_deg, seq):
            return start_deg + sum(seq)

        def nested(start_key, start_deg, start_obj, seq):
            key = (start_key, seq)
            if key in memo:
                return memo[key]
            if not seq:
                val = start_obj
            else:
                prev = nested(start_key, start_deg, start_obj, seq[:-1])
                d = deg_of(start_deg, seq)
                val = self._ad(prev, psi[seq[-1]], self.cols(d))
            memo[key] = val
            return val

        residual = 0.0
        for l in range(1, kt + 1):
            m = self.cols(l)
            if l == 1:
                bt = {t: v for t, v in V.items()}
            else:
                bt = {}
                for j in range(1, l):
                    w = 1.0 / math.factorial(j) if not ext else gmpy2.mpq(1, math.factorial(j))
                    for seq in compositions(l - 1, j):
                        for t, v in nested("V", 1, V, seq).items():
                            self._acc(bt, t, v[:, :m] * w)
                for j in range(2, l + 1):
                    w = 1.0 / math.factorial(j) if not ext else gmpy2.mpq(1, math.factorial(j))
                    for seq in compositions(l, j):
                        k1 = seq[0]
                        for t, v in nested(("Q", k1), k1, Q[k1], seq[1:]).items():
                            self._acc(bt, t, v[:, :m] * w)
            BT[l] = bt
            nat = natural_of(bt, m)
            Q[l] = {t: -v for t, v in nat.items()}
            if l < kt:
                psi[l] = solve_of(bt, m)
                if not ext:
                    residual = max(residual, self._cancellation(xi_col, psi[l], nat, m))

        n0 = self.space.n(self.r0)
        h2: dict[int, dict] = {}
        zero = self.theta_set.zero
        sq = (xi_col + 2 * self.state_values[None, :n0]) ** 2
        h2[0] = {zero: sq.astype(object) if ext else sq.astype(complex)}
        for l in range(1, kt + 1):
            out = {}
            for t, v in BT[l].items():
                vv = v[:, :n0]
                if any(t):
                    vv = vv * (1 - table(t, n0)[0])
                out[t] = vv
            h2[l] = out
        run = GaugeRun(
            xi=xs,
            k_tilde=kt,
            r0=self.r0,
            space=self.space,
            h2=h2,
            cancellation=residual,
            extended=ext,
        )
        if keep:
            run.psi, run.BT = psi, BT
        return run

    def _cancellation(self, xi_col, psi_l, nat, m) -> float:
        """max |ad(H₀; Ψ_l) + (B_l + T_l)^♮| / max |(B_l + T_l)^♮|."""
        num = 0.0
        den = 0.0
        pts = xi_col + 2 * self.state_values[None, :m]
        for t, pv in psi_l.items():
            tv = self._tv(t)
            adv = 1j * 4.0 * tv * (pts + tv) * pv
            nv = nat.get(t)
            if nv is None:
                continue
            num = max(num, float(np.max(np.abs(adv + nv))))
            den = max(den, float(np.max(np.abs(nv))))
        return num / den if den else 0.0

    # diagnostics -------------------------------------------------------
    def transition_hits(self, lo: float, hi: float) -> list[tuple[Frequency, Frequency]]:
        """(θ, s) pairs whose cut-off φ_θ(ξ+2s) is non-constant for some ξ in [lo, hi].

        Empty means every coefficient is a rational function of ξ on [lo, hi].
        """
        hits = []
        sv = np.asarray([float(v) for v in self.state_values])
        for t in self.theta_set.shell(self.step * self.k_tilde, nonzero=True):
            tv = self.basis.value(t)
            Z = self.theta_set.order(t)
            d = max(1, -(-Z // self.step))
            m = self.cols(d)
            for band in self.family.transition_bands(tv):
                b_lo = band[0] - 2 * sv[:m]
                b_hi = band[1] - 2 * sv[:m]
                bad = np.nonzero((b_lo < hi) & (lo < b_hi))[0]
                hits.extend((t, self.space.states[i]) for i in bad)
        return hits


def default_delta(theta_set: FrequencySet, N: int, factor: int = 9) -> float:
    """Largest dyadic δ keeping the wide (10×) zones over Θ'_{factor·N} disjoint, halved once."""
    members = theta_set.shell(factor * N, nonzero=True)
    vals = sorted(theta_set.value(t) for t in members)
    centers = [-v for v in vals][::-1]
    bound = math.inf
    for a, b in zip(centers, centers[1:]):
        # wide half-width is 10·δ/(4|θ|)
        need = 2.5 * (1.0 / abs(a) + 1.0 / abs(b))
        bound = min(bound, (b - a) / need)
    k = math.ceil(-math.log2(bound))
    delta = 2.0**-k
    while delta >= bound:
        delta /= 2
    return delta / 2


def norm_report(potential: Potential, family: CutoffFamily, eps: float, k_tilde: int = 3, per_unit: int = 256) -> dict:
    """Symbol norms of ψ_j, b_j + t_j and y_k̃ from the symbolic recursion at one ε."""
    run = symbolic_gauge(potential, k_tilde)
    basis = potential.basis

    def norm_of(sym: GradedSymbol) -> float:
        table: dict = {}
        for (p, t), f in sym.terms.items():
            table.setdefault(t, []).append((p, f))
        fns = {t: _scaled(parts, eps) for t, parts in table.items()}
        return symbol_norm(fns, basis, family, per_unit=per_unit)

    psi = {j: norm_of(s) for j, s in run.psi.items()}
    bt = {j: norm_of(run.B[j] + run.T.get(j, GradedSymbol(basis.dim))) for j in run.B}
    y = norm_of(run.Y)
    vnorm = sum(abs(v) for t, v in potential.coefficients.items())
    return {
        "eps": eps,
        "psi": psi,
        "b_plus_t": bt,
        "y": y,
        "y_over_eps_V": y / (eps * vnorm) if vnorm else 0.0,
        "bound_ok": y <= 2 * eps * vnorm + 1e-300,
    }


class _scaled:
    def __init__(self, parts, eps):
        self.parts, self.eps = parts, eps

    def evaluate(self, xi, basis, family):
        return sum(self.eps**p * f.evaluate(xi, basis, family) for p, f in self.parts)


def structure_check(run: SymbolicGaugeRun, theta_set: FrequencySet) -> list[str]:
    """Each ŷ term of degree p has p potential factors and p − 1 χ̃ factors, support in Θ_p."""
    problems = []
    for (p, t), f in run.Y.terms.items():
        if theta_set.order(t) > p:
            problems.append(f"degree {p} term at {t} outside Θ_{p}")
        for mono in f.terms:
            nchi = sum(1 for a in mono if a[0] == "chi")
            if nchi != p - 1:
                problems.append(f"degree {p} monomial at {t} has {nchi} χ̃ factors")
            if any(a[0] == "xi" for a in mono):
                problems.append(f"degree {p} monomial at {t} contains a bare ξ factor")
    return problems
