"""Reference spectra that do not use the gauge transform.

* Hill discriminant: Taylor-series transfer matrix over one period of
  −y″ + εVy = λy for periodic V, with λ-derivatives from the variational
  equations. Gap edges solve Δ(λ) = ±2; the IDS comes from the rotation
  number (Dirichlet zero count plus arccos of Δ/2).
* Truncated fibers: the plane-wave matrix (ξ₀+2θ)²δ + εV̂_{θ−θ′} over
  θ ∈ Θ_M, used for eigenvalue counting (periodic cell integral and a
  diagonal-weight integral for quasi-periodic V), second-order
  perturbation sums and, for nonresonant λ, the eigenvalue branch
  continued from ξ₀².
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import gmpy2
import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, OracleUnavailable
from .lattice import Frequency, sub
from .potential import Potential
from .precision import DOUBLE, Precision, to_gmpy, working_precision

# --------------------------------------------------------------------------
# disk cache


def cache_dir() -> Path:
    return Path(os.environ.get("APGAUGE_CACHE", Path.home() / ".cache" / "apgauge"))


def _cache_key(kind: str, **parts) -> str:
    blob = json.dumps({"kind": kind, **parts}, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def cached(kind: str, compute, **parts):
    """Return the stored string result for ``parts`` or compute, store and return it."""
    if os.environ.get("APGAUGE_NO_CACHE"):
        return compute()
    d = cache_dir() / kind
    path = d / f"{_cache_key(kind, **parts)}.json"
    if path.exists():
        try:
            return json.loads(path.read_text())["value"]
        except (OSError, ValueError, KeyError):
            pass
    value = compute()
    try:
        d.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"parts": {k: str(v) for k, v in parts.items()}, "value": value}))
        tmp.replace(path)
    except OSError:
        pass
    return value


# --------------------------------------------------------------------------
# Hill discriminant


@dataclass
class Monodromy:
    lam: object
    delta: object  # Δ(λ) = y₁(T) + y₂′(T)
    d1: object  # Δ′(λ)
    d2: object  # Δ″(λ)
    dirichlet_zeros: int  # zeros of y₂ in (0, T)


class HillOracle:
    """Transfer matrix of −y″ + εV y = λ y over one period T = π/|ω|."""

    def __init__(self, potential: Potential, eps, prec: Precision = DOUBLE, steps: int | None = None):
        if not potential.is_periodic:
            raise OracleUnavailable("the Hill discriminant needs a periodic potential")
        self.potential = potential
        self.prec = prec
        self.ext = prec.extended
        self.harm = potential.harmonics()
        with working_precision(prec):
            g = potential.fundamental
            if self.ext:
                self.omega = abs(to_gmpy(potential.basis.value(g, prec)))
                self.pi = gmpy2.const_pi()
                self.eps = to_gmpy(eps)
            else:
                self.omega = abs(potential.basis.value(g))
                self.pi = math.pi
                self.eps = float(eps)
            self.T = self.pi / self.omega
        self._steps = steps
        self._tables: dict = {}

    def _num(self, x):
        return to_gmpy(x) if self.ext else float(x)

    def _plan(self, lam):
        """(steps, order) giving a truncation error far below the working precision."""
        vnorm = sum(abs(v) for v in self.harm.values())
        kmax = max([abs(k) for k in self.harm] + [1])
        rate = math.sqrt(abs(float(lam)) + float(self.eps) * vnorm + 1.0) + 2 * kmax * float(self.omega)
        T = float(self.T)
        steps = self._steps or max(16, int(math.ceil(4 * T * rate / math.pi)) * 2)
        h = T / steps
        digits = (self.prec.dps or 16) + 6
        order = 8
        term = 1.0
        while True:
            order += 1
            term *= rate * h / order
            if term < 10.0 ** (-digits) and order >= 12:
                break
        return steps, order

    def _table(self, steps, order):
        key = (steps, order)
        if key in self._tables:
            return self._tables[key]
        with working_precision(self.prec):
            h = self.T / steps
            rows = []
            for j in range(steps):
                x0 = h * j
                q = [self._num(0)] * order
                for k, v in self.harm.items():
                    if k == 0:
                        q[0] = q[0] + self.eps * self._num(v.real)
                        continue
                    if k < 0:
                        continue
                    w = 2 * k * self.omega
                    if self.ext:
                        vv = gmpy2.mpc(v.real, v.imag)
                        base = vv * gmpy2.mpc(gmpy2.cos(w * x0), gmpy2.sin(w * x0))
                        ik = gmpy2.mpc(0, w)
                    else:
                        base = v * complex(math.cos(w * x0), math.sin(w * x0))
                        ik = 1j * w
                    term = base
                    for m in range(order):
                        # V̂_k e^{iwx0}(iw)^m/m! + conjugate
                        q[m] = q[m] + self.eps * 2 * term.real
                        term = term * ik / (m + 1)
                rows.append(q)
            hp = [h**n for n in range(order + 1)]
        self._tables[key] = (rows, hp)
        return rows, hp

    def monodromy(self, lam, derivs: int = 2) -> Monodromy:
        """Δ and its first ``derivs`` λ-derivatives, plus the Dirichlet zero count."""
        with working_precision(self.prec):
            lam = self._num(lam)
            steps, order = self._plan(lam)
            rows, hp = self._table(steps, order)
            dtype = object if self.ext else float
            zero = self._num(0)
            ncol = 2 * (derivs + 1)
            # columns: y₁, y₂, ∂λy₁, ∂λy₂, ∂²λy₁, ∂²λy₂ ; rows: value, derivative
            state = np.empty((2, ncol), dtype=dtype)
            state.fill(zero)
            state[0, 0] = self._num(1)
            state[1, 1] = self._num(1)
            hv = np.array(hp, dtype=dtype)
            dhv = np.array([zero] + [n * hp[n - 1] for n in range(1, order + 1)], dtype=dtype)
            inv = [self._num(1) / ((n + 1) * (n + 2)) if self.ext else 1.0 / ((n + 1) * (n + 2)) for n in range(order - 1)]
            zeros = 0
            prev = zero
            for j in range(steps):
                q = np.array(rows[j], dtype=dtype)
                q[0] = q[0] - lam
                C = np.empty((order + 1, ncol), dtype=dtype)
                C.fill(zero)
                C[0], C[1] = state[0], state[1]
                for n in range(order - 1):
                    row = q[n::-1] @ C[: n + 1] if n else q[0] * C[0]
                    if derivs >= 1:
                        row[2:4] = row[2:4] - C[n, 0:2]
                    if derivs >= 2:
                        row[4:6] = row[4:6] - 2 * C[n, 2:4]
                    C[n + 2] = row * inv[n]
                state = np.stack([hv @ C, dhv @ C])
                y2 = state[0, 1]
                # a zero exactly at T is not interior and is not counted
                if (prev > 0 and y2 < 0) or (prev < 0 and y2 > 0):
                    zeros += 1
                if y2 != 0:
                    prev = y2
            delta = state[0, 0] + state[1, 1]
            d1 = state[0, 2] + state[1, 3] if derivs >= 1 else None
            d2 = state[0, 4] + state[1, 5] if derivs >= 2 else None
            return Monodromy(lam, delta, d1, d2, zeros)

    # gap edges ---------------------------------------------------------
    def _center(self, m: int, lam, rel):
        """argmax of (−1)^m Δ near (mω)² by Newton on the derivative."""
        sign = 1 if m % 2 == 0 else -1
        scale = abs(lam)
        for _ in range(60):
            r = self.monodromy(lam, 2)
            f1, f2 = sign * r.d1, sign * r.d2
            if f2 >= 0:
                raise ConvergenceError("discriminant is not concave near the gap centre")
            step = f1 / f2
            lam = lam - step
            if abs(step) <= rel * scale:
                r = self.monodromy(lam, 2)
                return lam, sign * r.delta - 2, sign * r.d2
        raise ConvergenceError("gap centre search did not converge")

    def gap(self, m: int):
        """Edges (lower, upper) of the m-th gap; equal when the gap is below resolution."""
        if m < 1:
            raise DomainError("gap index must be ≥ 1")
        sign = 1 if m % 2 == 0 else -1
        seed = None
        if self.ext:
            seed = HillOracle(self.potential, float(self.eps), DOUBLE, self._steps).gap(m)
        with working_precision(self.prec):
            rel = (gmpy2.mpfr(2) ** (-gmpy2.get_context().precision + 12)) if self.ext else 1e-14
            if seed is None:
                lam0 = (m * self.omega) ** 2 + self.eps * self._num(self.harm.get(0, 0).real)
            else:
                lam0 = self._num((seed[0] + seed[1]) / 2)
            lam, f, f2 = self._center(m, lam0, rel)
            if f <= 0:
                return lam, lam
            d = gmpy2.sqrt(2 * f / -f2) if self.ext else math.sqrt(2 * f / -f2)
            edges = []
            for k, side in enumerate((-1, 1)):
                inner, outer = lam, None
                if seed is not None and seed[1] > seed[0] and (seed[k] - float(lam)) * side > 0:
                    x = self._num(seed[k])
                else:
                    x = lam + side * d
                for _ in range(200):
                    r = self.monodromy(x, 1)
                    fx, f1x = sign * r.delta - 2, sign * r.d1
                    if fx > 0:
                        inner = x
                    else:
                        outer = x
                    nx = x - fx / f1x if f1x != 0 else x + side * d
                    if outer is not None and not (min(inner, outer) <= nx <= max(inner, outer)):
                        nx = (inner + outer) / 2
                    elif outer is None and (nx - lam) * side <= (inner - lam) * side:
                        nx = inner + side * d
                    # stop at the precision the discriminant supports near the root
                    if abs(nx - x) <= rel * abs(lam) + 16 * rel / abs(f1x):
                        x = nx
                        break
                    x = nx
                else:
                    raise ConvergenceError("gap edge search did not converge")
                edges.append(x)
            return edges[0], edges[1]

    # IDS ---------------------------------------------------------------
    def ids(self, lam):
        """N(λ) per unit length via the rotation number."""
        with working_precision(self.prec):
            r = self.monodromy(lam)
            z = r.dirichlet_zeros
            pi = self.pi
            half = r.delta / 2
            if abs(half) <= 1:
                n = z
                arg = half if n % 2 == 0 else -half
                kT = n * pi + (gmpy2.acos(arg) if self.ext else math.acos(float(arg)))
            else:
                parity = 0 if r.delta > 0 else 1
                j = z if z % 2 == parity else z + 1
                if j == 0:
                    return self._num(0)
                kT = j * pi
            return kT / (pi * self.T)


def hill_gap(potential: Potential, m: int, eps, prec: Precision = DOUBLE):
    return HillOracle(potential, eps, prec).gap(m)


def hill_ids(potential: Potential, lam, eps, prec: Precision = DOUBLE):
    return HillOracle(potential, eps, prec).ids(lam)


# --------------------------------------------------------------------------
# Hermitian eigensolver


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 60, vectors: bool = False):
    """Cyclic Jacobi for a Hermitian matrix (complex128 or gmpy2 object array).

    Sweeps until the off-diagonal Frobenius norm is ≤ tol·‖A‖_F. Returns sorted
    eigenvalues (and the matching columns of eigenvectors).
    """
    ext = A.dtype == object
    a = A.copy()
    n = a.shape[0]
    V = None
    if vectors:
        if ext:
            V = np.empty((n, n), dtype=object)
            V.fill(gmpy2.mpc(0))
            for i in range(n):
                V[i, i] = gmpy2.mpc(1)
        else:
            V = np.eye(n, dtype=complex)

    def absq(x):
        return (x.real * x.real + x.imag * x.imag)

    total = sum(absq(a[i, j]) for i in range(n) for j in range(n))
    if total == 0:
        w = [a[i, i].real for i in range(n)]
        order = sorted(range(n), key=lambda i: w[i])
        vals = [w[i] for i in order]
        return (vals, V[:, order]) if vectors else vals
    thresh = (tol**2) * total
    for _ in range(max_sweeps):
        off = sum(absq(a[i, j]) for i in range(n) for j in range(n) if i != j)
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag2 = absq(apq)
                if mag2 == 0:
                    continue
                mag = gmpy2.sqrt(mag2) if ext else math.sqrt(mag2)
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2 * mag)
                sgn = 1 if theta >= 0 else -1
                t = sgn / (abs(theta) + (gmpy2.sqrt(theta * theta + 1) if ext else math.sqrt(theta * theta + 1)))
                c = 1 / (gmpy2.sqrt(t * t + 1) if ext else math.sqrt(t * t + 1))
                s = t * c
                ph = apq / mag  # e^{iα}
                # rotation J acting on columns p, q:  [c, s·ph; −s·conj(ph), c]
                sp = s * ph
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - np.conj(sp) * colq if not ext else np.array([c * x - (sp.conjugate()) * y for x, y in zip(colp, colq)], dtype=object)
                a[:, q] = sp * colp + c * colq if not ext else np.array([sp * x + c * y for x, y in zip(colp, colq)], dtype=object)
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - sp * rowq if not ext else np.array([c * x - sp * y for x, y in zip(rowp, rowq)], dtype=object)
                a[q, :] = np.conj(sp) * rowp + c * rowq if not ext else np.array([sp.conjugate() * x + c * y for x, y in zip(rowp, rowq)], dtype=object)
                a[p, q] = 0 * apq
                a[q, p] = 0 * apq
                if vectors:
                    vp = V[:, p].copy()
                    vq = V[:, q].copy()
                    if ext:
                        V[:, p] = np.array([c * x - sp.conjugate() * y for x, y in zip(vp, vq)], dtype=object)
                        V[:, q] = np.array([sp * x + c * y for x, y in zip(vp, vq)], dtype=object)
                    else:
                        V[:, p] = c * vp - np.conj(sp) * vq
                        V[:, q] = sp * vp + c * vq
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    w = [a[i, i].real for i in range(n)]
    order = sorted(range(n), key=lambda i: w[i])
    vals = [w[i] for i in order]
    if vectors:
        return vals, V[:, order]
    return vals


# --------------------------------------------------------------------------
# truncated fibers


class TruncatedFiber:
    """Plane-wave matrix at ξ₀ over the states Θ_M of the potential's frequency set."""

    def __init__(self, potential: Potential, M: int):
        self.potential = potential
        self.M = M
        self.theta_set = potential.frequency_set
        self.states = self.theta_set.shell(M, by_order=True)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.values = np.array([potential.basis.value(s) for s in self.states])
        n = len(self.states)
        self.coupling = np.zeros((n, n), dtype=complex)
        for i, a in enumerate(self.states):
            for j, b in enumerate(self.states):
                if i != j:
                    self.coupling[i, j] = potential.coefficient(sub(a, b))
        self.tau = potential.tau

    def matrix(self, xi0: float, eps: float) -> np.ndarray:
        H = eps * self.coupling.copy()
        H[np.diag_indices_from(H)] = (xi0 + 2 * self.values) ** 2 + eps * self.tau
        return H

    def eigenvalues(self, xi0: float, eps: float, solver: str = "lapack") -> np.ndarray:
        H = self.matrix(xi0, eps)
        if solver == "jacobi":
            return np.array(jacobi_eigh(H), dtype=float)
        return np.linalg.eigvalsh(H)

    def boundary_margin(self, xi0: float, lam: float) -> float:
        """min over boundary states of (ξ₀+2θ)² − (λ + 1)."""
        orders = np.array([self.theta_set.order(s) for s in self.states])
        edge = self.values[orders == self.M]
        if edge.size == 0:
            return math.inf
        return float(np.min((xi0 + 2 * edge) ** 2)) - (lam + 1)


def rayleigh_schrodinger_2(potential: Potential, xi: float, M: int = 2) -> float:
    """Second-order correction Σ_k |W_{0k}|²/(D_0 − D_k) of the e_0 branch from the truncated matrix."""
    fib = TruncatedFiber(potential, M)
    D = (xi + 2 * fib.values) ** 2
    i0 = fib.index[fib.theta_set.zero]
    total = 0.0
    for k in range(len(fib.states)):
        if k != i0 and fib.coupling[i0, k] != 0:
            total += abs(fib.coupling[i0, k]) ** 2 / (D[i0] - D[k])
    return total


# --------------------------------------------------------------------------
# IDS of the truncated operator


def _cell_ids(potential: Potential, lam: float, eps: float, M: int, solver: str) -> float:
    """Periodic V: N = (2π)⁻¹·2∫₀^ω #{E_j(ξ₀) ≤ λ} dξ₀ with monotone bands on [0, ω]."""
    g = potential.fundamental
    omega = abs(potential.basis.value(g))
    sub_pot = Potential(potential.basis, potential.coefficients)
    fib = _PeriodicFiber(sub_pot, g, M)
    e0 = fib.eigenvalues(0.0, eps, solver)
    e1 = fib.eigenvalues(omega, eps, solver)
    total = 0.0
    for j in range(len(e0)):
        a, b = e0[j], e1[j]
        lo, hi = min(a, b), max(a, b)
        if lam >= hi:
            total += omega
        elif lam > lo:
            f = lambda x, j=j: fib.eigenvalues(x, eps, solver)[j] - lam  # noqa: E731
            r = brentq(f, 0.0, omega, xtol=1e-15, rtol=1e-15)
            total += r if a < b else omega - r
    return total / math.pi


class _PeriodicFiber:
    """Fiber over the integer multiples k·g, |k| ≤ M."""

    def __init__(self, potential: Potential, g: Frequency, M: int):
        self.harm = potential.harmonics()
        self.omega = potential.basis.value(g)
        self.ks = np.arange(-M, M + 1)
        n = len(self.ks)
        self.coupling = np.zeros((n, n), dtype=complex)
        for i, a in enumerate(self.ks):
            for j, b in enumerate(self.ks):
                if i != j:
                    self.coupling[i, j] = self.harm.get(int(a - b), 0)
        self.tau = potential.tau

    def eigenvalues(self, xi0, eps, solver):
        H = eps * self.coupling.copy()
        H[np.diag_indices_from(H)] = (xi0 + 2 * self.omega * self.ks) ** 2 + eps * self.tau
        if solver == "jacobi":
            return np.array(jacobi_eigh(H), dtype=float)
        return np.linalg.eigvalsh(H)


def _diagonal_ids(potential: Potential, lam: float, eps: float, M: int, solver: str, tol: float) -> float:
    """Quasi-periodic V: N = (2π)⁻¹∫ ⟨e₀, 1(H(ξ) ≤ λ) e₀⟩ dξ."""
    fib = TruncatedFiber(potential, M)
    i0 = fib.index[fib.theta_set.zero]

    def weight(xi):
        H = fib.matrix(xi, eps)
        w, U = np.linalg.eigh(H)
        return float(np.sum(np.abs(U[i0, w <= lam]) ** 2))

    R = math.sqrt(max(lam, 0.0) + 2 * eps * sum(abs(v) for v in potential.coefficients.values())) + 0.5
    val, err = quad(weight, 0.0, R, limit=2000, epsabs=tol, epsrel=tol)
    return 2 * val / (2 * math.pi)


def branch_eigenvalue(fib: TruncatedFiber, xi, eps, prec: Precision, max_iter: int = 400):
    """Eigenvalue continued from ξ² and its ξ-derivative (Brillouin–Wigner iteration).

    Solves E = D₀ + W₀·u with u = e₀ + (E − D)⁻¹ P W u restricted to the other
    states; dE/dξ follows from Hellmann–Feynman.
    """
    i0 = fib.index[fib.theta_set.zero]
    n = len(fib.states)
    with working_precision(prec):
        ext = prec.extended
        num = to_gmpy if ext else float
        xi = num(xi)
        e = num(eps)
        vals = fib._gvals if ext and hasattr(fib, "_gvals") else None
        if ext and vals is None:
            fib._gvals = [to_gmpy(fib.potential.basis.value(s, prec)) for s in fib.states]
            vals = fib._gvals
        elif not ext:
            vals = list(fib.values)
        nbrs = fib._nbrs if hasattr(fib, "_nbrs") else None
        if nbrs is None:
            nbrs = [[(j, fib.coupling[i, j]) for j in range(n) if fib.coupling[i, j] != 0] for i in range(n)]
            fib._nbrs = nbrs
        cvt = (lambda z: gmpy2.mpc(z.real, z.imag)) if ext else complex
        W = [[(j, cvt(c) * e) for j, c in row] for row in nbrs]
        tau = num(fib.tau)
        D = [(xi + 2 * v) ** 2 + e * tau for v in vals]
        u = [num(0)] * n
        u = [(x * 0 if not ext else gmpy2.mpc(0)) for x in u]
        u[i0] = gmpy2.mpc(1) if ext else 1 + 0j
        E = D[i0]
        tol = (gmpy2.mpfr(2) ** (-gmpy2.get_context().precision + 6)) if ext else 1e-15
        for _ in range(max_iter):
            Wu = [sum((c * u[j] for j, c in W[i]), gmpy2.mpc(0) if ext else 0j) for i in range(n)]
            newE = (D[i0] + Wu[i0]).real
            new_u = [Wu[i] / (newE - D[i]) if i != i0 else u[i0] for i in range(n)]
            # E is unchanged by the first pass (W₀₀ = 0), so u must settle too
            du = max(abs(a - b) for a, b in zip(new_u, u))
            done = abs(newE - E) <= tol * (1 + abs(E)) and du <= tol
            E, u = newE, new_u
            if done:
                break
        else:
            raise ConvergenceError("branch iteration did not converge")
        norm = sum(abs(x) ** 2 for x in u)
        dE = sum(abs(u[i]) ** 2 * 2 * (xi + 2 * vals[i]) for i in range(n)) / norm
        return E, dE


def branch_root(fib: TruncatedFiber, lam, eps, prec: Precision, guess: float):
    """ξ > 0 with E(ξ) = λ on the continued branch (Newton in ξ)."""
    with working_precision(prec):
        num = to_gmpy if prec.extended else float
        lam = num(lam)
        x = num(guess)
        tol = (gmpy2.mpfr(2) ** (-gmpy2.get_context().precision + 10)) if prec.extended else 1e-15
        for _ in range(100):
            E, dE = branch_eigenvalue(fib, x, eps, prec)
            step = (E - lam) / dE
            x = x - step
            if abs(step) <= tol * abs(x):
                return x
        raise ConvergenceError("branch root did not converge")


def truncated_ids(
    potential: Potential,
    lam: float,
    eps: float,
    M: int | None = None,
    method: str = "auto",
    prec: Precision = DOUBLE,
    solver: str = "lapack",
    tol: float = 1e-11,
):
    """IDS of the plane-wave truncation.

    ``method``: "cell" (periodic V), "diagonal" (any V, double precision) or
    "branch" (nonresonant λ, any precision: N = ξ*/π with E(ξ*) = λ).
    """
    if method == "auto":
        method = "cell" if potential.is_periodic else "diagonal"
    if M is None:
        M = default_cutoff(potential, lam)
    if method == "branch":
        fib = TruncatedFiber(potential, M)
        guess = math.sqrt(max(lam - eps * potential.tau, 1e-300))

        def compute():
            x = branch_root(fib, lam, eps, prec, guess)
            with working_precision(prec):
                return str(mpmath.mpf(x) / mpmath.pi) if prec.extended else float(x) / math.pi

        key = dict(pot=potential.digest(), lam=repr(lam), eps=repr(eps), M=M, dps=prec.dps)
        val = cached("branch_ids", compute, **key)
        if prec.extended:
            with working_precision(prec):
                return to_gmpy(mpmath.mpf(val))
        return float(val)
    if prec.extended:
        raise DomainError("only the branch method runs in extended precision")
    check = TruncatedFiber(potential, M) if method == "diagonal" else None
    if check is not None and check.boundary_margin(math.sqrt(max(lam, 0.0)), lam) < 0:
        raise DomainError(f"cut-off M={M} is too small for λ={lam}")
    key = dict(pot=potential.digest(), lam=repr(lam), eps=repr(eps), M=M, method=method, solver=solver, tol=tol)
    if method == "cell":
        return cached("truncated_ids", lambda: _cell_ids(potential, lam, eps, M, solver), **key)
    if method == "diagonal":
        return cached("truncated_ids", lambda: _diagonal_ids(potential, lam, eps, M, solver, tol), **key)
    raise DomainError(f"unknown truncated_ids method {method!r}")


def default_cutoff(potential: Potential, lam: float) -> int:
    """Smallest M keeping boundary states above λ + 1 near ξ₀ ∈ [0, √λ], at least 4."""
    theta = potential.frequency_set
    step_min = theta.min_abs_value(1) if potential.support else 1.0
    need = (math.sqrt(max(lam, 0.0) + 1) + math.sqrt(max(lam, 0.0))) / (2 * step_min)
    return max(4, int(math.ceil(need)) + 2)

