"""End-to-end recipes shared by the command line and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import GeometryError, OracleUnavailable
from .gaps import GapResult, gap_endpoints
from .gauge import GaugeEngine, default_delta, structure_check, symbolic_gauge
from .ids import CaseLabel, ResonantIds, classify
from .lattice import Frequency, neg
from .oracle import HillOracle, hill_ids, truncated_ids
from .potential import Potential
from .precision import DOUBLE, Precision, to_gmpy, working_precision
from .spectral import RegularModel, ResonantModel, build_zones
from .symbols import STANDARD, CutoffFamily, Mollifier

MODEL_WIDTH = 0.01


def make_engine(potential: Potential, N: int = 3, delta: float | None = None,
                mollifier: Mollifier = STANDARD, prec: Precision = DOUBLE, r0: int = 0) -> GaugeEngine:
    if delta is None:
        delta = default_delta(potential.frequency_set, N)
    return GaugeEngine(potential, CutoffFamily(delta, mollifier), N=N, r0=r0, prec=prec)


def harmonic_index(potential: Potential, theta: Frequency) -> int:
    """m with θ = m·g for the fundamental g of a periodic potential."""
    g = potential.fundamental
    if g is None:
        raise OracleUnavailable("the Hill oracle needs a periodic potential")
    i = next(k for k, c in enumerate(g) if c)
    return abs(theta[i] // g[i])


@dataclass
class GapRow:
    gauge: GapResult
    oracle: tuple | None

    def to_row(self) -> dict:
        row = {"eps": float(self.gauge.eps), "lower": float(self.gauge.lower),
               "upper": float(self.gauge.upper), "gap": float(self.gauge.gap)}
        if self.oracle is not None:
            lo, hi = self.oracle
            row.update(oracle_lower=float(lo), oracle_upper=float(hi),
                       oracle_gap=float(max(hi - lo, 0)),
                       endpoint_error=float(max(abs(lo - self.gauge.lower), abs(hi - self.gauge.upper))))
        return row


def gap_scan(potential: Potential, theta0: Frequency, ladder, N: int = 3, prec: Precision = Precision(80),
             delta: float | None = None, mollifier: Mollifier = STANDARD, K: int = 30,
             oracle: bool = True) -> list[GapRow]:
    """Gauge gap endpoints around θ₀² along ``ladder`` with Hill endpoints when V is periodic."""
    engine = make_engine(potential, N, delta, mollifier, prec)
    model = ResonantModel(engine, theta0, MODEL_WIDTH, K=K)
    m = harmonic_index(potential, theta0) if oracle and potential.is_periodic else None
    rows = []
    for e in ladder:
        g = gap_endpoints(model, e)
        o = HillOracle(potential, e, prec).gap(m) if m is not None else None
        rows.append(GapRow(g, o))
    return rows


class IdsPipeline:
    """N(λ; ε) from the gauge pipeline at one λ, with the matching oracle."""

    def __init__(self, potential: Potential, lam: float, N: int = 3, prec: Precision = Precision(60),
                 delta: float | None = None, mollifier: Mollifier = STANDARD, K: int = 24,
                 oracle_cutoff: int | None = None):
        self.potential = potential
        self.lam = lam
        self.prec = prec
        self.oracle_cutoff = oracle_cutoff
        probe = make_engine(potential, N, delta, mollifier)
        self.label: CaseLabel = classify(potential, lam, probe)
        self.engine = make_engine(potential, N, delta, mollifier, prec)
        name = self.label.label
        self._model = None
        if name.startswith("res_"):
            self._model = ResonantIds(ResonantModel(self.engine, self.label.theta0, MODEL_WIDTH, K=K))
        elif name.startswith("zero_") or name == "nonresonant":
            self._model = RegularModel(self.engine, math.sqrt(lam), MODEL_WIDTH, K=K)

    @property
    def base(self):
        """N(λ; 0) at the working precision."""
        with working_precision(self.prec):
            name = self.label.label
            if name.startswith("res_"):
                v = abs(self.potential.basis.value(self.label.theta0, self.prec)) / mpmath.pi
            elif name == "nonresonant":
                v = mpmath.sqrt(mpmath.mpf(self.lam)) / mpmath.pi
            else:
                v = mpmath.mpf(0)
            return to_gmpy(v) if self.prec.extended else float(v)

    def value(self, eps):
        name = self.label.label
        if name == "negative":
            return self._num(0)
        with working_precision(self.prec):
            if name.startswith("res_"):
                return self._model.value(eps).value
            m = self._model
            lo, hi = (0, m.w) if name.startswith("zero_") else (None, None)
            if name.startswith("zero_") and m.h(0, eps) >= self.lam:
                return self._num(0)
            pi = to_gmpy(mpmath.pi) if self.prec.extended else math.pi
            return m.root(self.lam, eps, lo=lo, hi=hi) / pi

    def difference(self, eps) -> float:
        """N(λ; ε) − N(λ; 0) rounded to double after the subtraction."""
        with working_precision(self.prec):
            return float(self.value(eps) - self.base)

    def oracle(self, eps):
        V = self.potential
        if V.is_periodic:
            return hill_ids(V, self.lam, eps, self.prec)
        if self.label.label != "nonresonant":
            raise OracleUnavailable("the truncated oracle is used at nonresonant λ only")
        return truncated_ids(V, self.lam, eps, self.oracle_cutoff, method="branch", prec=self.prec)

    def _num(self, x):
        return to_gmpy(x) if self.prec.extended else float(x)


# --------------------------------------------------------------------------
# invariant suite


def _zone_points(engine: GaugeEngine, frac: float = 0.1) -> np.ndarray:
    """Base points inside the zones of the order-one frequencies."""
    fam, basis = engine.family, engine.basis
    pts = []
    for t in engine.theta_set.shell(1, nonzero=True):
        v = basis.value(t)
        for s in (-1, 1):
            pts.append(-v + s * frac * fam.half_width(v))
    return np.asarray(pts)


def invariant_report(potential: Potential, N: int = 3, delta: float | None = None,
                     mollifier: Mollifier = STANDARD, samples: int = 24, seed: int = 0) -> dict:
    """Cancellation, Hermitian symmetry, support containment and zone disjointness."""
    engine = make_engine(potential, N, delta, mollifier, r0=1)
    rng = np.random.default_rng(seed)
    xs = np.concatenate([rng.uniform(-3.0, 3.0, samples), _zone_points(engine)])
    run = engine.run(xs)
    herm = 0.0
    real_diag = 0.0
    support_bad = []
    order = engine.theta_set.order
    index = run.space.index
    for d, table in run.h2.items():
        for t, arr in table.items():
            if order(t) > engine.step * d or order(t) > engine.step * engine.k_tilde:
                support_bad.append([d, list(t)])
            if not any(t):
                real_diag = max(real_diag, float(np.max(np.abs(arr[:, 0].imag))))
                continue
            mt = neg(t)
            if mt in table and index.get(t, arr.shape[1]) < table[mt].shape[1]:
                a, b = arr[:, 0], table[mt][:, index[t]]
                scale = max(float(np.max(np.abs(a))), 1e-300)
                herm = max(herm, float(np.max(np.abs(a - np.conj(b)))) / scale)
    zones_ok, zone_msg = True, ""
    try:
        freqs = engine.theta_set.shell(engine.step * engine.k_tilde, nonzero=True)
        build_zones(freqs, potential.basis, engine.family, check=True).check_disjoint(wide=True)
    except GeometryError as exc:
        zones_ok, zone_msg = False, str(exc)
    structure = structure_check(symbolic_gauge(potential, 3), engine.theta_set)
    return {
        "cancellation": run.cancellation,
        "cancellation_ok": run.cancellation <= 1e-12,
        "hermitian_defect": herm,
        "hermitian_ok": herm <= 1e-12,
        "diagonal_imag": real_diag,
        "diagonal_real_ok": real_diag <= 1e-14,
        "support_violations": support_bad,
        "support_ok": not support_bad,
        "zones_disjoint": zones_ok,
        "zones_message": zone_msg,
        "structure_problems": structure,
        "structure_ok": not structure,
        "ok": (run.cancellation <= 1e-12 and herm <= 1e-12 and real_diag <= 1e-14
               and not support_bad and zones_ok and not structure),
    }

