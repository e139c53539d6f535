"""Fitting power expansions to ε-ladders and checking them across windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import FitError

CONDITION_GUARD = 1e10


def geometric_ladder(eps_max: float, points: int = 12, ratio: float = 0.5) -> list[float]:
    return [eps_max * ratio**k for k in range(points)]


@dataclass
class ExpansionFit:
    exponents: list[float]
    coefficients: list[float]
    residual_norm: float
    ladder: list[tuple[float, float]]
    condition_number: float
    model_ok: bool = True
    half_ladder_change: list[float] = field(default_factory=list)

    def coefficient(self, exponent: float) -> float:
        for a, c in zip(self.exponents, self.coefficients):
            if abs(a - exponent) < 1e-12:
                return c
        raise KeyError(exponent)

    def predict(self, eps) -> np.ndarray:
        e = np.asarray(eps, dtype=float)
        return sum(c * e**a for a, c in zip(self.exponents, self.coefficients))

    def uncertainty(self, exponent: float) -> float:
        """Coefficient change under refitting on half the ladder (0 if unavailable)."""
        for a, u in zip(self.exponents, self.half_ladder_change):
            if abs(a - exponent) < 1e-12:
                return u
        return 0.0

    def to_json(self) -> dict:
        return {
            "exponents": self.exponents,
            "coefficients": self.coefficients,
            "residual_norm": self.residual_norm,
            "condition_number": self.condition_number,
            "model_ok": self.model_ok,
            "half_ladder_change": self.half_ladder_change,
            "ladder": [{"eps": e, "value": v} for e, v in self.ladder],
        }


def _solve(eps: np.ndarray, values: np.ndarray, exponents, guard: float):
    design = np.column_stack([eps**a for a in exponents])
    scale = np.linalg.norm(design, axis=0)
    if np.any(scale == 0):
        raise FitError("design matrix has a zero column")
    scaled = design / scale
    cond = float(np.linalg.cond(scaled))
    if not math.isfinite(cond) or cond > guard:
        raise FitError(f"design condition number {cond:.3g} exceeds guard {guard:.3g}")
    sol, *_ = np.linalg.lstsq(scaled, values, rcond=None)
    coeffs = sol / scale
    resid = values - design @ coeffs
    return coeffs, float(np.max(np.abs(resid))), cond


def fit_expansion(
    eps,
    values,
    exponents,
    guard: float = CONDITION_GUARD,
    residual_cap: float | None = None,
    rtol: float = 1e-9,
) -> ExpansionFit:
    """Least squares for values ≈ Σ_j c_j ε^{α_j}.

    ``model_ok`` is False when the residual exceeds ``residual_cap`` (default
    ``rtol`` times the largest |value|), which is how a wrong exponent set shows up.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    exponents = sorted(float(a) for a in exponents)
    if len(eps) != len(values):
        raise FitError("ladder and values differ in length")
    if len(eps) < len(exponents) + 4:
        raise FitError(f"need at least {len(exponents) + 4} samples for {len(exponents)} exponents")
    coeffs, resid, cond = _solve(eps, values, exponents, guard)
    cap = residual_cap if residual_cap is not None else rtol * max(float(np.max(np.abs(values))), 1e-300)
    change = []
    order = np.argsort(eps)
    half = order[: max(len(exponents) + 2, len(eps) // 2 + 1)]
    if len(half) >= len(exponents) + 1 and len(half) < len(eps):
        try:
            c_half, _, _ = _solve(eps[half], values[half], exponents, guard * 1e3)
            change = [float(abs(a - b)) for a, b in zip(coeffs, c_half)]
        except FitError:
            change = []
    return ExpansionFit(
        exponents=exponents,
        coefficients=[float(c) for c in coeffs],
        residual_norm=resid,
        ladder=[(float(e), float(v)) for e, v in zip(eps, values)],
        condition_number=cond,
        model_ok=resid <= cap,
        half_ladder_change=change,
    )


@dataclass
class PowerFit:
    """values ≈ c·ε^α·(1 + Σ corrections), α free."""

    exponent: float
    coefficient: float
    correction_coefficients: list[float]
    relative_residual: float

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "coefficient": self.coefficient,
            "correction_coefficients": self.correction_coefficients,
            "relative_residual": self.relative_residual,
        }


def fit_power(eps, values, corrections=(), bounds=(-1.0, 20.0)) -> PowerFit:
    """Free leading exponent by variable projection.

    The model is Σ_k c_k ε^{α + γ_k} with γ₀ = 0 and γ_k from ``corrections``;
    for each trial α the c_k are a weighted linear least-squares solution.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values == 0):
        raise FitError("zero sample in a power fit")
    gammas = [0.0] + [float(g) for g in corrections]
    if len(eps) < len(gammas) + 3:
        raise FitError("too few samples for the power fit")
    w = 1.0 / np.abs(values)

    def solve(alpha):
        design = np.column_stack([eps ** (alpha + g) for g in gammas]) * w[:, None]
        sol, *_ = np.linalg.lstsq(design, values * w, rcond=None)
        r = design @ sol - values * w
        return sol, float(np.sqrt(np.mean(r**2)))

    def dominant(alpha):
        # with corrections, α − γ_k is a spurious basin whose leading term is negligible
        sol, _ = solve(alpha)
        share = np.abs(sol[0] * eps**alpha) / np.abs(values)
        return float(np.median(share)) >= 0.5

    # coarse scan, then bounded refinement of every local minimum
    grid = np.linspace(bounds[0], bounds[1], 841)
    errs = np.array([solve(a)[1] for a in grid])
    n = len(grid)
    minima = [i for i in range(n) if errs[i] <= errs[max(i - 1, 0)] and errs[i] <= errs[min(i + 1, n - 1)]]
    found = []
    for i in sorted(minima, key=lambda i: errs[i])[:8]:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
        res = minimize_scalar(lambda a: solve(a)[1], bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        found.append((float(res.fun), float(res.x)))
    good = [f for f in found if dominant(f[1])] or found
    alpha = min(good)[1]
    sol, err = solve(alpha)
    return PowerFit(alpha, float(sol[0]), [float(s) for s in sol[1:]], err)


def loglog_slope(eps, values) -> tuple[float, float]:
    """Ordinary least-squares slope and intercept of log|value| against log ε."""
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.abs(np.asarray(values, dtype=float)))
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(slope), float(icpt)


@dataclass
class StitchReport:
    consistent: bool
    exponents: list[float]
    coefficients: list[float] | None
    certificate: list[dict]
    windows: list[int]

    def to_json(self) -> dict:
        return {
            "consistent": self.consistent,
            "exponents": self.exponents,
            "coefficients": self.coefficients,
            "certificate": self.certificate,
            "windows": self.windows,
        }


def stitch(fits: dict[int, ExpansionFit], M: int | None = None, factor: float = 10.0, floor: float = 0.0) -> StitchReport:
    """Cross-window consistency of the first M coefficients.

    Two windows agree on a coefficient when the values differ by no more than
    ``factor`` times the sum of their half-ladder uncertainties plus ``floor``.
    Agreement on every pair gives a global fit (coefficients from the latest
    window); otherwise each failing pair is listed.
    """
    if not fits:
        raise FitError("no windows to stitch")
    keys = sorted(fits)
    first = fits[keys[0]]
    exps = first.exponents[: M if M is not None else len(first.exponents)]
    for k in keys:
        if fits[k].exponents[: len(exps)] != exps:
            raise FitError("windows were fitted with different exponent sets")
    cert = []
    for a in exps:
        for i, n in enumerate(keys):
            for m in keys[i + 1:]:
                cn, cm = fits[n].coefficient(a), fits[m].coefficient(a)
                budget = factor * (fits[n].uncertainty(a) + fits[m].uncertainty(a)) + floor
                if abs(cn - cm) > budget:
                    cert.append({"exponent": a, "windows": [n, m], "values": [cn, cm],
                                 "difference": abs(cn - cm), "budget": budget})
    if cert:
        return StitchReport(False, exps, None, cert, keys)
    last = fits[keys[-1]]
    return StitchReport(True, exps, [last.coefficient(a) for a in exps], [], keys)
