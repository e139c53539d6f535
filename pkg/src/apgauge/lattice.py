"""Frequency lattices.

A frequency is an integer coefficient vector over a fixed generator basis,
so sums and differences are exact. Real values are produced on demand at
the requested precision.
"""

from __future__ import annotations

import ast
import csv
import io
import itertools
import math
import operator
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import mpmath

from .errors import ConfigError, DiophantineViolation, ShellTooLarge
from .precision import DOUBLE, Precision, working_precision

Frequency = tuple[int, ...]

SHELL_CAP = 1_000_000

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def parse_generator(expr: str):
    """Evaluate a generator expression such as ``"sqrt(2)"`` or ``"1/3"`` with mpmath.

    Only numbers, ``+ - * / **``, ``sqrt`` and ``pi`` are accepted.
    """

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return mpmath.mpf(node.value) if isinstance(node.value, int) else mpmath.mpf(repr(node.value))
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1:
            return mpmath.sqrt(ev(node.args[0]))
        if isinstance(node, ast.Name) and node.id == "pi":
            return +mpmath.pi
        raise ConfigError(f"unsupported generator expression {expr!r}")

    try:
        tree = ast.parse(str(expr), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse generator {expr!r}") from exc
    return ev(tree)


@dataclass(frozen=True)
class Basis:
    """Generators ω_1..ω_d; a frequency c has value Σ c_i ω_i."""

    generators: tuple[str, ...]

    def __post_init__(self):
        if not self.generators:
            raise ConfigError("basis must contain at least one generator", "basis")
        object.__setattr__(self, "generators", tuple(str(g) for g in self.generators))
        for g in self.generators:
            parse_generator(g)

    @property
    def dim(self) -> int:
        return len(self.generators)

    @cached_property
    def float_values(self) -> tuple[float, ...]:
        with working_precision(Precision(30)):
            return tuple(float(parse_generator(g)) for g in self.generators)

    def values(self, prec: Precision = DOUBLE):
        if not prec.extended:
            return self.float_values
        with working_precision(prec):
            return tuple(parse_generator(g) for g in self.generators)

    def value(self, coeffs: Sequence[int], prec: Precision = DOUBLE):
        """Value of a frequency; float in double mode, mpf otherwise (at the current mp precision)."""
        if not prec.extended:
            return math.fsum(c * w for c, w in zip(coeffs, self.float_values))
        vals = self.values(prec)
        return mpmath.fsum(c * w for c, w in zip(coeffs, vals))

    def check_independence(self, depth: int, tol: float = 1e-12) -> None:
        """Reject nonzero integer combinations with |c_i| ≤ depth that evaluate to 0 within ``tol``."""
        vals = self.float_values
        for i, v in enumerate(vals):
            if not v > 0:
                raise ConfigError(f"generator {self.generators[i]!r} is not positive", f"basis[{i}]")
        if len(set(vals)) != len(vals):
            raise ConfigError("generators are not distinct", "basis")
        d = self.dim
        if d == 1:
            return
        # the last coordinate is solved for; the others range over the box
        last = vals[-1]
        for head in itertools.product(range(-depth, depth + 1), repeat=d - 1):
            if not any(head):
                continue
            partial = math.fsum(c * w for c, w in zip(head, vals))
            c_last = round(-partial / last)
            if abs(c_last) <= depth and abs(partial + c_last * last) < tol:
                raise ConfigError(
                    f"generators are rationally dependent: {head + (c_last,)} evaluates to 0", "basis"
                )

    def quadratic_radicand(self) -> int | None:
        """Return d if the basis is exactly (1, sqrt(d)) with d a non-square integer."""
        if self.dim != 2 or self.generators[0].strip() != "1":
            return None
        g = self.generators[1].replace(" ", "")
        if g.startswith("sqrt(") and g.endswith(")"):
            inner = g[5:-1]
            if inner.isdigit():
                d = int(inner)
                r = math.isqrt(d)
                if r * r != d:
                    return d
        return None


def add(a: Frequency, b: Frequency) -> Frequency:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Frequency, b: Frequency) -> Frequency:
    return tuple(x - y for x, y in zip(a, b))


def neg(a: Frequency) -> Frequency:
    return tuple(-x for x in a)


def l1(a: Frequency) -> int:
    return sum(abs(x) for x in a)


def l1_ball_size(dim: int, L: int) -> int:
    return sum((2**k) * math.comb(dim, k) * math.comb(L, k) for k in range(0, min(dim, L) + 1))


@dataclass
class FrequencySet:
    """Θ = {0, ±θ_1, ..., ±θ_l} and its iterated sumsets Θ_L.

    ``order(θ)`` is the smallest L with θ ∈ Θ_L (the order Z(θ) for θ ≠ 0).
    """

    basis: Basis
    elements: tuple[Frequency, ...]
    cap: int = SHELL_CAP
    _orders: dict = field(default_factory=dict, init=False, repr=False)
    _shell_level: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        d = self.basis.dim
        zero = (0,) * d
        elems = set()
        for e in self.elements:
            e = tuple(int(x) for x in e)
            if len(e) != d:
                raise ConfigError(f"frequency {e} has wrong length for basis of dimension {d}", "theta")
            elems.add(e)
            elems.add(neg(e))
        elems.add(zero)
        self.elements = tuple(sorted(elems, key=lambda t: (l1(t), self.basis.value(t), t)))
        self._orders = {zero: 0}
        self._shell_level = 0
        self._frontier = [zero]

    @classmethod
    def standard(cls, basis: Basis, cap: int = SHELL_CAP) -> "FrequencySet":
        """Θ = {0, ±e_i}: the order is the L1 norm of the coefficient vector."""
        d = basis.dim
        gens = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
        return cls(basis, tuple(gens), cap=cap)

    @property
    def zero(self) -> Frequency:
        return (0,) * self.basis.dim

    @cached_property
    def generators(self) -> tuple[Frequency, ...]:
        """Θ' (non-zero elements)."""
        return tuple(e for e in self.elements if any(e))

    @property
    def l(self) -> int:
        return len(self.generators) // 2

    @cached_property
    def is_standard(self) -> bool:
        d = self.basis.dim
        unit = {tuple(s if j == i else 0 for j in range(d)) for i in range(d) for s in (1, -1)}
        return set(self.generators) == unit

    def _grow_to(self, L: int):
        if L <= self._shell_level:
            return
        if self.is_standard:
            size = l1_ball_size(self.basis.dim, L)
            if size > self.cap:
                raise ShellTooLarge(f"shell Θ_{L} has {size} members, cap {self.cap}")
        while self._shell_level < L:
            new = []
            for f in self._frontier:
                for g in self.generators:
                    h = add(f, g)
                    if h not in self._orders:
                        self._orders[h] = self._shell_level + 1
                        new.append(h)
            self._shell_level += 1
            self._frontier = new
            if len(self._orders) > self.cap:
                raise ShellTooLarge(f"shell Θ_{self._shell_level} exceeds cap {self.cap}")

    def shell(self, L: int, nonzero: bool = False, by_order: bool = False) -> list[Frequency]:
        """Θ_L in lexicographic coefficient order (or by (order, value) with ``by_order``).

        ``nonzero`` drops 0, giving Θ'_L.
        """
        if L < 0:
            raise ValueError("L must be non-negative")
        self._grow_to(L)
        out = [f for f, z in self._orders.items() if z <= L and (not nonzero or z > 0)]
        if by_order:
            out.sort(key=lambda t: (self._orders[t], self.basis.value(t), t))
        else:
            out.sort()
        return out

    def order(self, theta: Frequency, max_order: int | None = None) -> int:
        theta = tuple(theta)
        if self.is_standard:
            return l1(theta)
        if theta in self._orders:
            return self._orders[theta]
        limit = max_order if max_order is not None else 4 * (l1(theta) + 1)
        while self._shell_level < limit:
            self._grow_to(self._shell_level + 1)
            if theta in self._orders:
                return self._orders[theta]
        raise ValueError(f"{theta} not reached within order {limit}")

    def value(self, theta: Frequency, prec: Precision = DOUBLE):
        return self.basis.value(theta, prec)

    def count_bound(self, L: int) -> int:
        """Upper bound (3L)^{3l} on #Θ_L."""
        return (3 * L) ** (3 * self.l)

    def min_abs_value(self, L: int) -> float:
        return min(abs(self.value(t)) for t in self.shell(L, nonzero=True))

    def diophantine_margin(self, P0: float, L: int, floor: float | None = None) -> "DiophantineReport":
        """Empirical c with |θ| ≥ c·Z(θ)^{-P0} on Θ'_L, and whether c clears ``floor``."""
        members = self.shell(L, nonzero=True)
        if not members:
            raise DiophantineViolation("Θ' is empty: degenerate frequency set")
        best, arg = math.inf, None
        for t in members:
            v = abs(self.value(t)) * self.order(t) ** P0
            if v < best:
                best, arg = v, t
        return DiophantineReport(P0=P0, L=L, constant=best, argmin=arg, floor=floor,
                                 ok=floor is None or best >= floor)

    def diophantine_constant(self, P0: float, L: int) -> float:
        return self.diophantine_margin(P0, L).constant

    def check_diophantine(self, P0: float, L: int, constant: float) -> float:
        rep = self.diophantine_margin(P0, L, constant)
        if not rep.ok:
            raise DiophantineViolation(f"min |θ|Z^P0 over Θ'_{L} is {rep.constant:.3e} < {constant:.3e} at {rep.argmin}")
        return rep.constant

    def shell_csv(self, L: int) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.basis.dim
        w.writerow([f"c{i}" for i in range(d)] + ["value", "order"])
        for t in self.shell(L):
            w.writerow(list(t) + [repr(self.value(t)), self.order(t)])
        return buf.getvalue()


@dataclass(frozen=True)
class DiophantineReport:
    P0: float
    L: int
    constant: float
    argmin: Frequency | None
    floor: float | None
    ok: bool


def frequency_set_for(basis: Basis, support: Iterable[Frequency]) -> FrequencySet:
    return FrequencySet(basis, tuple(tuple(s) for s in support if any(s)))
