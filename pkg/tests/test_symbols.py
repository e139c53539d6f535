import numpy as np
import pytest
from hypothesis import given, strategies as st

from apgauge.lattice import Basis
from apgauge.symbols import (
    ALTERNATE,
    STANDARD,
    CoefficientFn,
    CutoffFamily,
    GradedSymbol,
    Mollifier,
    ad,
    compose,
    natural,
    solve_commutator,
    symbol_norm,
)
from apgauge.errors import ShellTooLarge

QP = Basis(("1", "sqrt(2)"))
FAM = CutoffFamily(2.0**-6)
XS = np.linspace(-3, 3, 301)


@pytest.mark.parametrize("m", [STANDARD, ALTERNATE])
@given(st.floats(-3, 3, allow_nan=False))
def test_mollifier_range_and_evenness(m, x):
    v = float(m.phi(x))
    assert 0.0 <= v <= 1.0
    assert v == float(m.phi(-x))
    assert abs(v - float(m.phi_gmpy(x))) < 1e-15


@pytest.mark.parametrize("m", [STANDARD, ALTERNATE])
def test_mollifier_flat_parts(m):
    assert np.all(m.phi(np.linspace(-0.25, 0.25, 51)) == 0.0)
    assert np.all(m.phi(np.r_[np.linspace(0.5, 2, 20), -np.linspace(0.5, 2, 20)]) == 1.0)
    t = np.linspace(0.26, 0.49, 40)
    assert np.all(np.diff(m.phi(t)) >= 0)


def test_mollifier_rejects_bad_support():
    with pytest.raises(ValueError):
        Mollifier("bad", inner=0.1, outer=0.4)
    with pytest.raises(ValueError):
        Mollifier("bad", inner=0.3, outer=0.6)


def test_zone_and_cutoff_geometry():
    v = QP.value((0, 1))
    lo, hi = FAM.zone(v)
    assert lo < -v < hi
    assert hi - lo == pytest.approx(2 * FAM.half_width(v))
    # φ_θ vanishes on the inner quarter of the zone and is 1 on its outer half
    hw = FAM.half_width(v)
    assert np.all(FAM.phi(v, np.linspace(-v - 0.24 * hw, -v + 0.24 * hw, 9)) == 0.0)
    assert np.all(FAM.phi(v, np.array([-v - 0.51 * hw, -v + 0.51 * hw, lo, hi])) == 1.0)
    (a, b), (c, d) = FAM.transition_bands(v)
    assert a < b < -v < c < d
    chi = FAM.chi(v, XS)
    ref = FAM.phi(v, XS) / (4 * (XS + v) * v)
    mask = FAM.phi(v, XS) > 0
    assert np.allclose(chi[mask], ref[mask])


def test_commutator_of_multiplications_vanishes():
    A = GradedSymbol.multiplication({(1, 0): 0.3, (-1, 0): 0.3})
    B = GradedSymbol.multiplication({(0, 1): 0.2j, (0, -1): -0.2j})
    assert not ad(A, B).terms


def test_composition_shifts_argument():
    H0 = GradedSymbol.laplacian(2)
    V = GradedSymbol.multiplication({(1, 0): 1.0})
    # (V H₀)ˆ(ξ, θ) = ĥ₀(ξ)·V̂_θ ; (H₀ V)ˆ(ξ, θ) = (ξ+2θ)²·V̂_θ
    t = QP.value((1, 0))
    vh = compose(V, H0).evaluate(XS, (1, 0), 1.0, QP, FAM)
    hv = compose(H0, V).evaluate(XS, (1, 0), 1.0, QP, FAM)
    assert np.allclose(vh, XS**2)
    assert np.allclose(hv, (XS + 2 * t) ** 2)


@given(st.complex_numbers(max_magnitude=1.0), st.sampled_from([(1, 0), (0, 1), (1, -1), (2, 1)]))
def test_solve_commutator_identity(c, theta):
    A = GradedSymbol.multiplication({theta: c})
    psi = solve_commutator(A)
    lhs = ad(GradedSymbol.laplacian(2), psi) + natural(A)
    for (p, t) in lhs.terms:
        assert np.max(np.abs(lhs.evaluate(XS, t, 1.0, QP, FAM))) < 1e-12 * max(1.0, abs(c))


def test_natural_kills_diagonal():
    A = GradedSymbol.multiplication({(0, 0): 1.0, (1, 0): 2.0})
    assert natural(A).support() == {(1, 0)}


def test_composition_cap():
    A = GradedSymbol.multiplication({(1, 0): 1.0, (0, 1): 1.0, (-1, 0): 1.0, (0, -1): 1.0})
    with pytest.raises(ShellTooLarge):
        compose(A, A, cap=3)


def test_symbol_norm_of_constants():
    table = {(1, 0): CoefficientFn.const(0.5), (0, 1): CoefficientFn.const(-0.25j)}
    assert symbol_norm(table, QP, FAM, per_unit=64) == pytest.approx(0.75)
