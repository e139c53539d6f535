import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apgauge.chebyshev import ChebModel, nodes
from apgauge.errors import DomainError
from apgauge.lattice import Basis
from apgauge.pipeline import make_engine
from apgauge.potential import Potential
from apgauge.spectral import RegularModel, SpectralMap, eig2, fiber_matrix, flat_width

QP = Basis(("1", "sqrt(2)"))
V = Potential(QP, {(1, 0): 0.003, (0, 1): 0.002, (0, 0): 0.002})

real = st.floats(-5, 5, allow_nan=False)


@given(real, real, st.complex_numbers(max_magnitude=5))
def test_eig2_matches_numpy(a, b, c):
    lo, hi = eig2(a, b, c)
    ref = np.linalg.eigvalsh(fiber_matrix(a, b, c))
    assert lo == pytest.approx(ref[0], abs=1e-12)
    assert hi == pytest.approx(ref[1], abs=1e-12)


def test_chebyshev_interpolates_smooth_vectors():
    xs = nodes(0.3, 0.2, 24)
    vals = np.array([[math.sin(x), math.exp(x)] for x in xs])
    m = ChebModel(vals, 0.3, 0.2)
    for x in np.linspace(0.1, 0.5, 11):
        assert np.allclose(m(x), [math.sin(x), math.exp(x)], atol=1e-14)
        assert np.allclose(m.derivative()(x), [math.cos(x), math.exp(x)], atol=1e-12)
    assert m.tail() < 1e-14


@pytest.fixture(scope="module")
def engine():
    return make_engine(V, N=2)


def test_flat_width_avoids_transitions(engine):
    c = -QP.value((1, 0))
    w = flat_width(engine, [c + 0.01], 0.05)
    assert w <= 0.05
    assert not engine.transition_hits(c + 0.01 - w, c + 0.01 + w)


def test_regular_model_root(engine):
    lam = 2.5
    m = RegularModel(engine, math.sqrt(lam), 0.01)
    for eps in (1e-3, 1e-2):
        x = m.root(lam, eps)
        assert m.h(x, eps) == pytest.approx(lam, abs=1e-13)
        # first order: ξ² + ετ = λ
        assert x == pytest.approx(math.sqrt(lam - eps * V.tau), abs=10 * eps**2 * 0.01)
    with pytest.raises(DomainError):
        m.root(lam + 1, 1e-3)


def test_spectral_map_off_zones_is_scalar(engine):
    smap = SpectralMap(engine)
    xs = np.array([0.1, 0.33, 2.2])
    G = smap.G(xs, 1e-3)
    assert np.allclose(G, smap.h0(xs, 1e-3))
    assert np.allclose(G, xs**2 + 1e-3 * V.tau, atol=1e-6)
