import numpy as np
import pytest

from apgauge.errors import DomainError
from apgauge.gauge import GaugeEngine, default_delta, extract_f, structure_check, symbolic_gauge
from apgauge.lattice import Basis
from apgauge.potential import Potential
from apgauge.precision import Precision
from apgauge.spectral import build_zones
from apgauge.symbols import CutoffFamily

QP = Basis(("1", "sqrt(2)"))
V = Potential(QP, {(1, 0): 0.003, (0, 1): 0.002 + 0.001j, (0, 0): 0.001})


@pytest.fixture(scope="module")
def family():
    return CutoffFamily(default_delta(V.frequency_set, 1))


@pytest.fixture(scope="module")
def symbolic():
    return symbolic_gauge(V, 3)


def test_engine_matches_symbolic_reference(family, symbolic):
    xs = np.linspace(-2.5, 2.5, 41)
    run = GaugeEngine(V, family, N=1, k_tilde=3).run(xs)
    for (p, t), f in symbolic.h2.terms.items():
        ref = f.evaluate(xs, QP, family)
        got = run.h2.get(p, {}).get(t)
        got = got[:, 0] if got is not None else 0
        assert np.max(np.abs(ref - got)) < 1e-17, (p, t)


def test_engine_extended_matches_double(family):
    xs = [0.3, -1.1, 1.7]
    a = GaugeEngine(V, family, N=1).run(np.array(xs))
    b = GaugeEngine(V, family, N=1, prec=Precision(40)).run(xs)
    for d, table in a.h2.items():
        for t, arr in table.items():
            ext = np.array(b.h2[d][t][:, 0], dtype=complex)
            assert np.allclose(arr[:, 0], ext, rtol=1e-12, atol=1e-30)


def test_first_order_and_cancellation(family):
    xs = np.linspace(-2, 2, 17)
    run = GaugeEngine(V, family, N=2).run(xs)
    assert run.cancellation <= 1e-12
    # degree one: τ on the diagonal, V̂_θ(1 − φ_θ) off it
    assert np.allclose(run.h2[1][(0, 0)][:, 0], 0.001)
    off = run.h2[1][(1, 0)][:, 0]
    assert np.allclose(off, 0.003 * (1 - family.phi(QP.value((1, 0)), xs)))


def test_structure_and_extract(symbolic):
    assert structure_check(symbolic, V.frequency_set) == []
    with pytest.raises(DomainError):
        extract_f(symbolic, 1, (0, 0))
    with pytest.raises(DomainError):
        extract_f(symbolic, 9, (1, 0))
    assert extract_f(symbolic, 1, (1, 0)).terms


@pytest.mark.parametrize("N", [1, 2, 3])
def test_default_delta_gives_disjoint_zones(N):
    theta = V.frequency_set
    fam = CutoffFamily(default_delta(theta, N))
    build_zones(theta.shell(9 * N, nonzero=True), QP, fam, check=True).check_disjoint(wide=True)


def test_invariant_report_on_complex_potential():
    from apgauge.pipeline import invariant_report

    rep = invariant_report(V, N=2)
    assert rep["ok"], rep
    assert rep["hermitian_defect"] <= 1e-12
