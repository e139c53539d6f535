import pytest

from apgauge.lattice import Basis
from apgauge.pipeline import gap_scan
from apgauge.potential import single_harmonic
from apgauge.precision import DOUBLE

A = 0.005


def mathieu_edges(q):
    # classical small-q series of the first Mathieu characteristic values
    a1 = 1 + q - q**2 / 8 - q**3 / 64 - q**4 / 1536
    b1 = 1 - q - q**2 / 8 + q**3 / 64 - q**4 / 1536
    return b1, a1


@pytest.mark.parametrize("eps", [0.2, 0.05])
def test_first_gap_matches_hill_and_series(eps):
    V = single_harmonic(A)
    (row,) = gap_scan(V, (1,), [eps], N=3, prec=DOUBLE)
    r = row.to_row()
    # double precision: band extrema carry roundoff of a few ulps of λ
    assert r["endpoint_error"] < 1e-11
    lo, hi = mathieu_edges(eps * A)
    assert r["lower"] == pytest.approx(lo, abs=1e-12)
    assert r["upper"] == pytest.approx(hi, abs=1e-12)
    assert r["gap"] == pytest.approx(2 * eps * A, rel=1e-3)


def test_gap_without_oracle_on_quasi_periodic():
    from apgauge.potential import Potential

    V = Potential(Basis(("1", "sqrt(2)")), {(1, 0): 0.004, (0, 1): 0.002})
    (row,) = gap_scan(V, (1, 0), [0.05], N=2, prec=DOUBLE, oracle=False)
    assert row.oracle is None
    assert row.to_row()["gap"] == pytest.approx(2 * 0.05 * 0.004, rel=1e-2)
