import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apgauge.errors import DomainError, OracleUnavailable
from apgauge.lattice import Basis
from apgauge.oracle import (
    HillOracle,
    TruncatedFiber,
    hill_gap,
    hill_ids,
    jacobi_eigh,
    rayleigh_schrodinger_2,
    truncated_ids,
)
from apgauge.potential import Potential, single_harmonic
from apgauge.precision import Precision

QP = Basis(("1", "sqrt(2)"))


@st.composite
def hermitian(draw):
    n = draw(st.integers(1, 7))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


@given(hermitian())
def test_jacobi_matches_lapack(A):
    vals = np.array(jacobi_eigh(A), dtype=float)
    assert np.allclose(np.sort(vals), np.linalg.eigvalsh(A), atol=1e-10)


def test_jacobi_vectors_diagonalize():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(5, 5))
    A = A + A.T
    vals, vecs = jacobi_eigh(A, vectors=True)
    vecs = np.array(vecs, dtype=complex)
    assert np.allclose(A @ vecs, vecs * np.array(vals, dtype=float), atol=1e-9)


def test_hill_free_operator():
    V0 = Potential(Basis(("1",)), {})
    for lam in (0.3, 2.0, 7.5):
        assert hill_ids(V0, lam, 0.1) == pytest.approx(math.sqrt(lam) / math.pi, abs=1e-12)
    assert hill_ids(V0, -0.5, 0.1) == 0


def test_hill_requires_periodic():
    V = Potential(QP, {(1, 0): 0.002, (0, 1): 0.002})
    with pytest.raises(OracleUnavailable):
        HillOracle(V, 0.1)


def test_hill_extended_agrees_with_double():
    V = single_harmonic(0.005, 0.001)
    lo, hi = hill_gap(V, 1, 0.3)
    elo, ehi = hill_gap(V, 1, 0.3, Precision(40))
    assert float(elo) == pytest.approx(lo, abs=1e-13)
    assert float(ehi) == pytest.approx(hi, abs=1e-13)
    assert hill_ids(V, 2.0, 0.3) == pytest.approx(float(hill_ids(V, 2.0, 0.3, Precision(40))), abs=1e-13)


def test_hill_matches_truncated_cell():
    V = single_harmonic(0.005, 0.002)
    for lam in (0.5, 2.0):
        a = hill_ids(V, lam, 1.0)
        b = truncated_ids(V, lam, 1.0, method="cell")
        assert abs(a - b) <= 1e-6


def test_truncated_diagonal_converges_in_cutoff():
    V = Potential(QP, {(1, 0): 0.003, (0, 1): 0.002, (0, 0): 0.001})
    a = truncated_ids(V, 2.5, 0.5, M=4, method="branch")
    b = truncated_ids(V, 2.5, 0.5, M=6, method="branch")
    assert abs(a - b) < 1e-12
    assert a == pytest.approx(math.sqrt(2.5 - 0.5 * 0.001) / math.pi, abs=1e-6)
    with pytest.raises(DomainError):
        truncated_ids(V, 2.5, 0.5, M=4, method="diagonal", prec=Precision(30))
    ext = truncated_ids(V, 2.5, 0.5, M=4, method="branch", prec=Precision(30))
    assert float(ext) == pytest.approx(a, abs=1e-14)


@settings(max_examples=20)
@given(st.floats(0.05, 0.95))
def test_rayleigh_schrodinger_second_order(xi):
    V = Potential(QP, {(1, 0): 0.003, (0, 1): 0.002 + 0.001j})
    fib = TruncatedFiber(V, 2)
    i0 = fib.index[(0, 0)]
    rs = rayleigh_schrodinger_2(V, xi)
    eps = 1e-3
    H = fib.matrix(xi, eps)
    w, v = np.linalg.eigh(H)
    k = int(np.argmax(np.abs(v[i0])))
    assert (w[k] - xi**2) / eps**2 == pytest.approx(rs, rel=1e-2, abs=1e-9)
