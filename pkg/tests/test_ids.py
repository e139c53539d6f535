import math
from fractions import Fraction

import pytest

from apgauge.config import load_config
from apgauge.errors import DomainError
from apgauge.ids import (
    CaseLabel,
    classify,
    exponent_set,
    label_from_data,
    nonresonant_a1,
    resonant_frequency,
)
from apgauge.lattice import Basis
from apgauge.pipeline import IdsPipeline, make_engine
from apgauge.potential import Potential, single_harmonic
from apgauge.precision import DOUBLE

QP = Basis(("1", "sqrt(2)"))
W = Potential(QP, {(1, 0): 0.003, (0, 1): 0.002, (0, 0): 0.001})


@pytest.mark.parametrize("lam, expected", [
    (2, (0, 1)), (4, (2, 0)), (8, (0, 2)), (Fraction(9), (3, 0)),
    (3, None), (0.5, None), (-1, None), (0, None), ("18", (0, 3)),
])
def test_resonant_frequency_exact(lam, expected):
    assert resonant_frequency(W, lam) == expected


def test_resonant_frequency_search_path():
    # the golden basis is not of the form (1, sqrt d), so the shell is searched
    G = Potential(Basis(("1", "(1+sqrt(5))/2")), {(1, 0): 0.002, (0, 1): 0.002})
    assert resonant_frequency(G, "1") == (1, 0)
    assert resonant_frequency(G, Fraction(4)) == (2, 0)
    assert resonant_frequency(G, 2.0, max_order=6) is None


@pytest.mark.parametrize("tau, nu, s2, g2, label, k", [
    (0.002, 0.005, 1.0, 0.3, "res_inside_gap", None),
    (0.005, 0.002, 1.0, 0.3, "res_integer", 1),
    (0.0, 0.0, 1.0, 0.3, "res_integer", 2),
    (0.0, 0.0, 0.3, 1.0, "res_inside_gap", None),
    (0.003, 0.0, 1.0, 0.3, "res_integer", 1),
    (0.005, 0.005, 1.0, 0.3, "res_half_integer", 3),
    (0.005, 0.005, 0.3, 1.0, "res_inside_gap", None),
])
def test_label_from_data(tau, nu, s2, g2, label, k):
    lab = label_from_data(tau, nu, s2, g2, (1,))
    assert lab.label == label
    if k is not None:
        assert lab.k == k


def test_label_degenerate():
    lab = label_from_data(0.0, 0.0, 0.5, 0.5, (1,))
    assert lab.label == "res_half_integer" and lab.degenerate


@pytest.mark.parametrize("label, k, N, exps", [
    ("nonresonant", None, 3, [1.0, 2.0, 3.0]),
    ("res_integer", 2, 3, [2.0, 3.0, 4.0]),
    ("res_half_integer", 3, 2, [1.5, 2.5]),
    ("zero_tau_neg", None, 2, [0.5, 1.5]),
    ("zero_tau_zero", None, 2, [1.0, 2.0]),
    ("res_inside_gap", None, 3, []),
    ("zero_tau_pos", None, 3, []),
    ("negative", None, 3, []),
])
def test_exponent_set(label, k, N, exps):
    assert exponent_set(CaseLabel(label, k), N) == exps


def test_classify_simple_cases():
    assert classify(W, -1).label == "negative"
    assert classify(W, 0).label == "zero_tau_pos"
    assert classify(single_harmonic(0.002, -0.001), 0).label == "zero_tau_neg"
    assert classify(single_harmonic(0.002), 0).label == "zero_tau_zero"
    assert classify(W, 3).label == "nonresonant"
    with pytest.raises(DomainError):
        classify(W, 2)


def test_classify_mathieu_inside_gap():
    V = single_harmonic(0.005, 0.002)
    assert classify(V, 1, make_engine(V, 3)).label == "res_inside_gap"


@pytest.mark.parametrize("name, label", [
    ("nonresonant", "nonresonant"), ("inside_gap", "res_inside_gap"),
    ("integer_branch", "res_integer"), ("half_integer", "res_half_integer"),
])
def test_shipped_config_labels(name, label):
    cfg = load_config(name)
    assert classify(cfg.potential, cfg.lam, make_engine(cfg.potential, cfg.N, cfg.delta)).label == label


def test_nonresonant_first_order_coefficient():
    V = single_harmonic(0.003, 0.002)
    pipe = IdsPipeline(V, 2.0, N=3, prec=DOUBLE)
    eps = 1e-4
    slope = pipe.difference(eps) / eps
    assert slope == pytest.approx(nonresonant_a1(0.002, 2.0), rel=1e-3)
    assert nonresonant_a1(0.002, 2.0) == pytest.approx(-0.002 / (2 * math.pi * math.sqrt(2)))
