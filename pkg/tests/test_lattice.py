import itertools
import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from apgauge.errors import ConfigError, ShellTooLarge
from apgauge.lattice import Basis, FrequencySet, add, l1, l1_ball_size, neg, parse_generator

QP = Basis(("1", "sqrt(2)"))


@given(st.integers(1, 3), st.integers(0, 6))
def test_ball_size_matches_enumeration(dim, L):
    count = sum(1 for c in itertools.product(range(-L, L + 1), repeat=dim) if l1(c) <= L)
    assert l1_ball_size(dim, L) == count


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=2))
def test_standard_order_is_l1(c):
    theta = FrequencySet.standard(QP)
    assert theta.order(tuple(c)) == l1(c)


def test_shell_is_closed_and_symmetric():
    theta = FrequencySet(QP, ((1, 0), (1, 1)))
    sh = set(theta.shell(3))
    assert all(neg(t) in sh for t in sh)
    one = set(theta.shell(1))
    two = set(theta.shell(2))
    assert {add(a, b) for a in one for b in one} == two


def test_order_nonstandard():
    theta = FrequencySet(QP, ((2, 0),))
    assert theta.order((4, 0)) == 2
    with pytest.raises(ValueError):
        theta.order((1, 0), max_order=5)


def test_parse_generator():
    with mpmath.workdps(40):
        assert parse_generator("sqrt(2)") == mpmath.sqrt(2)
        assert parse_generator("(1+sqrt(5))/2") == (1 + mpmath.sqrt(5)) / 2
        assert parse_generator("2*pi") == 2 * mpmath.pi
    for bad in ("__import__('os')", "exp(1)", "1+"):
        with pytest.raises(ConfigError):
            parse_generator(bad)


def test_independence_rejects_dependent_generators():
    with pytest.raises(ConfigError, match="dependent"):
        Basis(("sqrt(2)", "sqrt(8)")).check_independence(4)
    with pytest.raises(ConfigError):
        Basis(("1", "1")).check_independence(4)
    with pytest.raises(ConfigError, match="positive"):
        Basis(("-1", "sqrt(2)")).check_independence(4)
    QP.check_independence(8)


def test_quadratic_radicand():
    assert QP.quadratic_radicand() == 2
    assert Basis(("1", "sqrt(4)")).quadratic_radicand() is None
    assert Basis(("1", "sqrt(5)/2")).quadratic_radicand() is None


def test_shell_cap():
    theta = FrequencySet.standard(Basis(("1", "sqrt(2)", "sqrt(3)")), cap=100)
    with pytest.raises(ShellTooLarge):
        theta.shell(10)


def test_diophantine_margin_positive():
    theta = FrequencySet.standard(QP)
    c = theta.diophantine_constant(1.0, 8)
    assert c > 0
    # (1, 0) has value 1 at order 1, an upper bound for the constant
    assert c <= 1.0


def test_shell_csv_rows():
    text = FrequencySet.standard(QP).shell_csv(1)
    lines = text.strip().splitlines()
    assert lines[0] == "c0,c1,value,order"
    assert len(lines) == 1 + 5
    assert math.isclose(float(lines[1].split(",")[2]), QP.value(tuple(map(int, lines[1].split(",")[:2]))))
