import json
import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from apgauge.almost import (
    build_schedule,
    check_smoothness,
    control_oscillation,
    control_schedule,
    decay_potential,
    demonstrate_oscillation,
    f2_tail_difference,
    find_super_resonance,
    minimal_smoothness,
    qmul,
    qpow,
    qvalue,
    quasi_periodic_control,
    run_window,
    small_unit,
)
from apgauge.errors import DomainError, SmoothnessViolation
from apgauge.potential import single_harmonic


@pytest.fixture(scope="module")
def schedule():
    return build_schedule(decay_potential(), 2, n_max=12)


@pytest.fixture(scope="module")
def candidate(schedule):
    return find_super_resonance(schedule, 2)


@pytest.mark.parametrize("N, P0, P", [(1, 1, 25), (2, 1, 49), (3, 1, 73), (2, 2, 97), (2, 0.5, 25)])
def test_minimal_smoothness(N, P0, P):
    assert minimal_smoothness(N, P0) == P
    check_smoothness(N, P0, P)
    with pytest.raises(SmoothnessViolation):
        check_smoothness(N, P0, P - 1)


def test_smoothness_error_names_field():
    with pytest.raises(SmoothnessViolation) as exc:
        build_schedule(decay_potential(P=60), 3)
    assert exc.value.path == "decay.P"
    assert "73" in str(exc.value)


def test_schedule_windows(schedule):
    assert all(w.ok for w in schedule.windows)
    Ls = [schedule.L(n) for n in range(13)]
    assert Ls == sorted(Ls)
    for n in range(12):
        assert float(schedule.width(n) / schedule.width(n + 1)) == pytest.approx(math.sqrt(2))
        assert float(schedule.eps(n) / schedule.eps(n + 1)) == 2
    for order in (40, 1000, 10**6):
        n = schedule.first_window_containing(order)
        assert schedule.shell_order(n) >= order
        assert n == 0 or schedule.shell_order(n - 1) < order
    json.dumps(schedule.to_json())


@given(st.integers(-10**40, 10**40), st.integers(-10**40, 10**40), st.sampled_from([2, 3, 5, 7]))
def test_qvalue_without_cancellation(a, b, d):
    with mpmath.workdps(60):
        got = qvalue((a, b), d)
    with mpmath.workdps(200):
        ref = mpmath.mpf(a) + mpmath.mpf(b) * mpmath.sqrt(d)
        if ref != 0:
            assert abs(got - ref) <= abs(ref) * mpmath.mpf(10) ** -55


@pytest.mark.parametrize("d", [2, 3, 5, 6, 7, 10, 13])
def test_small_unit(d):
    p, q = small_unit(d)
    assert abs(p * p - d * q * q) == 1
    with mpmath.workdps(40):
        s = qvalue((p, q), d)
        assert 0 < s < 1
        big = qpow((p, q), 500, d)
        assert qvalue(big, d) == pytest.approx(s**500, rel=1e-30)
    assert qmul((p, q), (p, -q), d) in {(1, 0), (-1, 0)}


def test_candidate_depth_two(candidate):
    assert candidate.complete and candidate.valid
    assert [s.j for s in candidate.stages] == [1, 2]
    # successive windows move deeper and zone offsets stay inside their δ-range
    assert candidate.stages[1].k > candidate.stages[0].k_tilde
    for s in candidate.stages:
        assert 0 < s.offset_lo < s.offset_hi < s.delta
    doc = json.loads(json.dumps(candidate.to_json()))
    assert doc["xi_star_decimal"].startswith(("0.", "-0."))
    assert doc["valid"]


def test_oscillation_and_control(schedule, candidate):
    rep = demonstrate_oscillation(schedule, candidate)
    assert rep.oscillates
    assert all(j["ok"] and j["difference"] >= j["predicted"] for j in rep.jumps)
    assert not rep.stitch.consistent
    assert control_oscillation(schedule, candidate).stitch.consistent


def test_construction_domain():
    with pytest.raises(DomainError):
        find_super_resonance(build_schedule(decay_potential(tau=0.001), 2, n_max=4), 1)
    with pytest.raises(DomainError):
        find_super_resonance(build_schedule(single_harmonic(0.003), 2, n_max=2), 1)
    with pytest.raises(DomainError):
        find_super_resonance(build_schedule(decay_potential(("1", "(1+sqrt(5))/2")), 2, n_max=4), 1)


def test_run_window_truncates(schedule):
    w = run_window(schedule, 3)
    assert w.L == schedule.L(3)
    assert max(sum(map(abs, t)) for t in w.potential.support) == w.L
    assert w.engine.family.width == pytest.approx(float(schedule.width(3)))
    with pytest.raises(DomainError):
        run_window(schedule, -1)


def test_control_second_order_coefficient_is_window_independent(schedule):
    ctrl = control_schedule(schedule)
    assert ctrl.potential.support == quasi_periodic_control(schedule.potential).support
    xi = 0.3
    f2 = []
    for n in (0, 3, 6):
        run = run_window(ctrl, n).engine.run([xi])
        f2.append(complex(run.h2[2][(0, 0)][0, 0]))
    assert all(abs(f - f2[0]) <= 1e-15 * abs(f2[0]) for f in f2)
    assert abs(f2[0].imag) <= 1e-14 * abs(f2[0])
    # off the zones f₂(ξ; 0) = Σ_θ |V̂_θ|²/(ξ² − (ξ+2θ)²)
    V = ctrl.potential
    ref = sum(abs(v) ** 2 / (xi**2 - (xi + 2 * V.basis.value(t)) ** 2) for t, v in V.coefficients.items() if any(t))
    assert f2[0].real == pytest.approx(ref, rel=1e-12)


def test_f2_tail_difference_is_tiny_and_nested(schedule):
    a = f2_tail_difference(schedule, 0.3, 0, 3)
    b = f2_tail_difference(schedule, 0.3, 0, 6)
    c = f2_tail_difference(schedule, 0.3, 3, 6)
    assert a + c == pytest.approx(b, rel=1e-12)
    # orders above 30 carry |V̂|² below (0.003·30^-60)²
    assert abs(b) < 1e-170
