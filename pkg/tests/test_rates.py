import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minimax_subgrad import (DomainError, ErrorBound, InvalidBoundError, delta_asymptote,
                             delta_schedule, n_epsilon, power_sequence)
from minimax_subgrad.rates import schedule_csv

SQRT_HALF = 1 / math.sqrt(2)


def _admissible(c, theta, L, D):
    # shrink c until h is L-Lipschitz on [0, D]
    cmax = L * theta / D ** ((1 - theta) / theta)
    return min(c, cmax)


admissible_holder = st.tuples(st.floats(0.05, 1.0), st.floats(0.2, 1.0), st.floats(0.5, 4.0),
                              st.floats(0.2, 3.0)).map(
    lambda p: (_admissible(p[0] * p[2], p[1], p[2], p[3]), p[1], p[2], p[3]))


def test_sharp_schedule_halves_squares():
    s = delta_schedule(ErrorBound.holder(SQRT_HALF, 1.0, 1.0), 1.0, 1.0, 30)
    np.testing.assert_allclose(s.deltas, 2.0 ** (-np.arange(31) / 2), rtol=1e-14)
    assert s.deltas[1] == pytest.approx(0.7071068, abs=1e-7)


def test_quadratic_first_step():
    s = delta_schedule(ErrorBound.holder(0.5, 0.5, 1.0), 1.0, 1.0, 1)
    assert s.deltas[1] == pytest.approx(math.sqrt(0.75), rel=1e-15)
    assert s.deltas[1] == pytest.approx(0.8660254, abs=1e-7)


def test_n_zero_is_D():
    for D in (0.5, 1.0, 7.0):
        s = delta_schedule(ErrorBound.holder(0.1, 0.5, D), 1.0, D, 0)
        assert s.deltas.tolist() == [D]


def test_non_lipschitz_bound_raises():
    with pytest.raises(InvalidBoundError):
        delta_schedule(ErrorBound.holder(1.01, 1.0, 1.0), 1.0, 1.0, 3)


def test_exact_collapse_is_clamped():
    s = delta_schedule(ErrorBound.holder(1.0, 1.0, 1.0), 1.0, 1.0, 5)
    assert s.deltas.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert np.all(s.h_deltas[1:] == 0)


def test_schedule_is_read_only():
    s = delta_schedule(ErrorBound.holder(0.5, 1.0, 1.0), 1.0, 1.0, 3)
    with pytest.raises(ValueError):
        s.deltas[0] = 2.0


def test_stepsizes_match_geometric_form():
    mu, L, D = 0.6, 1.3, 2.0
    s = delta_schedule(ErrorBound.holder(mu, 1.0, D), L, D, 15)
    n = np.arange(16)
    expected = (1 - mu**2 / L**2) ** (n / 2) * mu * D / L**2
    np.testing.assert_allclose(s.stepsizes(), expected, rtol=1e-13)


@settings(max_examples=60)
@given(admissible_holder)
def test_telescoping_and_monotone(p):
    c, theta, L, D = p
    s = delta_schedule(ErrorBound.holder(c, theta, D), L, D, 40)
    d = s.deltas
    hd2 = (s.h_deltas / L) ** 2
    assert np.all(np.diff(d) <= 0)
    assert np.all(d >= 0)
    for n in range(0, 41, 5):
        lhs = hd2[n:40].sum() + d[40] ** 2
        assert lhs == pytest.approx(d[n] ** 2, rel=1e-12, abs=1e-300)
    # strict decrease while positive
    pos = d[:-1] > 0
    assert np.all(d[1:][pos] < d[:-1][pos])


@settings(max_examples=40)
@given(st.floats(0.05, 0.99), st.floats(0.2, 0.95), st.floats(0.3, 3.0))
def test_substitution_equivalence(cfrac, theta, D):
    L = 1.0
    c = _admissible(cfrac, theta, L, D)
    s = delta_schedule(ErrorBound.holder(c, theta, D), L, D, 200)
    ps = power_sequence(D**2, c**2 / L**2, 1 / theta, 200)
    np.testing.assert_allclose(ps.values, s.deltas**2, rtol=1e-12)


def test_asymptote_examples():
    assert delta_asymptote(0.5, 0.5, 1.0, 100) == pytest.approx(0.2, rel=1e-14)
    assert delta_asymptote(0.5, 0.5, 1.0, 10000) == pytest.approx(0.02, rel=1e-14)
    assert delta_asymptote(SQRT_HALF, 1.0, 1.0, 4, D=1.0) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        delta_asymptote(0.5, 1.0, 1.0, 4)
    with pytest.raises(DomainError):
        delta_asymptote(0.5, 1.2, 1.0, 4)
    with pytest.raises(DomainError):
        delta_asymptote(0.5, 0.5, 1.0, 0)


def test_schedule_over_asymptote_tends_to_one():
    s = delta_schedule(ErrorBound.holder(0.5, 0.5, 1.0), 1.0, 1.0, 20000)
    r = [abs(s.deltas[n] / delta_asymptote(0.5, 0.5, 1.0, n) - 1) for n in (100, 1000, 20000)]
    assert r[0] > r[1] > r[2]
    assert r[2] < 0.005


def test_n_epsilon_trivial_and_exact():
    b = ErrorBound.holder(SQRT_HALF, 1.0, 1.0)
    assert n_epsilon(b, 1.0, 1.0, b(1.0)).n == 0
    assert n_epsilon(b, 1.0, 1.0, 5.0).n == 0
    s = delta_schedule(b, 1.0, 1.0, 5)
    res = n_epsilon(b, 1.0, 1.0, s.h_deltas[5] * (1 + 1e-12))
    assert res.n == 5 and res.reached
    with pytest.raises(DomainError):
        n_epsilon(b, 1.0, 1.0, 0.0)


def test_n_epsilon_closed_form_sharp():
    b = ErrorBound.holder(SQRT_HALF, 1.0, 1.0)
    res = n_epsilon(b, 1.0, 1.0, 1e-3)
    cf = 2 * math.log(SQRT_HALF / 1e-3) / math.log(2.0)
    assert res.closed_form == pytest.approx(cf, rel=1e-14)
    assert abs(res.n - cf) <= 1


def test_n_epsilon_cap():
    b = ErrorBound.holder(0.5, 0.5, 1.0)
    res = n_epsilon(b, 1.0, 1.0, 1e-9, cap=100)
    assert not res.reached and res.n is None
    assert res.closed_form > 100


def test_power_sequence_examples():
    ps = power_sequence(0.5, 1.0, 2.0, 3)
    assert ps.values.tolist() == [0.5, 0.25, 0.1875, 0.15234375]
    assert power_sequence(0.3, 0.2, 3.0, 0).values.tolist() == [0.3]
    with pytest.raises(DomainError):
        power_sequence(2.0, 1.0, 2.0, 3)     # 2 - 4 < 0
    with pytest.raises(DomainError):
        power_sequence(0.5, 1.0, 1.0, 3)


def test_power_sequence_asymptote():
    ps = power_sequence(0.5, 1.0, 2.0, 10000)
    n = np.array([1000, 5000, 10000])
    ratio = ps.values[n] / ps.asymptote(n)
    assert np.all(np.abs(ratio - 1) < 0.01)
    assert np.all(np.diff(np.abs(ratio - 1)) < 0)


def test_schedule_csv_columns():
    text = schedule_csv(delta_schedule(ErrorBound.holder(0.5, 0.5, 1.0), 1.0, 1.0, 3))
    rows = [r.split(",") for r in text.strip().splitlines()]
    assert rows[0] == ["n", "delta", "h_delta", "asymptote"]
    assert rows[1][3] == "" and float(rows[2][3]) == pytest.approx(2.0)
    assert float(rows[2][1]) == pytest.approx(math.sqrt(0.75))
    sharp = schedule_csv(delta_schedule(ErrorBound.holder(0.5, 1.0, 1.0), 1.0, 1.0, 2))
    assert all(line.endswith(",") for line in sharp.strip().splitlines()[1:])
