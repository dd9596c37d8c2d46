import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minimax_subgrad import DomainError, ErrorBound, InvalidBoundError, eval_h, validate_bound

SQRT_HALF = 1 / math.sqrt(2)

holder_params = st.tuples(
    st.floats(0.05, 3.0),          # c
    st.floats(0.2, 1.0),           # theta
    st.floats(0.1, 5.0),           # D
)


def test_eval_examples():
    # 1/sqrt(2) itself is only representable to one ulp
    assert eval_h(ErrorBound.holder(SQRT_HALF, 1.0, 1.0), 1.0) == pytest.approx(0.7071067811865476, abs=2e-16)
    assert eval_h(ErrorBound.holder(0.5, 0.5, 1.0), 0.5) == pytest.approx(0.125, rel=1e-15)
    for b in (ErrorBound.holder(0.5, 0.5, 1.0), ErrorBound.custom([[0, 0], [1, 0.5]])):
        assert eval_h(b, 0.0) == 0.0


def test_negative_argument_rejected():
    b = ErrorBound.holder(0.5, 0.5, 1.0)
    with pytest.raises(DomainError):
        eval_h(b, -1e-3)
    with pytest.raises(DomainError):
        b(np.array([0.1, -0.1]))


def test_extension_is_linear_with_left_slope():
    b = ErrorBound.holder(0.5, 0.5, 2.0)
    # h'(D) = c/theta * D^((1-theta)/theta) = 1 * 2 = 2
    assert b.extension_slope == pytest.approx(2.0)
    assert b(3.0) == pytest.approx(b(2.0) + 2.0)
    assert b.slope(5.0) == b.extension_slope


def test_custom_extension_uses_last_segment():
    b = ErrorBound.custom([[0, 0], [1, 0.2], [2, 1.0]])
    assert b.extension_slope == pytest.approx(0.8)
    assert b.lipschitz == pytest.approx(0.8)
    # matches the finite-difference left slope at D
    d = 1e-7 * b.D
    assert (b(b.D) - b(b.D - d)) / d == pytest.approx(b.extension_slope, rel=1e-6)
    assert b(3.0) == pytest.approx(1.8)


def test_custom_rejects_bad_knots():
    with pytest.raises(InvalidBoundError):
        ErrorBound.custom([[0, 0], [1, 0.5], [2, 0.6]])   # concave
    with pytest.raises(InvalidBoundError):
        ErrorBound.custom([[0, 0], [1, -0.1]])            # decreasing
    with pytest.raises(InvalidBoundError):
        ErrorBound.custom([[0, 0.1], [1, 0.5]])           # h(0) != 0
    with pytest.raises(DomainError):
        ErrorBound.custom([[0, 0], [0, 0.5]])


def test_holder_rejects_bad_parameters():
    for c, theta, D in [(0, 1, 1), (1, 0, 1), (1, 1.5, 1), (1, 0.5, 0)]:
        with pytest.raises(DomainError):
            ErrorBound.holder(c, theta, D)


def test_json_roundtrip():
    for b in (ErrorBound.holder(0.4, 2 / 3, 1.5), ErrorBound.custom([[0, 0], [0.5, 0.1], [1, 0.4]])):
        again = ErrorBound.from_json(json.dumps(b.to_dict()))
        assert again == b
    with pytest.raises(DomainError):
        ErrorBound.from_dict({"kind": "spline"})
    with pytest.raises(DomainError):
        ErrorBound.from_dict({"kind": "custom", "D": 2.0, "knots": [[0, 0], [1, 1]]})


def test_validate_examples():
    rep = validate_bound(ErrorBound.holder(0.5, 0.5, 1.0), 1.0, samples=101)
    assert rep.passed and rep.admissible
    rep = validate_bound(ErrorBound.holder(2.0, 1.0, 1.0), 1.0, samples=101)
    assert not rep.checks["lipschitz"] and not rep.passed
    b = ErrorBound.holder(SQRT_HALF, 1.0, 1.0)
    assert validate_bound(b, SQRT_HALF).passed
    assert validate_bound(b, 1.0).half_lipschitz
    assert not validate_bound(ErrorBound.holder(0.72, 1.0, 1.0), 1.0).half_lipschitz


def test_validate_needs_three_samples():
    with pytest.raises(DomainError):
        validate_bound(ErrorBound.holder(0.5, 1.0, 1.0), 1.0, samples=2)


def test_validate_reports_nonconvex_custom_without_raising():
    # bypass the load-time check to make sure validate_bound itself catches it
    b = ErrorBound("custom", 2.0, 0.5, 0.1, knots=((0.0, 0.0), (1.0, 0.5), (2.0, 0.6)))
    rep = validate_bound(b, 1.0, samples=41)
    assert not rep.checks["convex"]


def test_admissibility_closed_form():
    # D^((1-theta)/theta) <= L theta / c
    assert ErrorBound.holder(0.5, 0.5, 1.0).admissible(1.0)
    assert not ErrorBound.holder(0.5, 0.5, 1.1).admissible(1.0)
    assert ErrorBound.holder(0.4, 2 / 3, 1.0).admissible(0.6)


@given(holder_params)
def test_holder_lipschitz_is_max_slope(p):
    c, theta, D = p
    b = ErrorBound.holder(c, theta, D)
    ts = np.linspace(0, D, 501)
    sec = np.diff(b(ts)) / np.diff(ts)
    assert sec.max() <= b.lipschitz * (1 + 1e-9)
    assert b.lipschitz == pytest.approx(c / theta * D ** ((1 - theta) / theta), rel=1e-12)


@given(holder_params, st.floats(0, 1), st.floats(0, 1))
def test_monotone_convex_across_seam(p, u, v):
    c, theta, D = p
    b = ErrorBound.holder(c, theta, D)
    s, t = sorted((2 * D * u, 2 * D * v))
    hs, ht = b(s), b(t)
    scale = max(ht, 1.0)
    assert hs <= ht + 1e-12 * scale
    assert ht - hs <= b.lipschitz * (t - s) * (1 + 1e-9) + 1e-12 * scale
    assert b(0.5 * (s + t)) <= 0.5 * (hs + ht) + 1e-12 * scale


@given(st.floats(0.01, 10.0), st.floats(0.1, 10.0))
def test_sharp_bound_is_exactly_linear(c, D):
    b = ErrorBound.holder(c, 1.0, D)
    ts = np.linspace(0, D, 257)
    assert np.array_equal(b(ts), c * ts)


@given(holder_params, st.floats(1e-3, 2.0))
def test_slope_is_left_derivative(p, frac):
    c, theta, D = p
    b = ErrorBound.holder(c, theta, D)
    t = frac * D
    d = 1e-7 * t
    fd = (b(t) - b(t - d)) / d
    assert b.slope(t) == pytest.approx(fd, rel=1e-5, abs=1e-9)


@given(holder_params, st.floats(0.0, 3.0))
def test_legendre_gap_matches_definition(p, frac):
    c, theta, D = p
    b = ErrorBound.holder(c, theta, D)
    t = frac * D
    direct = t * b.slope(t) - b(t)
    assert b.legendre_gap(t) == pytest.approx(direct, rel=1e-9, abs=1e-12 * max(1, b(t)))


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=6), st.floats(0.2, 3.0))
def test_custom_from_sorted_slopes_is_valid(slopes, width):
    slopes = sorted(slopes)
    ts = np.linspace(0, width, len(slopes) + 1)
    hs = np.concatenate([[0.0], np.cumsum(np.array(slopes) * np.diff(ts))])
    b = ErrorBound.custom(np.column_stack([ts, hs]).tolist())
    L = max(b.lipschitz, 1e-3)
    assert validate_bound(b, L, samples=64).passed
    np.testing.assert_allclose(b(ts), hs, atol=1e-12)


def test_rescaled_matches_unit_change():
    b = ErrorBound.holder(0.3, 2 / 3, 3.0)
    L, D = 2.0, 3.0
    nb = b.rescaled(L, D)
    ts = np.linspace(0, 2, 11)
    np.testing.assert_allclose(nb(ts), b(ts * D) / (L * D), rtol=1e-12)
    cb = ErrorBound.custom([[0, 0], [1, 0.5], [2, 2]])
    ncb = cb.rescaled(2.0, 2.0)
    np.testing.assert_allclose(ncb(ts), cb(ts * 2.0) / 4.0, rtol=1e-12)
