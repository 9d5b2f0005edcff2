import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motslab.profile_expr import ProfileDomainError, ProfileSyntaxError, parse


SLICE_F = "sqrt(r^5/((r-2)*(r^4-16)))"


def central_difference(e, r, h=1e-6):
    return (e(r + h) - e(r - h)) / (2 * h)


@pytest.mark.parametrize("text, r, expected", [
    ("r^2", 3.0, 9.0),
    ("-r^2", 2.0, -4.0),
    ("log(r)", 1.0, 0.0),
    ("exp(-r)", 0.0, 1.0),
    ("2^3^2", 0.0, 512.0),
    ("r - 1 - 1", 5.0, 3.0),
    ("8/2/2", 0.0, 2.0),
    ("abs(-r) + cos(0) + sin(0)", 2.0, 3.0),
    ("1.5e1*r", 2.0, 30.0),
])
def test_eval_examples(text, r, expected):
    assert parse(text)(r) == expected


def test_slice_factor_value():
    assert parse(SLICE_F)(3.0) == pytest.approx(math.sqrt(243 / 65), rel=1e-15)
    assert parse(SLICE_F)(3.0) == pytest.approx(1.93351016, rel=1e-8)


@pytest.mark.parametrize("text, r, fragment", [
    ("1/(r-2)", 2.0, "1/(r - 2)"),
    ("log(r-1)", 1.0, "log(r - 1)"),
    ("sqrt(1-r)", 2.0, "sqrt(1 - r)"),
    ("(r-3)^0.5", 2.0, "(r - 3)^0.5"),
    ("(r-2)^(-1)", 2.0, "(r - 2)^(-1)"),
])
def test_domain_errors_name_subexpression(text, r, fragment):
    with pytest.raises(ProfileDomainError) as info:
        parse(text)(r)
    assert info.value.subexpr == fragment


def test_domain_error_on_arrays():
    e = parse("1/(r-2)")
    np.testing.assert_allclose(e(np.array([3.0, 4.0])), [1.0, 0.5])
    with pytest.raises(ProfileDomainError):
        e(np.array([3.0, 2.0]))


def test_negative_base_integer_exponent_is_fine():
    assert parse("(r-3)^2")(1.0) == 4.0


@pytest.mark.parametrize("text, offset", [
    ("r +", 3),
    ("r + foo", 4),
    ("(r", 2),
    ("r $ 2", 2),
    ("r r", 2),
    ("é + r", 0),
    ("r + é", 4),
])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ProfileSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset


def test_unknown_identifier_message():
    with pytest.raises(ProfileSyntaxError, match="unknown identifier 'x'"):
        parse("x^2")


@pytest.mark.parametrize("text, r, expected", [
    ("log(r)", 2.0, 0.5),
    ("r^3", 2.0, 12.0),
    ("exp(2*r)", 0.0, 2.0),
    ("r^r", 1.0, 1.0),
])
def test_derivative_examples(text, r, expected):
    assert parse(text).differentiate()(r) == pytest.approx(expected, rel=1e-14)


def test_slice_factor_derivative_matches_central_difference():
    e = parse(SLICE_F)
    d = e.differentiate()
    cd = central_difference(e, 3.0)
    assert d(3.0) == pytest.approx(cd, rel=1e-6)


def test_printed_derivative_reparses():
    d = parse(SLICE_F).differentiate()
    again = parse(d.to_text())
    assert again(3.0) == d(3.0)


def test_mp_evaluation_near_pole():
    e = parse("1/sqrt(1-2/r)")
    with mpmath.workdps(40):
        value = e.eval_mp(mpmath.mpf(2) + mpmath.mpf("1e-20"))
        assert value == pytest.approx(float(mpmath.sqrt(mpmath.mpf("2e20"))), rel=1e-12)


def test_mp_and_double_agree():
    e = parse(SLICE_F)
    with mpmath.workdps(30):
        assert float(e.eval_mp(3)) == pytest.approx(e(3.0), rel=1e-15)


# ---------------------------------------------------------------------------
# Property tests over random expression trees that are defined on [1, 4].

_constants = st.floats(min_value=0.25, max_value=3.0, allow_nan=False).map(lambda x: repr(round(x, 3)))


def _positive(depth):
    leaves = st.one_of(st.just("r"), _constants)
    if depth == 0:
        return leaves
    sub = _positive(depth - 1)
    anything = _any(depth - 1)
    return st.one_of(
        leaves,
        st.tuples(sub, sub).map(lambda p: f"({p[0]} + {p[1]})"),
        st.tuples(sub, sub).map(lambda p: f"({p[0]})*({p[1]})"),
        st.tuples(sub, sub).map(lambda p: f"({p[0]})/({p[1]})"),
        sub.map(lambda p: f"sqrt({p})"),
        anything.map(lambda p: f"exp(sin({p}))"),
        st.tuples(sub, st.sampled_from(["2", "0.5", "-1.5", "3"])).map(lambda p: f"({p[0]})^{p[1]}"),
    )


def _any(depth):
    pos = _positive(depth)
    if depth == 0:
        return pos
    sub = _any(depth - 1)
    return st.one_of(
        pos,
        sub.map(lambda p: f"-({p})"),
        st.tuples(sub, sub).map(lambda p: f"({p[0]}) - ({p[1]})"),
        sub.map(lambda p: f"cos({p})"),
        _positive(depth - 1).map(lambda p: f"log({p})"),
    )


@settings(max_examples=150, deadline=None)
@given(_any(3), st.lists(st.floats(min_value=1.0, max_value=4.0), min_size=5, max_size=20))
def test_round_trip_is_bitwise(text, radii):
    e = parse(text)
    again = parse(e.to_text())
    assert again.root == e.root
    for r in radii:
        assert again(r) == e(r)


@settings(max_examples=150, deadline=None)
@given(_any(2), st.lists(st.floats(min_value=1.0, max_value=4.0), min_size=5, max_size=20))
def test_derivative_matches_central_difference(text, radii):
    e = parse(text)
    d = e.differentiate()
    for r in radii:
        cd = central_difference(e, r)
        assert abs(d(r) - cd) <= 1e-5 * (1 + abs(cd))
