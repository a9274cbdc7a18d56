import math

import numpy as np
import pytest

from lhk.curves import (
    Constant,
    Polynomial,
    Scaled,
    Sinusoid,
    Squared,
    Tabulated,
    as_curve,
    curve_from_json,
    parse_curve,
)
from lhk.errors import CurveRangeError, ParseError


def test_primitive_forms():
    assert Constant(2.5)(10.0) == 2.5
    assert Polynomial((1.0, 0.0, 1.0))(2.0) == 5.0
    assert Sinusoid(2.0, 3.0, 0.5, 1.0)(0.7) == pytest.approx(2 * math.cos(2.1 + 0.5) + 1)


def test_derived_forms():
    om = parse_curve("1+0.3*cos")
    assert Squared(om)(1.2) == pytest.approx((1 + 0.3 * math.cos(1.2)) ** 2)
    assert Scaled(om, -2.0)(0.0) == pytest.approx(-2.6)
    assert (om + 1)(0.0) == pytest.approx(2.3)
    assert (-om)(0.0) == pytest.approx(-1.3)


@pytest.mark.parametrize("text,t,expected", [
    ("cos", 0.4, math.cos(0.4)),
    ("sin", 0.4, math.sin(0.4)),
    ("1+0.3*cos", 2.0, 1 + 0.3 * math.cos(2.0)),
    ("2*cos(3*t) - sin(3*t)", 0.25, 2 * math.cos(0.75) - math.sin(0.75)),
    ("1+t^2", 1.5, 3.25),
    ("0.5", 9.0, 0.5),
    ("-t + 2 t^3", 2.0, 14.0),
    ("1e-3*sin", 1.0, 1e-3 * math.sin(1.0)),
])
def test_parse_curve(text, t, expected):
    assert parse_curve(text)(t) == pytest.approx(expected, rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("text", ["", "cos+t", "cos(2*t)+sin", "foo", "2**t", "t^"])
def test_parse_curve_errors(text):
    with pytest.raises(ParseError):
        parse_curve(text)


def test_sin_has_clean_phase():
    c = parse_curve("cos")
    assert c.phi == 0.0 and math.copysign(1.0, c.phi) == 1.0


def test_tabulated_interpolates_monotonically():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    vals = np.array([0.0, 1.0, 1.0, 5.0])
    c = Tabulated(times, vals)
    assert c(1.0) == 1.0
    fine = [c(t) for t in np.linspace(1.0, 2.0, 41)]
    assert max(fine) <= 1.0 + 1e-15 and min(fine) >= 1.0 - 1e-15
    assert c.covers(0.5, 3.0) and not c.covers(0.0, 3.5)


def test_tabulated_rejects_extrapolation():
    c = Tabulated([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(CurveRangeError):
        c(1.5)
    with pytest.raises(ValueError):
        Tabulated([0.0, 0.0], [1.0, 2.0])


@pytest.mark.parametrize("curve", [
    Constant(1.0),
    Polynomial((1.0, 2.0)),
    Sinusoid(1.0, 2.0, 0.1, 0.5),
    Tabulated([0.0, 1.0, 2.0], [1.0, 0.0, 3.0]),
    Squared(Sinusoid(0.3, 1.0, 0.0, 1.0)),
    Scaled(Constant(2.0), -1.0),
    Constant(1.0) + Sinusoid(1.0),
])
def test_json_round_trip(curve):
    back = curve_from_json(curve.to_json())
    assert back == curve
    assert back(0.5) == curve(0.5)


def test_json_errors():
    with pytest.raises(ParseError):
        curve_from_json({"form": "spline"})
    with pytest.raises(ParseError):
        curve_from_json({"form": "constant"})


def test_as_curve():
    assert as_curve(3) == Constant(3.0)
    assert as_curve("cos") == Sinusoid(1.0, 1.0, 0.0, 0.0)
    assert as_curve({"form": "constant", "c": 2}) == Constant(2.0)
