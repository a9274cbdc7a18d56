"""Time-dependent coefficient curves ``b_alpha(t)``.

Four primitive forms (constant, polynomial, sinusoid, tabulated) plus two
derived wrappers used by the catalog (squared and scaled curves). A tiny
text language covers the primitive forms, e.g. ``"1+0.3*cos"`` means
``1 + 0.3 cos t``.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CurveRangeError, ParseError


class Curve:
    interval = (-math.inf, math.inf)

    def __call__(self, t):
        lo, hi = self.interval
        if not (lo <= t <= hi):
            raise CurveRangeError(f"t={t} outside curve interval [{lo}, {hi}]")
        return self._eval(t)

    def covers(self, t0, t1):
        lo, hi = self.interval
        return lo <= min(t0, t1) and max(t0, t1) <= hi

    def __add__(self, other):
        return Sum(self, as_curve(other))

    def __neg__(self):
        return Scaled(self, -1.0)


@dataclass(frozen=True)
class Constant(Curve):
    c: float

    def _eval(self, t):
        return float(self.c)

    def to_json(self):
        return {"form": "constant", "c": self.c}


@dataclass(frozen=True)
class Polynomial(Curve):
    """``sum_k coeffs[k] t^k``."""

    coeffs: tuple

    def _eval(self, t):
        out = 0.0
        for c in reversed(self.coeffs):
            out = out * t + c
        return out

    def to_json(self):
        return {"form": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Sinusoid(Curve):
    """``a cos(omega t + phi) + c``."""

    a: float
    omega: float = 1.0
    phi: float = 0.0
    c: float = 0.0

    def _eval(self, t):
        return self.a * math.cos(self.omega * t + self.phi) + self.c

    def to_json(self):
        return {"form": "sinusoid", "a": self.a, "omega": self.omega, "phi": self.phi, "c": self.c}


class Tabulated(Curve):
    """Monotone piecewise-cubic interpolation of samples; no extrapolation."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise ValueError("tabulated curve needs matching 1-d times and values (>= 2 samples)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("tabulated times must be strictly increasing")
        self.times = times
        self.values = values
        self.interval = (float(times[0]), float(times[-1]))
        self._interp = PchipInterpolator(times, values, extrapolate=False)

    def _eval(self, t):
        return float(self._interp(t))

    def to_json(self):
        return {"form": "tabulated", "times": self.times.tolist(), "values": self.values.tolist()}

    def __eq__(self, other):
        return (
            isinstance(other, Tabulated)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class Squared(Curve):
    base: Curve

    @property
    def interval(self):
        return self.base.interval

    def _eval(self, t):
        return self.base(t) ** 2

    def to_json(self):
        return {"form": "squared", "of": self.base.to_json()}


@dataclass(frozen=True)
class Scaled(Curve):
    base: Curve
    factor: float

    @property
    def interval(self):
        return self.base.interval

    def _eval(self, t):
        return self.factor * self.base(t)

    def to_json(self):
        return {"form": "scaled", "factor": self.factor, "of": self.base.to_json()}


@dataclass(frozen=True)
class Sum(Curve):
    left: Curve
    right: Curve

    @property
    def interval(self):
        return (
            max(self.left.interval[0], self.right.interval[0]),
            min(self.left.interval[1], self.right.interval[1]),
        )

    def _eval(self, t):
        return self.left(t) + self.right(t)

    def to_json(self):
        return {"form": "sum", "terms": [self.left.to_json(), self.right.to_json()]}


def as_curve(value):
    if isinstance(value, Curve):
        return value
    if isinstance(value, str):
        return parse_curve(value)
    if isinstance(value, dict):
        return curve_from_json(value)
    return Constant(float(value))


def curve_from_json(data):
    form = data.get("form")
    try:
        if form == "constant":
            return Constant(float(data["c"]))
        if form == "polynomial":
            return Polynomial(tuple(float(c) for c in data["coeffs"]))
        if form == "sinusoid":
            return Sinusoid(
                float(data.get("a", 0.0)),
                float(data.get("omega", 1.0)),
                float(data.get("phi", 0.0)),
                float(data.get("c", 0.0)),
            )
        if form == "tabulated":
            return Tabulated(data["times"], data["values"])
        if form == "squared":
            return Squared(curve_from_json(data["of"]))
        if form == "scaled":
            return Scaled(curve_from_json(data["of"]), float(data["factor"]))
        if form == "sum":
            left, right = (curve_from_json(d) for d in data["terms"])
            return Sum(left, right)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed curve descriptor {data!r}: {exc}") from exc
    raise ParseError(f"unknown curve form {form!r}")


_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_TERM = re.compile(
    rf"^(?:(?P<coef>{_NUM})\s*\*?\s*)?"
    rf"(?:(?P<trig>cos|sin)(?:\(\s*(?:(?P<freq>{_NUM})\s*\*?\s*)?t\s*\))?"
    rf"|(?P<t>t)(?:\s*\^\s*(?P<power>\d+))?)?$"
)


def parse_curve(text):
    """Parse the curve mini-language.

    Terms are joined by ``+``/``-``; each is a number, ``[k*]cos``,
    ``[k*]sin``, ``[k*]cos(w*t)`` or ``[k*]t^n``. Trigonometric terms must
    share one frequency and cannot be mixed with powers of ``t``.
    """
    src = text.replace(" ", "")
    if not src:
        raise ParseError("empty curve expression")
    # split before every sign that is not part of an exponent such as 1e-3
    pieces = [p for p in re.split(r"(?<![0-9.][eE])(?=[+-])", src) if p]
    const = 0.0
    cos_part = sin_part = 0.0
    freq = None
    poly = {}
    for piece in pieces:
        sign = -1.0 if piece.startswith("-") else 1.0
        body = piece.lstrip("+-")
        match = _TERM.match(body)
        if not body or not match:
            raise ParseError(f"cannot parse curve term {piece!r} in {text!r}")
        coef = sign * float(match.group("coef") or 1.0)
        if match.group("trig"):
            w = float(match.group("freq") or 1.0)
            if freq is not None and w != freq:
                raise ParseError("trigonometric terms must share one frequency")
            freq = w
            if match.group("trig") == "cos":
                cos_part += coef
            else:
                sin_part += coef
        elif match.group("t"):
            k = int(match.group("power") or 1)
            poly[k] = poly.get(k, 0.0) + coef
        else:
            if match.group("coef") is None:
                raise ParseError(f"cannot parse curve term {piece!r}")
            const += coef
    if freq is not None and poly:
        raise ParseError("mixing trigonometric and polynomial terms is not supported")
    if freq is not None:
        amp = math.hypot(cos_part, sin_part)
        phi = math.atan2(-sin_part, cos_part) + 0.0
        return Sinusoid(amp, freq, phi, const)
    if poly:
        coeffs = [0.0] * (max(poly) + 1)
        coeffs[0] = const
        for k, v in poly.items():
            coeffs[k] += v
        return Polynomial(tuple(coeffs))
    return Constant(const)
