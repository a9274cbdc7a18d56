"""Time-dependent Lie and Lie-Hamilton systems and the worked-example catalog.

A system is a list of vector fields ``X_alpha`` with coefficient curves
``b_alpha(t)``; the flow is ``dx/dt = sum_alpha b_alpha(t) X_alpha(x)``.
For Lie-Hamilton systems the fields are the Hamiltonian vector fields of
the realization's ``h_alpha``.

Sign bookkeeping per catalog entry (``b`` listed in generator order):

=======================  ======================================
ermakov                  ``(omega(t)^2, 0, 1)``
smorodinsky-winternitz   ``(omega(t)^2, 0, 1)``
kummer-schwarz           ``(b1(t), 0, 1)``
riccati4, riccati        ``(a0(t), a1(t), a2(t))``
second-order-riccati     ``(1, -a0(t), -a1(t), -a2(t), 0, 0)``
trig-su2                 ``(Bx(t), By(t), Bz(t))``
=======================  ======================================
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import builtin
from .curves import Constant, Scaled, Squared, as_curve, curve_from_json
from .errors import CatalogError, CurveRangeError, ShapeError
from .realization import (
    Constraint,
    PhaseSpace,
    PoissonBivector,
    Realization,
    SmoothFunction,
)


# -- realizations -------------------------------------------------------------


def _fn(value, gradient, name):
    return SmoothFunction(value, gradient, name)


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _nonzero(i, name):
    return Constraint(f"{name} != 0", name, lambda x, i=i: np.abs(x[..., i]))


def kummer_schwarz_realization(b0=1.0):
    """``h1 = 4/x``, ``h2 = x p``, ``h3 = (p^2 x^3 + b0 x)/4`` on ``T*R_0``."""
    b0 = float(b0)
    space = PhaseSpace(2, ("x", "p"), (_nonzero(0, "x"),), ((-2.0, -1.0), (2.0, 1.0)))
    X = lambda x: x[..., 0]
    P = lambda x: x[..., 1]
    hams = (
        _fn(lambda x: 4 / X(x), lambda x: _stack(-4 / X(x) ** 2, 0.0 * X(x)), "h1"),
        _fn(lambda x: X(x) * P(x), lambda x: _stack(P(x), X(x)), "h2"),
        _fn(
            lambda x: (P(x) ** 2 * X(x) ** 3 + b0 * X(x)) / 4,
            lambda x: _stack((3 * P(x) ** 2 * X(x) ** 2 + b0) / 4, P(x) * X(x) ** 3 / 2),
            "h3",
        ),
    )
    return Realization(space, PoissonBivector.canonical(1), hams, builtin("sl2").sc, "kummer-schwarz")


def smorodinsky_winternitz_realization(n=1, b=0.0, names=None):
    """sl(2) Hamiltonians on ``T*R^n`` with coordinates ``(x_1..x_n, p_1..p_n)``.

    ``x_i != 0`` is imposed only where ``b_i != 0``; with ``b_i = 0`` the
    Hamiltonians are regular across ``x_i = 0``.
    """
    n = int(n)
    if n < 1:
        raise CatalogError(f"smorodinsky-winternitz needs n >= 1, got {n}")
    bs = np.broadcast_to(np.asarray(b, dtype=float), (n,)).copy()
    if names is None:
        names = (("x", "p") if n == 1 else
                 tuple(f"x{i}" for i in range(1, n + 1)) + tuple(f"p{i}" for i in range(1, n + 1)))
    constraints = tuple(_nonzero(i, names[i]) for i in range(n) if bs[i] != 0)
    box = ((-2.0,) * n + (-1.5,) * n, (2.0,) * n + (1.5,) * n)
    space = PhaseSpace(2 * n, tuple(names), constraints, box)
    safe = np.where(bs != 0, 1.0, 0.0)

    def xs(x):
        return x[..., :n]

    def ps(x):
        return x[..., n:]

    def inv_sq(x):
        # b_i / x_i^2 with b_i = 0 terms dropped before dividing
        xv = np.where(safe > 0, xs(x), 1.0)
        return bs / xv ** 2

    def inv_cube(x):
        xv = np.where(safe > 0, xs(x), 1.0)
        return bs / xv ** 3

    hams = (
        _fn(lambda x: 0.5 * np.sum(xs(x) ** 2, axis=-1),
            lambda x: np.concatenate([xs(x), 0.0 * ps(x)], axis=-1), "h1"),
        _fn(lambda x: -0.5 * np.sum(xs(x) * ps(x), axis=-1),
            lambda x: np.concatenate([-0.5 * ps(x), -0.5 * xs(x)], axis=-1), "h2"),
        _fn(lambda x: 0.5 * np.sum(ps(x) ** 2 + inv_sq(x), axis=-1),
            lambda x: np.concatenate([-inv_cube(x), ps(x)], axis=-1), "h3"),
    )
    return Realization(space, PoissonBivector.canonical(n), hams, builtin("sl2").sc,
                       "smorodinsky-winternitz")


def ermakov_realization(b=1.0):
    """Ermakov system on ``(x, y, v_x, v_y)``: the n=2 case with ``b_2 = 0``."""
    R = smorodinsky_winternitz_realization(2, (b, 0.0), names=("x", "y", "v_x", "v_y"))
    return Realization(R.space, R.bivector, R.hams, R.sc, "ermakov")


_PAIRS_FIRST = ((0, 1), (2, 3))
_PAIRS_ALL = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _riccati_hams(pairs):
    def h1(x):
        return sum(1 / (x[..., i] - x[..., j]) for i, j in pairs)

    def g1(x):
        out = np.zeros(x.shape)
        for i, j in pairs:
            d2 = (x[..., i] - x[..., j]) ** 2
            out[..., i] += -1 / d2
            out[..., j] += 1 / d2
        return out

    def h2(x):
        return sum(0.5 * (x[..., i] + x[..., j]) / (x[..., i] - x[..., j]) for i, j in pairs)

    def g2(x):
        out = np.zeros(x.shape)
        for i, j in pairs:
            d2 = (x[..., i] - x[..., j]) ** 2
            out[..., i] += -x[..., j] / d2
            out[..., j] += x[..., i] / d2
        return out

    def h3(x):
        return sum(x[..., i] * x[..., j] / (x[..., i] - x[..., j]) for i, j in pairs)

    def g3(x):
        out = np.zeros(x.shape)
        for i, j in pairs:
            d2 = (x[..., i] - x[..., j]) ** 2
            out[..., i] += -x[..., j] ** 2 / d2
            out[..., j] += x[..., i] ** 2 / d2
        return out

    return (_fn(h1, g1, "h1"), _fn(h2, g2, "h2"), _fn(h3, g3, "h3"))


def _riccati_first_bivector(x):
    out = np.zeros(x.shape[:-1] + (4, 4))
    for i, j in _PAIRS_FIRST:
        d2 = (x[..., i] - x[..., j]) ** 2
        out[..., i, j] = d2
        out[..., j, i] = -d2
    return out


def _riccati_second_bivector(x):
    # symplectic form sum_{i<j} dx_i ^ dx_j / (x_i - x_j)^2 has matrix W;
    # i_X omega = dh gives X = -W^{-1} grad h
    w = np.zeros(x.shape[:-1] + (4, 4))
    for i, j in _PAIRS_ALL:
        inv = 1 / (x[..., i] - x[..., j]) ** 2
        w[..., i, j] = inv
        w[..., j, i] = -inv
    lam = -np.linalg.inv(w)
    # the inverse is antisymmetric only up to roundoff; restore it exactly
    return 0.5 * (lam - np.swapaxes(lam, -1, -2))


def riccati4_realization(bivector="first"):
    """Four coupled Riccati equations on pairwise-distinct 4-tuples.

    ``bivector="first"`` uses the symplectic form on pairs (1,2), (3,4);
    ``"second"`` uses the form summed over all six pairs, with the matching
    pair-summed Hamiltonians.
    """
    names = ("x1", "x2", "x3", "x4")
    constraints = tuple(
        Constraint(f"x{i + 1} != x{j + 1}", f"x{i + 1}",
                   lambda x, i=i, j=j: np.abs(x[..., i] - x[..., j]))
        for i, j in _PAIRS_ALL
    )
    space = PhaseSpace(4, names, constraints, ((-2.0,) * 4, (2.0,) * 4), sample_margin=0.1)
    if bivector == "first":
        biv, pairs = PoissonBivector(_riccati_first_bivector), _PAIRS_FIRST
    elif bivector == "second":
        biv, pairs = PoissonBivector(_riccati_second_bivector), _PAIRS_ALL
    else:
        raise CatalogError(f"riccati4 bivector must be 'first' or 'second', got {bivector!r}")
    return Realization(space, biv, _riccati_hams(pairs), builtin("sl2").sc, f"riccati4-{bivector}")


def trig_su2_realization():
    """``h1 = -sqrt(1-x^2) cos p``, ``h2 = -sqrt(1-x^2) sin p``, ``h3 = x`` on ``T*I``."""
    constraint = Constraint("|x| < 1", "x", lambda x: 1 - np.abs(x[..., 0]))
    space = PhaseSpace(2, ("x", "p"), (constraint,), ((-1.0, -np.pi), (1.0, np.pi)),
                       exit_margin=1e-6)
    S = lambda x: np.sqrt(1 - x[..., 0] ** 2)
    X = lambda x: x[..., 0]
    P = lambda x: x[..., 1]
    hams = (
        _fn(lambda x: -S(x) * np.cos(P(x)),
            lambda x: _stack(X(x) * np.cos(P(x)) / S(x), S(x) * np.sin(P(x))), "h1"),
        _fn(lambda x: -S(x) * np.sin(P(x)),
            lambda x: _stack(X(x) * np.sin(P(x)) / S(x), -S(x) * np.cos(P(x))), "h2"),
        _fn(lambda x: X(x) + 0.0, lambda x: _stack(1.0 + 0.0 * X(x), 0.0 * X(x)), "h3"),
    )
    return Realization(space, PoissonBivector.canonical(1), hams, builtin("su2").sc, "trig-su2")


def second_order_riccati_realization():
    """Six Hamiltonians on ``p < 0`` spanning the two-photon algebra (``h6 = 1``)."""
    constraint = Constraint("p < 0", "p", lambda x: -x[..., 1])
    space = PhaseSpace(2, ("x", "p"), (constraint,), ((-2.0, -2.0), (2.0, 0.0)))
    X = lambda x: x[..., 0]
    P = lambda x: x[..., 1]
    R = lambda x: np.sqrt(-x[..., 1])
    zero = lambda x: 0.0 * x[..., 0]
    hams = (
        _fn(lambda x: -2 * R(x), lambda x: _stack(zero(x), 1 / R(x)), "h1"),
        _fn(lambda x: P(x) + 0.0, lambda x: _stack(zero(x), 1.0 + zero(x)), "h2"),
        _fn(lambda x: X(x) * P(x), lambda x: _stack(P(x), X(x)), "h3"),
        _fn(lambda x: X(x) ** 2 * P(x), lambda x: _stack(2 * X(x) * P(x), X(x) ** 2), "h4"),
        _fn(lambda x: -2 * X(x) * R(x), lambda x: _stack(-2 * R(x), X(x) / R(x)), "h5"),
        _fn(lambda x: 1.0 + zero(x), lambda x: _stack(zero(x), zero(x)), "h6"),
    )
    return Realization(space, PoissonBivector.canonical(1), hams, builtin("h6").sc,
                       "second-order-riccati")


def prolong_realization(R, m):
    """Realization on ``N^m``: block bivector, ``h_alpha`` summed over copies."""
    n = R.space.n

    def lift(h):
        def value(X):
            X = np.asarray(X, dtype=float)
            blocks = X.reshape(X.shape[:-1] + (m, n))
            return np.sum(h(blocks), axis=-1)

        def gradient(X):
            X = np.asarray(X, dtype=float)
            blocks = X.reshape(X.shape[:-1] + (m, n))
            return h.grad(blocks).reshape(X.shape)

        return SmoothFunction(value, gradient, h.name)

    return Realization(R.space.product(m), R.bivector.prolong(m, n),
                       tuple(lift(h) for h in R.hams), R.sc, f"{R.name}^{m}", R.notes)


# -- systems --------------------------------------------------------------------


@dataclass(frozen=True)
class LieSystem:
    """``dx/dt = sum_alpha b_alpha(t) X_alpha(x)`` with explicit vector fields.

    ``fields`` map states of shape ``(..., n)`` to tangent vectors of the
    same shape.
    """

    name: str
    space: PhaseSpace
    fields: tuple
    b: tuple
    params: dict = field(default_factory=dict, compare=False)
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.b) != len(self.fields):
            raise ShapeError(f"{len(self.b)} coefficient curves for {len(self.fields)} vector fields")
        object.__setattr__(self, "b", tuple(as_curve(c) for c in self.b))

    @property
    def r(self):
        return len(self.fields)

    @property
    def n(self):
        return self.space.n

    def coefficients(self, t):
        return np.array([c(t) for c in self.b])

    def covers(self, t0, t1):
        return all(c.covers(t0, t1) for c in self.b)

    def rhs(self, t, x):
        """Unchecked field evaluation; broadcasts over leading axes."""
        coeffs = self.coefficients(t)
        out = np.zeros(np.shape(x))
        for c, X in zip(coeffs, self.fields):
            if c:
                out = out + c * X(x)
        return out

    def vector_field(self, t, x):
        x = np.asarray(x, dtype=float)
        self.space.check(x)
        return self.rhs(t, x)

    def with_coefficients(self, b):
        return type(self)(**{**self._fields_dict(), "b": tuple(b)})

    def _fields_dict(self):
        return {
            "name": self.name,
            "space": self.space,
            "fields": self.fields,
            "b": self.b,
            "params": self.params,
            "notes": self.notes,
        }

    def prolong(self, m):
        return ProlongedSystem(self, m)

    def descriptor(self):
        return {
            "name": self.name,
            "params": dict(self.params),
            "coefficients": [c.to_json() for c in self.b],
        }


def _hamiltonian_field(realization, h):
    def field(x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...ij,...j->...i", realization.bivector(x), h.grad(x))

    return field


@dataclass(frozen=True)
class LieHamiltonSystem(LieSystem):
    """Lie system whose fields are Hamiltonian for ``realization``."""

    realization: Realization = None

    def __post_init__(self):
        super().__post_init__()
        if self.realization is None:
            raise ShapeError("Lie-Hamilton system needs a realization")
        if self.realization.r != len(self.b):
            raise ShapeError(f"{len(self.b)} curves for {self.realization.r} Hamiltonians")

    @classmethod
    def from_realization(cls, name, realization, b, params=None, notes=""):
        fields = tuple(_hamiltonian_field(realization, h) for h in realization.hams)
        return cls(name, realization.space, fields, tuple(b), dict(params or {}), notes, realization)

    def rhs(self, t, x):
        # X_t = Lambda grad(h_t), one bivector evaluation per call
        x = np.asarray(x, dtype=float)
        coeffs = self.coefficients(t)
        grad = np.zeros(x.shape)
        for c, h in zip(coeffs, self.realization.hams):
            if c:
                grad = grad + c * h.grad(x)
        return np.einsum("...ij,...j->...i", self.realization.bivector(x), grad)

    def hamiltonian(self, t, x):
        return float(np.dot(self.coefficients(t), self.realization.hvalues(x)))

    def _fields_dict(self):
        return {**super()._fields_dict(), "realization": self.realization}


@dataclass(frozen=True)
class ProlongedSystem:
    """Diagonal prolongation: ``m`` copies evolving under one coefficient curve."""

    base: LieSystem
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ShapeError("prolongation needs m >= 1")
        object.__setattr__(self, "space", self.base.space.product(self.m))

    @property
    def name(self):
        return f"{self.base.name}^{self.m}"

    @property
    def n(self):
        return self.m * self.base.n

    @property
    def b(self):
        return self.base.b

    @property
    def realization(self):
        R = getattr(self.base, "realization", None)
        return None if R is None else prolong_realization(R, self.m)

    def covers(self, t0, t1):
        return self.base.covers(t0, t1)

    def rhs(self, t, X):
        X = np.asarray(X, dtype=float)
        blocks = X.reshape(X.shape[:-1] + (self.m, self.base.n))
        return self.base.rhs(t, blocks).reshape(X.shape)

    def vector_field(self, t, X):
        X = np.asarray(X, dtype=float)
        self.space.check(X)
        return self.rhs(t, X)

    def descriptor(self):
        return {**self.base.descriptor(), "m": self.m}


def prolong(system, m):
    """Diagonal prolongation; ``m = 1`` returns the system itself."""
    if m == 1:
        return system
    return ProlongedSystem(system, m)


# -- catalog ------------------------------------------------------------------


def _riccati_scalar(a0, a1, a2):
    space = PhaseSpace(1, ("x",), (), ((-2.0,), (2.0,)))
    fields = (
        lambda x: np.ones(np.shape(x)),
        lambda x: np.asarray(x, dtype=float) + 0.0,
        lambda x: np.asarray(x, dtype=float) ** 2,
    )
    return LieSystem("riccati", space, fields, (a0, a1, a2),
                     notes="scalar Riccati equation; a Lie system without a Poisson structure")


def _curve_param(params, key, default):
    return as_curve(params.get(key, default))


_SYSTEMS = {}


def _register(name, doc):
    def deco(fn):
        _SYSTEMS[name] = (fn, doc)
        return fn

    return deco


@_register("ermakov", "classical Ermakov system, b=(omega^2, 0, 1)")
def _ermakov(params):
    b = float(params.get("b", 1.0))
    omega = _curve_param(params, "omega", "1+t^2")
    R = ermakov_realization(b)
    return LieHamiltonSystem.from_realization(
        "ermakov", R, (Squared(omega), Constant(0.0), Constant(1.0)),
        {"b": b, "omega": omega.to_json()},
    )


@_register("smorodinsky-winternitz", "SW system with time-dependent frequency, b=(omega^2, 0, 1)")
def _sw(params):
    n = int(params.get("n", 1))
    if n < 1:
        raise CatalogError(f"smorodinsky-winternitz needs n >= 1, got {n}")
    b = params.get("b", 1.0)
    omega = _curve_param(params, "omega", "1+0.3*cos")
    R = smorodinsky_winternitz_realization(n, b)
    bj = b if np.isscalar(b) else list(b)
    return LieHamiltonSystem.from_realization(
        "smorodinsky-winternitz", R, (Squared(omega), Constant(0.0), Constant(1.0)),
        {"n": n, "b": bj, "omega": omega.to_json()},
    )


@_register("kummer-schwarz", "second-order Kummer-Schwarz equations, b=(b1, 0, 1)")
def _ks(params):
    b0 = float(params.get("b0", 1.0))
    b1 = _curve_param(params, "b1", "cos")
    R = kummer_schwarz_realization(b0)
    return LieHamiltonSystem.from_realization(
        "kummer-schwarz", R, (b1, Constant(0.0), Constant(1.0)), {"b0": b0, "b1": b1.to_json()},
    )


@_register("riccati4", "four coupled Riccati equations, b=(a0, a1, a2)")
def _riccati4(params):
    a = [_curve_param(params, k, d) for k, d in (("a0", "sin"), ("a1", 0.5), ("a2", "cos"))]
    which = params.get("bivector", "first")
    R = riccati4_realization(which)
    return LieHamiltonSystem.from_realization(
        "riccati4", R, a, {"bivector": which, **{f"a{i}": c.to_json() for i, c in enumerate(a)}},
    )


@_register("riccati", "scalar Riccati equation (Lie system, no Poisson structure)")
def _riccati(params):
    a = [_curve_param(params, k, d) for k, d in (("a0", "sin"), ("a1", 0.5), ("a2", "cos"))]
    sys = _riccati_scalar(*a)
    return LieSystem(sys.name, sys.space, sys.fields, sys.b,
                     {f"a{i}": c.to_json() for i, c in enumerate(a)}, sys.notes)


@_register("second-order-riccati", "two-photon system on p<0, b=(1, -a0, -a1, -a2, 0, 0)")
def _sor(params):
    a = [_curve_param(params, k, d) for k, d in (("a0", "sin"), ("a1", 0.5), ("a2", "cos"))]
    R = second_order_riccati_realization()
    b = (Constant(1.0), Scaled(a[0], -1.0), Scaled(a[1], -1.0), Scaled(a[2], -1.0),
         Constant(0.0), Constant(0.0))
    return LieHamiltonSystem.from_realization(
        "second-order-riccati", R, b, {f"a{i}": c.to_json() for i, c in enumerate(a)},
    )


@_register("trig-su2", "su(2) system with trigonometric nonlinearities, b=(Bx, By, Bz)")
def _trig(params):
    B = [_curve_param(params, k, d) for k, d in (("Bx", "cos"), ("By", "sin"), ("Bz", 1.0))]
    R = trig_su2_realization()
    return LieHamiltonSystem.from_realization(
        "trig-su2", R, B, {k: c.to_json() for k, c in zip(("Bx", "By", "Bz"), B)},
    )


def system_names():
    return sorted(_SYSTEMS)


def system_doc(name):
    if name not in _SYSTEMS:
        raise CatalogError(f"unknown system {name!r}; known: {', '.join(system_names())}")
    return _SYSTEMS[name][1]


def catalog(name, **params):
    """Build a catalog system; keyword parameters override the defaults.

    Coefficient parameters accept numbers, curve objects, curve JSON or
    mini-language strings (``"1+0.3*cos"``).
    """
    try:
        builder, _ = _SYSTEMS[name]
    except KeyError:
        raise CatalogError(f"unknown system {name!r}; known: {', '.join(system_names())}") from None
    return builder(params)


def from_descriptor(data):
    """Build a system from ``{"name", "params", "coefficients"}``.

    Explicit ``coefficients`` replace the catalog's coefficient curves.
    """
    if "name" not in data:
        raise CatalogError("system descriptor needs a name")
    sys = catalog(data["name"], **data.get("params", {}))
    coeffs = data.get("coefficients")
    if coeffs:
        curves = tuple(curve_from_json(c) if isinstance(c, dict) else as_curve(c) for c in coeffs)
        if len(curves) != sys.r:
            raise ShapeError(f"{len(curves)} coefficients for a system with {sys.r} generators")
        sys = sys.with_coefficients(curves)
    m = int(data.get("m", 1))
    return prolong(sys, m)


def check_curves(system, t0, t1):
    if not system.covers(t0, t1):
        raise CurveRangeError(f"coefficient curves of {system.name} do not cover [{t0}, {t1}]")
