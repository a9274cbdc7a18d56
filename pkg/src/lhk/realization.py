"""Concrete Poisson manifolds realizing abstract Lie algebras.

Point-valued functions here accept arrays whose last axis is the state
dimension and broadcast over leading axes, so a whole trajectory can be
evaluated in one call.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ShapeError
from .sympoly import SymPoly, poisson_bracket

FD_SCALE = np.finfo(float).eps ** (1 / 3)

# Slack below which a point counts as outside; absorbs decimal round-off
# in user-supplied boundary points.
_EXIT_SLACK = 1e-9


@dataclass(frozen=True)
class Constraint:
    """One strict inequality ``slack(x) > 0`` of an open domain."""

    description: str
    coordinate: str
    slack: Callable


@dataclass(frozen=True)
class PhaseSpace:
    """Open domain in R^n with a bounding box used for sampling.

    ``exit_margin`` is the slack below which integration aborts; sampling
    keeps every constraint at slack ``>= sample_margin``.
    """

    n: int
    names: tuple
    constraints: tuple = ()
    box: tuple = None
    sample_margin: float = 0.05
    exit_margin: float = 0.0

    def __post_init__(self):
        if len(self.names) != self.n:
            raise ShapeError(f"{len(self.names)} coordinate names for dimension {self.n}")
        if self.box is None:
            object.__setattr__(self, "box", ((-2.0,) * self.n, (2.0,) * self.n))

    def margin(self, x):
        """Smallest constraint slack (``inf`` for an unconstrained space)."""
        x = np.asarray(x, dtype=float)
        if not self.constraints:
            return np.full(x.shape[:-1], np.inf) if x.ndim > 1 else np.inf
        slacks = np.stack([np.asarray(c.slack(x), dtype=float) for c in self.constraints])
        return slacks.min(axis=0)

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ShapeError(f"point has dimension {x.shape[-1]}, expected {self.n}")
        ok = np.all(np.isfinite(x), axis=-1) & (self.margin(x) > self.exit_margin + _EXIT_SLACK)
        return bool(ok) if np.ndim(ok) == 0 else ok

    def check(self, x):
        """Raise :class:`DomainError` naming the first violated constraint."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ShapeError(f"point has dimension {x.shape[-1]}, expected {self.n}")
        if not np.all(np.isfinite(x)):
            raise DomainError(f"non-finite state {x.tolist()}", point=x)
        for c in self.constraints:
            if not float(c.slack(x)) > self.exit_margin + _EXIT_SLACK:
                raise DomainError(
                    f"point outside domain: {c.description} violated at {c.coordinate}",
                    point=x,
                    coordinate=c.coordinate,
                )

    def sample(self, rng, count=1, margin=None, max_tries=100000):
        """Rejection-sample ``count`` points from the box, away from the boundary."""
        margin = self.sample_margin if margin is None else margin
        lo, hi = (np.asarray(b, dtype=float) for b in self.box)
        out = []
        tries = 0
        while len(out) < count:
            batch = rng.uniform(lo, hi, size=(max(count, 16), self.n))
            keep = batch[np.atleast_1d(self.margin(batch)) >= margin]
            out.extend(keep[: count - len(out)])
            tries += len(batch)
            if tries > max_tries:
                raise DomainError("could not sample interior points from the bounding box")
        return np.array(out)

    def product(self, m):
        """The m-fold product space with copy-suffixed coordinates."""
        n = self.n
        names = tuple(f"{name}_{a}" for a in range(1, m + 1) for name in self.names)
        constraints = []
        for a in range(m):
            for c in self.constraints:
                constraints.append(
                    Constraint(
                        f"{c.description} (copy {a + 1})",
                        f"{c.coordinate}_{a + 1}",
                        _copy_slack(c.slack, a, n),
                    )
                )
        lo, hi = self.box
        box = (tuple(lo) * m, tuple(hi) * m)
        return PhaseSpace(m * n, names, tuple(constraints), box, self.sample_margin, self.exit_margin)


def _copy_slack(slack, a, n):
    return lambda x: slack(np.asarray(x)[..., a * n:(a + 1) * n])


@dataclass(frozen=True)
class PoissonBivector:
    """Matrix-valued ``x -> Lambda^{ij}(x)``; broadcasts over leading axes."""

    matrix: Callable
    constant: bool = False

    def __call__(self, x):
        return self.matrix(np.asarray(x, dtype=float))

    @classmethod
    def canonical(cls, dof):
        """``sum_i d/dx_i ^ d/dp_i`` with coordinates ordered ``(x_1..x_n, p_1..p_n)``."""
        mat = np.zeros((2 * dof, 2 * dof))
        mat[:dof, dof:] = np.eye(dof)
        mat[dof:, :dof] = -np.eye(dof)
        return cls(lambda x: np.broadcast_to(mat, x.shape[:-1] + mat.shape), constant=True)

    def prolong(self, m, n):
        """Block-diagonal bivector on the m-fold product."""
        base = self

        def matrix(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1] + (m * n, m * n))
            for a in range(m):
                sl = slice(a * n, (a + 1) * n)
                out[..., sl, sl] = base(x[..., sl])
            return out

        return PoissonBivector(matrix, self.constant)


def fd_gradient(value, x):
    """Central-difference gradient with step ``cbrt(eps) * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros(x.shape)
    for i in range(x.shape[-1]):
        h = FD_SCALE * np.maximum(1.0, np.abs(x[..., i]))
        xp = x.copy()
        xm = x.copy()
        xp[..., i] += h
        xm[..., i] -= h
        grad[..., i] = (np.asarray(value(xp)) - np.asarray(value(xm))) / (2 * h)
    return grad


@dataclass(frozen=True)
class SmoothFunction:
    """A function with an optional closed-form gradient."""

    value: Callable
    gradient: Optional[Callable] = None
    name: str = ""

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=float)
        return fd_gradient(self.value, x)

    def without_gradient(self):
        return SmoothFunction(self.value, None, self.name)


@dataclass(frozen=True)
class Realization:
    """Phase space, bivector and Hamiltonians ``h_1..h_r`` for an algebra."""

    space: PhaseSpace
    bivector: PoissonBivector
    hams: tuple
    sc: object
    name: str = ""
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.hams) != self.sc.r:
            raise ShapeError(f"{len(self.hams)} Hamiltonians for an algebra of dimension {self.sc.r}")

    @property
    def r(self):
        return self.sc.r

    def hvalues(self, x):
        """Hamiltonian values, shape ``(..., r)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(h(x), x.shape[:-1]) for h in self.hams], axis=-1)

    def hgrads(self, x):
        """Hamiltonian gradients, shape ``(..., r, n)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(h.grad(x), x.shape) for h in self.hams], axis=-2)

    def with_hams(self, hams, name=None):
        return Realization(self.space, self.bivector, tuple(hams), self.sc, name or self.name, self.notes)

    def with_bivector(self, bivector, hams=None, name=None):
        return Realization(
            self.space, bivector, tuple(hams or self.hams), self.sc, name or self.name, self.notes
        )


def bracket_num(f, g, bivector, x, space=None):
    """``{f, g}(x) = sum_ij Lambda^{ij} d_i f d_j g``."""
    x = np.asarray(x, dtype=float)
    if space is not None:
        space.check(x)
    return float(np.einsum("i,ij,j->", f.grad(x), bivector(x), g.grad(x)))


def hamiltonian_vf(f, bivector, x, space=None):
    """Hamiltonian vector field with components ``X_f^i = sum_j Lambda^{ij} d_j f``.

    With this convention ``X_f g = {g, f}``.
    """
    x = np.asarray(x, dtype=float)
    if space is not None:
        space.check(x)
    return np.einsum("...ij,...j->...i", bivector(x), f.grad(x))


class RealizedPoly:
    """The function ``D^(m)(P)`` on the m-fold product of a realization.

    Generator ``v_alpha`` of copy ``a`` is bound to ``h_alpha`` evaluated
    on the ``a``-th block of the prolonged state.
    """

    def __init__(self, poly, realization, name=""):
        if poly.r != realization.r:
            raise ShapeError(f"polynomial has r={poly.r}, realization r={realization.r}")
        self.poly = poly
        self.realization = realization
        self.m = poly.m
        self.name = name or poly.to_text()

    @property
    def dim(self):
        return self.m * self.realization.space.n

    def _blocks(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise ShapeError(f"state has dimension {X.shape[-1]}, expected {self.dim}")
        return X.reshape(X.shape[:-1] + (self.m, self.realization.space.n))

    def generator_values(self, X):
        blocks = self._blocks(X)
        vals = self.realization.hvalues(blocks)
        return vals.reshape(vals.shape[:-2] + (self.m * self.realization.r,))

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        vals = self.generator_values(X)
        if vals.ndim == 1:
            return self.poly.evaluate(vals)
        flat = vals.reshape(-1, vals.shape[-1])
        return self.poly.evaluate(flat).reshape(vals.shape[:-1])

    def value_and_grad(self, X):
        X = np.asarray(X, dtype=float)
        blocks = self._blocks(X)
        vals = self.generator_values(X)
        flat = vals.reshape(-1, vals.shape[-1])
        val, dpoly = self.poly.evaluate_grad(flat)
        lead = X.shape[:-1]
        r, n = self.realization.r, self.realization.space.n
        dpoly = dpoly.reshape(lead + (self.m, r))
        hg = self.realization.hgrads(blocks)
        grad = np.einsum("...ar,...arn->...an", dpoly, hg).reshape(lead + (self.m * n,))
        return val.reshape(lead) if lead else float(val[0]), grad

    def grad(self, X):
        return self.value_and_grad(X)[1]

    def as_function(self):
        return SmoothFunction(self.__call__, self.grad, self.name)


def realize_eval(poly, realization, pts):
    """Evaluate ``D^(m)(P)`` at the m points ``pts`` of the base space."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape != (poly.m, realization.space.n):
        raise ShapeError(f"need {poly.m} points of dimension {realization.space.n}, got {pts.shape}")
    for pt in pts:
        realization.space.check(pt)
    return float(RealizedPoly(poly, realization)(pts.reshape(-1)))


@dataclass
class HomomorphismReport:
    realization: str
    samples: int
    tol: float
    max_residual: float = 0.0
    pair_residuals: dict = field(default_factory=dict)
    morphism_residual: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def to_json(self):
        return {
            "realization": self.realization,
            "samples": self.samples,
            "tol": self.tol,
            "passed": self.passed,
            "max_residual": self.max_residual,
            "morphism_residual": self.morphism_residual,
            "pair_residuals": {f"{a},{b}": v for (a, b), v in sorted(self.pair_residuals.items())},
            "failures": [list(f) for f in self.failures],
        }


def random_poly(rng, r, m=1, degree=2, nterms=4, coeff_range=3):
    """Random polynomial with small integer coefficients (for property checks)."""
    terms = {}
    for _ in range(nterms):
        d = int(rng.integers(0, degree + 1))
        exps = [0] * (r * m)
        for _ in range(d):
            exps[int(rng.integers(0, r * m))] += 1
        terms[tuple(exps)] = int(rng.integers(-coeff_range, coeff_range + 1))
    return SymPoly(r, m, terms)


def check_homomorphism(realization, samples=100, tol=1e-8, rng=None, poly_pairs=10):
    """Verify the Hamiltonians close under the bracket with the algebra's constants.

    Residuals are ``|{h_a, h_b} - sum_g c(a,b,g) h_g|`` per sample. The
    morphism part compares the bracket of realized random quadratic
    polynomials with the realization of their abstract bracket, relative
    to ``max(1, sum_ij |d_i p Lambda_ij d_j q|)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    R = realization
    report = HomomorphismReport(R.name, samples, tol)
    pts = R.space.sample(rng, samples)
    vals = R.hvalues(pts)
    grads = R.hgrads(pts)
    lam = R.bivector(pts)
    brackets = np.einsum("sai,sij,sbj->sab", grads, lam, grads)
    c = R.sc.as_array()
    expected = np.einsum("abg,sg->sab", c, vals)
    resid = np.abs(brackets - expected).max(axis=0)
    for a in range(R.r):
        for b in range(a + 1, R.r):
            report.pair_residuals[(a + 1, b + 1)] = float(resid[a, b])
            if not resid[a, b] <= tol:
                report.failures.append(("bracket", a + 1, b + 1, float(resid[a, b])))
    report.max_residual = float(resid.max())

    worst = 0.0
    for _ in range(poly_pairs):
        p = random_poly(rng, R.r)
        q = random_poly(rng, R.r)
        fp = RealizedPoly(p, R)
        fq = RealizedPoly(q, R)
        fpq = RealizedPoly(poisson_bracket(p, q, R.sc), R)
        _, gp = fp.value_and_grad(pts)
        _, gq = fq.value_and_grad(pts)
        lhs = np.einsum("si,sij,sj->s", gp, lam, gq)
        rhs = fpq(pts)
        # scale by the size of the summands so cancellation is not mistaken for error
        size = np.einsum("si,sij,sj->s", np.abs(gp), np.abs(lam), np.abs(gq))
        err = np.abs(lhs - rhs) / np.maximum(1.0, np.maximum(size, np.abs(rhs)))
        worst = max(worst, float(err.max()))
    report.morphism_residual = worst
    if not worst <= tol:
        report.failures.append(("morphism", 0, 0, worst))
    return report


@dataclass(frozen=True)
class TimeFunction:
    """Time-dependent observable ``f(t, x)`` with optional spatial gradient."""

    value: Callable
    gradient: Optional[Callable] = None

    def at(self, t):
        grad = None if self.gradient is None else (lambda x: self.gradient(t, x))
        return SmoothFunction(lambda x: self.value(t, x), grad)


def bracket_at_t(f, g, bivector, t, x, space=None):
    """Autonomised bracket: freeze time and bracket the slices ``f_t``, ``g_t``."""
    return bracket_num(f.at(t), g.at(t), bivector, x, space)


def as_time_function(f):
    if isinstance(f, TimeFunction):
        return f
    grad = None if f.gradient is None else (lambda t, x: f.gradient(x))
    return TimeFunction(lambda t, x: f.value(x), grad)
