"""Integration of (prolonged) systems and numeric checks along trajectories."""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import adjoint_matrix
from .curves import as_curve
from .errors import (
    DomainExitError,
    GridMismatchError,
    IntegrationError,
    ShapeError,
    StepUnderflowError,
)
from .realization import RealizedPoly, SmoothFunction
from .sympoly import embed
from .systems import check_curves

BOUNDARY_TOL = 1e-12
_MAX_DOMAIN_RETRIES = 8

# Fehlberg 4(5) tableau; the 4th-order solution is propagated.
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


@dataclass(frozen=True)
class RK4:
    h: float = 1e-3
    name = "rk4"


@dataclass(frozen=True)
class RKF45:
    atol: float = 1e-10
    rtol: float = 1e-10
    h0: Optional[float] = None
    max_steps: int = 1_000_000
    name = "rkf45"


def as_method(method):
    if isinstance(method, (RK4, RKF45)):
        return method
    if method in (None, "rkf45"):
        return RKF45()
    if method == "rk4":
        return RK4()
    raise ValueError(f"unknown integration method {method!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    names: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or len(self.times) != len(self.states):
            raise ShapeError("trajectory needs matching times and 2-d states")

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]

    def at(self, t):
        """State at ``t``: the stored sample when ``t`` was hit, else linear interpolation."""
        idx = np.searchsorted(self.times, t)
        for j in (idx - 1, idx):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= BOUNDARY_TOL * max(1.0, abs(t)):
                return self.states[j]
        if t < self.times[0] or t > self.times[-1]:
            raise GridMismatchError(f"t={t} outside trajectory span [{self.times[0]}, {self.times[-1]}]")
        return np.array([np.interp(t, self.times, col) for col in self.states.T])

    def resample(self, times):
        times = np.asarray(times, dtype=float)
        return Trajectory(times, np.array([self.at(t) for t in times]), self.names, dict(self.metadata))

    def copy_block(self, n, copies):
        """Trajectory of the chosen copies (1-based) of an ``n``-dimensional base."""
        idx = np.concatenate([np.arange((a - 1) * n, a * n) for a in copies])
        names = tuple(self.names[i] for i in idx) if self.names else ()
        return Trajectory(self.times, self.states[:, idx], names, dict(self.metadata))

    def to_csv(self, path):
        names = self.names or tuple(f"y{i}" for i in range(self.states.shape[1]))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("t",) + tuple(names))
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array([[float(v) for v in row] for row in body])
        return cls(data[:, 0], data[:, 1:], tuple(header[1:]))


def _stages(rhs, t, y, h):
    k = np.empty((6,) + y.shape)
    for i in range(6):
        yi = y
        for j, a in enumerate(_A[i]):
            yi = yi + h * a * k[j]
        k[i] = rhs(t + _C[i] * h, yi)
    return k


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


class _Runner:
    """Shared stepping loop; ``inside(y)`` decides domain membership."""

    def __init__(self, rhs, inside, names, metadata):
        self.rhs = rhs
        self.inside = inside
        self.names = names
        self.metadata = metadata
        self.times = []
        self.states = []

    def record(self, t, y):
        self.times.append(t)
        self.states.append(np.array(y, dtype=float))

    def trajectory(self):
        return Trajectory(np.array(self.times), np.array(self.states), self.names, dict(self.metadata))

    def try_step(self, step, t, y, h):
        with np.errstate(all="ignore"):
            try:
                y_new = step(self.rhs, t, y, h)
            except (ValueError, FloatingPointError, ZeroDivisionError):
                return None
        if not np.all(np.isfinite(y_new)) or not self.inside(y_new):
            return None
        return y_new

    def domain_exit(self, step, t, y, h, why):
        """Bisect the failing step down to the boundary, then abort."""
        lo, hi = 0.0, h
        y_lo = y
        while hi - lo > BOUNDARY_TOL * max(1.0, abs(t)):
            mid = 0.5 * (lo + hi)
            y_mid = self.try_step(step, t, y, mid)
            if y_mid is None:
                hi = mid
            else:
                lo, y_lo = mid, y_mid
        if lo > 0:
            self.record(t + lo, y_lo)
        traj = self.trajectory()
        raise DomainExitError(
            f"{why} near t={t + hi:.12g}; last interior state at t={traj.times[-1]:.12g}",
            trajectory=traj, t=traj.times[-1], state=traj.states[-1],
        )


def _stops(t0, t1, t_eval):
    if t_eval is None:
        return [t1]
    pts = sorted(float(t) for t in t_eval if t0 < t < t1)
    return pts + [t1]


def integrate_rhs(rhs, x0, t0, t1, method=None, inside=None, t_eval=None, names=(), metadata=None):
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` to ``t1``.

    Steps are clipped so every time in ``t_eval`` is hit exactly. ``inside``
    reports domain membership; leaving the domain triggers bisection to the
    boundary and a :class:`DomainExitError` carrying the accepted prefix.
    """
    method = as_method(method)
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    inside = inside or (lambda y: True)
    y = np.array(x0, dtype=float)
    meta = {"integrator": method.name, **(metadata or {})}
    if isinstance(method, RK4):
        meta["h"] = method.h
    else:
        meta.update(atol=method.atol, rtol=method.rtol)
    run = _Runner(rhs, inside, names, meta)
    run.record(t0, y)
    stops = _stops(t0, t1, t_eval)
    if isinstance(method, RK4):
        _run_rk4(run, method, t0, y, stops)
    else:
        _run_rkf45(run, method, t0, y, stops)
    return run.trajectory()


def _run_rk4(run, method, t, y, stops):
    for stop in stops:
        while t < stop:
            h = min(method.h, stop - t)
            if stop - (t + h) < 1e-3 * method.h:
                h = stop - t
            y_new = run.try_step(_rk4_step, t, y, h)
            if y_new is None:
                run.domain_exit(_rk4_step, t, y, h, "left the domain")
            t = stop if h == stop - t else t + h
            y = y_new
            run.record(t, y)


def _fehlberg4(rhs, t, y, h):
    k = _stages(rhs, t, y, h)
    return y + h * np.tensordot(_B4, k, axes=1)


def _run_rkf45(run, method, t, y, stops):
    safety, fac_min, fac_max = 0.9, 0.2, 5.0
    alpha, beta = 0.7 / 5, 0.4 / 5
    span = stops[-1] - t
    with np.errstate(all="ignore"):
        f0 = run.rhs(t, y)
    scale0 = method.atol + method.rtol * np.abs(y)
    d0, d1 = np.sqrt(np.mean((y / scale0) ** 2)), np.sqrt(np.mean((f0 / scale0) ** 2))
    h = method.h0 or (0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 and np.isfinite(d1) else 1e-6)
    h = min(h, span)
    err_prev = 1.0
    steps = 0
    failures = 0
    failed_h = np.inf
    for stop in stops:
        while t < stop:
            steps += 1
            if steps > method.max_steps:
                raise IntegrationError(f"exceeded {method.max_steps} steps", run.trajectory(), t, y)
            if h < 16 * np.finfo(float).eps * max(1.0, abs(t)):
                raise StepUnderflowError(
                    f"step size underflow at t={t:.12g} (|y|={np.max(np.abs(y)):.3g})",
                    trajectory=run.trajectory(), t=t, state=y,
                )
            h_free = h
            last = h >= stop - t
            if last:
                h = stop - t
            with np.errstate(all="ignore"):
                k = _stages(run.rhs, t, y, h)
            y4 = y + h * np.tensordot(_B4, k, axes=1)
            if not (np.all(np.isfinite(k)) and run.inside(y4)):
                # stage or endpoint outside the domain: retry smaller, then give up
                failures += 1
                failed_h = h
                if failures > _MAX_DOMAIN_RETRIES:
                    run.domain_exit(_fehlberg4, t, y, h, "left the domain")
                h *= 0.25
                continue
            y5 = y + h * np.tensordot(_B5, k, axes=1)
            scale = method.atol + method.rtol * np.maximum(np.abs(y), np.abs(y4))
            err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
            if err <= 1.0:
                # only a step as long as the last one that left the domain proves
                # the trajectory has moved away; shorter steps creeping toward
                # the boundary keep counting toward the abort
                if h >= failed_h:
                    failures, failed_h = 0, np.inf
                t = stop if last else t + h
                y = y4
                run.record(t, y)
                factor = fac_max if err == 0.0 else safety * err ** (-alpha) * err_prev ** beta
                h_next = h * min(fac_max, max(fac_min, factor))
                err_prev = max(err, 1e-4)
                h = max(h_next, h_free) if last else h_next
            else:
                h *= max(fac_min, safety * err ** (-1 / 5))


def integrate(system, x0, t0, t1, method=None, t_eval=None):
    """Integrate a (prolonged) catalog system; see :func:`integrate_rhs`."""
    x0 = np.asarray(x0, dtype=float)
    system.space.check(x0)
    check_curves(system, t0, t1)
    return integrate_rhs(
        system.rhs, x0, t0, t1, method,
        inside=system.space.in_domain,
        t_eval=t_eval,
        names=system.space.names,
        metadata={"system": system.name, "m": getattr(system, "m", 1)},
    )


# -- invariants -------------------------------------------------------------------


def _named(inv, i):
    return getattr(inv, "name", "") or f"F{i}"


def _evaluate(inv, states):
    if isinstance(inv, RealizedPoly):
        return np.asarray(inv(states), dtype=float)
    return np.array([float(inv(s)) for s in states])


@dataclass
class DriftReport:
    entries: dict

    def max_drift(self):
        return max((e["max_drift"] for e in self.entries.values()), default=0.0)

    def passed(self, tol):
        return all(e["max_drift"] < tol for e in self.entries.values())

    def __getitem__(self, name):
        return self.entries[name]

    def to_json(self):
        return {k: dict(v) for k, v in self.entries.items()}


def monitor_invariants(traj, invariants, names=None):
    """Relative drift ``max_t |F(x(t)) - F(x(t0))| / max(1, |F(x(t0))|)``."""
    entries = {}
    for i, inv in enumerate(invariants):
        if isinstance(inv, RealizedPoly) and inv.dim != traj.states.shape[1]:
            raise ShapeError(
                f"invariant {_named(inv, i)} expects dimension {inv.dim}, trajectory has "
                f"{traj.states.shape[1]}"
            )
        vals = _evaluate(inv, traj.states)
        f0 = float(vals[0])
        drift = np.abs(vals - f0) / max(1.0, abs(f0))
        name = names[i] if names else _named(inv, i)
        entries[name] = {"initial": f0, "max_drift": float(drift.max()), "samples": int(len(vals))}
    return DriftReport(entries)


@dataclass
class InvolutionReport:
    samples: int
    tol: float
    max_abs: float

    @property
    def passed(self):
        return self.max_abs <= self.tol

    def to_json(self):
        return {"samples": self.samples, "tol": self.tol, "max_abs": self.max_abs, "passed": self.passed}


def _lift(p, m):
    return p if p.m == m else embed(p, m)


def involution_check(P, Q, realization, m, samples=50, tol=1e-6, rng=None, points=None):
    """Max of ``|{D(P), D(Q)}|`` under the block bivector at sampled points of ``N^m``."""
    rng = np.random.default_rng(0) if rng is None else rng
    fp = RealizedPoly(_lift(P, m), realization)
    fq = RealizedPoly(_lift(Q, m), realization)
    if points is None:
        points = realization.space.product(m).sample(rng, samples)
    lam = realization.bivector.prolong(m, realization.space.n)(points)
    gp, gq = fp.grad(points), fq.grad(points)
    vals = np.einsum("si,sij,sj->s", gp, lam, gq)
    return InvolutionReport(len(points), tol, float(np.max(np.abs(vals))))


@dataclass
class IndependenceReport:
    jacobian: np.ndarray
    det: float
    normalized_det: float
    singular_values: np.ndarray
    rank: int

    def to_json(self):
        return {
            "jacobian": self.jacobian.tolist(),
            "det": self.det,
            "normalized_det": self.normalized_det,
            "singular_values": self.singular_values.tolist(),
            "rank": self.rank,
        }


def independence_check(functions, wrt, pt, names=None, space=None):
    """Jacobian of ``functions`` w.r.t. the coordinates ``wrt`` (indices or names).

    Rank counts singular values above ``1e-8`` times the largest; the
    normalized determinant divides each row by its Euclidean norm first and
    is zero when some row norm is below ``1e-8`` times the largest.
    """
    if len(functions) != len(wrt):
        raise ShapeError("need as many functions as coordinates")
    pt = np.asarray(pt, dtype=float)
    if space is not None:
        space.check(pt)
    idx = [names.index(w) if isinstance(w, str) else int(w) for w in wrt]
    rows = []
    for f in functions:
        g = f.grad(pt) if hasattr(f, "grad") else SmoothFunction(f).grad(pt)
        rows.append(np.asarray(g)[idx])
    J = np.array(rows)
    sv = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0])) if sv[0] > 0 else 0
    norms = np.linalg.norm(J, axis=1)
    # a row that is roundoff next to the others (e.g. a finite-difference
    # gradient of a constant) is treated as zero rather than normalized up
    if norms.max() > 0 and np.all(norms > 1e-8 * norms.max()):
        ndet = float(np.linalg.det(J / norms[:, None]))
    else:
        ndet = 0.0
    return IndependenceReport(J, float(np.linalg.det(J)), ndet, sv, rank)


# -- Lie integrals ----------------------------------------------------------------


@dataclass
class LieIntegralPath:
    times: np.ndarray
    coeffs: np.ndarray

    def at(self, t):
        idx = np.searchsorted(self.times, t)
        for j in (idx - 1, idx):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= BOUNDARY_TOL * max(1.0, abs(t)):
                return self.coeffs[j]
        if t < self.times[0] or t > self.times[-1]:
            raise GridMismatchError(f"t={t} outside Lie-integral path [{self.times[0]}, {self.times[-1]}]")
        return np.array([np.interp(t, self.times, col) for col in self.coeffs.T])


def lie_integral_flow(sc, b, f0, t0, t1, method=None, t_eval=None):
    """Integrate ``df/dt = M(b(t)) f`` with ``M`` from :func:`adjoint_matrix`."""
    curves = [as_curve(c) for c in b]
    if len(curves) != sc.r or len(f0) != sc.r:
        raise ShapeError(f"need {sc.r} coefficient curves and {sc.r} initial coefficients")
    for c in curves:
        if not c.covers(t0, t1):
            raise ValueError(f"coefficient curve does not cover [{t0}, {t1}]")

    def rhs(t, f):
        return adjoint_matrix(sc, [c(t) for c in curves]) @ f

    traj = integrate_rhs(rhs, f0, t0, t1, method, t_eval=t_eval)
    return LieIntegralPath(traj.times, traj.states)


@dataclass
class LieIntegralReport:
    max_error: float
    tol: float
    initial: float
    samples: int = 0

    @property
    def passed(self):
        return self.max_error <= self.tol

    def to_json(self):
        return {"max_error": self.max_error, "tol": self.tol, "initial": self.initial,
                "samples": self.samples, "passed": self.passed}


def verify_lie_integral(system, path, traj, tol=1e-6):
    """Check ``sum_a f_a(t) h_a(x(t))`` stays at its initial value.

    Only the times present in both the path and the trajectory are used
    (for example a shared ``t_eval`` grid); when they share fewer than two
    the path is interpolated linearly onto every trajectory time. The error
    is relative to ``max(1, |initial|)``.
    """
    R = system.realization
    shared = np.isin(traj.times, path.times)
    keep = shared if shared.sum() >= 2 else np.ones(len(traj.times), dtype=bool)
    times, states = traj.times[keep], traj.states[keep]
    vals = R.hvalues(states)
    fs = np.array([path.at(t) for t in times])
    series = np.sum(fs * vals, axis=1)
    f0 = float(series[0])
    err = float(np.max(np.abs(series - f0)) / max(1.0, abs(f0)))
    return LieIntegralReport(err, tol, f0, int(len(times)))


# -- coproduct invariants -----------------------------------------------------------


def coproduct_invariants(casimir, realization, m):
    """The realized functions ``F^(k)`` (k = 2..m) and ``F^(2)_ij`` on ``N^m``.

    ``F^(2)_ij`` is the image of ``F^(2)`` under the transposition of copies
    ``i`` and ``j`` (so ``F^(2)_23`` lives on copies 1 and 3).
    """
    from .sympoly import coproduct, permute_copies, transposition

    out = {}
    c2 = embed(coproduct(casimir, 2), m) if m >= 2 else None
    for k in range(2, m + 1):
        out[f"F^({k})"] = RealizedPoly(embed(coproduct(casimir, k), m), realization, f"F^({k})")
    if m >= 3:
        for i, j in ((1, 3), (2, 3)):
            out[f"F^(2)_{i}{j}"] = RealizedPoly(
                permute_copies(c2, transposition(m, i, j)), realization, f"F^(2)_{i}{j}"
            )
    return out
