"""Closed-form superposition rules and their verification against integration.

Copy 1 is always the solution being reconstructed; copies 2, 3 (and 4 for
Riccati) are particular solutions. Constants come from the coproduct
invariants on copy pairs:

* Kummer-Schwarz: ``F^(2)(1,2) = k1 + 2 b0``, ``F^(2)(1,3) = k2 + 2 b0``
* Milne-Pinney: ``F^(2)(i,j) = k/4 + b/2`` on pairs (1,2), (1,3), (2,3)
* trig-su2: ``F^(2)(1,2) = k1``, ``F^(2)(1,3) = k2``
* Riccati: ``k`` is the cross-ratio of the four solutions.
"""

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .dynamics import RKF45, integrate
from .errors import (
    DegenerateInputError,
    DriftTooLargeError,
    IntegrationError,
    NegativeRadicandError,
    NoConvergenceError,
    ShapeError,
    SingularConstantsError,
)
from .realization import RealizedPoly
from .sympoly import SymPoly, coproduct

SPREAD_TOL = 1e-6
TRIG_RESIDUAL = 1e-10
_RADICAND_SLACK = 1e-12
BRANCH_RESIDUAL = 1e-6


@dataclass(frozen=True)
class BranchChoice:
    """One sign per ``+-`` of a closed-form rule."""

    signs: tuple

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"branch signs must be +1 or -1, got {self.signs}")

    def __getitem__(self, i):
        return self.signs[i]

    @classmethod
    def all(cls, k):
        return [cls(s) for s in product((1, -1), repeat=k)]


@dataclass
class SuperpositionConstants:
    rule: str
    values: dict
    params: dict = field(default_factory=dict)
    spread: float = 0.0

    def __getitem__(self, key):
        return self.values[key]

    def to_json(self):
        return {"rule": self.rule, "values": dict(self.values), "params": dict(self.params),
                "spread": self.spread}


def _sqrt(value, what):
    if value < 0:
        if value > -_RADICAND_SLACK * max(1.0, abs(value)):
            return 0.0
        raise NegativeRadicandError(f"negative radicand in {what}: {value:.6g}")
    return math.sqrt(value)


def _nonzero(value, what):
    if value == 0 or not math.isfinite(value):
        raise DegenerateInputError(f"zero denominator in {what}")
    return value


# -- Riccati ------------------------------------------------------------------


def riccati_rule(x1, x2, x3, k):
    """``x = [x1 (x3 - x2) + k x3 (x1 - x2)] / [(x3 - x2) + k (x1 - x2)]``."""
    if x1 == x2 or x2 == x3 or x1 == x3:
        raise DegenerateInputError("particular solutions must be pairwise distinct")
    den = (x3 - x2) + k * (x1 - x2)
    if den == 0:
        raise DegenerateInputError("zero denominator in the Riccati rule")
    return (x1 * (x3 - x2) + k * x3 * (x1 - x2)) / den


def cross_ratio(x1, x2, x3, x4):
    """``(x1 - x4)(x2 - x3) / ((x1 - x2)(x3 - x4))``."""
    den = (x1 - x2) * (x3 - x4)
    if den == 0:
        raise DegenerateInputError("coincident points in cross-ratio")
    return (x1 - x4) * (x2 - x3) / den


# -- Kummer-Schwarz -------------------------------------------------------------


def ks_invariant(x1, p1, x2, p2, b0):
    """Closed form of ``F^(2)`` on two copies."""
    return (b0 * (x1 + x2) ** 2 + (p1 * x1 ** 2 - p2 * x2 ** 2) ** 2) / (x1 * x2)


def ks_upsilon(x2, p2, x3, p3, k1, k2, b0):
    A = p2 * x2 ** 2 - p3 * x3 ** 2
    Bm = k1 * x2 - k2 * x3
    return (A ** 2 * (k1 * k2 * x2 * x3 - 2 * b0 ** 2 * (x2 ** 2 + x3 ** 2) - b0 * A ** 2)
            + b0 * x2 * x3 * Bm * (k2 * x2 - k1 * x3) - b0 ** 3 * (x2 ** 2 - x3 ** 2) ** 2)


def kummer_schwarz_rule(x2, p2, x3, p3, k1, k2, b0, branch):
    """Reconstruct ``(x1, p1)`` from two particular solutions.

    ``branch[0]`` picks the sign in front of ``2 A sqrt(Upsilon)`` (or of the
    inner root when ``b0 = 0``), ``branch[1]`` the sign in ``p1``.
    """
    sx, sp = branch[0], branch[1]
    A = p2 * x2 ** 2 - p3 * x3 ** 2
    Bp = k1 * x2 + k2 * x3
    Bm = k1 * x2 - k2 * x3
    if b0 == 0:
        root = _sqrt(k1 * k2 * x2 * x3, "sqrt(k1 k2 x2 x3)")
        S = Bp + sx * 2 * root
        _nonzero(Bm, "B-^2")
        x1 = A ** 2 * S / Bm ** 2
        inner = _sqrt(k1 * x2 * S, "sqrt(k1 x2 (B+ +- 2 sqrt(k1 k2 x2 x3)))")
        den = _nonzero(A ** 4 * S ** 2, "A^4 (B+ +- ...)^2")
        p1 = Bm ** 3 * (Bm * p2 * x2 ** 2 + sp * A * inner) / den
        _nonzero(x1, "x1")
        return x1, p1
    den = _nonzero(Bm ** 2 + 4 * b0 * A ** 2, "B-^2 + 4 b0 A^2")
    ups = ks_upsilon(x2, p2, x3, p3, k1, k2, b0)
    x1 = (A ** 2 * Bp + b0 * Bm * (x2 ** 2 - x3 ** 2) + sx * 2 * A * _sqrt(ups, "Upsilon")) / den
    _nonzero(x1, "x1")
    rad = _sqrt(k1 * x1 * x2 - b0 * (x1 ** 2 + x2 ** 2), "p1 radicand")
    p1 = (p2 * x2 ** 2 + sp * rad) / x1 ** 2
    return x1, p1


# -- Milne-Pinney / Smorodinsky-Winternitz n=1 --------------------------------------


def mp_invariant(x1, p1, x2, p2, b):
    """Closed form of ``F^(2)`` on two copies."""
    return 0.25 * (x1 * p2 - x2 * p1) ** 2 + b * (x1 ** 2 + x2 ** 2) ** 2 / (4 * x1 ** 2 * x2 ** 2)


def milne_pinney_mu(k1, k2, k3, b):
    den = 4 * b ** 2 - k3 ** 2
    if den == 0:
        raise SingularConstantsError("4 b^2 = k3^2: the mu constants are undefined")
    mu1 = (2 * b * k1 - k2 * k3) / den
    mu2 = (2 * b * k2 - k1 * k3) / den
    mu = 4 * (4 * b ** 3 + k1 * k2 * k3 - b * (k1 ** 2 + k2 ** 2 + k3 ** 2)) / den ** 2
    return mu1, mu2, mu


def milne_pinney_rule(x2, p2, x3, p3, k1, k2, k3, b, branch):
    """Reconstruct ``(x1, p1)``.

    ``branch[0]`` is the sign of the inner root in ``x1^2``, ``branch[1]``
    the sign in ``p1`` and ``branch[2]`` the sign of ``x1`` itself.
    """
    s_in, sp, sx = branch[0], branch[1], branch[2] if len(branch.signs) > 2 else 1
    mu1, mu2, mu = milne_pinney_mu(k1, k2, k3, b)
    inner = _sqrt(mu * (k3 * x2 ** 2 * x3 ** 2 - b * (x2 ** 4 + x3 ** 4)), "mu-scaled inner radicand")
    x1 = sx * _sqrt(mu1 * x2 ** 2 + mu2 * x3 ** 2 + s_in * inner, "x1^2")
    _nonzero(x1, "x1")
    _nonzero(x2, "x2")
    rad = _sqrt(k1 * x1 ** 2 * x2 ** 2 - b * (x1 ** 4 + x2 ** 4), "p1 radicand")
    p1 = (p2 * x1 ** 2 * x2 + sp * rad) / (x1 * x2 ** 2)
    return x1, p1


def branch_signature(rule_id, target, particulars, consts, params):
    """Signed square roots of the discriminants of the closed-form rules.

    Entry ``i`` is a smooth function of the four states whose sign is the
    ``i``-th branch sign of the rule and whose square is the matching
    radicand, so a branch can change only where an entry crosses zero.
    """
    x1, p1 = (float(v) for v in target)
    (x2, p2), (x3, p3) = (tuple(map(float, s)) for s in particulars)
    if rule_id == "kummer-schwarz":
        k1, k2, b0 = consts["k1"], consts["k2"], params["b0"]
        A = p2 * x2 ** 2 - p3 * x3 ** 2
        Bp, Bm = k1 * x2 + k2 * x3, k1 * x2 - k2 * x3
        if b0 == 0:
            return ((x1 * Bm ** 2 / A ** 2 - Bp) / 2, (p1 * x1 ** 2 - p2 * x2 ** 2) * Bm / A)
        qx = ((Bm ** 2 + 4 * b0 * A ** 2) * x1 - A ** 2 * Bp - b0 * Bm * (x2 ** 2 - x3 ** 2)) / (2 * A)
        return (qx, p1 * x1 ** 2 - p2 * x2 ** 2)
    if rule_id == "milne-pinney":
        mu1, mu2, _ = milne_pinney_mu(consts["k1"], consts["k2"], consts["k3"], params["b"])
        return (x1 ** 2 - mu1 * x2 ** 2 - mu2 * x3 ** 2, p1 * x1 * x2 ** 2 - p2 * x1 ** 2 * x2, x1)
    raise ValueError(f"rule {rule_id!r} has no closed-form branches")


# -- trig-su2 -----------------------------------------------------------------------


def su2_invariant(x1, p1, x2, p2):
    """Closed form of ``F^(2)`` on two copies."""
    return 2 * (math.sqrt(1 - x1 ** 2) * math.sqrt(1 - x2 ** 2) * math.cos(p1 - p2) + x1 * x2 + 1)


def _su2_system(z, x2, p2, x3, p3, k1, k2):
    x1, p1 = z
    s1 = math.sqrt(1 - x1 ** 2)
    s2, s3 = math.sqrt(1 - x2 ** 2), math.sqrt(1 - x3 ** 2)
    c2, c3 = math.cos(p1 - p2), math.cos(p1 - p3)
    res = np.array([
        2 * (s1 * s2 * c2 + x1 * x2 + 1) - k1,
        2 * (s1 * s3 * c3 + x1 * x3 + 1) - k2,
    ])
    jac = np.array([
        [2 * (-x1 / s1 * s2 * c2 + x2), -2 * s1 * s2 * math.sin(p1 - p2)],
        [2 * (-x1 / s1 * s3 * c3 + x3), -2 * s1 * s3 * math.sin(p1 - p3)],
    ])
    return res, jac


def _newton_su2(seed, args, max_iter=60):
    z = np.array(seed, dtype=float)
    for _ in range(max_iter):
        res, jac = _su2_system(z, *args)
        norm = np.max(np.abs(res))
        if norm < TRIG_RESIDUAL:
            return z, norm
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-6:
            cand = z + lam * step
            if abs(cand[0]) < 1:
                new_norm = np.max(np.abs(_su2_system(cand, *args)[0]))
                if new_norm < norm or lam < 1e-3:
                    break
            lam *= 0.5
        else:
            return None
        if abs(cand[0]) >= 1:
            return None
        z = cand
    res, _ = _su2_system(z, *args)
    norm = np.max(np.abs(res))
    return (z, norm) if norm < TRIG_RESIDUAL else None


def _wrap(angle):
    return (angle + math.pi) % (2 * math.pi) - math.pi


def trig_su2_roots(x2, p2, x3, p3, k1, k2, seeds=(), grid=(9, 12)):
    """All distinct roots found from the given seeds plus a coarse grid.

    ``p1`` is returned modulo ``2 pi`` relative to the seed it came from.
    """
    args = (x2, p2, x3, p3, k1, k2)
    starts = [tuple(s) for s in seeds]
    nx, np_ = grid
    for xi in np.linspace(-1, 1, nx + 2)[1:-1]:
        for pi in np.linspace(-math.pi, math.pi, np_, endpoint=False):
            starts.append((xi, pi + p2))
    roots = []
    for start in starts:
        out = _newton_su2(start, args)
        if out is None:
            continue
        z, _ = out
        if all(abs(z[0] - r[0]) > 1e-8 or abs(_wrap(z[1] - r[1])) > 1e-8 for r in roots):
            roots.append(z)
    return roots


def trig_su2_rule(x2, p2, x3, p3, k1, k2, seed=None):
    """Solve ``F^(2)(1,2) = k1``, ``F^(2)(1,3) = k2`` for ``(x1, p1)`` by Newton.

    With a ``seed`` point the root closest to it is returned; otherwise the
    first root found on the seeding grid.
    """
    if not (abs(x2) < 1 and abs(x3) < 1):
        raise DegenerateInputError("particular solutions must satisfy |x| < 1")
    seeds = [seed] if seed is not None else []
    if seed is not None:
        out = _newton_su2(seed, (x2, p2, x3, p3, k1, k2))
        if out is not None:
            return float(out[0][0]), float(out[0][1])
    roots = trig_su2_roots(x2, p2, x3, p3, k1, k2, seeds)
    if not roots:
        raise NoConvergenceError("Newton iteration failed from every seed")
    if seed is None:
        z = roots[0]
    else:
        z = min(roots, key=lambda r: abs(r[0] - seed[0]) + abs(_wrap(r[1] - seed[1])))
        z = np.array([z[0], seed[1] + _wrap(z[1] - seed[1])])
    return float(z[0]), float(z[1])


# -- rule registry ----------------------------------------------------------------


@dataclass(frozen=True)
class RuleSpec:
    name: str
    system: str
    n_particular: int
    state_dim: int
    angular: bool = False


RULES = {
    "riccati": RuleSpec("riccati", "riccati", 3, 1),
    "kummer-schwarz": RuleSpec("kummer-schwarz", "kummer-schwarz", 2, 2),
    "milne-pinney": RuleSpec("milne-pinney", "smorodinsky-winternitz", 2, 2),
    "trig-su2": RuleSpec("trig-su2", "trig-su2", 2, 2, angular=True),
}

_CASIMIRS = {"sl2": "v1*v3 - v2^2", "su2": "v1^2 + v2^2 + v3^2"}


def rule_spec(rule_id):
    if rule_id not in RULES:
        raise ValueError(f"unknown rule {rule_id!r}; known: {', '.join(sorted(RULES))}")
    return RULES[rule_id]


def pair_invariant(realization, casimir_name):
    """Realized ``F^(2) = D^(2)(Delta(C))`` on two copies."""
    C = SymPoly.parse(_CASIMIRS[casimir_name], 3)
    return RealizedPoly(coproduct(C, 2), realization, "F^(2)")


def _constants_at(rule_id, states, params, invariant):
    """Constants from the copy states (copy 1 first) at one instant."""
    if rule_id == "riccati":
        x, x1, x2, x3 = (float(s[0]) for s in states)
        return {"k": cross_ratio(x1, x2, x3, x)}
    s1, s2, s3 = (np.asarray(s, dtype=float) for s in states)
    F12 = float(invariant(np.concatenate([s1, s2])))
    F13 = float(invariant(np.concatenate([s1, s3])))
    if rule_id == "kummer-schwarz":
        b0 = params["b0"]
        return {"k1": F12 - 2 * b0, "k2": F13 - 2 * b0}
    if rule_id == "milne-pinney":
        b = params["b"]
        F23 = float(invariant(np.concatenate([s2, s3])))
        return {"k1": 4 * F12 - 2 * b, "k2": 4 * F13 - 2 * b, "k3": 4 * F23 - 2 * b}
    return {"k1": F12, "k2": F13}


def _rule_invariant(rule_id, realization):
    if rule_id == "riccati":
        return None
    return pair_invariant(realization, "su2" if rule_id == "trig-su2" else "sl2")


def extract_constants(rule_id, trajectories, realization=None, t_samples=None, params=None):
    """Constants of a superposition rule from integrated solutions.

    ``trajectories`` lists copy 1 (the target) followed by the particular
    solutions. Constants are evaluated at three sample times (default:
    first, middle and last of the times stored in every trajectory) and
    averaged; a relative spread above ``1e-6``
    raises :class:`DriftTooLargeError`.
    """
    spec = rule_spec(rule_id)
    params = dict(params or {})
    if len(trajectories) != spec.n_particular + 1:
        raise ShapeError(f"{rule_id} needs {spec.n_particular + 1} solutions, got {len(trajectories)}")
    if t_samples is None:
        times = trajectories[0].times
        for tr in trajectories[1:]:
            times = np.intersect1d(times, tr.times)
        if len(times) < 3:
            raise ShapeError("trajectories share fewer than 3 sample times; pass t_samples")
        t_samples = (times[0], times[len(times) // 2], times[-1])
    invariant = _rule_invariant(rule_id, realization)
    samples = [
        _constants_at(rule_id, [tr.at(t) for tr in trajectories], params, invariant) for t in t_samples
    ]
    values, spread = {}, 0.0
    for key in samples[0]:
        vals = np.array([s[key] for s in samples])
        mean = float(vals.mean())
        rel = float((vals.max() - vals.min()) / max(1.0, abs(mean)))
        spread = max(spread, rel)
        values[key] = mean
    if spread > SPREAD_TOL:
        raise DriftTooLargeError(f"{rule_id} constants drift by {spread:.3g} across samples")
    return SuperpositionConstants(rule_id, values, params, spread)


def constants_from_states(rule_id, states, realization=None, params=None):
    """Constants from one instant (copy 1 first); no spread check."""
    params = dict(params or {})
    return SuperpositionConstants(
        rule_id, _constants_at(rule_id, states, params, _rule_invariant(rule_id, realization)), params
    )


def _candidates(rule_id, particulars, consts, params, previous):
    """All branch reconstructions at one instant as ``{branch: state}``."""
    if rule_id == "riccati":
        x1, x2, x3 = (float(s[0]) for s in particulars)
        return {(): np.array([riccati_rule(x1, x2, x3, consts["k"])])}
    (x2, p2), (x3, p3) = (tuple(map(float, s)) for s in particulars)
    out = {}
    if rule_id == "trig-su2":
        x1, p1 = trig_su2_rule(x2, p2, x3, p3, consts["k1"], consts["k2"], seed=tuple(previous))
        return {(): np.array([x1, p1])}
    if rule_id == "kummer-schwarz":
        branches = BranchChoice.all(2)
        fn = lambda br: kummer_schwarz_rule(x2, p2, x3, p3, consts["k1"], consts["k2"], params["b0"], br)
    else:
        branches = BranchChoice.all(3)
        fn = lambda br: milne_pinney_rule(x2, p2, x3, p3, consts["k1"], consts["k2"], consts["k3"],
                                          params["b"], br)
    errors = []
    for br in branches:
        try:
            out[br.signs] = np.array(fn(br))
        except DegenerateInputError as exc:
            errors.append(exc)
    if not out:
        raise errors[0]
    return out


def _distance(a, b, angular):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if angular:
        d[1::2] = (d[1::2] + math.pi) % (2 * math.pi) - math.pi
    return float(np.max(np.abs(d)))


def _residual(rule_id, cand, particulars, consts, params):
    """Residual of the defining invariant equations at a candidate."""
    if rule_id == "kummer-schwarz":
        (x2, p2), (x3, p3) = particulars
        b0 = params["b0"]
        return max(abs(ks_invariant(*cand, x2, p2, b0) - (consts["k1"] + 2 * b0)),
                   abs(ks_invariant(*cand, x3, p3, b0) - (consts["k2"] + 2 * b0)))
    if rule_id == "milne-pinney":
        (x2, p2), (x3, p3) = particulars
        b = params["b"]
        return max(abs(mp_invariant(*cand, x2, p2, b) - (consts["k1"] / 4 + b / 2)),
                   abs(mp_invariant(*cand, x3, p3, b) - (consts["k2"] / 4 + b / 2)))
    return 0.0


@dataclass
class VerificationReport:
    rule: str
    params: dict
    n_particular: int
    times: np.ndarray
    errors: np.ndarray
    branches: list
    branch_switch_times: list
    constants: SuperpositionConstants
    tol: float
    reconstructed: np.ndarray = None
    truth: np.ndarray = None
    particulars: np.ndarray = None
    per_time_errors_csv_path: str = None

    @property
    def max_error(self):
        return float(np.max(self.errors))

    @property
    def passed(self):
        return self.max_error < self.tol

    def write_errors_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,error\n")
            for t, e in zip(self.times, self.errors):
                fh.write(f"{float(t)!r},{float(e)!r}\n")
        self.per_time_errors_csv_path = str(path)

    def to_json(self):
        return {
            "rule": self.rule,
            "params": self.params,
            "n_particular": self.n_particular,
            "max_error": self.max_error,
            "tol": self.tol,
            "passed": self.passed,
            "constants": self.constants.to_json(),
            "branch_switch_times": [float(t) for t in self.branch_switch_times],
            "per_time_errors_csv_path": self.per_time_errors_csv_path,
        }


def _system_params(rule_id, system):
    if rule_id == "kummer-schwarz":
        return {"b0": float(system.params["b0"])}
    if rule_id == "milne-pinney":
        b = system.params["b"]
        if not np.isscalar(b) or int(system.params.get("n", 1)) != 1:
            raise ShapeError("the Milne-Pinney rule needs the n = 1 system")
        return {"b": float(b)}
    return {}


# Sampling boxes for random initial data, narrower than the systems' own
# boxes so that most draws survive a few time units without blowing up.
_RULE_BOXES = {
    "riccati": ((-1.0,), (0.5,)),
    "kummer-schwarz": ((0.8, -0.3), (1.4, 0.3)),
    "milne-pinney": ((0.7, -0.3), (1.4, 0.3)),
    "trig-su2": ((-0.6, -math.pi), (0.6, math.pi)),
}
MIN_SEPARATION = 0.1
MAX_REDRAWS = 20


def sample_initial_states(rule_id, rng, count):
    """Draw ``count`` initial states from the rule's box, pairwise separated by ``0.1``."""
    lo, hi = (np.asarray(b) for b in _RULE_BOXES[rule_spec(rule_id).name])
    out = []
    while len(out) < count:
        cand = rng.uniform(lo, hi)
        if all(np.max(np.abs(cand - o)) >= MIN_SEPARATION for o in out):
            out.append(cand)
    return np.array(out)


def _integrate_all(system, states, t_grid, method):
    return [integrate(system, s, t_grid[0], t_grid[-1], method, t_eval=t_grid) for s in states]


def verify_rule(system, rule_id, t_grid, initial_states=None, seed=42, tol=1e-5, method=None,
                sampler=None):
    """Reconstruct one integrated solution from particular ones along ``t_grid``.

    ``initial_states`` lists the target first; otherwise the target and the
    particular solutions are drawn with ``numpy.random.default_rng(seed)``
    from :func:`sample_initial_states` (or from ``sampler(rng, count)``);
    a draw whose integration stops early is replaced, up to 20 times.
    At each grid time every branch is evaluated. Branches that fail the
    defining invariant equations are discarded and, among the rest, the one
    closest to the secant continuation of the last two accepted points is
    kept, starting from the known target state.
    """
    spec = rule_spec(rule_id)
    if system.name != spec.system:
        raise ShapeError(f"rule {rule_id} needs the {spec.system} system, got {system.name}")
    params = _system_params(rule_id, system)
    t_grid = np.asarray(t_grid, dtype=float)
    method = method or RKF45(1e-12, 1e-12)
    if initial_states is None:
        rng = np.random.default_rng(seed)
        draw = sampler or (lambda rng, k: sample_initial_states(rule_id, rng, k))
        for attempt in range(MAX_REDRAWS):
            initial_states = draw(rng, spec.n_particular + 1)
            try:
                trajs = _integrate_all(system, initial_states, t_grid, method)
                break
            except IntegrationError:
                if attempt == MAX_REDRAWS - 1:
                    raise
    else:
        if len(initial_states) != spec.n_particular + 1:
            raise ShapeError(f"{rule_id} needs {spec.n_particular + 1} initial states")
        trajs = _integrate_all(system, initial_states, t_grid, method)
    initial_states = [np.asarray(s, dtype=float) for s in initial_states]
    realization = getattr(system, "realization", None)
    consts = extract_constants(rule_id, trajs, realization, params=params)

    previous = initial_states[0]
    before = None
    prev_t = None
    prev_branch = None
    errors, branches, switches, recon = [], [], [], []
    truth = np.array([trajs[0].at(t) for t in t_grid])
    for t, true_state in zip(t_grid, truth):
        particulars = [tr.at(t) for tr in trajs[1:]]
        predicted = previous
        if before is not None:
            # secant continuation from the last two accepted points
            predicted = previous + (previous - before[1]) * (t - prev_t) / (prev_t - before[0])
        try:
            cands = _candidates(rule_id, particulars, consts.values, params, predicted)
        except DegenerateInputError as exc:
            raise type(exc)(f"at t={t:.6g}: {exc}") from exc
        # mixed-sign branches may solve only one invariant equation; drop them
        scale = max(1.0, *(abs(v) for v in consts.values.values()))
        exact = {br: st for br, st in cands.items()
                 if _residual(rule_id, st, particulars, consts.values, params) <= BRANCH_RESIDUAL * scale}
        branch, state = min((exact or cands).items(),
                            key=lambda kv: _distance(kv[1], predicted, spec.angular))
        if prev_branch is not None and branch != prev_branch:
            switches.append(float(t))
        prev_branch = branch
        if prev_t is not None:
            before = (prev_t, previous)
        prev_t, previous = float(t), state
        branches.append(branch)
        recon.append(state)
        errors.append(_distance(state, true_state, spec.angular))
    return VerificationReport(
        rule_id, params, spec.n_particular, t_grid, np.array(errors), branches, switches, consts, tol,
        np.array(recon), truth,
        np.array([[tr.at(t) for tr in trajs[1:]] for t in t_grid]),
    )
