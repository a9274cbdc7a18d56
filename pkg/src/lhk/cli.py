"""Command-line front end ``lhk``.

Every command prints a JSON report (sorted keys, shortest round-trip
floats) and optionally writes it with ``--out``. Exit codes: 0 pass,
1 verification failure, 2 usage error, 3 domain or numeric error.
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .algebra import builtin, catalog_names, load_json, validate
from .dynamics import RK4, RKF45, coproduct_invariants, integrate, lie_integral_flow
from .dynamics import monitor_invariants, verify_lie_integral
from .errors import CatalogError, LHKError, ParseError, ShapeError
from .realization import check_homomorphism
from .superposition import RULES, verify_rule
from .sympoly import SymPoly, find_casimirs, is_casimir, poisson_bracket
from .systems import catalog, from_descriptor, prolong, system_doc, system_names

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3

# errors caused by what the user asked for rather than by the numerics
_USAGE_ERRORS = (CatalogError, ParseError, ShapeError)

_SYSTEM_PARAMS = ("n", "b", "b0", "b1", "omega", "a0", "a1", "a2", "Bx", "By", "Bz", "bivector")

_SYSTEM_ALGEBRA = {
    "ermakov": "sl2",
    "smorodinsky-winternitz": "sl2",
    "kummer-schwarz": "sl2",
    "trig-su2": "su2",
}

_SYSTEM_RULE = {spec.system: name for name, spec in RULES.items()}


class UsageError(Exception):
    pass


# -- output -------------------------------------------------------------------


def dumps(report):
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def atomic_write(path, writer):
    """Write through ``writer(tmp_path)`` then rename over ``path``."""
    path = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(prefix=".lhk-", dir=os.path.dirname(path))
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    def write(tmp):
        with open(tmp, "w") as fh:
            fh.write(text)

    atomic_write(path, write)


# -- argument helpers ------------------------------------------------------------


def _floats(text, what):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def _param_value(key, text):
    if isinstance(text, (int, float, list, dict)):
        return text
    if key == "n":
        return int(text)
    if key == "bivector":
        return text
    if key == "b" and "," in str(text):
        return _floats(text, "--b")
    try:
        return float(text)
    except ValueError:
        return text


def _system_from_args(args, m=None):
    if args.descriptor:
        with open(args.descriptor) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{args.descriptor}: {exc}") from exc
        if m is not None:
            data = {**data, "m": m}
        return from_descriptor(data)
    if not args.system:
        raise UsageError("a --system name or a --descriptor file is required")
    params = {k: _param_value(k, getattr(args, k)) for k in _SYSTEM_PARAMS if getattr(args, k, None) is not None}
    sys_ = catalog(args.system, **params)
    return prolong(sys_, m) if m and m > 1 else sys_


def _method(args):
    if args.method == "rk4":
        return RK4(args.h)
    return RKF45(args.atol, args.rtol)


def _seed(args):
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("LHK_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"LHK_SEED must be an integer, got {env!r}") from None
    return 42


def _initial_state(args, system, rng):
    if args.x0 is None:
        return system.space.sample(rng, 1)[0]
    x0 = np.array(_floats(args.x0, "--x0"))
    n = system.space.n
    if len(x0) == n // 2 and n % 2 == 0 and getattr(system, "m", 1) == 1 and n > 1:
        # positions only: momenta start at zero
        x0 = np.concatenate([x0, np.zeros(n - len(x0))])
    if len(x0) != n:
        raise UsageError(f"--x0 needs {n} values for {system.name}, got {len(x0)}")
    return x0


def _time_grid(args):
    if not args.tmax > args.t0:
        raise UsageError(f"need tmax > t0, got t0={args.t0}, tmax={args.tmax}")
    return np.linspace(args.t0, args.tmax, args.npoints)


def _check_tol(value, name):
    if not value > 0:
        raise UsageError(f"{name} must be positive, got {value}")


# -- commands ---------------------------------------------------------------------


def cmd_algebra_validate(args):
    sc = load_json(args.file)
    violations = validate(sc)
    report = {
        "file": args.file,
        "r": sc.r,
        "valid": not violations,
        "violations": [
            {"identity": kind, "indices": list(idx), "value": str(val)} for kind, idx, val in violations
        ],
    }
    return report, EXIT_PASS if not violations else EXIT_FAIL


def cmd_algebra_list(args):
    algebras = []
    for name in catalog_names():
        entry = builtin(name)
        algebras.append({"name": name, "r": entry.sc.r, "notes": entry.notes, "constants": entry.sc.to_json()})
    return {"algebras": algebras}, EXIT_PASS


def cmd_casimir_check(args):
    sc = builtin(args.algebra).sc
    poly = SymPoly.parse(args.poly, sc.r)
    brackets = {
        f"v{a}": poisson_bracket(poly, SymPoly.gen(a, sc.r), sc).to_text() for a in range(1, sc.r + 1)
    }
    ok = is_casimir(poly, sc)
    report = {"algebra": args.algebra, "poly": poly.to_text(), "casimir": ok, "brackets": brackets}
    return report, EXIT_PASS if ok else EXIT_FAIL


def cmd_casimir_find(args):
    sc = builtin(args.algebra).sc
    basis = find_casimirs(sc, args.dmax, cap=args.cap)
    report = {
        "algebra": args.algebra,
        "dmax": args.dmax,
        "dimension": len(basis),
        "basis": [p.to_text() for p in basis],
    }
    return report, EXIT_PASS


def cmd_system_list(args):
    return {"systems": [{"name": n, "doc": system_doc(n)} for n in system_names()]}, EXIT_PASS


def cmd_system_show(args):
    sys_ = catalog(args.name)
    report = {
        "name": sys_.name,
        "doc": system_doc(args.name),
        "dimension": sys_.space.n,
        "coordinates": list(sys_.space.names),
        "descriptor": sys_.descriptor(),
        "notes": sys_.notes,
    }
    return report, EXIT_PASS


def cmd_simulate(args):
    system = _system_from_args(args, args.m)
    rng = np.random.default_rng(_seed(args))
    x0 = _initial_state(args, system, rng)
    if not args.tmax > args.t0:
        raise UsageError(f"need tmax > t0, got t0={args.t0}, tmax={args.tmax}")
    traj = integrate(system, x0, args.t0, args.tmax, _method(args))
    report = {
        "system": system.descriptor(),
        "x0": x0,
        "t0": args.t0,
        "t1": float(traj.times[-1]),
        "steps": len(traj) - 1,
        "final": traj.final,
        "integrator": traj.metadata,
    }
    if args.csv:
        atomic_write(args.csv, traj.to_csv)
        report["csv"] = args.csv
    return report, EXIT_PASS


def _invariants(system, m):
    base = system.base if hasattr(system, "base") else system
    algebra = _SYSTEM_ALGEBRA.get(base.name)
    if algebra is None:
        raise UsageError(f"no Casimir-based invariants are defined for {base.name}")
    casimir = {"sl2": "v1*v3 - v2^2", "su2": "v1^2 + v2^2 + v3^2"}[algebra]
    R = base.realization
    invs = coproduct_invariants(SymPoly.parse(casimir, 3), R, m)
    return invs


def cmd_verify_constants(args):
    _check_tol(args.tol, "--tol")
    if args.m < 2:
        raise UsageError("verify-constants needs --m >= 2")
    system = _system_from_args(args, args.m)
    rng = np.random.default_rng(_seed(args))
    x0 = _initial_state(args, system, rng)
    if not args.tmax > args.t0:
        raise UsageError(f"need tmax > t0, got t0={args.t0}, tmax={args.tmax}")
    traj = integrate(system, x0, args.t0, args.tmax, _method(args))
    invs = _invariants(system, args.m)
    drift = monitor_invariants(traj, list(invs.values()), list(invs))
    passed = drift.passed(args.tol)
    report = {
        "system": system.descriptor(),
        "x0": x0,
        "tol": args.tol,
        "steps": len(traj) - 1,
        "drift": drift.to_json(),
        "max_drift": drift.max_drift(),
        "passed": passed,
    }
    return report, EXIT_PASS if passed else EXIT_FAIL


def cmd_superpose_verify(args):
    _check_tol(args.tol, "--tol")
    system = _system_from_args(args)
    rule = args.rule or _SYSTEM_RULE.get(system.name)
    if rule is None:
        raise UsageError(f"no superposition rule is available for {system.name}")
    states = None
    if args.states:
        states = [_floats(s, "--states") for s in args.states.split(";")]
    result = verify_rule(system, rule, _time_grid(args), initial_states=states, seed=_seed(args), tol=args.tol)
    if args.csv:
        atomic_write(args.csv, result.write_errors_csv)
        result.per_time_errors_csv_path = args.csv
    report = result.to_json()
    return report, EXIT_PASS if result.passed else EXIT_FAIL


def cmd_homomorphism(args):
    _check_tol(args.tol, "--tol")
    system = _system_from_args(args)
    R = getattr(system, "realization", None)
    if R is None:
        raise UsageError(f"{system.name} has no Lie-Hamiltonian realization")
    rep = check_homomorphism(R, samples=args.samples, tol=args.tol, rng=np.random.default_rng(_seed(args)))
    report = {"system": system.descriptor(), **rep.to_json()}
    return report, EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_lie_integral(args):
    _check_tol(args.tol, "--tol")
    system = _system_from_args(args)
    R = getattr(system, "realization", None)
    if R is None:
        raise UsageError(f"{system.name} has no Lie-Hamiltonian realization")
    rng = np.random.default_rng(_seed(args))
    f0 = np.array(_floats(args.f0, "--f0")) if args.f0 else rng.uniform(-1, 1, R.r)
    if len(f0) != R.r:
        raise UsageError(f"--f0 needs {R.r} values")
    x0 = _initial_state(args, system, rng)
    grid = _time_grid(args)
    flow_b = system.b
    if args.flow_b:
        flow_b = [_param_value("", c.strip()) for c in args.flow_b.split(";")]
    method = _method(args)
    path = lie_integral_flow(R.sc, flow_b, f0, args.t0, args.tmax, method, t_eval=grid)
    traj = integrate(system, x0, args.t0, args.tmax, method, t_eval=grid)
    rep = verify_lie_integral(system, path, traj, args.tol)
    report = {
        "system": system.descriptor(),
        "f0": f0,
        "x0": x0,
        "f_final": path.coeffs[-1],
        **rep.to_json(),
    }
    return report, EXIT_PASS if rep.passed else EXIT_FAIL


# -- parser -----------------------------------------------------------------------


def _add_system_flags(p, with_m=False):
    p.add_argument("--system", help="catalog system name")
    p.add_argument("--descriptor", help="system descriptor JSON file")
    p.add_argument("--n", type=int, help="number of degrees of freedom (smorodinsky-winternitz)")
    p.add_argument("--b", help="constant b (ermakov, smorodinsky-winternitz; comma list for n > 1)")
    p.add_argument("--b0", help="constant b0 (kummer-schwarz)")
    p.add_argument("--b1", help="coefficient curve b1(t) (kummer-schwarz)")
    p.add_argument("--omega", help="frequency curve omega(t)")
    for k in ("a0", "a1", "a2"):
        p.add_argument(f"--{k}", help=f"coefficient curve {k}(t) (riccati family)")
    for k in ("Bx", "By", "Bz"):
        p.add_argument(f"--{k}", help=f"field component {k}(t) (trig-su2)")
    p.add_argument("--bivector", choices=("first", "second"), help="riccati4 Poisson structure")
    if with_m:
        p.add_argument("--m", type=int, default=1, help="number of copies (diagonal prolongation)")


def _add_integration_flags(p, tmax=5.0):
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=tmax)
    p.add_argument("--method", choices=("rkf45", "rk4"), default="rkf45")
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--h", type=float, default=1e-3, help="rk4 step")
    p.add_argument("--x0", help="initial state, comma separated")


def build_parser():
    parser = argparse.ArgumentParser(prog="lhk", description="Lie-Hamilton systems toolkit")
    parser.add_argument("--version", action="version", version=f"lhk {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override flags")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $LHK_SEED or 42)")
    common.add_argument("--out", help="also write the JSON report to this path")
    sub = parser.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("algebra", help="structure-constant files and the built-in catalog")
    alg_sub = alg.add_subparsers(dest="action", required=True)
    p = alg_sub.add_parser("validate", parents=[common], help="check antisymmetry and Jacobi exactly")
    p.add_argument("file")
    p.set_defaults(func=cmd_algebra_validate)
    p = alg_sub.add_parser("list", parents=[common], help="list built-in algebras")
    p.set_defaults(func=cmd_algebra_list)

    cas = sub.add_parser("casimir", help="Casimir elements of the symmetric algebra")
    cas_sub = cas.add_subparsers(dest="action", required=True)
    p = cas_sub.add_parser("check", parents=[common], help="test whether a polynomial is a Casimir")
    p.add_argument("--algebra", required=True)
    p.add_argument("--poly", required=True)
    p.set_defaults(func=cmd_casimir_check)
    p = cas_sub.add_parser("find", parents=[common], help="basis of Casimirs up to a degree")
    p.add_argument("--algebra", required=True)
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--cap", type=int, default=5000, help="largest number of unknowns allowed")
    p.set_defaults(func=cmd_casimir_find)

    sys_ = sub.add_parser("system", help="catalog of Lie systems")
    sys_sub = sys_.add_subparsers(dest="action", required=True)
    p = sys_sub.add_parser("list", parents=[common])
    p.set_defaults(func=cmd_system_list)
    p = sys_sub.add_parser("show", parents=[common])
    p.add_argument("name")
    p.set_defaults(func=cmd_system_show)

    p = sub.add_parser("simulate", parents=[common], help="integrate a (prolonged) system")
    _add_system_flags(p, with_m=True)
    _add_integration_flags(p)
    p.add_argument("--csv", help="write the trajectory CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-constants", parents=[common], help="drift of coproduct invariants")
    _add_system_flags(p, with_m=True)
    _add_integration_flags(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify_constants, m=3)

    sup = sub.add_parser("superpose", help="superposition rules")
    sup_sub = sup.add_subparsers(dest="action", required=True)
    p = sup_sub.add_parser("verify", parents=[common], help="reconstruct a solution from particular ones")
    _add_system_flags(p)
    p.add_argument("--rule", choices=sorted(RULES))
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=5.0)
    p.add_argument("--npoints", type=int, default=201)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--states", help="target then particular initial states, e.g. '1,0.3;0.8,-0.2;1.3,0.1'")
    p.add_argument("--csv", help="write per-time reconstruction errors here")
    p.set_defaults(func=cmd_superpose_verify)

    p = sub.add_parser("homomorphism", parents=[common], help="check h_a realize the structure constants")
    _add_system_flags(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_homomorphism)

    p = sub.add_parser("lie-integral", parents=[common], help="verify a Lie integral along a trajectory")
    _add_system_flags(p)
    _add_integration_flags(p, tmax=3.0)
    p.add_argument("--f0", help="initial coefficients, comma separated")
    p.add_argument("--flow-b", help="coefficient curves for the flow, ';' separated (default: the system's)")
    p.add_argument("--npoints", type=int, default=61)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_lie_integral)
    return parser


def _apply_config(parser, args):
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    for key, value in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("func", "command", "action", "config"):
            raise UsageError(f"unknown config key {key!r} for this command")
        setattr(args, attr, value)
    return args


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        args = _apply_config(parser, args)
        report, code = args.func(args)
        report = {"status": "pass" if code == EXIT_PASS else "fail", **report}
    except (UsageError, *_USAGE_ERRORS) as exc:
        report, code = _error_report(exc), EXIT_USAGE
    except FileNotFoundError as exc:
        report, code = _error_report(exc), EXIT_USAGE
    except LHKError as exc:
        report, code = _error_report(exc), EXIT_ERROR
    except (ValueError, ArithmeticError) as exc:
        report, code = _error_report(exc), EXIT_ERROR
    text = dumps(report)
    sys.stdout.write(text)
    if code in (EXIT_USAGE, EXIT_ERROR):
        sys.stderr.write(f"lhk: {report['error']['kind']}: {report['error']['message']}\n")
    out = getattr(args, "out", None)
    if out:
        atomic_write_text(out, text)
    return code


def _error_report(exc):
    kind = exc.kind if isinstance(exc, LHKError) else type(exc).__name__
    err = {"kind": kind, "message": str(exc)}
    if getattr(exc, "coordinate", None):
        err["coordinate"] = exc.coordinate
    if getattr(exc, "t", None) is not None:
        err["t"] = float(exc.t)
    return {"status": "error", "error": err}


if __name__ == "__main__":
    sys.exit(main())
