import numpy as np
import pytest

from lhk.algebra import StructureConstants, builtin
from lhk.dynamics import (
    RK4,
    RKF45,
    Trajectory,
    as_method,
    coproduct_invariants,
    independence_check,
    integrate,
    integrate_rhs,
    involution_check,
    lie_integral_flow,
    monitor_invariants,
    verify_lie_integral,
)
from lhk.errors import DomainExitError, GridMismatchError, IntegrationError, ShapeError
from lhk.realization import RealizedPoly, SmoothFunction, bracket_num
from lhk.sympoly import SymPoly, coproduct, embed, permute_copies, transposition
from lhk.systems import catalog, prolong

C_SL2 = SymPoly.parse("v1*v3 - v2^2", 3)
C_SU2 = SymPoly.parse("v1^2 + v2^2 + v3^2", 3)
KS_X0 = [1.0, 0.2, 1.3, -0.1, 0.8, 0.3]


# -- integrators ----------------------------------------------------------------


def oscillator():
    return catalog("smorodinsky-winternitz", n=1, b=0.0, omega=1.0)


def test_rk4_period():
    traj = integrate(oscillator(), [1.0, 0.0], 0.0, 2 * np.pi, RK4(1e-3))
    assert traj.times[-1] == pytest.approx(2 * np.pi, abs=1e-15)
    np.testing.assert_allclose(traj.final, [1.0, 0.0], atol=1e-8)


def test_rk4_order():
    def err(h):
        return np.linalg.norm(integrate(oscillator(), [1.0, 0.0], 0.0, 2.0, RK4(h)).final
                              - [np.cos(2.0), -np.sin(2.0)])

    factor = err(0.02) / err(0.01)
    assert 12 <= factor <= 20


def test_riccati_blow_up_aborts_before_one():
    sys = catalog("riccati", a0=0.0, a1=0.0, a2=1.0)
    with pytest.raises(IntegrationError) as info:
        integrate(sys, [1.0], 0.0, 2.0, RKF45(1e-10, 1e-10))
    traj = info.value.trajectory
    assert traj is not None and traj.times[-1] < 1.0
    ok = traj.times < 0.9
    np.testing.assert_allclose(traj.states[ok, 0], 1 / (1 - traj.times[ok]), rtol=1e-7)


def test_zero_field_constant_trajectory():
    sys = catalog("kummer-schwarz").with_coefficients([0.0, 0.0, 0.0])
    traj = integrate(sys, [1.2, 0.4], 0.0, 1.0, RK4(0.1))
    assert np.all(traj.states == [1.2, 0.4])


def test_t_eval_grid_is_hit_exactly():
    grid = np.linspace(0.0, 1.0, 11)
    traj = integrate(oscillator(), [1.0, 0.0], 0.0, 1.0, RKF45(), t_eval=grid)
    assert np.all(np.isin(grid, traj.times))
    assert np.all(np.diff(traj.times) > 0)


def test_domain_exit_names_last_state():
    sys = catalog("trig-su2", Bx=0.0, By=1.0, Bz=0.0)
    with pytest.raises(DomainExitError) as info:
        integrate(sys, [0.9, 0.0], 0.0, 10.0, RKF45(1e-10, 1e-10))
    err = info.value
    assert abs(err.state[0]) < 1
    assert sys.space.in_domain(err.trajectory.final)


def test_as_method():
    assert as_method(None) == RKF45()
    assert as_method("rk4") == RK4()
    with pytest.raises(ValueError):
        as_method("euler")


def test_rkf45_tightening_reduces_drift():
    sys = prolong(catalog("kummer-schwarz", b0=1.0, b1="cos"), 3)
    F = coproduct_invariants(C_SL2, sys.base.realization, 3)
    drifts = []
    for tol in (1e-6, 1e-8):
        traj = integrate(sys, KS_X0, 0.0, 5.0, RKF45(tol, tol))
        drifts.append(monitor_invariants(traj, list(F.values())).max_drift())
    assert drifts[0] >= 10 * drifts[1]


# -- trajectories ------------------------------------------------------------------


def test_trajectory_csv_round_trip(tmp_path):
    traj = integrate(catalog("kummer-schwarz"), [1.0, 0.2], 0.0, 0.5, RKF45())
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    assert path.read_text().splitlines()[0] == "t,x,p"
    back = Trajectory.from_csv(path)
    np.testing.assert_array_equal(back.times, traj.times)
    np.testing.assert_array_equal(back.states, traj.states)
    assert back.names == ("x", "p")


def test_trajectory_at_and_resample():
    traj = Trajectory([0.0, 1.0, 2.0], [[0.0], [2.0], [4.0]])
    assert traj.at(1.0)[0] == 2.0
    assert traj.at(1.5)[0] == 3.0
    with pytest.raises(GridMismatchError):
        traj.at(3.0)
    assert traj.resample([0.5, 1.5]).states[:, 0].tolist() == [1.0, 3.0]
    with pytest.raises(ShapeError):
        Trajectory([0.0, 1.0], [1.0, 2.0])


# -- invariants -------------------------------------------------------------------


def test_ks_invariants_constant():
    sys = prolong(catalog("kummer-schwarz", b0=1.0, b1="cos"), 3)
    traj = integrate(sys, KS_X0, 0.0, 5.0, RKF45(1e-10, 1e-10))
    F = coproduct_invariants(C_SL2, sys.base.realization, 3)
    assert set(F) == {"F^(2)", "F^(3)", "F^(2)_13", "F^(2)_23"}
    report = monitor_invariants(traj, list(F.values()))
    assert report.passed(1e-6), report.to_json()


def test_ks_single_copy_casimir_is_b0():
    sys = catalog("kummer-schwarz", b0=1.7, b1="cos")
    traj = integrate(sys, [1.0, 0.2], 0.0, 3.0, RKF45())
    report = monitor_invariants(traj, [RealizedPoly(C_SL2, sys.realization, "C")])
    assert report["C"]["initial"] == pytest.approx(1.7, abs=1e-14)
    assert report["C"]["max_drift"] < 1e-13


def test_lewis_riesenfeld_invariant():
    b = 1.0
    sys = catalog("ermakov", b=b, omega="1+t^2")
    traj = integrate(sys, [1.0, 0.5, 0.2, -0.3], 0.0, 2.0, RKF45(1e-10, 1e-10))

    def lewis_riesenfeld(s):
        x, y, vx, vy = s
        return (vy * x - vx * y) ** 2 + b * (1 + y ** 2 / x ** 2)

    report = monitor_invariants(traj, [lewis_riesenfeld], names=["LR"])
    assert report["LR"]["max_drift"] < 1e-6
    # realized Casimir on one copy equals a quarter of the invariant
    casimir = RealizedPoly(C_SL2, sys.realization)
    for s in traj.states[::20]:
        assert casimir(s) == pytest.approx(lewis_riesenfeld(s) / 4, rel=1e-12)


def test_monitor_rejects_wrong_dimension():
    sys = catalog("kummer-schwarz")
    traj = integrate(sys, [1.0, 0.2], 0.0, 0.1, RKF45())
    with pytest.raises(ShapeError):
        monitor_invariants(traj, [RealizedPoly(coproduct(C_SL2, 2), sys.realization)])


def test_permutation_covariance():
    sys = prolong(catalog("kummer-schwarz", b1="cos"), 3)
    R = sys.base.realization
    traj = integrate(sys, KS_X0, 0.0, 2.0, RKF45())
    F2 = embed(coproduct(C_SL2, 2), 3)
    s = transposition(3, 2, 3)
    permuted = RealizedPoly(permute_copies(F2, s), R, "F")
    original = RealizedPoly(F2, R, "F")
    swapped = traj.copy_block(2, (1, 3, 2))
    assert monitor_invariants(traj, [permuted]).to_json() == monitor_invariants(swapped, [original]).to_json()


def test_bracket_of_constants_is_constant():
    sys = prolong(catalog("kummer-schwarz", b1="cos"), 3)
    R = sys.base.realization
    F = coproduct_invariants(C_SL2, R, 3)
    f, g = F["F^(2)"].as_function(), F["F^(2)_13"].as_function()
    lam = R.bivector.prolong(3, 2)
    traj = integrate(sys, KS_X0, 0.0, 3.0, RKF45(1e-10, 1e-10))
    vals = np.array([bracket_num(f, g, lam, s) for s in traj.states])
    drift = np.max(np.abs(vals - vals[0])) / max(1.0, abs(vals[0]))
    assert drift < 1e-5


# -- involution and independence --------------------------------------------------


def test_involution_sw():
    R = catalog("smorodinsky-winternitz", n=1, b=1.0).realization
    F2 = embed(coproduct(C_SL2, 2), 3)
    F3 = coproduct(C_SL2, 3)
    assert involution_check(F2, F3, R, 3, samples=50, tol=1e-6).passed
    assert involution_check(F2, F2, R, 3, samples=10).max_abs == 0.0
    assert involution_check(F2, coproduct(SymPoly.gen(2, 3), 3), R, 3, samples=50, tol=1e-6).passed


def test_involution_detects_noncommuting_pair():
    R = catalog("kummer-schwarz").realization
    report = involution_check(SymPoly.gen(1, 3), SymPoly.gen(3, 3), R, 1, samples=10)
    assert not report.passed


@pytest.mark.parametrize("name,casimir", [
    ("kummer-schwarz", C_SL2),
    ("smorodinsky-winternitz", C_SL2),
    ("trig-su2", C_SU2),
])
def test_independence(name, casimir):
    R = catalog(name).realization
    F = coproduct_invariants(casimir, R, 3)
    space = R.space.product(3)
    for pt in space.sample(np.random.default_rng(0), 20):
        report = independence_check([F["F^(2)"], F["F^(2)_23"]], ["x_1", "p_1"], pt, names=space.names)
        assert report.rank == 2
        assert abs(report.normalized_det) > 1e-6


def test_independence_degenerate_cases():
    R = catalog("kummer-schwarz").realization
    F = coproduct_invariants(C_SL2, R, 3)["F^(2)"]
    pt = R.space.product(3).sample(np.random.default_rng(1), 1)[0]
    assert independence_check([F, F], [0, 1], pt).rank == 1
    casimir = SmoothFunction(lambda x: RealizedPoly(C_SL2, R)(x[..., :2]))
    report = independence_check([casimir, F], [0, 1], pt)
    assert report.rank == 1 and report.normalized_det == 0.0
    with pytest.raises(ShapeError):
        independence_check([F], [0, 1], pt)


# -- Lie integrals ------------------------------------------------------------------


def test_lie_integral_closed_form():
    f0 = np.array([0.7, -0.3, 1.1])
    t = np.linspace(0.0, 3.0, 31)
    path = lie_integral_flow(builtin("sl2").sc, [0.0, 0.0, 1.0], f0, 0.0, 3.0, RKF45(1e-12, 1e-12), t_eval=t)
    f1, f2, f3 = f0
    t = path.times
    assert np.all(np.isin(np.linspace(0.0, 3.0, 31), t))
    expected = np.stack([f1 + 0 * t, f2 + 2 * f1 * t, f3 + f2 * t + f1 * t ** 2], axis=1)
    np.testing.assert_allclose(path.coeffs, expected, atol=1e-9)


def test_lie_integral_abelian_and_zero():
    sc = StructureConstants.abelian(3)
    f0 = np.array([1.0, 2.0, 3.0])
    path = lie_integral_flow(sc, ["cos", "sin", 1.0], f0, 0.0, 2.0)
    assert np.all(path.coeffs == f0)
    zero = lie_integral_flow(builtin("sl2").sc, ["cos", "sin", 1.0], np.zeros(3), 0.0, 2.0)
    assert not zero.coeffs.any()


def test_verify_lie_integral():
    sys = catalog("smorodinsky-winternitz", n=1, b=1.0, omega=1.0)
    t = np.linspace(0.0, 3.0, 61)
    method = RKF45(1e-12, 1e-12)
    traj = integrate(sys, [1.1, 0.3], 0.0, 3.0, method, t_eval=t)
    good = lie_integral_flow(sys.realization.sc, sys.b, [0.4, -0.2, 0.9], 0.0, 3.0, method, t_eval=t)
    report = verify_lie_integral(sys, good, traj, tol=1e-6)
    assert report.passed and report.samples == 61
    bad = lie_integral_flow(sys.realization.sc, [0.0, 0.0, 1.0], [0.4, -0.2, 0.9], 0.0, 3.0, method, t_eval=t)
    assert not verify_lie_integral(sys, bad, traj, tol=1e-6).passed


def test_lie_integral_shape_error():
    with pytest.raises(ShapeError):
        lie_integral_flow(builtin("sl2").sc, [1.0, 0.0], [1.0, 0.0, 0.0], 0.0, 1.0)


def test_integrate_rhs_plain():
    traj = integrate_rhs(lambda t, y: -y, [1.0], 0.0, 1.0, RKF45(1e-12, 1e-12))
    assert traj.final[0] == pytest.approx(np.exp(-1.0), rel=1e-10)
