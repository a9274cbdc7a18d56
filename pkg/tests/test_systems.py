import math

import numpy as np
import pytest

from lhk.curves import Constant, Sinusoid
from lhk.dynamics import RK4, RKF45, integrate
from lhk.errors import CatalogError, CurveRangeError, DomainError, ShapeError
from lhk.realization import check_homomorphism
from lhk.systems import (
    ProlongedSystem,
    catalog,
    check_curves,
    from_descriptor,
    prolong,
    system_doc,
    system_names,
)

CATALOG = ["ermakov", "kummer-schwarz", "riccati4", "second-order-riccati", "smorodinsky-winternitz", "trig-su2"]


def test_system_names():
    assert system_names() == sorted(CATALOG + ["riccati"])
    assert "Kummer" in system_doc("kummer-schwarz")
    with pytest.raises(CatalogError):
        system_doc("nope")


def test_unknown_and_invalid():
    with pytest.raises(CatalogError):
        catalog("bogus")
    with pytest.raises(CatalogError):
        catalog("smorodinsky-winternitz", n=0)
    with pytest.raises(CatalogError):
        catalog("riccati4", bivector="third")


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_passes_homomorphism(name):
    sys = catalog(name)
    assert check_homomorphism(sys.realization, samples=100, tol=1e-8).passed


def test_ermakov_with_cos_frequency():
    sys = catalog("ermakov", b=1, omega="cos")
    assert check_homomorphism(sys.realization, samples=100, tol=1e-8).passed
    assert sys.b[0](0.3) == pytest.approx(math.cos(0.3) ** 2)


def test_sw_vector_field():
    b = 0.8
    sys = catalog("smorodinsky-winternitz", n=1, b=b, omega="1+0.3*cos")
    t, x, p = 0.7, 1.4, -0.2
    w2 = (1 + 0.3 * math.cos(t)) ** 2
    np.testing.assert_allclose(sys.vector_field(t, [x, p]), [p, -w2 * x + b / x ** 3], rtol=1e-14)


def test_ks_vector_field():
    b0 = 1.5
    sys = catalog("kummer-schwarz", b0=b0, b1="cos")
    t, x, p = 0.4, 0.9, 0.35
    expected = [p * x ** 3 / 2, -0.75 * p ** 2 * x ** 2 - b0 / 4 + 4 * math.cos(t) / x ** 2]
    np.testing.assert_allclose(sys.vector_field(t, [x, p]), expected, rtol=1e-14)


def test_zero_coefficients_give_zero_field():
    sys = catalog("kummer-schwarz").with_coefficients([0.0, 0.0, 0.0])
    assert not sys.vector_field(1.0, [1.2, 0.3]).any()


def test_vector_field_checks_domain():
    with pytest.raises(DomainError):
        catalog("trig-su2").vector_field(0.0, [1.0, 0.0])


def test_harmonic_oscillator():
    sys = catalog("smorodinsky-winternitz", n=1, b=0.0, omega=1.0)
    traj = integrate(sys, [1.0, 0.0], 0.0, 3.0, RKF45(1e-12, 1e-12))
    np.testing.assert_allclose(traj.states[:, 0], np.cos(traj.times), atol=1e-9)
    np.testing.assert_allclose(traj.states[:, 1], -np.sin(traj.times), atol=1e-9)


def test_trig_constant_field():
    sys = catalog("trig-su2", Bx=0.0, By=0.0, Bz=1.0)
    traj = integrate(sys, [0.3, 0.5], 0.0, 2.0, RK4(1e-2))
    np.testing.assert_allclose(traj.states[:, 0], 0.3, atol=1e-14)
    np.testing.assert_allclose(traj.states[:, 1], 0.5 - traj.times, atol=1e-12)


def test_prolong_m1_is_identity():
    sys = catalog("kummer-schwarz")
    assert prolong(sys, 1) is sys
    with pytest.raises(ShapeError):
        ProlongedSystem(sys, 0)


def test_riccati_prolonged_to_four_copies():
    sys = catalog("riccati", a0="sin", a1=0.5, a2="cos")
    P = prolong(sys, 4)
    t = 0.9
    xs = np.array([0.1, -0.4, 0.7, 1.3])
    expected = math.sin(t) + 0.5 * xs + math.cos(t) * xs ** 2
    np.testing.assert_allclose(P.vector_field(t, xs), expected, rtol=1e-15)


@pytest.mark.parametrize("name", CATALOG)
def test_prolonged_field_is_permutation_equivariant(name):
    sys = catalog(name)
    m, n = 3, sys.n
    P = prolong(sys, m)
    rng = np.random.default_rng(0)
    X = P.space.sample(rng, 5)
    perm = [2, 0, 1]
    idx = np.concatenate([np.arange(a * n, (a + 1) * n) for a in perm])
    for pt in X:
        assert np.array_equal(P.vector_field(0.3, pt)[idx], P.vector_field(0.3, pt[idx]))


def test_prolonged_bivector_is_block_diagonal():
    sys = catalog("riccati4")
    R2 = prolong(sys, 2).realization
    pt = R2.space.sample(np.random.default_rng(1), 1)[0]
    lam = R2.bivector(pt)
    assert not lam[:4, 4:].any() and not lam[4:, :4].any()
    np.testing.assert_array_equal(lam[:4, :4], sys.realization.bivector(pt[:4]))


@pytest.mark.parametrize("name", CATALOG)
def test_linearity_in_b(name):
    sys = catalog(name)
    rng = np.random.default_rng(3)
    b1 = rng.normal(size=sys.r)
    b2 = rng.normal(size=sys.r)
    pt = sys.space.sample(rng, 1)[0]
    f1 = sys.with_coefficients(b1).vector_field(0.0, pt)
    f2 = sys.with_coefficients(b2).vector_field(0.0, pt)
    f12 = sys.with_coefficients(b1 + b2).vector_field(0.0, pt)
    np.testing.assert_allclose(f12, f1 + f2, rtol=1e-12, atol=1e-12)


def test_second_order_riccati_coefficients():
    sys = catalog("second-order-riccati", a0=2.0, a1=3.0, a2="cos")
    np.testing.assert_allclose(sys.coefficients(0.0), [1.0, -2.0, -3.0, -1.0, 0.0, 0.0])


def test_descriptor_round_trip():
    sys = catalog("smorodinsky-winternitz", n=2, b=[1.0, 0.5], omega="1+0.3*cos")
    desc = sys.descriptor()
    back = from_descriptor(desc)
    assert back.name == sys.name
    pt = sys.space.sample(np.random.default_rng(0), 1)[0]
    np.testing.assert_array_equal(back.vector_field(0.4, pt), sys.vector_field(0.4, pt))


def test_descriptor_coefficient_override_and_prolongation():
    desc = {
        "name": "kummer-schwarz",
        "params": {"b0": 0.5},
        "coefficients": [{"form": "sinusoid", "a": 1.0, "omega": 2.0, "phi": 0.0, "c": 0.0}, 0.0, 1.0],
        "m": 3,
    }
    sys = from_descriptor(desc)
    assert sys.m == 3 and sys.n == 6
    assert sys.b[0] == Sinusoid(1.0, 2.0, 0.0, 0.0)
    assert sys.b[1] == Constant(0.0)
    with pytest.raises(ShapeError):
        from_descriptor({"name": "kummer-schwarz", "coefficients": [1.0]})
    with pytest.raises(CatalogError):
        from_descriptor({"params": {}})


def test_curve_interval_checked():
    sys = catalog("kummer-schwarz", b1={"form": "tabulated", "times": [0, 1, 2], "values": [1, 0, 1]})
    check_curves(sys, 0.0, 2.0)
    with pytest.raises(CurveRangeError):
        check_curves(sys, 0.0, 3.0)
