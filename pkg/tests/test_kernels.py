import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from lhk import _kernels
from lhk._kernels import _fallback
from lhk.algebra import builtin
from lhk.realization import random_poly
from lhk.sympoly import SymPoly, coproduct

compiled = pytest.importorskip("lhk._kernels._polyeval", reason="compiled kernel not built")


def sample_case(seed, r=3, m=3, degree=4, nterms=12, npts=50):
    rng = np.random.default_rng(seed)
    P = random_poly(rng, r, m, degree=degree, nterms=nterms)
    vals = rng.uniform(-2, 2, size=(npts, r * m))
    return P, vals


@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    P, vals = sample_case(seed)
    exps, coeffs = P.arrays()
    v_c = compiled.poly_eval(exps, coeffs, vals)
    v_p = _fallback.poly_eval(exps, coeffs, vals)
    np.testing.assert_allclose(v_c, v_p, rtol=1e-12, atol=1e-12)
    (vc, gc), (vp, gp) = compiled.poly_eval_grad(exps, coeffs, vals), _fallback.poly_eval_grad(exps, coeffs, vals)
    np.testing.assert_allclose(vc, vp, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(gc, gp, rtol=1e-12, atol=1e-11)


def test_gradient_with_zero_values():
    # prefix/suffix products must not divide by a zero generator value
    P = SymPoly.parse("v1^2 v2 v3 + 3 * v2^3", 3)
    exps, coeffs = P.arrays()
    vals = np.array([[0.0, 2.0, 0.0], [1.0, 0.0, -1.0]])
    for backend in (compiled, _fallback):
        _, grad = backend.poly_eval_grad(exps, coeffs, vals)
        np.testing.assert_allclose(grad, [[0.0, 36.0, 0.0], [0.0, -1.0, 0.0]])


def test_empty_polynomial():
    exps, coeffs = SymPoly.zero(3, 2).arrays()
    vals = np.ones((4, 6))
    for backend in (compiled, _fallback):
        np.testing.assert_array_equal(backend.poly_eval(exps, coeffs, vals), np.zeros(4))
        _, grad = backend.poly_eval_grad(exps, coeffs, vals)
        np.testing.assert_array_equal(grad, np.zeros((4, 6)))


def test_gradient_matches_finite_differences():
    C = coproduct(SymPoly.parse("v1*v3 - v2^2", 3), 3)
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 9)
    _, grad = C.evaluate_grad(x)
    h = 1e-6
    fd = [(C.evaluate(x + h * e) - C.evaluate(x - h * e)) / (2 * h) for e in np.eye(9)]
    np.testing.assert_allclose(grad, fd, rtol=1e-7, atol=1e-8)


def test_backend_selected_at_import():
    assert _kernels.BACKEND in ("cython", "python")


def test_pure_python_switch():
    code = "import lhk._kernels as k; print(k.BACKEND)"
    env = {**os.environ, "LHK_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_reload_keeps_api():
    mod = importlib.reload(_kernels)
    assert callable(mod.poly_eval) and callable(mod.poly_eval_grad)


def test_h6_evaluation_uses_kernel_shape():
    sc = builtin("h6").sc
    P = random_poly(np.random.default_rng(0), sc.r, 2, degree=3, nterms=5)
    vals = np.random.default_rng(1).normal(size=(7, 12))
    assert P.evaluate(vals).shape == (7,)
