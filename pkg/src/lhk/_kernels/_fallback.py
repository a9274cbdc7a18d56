"""Pure numpy versions of the polynomial evaluation kernels."""

import numpy as np


def poly_eval(exps, coeffs, vals):
    """Evaluate ``sum_t coeffs[t] prod_j vals[:, j] ** exps[t, j]`` at every row."""
    vals = np.asarray(vals, dtype=float)
    if exps.shape[0] == 0:
        return np.zeros(vals.shape[0])
    monos = np.prod(vals[:, None, :] ** exps[None, :, :], axis=2)
    return monos @ coeffs


def poly_eval_grad(exps, coeffs, vals):
    vals = np.asarray(vals, dtype=float)
    npts, nvars = vals.shape
    value = poly_eval(exps, coeffs, vals)
    grad = np.zeros((npts, nvars))
    for j in range(nvars):
        ej = exps[:, j]
        mask = ej > 0
        if not mask.any():
            continue
        sub = exps[mask].copy()
        sub[:, j] -= 1
        grad[:, j] = poly_eval(sub, coeffs[mask] * ej[mask], vals)
    return value, grad
