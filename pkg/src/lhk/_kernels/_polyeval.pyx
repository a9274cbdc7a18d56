# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled polynomial evaluation kernels (same contract as ``_fallback``)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _powers(const double[:] v, double[:, :] pw, Py_ssize_t maxe) noexcept nogil:
    cdef Py_ssize_t j, k
    for j in range(v.shape[0]):
        pw[j, 0] = 1.0
        for k in range(1, maxe + 1):
            pw[j, k] = pw[j, k - 1] * v[j]


def poly_eval(const cnp.int64_t[:, :] exps, const double[:] coeffs, const double[:, :] vals):
    cdef Py_ssize_t npts = vals.shape[0], nterms = exps.shape[0], nvars = vals.shape[1]
    cdef Py_ssize_t p, t, j, maxe = 0
    cdef double acc, mono
    out = np.zeros(npts)
    cdef double[:] o = out
    if nterms == 0:
        return out
    for t in range(nterms):
        for j in range(nvars):
            if exps[t, j] > maxe:
                maxe = exps[t, j]
    cdef double[:, :] pw = np.empty((nvars, maxe + 1))
    with nogil:
        for p in range(npts):
            _powers(vals[p], pw, maxe)
            acc = 0.0
            for t in range(nterms):
                mono = coeffs[t]
                for j in range(nvars):
                    if exps[t, j]:
                        mono = mono * pw[j, exps[t, j]]
                acc = acc + mono
            o[p] = acc
    return out


def poly_eval_grad(const cnp.int64_t[:, :] exps, const double[:] coeffs, const double[:, :] vals):
    cdef Py_ssize_t npts = vals.shape[0], nterms = exps.shape[0], nvars = vals.shape[1]
    cdef Py_ssize_t p, t, j, e, maxe = 1
    cdef double acc, run
    value = np.zeros(npts)
    grad = np.zeros((npts, nvars))
    cdef double[:] vo = value
    cdef double[:, :] go = grad
    if nterms == 0:
        return value, grad
    for t in range(nterms):
        for j in range(nvars):
            if exps[t, j] > maxe:
                maxe = exps[t, j]
    cdef double[:, :] pw = np.empty((nvars, maxe + 1))
    cdef double[:] fac = np.empty(nvars)
    cdef double[:] suffix = np.empty(nvars + 1)
    with nogil:
        for p in range(npts):
            _powers(vals[p], pw, maxe)
            acc = 0.0
            for t in range(nterms):
                for j in range(nvars):
                    fac[j] = pw[j, exps[t, j]]
                suffix[nvars] = 1.0
                for j in range(nvars - 1, -1, -1):
                    suffix[j] = suffix[j + 1] * fac[j]
                acc = acc + coeffs[t] * suffix[0]
                # prefix product kept in run; partial_j = prefix * e v^(e-1) * suffix[j+1]
                run = coeffs[t]
                for j in range(nvars):
                    e = exps[t, j]
                    if e:
                        go[p, j] = go[p, j] + run * e * pw[j, e - 1] * suffix[j + 1]
                    run = run * fac[j]
            vo[p] = acc
    return value, grad
