# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled numerical kernels.

Mirrors _kernels_py: dense tables are float64 arrays of length 2**n indexed
by subset mask, membership matrices are (n, columns) float64. Transforms
accumulate in long double so the mobius/zeta roundtrip stays near machine
precision even at n=12.
"""

from libc.stdlib cimport free, malloc

import numpy as np

BACKEND_NAME = "compiled"


cdef inline void _fail_alloc() except *:
    raise MemoryError("kernel scratch allocation failed")


def mobius_dense(table, int n):
    t = np.ascontiguousarray(table, dtype=np.float64)
    cdef double[::1] tv = t
    cdef Py_ssize_t size = 1 << n
    cdef long double* work = <long double*> malloc(size * sizeof(long double))
    if work == NULL:
        _fail_alloc()
    cdef Py_ssize_t i, k, half, step, base, off
    for i in range(size):
        work[i] = tv[i]
    for k in range(n):
        half = 1 << k
        step = half << 1
        base = 0
        while base < size:
            for off in range(half):
                work[base + half + off] -= work[base + off]
            base += step
    out = np.empty(size, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(size):
        ov[i] = <double> work[i]
    free(work)
    return out


def zeta_dense(table, int n):
    t = np.ascontiguousarray(table, dtype=np.float64)
    cdef double[::1] tv = t
    cdef Py_ssize_t size = 1 << n
    cdef long double* work = <long double*> malloc(size * sizeof(long double))
    if work == NULL:
        _fail_alloc()
    cdef Py_ssize_t i, k, half, step, base, off
    for i in range(size):
        work[i] = tv[i]
    for k in range(n):
        half = 1 << k
        step = half << 1
        base = 0
        while base < size:
            for off in range(half):
                work[base + half + off] += work[base + off]
            base += step
    out = np.empty(size, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(size):
        ov[i] = <double> work[i]
    free(work)
    return out


def worth_dense(q, mu):
    cdef double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int n = qv.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t> 1) << n
    cdef Py_ssize_t* expand = <Py_ssize_t*> malloc(size * sizeof(Py_ssize_t))
    cdef double* buf = <double*> malloc(size * sizeof(double))
    cdef int* bits = <int*> malloc(n * sizeof(int))
    cdef double* xs = <double*> malloc(n * sizeof(double))
    if expand == NULL or buf == NULL or bits == NULL or xs == NULL:
        free(expand); free(buf); free(bits); free(xs)
        _fail_alloc()
    cdef double total = 0.0
    cdef Py_ssize_t a, m, csize, h
    cdef int k, p, j
    for a in range(1, size):
        k = 0
        for p in range(n):
            if (a >> p) & 1:
                bits[k] = p
                xs[k] = qv[p, a]
                k += 1
        expand[0] = 0
        csize = 1
        for j in range(k):
            for m in range(csize):
                expand[csize + m] = expand[m] | ((<Py_ssize_t> 1) << bits[j])
            csize <<= 1
        for m in range(csize):
            buf[m] = mv[expand[m]]
        for j in range(k - 1, -1, -1):
            h = (<Py_ssize_t> 1) << j
            for m in range(h):
                buf[m] += xs[j] * buf[m + h]
        total += buf[0]
    free(expand); free(buf); free(bits); free(xs)
    return total


def grad_dense(q, mu):
    cdef double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int n = qv.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t> 1) << n
    out = np.zeros((n, size), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t* expand = <Py_ssize_t*> malloc(size * sizeof(Py_ssize_t))
    cdef double* cmu = <double*> malloc(size * sizeof(double))
    cdef double* buf = <double*> malloc(size * sizeof(double))
    cdef int* bits = <int*> malloc(n * sizeof(int))
    cdef double* xs = <double*> malloc(n * sizeof(double))
    if expand == NULL or cmu == NULL or buf == NULL or bits == NULL or xs == NULL:
        free(expand); free(cmu); free(buf); free(bits); free(xs)
        _fail_alloc()
    cdef Py_ssize_t a, m, csize, h, half, src, lowmask
    cdef int k, p, j, jj
    cdef double x
    for a in range(1, size):
        k = 0
        for p in range(n):
            if (a >> p) & 1:
                bits[k] = p
                xs[k] = qv[p, a]
                k += 1
        expand[0] = 0
        csize = 1
        for j in range(k):
            for m in range(csize):
                expand[csize + m] = expand[m] | ((<Py_ssize_t> 1) << bits[j])
            csize <<= 1
        for m in range(csize):
            cmu[m] = mv[expand[m]]
        half = csize >> 1
        for j in range(k):
            lowmask = ((<Py_ssize_t> 1) << j) - 1
            for m in range(half):
                src = ((m >> j) << (j + 1)) | ((<Py_ssize_t> 1) << j) | (m & lowmask)
                buf[m] = cmu[src]
            for jj in range(k - 2, -1, -1):
                h = (<Py_ssize_t> 1) << jj
                x = xs[jj] if jj < j else xs[jj + 1]
                for m in range(h):
                    buf[m] += x * buf[m + h]
            ov[bits[j], a] = buf[0]
    free(expand); free(cmu); free(buf); free(bits); free(xs)
    return out


def worth_family(q, mu, sub_ptr, sub_idx, elem_ptr, elem_idx):
    cdef double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int[::1] sp = np.ascontiguousarray(sub_ptr, dtype=np.int32)
    cdef int[::1] si = np.ascontiguousarray(sub_idx, dtype=np.int32)
    cdef int[::1] ep = np.ascontiguousarray(elem_ptr, dtype=np.int32)
    cdef int[::1] ei = np.ascontiguousarray(elem_idx, dtype=np.int32)
    cdef Py_ssize_t m = mv.shape[0]
    cdef double total = 0.0, prod
    cdef Py_ssize_t a, s, b, e
    for a in range(m):
        for s in range(sp[a], sp[a + 1]):
            b = si[s]
            if ep[b] == ep[b + 1]:
                continue
            prod = 1.0
            for e in range(ep[b], ep[b + 1]):
                prod *= qv[ei[e], a]
            total += mv[b] * prod
    return total


def grad_family(q, mu, sub_ptr, sub_idx, elem_ptr, elem_idx):
    cdef double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] mv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef int[::1] sp = np.ascontiguousarray(sub_ptr, dtype=np.int32)
    cdef int[::1] si = np.ascontiguousarray(sub_idx, dtype=np.int32)
    cdef int[::1] ep = np.ascontiguousarray(elem_ptr, dtype=np.int32)
    cdef int[::1] ei = np.ascontiguousarray(elem_idx, dtype=np.int32)
    cdef Py_ssize_t m = mv.shape[0]
    out = np.zeros((qv.shape[0], qv.shape[1]), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double pre[64]
    cdef double suf[64]
    cdef Py_ssize_t a, s, b, e, L, t
    for a in range(m):
        for s in range(sp[a], sp[a + 1]):
            b = si[s]
            L = ep[b + 1] - ep[b]
            if L == 0:
                continue
            pre[0] = 1.0
            for t in range(1, L):
                pre[t] = pre[t - 1] * qv[ei[ep[b] + t - 1], a]
            suf[L - 1] = 1.0
            for t in range(L - 2, -1, -1):
                suf[t] = suf[t + 1] * qv[ei[ep[b] + t + 1], a]
            for t in range(L):
                e = ei[ep[b] + t]
                ov[e, a] += mv[b] * pre[t] * suf[t]
    return out
