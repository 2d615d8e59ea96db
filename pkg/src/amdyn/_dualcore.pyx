# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forward-mode dual numbers (hot kernel).

Mirrors the pure-Python implementation in ``_dualpy`` for the flat (float
coefficient) case.  Nested duals are not supported here; callers needing
second derivatives use the pure-Python class directly.
"""

from libc.math cimport sin as csin, cos as ccos, sqrt as csqrt, pow as cpow
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

import numpy as np


cdef inline Dual _new(int n):
    cdef Dual d = Dual.__new__(Dual)
    d.n = n
    d._eps = <double*> malloc(n * sizeof(double))
    return d


cdef class Dual:
    """Value plus first-order partials with respect to n seed variables."""

    cdef double _val
    cdef double* _eps
    cdef int n

    def __cinit__(self):
        self._eps = NULL

    def __init__(self, val, eps):
        cdef double[::1] e = np.ascontiguousarray(eps, dtype=np.float64)
        self.n = e.shape[0]
        self._eps = <double*> malloc(self.n * sizeof(double))
        memcpy(self._eps, &e[0], self.n * sizeof(double))
        self._val = val

    def __dealloc__(self):
        if self._eps != NULL:
            free(self._eps)

    @property
    def val(self):
        return self._val

    @property
    def eps(self):
        cdef double[::1] out = np.empty(self.n)
        memcpy(&out[0], self._eps, self.n * sizeof(double))
        return np.asarray(out)

    # force numpy scalars to defer to our reflected operators
    __array_ufunc__ = None

    @classmethod
    def seed(cls, values, n=None, offset=0):
        values = list(values)
        cdef int m = len(values) if n is None else n
        cdef int i
        out = []
        cdef Dual d
        for i in range(len(values)):
            d = _new(m)
            memset(d._eps, 0, m * sizeof(double))
            d._eps[offset + i] = 1.0
            d._val = values[i]
            out.append(d)
        return out

    @classmethod
    def lift(cls, value, n):
        cdef Dual d = _new(n)
        memset(d._eps, 0, n * sizeof(double))
        d._val = value
        return d

    def __repr__(self):
        return f"Dual({self._val!r}, {self.eps!r})"

    def __float__(self):
        return self._val

    def __add__(self, other):
        cdef Dual a, r
        cdef int i
        if isinstance(other, Dual):
            a = <Dual> self
            r = _new(a.n)
            r._val = a._val + (<Dual> other)._val
            for i in range(a.n):
                r._eps[i] = a._eps[i] + (<Dual> other)._eps[i]
            return r
        a = <Dual> self
        r = _new(a.n)
        r._val = a._val + <double> other
        memcpy(r._eps, a._eps, a.n * sizeof(double))
        return r

    def __radd__(self, other):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        r._val = <double> other + a._val
        memcpy(r._eps, a._eps, a.n * sizeof(double))
        return r

    def __sub__(self, other):
        cdef Dual a = <Dual> self, r
        cdef int i
        r = _new(a.n)
        if isinstance(other, Dual):
            r._val = a._val - (<Dual> other)._val
            for i in range(a.n):
                r._eps[i] = a._eps[i] - (<Dual> other)._eps[i]
        else:
            r._val = a._val - <double> other
            memcpy(r._eps, a._eps, a.n * sizeof(double))
        return r

    def __rsub__(self, other):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef int i
        r._val = <double> other - a._val
        for i in range(a.n):
            r._eps[i] = -a._eps[i]
        return r

    def __mul__(self, other):
        cdef Dual a = <Dual> self, b, r
        cdef double s
        cdef int i
        r = _new(a.n)
        if isinstance(other, Dual):
            b = <Dual> other
            r._val = a._val * b._val
            for i in range(a.n):
                r._eps[i] = a._val * b._eps[i] + b._val * a._eps[i]
        else:
            s = <double> other
            r._val = a._val * s
            for i in range(a.n):
                r._eps[i] = a._eps[i] * s
        return r

    def __rmul__(self, other):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef double s = <double> other
        cdef int i
        r._val = a._val * s
        for i in range(a.n):
            r._eps[i] = a._eps[i] * s
        return r

    def __truediv__(self, other):
        cdef Dual a = <Dual> self, b, r
        cdef double inv, q
        cdef int i
        r = _new(a.n)
        if isinstance(other, Dual):
            b = <Dual> other
            inv = 1.0 / b._val
            q = a._val * inv
            r._val = q
            for i in range(a.n):
                r._eps[i] = (a._eps[i] - q * b._eps[i]) * inv
        else:
            inv = 1.0 / <double> other
            r._val = a._val * inv
            for i in range(a.n):
                r._eps[i] = a._eps[i] * inv
        return r

    def __rtruediv__(self, other):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef double inv = 1.0 / a._val
        cdef double q = <double> other * inv
        cdef int i
        r._val = q
        for i in range(a.n):
            r._eps[i] = -q * inv * a._eps[i]
        return r

    def __neg__(self):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef int i
        r._val = -a._val
        for i in range(a.n):
            r._eps[i] = -a._eps[i]
        return r

    def __pos__(self):
        return self

    def __pow__(self, k, modulo):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef double d
        cdef int i, ki = k
        if ki == 0:
            r._val = 1.0
            memset(r._eps, 0, a.n * sizeof(double))
            return r
        r._val = cpow(a._val, ki)
        d = ki * cpow(a._val, ki - 1)
        for i in range(a.n):
            r._eps[i] = d * a._eps[i]
        return r

    def sin(self):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef double c = ccos(a._val)
        cdef int i
        r._val = csin(a._val)
        for i in range(a.n):
            r._eps[i] = c * a._eps[i]
        return r

    def cos(self):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef double s = -csin(a._val)
        cdef int i
        r._val = ccos(a._val)
        for i in range(a.n):
            r._eps[i] = s * a._eps[i]
        return r

    def sqrt(self):
        cdef Dual a = <Dual> self
        cdef Dual r = _new(a.n)
        cdef double v = csqrt(a._val)
        cdef double d = 0.5 / v
        cdef int i
        r._val = v
        for i in range(a.n):
            r._eps[i] = d * a._eps[i]
        return r
