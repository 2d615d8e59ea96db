"""Pure-Python forward-mode dual numbers with a vector of partials.

A ``Dual`` carries a value and the partial derivatives of that value with
respect to ``n`` seed variables.  Arithmetic propagates the partials to first
order.  The coefficients are ordinarily floats, but the class is written
generically so a Dual may carry Duals in its value/partials (nesting gives
second derivatives, used by the energy-method Coriolis route).
"""

from __future__ import annotations

import math

import numpy as np


def _sin(x):
    return math.sin(x) if isinstance(x, (int, float)) else x.sin()


def _cos(x):
    return math.cos(x) if isinstance(x, (int, float)) else x.cos()


def _sqrt(x):
    return math.sqrt(x) if isinstance(x, (int, float)) else x.sqrt()


def _emap(op, arr):
    """Apply op over an ndarray operand, returning an object ndarray.

    Needed because ``__array_ufunc__ = None`` routes array-scalar ops to our
    reflected operators; nested duals hit this with object coefficient arrays.
    """
    out = np.empty(arr.shape, dtype=object)
    of, af = out.ravel(), arr.ravel()
    for i in range(af.size):
        of[i] = op(af[i])
    return out


class Dual:
    """Value plus first-order partials with respect to n seed variables."""

    __slots__ = ("val", "eps")

    # keep numpy from consuming us in mixed scalar ops; we want __r*__ dispatch
    __array_ufunc__ = None

    def __init__(self, val, eps):
        self.val = val
        self.eps = eps

    @classmethod
    def seed(cls, values, n=None, offset=0):
        """Duals for ``values`` with unit partials at offset, offset+1, ..."""
        values = list(values)
        if n is None:
            n = len(values)
        out = []
        for i, v in enumerate(values):
            e = np.zeros(n)
            e[offset + i] = 1.0
            out.append(cls(v, e))
        return out

    @classmethod
    def lift(cls, value, n):
        """A constant (zero partials) dual."""
        return cls(value, np.zeros(n))

    def __repr__(self):
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        if isinstance(other, np.ndarray):
            return _emap(lambda a: self + a, other)
        return Dual(self.val + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.eps - other.eps)
        if isinstance(other, np.ndarray):
            return _emap(lambda a: self - a, other)
        return Dual(self.val - other, self.eps)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return _emap(lambda a: a - self, other)
        return Dual(other - self.val, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.val * other.eps + other.val * self.eps)
        if isinstance(other, np.ndarray):
            return _emap(lambda a: self * a, other)
        return Dual(self.val * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(self.val * inv,
                        (self.eps - (self.val * inv) * other.eps) * inv)
        if isinstance(other, np.ndarray):
            return _emap(lambda a: self / a, other)
        return Dual(self.val / other, self.eps / other)

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return _emap(lambda a: a / self, other)
        inv = 1.0 / self.val
        return Dual(other * inv, (-other * inv * inv) * self.eps)

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k == 0:
            return Dual(1.0, self.eps * 0.0)
        return Dual(self.val ** k, (k * self.val ** (k - 1)) * self.eps)

    def sin(self):
        return Dual(_sin(self.val), _cos(self.val) * self.eps)

    def cos(self):
        return Dual(_cos(self.val), -_sin(self.val) * self.eps)

    def sqrt(self):
        r = _sqrt(self.val)
        return Dual(r, self.eps / (2.0 * r))

    def __float__(self):
        return float(self.val)


def value(x):
    """Value part of x, unwrapping nested duals."""
    while isinstance(x, Dual):
        x = x.val
    return x


def partials(x, n):
    """First-order partials of x as a length-n float vector."""
    if isinstance(x, Dual):
        return np.asarray([value(e) for e in np.atleast_1d(x.eps)], dtype=float)
    return np.zeros(n)
