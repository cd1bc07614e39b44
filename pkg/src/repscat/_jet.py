"""Truncated Taylor arithmetic for radial profiles.

A :class:`Jet` carries normalized Taylor coefficients ``c[k] = F^(k)(t)/k!``
along the leading axis, so closed-form radial functions get exact derivatives
up to a fixed order without symbolic work. Values may be real or complex and
broadcast over any trailing shape.
"""
from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, c):
        self.c = np.asarray(c)

    @classmethod
    def variable(cls, t, order):
        t = np.asarray(t)
        c = np.zeros((order + 1,) + t.shape, dtype=np.result_type(t, float))
        c[0] = t
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order, shape=()):
        value = np.asarray(value)
        shape = np.broadcast_shapes(shape, value.shape)
        c = np.zeros((order + 1,) + shape, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def value(self):
        return self.c[0]

    def deriv(self, k=1):
        """k-th derivative value (not a jet)."""
        return self.c[k] * math.factorial(k)

    def derivatives(self):
        fac = np.array([math.factorial(k) for k in range(self.order + 1)])
        return self.c * fac.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def differentiate(self):
        """Jet of the derivative, one order shorter."""
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * k)

    def truncate(self, order):
        return Jet(self.c[: order + 1])

    def _coerce(self, other):
        if isinstance(other, Jet):
            n = min(self.order, other.order)
            return self.c[: n + 1], other.c[: n + 1]
        other = np.asarray(other)
        oc = np.zeros_like(self.c, dtype=np.result_type(self.c, other))
        oc[0] = other
        return self.c, oc

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b - a)

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other))
        a, b = self._coerce(other)
        n = a.shape[0]
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
        for k in range(n):
            for i in range(k + 1):
                out[k] = out[k] + a[i] * b[k - i]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other))
        a, b = self._coerce(other)
        return Jet(a) * _reciprocal(b)

    def __rtruediv__(self, other):
        a, b = self._coerce(other)
        return Jet(b) * _reciprocal(a)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        a = self.c
        n = a.shape[0]
        y = np.zeros_like(a, dtype=np.result_type(a, float, p))
        y[0] = a[0] ** p
        for k in range(1, n):
            acc = 0.0
            for i in range(1, k + 1):
                acc = acc + ((p + 1) * i - k) * a[i] * y[k - i]
            y[k] = acc / (k * a[0])
        return Jet(y)


def _reciprocal(b):
    n = b.shape[0]
    out = np.zeros_like(b, dtype=np.result_type(b, float))
    out[0] = 1.0 / b[0]
    for k in range(1, n):
        acc = 0.0
        for i in range(1, k + 1):
            acc = acc + b[i] * out[k - i]
        out[k] = -acc / b[0]
    return Jet(out)


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    a = x.c
    n = a.shape[0]
    e = np.zeros_like(a, dtype=np.result_type(a, float))
    e[0] = np.exp(a[0])
    for k in range(1, n):
        acc = 0.0
        for i in range(1, k + 1):
            acc = acc + i * a[i] * e[k - i]
        e[k] = acc / k
    return Jet(e)


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    a = x.c
    n = a.shape[0]
    out = np.zeros_like(a, dtype=np.result_type(a, float))
    out[0] = np.log(a[0])
    for k in range(1, n):
        acc = 0.0
        for i in range(1, k):
            acc = acc + i * out[i] * a[k - i]
        out[k] = (a[k] - acc / k) / a[0]
    return Jet(out)


def sqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    return x ** 0.5


def where(cond, a, b):
    """Select between two jets (or a jet and a constant) pointwise."""
    if not isinstance(a, Jet):
        a = Jet.constant(a, b.order, np.shape(cond))
    if not isinstance(b, Jet):
        b = Jet.constant(b, a.order, np.shape(cond))
    n = min(a.order, b.order)
    return Jet(np.where(cond, a.c[: n + 1], b.c[: n + 1]))


def value(x):
    return x.value if isinstance(x, Jet) else x
