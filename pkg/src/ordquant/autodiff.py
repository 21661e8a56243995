"""Hyper-dual numbers for exact-to-roundoff second derivatives.

A hyper-dual number a + b*e1 + c*e2 + d*e1*e2 (with e1^2 = e2^2 = 0) carries
a value, two first derivatives, and one mixed second derivative through any
composition of the arithmetic below.  Seeding b = c = 1 in the same input
variable makes `d` the pure second derivative with respect to it.
"""

from __future__ import annotations

import math


class HyperDual:
    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: float, b: float = 0.0, c: float = 0.0, d: float = 0.0):
        self.a = float(a)
        self.b = float(b)
        self.c = float(c)
        self.d = float(d)

    @staticmethod
    def _lift(x) -> "HyperDual":
        return x if isinstance(x, HyperDual) else HyperDual(float(x))

    def __add__(self, other):
        o = self._lift(other)
        return HyperDual(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return HyperDual(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return HyperDual(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other):
        o = self._lift(other)
        return HyperDual(
            self.a * o.a,
            self.a * o.b + self.b * o.a,
            self.a * o.c + self.c * o.a,
            self.a * o.d + self.d * o.a + self.b * o.c + self.c * o.b,
        )

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("hyper-dual powers are non-negative integers")
        out = HyperDual(1.0)
        for _ in range(n):
            out = out * self
        return out

    def _chain(self, f: float, fp: float, fpp: float) -> "HyperDual":
        # value f(a), with f'(a) and f''(a) pushed through the perturbation
        return HyperDual(
            f,
            fp * self.b,
            fp * self.c,
            fp * self.d + fpp * self.b * self.c,
        )

    def sin(self) -> "HyperDual":
        s, c = math.sin(self.a), math.cos(self.a)
        return self._chain(s, c, -s)

    def cos(self) -> "HyperDual":
        s, c = math.sin(self.a), math.cos(self.a)
        return self._chain(c, -s, -c)

    def __repr__(self):
        return f"HyperDual({self.a}, {self.b}, {self.c}, {self.d})"


def hd_sin(x):
    return x.sin() if isinstance(x, HyperDual) else math.sin(x)


def hd_cos(x):
    return x.cos() if isinstance(x, HyperDual) else math.cos(x)
