"""Exact scalar ring used by the operator and phase-space algebras.

A scalar is a finite sum of graded terms

    (re + i*im) * (hbar/2)^(grade/2)

with `re`, `im` rational (arbitrary precision) and `grade` an integer, so
half-integer powers of hbar are representable exactly.  The unit of the
grading is sqrt(hbar/2), which is the factor that enters when canonical
operators are rewritten in terms of ladder operators; keeping it as a unit
means every conversion in the package stays in exact arithmetic.

Plain numbers embed at grade 0.  `hbar` itself is ``2 * (hbar/2)``, i.e.
rational part 2 at grade 2.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Union

RationalLike = Union[int, Fraction]
ScalarLike = Union["ExactScalar", int, Fraction]


class ExactScalar:
    """Immutable exact scalar: Gaussian rationals graded by sqrt(hbar/2)."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        # terms: dict {grade: (re, im)} with zero entries dropped.
        clean = {}
        if terms:
            for grade, (re, im) in terms.items():
                if re or im:
                    clean[int(grade)] = (Fraction(re), Fraction(im))
        self._terms = clean
        self._hash = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def rational(cls, re, im=0, grade=0) -> "ExactScalar":
        """Scalar (re + i*im) * (hbar/2)^(grade/2)."""
        return cls({grade: (Fraction(re), Fraction(im))})

    @classmethod
    def coerce(cls, value: ScalarLike) -> "ExactScalar":
        if isinstance(value, ExactScalar):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.rational(value)
        raise TypeError(f"cannot coerce {type(value).__name__} to ExactScalar")

    # -- inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        return all(im == 0 for _, im in self._terms.values())

    def grades(self) -> list[int]:
        return sorted(self._terms)

    def term_items(self) -> Iterator[tuple[int, Fraction, Fraction]]:
        """Yield (grade, re, im) triples in ascending grade order."""
        for grade in sorted(self._terms):
            re, im = self._terms[grade]
            yield grade, re, im

    def single_rational(self) -> Fraction:
        """The value as a plain rational; requires a real grade-0 scalar."""
        if self.is_zero():
            return Fraction(0)
        if self.grades() != [0] or not self.is_real():
            raise ValueError("scalar is not a plain rational")
        return self._terms[0][0]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        other = ExactScalar.coerce(other)
        terms = dict(self._terms)
        for grade, (re, im) in other._terms.items():
            cre, cim = terms.get(grade, (Fraction(0), Fraction(0)))
            terms[grade] = (cre + re, cim + im)
        return ExactScalar(terms)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        return self + (-ExactScalar.coerce(other))

    def __rsub__(self, other):
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        return ExactScalar.coerce(other) + (-self)

    def __neg__(self):
        return ExactScalar({g: (-re, -im) for g, (re, im) in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, (ExactScalar, int, Fraction)):
            return NotImplemented
        other = ExactScalar.coerce(other)
        terms: dict[int, tuple[Fraction, Fraction]] = {}
        for g1, (a, b) in self._terms.items():
            for g2, (c, d) in other._terms.items():
                g = g1 + g2
                re = a * c - b * d
                im = a * d + b * c
                cre, cim = terms.get(g, (Fraction(0), Fraction(0)))
                terms[g] = (cre + re, cim + im)
        return ExactScalar(terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("exponent must be an integer")
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def inverse(self) -> "ExactScalar":
        """Multiplicative inverse; defined for single-term scalars only."""
        if len(self._terms) != 1:
            raise ValueError("inverse requires a single graded term")
        ((grade, (re, im)),) = self._terms.items()
        norm = re * re + im * im
        return ExactScalar({-grade: (re / norm, -im / norm)})

    def conjugate(self) -> "ExactScalar":
        return ExactScalar({g: (re, -im) for g, (re, im) in self._terms.items()})

    # -- evaluation --------------------------------------------------------

    def evaluate(self, hbar: float | None = None) -> complex:
        """Numeric value; `hbar` is required whenever any grade is nonzero."""
        if not self._terms:
            return 0j
        if any(g != 0 for g in self._terms) and hbar is None:
            raise ValueError("numeric hbar required to evaluate a graded scalar")
        total = 0j
        for grade, (re, im) in self._terms.items():
            scale = 1.0 if grade == 0 else (hbar / 2.0) ** (grade / 2.0)
            total += complex(re + im * 1j) * scale
        return total

    def evaluate_rational(self, hbar: Fraction) -> tuple[Fraction, Fraction]:
        """Exact (re, im) at a rational hbar; requires even grades only."""
        re_t, im_t = Fraction(0), Fraction(0)
        half = Fraction(hbar) / 2
        for grade, (re, im) in self._terms.items():
            if grade % 2:
                raise ValueError("odd sqrt(hbar/2) grade has no rational value")
            scale = half ** (grade // 2)
            re_t += re * scale
            im_t += im * scale
        return re_t, im_t

    # -- comparisons -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ExactScalar.coerce(other)
        if not isinstance(other, ExactScalar):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self):
        if not self._terms:
            return "ExactScalar(0)"
        parts = []
        for grade, re, im in self.term_items():
            parts.append(f"({re}{'+' if im >= 0 else ''}{im}j)*u^{grade}")
        return "ExactScalar(" + " + ".join(parts) + ")"


ZERO = ExactScalar()
ONE = ExactScalar.rational(1)
I = ExactScalar.rational(0, 1)
#: hbar as an exact symbol: 2 * (hbar/2).
HBAR = ExactScalar.rational(2, 0, grade=2)
#: sqrt(hbar/2), the grading unit.
SQRT_HALF_HBAR = ExactScalar.rational(1, 0, grade=1)
I_HBAR = I * HBAR


# -- coefficient union helpers ----------------------------------------------
#
# Phase-space polynomials allow numeric (complex) coefficients alongside exact
# ones.  These helpers implement arithmetic on the union.  Mixing an exact
# scalar of nonzero grade with a float is refused: the value would depend on
# hbar, which must then be supplied explicitly at evaluation time.

Coefficient = Union[ExactScalar, complex, float, int, Fraction]


def _to_numeric(value: Coefficient) -> complex:
    if isinstance(value, ExactScalar):
        return value.evaluate()
    return complex(value)


def _is_exact(value: Coefficient) -> bool:
    return isinstance(value, (ExactScalar, int, Fraction))


def cadd(a: Coefficient, b: Coefficient) -> Coefficient:
    if _is_exact(a) and _is_exact(b):
        return ExactScalar.coerce(a) + ExactScalar.coerce(b)
    return _to_numeric(a) + _to_numeric(b)


def cmul(a: Coefficient, b: Coefficient) -> Coefficient:
    if _is_exact(a) and _is_exact(b):
        return ExactScalar.coerce(a) * ExactScalar.coerce(b)
    return _to_numeric(a) * _to_numeric(b)


def cneg(a: Coefficient) -> Coefficient:
    if _is_exact(a):
        return -ExactScalar.coerce(a)
    return -complex(a)


def cconj(a: Coefficient) -> Coefficient:
    if _is_exact(a):
        return ExactScalar.coerce(a).conjugate()
    return complex(a).conjugate()


def ciszero(a: Coefficient) -> bool:
    if _is_exact(a):
        return ExactScalar.coerce(a).is_zero()
    return complex(a) == 0


def cequal(a: Coefficient, b: Coefficient) -> bool:
    if _is_exact(a) and _is_exact(b):
        return ExactScalar.coerce(a) == ExactScalar.coerce(b)
    return _to_numeric(a) == _to_numeric(b)


def cevaluate(a: Coefficient, hbar: float | None = None) -> complex:
    if isinstance(a, ExactScalar):
        return a.evaluate(hbar)
    return complex(a)
