"""Commutative polynomials over phase-space variables and Gaussian smoothing.

Variables are pairs ``(mode, coord)`` with ``coord`` 0 for position and 1 for
momentum; a point in phase space is laid out ``(q1, p1, ..., qN, pN)``.

Width convention, fixed package-wide: a Gaussian density proportional to
``exp(-x^2/sigma)`` per coordinate, hence per-coordinate variance ``sigma/2``.
Smoothing with ``sigma`` applies ``exp((sigma/4) * laplacian)``, and
``sigma = hbar`` matches the coherent-state variance ``hbar/2``.  Mixing width
conventions is the classic silent error in this business; every routine in
this module takes ``sigma`` in the convention above.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .scalars import (
    ExactScalar,
    Coefficient,
    HBAR,
    I,
    cadd,
    cconj,
    cequal,
    cevaluate,
    ciszero,
    cmul,
    cneg,
)

#: coordinate indices within a mode
COORD_Q, COORD_P = 0, 1

Var = tuple[int, int]
Monomial = tuple[tuple[Var, int], ...]


def var_q(mode: int = 0) -> Var:
    return (mode, COORD_Q)


def var_p(mode: int = 0) -> Var:
    return (mode, COORD_P)


def as_point(values: Sequence[float]) -> tuple[float, ...]:
    """Validate a phase-space point: flat (q1, p1, ..., qN, pN), all finite."""
    pt = tuple(float(v) for v in values)
    if len(pt) % 2:
        raise ValueError("phase point needs an even number of coordinates")
    if not all(math.isfinite(v) for v in pt):
        raise ValueError("phase point coordinates must be finite")
    return pt


def _make_monomial(items: Iterable[tuple[Var, int]]) -> Monomial:
    merged: dict[Var, int] = {}
    for var, exp in items:
        if exp < 0:
            raise ValueError("negative exponent in phase monomial")
        if exp:
            merged[var] = merged.get(var, 0) + exp
    return tuple(sorted(merged.items()))


class PhasePoly:
    """Sparse multivariate polynomial with exact or numeric coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Coefficient] | None = None):
        clean: dict[Monomial, Coefficient] = {}
        if terms:
            for mono, coeff in terms.items():
                if isinstance(coeff, (int, Fraction)):
                    coeff = ExactScalar.coerce(coeff)
                if not ciszero(coeff):
                    clean[mono] = coeff
        self._terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "PhasePoly":
        return cls()

    @classmethod
    def constant(cls, value: Coefficient) -> "PhasePoly":
        return cls({(): value})

    @classmethod
    def variable(cls, var: Var) -> "PhasePoly":
        return cls({((var, 1),): ExactScalar.rational(1)})

    @classmethod
    def monomial(cls, exponents: Mapping[Var, int], coeff: Coefficient = 1) -> "PhasePoly":
        return cls({_make_monomial(exponents.items()): coeff})

    # -- inspection --------------------------------------------------------

    def terms(self):
        return self._terms.items()

    def coefficient(self, mono: Monomial) -> Coefficient:
        return self._terms.get(mono, ExactScalar())

    def is_zero(self) -> bool:
        return not self._terms

    def is_exact(self) -> bool:
        return all(isinstance(c, ExactScalar) for c in self._terms.values())

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for mono in self._terms:
            out.update(var for var, _ in mono)
        return out

    def modes(self) -> set[int]:
        return {var[0] for var in self.variables()}

    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(e for _, e in mono) for mono in self._terms)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for mono, coeff in other._terms.items():
            if mono in terms:
                terms[mono] = cadd(terms[mono], coeff)
            else:
                terms[mono] = coeff
        return PhasePoly(terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __neg__(self):
        return PhasePoly({m: cneg(c) for m, c in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, PhasePoly):
            return PhasePoly({m: cmul(c, other) for m, c in self._terms.items()})
        terms: dict[Monomial, Coefficient] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = _make_monomial(list(m1) + list(m2))
                prod = cmul(c1, c2)
                if mono in terms:
                    terms[mono] = cadd(terms[mono], prod)
                else:
                    terms[mono] = prod
        return PhasePoly(terms)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative polynomial power")
        out = PhasePoly.constant(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, PhasePoly):
            return NotImplemented
        if set(self._terms) != set(other._terms):
            return False
        return all(cequal(c, other._terms[m]) for m, c in self._terms.items())

    def __hash__(self):
        return hash(frozenset(self._terms))

    def __repr__(self):
        from . import exprparse

        return f"PhasePoly({exprparse.render_phase(self)!r})"

    def _coerce(self, other) -> "PhasePoly":
        if isinstance(other, PhasePoly):
            return other
        return PhasePoly.constant(other)

    # -- calculus ----------------------------------------------------------

    def diff(self, var: Var) -> "PhasePoly":
        terms: dict[Monomial, Coefficient] = {}
        for mono, coeff in self._terms.items():
            md = dict(mono)
            e = md.get(var, 0)
            if not e:
                continue
            md[var] = e - 1
            new_mono = _make_monomial(md.items())
            contrib = cmul(coeff, e)
            if new_mono in terms:
                terms[new_mono] = cadd(terms[new_mono], contrib)
            else:
                terms[new_mono] = contrib
        return PhasePoly(terms)

    # -- substitution and evaluation ----------------------------------------

    def substitute(self, mapping: Mapping[Var, "PhasePoly"]) -> "PhasePoly":
        """Replace each variable by a polynomial (used for linear flows)."""
        out = PhasePoly.zero()
        for mono, coeff in self._terms.items():
            term = PhasePoly.constant(coeff)
            for var, exp in mono:
                base = mapping.get(var, PhasePoly.variable(var))
                term = term * base**exp
            out = out + term
        return out

    def evaluate(self, point: Sequence[float], hbar: float | None = None) -> complex:
        """Value at a numeric point.

        When every coefficient is exact and of even hbar grade, arithmetic is
        done in rationals (the point's floats are taken at their exact binary
        values) and rounded once at the end.
        """
        pt = as_point(point)
        if self.is_exact() and all(
            g % 2 == 0 for c in self._terms.values() for g in c.grades()
        ):
            hb = Fraction(hbar) if hbar is not None else None
            re_t, im_t = Fraction(0), Fraction(0)
            for mono, coeff in self._terms.items():
                mval = Fraction(1)
                for (mode, coord), exp in mono:
                    mval *= Fraction(pt[2 * mode + coord]) ** exp
                if any(g != 0 for g in coeff.grades()):
                    if hb is None:
                        raise ValueError("numeric hbar required")
                    re, im = coeff.evaluate_rational(hb)
                else:
                    re, im = coeff.evaluate_rational(Fraction(1))
                re_t += re * mval
                im_t += im * mval
            return complex(float(re_t), float(im_t))
        total = 0j
        for mono, coeff in self._terms.items():
            mval = 1.0
            for (mode, coord), exp in mono:
                mval *= pt[2 * mode + coord] ** exp
            total += cevaluate(coeff, hbar) * mval
        return total

    def evaluate_exact(self, point: Mapping[Var, Fraction]) -> ExactScalar:
        """Exact value at a rational point, hbar kept symbolic."""
        total = ExactScalar()
        for mono, coeff in self._terms.items():
            if not isinstance(coeff, ExactScalar):
                raise TypeError("evaluate_exact requires exact coefficients")
            mval = Fraction(1)
            for var, exp in mono:
                mval *= Fraction(point[var]) ** exp
            total = total + coeff * ExactScalar.rational(mval)
        return total

    def evaluate_array(self, points) -> "object":
        """Vectorized evaluation on an (M, 2N) float array; returns array."""
        import numpy as np

        pts = np.asarray(points, dtype=float)
        complex_out = False
        for coeff in self._terms.values():
            if cevaluate(coeff).imag != 0:
                complex_out = True
        total = np.zeros(pts.shape[0], dtype=complex if complex_out else float)
        for mono, coeff in self._terms.items():
            mval = np.ones(pts.shape[0])
            for (mode, coord), exp in mono:
                mval = mval * pts[:, 2 * mode + coord] ** exp
            c = cevaluate(coeff)
            total = total + (c if complex_out else c.real) * mval
        return total


# -- differential operators ---------------------------------------------------


def laplacian(f: PhasePoly) -> PhasePoly:
    """Sum of second derivatives over every variable appearing in `f`."""
    out = PhasePoly.zero()
    for var in f.variables():
        out = out + f.diff(var).diff(var)
    return out


def mixed_derivative(f: PhasePoly) -> PhasePoly:
    """The cross-derivative sum over modes: per mode, d/dq then d/dp."""
    out = PhasePoly.zero()
    for mode in f.modes():
        out = out + f.diff(var_q(mode)).diff(var_p(mode))
    return out


def smooth(f: PhasePoly, sigma: Coefficient) -> PhasePoly:
    """Gaussian smoothing: sum_j (sigma/4)^j / j! * laplacian^j f.

    The series is finite on polynomials.  `sigma` may be numeric, an exact
    rational, or symbolic (e.g. the HBAR scalar) for exact identity work.
    """
    quarter = cmul(sigma, Fraction(1, 4))
    out = f
    term = f
    factor: Coefficient = ExactScalar.rational(1)
    j = 0
    while True:
        term = laplacian(term)
        if term.is_zero():
            return out
        j += 1
        factor = cmul(factor, cmul(quarter, Fraction(1, j)))
        out = out + term * factor


def inverse_smooth(f: PhasePoly, sigma: Coefficient) -> PhasePoly:
    """Exact inverse of `smooth` on polynomials (the series with -sigma)."""
    return smooth(f, cneg(sigma))


def weyl_mixed_factor(f: PhasePoly, hbar: Coefficient = HBAR) -> PhasePoly:
    """Apply exp((i*hbar/2) * d/dq d/dp) summed per mode; finite on polynomials.

    Composed with `smooth(.., hbar)` and evaluated at a center this produces
    the coherent expectation of the corresponding q-before-p ordered operator
    word, which is the route from ordered words back to phase space.
    """
    half_i = cmul(cmul(hbar, I), Fraction(1, 2))
    out = f
    term = f
    factor: Coefficient = ExactScalar.rational(1)
    j = 0
    while True:
        term = mixed_derivative(term)
        if term.is_zero():
            return out
        j += 1
        factor = cmul(factor, cmul(half_i, Fraction(1, j)))
        out = out + term * factor


def sinc_commutator(f: PhasePoly, hbar: Coefficient = HBAR) -> PhasePoly:
    """Apply sin((hbar/2) D) / (hbar/2) with D the mixed-derivative sum.

    Expanded, that is sum_l (-1)^l (hbar/2)^(2l) D^(2l+1) / (2l+1)!, a finite
    odd series on polynomials.  Smoothing the result and evaluating at a
    center reproduces commutator expectations divided by i*hbar.
    """
    half = cmul(hbar, Fraction(1, 2))
    out = PhasePoly.zero()
    term = mixed_derivative(f)
    factor: Coefficient = ExactScalar.rational(1)
    l = 0
    while not term.is_zero():
        out = out + term * factor
        # advance two orders: multiply by -(hbar/2)^2 / ((2l+2)(2l+3))
        term = mixed_derivative(mixed_derivative(term))
        l += 1
        factor = cmul(
            factor,
            cmul(cneg(cmul(half, half)), Fraction(1, (2 * l) * (2 * l + 1))),
        )
    return out


def expectation_time_evolved(
    f_at_t: PhasePoly, center: Sequence[float], hbar: float
) -> complex:
    """Expectation of an already time-evolved classical polynomial.

    This is Gaussian smoothing at width hbar followed by evaluation at the
    packet center, which is the short-time quantized expectation value.
    """
    return smooth(f_at_t, Fraction(hbar) if isinstance(hbar, float) else hbar).evaluate(
        center, hbar=float(hbar)
    )


# -- independent moment-table oracle ------------------------------------------


def gaussian_moment_average(
    f: PhasePoly, center: Mapping[Var, Fraction], sigma: Coefficient
) -> Coefficient:
    """Closed-form Gaussian average of `f` from the moment table.

    Independent of `smooth`: uses E[(c + x)^e] with x centered Gaussian of
    variance sigma/2, E[x^(2j)] = (2j-1)!! (sigma/2)^j.  Exact for exact
    inputs; `sigma` may be symbolic.
    """
    half_sigma = cmul(sigma, Fraction(1, 2))
    total: Coefficient = ExactScalar()
    for mono, coeff in f.terms():
        acc: Coefficient = coeff
        for var, exp in mono:
            c = Fraction(center[var])
            var_sum: Coefficient = ExactScalar()
            for j in range(0, exp + 1, 2):
                moment = cmul(
                    _double_factorial(j - 1), half_sigma ** (j // 2)
                )
                weight = math.comb(exp, j) * c ** (exp - j)
                var_sum = cadd(var_sum, cmul(moment, weight))
            acc = cmul(acc, var_sum)
        total = cadd(total, acc)
    return total


def _double_factorial(n: int) -> int:
    if n <= 0:
        return 1
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out
