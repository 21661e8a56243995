"""Exact noncommutative algebra over canonical and ladder operator pairs.

Words are products of per-mode generators; the two families are

* canonical: ``Q`` and ``P`` with ``[Q_m, P_m] = i*hbar``,
* bosonic:   ``a`` and ``ad`` with ``[a_m, ad_m] = 1``,

and everything cross-mode commutes.  A word never mixes the two families;
conversion between them is explicit (`to_bosonic` / `to_canonical`).

All coefficients live in the exact scalar ring of :mod:`ordquant.scalars`,
so no operation here ever rounds.  Reordering is implemented twice: a
single-rule term rewriter (ground truth) and closed-form exponential-shift
sums; the two must agree exactly and the test suite checks that they do.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Mapping, NamedTuple, Sequence

from . import phasespace
from .phasespace import PhasePoly
from .scalars import ExactScalar, HBAR, I, I_HBAR, ONE, SQRT_HALF_HBAR

KIND_Q, KIND_P, KIND_A, KIND_ADAG = "Q", "P", "a", "ad"
CANONICAL_KINDS = frozenset({KIND_Q, KIND_P})
BOSONIC_KINDS = frozenset({KIND_A, KIND_ADAG})
#: rank used for the deterministic graded-lexicographic word order
KIND_RANK = {KIND_Q: 0, KIND_P: 1, KIND_ADAG: 2, KIND_A: 3}


class KindMismatchError(ValueError):
    """Raised when canonical and bosonic generators mix inside one word."""


class SymmetrizationBoundError(ValueError):
    """Raised when a brute-force symmetrization would exceed its size bound."""


class Generator(NamedTuple):
    mode: int
    kind: str


Word = tuple[tuple[Generator, int], ...]

IDENTITY_WORD: Word = ()


def make_word(factors: Sequence[tuple[Generator, int]]) -> Word:
    """Merge adjacent equal generators and validate the word.

    Exponents must be positive; canonical and bosonic kinds must not mix.
    """
    merged: list[tuple[Generator, int]] = []
    family = None
    for gen, exp in factors:
        if exp < 0:
            raise ValueError("negative exponent in operator word")
        if exp == 0:
            continue
        gen = Generator(gen.mode, gen.kind) if not isinstance(gen, Generator) else gen
        fam = "canonical" if gen.kind in CANONICAL_KINDS else "bosonic"
        if family is None:
            family = fam
        elif fam != family:
            raise KindMismatchError(
                f"word mixes canonical and bosonic kinds (mode {gen.mode}, kind {gen.kind})"
            )
        if merged and merged[-1][0] == gen:
            merged[-1] = (gen, merged[-1][1] + exp)
        else:
            merged.append((gen, exp))
    return tuple(merged)


def word_degree(word: Word) -> int:
    return sum(exp for _, exp in word)


def word_family(word: Word) -> str | None:
    """'canonical', 'bosonic', or None for the identity word."""
    if not word:
        return None
    return "canonical" if word[0][0].kind in CANONICAL_KINDS else "bosonic"


def word_sort_key(word: Word):
    """Graded-lexicographic key: total degree, then the letter sequence."""
    letters = tuple(
        (g.mode, KIND_RANK[g.kind]) for g, exp in word for _ in range(exp)
    )
    return (word_degree(word), letters)


class OperatorPoly:
    """Sum of exact-coefficient words; the free algebra modulo nothing.

    Multiplication concatenates words (no reordering happens implicitly);
    use `canonicalize` to bring a polynomial to a chosen ordering.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, ExactScalar] | None = None):
        clean: dict[Word, ExactScalar] = {}
        if terms:
            for word, coeff in terms.items():
                coeff = ExactScalar.coerce(coeff)
                if not coeff.is_zero():
                    clean[word] = coeff
        self._terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "OperatorPoly":
        return cls()

    @classmethod
    def identity(cls) -> "OperatorPoly":
        return cls({IDENTITY_WORD: ONE})

    @classmethod
    def constant(cls, value) -> "OperatorPoly":
        return cls({IDENTITY_WORD: ExactScalar.coerce(value)})

    @classmethod
    def generator(cls, kind: str, mode: int = 0, exp: int = 1) -> "OperatorPoly":
        if kind not in KIND_RANK:
            raise ValueError(f"unknown generator kind {kind!r}")
        return cls({make_word(((Generator(mode, kind), exp),)): ONE})

    @classmethod
    def from_word(cls, word: Word, coeff=1) -> "OperatorPoly":
        return cls({make_word(word): ExactScalar.coerce(coeff)})

    # -- inspection --------------------------------------------------------

    def terms(self):
        return self._terms.items()

    def sorted_terms(self):
        """Terms in render order: degree descending, lexicographic within."""
        def key(kv):
            degree, factors = word_sort_key(kv[0])
            return (-degree, factors)

        return sorted(self._terms.items(), key=key)

    def coefficient(self, word: Word) -> ExactScalar:
        return self._terms.get(word, ExactScalar())

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((word_degree(w) for w in self._terms), default=0)

    def modes(self) -> set[int]:
        return {g.mode for w in self._terms for g, _ in w}

    def family(self) -> str | None:
        fams = {word_family(w) for w in self._terms} - {None}
        if len(fams) > 1:
            return "mixed"
        return fams.pop() if fams else None

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for word, coeff in other._terms.items():
            terms[word] = terms.get(word, ExactScalar()) + coeff
        return OperatorPoly(terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __neg__(self):
        return OperatorPoly({w: -c for w, c in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, OperatorPoly):
            return OperatorPoly(
                {w: c * ExactScalar.coerce(other) for w, c in self._terms.items()}
            )
        terms: dict[Word, ExactScalar] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                word = make_word(tuple(w1) + tuple(w2))
                c = c1 * c2
                terms[word] = terms.get(word, ExactScalar()) + c
        return OperatorPoly(terms)

    def __rmul__(self, other):
        # scalars commute with everything; only scalar * poly lands here
        return self.__mul__(other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative operator power")
        out = OperatorPoly.identity()
        for _ in range(n):
            out = out * self
        return out

    def dagger(self) -> "OperatorPoly":
        """Formal adjoint: reverse words, conjugate coefficients, swap a/ad."""
        swap = {KIND_A: KIND_ADAG, KIND_ADAG: KIND_A, KIND_Q: KIND_Q, KIND_P: KIND_P}
        terms: dict[Word, ExactScalar] = {}
        for word, coeff in self._terms.items():
            new = make_word(
                tuple((Generator(g.mode, swap[g.kind]), e) for g, e in reversed(word))
            )
            terms[new] = terms.get(new, ExactScalar()) + coeff.conjugate()
        return OperatorPoly(terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            other = OperatorPoly.constant(other)
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        from . import exprparse

        return f"OperatorPoly({exprparse.render_operator(self)!r})"

    def _coerce(self, other) -> "OperatorPoly":
        if isinstance(other, OperatorPoly):
            return other
        return OperatorPoly.constant(other)


def Q(mode: int = 0) -> OperatorPoly:
    return OperatorPoly.generator(KIND_Q, mode)


def P(mode: int = 0) -> OperatorPoly:
    return OperatorPoly.generator(KIND_P, mode)


def A(mode: int = 0) -> OperatorPoly:
    return OperatorPoly.generator(KIND_A, mode)


def ADAG(mode: int = 0) -> OperatorPoly:
    return OperatorPoly.generator(KIND_ADAG, mode)


# -- ordering targets ---------------------------------------------------------

#: target -> (left kind, right kind, family)
_ORDER_KINDS = {
    "qp": (KIND_Q, KIND_P, "canonical"),
    "pq": (KIND_P, KIND_Q, "canonical"),
    "normal": (KIND_ADAG, KIND_A, "bosonic"),
    "antinormal": (KIND_A, KIND_ADAG, "bosonic"),
}

# Debug-only fault hook: perturbs the canonical commutator so that the
# self-check suites demonstrably catch a wrong algebra.  Never set in
# library code.
_COMMUTATOR_FAULT = False


def set_commutator_fault(enabled: bool) -> None:
    global _COMMUTATOR_FAULT
    _COMMUTATOR_FAULT = bool(enabled)
    _closed_cache.clear()
    _rewrite_cache.clear()
    _poly_cache.clear()


def commutator_scalar(left_kind: str, right_kind: str) -> ExactScalar:
    """The c-number [left, right] for same-mode generators."""
    base: ExactScalar
    if {left_kind, right_kind} == {KIND_Q, KIND_P}:
        base = I_HBAR if left_kind == KIND_Q else -I_HBAR
    elif {left_kind, right_kind} == {KIND_A, KIND_ADAG}:
        base = ONE if left_kind == KIND_A else -ONE
    else:
        base = ExactScalar()
    return base


def _order_spec(order: str):
    try:
        left, right, family = _ORDER_KINDS[order]
    except KeyError:
        raise ValueError(f"unknown ordering target {order!r}") from None
    return left, right, family, commutator_scalar(left, right)


# -- basis conversion ---------------------------------------------------------


def _conversion_poly(gen: Generator) -> OperatorPoly:
    m = gen.mode
    if gen.kind == KIND_Q:
        # Q = sqrt(hbar/2) (a + ad)
        u = SQRT_HALF_HBAR
        return OperatorPoly(
            {
                ((Generator(m, KIND_A), 1),): u,
                ((Generator(m, KIND_ADAG), 1),): u,
            }
        )
    if gen.kind == KIND_P:
        # P = i sqrt(hbar/2) (ad - a)
        iu = I * SQRT_HALF_HBAR
        return OperatorPoly(
            {
                ((Generator(m, KIND_ADAG), 1),): iu,
                ((Generator(m, KIND_A), 1),): -iu,
            }
        )
    inv = SQRT_HALF_HBAR.inverse() * Fraction(1, 2)
    if gen.kind == KIND_A:
        # a = (Q + iP) / (2 sqrt(hbar/2))
        return OperatorPoly(
            {
                ((Generator(m, KIND_Q), 1),): inv,
                ((Generator(m, KIND_P), 1),): I * inv,
            }
        )
    # ad = (Q - iP) / (2 sqrt(hbar/2))
    return OperatorPoly(
        {
            ((Generator(m, KIND_Q), 1),): inv,
            ((Generator(m, KIND_P), 1),): -I * inv,
        }
    )


def _convert(x: OperatorPoly, source_kinds: frozenset[str]) -> OperatorPoly:
    total: dict[Word, ExactScalar] = {}
    for word, coeff in x.terms():
        acc = OperatorPoly.constant(coeff)
        for gen, exp in word:
            if gen.kind in source_kinds:
                acc = acc * _conversion_poly(gen) ** exp
            else:
                acc = acc * OperatorPoly.generator(gen.kind, gen.mode, exp)
        _accumulate(total, acc, ONE)
    return OperatorPoly(total)


def _accumulate(total: dict[Word, ExactScalar], poly: OperatorPoly, scale: ExactScalar):
    for word, coeff in poly.terms():
        total[word] = total.get(word, ExactScalar()) + scale * coeff


def to_bosonic(x: OperatorPoly) -> OperatorPoly:
    """Exact expansion of canonical generators in ladder operators."""
    return _convert(x, CANONICAL_KINDS)


def to_canonical(x: OperatorPoly) -> OperatorPoly:
    """Exact expansion of ladder operators in canonical generators."""
    return _convert(x, BOSONIC_KINDS)


# -- canonicalization ---------------------------------------------------------

_closed_cache: dict = {}
_rewrite_cache: dict = {}
_poly_cache: dict = {}


def canonicalize(x: OperatorPoly, order: str, method: str = "closed") -> OperatorPoly:
    """Reorder every word so designated-left kinds precede designated-right.

    `order` is one of 'qp', 'pq', 'normal', 'antinormal'.  Words in the other
    generator family are converted first.  `method` selects the closed-form
    exponential-shift path ('closed') or the single-rule term rewriter
    ('rewrite'); both produce the same exact result.
    """
    if method not in ("closed", "rewrite"):
        raise ValueError(f"unknown method {method!r}")
    cached = _poly_cache.get((x, order, method))
    if cached is not None:
        return cached
    left, right, family, comm = _order_spec(order)
    total: dict[Word, ExactScalar] = {}
    for word, coeff in x.terms():
        fam = word_family(word)
        if fam is not None and fam != family:
            converted = _convert(
                OperatorPoly.from_word(word),
                CANONICAL_KINDS if fam == "canonical" else BOSONIC_KINDS,
            )
            _accumulate(total, canonicalize(converted, order, method), coeff)
            continue
        if method == "closed":
            reordered = _canonicalize_word_closed(word, order)
        else:
            reordered = _canonicalize_word_rewrite(word, order)
        _accumulate(total, reordered, coeff)
    result = OperatorPoly(total)
    if len(_poly_cache) > 512:
        _poly_cache.clear()
    _poly_cache[(x, order, method)] = result
    return result


def _canonicalize_word_closed(word: Word, order: str) -> OperatorPoly:
    key = (word, order)
    hit = _closed_cache.get(key)
    if hit is not None:
        return hit
    left, right, _, comm = _order_spec(order)
    # cross-mode generators commute: split the word per mode, order each
    # single-mode subword, and take the product in ascending mode order
    per_mode: dict[int, list[tuple[str, int]]] = {}
    for gen, exp in word:
        per_mode.setdefault(gen.mode, []).append((gen.kind, exp))
    result = OperatorPoly.identity()
    for mode in sorted(per_mode):
        single = _closed_single_mode(tuple(per_mode[mode]), left, right, comm)
        poly = OperatorPoly(
            {
                make_word(tuple((Generator(mode, k), e) for k, e in sub)): c
                for sub, c in single.items()
            }
        )
        result = result * poly
    _closed_cache[key] = result
    return result


def _closed_single_mode(
    factors: tuple[tuple[str, int], ...], left: str, right: str, comm: ExactScalar
) -> dict[tuple[tuple[str, int], ...], ExactScalar]:
    """Order a single-mode word with the exponential-shift block swap.

    A wrong-order block pair R^m L^n is replaced by the finite sum

        sum_k (-comm)^k / k! * n!m! / ((n-k)! (m-k)!) * L^(n-k) R^(m-k)

    which is the closed form of the double-derivative shift operator.
    """
    key = (factors, left, right, comm)
    hit = _closed_cache.get(key)
    if hit is not None:
        return hit
    pos = None
    for idx in range(len(factors) - 1):
        if factors[idx][0] == right and factors[idx + 1][0] == left:
            pos = idx
            break
    if pos is None:
        merged = _merge_kind_factors(factors)
        _closed_cache[key] = {merged: ONE}
        return {merged: ONE}
    m = factors[pos][1]
    n = factors[pos + 1][1]
    head, tail = factors[:pos], factors[pos + 2 :]
    out: dict[tuple[tuple[str, int], ...], ExactScalar] = {}
    coeff = ONE
    for k in range(min(n, m) + 1):
        if k:
            coeff = coeff * (-comm) * Fraction((n - k + 1) * (m - k + 1), k)
        block: list[tuple[str, int]] = []
        if n - k:
            block.append((left, n - k))
        if m - k:
            block.append((right, m - k))
        for sub, c in _closed_single_mode(
            head + tuple(block) + tail, left, right, comm
        ).items():
            total = out.get(sub, ExactScalar()) + coeff * c
            if total.is_zero():
                out.pop(sub, None)
            else:
                out[sub] = total
    _closed_cache[key] = out
    return out


def _merge_kind_factors(factors):
    merged: list[tuple[str, int]] = []
    for kind, exp in factors:
        if merged and merged[-1][0] == kind:
            merged[-1] = (kind, merged[-1][1] + exp)
        else:
            merged.append((kind, exp))
    return tuple(m for m in merged if m[1])


def _canonicalize_word_rewrite(word: Word, order: str) -> OperatorPoly:
    """Ground-truth reordering: repeat the single rule  R L = L R - [L, R].

    Works on fully expanded generator sequences; cross-mode swaps are free.
    """
    key = (word, order)
    hit = _rewrite_cache.get(key)
    if hit is not None:
        return hit
    left, right, _, comm = _order_spec(order)
    if _COMMUTATOR_FAULT:
        # debug hook: corrupt this path only, so the closed form (and every
        # identity built on it) visibly disagrees
        comm = comm + ExactScalar.rational(Fraction(1, 64))
    flat: list[Generator] = []
    for gen, exp in word:
        flat.extend([gen] * exp)

    def rank(gen: Generator) -> int:
        return 0 if gen.kind == left else 1

    result: dict[Word, ExactScalar] = {}
    stack: list[tuple[tuple[Generator, ...], ExactScalar]] = [(tuple(flat), ONE)]
    while stack:
        seq, coeff = stack.pop()
        swapped = False
        for i in range(len(seq) - 1):
            g1, g2 = seq[i], seq[i + 1]
            if g1.mode > g2.mode:
                stack.append((seq[:i] + (g2, g1) + seq[i + 2 :], coeff))
                swapped = True
                break
            if g1.mode == g2.mode and rank(g1) > rank(g2):
                stack.append((seq[:i] + (g2, g1) + seq[i + 2 :], coeff))
                extra = coeff * (-comm)
                stack.append((seq[:i] + seq[i + 2 :], extra))
                swapped = True
                break
        if not swapped:
            w = make_word(tuple((g, 1) for g in seq))
            total = result.get(w, ExactScalar()) + coeff
            if total.is_zero():
                result.pop(w, None)
            else:
                result[w] = total
    poly = OperatorPoly(result)
    _rewrite_cache[key] = poly
    return poly


# -- symmetric (Weyl) quantization --------------------------------------------


def s_series_coefficients(
    n: int, m: int, c: ExactScalar
) -> dict[tuple[int, int], ExactScalar]:
    """Coefficients of the symmetrizing double-derivative series on A^n B^m.

    Returns {(n-k, m-k): (-c/2)^k / k! * n!m!/((n-k)!(m-k)!)}; with
    c = [Q, P] = i*hbar this turns the monomial q^n p^m into its totally
    symmetric operator written in q-before-p order.
    """
    out: dict[tuple[int, int], ExactScalar] = {}
    coeff = ONE
    for k in range(min(n, m) + 1):
        if k:
            coeff = coeff * (-c) * Fraction((n - k + 1) * (m - k + 1), 2 * k)
        out[(n - k, m - k)] = coeff
    return out


def _symmetric_mode_poly(n: int, m: int, mode: int) -> OperatorPoly:
    terms: dict[Word, ExactScalar] = {}
    for (nk, mk), coeff in s_series_coefficients(n, m, commutator_scalar(KIND_Q, KIND_P)).items():
        factors = []
        if nk:
            factors.append((Generator(mode, KIND_Q), nk))
        if mk:
            factors.append((Generator(mode, KIND_P), mk))
        terms[make_word(tuple(factors))] = coeff
    return OperatorPoly(terms)


def quantize_symmetric(f: PhasePoly | phasespace.Monomial) -> OperatorPoly:
    """Weyl quantization: each monomial becomes its symmetric operator.

    The result is written in q-before-p order per mode; multiple modes are
    handled independently (cross-mode generators commute).  Extends linearly
    over polynomials.
    """
    if not isinstance(f, PhasePoly):
        f = PhasePoly({tuple(f): ExactScalar.rational(1)})
    out = OperatorPoly.zero()
    for mono, coeff in f.terms():
        if not isinstance(coeff, ExactScalar):
            raise TypeError("symmetric quantization requires exact coefficients")
        exps: dict[int, list[int]] = {}
        for (mode, coord), exp in mono:
            exps.setdefault(mode, [0, 0])[coord] = exp
        acc = OperatorPoly.constant(coeff)
        for mode in sorted(exps):
            n, m = exps[mode]
            acc = acc * _symmetric_mode_poly(n, m, mode)
        out = out + acc
    return out


def symmetrize_bruteforce(n: int, m: int, mode: int = 0, bound: int = 10) -> OperatorPoly:
    """Average of all distinct arrangements of n Q's and m P's, reordered.

    Serves as the independent oracle for `quantize_symmetric`.  The number of
    arrangements is binomial(n+m, n), so the total degree is capped.
    """
    if n + m > bound:
        raise SymmetrizationBoundError(
            f"degree {n + m} exceeds brute-force bound {bound}"
        )
    total = n + m
    acc = OperatorPoly.zero()
    count = 0
    for q_positions in combinations(range(total), n):
        qset = set(q_positions)
        gens = tuple(
            (Generator(mode, KIND_Q if i in qset else KIND_P), 1) for i in range(total)
        )
        acc = acc + canonicalize(
            OperatorPoly.from_word(gens), "qp", method="rewrite"
        )
        count += 1
    return acc * Fraction(1, count)


# -- coherent-state expectations ----------------------------------------------


def _normal_substitute(x_normal: OperatorPoly, value_a, value_ad, combine):
    total = None
    for word, coeff in x_normal.terms():
        acc = combine(coeff)
        for gen, exp in word:
            v = value_ad(gen.mode) if gen.kind == KIND_ADAG else value_a(gen.mode)
            for _ in range(exp):
                acc = acc * v
        total = acc if total is None else total + acc
    return total


def coherent_matrix_element(
    x: OperatorPoly, alpha1, alpha2, hbar: float = 1.0
) -> complex:
    """<alpha1| x |alpha2> / <alpha1|alpha2> for per-mode coherent labels.

    Computed by normal ordering and substituting ad -> conj(alpha1),
    a -> alpha2.  Scalars or per-mode sequences are accepted.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    normal = canonicalize(x, "normal")

    def as_seq(alpha):
        return alpha if isinstance(alpha, (list, tuple)) else [alpha]

    a1, a2 = as_seq(alpha1), as_seq(alpha2)

    def value_a(mode):
        return complex(a2[mode])

    def value_ad(mode):
        return complex(a1[mode]).conjugate()

    total = _normal_substitute(normal, value_a, value_ad, lambda c: c.evaluate(hbar))
    return 0j if total is None else total


def coherent_expectation(x: OperatorPoly, center: Sequence[float], hbar: float) -> complex:
    """Diagonal coherent expectation at a phase-space center (q1,p1,...)."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    pt = phasespace.as_point(center)
    alphas = [
        (pt[2 * m] + 1j * pt[2 * m + 1]) / math.sqrt(2.0 * hbar)
        for m in range(len(pt) // 2)
    ]
    return coherent_matrix_element(x, alphas, alphas, hbar)


def coherent_expectation_exact(
    x: OperatorPoly, center: Sequence[Fraction]
) -> ExactScalar:
    """Exact diagonal coherent expectation with hbar kept symbolic.

    The center is rational, laid out (q1, p1, ...); the coherent label
    (q + i p) / sqrt(2 hbar) stays inside the exact graded scalar ring.
    """
    pt = [Fraction(v) for v in center]
    if len(pt) % 2:
        raise ValueError("center needs an even number of coordinates")
    normal = canonicalize(x, "normal")
    inv_u = SQRT_HALF_HBAR.inverse() * Fraction(1, 2)

    def value_a(mode):
        return ExactScalar.rational(pt[2 * mode], pt[2 * mode + 1]) * inv_u

    def value_ad(mode):
        return ExactScalar.rational(pt[2 * mode], -pt[2 * mode + 1]) * inv_u

    total = _normal_substitute(normal, value_a, value_ad, lambda c: c)
    return ExactScalar() if total is None else total


def to_normal_order(x: OperatorPoly, method: str = "closed") -> OperatorPoly:
    """Normal order: every ad left of every a per mode, exactly.

    Canonical-family input is converted to ladder operators first.
    """
    return canonicalize(x, "normal", method=method)
