"""Exact-identity suites runnable from the CLI and reused by the tests.

Each suite returns (cases, failures) where failures is a list of rendered
counterexamples; an empty list means the suite passed.  All suites are
deterministic (fixed seeds).
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from . import exprparse, opcore
from .ehrenfest import OscillatorModel, trajectory_laplacian
from .opcore import Generator, OperatorPoly
from .phasespace import PhasePoly, smooth, sinc_commutator, var_p, var_q, weyl_mixed_factor
from .scalars import HBAR, I_HBAR

_CENTERS = [
    (Fraction(1, 3), Fraction(-2, 5)),
    (Fraction(0), Fraction(0)),
    (Fraction(7, 4), Fraction(1, 2)),
]


def suite_symmetrize(max_total: int = 8) -> tuple[int, list[str]]:
    """Series quantization equals the brute-force arrangement average."""
    cases, failures = 0, []
    for total in range(max_total + 1):
        for n in range(total + 1):
            m = total - n
            cases += 1
            series = opcore.quantize_symmetric(
                PhasePoly.monomial({var_q(): n, var_p(): m})
            )
            brute = opcore.symmetrize_bruteforce(n, m)
            if series != brute:
                failures.append(
                    f"q^{n} p^{m}: series {exprparse.render(series)} "
                    f"!= brute force {exprparse.render(brute)}"
                )
    return cases, failures


def _random_word(rng: random.Random, kinds, max_len: int, n_modes: int):
    word = []
    for _ in range(rng.randint(0, max_len)):
        word.append((Generator(rng.randrange(n_modes), rng.choice(kinds)), 1))
    return tuple(word)


def _random_poly(rng: random.Random, kinds, max_degree: int, n_modes: int) -> OperatorPoly:
    poly = OperatorPoly.zero()
    for _ in range(rng.randint(1, 4)):
        coeff = Fraction(rng.randint(-6, 6), rng.randint(1, 6))
        if coeff == 0:
            coeff = Fraction(1)
        poly = poly + OperatorPoly.from_word(
            _random_word(rng, kinds, max_degree, n_modes), coeff
        )
    return poly


def suite_ordering(cases: int = 120, seed: int = 2024) -> tuple[int, list[str]]:
    """Rewrite-rule canonicalization agrees with the closed-form path."""
    rng = random.Random(seed)
    failures = []
    for index in range(cases):
        if index % 2:
            kinds, order = ["Q", "P"], rng.choice(["qp", "pq"])
        else:
            kinds, order = ["a", "ad"], rng.choice(["normal", "antinormal"])
        poly = _random_poly(rng, kinds, max_degree=8, n_modes=2)
        a = opcore.canonicalize(poly, order, method="rewrite")
        b = opcore.canonicalize(poly, order, method="closed")
        if a != b:
            failures.append(
                f"{exprparse.render(poly)} [{order}]: rewrite "
                f"{exprparse.render(a)} != closed {exprparse.render(b)}"
            )
    return cases, failures


def suite_smoothing_identity(max_nm: int = 6) -> tuple[int, list[str]]:
    """Coherent expectation of the symmetric operator == smoothed monomial."""
    cases, failures = 0, []
    for n in range(max_nm + 1):
        for m in range(max_nm + 1):
            mono = PhasePoly.monomial({var_q(): n, var_p(): m})
            op = opcore.quantize_symmetric(mono)
            smoothed = smooth(mono, HBAR)
            for q0, p0 in _CENTERS:
                cases += 1
                lhs = opcore.coherent_expectation_exact(op, [q0, p0])
                rhs = smoothed.evaluate_exact({var_q(): q0, var_p(): p0})
                if lhs != rhs:
                    failures.append(
                        f"q^{n} p^{m} at ({q0},{p0}): operator side {lhs!r} "
                        f"!= smoothing side {rhs!r}"
                    )
    return cases, failures


def _ordered_word(n: int, m: int) -> OperatorPoly:
    factors = []
    if n:
        factors.append((Generator(0, "Q"), n))
    if m:
        factors.append((Generator(0, "P"), m))
    return OperatorPoly.from_word(tuple(factors))


def suite_weyl_identity(max_nm: int = 5) -> tuple[int, list[str]]:
    """Raw ordered-word expectation == smooth of the mixed-derivative factor."""
    cases, failures = 0, []
    for n in range(max_nm + 1):
        for m in range(max_nm + 1):
            mono = PhasePoly.monomial({var_q(): n, var_p(): m})
            word = _ordered_word(n, m)
            transformed = smooth(weyl_mixed_factor(mono, HBAR), HBAR)
            for q0, p0 in _CENTERS:
                cases += 1
                lhs = opcore.coherent_expectation_exact(word, [q0, p0])
                rhs = transformed.evaluate_exact({var_q(): q0, var_p(): p0})
                if lhs != rhs:
                    failures.append(
                        f"Q^{n} P^{m} at ({q0},{p0}): expectation {lhs!r} "
                        f"!= weyl-smoothing {rhs!r}"
                    )
    return cases, failures


def suite_sinc_identity(max_nm: int = 5) -> tuple[int, list[str]]:
    """Commutator expectation / (i hbar) == smooth of the sine-series image."""
    cases, failures = 0, []
    inv_ihbar = I_HBAR.inverse()
    for n in range(max_nm + 1):
        for m in range(max_nm + 1):
            mono = PhasePoly.monomial({var_q(): n, var_p(): m})
            qn_pm = _ordered_word(n, m)
            pm_qn = _ordered_word(0, m) * _ordered_word(n, 0)
            commutator = qn_pm - pm_qn
            transformed = smooth(sinc_commutator(mono, HBAR), HBAR)
            for q0, p0 in _CENTERS:
                cases += 1
                lhs = opcore.coherent_expectation_exact(commutator, [q0, p0]) * inv_ihbar
                rhs = transformed.evaluate_exact({var_q(): q0, var_p(): p0})
                if lhs != rhs:
                    failures.append(
                        f"[Q^{n}, P^{m}] at ({q0},{p0}): expectation {lhs!r} "
                        f"!= sinc-smoothing {rhs!r}"
                    )
    return cases, failures


def suite_laplacian(cases: int = 40, seed: int = 99, rtol: float = 1e-10) -> tuple[int, list[str]]:
    """Closed-form trajectory Laplacian agrees with hyper-dual differentiation."""
    rng = random.Random(seed)
    failures = []
    for _ in range(cases):
        n = rng.randint(1, 4)
        k = rng.randint(1, 5)
        model = OscillatorModel(
            n=n,
            k=k,
            g=rng.uniform(0.0, 0.5),
            hbar=0.5,
            omega=tuple(rng.uniform(0.5, 2.0) for _ in range(n)),
            center=tuple(rng.uniform(0.2, 1.5) * rng.choice([-1, 1]) for _ in range(2 * n)),
        )
        t = rng.uniform(0.0, 3.0)
        closed = trajectory_laplacian(model, t, "closed")
        hyper = trajectory_laplacian(model, t, "hyperdual")
        scale = max(float(np.max(np.abs(closed))), 1e-30)
        err = float(np.max(np.abs(closed - hyper))) / scale
        if err > rtol:
            failures.append(
                f"model N={n} k={k} g={model.g:.3f} t={t:.3f}: "
                f"path disagreement {err:.3e} > {rtol}"
            )
    return cases, failures


SUITES = {
    "symmetrize": suite_symmetrize,
    "ordering": suite_ordering,
    "smoothing_identity": suite_smoothing_identity,
    "weyl_identity": suite_weyl_identity,
    "sinc_identity": suite_sinc_identity,
    "laplacian": suite_laplacian,
}


def run_suites(name_filter: str | None = None) -> dict[str, tuple[int, list[str]]]:
    selected = {
        name: fn
        for name, fn in SUITES.items()
        if name_filter is None or name_filter in name
    }
    if not selected:
        raise ValueError(f"no self-check suite matches {name_filter!r}")
    return {name: fn() for name, fn in selected.items()}
