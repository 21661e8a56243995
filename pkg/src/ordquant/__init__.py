"""Ordered quantization, Gaussian phase-space smoothing, and break times.

The package is organized as:

* :mod:`ordquant.scalars`    exact graded scalar ring (rationals, i, hbar)
* :mod:`ordquant.opcore`     noncommutative operator words and orderings
* :mod:`ordquant.phasespace` commutative polynomials and Gaussian smoothing
* :mod:`ordquant.liouville`  Monte Carlo ensemble averages and verifiers
* :mod:`ordquant.ehrenfest`  coupled nonlinear oscillators and break times
* :mod:`ordquant.exprparse`  expression grammar (parse and render)
* :mod:`ordquant.cli`        the `ordquant` command-line tool
"""

from .scalars import ExactScalar, HBAR, I, SQRT_HALF_HBAR
from .phasespace import PhasePoly, smooth, inverse_smooth, weyl_mixed_factor, sinc_commutator
from .opcore import (
    OperatorPoly,
    canonicalize,
    coherent_expectation,
    quantize_symmetric,
    symmetrize_bruteforce,
    to_bosonic,
    to_canonical,
    to_normal_order,
)

__all__ = [
    "ExactScalar",
    "HBAR",
    "I",
    "SQRT_HALF_HBAR",
    "PhasePoly",
    "smooth",
    "inverse_smooth",
    "weyl_mixed_factor",
    "sinc_commutator",
    "OperatorPoly",
    "canonicalize",
    "coherent_expectation",
    "quantize_symmetric",
    "symmetrize_bruteforce",
    "to_bosonic",
    "to_canonical",
    "to_normal_order",
]

__version__ = "0.1.0"
