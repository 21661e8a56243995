"""N coupled nonlinear oscillators: exact flow, departure, break time.

The Hamiltonian is a sum of harmonic terms plus a power of the total action,

    H = sum_i omega_i (p_i^2 + q_i^2)/2 + g * Lambda^k,
    Lambda = sum_i (p_i^2 + q_i^2)/2,

which is exactly solvable: Lambda is conserved and every mode rotates by the
amplitude-dependent angle

    Theta_i(t) = omega_i t + g t k Lambda^(k-1),

with Lambda taken at the argument point (the flow is a map on all of phase
space, not just near the configured center).

The departure function compares the first-order smoothed centroid with the
classical trajectory,

    delta(t) = (hbar/4) * ||laplacian r(t)|| / ||r(0)||,

where the Laplacian is taken with respect to the 2N initial coordinates and
evaluated at the model center.  Its closed form is derived in
docs/trajectory_laplacian.md and cross-checked against hyper-dual automatic
differentiation; the break time is the first time delta reaches 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .autodiff import HyperDual, hd_cos, hd_sin


class ConfigError(ValueError):
    """Invalid model configuration; the message names the offending field."""


class HorizonError(RuntimeError):
    """No departure crossing found within the scan horizon."""


class DegenerateCenterError(ValueError):
    """The initial phase-space vector has zero norm."""


@dataclass(frozen=True)
class OscillatorModel:
    """Model parameters plus the initial phase-space center.

    `center` is laid out (q1, p1, ..., qN, pN).  The total action at the
    center must be positive; the break-time formulas divide by it.
    """

    n: int
    k: int
    g: float
    hbar: float
    omega: tuple[float, ...]
    center: tuple[float, ...]

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("N must be an integer >= 1")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError("k must be an integer >= 1")
        if self.g < 0:
            raise ConfigError("g must be >= 0")
        if not self.hbar > 0:
            raise ConfigError("hbar must be > 0")
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.omega) != self.n:
            raise ConfigError("omega must have length N")
        if len(self.center) != 2 * self.n:
            raise ConfigError("center must have length 2N")
        if not all(math.isfinite(v) for v in self.center + self.omega):
            raise ConfigError("center and omega entries must be finite")
        if self.action() <= 0:
            raise ConfigError("center must have positive action (q0/p0 not all zero)")

    @classmethod
    def from_config(cls, config: dict) -> "OscillatorModel":
        """Build from the JSON document {"N","k","g","hbar","omega","q0","p0"}."""
        required = ["N", "k", "g", "hbar", "omega", "q0", "p0"]
        for field in required:
            if field not in config:
                raise ConfigError(f"missing field {field!r}")
        n = config["N"]
        if not isinstance(n, int):
            raise ConfigError("N must be an integer")
        for field in ("omega", "q0", "p0"):
            value = config[field]
            if not isinstance(value, list) or len(value) != n:
                raise ConfigError(f"{field} must be a list of length N")
        if not isinstance(config["k"], int):
            raise ConfigError("k must be an integer")
        center = []
        for q, p in zip(config["q0"], config["p0"]):
            center.extend([q, p])
        return cls(
            n=n,
            k=config["k"],
            g=float(config["g"]),
            hbar=float(config["hbar"]),
            omega=tuple(config["omega"]),
            center=tuple(center),
        )

    def with_hbar(self, hbar: float) -> "OscillatorModel":
        return replace(self, hbar=float(hbar))

    def with_center(self, center: Sequence[float]) -> "OscillatorModel":
        return replace(self, center=tuple(float(c) for c in center))

    def action(self, point: Sequence[float] | None = None) -> float:
        """Total action Lambda = sum (q^2 + p^2)/2 at a point (default center)."""
        pt = self.center if point is None else point
        return 0.5 * float(sum(v * v for v in pt))

    def omega_typical(self) -> float:
        """1 / (k (k-1) g Lambda^(k-1)); infinite for harmonic models."""
        if self.g == 0 or self.k == 1:
            return math.inf
        return 1.0 / (self.k * (self.k - 1) * self.g * self.action() ** (self.k - 1))

    def is_harmonic(self) -> bool:
        return self.g == 0 or self.k == 1


@dataclass(frozen=True)
class EhrenfestResult:
    t_numeric: float | None
    t_analytic: float | None
    omega_typical: float
    action_typical: float
    classicality: float


@dataclass(frozen=True)
class DepartureCurve:
    samples: tuple[tuple[float, float], ...]
    t_cross: float | None
    model: OscillatorModel


# -- flow ----------------------------------------------------------------------


def classical_flow(model: OscillatorModel, x: Sequence[float], t: float):
    """Rotate every mode by Theta_i(t) computed from Lambda of `x`."""
    return tuple(_flow_generic(model, [float(v) for v in x], t))


def _flow_generic(model: OscillatorModel, coords, t: float):
    """Flow on generic scalars (floats or hyper-duals share the code path)."""
    lam = 0.0
    for v in coords:
        lam = lam + v * v * 0.5
    shift = model.g * t * model.k * lam ** (model.k - 1)
    out = []
    for i in range(model.n):
        theta = model.omega[i] * t + shift
        c, s = hd_cos(theta), hd_sin(theta)
        q, p = coords[2 * i], coords[2 * i + 1]
        out.append(q * c + p * s)
        out.append(-(q * s) + p * c)
    return out


def flow_points(model: OscillatorModel, points: np.ndarray, t: float) -> np.ndarray:
    """Vectorized flow on an (M, 2N) array of phase points."""
    pts = np.asarray(points, dtype=float)
    lam = 0.5 * np.sum(pts * pts, axis=1)
    shift = model.g * t * model.k * lam ** (model.k - 1)
    out = np.empty_like(pts)
    for i in range(model.n):
        theta = model.omega[i] * t + shift
        c, s = np.cos(theta), np.sin(theta)
        q, p = pts[:, 2 * i], pts[:, 2 * i + 1]
        out[:, 2 * i] = q * c + p * s
        out[:, 2 * i + 1] = -q * s + p * c
    return out


# -- trajectory Laplacian --------------------------------------------------------


def trajectory_laplacian(model: OscillatorModel, t: float, method: str = "closed") -> np.ndarray:
    """Laplacian of each flow component w.r.t. the 2N initial coordinates.

    Evaluated at the model center.  `method` is 'closed' (derived closed
    form, see docs/trajectory_laplacian.md) or 'hyperdual' (automatic second
    differentiation of `classical_flow`); the suite checks the two agree.
    """
    if method == "closed":
        return _laplacian_closed(model, t)
    if method == "hyperdual":
        return _laplacian_hyperdual(model, t)
    raise ValueError(f"unknown method {method!r}")


def _laplacian_closed(model: OscillatorModel, t: float) -> np.ndarray:
    x = np.asarray(model.center)
    n, k, g = model.n, model.k, model.g
    lam = model.action()
    beta = g * t * k * (k - 1) * lam ** (k - 2) if k >= 2 else 0.0
    gamma = g * t * k * (k - 1) * (k - 2) * lam ** (k - 3) if k >= 3 else 0.0
    c1 = 2.0 * (n + 1) * beta + 2.0 * lam * gamma
    c2 = 2.0 * lam * beta * beta
    shift = g * t * k * lam ** (k - 1)
    out = np.empty(2 * n)
    for i in range(n):
        theta = model.omega[i] * t + shift
        c, s = math.cos(theta), math.sin(theta)
        q, p = x[2 * i], x[2 * i + 1]
        r_comp = q * c + p * s
        t_comp = -q * s + p * c
        out[2 * i] = c1 * t_comp - c2 * r_comp
        out[2 * i + 1] = -c1 * r_comp - c2 * t_comp
    return out


def _laplacian_hyperdual(model: OscillatorModel, t: float) -> np.ndarray:
    dim = 2 * model.n
    out = np.zeros(dim)
    for u in range(dim):
        coords = [
            HyperDual(v, 1.0, 1.0, 0.0) if j == u else float(v)
            for j, v in enumerate(model.center)
        ]
        flowed = _flow_generic(model, coords, t)
        for j, comp in enumerate(flowed):
            out[j] += comp.d if isinstance(comp, HyperDual) else 0.0
    return out


# -- departure and break time ----------------------------------------------------


def departure(model: OscillatorModel, t: float) -> float:
    """delta(t) = (hbar/4) ||laplacian r(t)|| / ||r(0)|| (Euclidean norms)."""
    r0 = math.sqrt(sum(v * v for v in model.center))
    if r0 == 0:
        raise DegenerateCenterError("initial phase-space vector has zero norm")
    lap = _laplacian_closed(model, t)
    return 0.25 * model.hbar * float(np.linalg.norm(lap)) / r0


def smoothed_centroid_first_order(model: OscillatorModel, t: float) -> tuple[float, ...]:
    """First-order smoothed centroid r(t) + (hbar/4) laplacian r(t)."""
    r = np.asarray(classical_flow(model, model.center, t))
    return tuple(r + 0.25 * model.hbar * _laplacian_closed(model, t))


def ehrenfest_numeric(model: OscillatorModel, horizon_factor: float = 1e4) -> float:
    """First t > 0 with delta(t) = 1: forward scan then bisection.

    The scan step is Omega/100 with Omega the typical nonlinear frequency;
    harmonic models (g = 0 or k = 1) never depart and give infinity.
    """
    if model.is_harmonic():
        return math.inf
    omega_t = model.omega_typical()
    step = omega_t / 100.0
    horizon = horizon_factor * omega_t
    t_prev, t_cur = 0.0, step
    while departure(model, t_cur) < 1.0:
        t_prev, t_cur = t_cur, t_cur + step
        if t_cur > horizon:
            raise HorizonError(
                f"no delta(t)=1 crossing up to t={horizon:g} ({horizon_factor:g} periods)"
            )
    # bisect to relative tolerance 1e-10
    lo, hi = t_prev, t_cur
    while (hi - lo) > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if departure(model, mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ehrenfest_analytic(model: OscillatorModel) -> EhrenfestResult:
    """First-order break-time formula with its diagnostics.

    t_E = [1/(k(k-1))] [1/(g Lambda^(k-1))] (2 Lambda / hbar)^(1/2)
          * (1 - hbar k^2 / (8 Lambda)),

    infinite for harmonic models.  Diagnostics: the typical frequency
    Omega = 1/(k(k-1) g Lambda^(k-1)), the typical action 2 Lambda, and the
    classicality parameter hbar k^2 / (8 Lambda) (the formula is a first-order
    expansion, valid when that parameter is small).
    """
    lam = model.action()
    classicality = model.hbar * model.k**2 / (8.0 * lam)
    omega_t = model.omega_typical()
    if model.is_harmonic():
        return EhrenfestResult(
            t_numeric=None,
            t_analytic=math.inf,
            omega_typical=omega_t,
            action_typical=2.0 * lam,
            classicality=classicality,
        )
    correction = 1.0 - classicality
    if correction <= 0:
        raise ValueError(
            "first-order break-time formula out of validity (hbar k^2 >= 8 Lambda)"
        )
    t_analytic = omega_t * math.sqrt(2.0 * lam / model.hbar) * correction
    return EhrenfestResult(
        t_numeric=None,
        t_analytic=t_analytic,
        omega_typical=omega_t,
        action_typical=2.0 * lam,
        classicality=classicality,
    )


def compute_ehrenfest(model: OscillatorModel, method: str = "both") -> EhrenfestResult:
    """Analytic and/or numeric break time as one result record."""
    if method not in {"analytic", "numeric", "both"}:
        raise ValueError(f"unknown method {method!r}")
    result = ehrenfest_analytic(model)
    t_numeric = None
    if method in {"numeric", "both"}:
        t_numeric = ehrenfest_numeric(model)
    t_analytic = result.t_analytic if method in {"analytic", "both"} else None
    return replace(result, t_numeric=t_numeric, t_analytic=t_analytic)


def departure_curve(model: OscillatorModel, t_grid: Sequence[float]) -> DepartureCurve:
    """Sampled delta(t) over a strictly increasing grid starting at >= 0."""
    grid = [float(t) for t in t_grid]
    if not grid or grid[0] < 0:
        raise ValueError("t grid must start at >= 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t grid must be strictly increasing")
    samples = tuple((t, departure(model, t)) for t in grid)
    t_cross = None
    if not model.is_harmonic() and any(d >= 1.0 for _, d in samples):
        t_cross = ehrenfest_numeric(model)
    return DepartureCurve(samples=samples, t_cross=t_cross, model=model)
