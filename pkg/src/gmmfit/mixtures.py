"""Parametric mixture families: Gaussian, shifted exponential, Laplace.

Components are parametrized by weight, mean (location) and *precision*,
one over the scale.  For the Gaussian this is 1/sigma; for the shifted
exponential the rate of decay from the location; for the Laplace 1/b.
All ground-truth distances are computed by isolating the sign crossings
of the analytic difference and integrating each sign-constant region.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import norm

from .piecewise import PiecewisePolynomial

FAMILIES = ("gaussian", "exponential", "laplace")

_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _component_pdf(family: str, mu, tau, x):
    x = np.asarray(x, dtype=float)
    if family == "gaussian":
        return tau * _INV_SQRT2PI * np.exp(-0.5 * (tau * (x - mu)) ** 2)
    if family == "exponential":
        t = tau * (x - mu)
        return np.where(t >= 0.0, tau * np.exp(-np.clip(t, 0.0, 700.0)), 0.0)
    if family == "laplace":
        return 0.5 * tau * np.exp(-np.clip(tau * np.abs(x - mu), 0.0, 700.0))
    raise ValueError(f"unknown family {family!r}")


def _component_cdf(family: str, mu, tau, x):
    x = np.asarray(x, dtype=float)
    t = tau * (x - mu)
    if family == "gaussian":
        return norm.cdf(t)
    if family == "exponential":
        return np.where(t >= 0.0, 1.0 - np.exp(-np.clip(t, 0.0, 700.0)), 0.0)
    if family == "laplace":
        return np.where(
            t < 0.0,
            0.5 * np.exp(np.clip(t, -700.0, 0.0)),
            1.0 - 0.5 * np.exp(-np.clip(t, 0.0, 700.0)),
        )
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True, eq=False)
class MixtureParams:
    """A k-component mixture: weights on the simplex, means, precisions."""

    weights: np.ndarray
    means: np.ndarray
    precisions: np.ndarray
    family: str = "gaussian"

    def __eq__(self, other):
        return (
            isinstance(other, MixtureParams)
            and self.family == other.family
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.precisions, other.precisions)
        )

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        tau = np.asarray(self.precisions, dtype=float)
        if not (w.ndim == mu.ndim == tau.ndim == 1 and w.size == mu.size == tau.size):
            raise ValueError("weights, means, precisions must be 1-D of equal length")
        if w.size < 1:
            raise ValueError("need at least one component")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(tau))):
            raise ValueError("parameters must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1 within 1e-9")
        if np.any(tau <= 0):
            raise ValueError("precisions must be positive")
        for arr in (w, mu, tau):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "precisions", tau)

    @property
    def k(self) -> int:
        return self.weights.size

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "components": [
                {"weight": float(w), "mean": float(m), "precision": float(t)}
                for w, m, t in zip(self.weights, self.means, self.precisions)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureParams":
        comps = data["components"]
        return cls(
            weights=np.array([c["weight"] for c in comps]),
            means=np.array([c["mean"] for c in comps]),
            precisions=np.array([c["precision"] for c in comps]),
            family=data.get("family", "gaussian"),
        )

    @classmethod
    def from_json(cls, text: str) -> "MixtureParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class RescaledComponent:
    """One component in interval-local coordinates.

    ``interval`` is the associated bounded interval J of the density
    estimate; raw parameters are recovered as tau = 2 tt / |J| and
    mu = mid(J) + mt / tau, with mt/tt the rescaled mean and precision.
    """

    weight: float
    mean: float
    precision: float
    interval: tuple[float, float]

    def __post_init__(self):
        if self.precision <= 0:
            raise ValueError("rescaled precision must be positive")
        if not self.interval[1] > self.interval[0]:
            raise ValueError("interval must have positive width")

    def to_raw(self) -> tuple[float, float, float]:
        lo, hi = self.interval
        tau = 2.0 * self.precision / (hi - lo)
        mu = 0.5 * (lo + hi) + self.mean / tau
        return self.weight, mu, tau

    @classmethod
    def from_raw(cls, weight, mu, tau, interval) -> "RescaledComponent":
        lo, hi = interval
        tt = 0.5 * (hi - lo) * tau
        mt = tau * (mu - 0.5 * (lo + hi))
        return cls(weight, mt, tt, (float(lo), float(hi)))


@dataclass(frozen=True)
class RescaledParams:
    components: tuple[RescaledComponent, ...]
    family: str = "gaussian"

    def to_raw(self) -> MixtureParams:
        raw = [c.to_raw() for c in self.components]
        return MixtureParams(
            weights=np.array([r[0] for r in raw]),
            means=np.array([r[1] for r in raw]),
            precisions=np.array([r[2] for r in raw]),
            family=self.family,
        )


@dataclass(frozen=True)
class AdmissibilityConstants:
    """Constants used by the admissibility test.

    ``weight_mass`` is the central-mass fraction W; ``half_width`` the
    half-width z of the standard-normal interval with that mass; and
    ``density_floor`` the standard-normal pdf at z, so every admissible
    Gaussian satisfies pdf >= density_floor * precision on its central
    interval.  Derived from the normal CDF at construction, not hard-coded.
    """

    weight_mass: float
    half_width: float
    density_floor: float

    @classmethod
    def default(cls) -> "AdmissibilityConstants":
        return cls.for_mass(55.0 / 56.0)

    @classmethod
    def for_mass(cls, weight_mass: float) -> "AdmissibilityConstants":
        if not 0.0 < weight_mass < 1.0:
            raise ValueError("weight_mass must be in (0, 1)")
        z = float(norm.ppf(0.5 * (1.0 + weight_mass)))
        return cls(weight_mass, z, float(norm.pdf(z)))


DEFAULT_CONSTANTS = AdmissibilityConstants.default()


# -- densities, sampling ------------------------------------------------------


def pdf(params: MixtureParams, x):
    xs = np.asarray(x, dtype=float)
    out = np.zeros_like(xs, dtype=float)
    for w, mu, tau in zip(params.weights, params.means, params.precisions):
        out = out + w * _component_pdf(params.family, mu, tau, xs)
    return out if np.ndim(x) else float(out)


def cdf(params: MixtureParams, x):
    xs = np.asarray(x, dtype=float)
    out = np.zeros_like(xs, dtype=float)
    for w, mu, tau in zip(params.weights, params.means, params.precisions):
        out = out + w * _component_cdf(params.family, mu, tau, xs)
    return out if np.ndim(x) else float(out)


def family_pdf(params: MixtureParams, x):
    """Alias for :func:`pdf`; the family tag is carried by ``params``."""
    return pdf(params, x)


def family_approximant(params: MixtureParams, eps: float) -> PiecewisePolynomial:
    """Piecewise-polynomial eps-approximant of the mixture pdf."""
    from .shapes import ShapePolyConfig, mixture_approx

    return mixture_approx(params, ShapePolyConfig.build(eps, family=params.family))


def sample(params: MixtureParams, n: int, seed: int) -> np.ndarray:
    """n draws; the component is chosen by weight, then one draw from it."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(params.k, size=n, p=params.weights / params.weights.sum())
    mu = params.means[idx]
    tau = params.precisions[idx]
    if params.family == "gaussian":
        return mu + rng.standard_normal(n) / tau
    if params.family == "exponential":
        return mu + rng.standard_exponential(n) / tau
    if params.family == "laplace":
        return rng.laplace(mu, 1.0 / tau)
    raise ValueError(f"unknown family {params.family!r}")


# -- admissibility -----------------------------------------------------------


def central_interval(
    mu: float, tau: float, constants: AdmissibilityConstants = DEFAULT_CONSTANTS
) -> tuple[float, float]:
    """Interval centred at mu carrying exactly ``weight_mass`` Gaussian mass."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    half = constants.half_width / tau
    return (mu - half, mu + half)


def precision_bound(
    eps: float,
    k: int,
    degree: int,
    constants: AdmissibilityConstants = DEFAULT_CONSTANTS,
) -> float:
    """Scale cap for admissible components relative to interval length.

    A component is only considered to live at the scale of interval J when
    its precision is at most this value divided by |J|.
    """
    if not 0.0 < eps <= 2.0:
        raise ValueError("eps must be in (0, 2]")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    m = degree
    return (
        32.0
        * k
        / (constants.density_floor * eps)
        * m
        * (m + 1) ** 2
        * (math.sqrt(2.0) + 1.0) ** m
    )


def is_admissible(
    component: tuple[float, float, float],
    intervals,
    eps: float,
    k: int,
    degree: int,
    constants: AdmissibilityConstants = DEFAULT_CONSTANTS,
):
    """Check the two admissibility conditions for a Gaussian component.

    Returns ``(ok, witness)`` where witness is the interval J maximising
    the overlap with the component's central interval among those whose
    overlap is at least 1/(8 s tau) and whose length caps the precision.
    The weight entry of ``component`` is accepted for API symmetry but does
    not enter the verdict.
    """
    _, mu, tau = component
    intervals = [(float(a), float(b)) for a, b in intervals]
    if not intervals:
        raise ValueError("need at least one interval")
    mass_unit = float(
        _component_cdf("gaussian", mu, tau, 1.0) - _component_cdf("gaussian", mu, tau, -1.0)
    )
    if mass_unit < 0.5:
        return False, None
    s = len(intervals)
    lo_c, hi_c = central_interval(mu, tau, constants)
    cap = precision_bound(eps, k, degree, constants)
    best = None
    best_overlap = -1.0
    for a, b in intervals:
        overlap = max(0.0, min(b, hi_c) - max(a, lo_c))
        if overlap >= 1.0 / (8.0 * s * tau) and tau <= cap / (b - a):
            if overlap > best_overlap:
                best, best_overlap = (a, b), overlap
    return (best is not None), best


# -- ground-truth distances ---------------------------------------------------


def _span(params: MixtureParams, width: float = 40.0) -> tuple[float, float]:
    if params.family == "exponential":
        lo = float(np.min(params.means)) - 1e-9
    else:
        lo = float(np.min(params.means - width / params.precisions))
    hi = float(np.max(params.means + width / params.precisions))
    return lo, hi


def mixture_diff_runs(p1: MixtureParams, p2: MixtureParams, n_scan: int = 4096):
    """Sign-constant regions of pdf(p1) - pdf(p2) with exact-ish integrals.

    Crossings are isolated by a dense scan plus Brent refinement; each
    region is then integrated by adaptive quadrature (abs tol 1e-10).
    Returns (edges, signed_integrals).
    """
    lo = min(_span(p1)[0], _span(p2)[0])
    hi = max(_span(p1)[1], _span(p2)[1])

    def diff(x):
        return pdf(p1, x) - pdf(p2, x)

    xs = np.linspace(lo, hi, n_scan)
    vals = diff(xs)
    crossings = []
    for i in range(n_scan - 1):
        a, b = xs[i], xs[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            continue
        if (fa > 0) != (fb > 0):
            crossings.append(brentq(diff, a, b, xtol=1e-14))
    edges = [lo] + crossings + [hi]
    integrals = []
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(diff, a, b, epsabs=1e-10, epsrel=1e-10, limit=200)
        integrals.append(val)
    return edges, integrals


def l1_distance(p1: MixtureParams, p2: MixtureParams) -> float:
    """L1 distance between two mixture pdfs, absolute error <= 1e-6."""
    edges, _ = mixture_diff_runs(p1, p2)

    def absdiff(x):
        return abs(pdf(p1, x) - pdf(p2, x))

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(absdiff, a, b, epsabs=1e-9, epsrel=1e-9, limit=200)
        total += val
    return float(total)


def l1_to_piecewise(params: MixtureParams, pp: PiecewisePolynomial) -> float:
    """L1 distance between an analytic mixture pdf and a piecewise polynomial."""
    m_lo, m_hi = _span(params, width=12.0)
    lo = min(m_lo, pp.support[0])
    hi = max(m_hi, pp.support[1])

    def absdiff(x):
        return abs(pdf(params, x) - pp.evaluate(x))

    pts = [b for b in pp.breakpoints if lo < b < hi]
    val, _ = quad(absdiff, lo, hi, points=pts, limit=50 * (len(pts) + 4), epsabs=1e-8)
    # mass the integration window misses is pure mixture tail
    tail = float(cdf(params, lo) + (1.0 - cdf(params, hi)))
    return float(val) + tail
