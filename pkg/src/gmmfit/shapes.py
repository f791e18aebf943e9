"""Shape-restricted piecewise-polynomial approximants of mixture pdfs.

A standard Gaussian is replaced by a three-piece function: zero tails and a
truncated Maclaurin series on a central window wide enough that the ignored
tail mass is negligible at the working accuracy.  Components are affine
images of the standard approximant, so the mixture approximant depends
polynomially on both the evaluation point and the parameters - which is what
makes the fitting problem encodable as polynomial constraints.  Negative
dips of the truncated series are left as they are; clamping would destroy
that polynomial structure.

The same construction covers shifted-exponential and Laplace components
(the Laplace kink is handled by building each side of the center
separately).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .mixtures import FAMILIES, MixtureParams, RescaledParams
from .piecewise import MAX_DEGREE, PiecewisePolynomial, Polynomial

_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Taylor-quality search stops here; higher quality would exceed MAX_DEGREE
# for every accuracy this pipeline accepts.
_MAX_QUALITY = 16


def taylor_gaussian(degree: int) -> Polynomial:
    """Truncated Maclaurin series of the standard normal pdf.

    Only even powers appear: coefficient (1/sqrt(2 pi)) (-1/2)^j / j! on
    x^(2j).
    """
    if degree % 2 != 0:
        raise ValueError("degree must be even")
    if degree > MAX_DEGREE:
        raise ValueError(f"degree {degree} exceeds cap {MAX_DEGREE}")
    coeffs = np.zeros(degree + 1)
    for j in range(degree // 2 + 1):
        coeffs[2 * j] = _INV_SQRT2PI * (-0.5) ** j / math.factorial(j)
    return Polynomial(coeffs)


def _taylor_exponential(degree: int) -> Polynomial:
    coeffs = np.array([(-1.0) ** j / math.factorial(j) for j in range(degree + 1)])
    return Polynomial(coeffs)


def _standard_pdf(family: str, x):
    x = np.asarray(x, dtype=float)
    if family == "gaussian":
        return _INV_SQRT2PI * np.exp(-0.5 * x * x)
    if family == "exponential":
        return np.where(x >= 0, np.exp(-np.clip(x, 0, 700)), 0.0)
    if family == "laplace":
        return 0.5 * np.exp(-np.abs(x))
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class ShapePolyConfig:
    """Accuracy budget and Taylor degree for one family's approximant.

    ``taylor_quality`` is the smallest integer whose induced degree
    2 * quality * ceil(log(1/eps)) brings the Taylor error on the support
    window below eps/4 (validated by quadrature when the config is built).
    """

    eps: float
    family: str
    taylor_quality: int
    degree: int
    half_width: float

    @classmethod
    def build(cls, eps: float, family: str = "gaussian") -> "ShapePolyConfig":
        return _build_config(float(eps), family)

    @property
    def support(self) -> tuple[float, float]:
        if self.family == "exponential":
            return (0.0, self.half_width)
        return (-self.half_width, self.half_width)


def _taylor_l1_error(family: str, degree: int, half_width: float) -> float:
    if family == "gaussian":
        poly = taylor_gaussian(degree)
        lo, hi = -half_width, half_width
    elif family == "exponential":
        poly = _taylor_exponential(degree)
        lo, hi = 0.0, half_width
    else:  # laplace: symmetric, measure one side and double
        poly = _taylor_exponential(degree)
        err, _ = quad(
            lambda x: abs(0.5 * math.exp(-x) - 0.5 * poly(x)),
            0.0,
            half_width,
            epsabs=1e-12,
            limit=200,
        )
        return 2.0 * err
    err, _ = quad(
        lambda x: abs(float(_standard_pdf(family, x)) - poly(x)),
        lo,
        hi,
        epsabs=1e-12,
        limit=200,
    )
    return err


@lru_cache(maxsize=None)
def _build_config(eps: float, family: str) -> ShapePolyConfig:
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    log_term = math.ceil(math.log(1.0 / eps))
    if family == "gaussian":
        half_width = 2.0 * math.sqrt(math.log(1.0 / eps))
    else:
        # tail mass beyond the window is exactly eps/4 for both families
        half_width = math.log(4.0 / eps)
    for quality in range(1, _MAX_QUALITY + 1):
        degree = 2 * quality * log_term
        if degree > MAX_DEGREE:
            break
        if _taylor_l1_error(family, degree, half_width) < eps / 4.0:
            return ShapePolyConfig(eps, family, quality, degree, half_width)
    raise ValueError(
        f"no degree within cap {MAX_DEGREE} meets the eps/4 Taylor bound at eps={eps}"
    )


def standard_approx(cfg: ShapePolyConfig) -> PiecewisePolynomial:
    """Approximant of the standard (location 0, precision 1) family member."""
    h = cfg.half_width
    if cfg.family == "gaussian":
        center = taylor_gaussian(cfg.degree).compose_affine(h, 0.0)
        return PiecewisePolynomial([-h, h], [center])
    if cfg.family == "exponential":
        # x = (u + 1) h/2 on the single piece
        piece = _taylor_exponential(cfg.degree).compose_affine(h / 2.0, h / 2.0)
        return PiecewisePolynomial([0.0, h], [piece])
    # laplace: mirrored halves around the kink at 0
    right = _taylor_exponential(cfg.degree).compose_affine(h / 2.0, h / 2.0)
    right = Polynomial(0.5 * right.coeffs)
    left = Polynomial(right.coeffs * (-1.0) ** np.arange(right.coeffs.size))
    return PiecewisePolynomial([-h, 0.0, h], [left, right])


def pw_gaussian_approx(cfg: ShapePolyConfig) -> PiecewisePolynomial:
    """Gaussian standard approximant: zero tails plus the Taylor center."""
    if cfg.family != "gaussian":
        raise ValueError("config is not for the gaussian family")
    return standard_approx(cfg)


def component_approx(
    weight: float, mu: float, tau: float, cfg: ShapePolyConfig
) -> PiecewisePolynomial:
    """w * tau * standard(tau (x - mu)): the local pieces are reused verbatim
    because the affine substitution maps piece intervals onto piece intervals."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    std = standard_approx(cfg)
    knots = mu + std.breakpoints / tau
    pieces = [Polynomial(weight * tau * p.coeffs) for p in std.pieces]
    return PiecewisePolynomial(knots, pieces)


def mixture_approx(params: MixtureParams, cfg: ShapePolyConfig) -> PiecewisePolynomial:
    """Sum of scaled component approximants on the merged breakpoint grid."""
    if params.family != cfg.family:
        raise ValueError("params family does not match config family")
    acc = None
    for w, mu, tau in zip(params.weights, params.means, params.precisions):
        term = component_approx(w, mu, tau, cfg)
        acc = term if acc is None else acc.add(term)
    return acc


def rescaled_component(
    mean: float, precision: float, interval, cfg: ShapePolyConfig
) -> PiecewisePolynomial:
    """Unweighted approximant of the component whose interval-local
    parameters are (mean, precision): raw tau = 2 precision/|J|,
    raw mu = mid(J) + mean/tau."""
    lo, hi = float(interval[0]), float(interval[1])
    if precision <= 0 or not hi > lo:
        raise ValueError("need positive precision and a nonempty interval")
    tau = 2.0 * precision / (hi - lo)
    mu = 0.5 * (lo + hi) + mean / tau
    return component_approx(1.0, mu, tau, cfg)


def rescaled_mixture_approx(
    rparams: RescaledParams,
    allocation,
    cfg: ShapePolyConfig,
    intervals=None,
) -> PiecewisePolynomial:
    """Merged sum over intervals of the allocated components' approximants."""
    counts = tuple(int(c) for c in allocation)
    if sum(counts) != len(rparams.components):
        raise ValueError("allocation does not sum to the component count")
    if intervals is not None:
        if len(intervals) != len(counts):
            raise ValueError("allocation length does not match interval count")
        for (a, b), want in zip(intervals, counts):
            have = sum(
                1
                for c in rparams.components
                if c.interval == (float(a), float(b))
            )
            if have != want:
                raise ValueError("allocation does not match component intervals")
    acc = None
    for c in rparams.components:
        term = rescaled_component(c.mean, c.precision, c.interval, cfg)
        term = term.scale(c.weight)
        acc = term if acc is None else acc.add(term)
    if acc is None:
        raise ValueError("mixture needs at least one component")
    return acc
