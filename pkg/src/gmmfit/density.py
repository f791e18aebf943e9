"""Piecewise-polynomial density estimation from samples.

The estimator bins samples into equal-mass intervals, greedily merges
adjacent intervals (each round applies the merge that least increases the
empirical interval-norm fit error at order 4k), projects the histogram on
each surviving interval onto polynomials of degree ceil(2 log(1/eps)) by
integral least squares, clamps the tiny negative dips, and renormalizes to
unit mass.  The output satisfies the consumer-facing contract of a density
estimate: O(k) pieces, degree O(log(1/eps)), near-nonnegative, mass in
[1 - 2 eps, 1 + 2 eps].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

from .ak import max_interval_sum
from .piecewise import PiecewisePolynomial, Polynomial, coefficient_bound_ok, local_min

PIECE_COUNT_FACTOR = 4  # bounded pieces per mixture component
MIN_SAMPLES = 100
_EMP_GRID = 1200  # cap on empirical-prefix grid points used while merging


class DegenerateDataError(ValueError):
    """Samples carry no usable spread (e.g. all equal)."""


@dataclass(frozen=True)
class DensityEstimate:
    """A piecewise-polynomial density plus its coordinate bookkeeping.

    ``rescale_map`` is the interval of original coordinates that the current
    support corresponds to; for an estimate still in data coordinates it
    equals the support itself (identity).
    """

    pp: PiecewisePolynomial
    rescale_map: tuple[float, float]

    def __post_init__(self):
        if min(local_min(piece) for piece in self.pp.pieces) < -1e-9:
            raise ValueError("density estimate dips below -1e-9")
        for i, piece in enumerate(self.pp.pieces):
            width = self.pp.breakpoints[i + 1] - self.pp.breakpoints[i]
            local_mass = self.pp._piece_integrals[i] * 2.0 / width
            if not coefficient_bound_ok(piece, local_mass):
                raise ValueError("piece coefficients exceed the nonnegativity bound")

    @property
    def intervals(self) -> list[tuple[float, float]]:
        b = self.pp.breakpoints
        return [(float(a), float(c)) for a, c in zip(b[:-1], b[1:])]

    @property
    def piece_count(self) -> int:
        return len(self.pp.pieces) + 2

    @property
    def degree(self) -> int:
        return self.pp.degree

    @cached_property
    def mass(self) -> float:
        return self.pp.total_integral()

    def to_dict(self) -> dict:
        d = self.pp.to_dict()
        d["alpha"], d["beta"] = float(self.rescale_map[0]), float(self.rescale_map[1])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "DensityEstimate":
        return cls(PiecewisePolynomial.from_dict(data), (data["alpha"], data["beta"]))

    @classmethod
    def from_json(cls, text: str) -> "DensityEstimate":
        return cls.from_dict(json.loads(text))


def rescale_to_unit(est: DensityEstimate) -> DensityEstimate:
    """Move the estimate onto [-1, 1], preserving probability mass.

    Values are multiplied by the width ratio so the result is still a
    density; ``rescale_map`` remembers the original support for inversion.
    """
    pp, (alpha, beta) = est.pp.rescale_domain((-1.0, 1.0))
    return DensityEstimate(pp.scale((beta - alpha) / 2.0), (alpha, beta))


# -- estimation ---------------------------------------------------------------


def estimate_density(samples, k: int, eps: float) -> DensityEstimate:
    """Fit a piecewise polynomial density to samples.

    Raises ``ValueError`` for too few samples and
    :class:`DegenerateDataError` for zero-spread data.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if x.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    x = np.sort(x)
    if x[-1] <= x[0]:
        raise DegenerateDataError("samples have zero spread")

    iqr = float(np.quantile(x, 0.75) - np.quantile(x, 0.25))
    margin = (iqr if iqr > 0 else (x[-1] - x[0])) / x.size
    lo, hi = float(x[0] - margin), float(x[-1] + margin)

    degree = math.ceil(2.0 * math.log(1.0 / eps))
    order = 4 * k
    s_max = max(PIECE_COUNT_FACTOR * k - 2, 2)

    edges = _initial_edges(x, lo, hi, k, eps)
    fitter = _IntervalFitter(x, degree)

    candidates = []  # (emp_error, -count, edges) for counts <= s_max
    while True:
        count = len(edges) - 1
        if count <= s_max:
            candidates.append((fitter.empirical_error(edges, order), -count, edges))
        if count == 1:
            break
        best_cost, best_edges = None, None
        base = candidates[-1][0] if count <= s_max else None
        for j in range(1, count):
            trial = edges[: j] + edges[j + 1 :]
            err = fitter.empirical_error(trial, order)
            cost = err if base is None else err - base
            if best_cost is None or cost < best_cost:
                best_cost, best_edges = cost, trial
        edges = best_edges
    _, _, edges = min(candidates)

    pp = fitter.project(edges)
    pp = _clamp_and_normalize(pp)
    return DensityEstimate(pp, (pp.support[0], pp.support[1]))


def _initial_edges(x: np.ndarray, lo: float, hi: float, k: int, eps: float) -> list[float]:
    bins = max(PIECE_COUNT_FACTOR * k * math.ceil(math.log(1.0 / eps)), 4)
    qs = np.quantile(x, np.linspace(0.0, 1.0, bins + 1))
    qs[0], qs[-1] = lo, hi
    edges, min_width = [lo], 1e-6 * (hi - lo)
    for q in qs[1:]:
        if q - edges[-1] > min_width:
            edges.append(float(q))
    edges[-1] = hi
    if len(edges) < 3:
        edges = list(np.linspace(lo, hi, 5))
    return edges


class _IntervalFitter:
    """Per-interval least-squares fits plus the empirical-error bookkeeping."""

    def __init__(self, sorted_samples: np.ndarray, degree: int):
        self.x = sorted_samples
        self.n = sorted_samples.size
        self.degree = degree
        self._cache: dict[tuple[float, float], tuple[np.ndarray, float]] = {}
        step = max(1, self.n // _EMP_GRID)
        self.grid = sorted_samples[::step]
        self.grid_cdf = (np.arange(self.n)[::step] + 1.0) / self.n

    def _fit(self, a: float, b: float) -> tuple[np.ndarray, float]:
        """Legendre coefficients of the LSQ fit on [a, b] and its total mass."""
        key = (a, b)
        if key in self._cache:
            return self._cache[key]
        nb = max(3 * (self.degree + 1), 18)
        sub = np.linspace(a, b, nb + 1)
        counts = np.diff(np.searchsorted(self.x, sub, side="right"))
        # right-open bins undercount b itself; fold boundary hits into the last bin
        counts[-1] += int(np.searchsorted(self.x, b, side="right")
                          - np.searchsorted(self.x, sub[-1], side="right"))
        masses = counts / self.n
        u = (2.0 * sub - a - b) / (b - a)
        rows = np.empty((nb, self.degree + 1))
        for l in range(self.degree + 1):
            c = np.zeros(l + 1)
            c[l] = 1.0
            anti = legendre.legint(c)
            vals = legendre.legval(u, anti)
            rows[:, l] = (b - a) / 2.0 * np.diff(vals)
        coef, *_ = np.linalg.lstsq(rows, masses, rcond=None)
        out = (coef, float((rows @ coef).sum()))
        self._cache[key] = out
        return out

    def _prefix_on_grid(self, edges: list[float]) -> np.ndarray:
        """Fitted cumulative mass at the empirical grid points."""
        out = np.empty_like(self.grid)
        base = 0.0
        idx = np.searchsorted(self.grid, edges)
        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            coef, mass = self._fit(a, b)
            g = self.grid[idx[i] : idx[i + 1]]
            if g.size:
                u = (2.0 * g - a - b) / (b - a)
                anti = legendre.legint(coef)
                vals = (b - a) / 2.0 * (
                    legendre.legval(u, anti) - legendre.legval(-1.0, anti)
                )
                out[idx[i] : idx[i + 1]] = base + vals
            base += mass
        return out

    def empirical_error(self, edges: list[float], order: int) -> float:
        dev = self._prefix_on_grid(edges) - self.grid_cdf
        return max_interval_sum(np.concatenate([[0.0], dev]), order)

    def project(self, edges: list[float]) -> PiecewisePolynomial:
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            coef, _ = self._fit(a, b)
            pieces.append(Polynomial(legendre.leg2poly(coef)))
        return PiecewisePolynomial(edges, pieces)


def _clamp_and_normalize(pp: PiecewisePolynomial) -> PiecewisePolynomial:
    """Lift pieces that dip negative, then rescale to unit mass."""
    pieces = []
    for poly in pp.pieces:
        low = local_min(poly)
        if low < 0.0:
            c = poly.coeffs.copy()
            c[0] -= low * (1.0 + 1e-9)
            poly = Polynomial(c)
        pieces.append(poly)
    lifted = PiecewisePolynomial(pp.breakpoints, pieces)
    total = lifted.total_integral()
    if total <= 0:
        raise ValueError("estimate has nonpositive mass")
    return lifted.scale(1.0 / total)


# -- sample IO ----------------------------------------------------------------


def read_samples_csv(path) -> np.ndarray:
    """One real per line, no header."""
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                vals.append(float(line))
    return np.array(vals)


def write_samples_csv(path, samples) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(samples, dtype=float):
            fh.write(f"{float(v)!r}\n")
