"""Interval norms of piecewise polynomials.

The order-K interval norm ("A_K norm") of an integrable f is the supremum,
over every family of K disjoint intervals, of the summed absolute integrals
of f on those intervals.  For a piecewise polynomial the supremum is
attained with interval endpoints on the boundaries of the maximal
sign-constant runs, so it reduces to exact combinatorics over the runs:
pick at most K disjoint blocks of consecutive runs maximising the summed
absolute block integrals.  (Picking the K largest individual runs is not
enough: a large same-sign pair separated by a negligible opposite run is
best covered by one interval spanning all three.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .piecewise import PiecewisePolynomial

# Runs with absolute integral at or below this are merged into a neighbor,
# so root-tolerance noise cannot create spurious runs.
RUN_MERGE_TOL = 1e-14


@dataclass(frozen=True)
class SignRun:
    lo: float
    hi: float
    integral: float


@dataclass(frozen=True)
class SignRunDecomposition:
    """Maximal sign-constant runs covering the support, alternating in sign."""

    runs: tuple[SignRun, ...]

    @property
    def integrals(self) -> np.ndarray:
        return np.array([r.integral for r in self.runs])


def sign_runs(p: PiecewisePolynomial) -> SignRunDecomposition:
    cuts = [p.support[0]] + p.real_roots() + [p.support[1]]
    raw = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        raw.append(SignRun(lo, hi, p.integrate(lo, hi)))
    merged: list[SignRun] = []
    for run in raw:
        if merged and (
            abs(run.integral) <= RUN_MERGE_TOL
            or abs(merged[-1].integral) <= RUN_MERGE_TOL
            or (merged[-1].integral > 0) == (run.integral > 0)
        ):
            prev = merged.pop()
            merged.append(SignRun(prev.lo, run.hi, prev.integral + run.integral))
        else:
            merged.append(run)
    return SignRunDecomposition(tuple(merged))


def max_interval_sum(prefix, order: int) -> float:
    """Max over <= order disjoint index intervals of sum |prefix[b]-prefix[a]|.

    O(len(prefix) * order) dynamic program with running maxima; exact for
    the given prefix sequence.
    """
    prefix = np.asarray(prefix, dtype=float)
    best = np.zeros_like(prefix)
    for _ in range(order):
        hi = np.maximum.accumulate(best - prefix)
        lo = np.maximum.accumulate(best + prefix)
        closed = np.maximum(prefix + hi, -prefix + lo)
        best = np.maximum.accumulate(np.maximum(best, closed))
    return float(best[-1])


def _best_blocks(values: np.ndarray, order: int) -> float:
    """Max of sum |block integral| over <= order disjoint consecutive blocks."""
    return max_interval_sum(np.concatenate([[0.0], np.cumsum(values)]), order)


def ak_norm(p: PiecewisePolynomial, order: int) -> float:
    """Order-``order`` interval norm of p (exact for piecewise polynomials)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    dec = sign_runs(p)
    if len(dec.runs) == 0:
        return 0.0
    return _best_blocks(dec.integrals, order)


def ak_distance(p: PiecewisePolynomial, q: PiecewisePolynomial, order: int) -> float:
    return ak_norm(p.subtract(q), order)


def ak_brute_force(p: PiecewisePolynomial, order: int, grid: int) -> float:
    """DP maximisation over interval families with endpoints on a uniform grid.

    Test oracle: O(grid * order), exact for the restricted endpoint set, and
    a lower bound on :func:`ak_norm` converging as the grid refines.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if grid < 2:
        raise ValueError("need at least two grid points")
    lo, hi = p.support
    xs = np.linspace(lo, hi, grid)
    prefix = p.prefix_integral(xs)
    # state per grid point: best with j intervals closed / one interval open
    best = np.zeros(grid)
    for _ in range(order):
        new = best.copy()
        open_pos = -np.inf  # best over l of best[l] - prefix[l]
        open_neg = -np.inf  # best over l of best[l] + prefix[l]
        for i in range(grid):
            open_pos = max(open_pos, best[i] - prefix[i])
            open_neg = max(open_neg, best[i] + prefix[i])
            new[i] = max(new[i], prefix[i] + open_pos, -prefix[i] + open_neg)
            if i + 1 < grid:
                new[i + 1] = max(new[i + 1], new[i])
        best = new
    return float(best[-1])
