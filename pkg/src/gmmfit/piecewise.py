"""Exact univariate piecewise polynomials with bounded support.

A :class:`PiecewisePolynomial` is a strictly increasing knot vector
``b_0 < ... < b_n`` together with one polynomial per bounded interval
``[b_i, b_{i+1})``.  Outside ``[b_0, b_n]`` the function is identically
zero.  Every piece is stored in *local* coordinates that map its interval
onto ``[-1, 1]``; coefficient magnitudes and root-finding conditioning are
then independent of where the piece sits on the real line.

Evaluation uses the half-open convention: at a knot the piece to the
right owns the point, so ``evaluate(b_n)`` is 0 (the right tail).
Integrals are exact (per-piece antiderivatives, no quadrature).
"""

from __future__ import annotations

import json
import math
from functools import cached_property

import numpy as np

# Pieces above this degree are rejected: monomial conditioning in double
# precision becomes untrustworthy, and the pipeline never needs more
# (the largest Taylor approximant used by the accuracy sweep has degree 84).
MAX_DEGREE = 96

# Knots closer than this (relative to the total span) are merged.
_KNOT_MERGE_REL = 1e-12

_SQRT2P1 = math.sqrt(2.0) + 1.0


def _trim(coeffs: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Drop trailing (high-order) coefficients with magnitude <= tol."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1:
        raise ValueError("coefficient array must be 1-D")
    n = c.size
    while n > 0 and abs(c[n - 1]) <= tol:
        n -= 1
    return c[:n]


class Polynomial:
    """Dense polynomial ``sum c_j u^j`` in the local basis of one piece."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = _trim(np.asarray(coeffs, dtype=float))
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        if c.size - 1 > MAX_DEGREE:
            raise ValueError(f"degree {c.size - 1} exceeds cap {MAX_DEGREE}")
        c.setflags(write=False)
        self.coeffs = c

    @property
    def degree(self) -> int:
        return max(self.coeffs.size - 1, 0)

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def __call__(self, u):
        return _horner(self.coeffs, u)

    def derivative(self) -> "Polynomial":
        c = self.coeffs
        if c.size <= 1:
            return Polynomial([])
        return Polynomial(c[1:] * np.arange(1, c.size))

    def antiderivative(self) -> np.ndarray:
        """Coefficients of the antiderivative with zero constant term."""
        c = self.coeffs
        out = np.zeros(c.size + 1)
        if c.size:
            out[1:] = c / np.arange(1, c.size + 1)
        return out

    def compose_affine(self, a: float, b: float) -> "Polynomial":
        """Return q with q(v) = p(a*v + b), computed exactly (Horner)."""
        acc = np.zeros(1)
        for coeff in self.coeffs[::-1]:
            shifted = np.zeros(acc.size + 1)
            shifted[1:] += a * acc
            shifted[: acc.size] += b * acc
            shifted[0] += coeff
            acc = _trim(shifted)
        return Polynomial(acc)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def _horner(coeffs: np.ndarray, u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for c in coeffs[::-1]:
        out = out * u + c
    return out if out.ndim else float(out)


def _as_knots(breakpoints) -> np.ndarray:
    k = np.asarray(breakpoints, dtype=float)
    if k.ndim != 1 or k.size < 2:
        raise ValueError("need at least two breakpoints")
    if not np.all(np.isfinite(k)):
        raise ValueError("breakpoints must be finite")
    if not np.all(np.diff(k) > 0):
        raise ValueError("breakpoints must be strictly increasing")
    return k


class PiecewisePolynomial:
    """Piecewise polynomial with bounded support and zero tails.

    Parameters
    ----------
    breakpoints : array_like
        Strictly increasing knots ``b_0 < ... < b_n``.
    pieces : sequence of Polynomial or coefficient arrays
        One per bounded interval, in local ``[-1, 1]`` coordinates.
    """

    def __init__(self, breakpoints, pieces):
        knots = _as_knots(breakpoints)
        polys = tuple(p if isinstance(p, Polynomial) else Polynomial(p) for p in pieces)
        if len(polys) != knots.size - 1:
            raise ValueError("need exactly one piece per bounded interval")
        knots.setflags(write=False)
        self.breakpoints = knots
        self.pieces = polys

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, lo: float = 0.0, hi: float = 1.0) -> "PiecewisePolynomial":
        return cls([lo, hi], [Polynomial([])])

    @classmethod
    def from_global_coeffs(cls, breakpoints, global_coeffs) -> "PiecewisePolynomial":
        """Build from per-piece coefficients in global x coordinates."""
        knots = _as_knots(breakpoints)
        pieces = []
        for i, g in enumerate(global_coeffs):
            a, b = knots[i], knots[i + 1]
            # x = (b - a)/2 * v + (a + b)/2
            pieces.append(Polynomial(g).compose_affine((b - a) / 2.0, (a + b) / 2.0))
        return cls(knots, pieces)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.pieces)

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.pieces)

    def __eq__(self, other):
        return (
            isinstance(other, PiecewisePolynomial)
            and np.array_equal(self.breakpoints, other.breakpoints)
            and self.pieces == other.pieces
        )

    def __repr__(self):
        return f"PiecewisePolynomial(knots={self.breakpoints.tolist()}, degree={self.degree})"

    # -- evaluation ------------------------------------------------------------

    def _local(self, i: int, x):
        a, b = self.breakpoints[i], self.breakpoints[i + 1]
        return (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)

    def evaluate(self, x):
        """Evaluate at x (scalar or array); right piece owns each knot."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xs)
        idx = np.searchsorted(self.breakpoints, xs, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.pieces))
        for i in np.unique(idx[inside]):
            sel = inside & (idx == i)
            out[sel] = self.pieces[i](self._local(i, xs[sel]))
        return out if np.ndim(x) else float(out[0])

    __call__ = evaluate

    # -- integration -----------------------------------------------------------

    @cached_property
    def _antiderivs(self) -> tuple[np.ndarray, ...]:
        return tuple(p.antiderivative() for p in self.pieces)

    @cached_property
    def _piece_integrals(self) -> np.ndarray:
        vals = np.empty(len(self.pieces))
        for i, anti in enumerate(self._antiderivs):
            w = self.breakpoints[i + 1] - self.breakpoints[i]
            vals[i] = (w / 2.0) * (_horner(anti, 1.0) - _horner(anti, -1.0))
        return vals

    @cached_property
    def _cum_integrals(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self._piece_integrals)])

    def prefix_integral(self, x):
        """Exact integral from -inf to x (vectorised)."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        xs_c = np.clip(xs, self.breakpoints[0], self.breakpoints[-1])
        idx = np.clip(
            np.searchsorted(self.breakpoints, xs_c, side="right") - 1,
            0,
            len(self.pieces) - 1,
        )
        out = np.empty_like(xs_c)
        for i in np.unique(idx):
            sel = idx == i
            anti = self._antiderivs[i]
            w = self.breakpoints[i + 1] - self.breakpoints[i]
            u = self._local(i, xs_c[sel])
            out[sel] = self._cum_integrals[i] + (w / 2.0) * (
                _horner(anti, u) - _horner(anti, -1.0)
            )
        return out if np.ndim(x) else float(out[0])

    def integrate(self, a: float, b: float) -> float:
        """Exact integral over [a, b]; rejects a > b."""
        if a > b:
            raise ValueError("integration bounds must satisfy a <= b")
        return float(self.prefix_integral(b) - self.prefix_integral(a))

    def total_integral(self) -> float:
        return float(self._cum_integrals[-1])

    # -- algebra ---------------------------------------------------------------

    def restrict_local(self, c: float, d: float) -> Polynomial:
        """The function on [c, d] re-expanded in the local basis of [c, d].

        [c, d] must not straddle a knot (callers split at merged knots).
        """
        mid = 0.5 * (c + d)
        i = int(np.searchsorted(self.breakpoints, mid, side="right") - 1)
        if i < 0 or i >= len(self.pieces):
            return Polynomial([])
        a, b = self.breakpoints[i], self.breakpoints[i + 1]
        alpha = (d - c) / (b - a)
        beta = (c + d - a - b) / (b - a)
        return self.pieces[i].compose_affine(alpha, beta)

    def _merge_with(self, other: "PiecewisePolynomial", sign: float) -> "PiecewisePolynomial":
        knots = np.union1d(self.breakpoints, other.breakpoints)
        span = knots[-1] - knots[0]
        keep = np.concatenate([[True], np.diff(knots) > _KNOT_MERGE_REL * span])
        knots = knots[keep]
        pieces = []
        for c, d in zip(knots[:-1], knots[1:]):
            p = self.restrict_local(c, d).coeffs
            q = other.restrict_local(c, d).coeffs
            n = max(p.size, q.size, 1)
            out = np.zeros(n)
            out[: p.size] += p
            out[: q.size] += sign * q
            pieces.append(Polynomial(out))
        return PiecewisePolynomial(knots, pieces)

    def subtract(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        """Pointwise difference on the union of both knot sets."""
        return self._merge_with(other, -1.0)

    def add(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return self._merge_with(other, 1.0)

    def scale(self, factor: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(
            self.breakpoints, [Polynomial(p.coeffs * factor) for p in self.pieces]
        )

    # -- sign structure ----------------------------------------------------

    @property
    def _root_tol(self) -> float:
        lo, hi = self.support
        return 1e-12 * (hi - lo)

    @cached_property
    def _segments(self) -> list[tuple[float, float, int]]:
        """Maximal sign-constant stretches (x0, x1, sign) covering the support.

        Interior piece roots are isolated with Sturm sign counting and
        refined by bisection; the sign of each stretch is taken at its
        midpoint, snapped to 0 when the piece is negligible there.
        """
        segs: list[tuple[float, float, int]] = []
        for i, poly in enumerate(self.pieces):
            a, b = float(self.breakpoints[i]), float(self.breakpoints[i + 1])
            if poly.is_zero():
                segs.append((a, b, 0))
                continue
            local_tol = 2.0 * self._root_tol / (b - a)
            roots_u = _piece_roots(poly.coeffs, local_tol)
            cuts = [a] + [a + (u + 1.0) * (b - a) / 2.0 for u in roots_u] + [b]
            scale = float(np.abs(poly.coeffs).sum())
            for x0, x1 in zip(cuts[:-1], cuts[1:]):
                if x1 <= x0:
                    continue
                v = poly(self._local(i, 0.5 * (x0 + x1)))
                s = 0 if abs(v) <= 1e-13 * max(scale, 1e-300) else (1 if v > 0 else -1)
                segs.append((x0, x1, s))
        # merge adjacent stretches with equal sign
        merged: list[tuple[float, float, int]] = []
        for seg in segs:
            if merged and merged[-1][2] == seg[2]:
                merged[-1] = (merged[-1][0], seg[1], seg[2])
            else:
                merged.append(seg)
        return merged

    def real_roots(self) -> list[float]:
        """Points interior to the support where the sign changes.

        The sign is taken over maximal stretches (an identically-zero
        stretch has sign 0), so jump discontinuities at knots and the
        boundaries of zero stretches are reported; isolated touch-zeros
        are not.
        """
        segs = self._segments
        return [segs[j][1] for j in range(len(segs) - 1) if segs[j][2] != segs[j + 1][2]]

    def l1_norm(self) -> float:
        """Exact L1 norm: |integral| summed over sign-constant stretches."""
        return float(
            sum(abs(self.integrate(x0, x1)) for x0, x1, _ in self._segments)
        )

    # -- rescaling -----------------------------------------------------------

    def rescale_domain(self, target: tuple[float, float]):
        """Map the support affinely onto ``target``; values are preserved.

        Returns ``(pp, (alpha, beta))`` where ``(alpha, beta)`` is the
        original support, so that ``pp(t0 + (x - alpha) (t1-t0)/(beta-alpha))
        = self(x)``.  The total integral scales with the width ratio.
        """
        t0, t1 = float(target[0]), float(target[1])
        if not t1 > t0:
            raise ValueError("target interval must have positive width")
        alpha, beta = self.support
        if not beta > alpha:
            raise ValueError("cannot rescale zero-width support")
        knots = t0 + (self.breakpoints - alpha) * (t1 - t0) / (beta - alpha)
        knots[0], knots[-1] = t0, t1
        return PiecewisePolynomial(knots, self.pieces), (alpha, beta)

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(v) for v in self.breakpoints],
            "pieces": [{"coeffs": p.coeffs.tolist()} for p in self.pieces],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewisePolynomial":
        return cls(data["breakpoints"], [p["coeffs"] for p in data["pieces"]])

    @classmethod
    def from_json(cls, text: str) -> "PiecewisePolynomial":
        return cls.from_dict(json.loads(text))


# -- module-level operation aliases ---------------------------------------

def evaluate(p: PiecewisePolynomial, x):
    return p.evaluate(x)


def integrate(p: PiecewisePolynomial, a: float, b: float) -> float:
    return p.integrate(a, b)


def subtract(p: PiecewisePolynomial, q: PiecewisePolynomial) -> PiecewisePolynomial:
    return p.subtract(q)


def real_roots(p: PiecewisePolynomial) -> list[float]:
    return p.real_roots()


def l1_norm(p: PiecewisePolynomial) -> float:
    return p.l1_norm()


def rescale_domain(p: PiecewisePolynomial, target):
    return p.rescale_domain(target)


def local_min(poly: Polynomial) -> float:
    """Exact minimum of a local polynomial over [-1, 1].

    Checked at the endpoints and at the sign-change roots of the derivative
    (touch points of the derivative are not extrema).
    """
    if poly.is_zero():
        return 0.0
    pts = [-1.0, 1.0]
    deriv = poly.derivative()
    if not deriv.is_zero():
        pts += _piece_roots(deriv.coeffs, 1e-13)
    return float(min(poly(u) for u in pts))


def coefficient_bound_ok(poly: Polynomial, mass: float, slack: float = 1e-9) -> bool:
    """Check |c_i| <= mass (m+1)^2 (sqrt 2 + 1)^m for a nonnegative local piece.

    ``mass`` is the integral of the piece over its local [-1, 1] frame; the
    bound holds for any polynomial that is nonnegative there, so a failure
    indicates a representation bug (or genuine negativity beyond ``slack``).
    """
    if poly.is_zero():
        return True
    m = poly.degree
    bound = (mass + 2.0 * slack) * (m + 1) ** 2 * _SQRT2P1**m
    return bool(np.all(np.abs(poly.coeffs) <= bound + 1e-12))


# -- Sturm-sequence root isolation -----------------------------------------


def _sturm_chain(coeffs: np.ndarray) -> list[np.ndarray]:
    f0 = _trim(coeffs, 0.0)
    f0 = f0 / np.abs(f0).max()
    chain = [f0]
    if f0.size > 1:
        d = f0[1:] * np.arange(1, f0.size)
        chain.append(d / np.abs(d).max())
    while chain[-1].size > 1:
        num, den = chain[-2], chain[-1]
        rem = _poly_rem(num, den)
        rem = _trim(rem, 1e-14 * max(np.abs(rem).max(initial=0.0), 1.0))
        if rem.size == 0:
            break
        chain.append(-rem / np.abs(rem).max())
    return chain


def _poly_rem(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    r = num.astype(float).copy()
    dn = den.size - 1
    lead = den[-1]
    while r.size - 1 >= dn and r.size > 0:
        k = r.size - 1 - dn
        q = r[-1] / lead
        r[k : k + dn + 1] -= q * den
        r = r[:-1]
    return r


def _variations(chain: list[np.ndarray], x: float) -> int:
    signs = []
    for c in chain:
        v = _horner(c, x)
        snap = 1e-13 * max(float(np.abs(c).sum()), 1e-300)
        if abs(v) > snap:
            signs.append(1 if v > 0 else -1)
    return sum(1 for s0, s1 in zip(signs[:-1], signs[1:]) if s0 != s1)


def _bisect_root(coeffs: np.ndarray, lo: float, hi: float, tol: float) -> float:
    flo = _horner(coeffs, lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _horner(coeffs, mid)
        if fm == 0.0:
            return mid
        if (flo > 0) != (fm > 0):
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _piece_roots(coeffs: np.ndarray, tol: float) -> list[float]:
    """Sign-change roots of a local polynomial strictly inside (-1, 1)."""
    c = _trim(coeffs, 0.0)
    if c.size <= 1:
        return []
    chain = _sturm_chain(c)
    pad = 1e-12
    roots: list[float] = []
    stack = [(-1.0 + pad, 1.0 - pad)]
    while stack:
        lo, hi = stack.pop()
        n = _variations(chain, lo) - _variations(chain, hi)
        if n <= 0:
            continue
        flo, fhi = _horner(c, lo), _horner(c, hi)
        if hi - lo <= tol:
            if (flo > 0) != (fhi > 0):
                roots.append(0.5 * (lo + hi))
            continue
        if n == 1 and (flo > 0) != (fhi > 0):
            roots.append(_bisect_root(c, lo, hi, tol))
            continue
        mid = 0.5 * (lo + hi)
        if _horner(c, mid) == 0.0:
            mid += (hi - lo) * 1e-9
        stack.append((lo, mid))
        stack.append((mid, hi))
    return sorted(roots)
