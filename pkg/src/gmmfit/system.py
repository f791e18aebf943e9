"""Encoding of the fitting feasibility problem as polynomial inequalities.

The encoded question: do mixture parameters exist, inside a box, whose
shape-restricted approximant is within ``nu`` of the density estimate in
the order-K interval norm?  The encoding quantifies universally over the K
interval endpoints, existentially over the approximant breakpoints and the
per-segment absolute-integral witnesses, and combines, for every admissible
ordering of all these points, per-segment integral bounds built from
per-section antiderivatives.

The ordering disjunction is held symbolically: its members are generated
on demand (their count grows factorially) and never expanded into a flat
formula.  Systems with more ordered symbols than the configured cap refuse
enumeration and report counts only.

The export grammar is line-oriented and deterministic; ``parse_export``
restores an equal system, and ``evaluate_feasibility`` implements the
export's semantics directly from the exported coefficient data, which lets
tests cross-validate the encoder against direct interval-norm evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .ak import ak_norm
from .density import DensityEstimate
from .mixtures import DEFAULT_CONSTANTS, precision_bound
from .piecewise import PiecewisePolynomial, Polynomial
from .shapes import ShapePolyConfig, standard_approx

PERMUTATION_SYMBOL_CAP = 14


@dataclass(frozen=True)
class DomainBox:
    """Search box for the free parameters, one bound set per component.

    ``kind`` selects the parametrization: "raw" means (weight, mean,
    precision) on the common scale; "rescaled" means interval-local means
    and precisions, one associated interval per component.
    """

    kind: str
    k: int
    weight_min: float
    mean_lo: float
    mean_hi: float
    prec_lo: float
    prec_hi: float

    def __post_init__(self):
        if self.kind not in ("raw", "rescaled"):
            raise ValueError("kind must be raw or rescaled")
        if not (0 <= self.weight_min < 1):
            raise ValueError("weight_min must be in [0, 1)")
        if not (self.prec_lo > 0 and self.prec_hi > self.prec_lo):
            raise ValueError("need 0 < prec_lo < prec_hi")
        if not self.mean_hi > self.mean_lo:
            raise ValueError("need mean_lo < mean_hi")

    @classmethod
    def raw(cls, k: int, gamma: float, prec_floor: float = 1e-3) -> "DomainBox":
        return cls("raw", k, 0.0, -1.0, 1.0, min(prec_floor, gamma / 10.0), gamma)

    @classmethod
    def rescaled(cls, k: int, s: int, eps: float, degree: int) -> "DomainBox":
        phi = precision_bound(eps, k, degree)
        omega = DEFAULT_CONSTANTS.density_floor
        return cls(
            "rescaled",
            k,
            eps / (2.0 * k),
            -2.0 * s * phi / omega,
            2.0 * s * phi / omega,
            math.sqrt(2.0 * math.pi) * omega / (16.0 * s),
            phi / 2.0,
        )

    def contains(self, weights, means, precisions, tol: float = 1e-9) -> bool:
        w = np.asarray(weights)
        mu = np.asarray(means)
        tau = np.asarray(precisions)
        return bool(
            np.all(w >= self.weight_min - tol)
            and np.all(w <= 1.0 + tol)
            and abs(w.sum() - 1.0) <= 1e-6
            and np.all(mu >= self.mean_lo - tol)
            and np.all(mu <= self.mean_hi + tol)
            and np.all(tau >= self.prec_lo * (1 - 1e-9) - tol)
            and np.all(tau <= self.prec_hi * (1 + 1e-9) + tol)
        )


@dataclass(frozen=True)
class PolySystem:
    k: int
    order: int  # K, the interval-norm order
    nu: float
    eps: float
    parametrization: str  # "raw" | "rescaled"
    free_vars: tuple[str, ...]
    forall_vars: tuple[str, ...]
    exists_vars: tuple[str, ...]
    domain: DomainBox
    intervals: tuple[tuple[float, float], ...]  # associated intervals (rescaled)
    dens_knots: tuple[float, ...]
    dens_pieces: tuple[tuple[float, ...], ...]  # global-coordinate coefficients
    shape_coeffs: tuple[float, ...]  # standard center piece, plain coordinates
    shape_halfwidth: float
    valid_predicates: tuple[str, ...] = field(repr=False, default=())
    breakpoint_predicates: tuple[str, ...] = field(repr=False, default=())
    bound_predicates: tuple[str, ...] = field(repr=False, default=())

    @property
    def r(self) -> int:
        return len(self.dens_knots)

    @property
    def s(self) -> int:
        return 2 * self.k

    @property
    def t(self) -> int:
        return 2 * self.order + self.r + self.s

    @property
    def u(self) -> int:
        return 3 * self.k

    @property
    def materialized(self) -> bool:
        return self.t <= PERMUTATION_SYMBOL_CAP

    @property
    def permutation_count(self) -> int:
        return count_orderings(self.order, self.r, self.s)

    @property
    def predicate_count(self) -> int:
        # explicit predicates plus one integral-bound instance per
        # (segment slot, section, active set) template member
        explicit = (
            len(self.valid_predicates)
            + len(self.breakpoint_predicates)
            + len(self.bound_predicates)
        )
        templates = (self.t - 1) * (self.r + 1) * 2**self.k
        return explicit + templates

    def __post_init__(self):
        limit = len(self.valid_predicates) + self.s + 6 * float(self.t) ** (self.t + 1)
        if not self.predicate_count < limit:
            raise ValueError("predicate count exceeds the size bound")

    def iter_orderings(self):
        """Yield admissible symbol orderings (tuples of variable names).

        Refused (counts stay available) when t exceeds the symbol cap.
        """
        if not self.materialized:
            raise ValueError(
                f"t={self.t} exceeds cap {PERMUTATION_SYMBOL_CAP}; counts only"
            )
        a = [f"a{i+1}" for i in range(self.order)]
        b = [f"b{i+1}" for i in range(self.order)]
        c = [f"c{i+1}" for i in range(self.r)]
        d = [f"d{i+1}" for i in range(self.s)]
        yield from _orderings(a, b, c, d)


def _orderings(a, b, c, d, prefix=()):
    """All interleavings: a's ordered, b's ordered, a_i before b_i, c's ordered."""
    if not (a or b or c or d):
        yield prefix
        return
    if a:
        yield from _orderings(a[1:], b, c, d, prefix + (a[0],))
    if b and len(b) > len(a):  # next b may close only if its a is placed
        yield from _orderings(a, b[1:], c, d, prefix + (b[0],))
    if c:
        yield from _orderings(a, b, c[1:], d, prefix + (c[0],))
    for j, dj in enumerate(d):  # d's carry no order constraint
        yield from _orderings(a, b, c, d[:j] + d[j + 1 :], prefix + (dj,))


@lru_cache(maxsize=None)
def count_orderings(order: int, r: int, s: int) -> int:
    """|Phi|: interleavings satisfying the four ordering rules."""
    t = 2 * order + r + s
    catalan = math.comb(2 * order, order) // (order + 1)
    return (
        math.comb(t, 2 * order)
        * catalan
        * math.comb(t - 2 * order, r)
        * math.factorial(s)
    )


# -- encoding -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _poly_expr(var: str, coeffs) -> str:
    return f"(poly {var} {' '.join(_fmt(c) for c in coeffs)})"


def encode_system(
    dens: DensityEstimate,
    k: int,
    eps: float,
    order: int,
    nu: float,
    domain: DomainBox | None = None,
    allocation=None,
) -> PolySystem:
    """Build the quantified system for fitting k components to ``dens``.

    With ``allocation`` (a composition of k over the estimate's bounded
    intervals) the rescaled parametrization is used and each component is
    tied to its allocated interval; otherwise the raw parametrization over
    the common scale.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if order < 1:
        raise ValueError("order must be >= 1")
    cfg = ShapePolyConfig.build(eps, "gaussian")
    shape = standard_approx(cfg)
    h = cfg.half_width
    center = shape.pieces[0].compose_affine(1.0 / h, 0.0)  # plain coordinates

    knots = tuple(float(v) for v in dens.pp.breakpoints)
    pieces = []
    for i, piece in enumerate(dens.pp.pieces):
        a, b = knots[i], knots[i + 1]
        # local u = (2x - a - b)/(b - a): re-expand into global monomials
        glob = piece.compose_affine(2.0 / (b - a), -(a + b) / (b - a))
        pieces.append(tuple(float(v) for v in glob.coeffs))

    intervals = ()
    if allocation is not None:
        counts = tuple(int(v) for v in allocation)
        if sum(counts) != k:
            raise ValueError("allocation must sum to k")
        if len(counts) != len(dens.intervals):
            raise ValueError("allocation length must match interval count")
        per_component = []
        for iv, c in zip(dens.intervals, counts):
            per_component.extend([iv] * c)
        intervals = tuple(per_component)
        parametrization = "rescaled"
        if domain is None:
            domain = DomainBox.rescaled(k, len(dens.intervals), eps, dens.degree)
    else:
        parametrization = "raw"
        if domain is None:
            domain = DomainBox.raw(k, gamma=100.0)

    prefix = "m" if parametrization == "rescaled" else ""
    wvars = tuple(f"w{i+1}" for i in range(k))
    mvars = tuple(f"{prefix}mu{i+1}" for i in range(k))
    tvars = tuple(f"{prefix}tau{i+1}" for i in range(k))
    free = wvars + mvars + tvars
    forall = tuple(f"a{i+1}" for i in range(order)) + tuple(
        f"b{i+1}" for i in range(order)
    )
    t_total = 2 * order + len(knots) + 2 * k
    exists = tuple(f"d{i+1}" for i in range(2 * k)) + tuple(
        f"xi{i+1}" for i in range(t_total)
    )

    valid = [f"(= (+ {' '.join(wvars)}) {_fmt(1.0)})"]
    for i in range(k):
        valid.append(f"(>= {wvars[i]} {_fmt(domain.weight_min)})")
        valid.append(f"(<= {wvars[i]} {_fmt(1.0)})")
        valid.append(f"(>= {mvars[i]} {_fmt(domain.mean_lo)})")
        valid.append(f"(<= {mvars[i]} {_fmt(domain.mean_hi)})")
        valid.append(f"(>= {tvars[i]} {_fmt(domain.prec_lo)})")
        valid.append(f"(<= {tvars[i]} {_fmt(domain.prec_hi)})")

    breakpoints = []
    for i in range(k):
        if parametrization == "raw":
            # d = mu -+ h / tau  <=>  tau d - tau mu +- h = 0
            lhs = f"(- (* {tvars[i]} d{2*i+1}) (* {tvars[i]} {mvars[i]}))"
            breakpoints.append(f"(= (+ {lhs} {_fmt(h)}) {_fmt(0.0)})")
            lhs = f"(- (* {tvars[i]} d{2*i+2}) (* {tvars[i]} {mvars[i]}))"
            breakpoints.append(f"(= (- {lhs} {_fmt(h)}) {_fmt(0.0)})")
        else:
            lo, hi = intervals[i]
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            # local argument tt (x - mid)/half - mt hits -+h at the breakpoints
            for sign, dvar in ((-1.0, f"d{2*i+1}"), (1.0, f"d{2*i+2}")):
                arg = (
                    f"(- (* {tvars[i]} (* {_fmt(1.0 / half)} (- {dvar} {_fmt(mid)})))"
                    f" {mvars[i]})"
                )
                breakpoints.append(f"(= (- {arg} {_fmt(sign * h)}) {_fmt(0.0)})")

    bound = [f"(>= xi{i+1} {_fmt(0.0)})" for i in range(t_total - 1)]
    bound.append(
        f"(<= (+ {' '.join(f'xi{i+1}' for i in range(t_total - 1))}) {_fmt(nu)})"
    )

    return PolySystem(
        k=k,
        order=order,
        nu=float(nu),
        eps=float(eps),
        parametrization=parametrization,
        free_vars=free,
        forall_vars=forall,
        exists_vars=exists,
        domain=domain,
        intervals=intervals,
        dens_knots=knots,
        dens_pieces=tuple(pieces),
        shape_coeffs=tuple(float(v) for v in center.coeffs),
        shape_halfwidth=h,
        valid_predicates=tuple(valid),
        breakpoint_predicates=tuple(breakpoints),
        bound_predicates=tuple(bound),
    )


# -- export -------------------------------------------------------------------

_GRAMMAR_NOTE = """\
# combiner: (and VALID BREAKPOINTS BOUNDS ORDERINGS)
# ORDERINGS = or over admissible symbol orderings phi of
#   (and (chain <= phi) (and_i INT(i, phi)))
# where for consecutive symbols (phi_i, phi_i+1):
#   INT(i, phi) = (or (not (active i phi))
#                     (and (<= (neg xi_i) AREA(i, phi)) (<= AREA(i, phi) xi_i)))
#   active i phi: some a_j at or before phi_i whose b_j is at or after phi_i+1
#   AREA(i, phi) = [F_sec(phi_i+1) - F_sec(phi_i)]
#                  - sum over components j on the segment of
#                    w_j [G(arg_j(phi_i+1)) - G(arg_j(phi_i))]
#   sec: count of dens knots at or before phi_i; component j is on the
#   segment when d_2j-1 is at or before phi_i and d_2j at or after phi_i+1.
#   F_sec: antiderivative of the dens piece; G: antiderivative of shape.
#   arg_j(x) = tau_j (x - mu_j)            [raw]
#   arg_j(x) = mtau_j (x - mid_j)/half_j - mmu_j   [rescaled]
"""


def export_system(system: PolySystem) -> str:
    """Deterministic textual form; byte-stable across runs."""
    lines = ["gmmfit-polysystem 1"]
    lines.append("[sizes]")
    for key, val in (
        ("k", system.k),
        ("order", system.order),
        ("r", system.r),
        ("s", system.s),
        ("t", system.t),
        ("u", system.u),
        ("predicates", system.predicate_count),
        ("orderings", system.permutation_count),
    ):
        lines.append(f"{key} = {val}")
    lines.append(f"nu = {_fmt(system.nu)}")
    lines.append(f"eps = {_fmt(system.eps)}")
    lines.append(f"parametrization = {system.parametrization}")
    lines.append(f"materialized = {'true' if system.materialized else 'counts-only'}")
    lines.append("[free-vars]")
    lines.append(" ".join(system.free_vars))
    lines.append("[forall]")
    lines.append(" ".join(system.forall_vars))
    lines.append("[exists]")
    lines.append(" ".join(system.exists_vars))
    lines.append("[domain]")
    d = system.domain
    lines.append(
        f"{d.kind} k={d.k} wmin={_fmt(d.weight_min)} "
        f"mean=[{_fmt(d.mean_lo)},{_fmt(d.mean_hi)}] "
        f"prec=[{_fmt(d.prec_lo)},{_fmt(d.prec_hi)}]"
    )
    lines.append("[intervals]")
    for lo, hi in system.intervals:
        lines.append(f"{_fmt(lo)} {_fmt(hi)}")
    lines.append("[valid-parameters]")
    lines.extend(system.valid_predicates)
    lines.append("[correct-breakpoints]")
    lines.extend(system.breakpoint_predicates)
    lines.append("[interval-norm-bounds]")
    lines.extend(system.bound_predicates)
    lines.append("[density-knots]")
    lines.append(" ".join(_fmt(v) for v in system.dens_knots))
    lines.append("[density-pieces]")
    for coeffs in system.dens_pieces:
        lines.append(_poly_expr("x", coeffs))
    lines.append("[shape]")
    lines.append(f"halfwidth = {_fmt(system.shape_halfwidth)}")
    lines.append(_poly_expr("y", system.shape_coeffs))
    lines.append("[combiner]")
    lines.append(_GRAMMAR_NOTE.rstrip())
    return "\n".join(lines) + "\n"


def parse_export(text: str) -> PolySystem:
    """Parse :func:`export_system` output back into an equal system."""
    sections: dict[str, list[str]] = {}
    current = None
    header: dict[str, str] = {}
    for line in text.splitlines():
        if not line or line.startswith("gmmfit-polysystem"):
            continue
        if line.startswith("["):
            current = line.strip("[]")
            sections[current] = []
            continue
        if current is None:
            continue
        if current == "sizes" and "=" in line:
            key, val = line.split("=", 1)
            header[key.strip()] = val.strip()
            continue
        sections[current].append(line)

    def _floats(s):
        return tuple(float(v) for v in s.split())

    def _parse_poly(line):
        inner = line.strip()[len("(poly x") :].rstrip(")")
        return _floats(inner)

    dom_line = sections["domain"][0].split()
    kv = dict(part.split("=", 1) for part in dom_line[1:])
    mean_lo, mean_hi = (float(v) for v in kv["mean"].strip("[]").split(","))
    prec_lo, prec_hi = (float(v) for v in kv["prec"].strip("[]").split(","))
    domain = DomainBox(
        dom_line[0], int(kv["k"]), float(kv["wmin"]), mean_lo, mean_hi, prec_lo, prec_hi
    )
    shape_line = [l for l in sections["shape"] if l.startswith("(poly")][0]
    halfwidth = float(
        [l for l in sections["shape"] if l.startswith("halfwidth")][0].split("=")[1]
    )
    shape_coeffs = tuple(
        float(v) for v in shape_line[len("(poly y") : ].rstrip(")").split()
    )
    return PolySystem(
        k=int(header["k"]),
        order=int(header["order"]),
        nu=float(header["nu"]),
        eps=float(header["eps"]),
        parametrization=header["parametrization"],
        free_vars=tuple(sections["free-vars"][0].split()),
        forall_vars=tuple(sections["forall"][0].split()),
        exists_vars=tuple(sections["exists"][0].split()),
        domain=domain,
        intervals=tuple(
            (float(a), float(b))
            for a, b in (line.split() for line in sections.get("intervals", []))
        ),
        dens_knots=_floats(sections["density-knots"][0]),
        dens_pieces=tuple(_parse_poly(l) for l in sections["density-pieces"]),
        shape_coeffs=shape_coeffs,
        shape_halfwidth=halfwidth,
        valid_predicates=tuple(sections["valid-parameters"]),
        breakpoint_predicates=tuple(sections["correct-breakpoints"]),
        bound_predicates=tuple(sections["interval-norm-bounds"]),
    )


# -- semantics ----------------------------------------------------------------


def _theta_split(system: PolySystem, theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    arr = np.asarray(theta, dtype=float)
    if arr.size != 3 * system.k:
        raise ValueError("theta must hold 3k values: weights, means, precisions")
    k = system.k
    return arr[:k], arr[k : 2 * k], arr[2 * k :]


def raw_components(system: PolySystem, theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common-scale (weight, mean, precision) triples for ``theta``."""
    w, mu, tau = _theta_split(system, theta)
    if system.parametrization == "raw":
        return w, mu, tau
    mu_raw = np.empty_like(mu)
    tau_raw = np.empty_like(tau)
    for i, (lo, hi) in enumerate(system.intervals):
        half, mid = 0.5 * (hi - lo), 0.5 * (lo + hi)
        tau_raw[i] = tau[i] / half
        mu_raw[i] = mid + mu[i] / tau_raw[i]
    return w, mu_raw, tau_raw


def diff_from_system(system: PolySystem, theta) -> PiecewisePolynomial:
    """dens - approximant(theta), assembled from the exported coefficients."""
    w, mu, tau = raw_components(system, theta)
    h = system.shape_halfwidth
    shape = Polynomial(system.shape_coeffs)
    comp_knots = []
    for m, t in zip(mu, tau):
        comp_knots.extend([m - h / t, m + h / t])
    knots = np.unique(np.concatenate([system.dens_knots, comp_knots]))
    span = knots[-1] - knots[0]
    knots = knots[np.concatenate([[True], np.diff(knots) > 1e-12 * span])]
    pieces = []
    dens_knots = np.asarray(system.dens_knots)
    for a, b in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (a + b)
        alpha, beta = 0.5 * (b - a), 0.5 * (a + b)  # x = alpha v + beta
        sec = int(np.searchsorted(dens_knots, mid, side="right"))
        acc = np.zeros(1)
        if 1 <= sec <= len(system.dens_pieces):
            glob = Polynomial(system.dens_pieces[sec - 1])
            acc = glob.compose_affine(alpha, beta).coeffs
        for wi, mi, ti in zip(w, mu, tau):
            if mi - h / ti <= mid <= mi + h / ti:
                # w tau shape(tau (x - mu)) with x = alpha v + beta
                local = shape.compose_affine(ti * alpha, ti * (beta - mi))
                term = wi * ti * local.coeffs
                n = max(acc.size, term.size)
                out = np.zeros(n)
                out[: acc.size] += acc
                out[: term.size] -= term
                acc = out
        pieces.append(Polynomial(acc if acc.size else [0.0]))
    return PiecewisePolynomial(knots, pieces)


def system_norm_value(system: PolySystem, theta) -> float:
    """The interval-norm value the system compares against nu at ``theta``."""
    return ak_norm(diff_from_system(system, theta), system.order)


def evaluate_feasibility(system: PolySystem, theta) -> bool:
    """Truth of the system at ``theta`` (domain membership and norm bound)."""
    w, mu, tau = _theta_split(system, theta)
    if not system.domain.contains(w, mu, tau):
        return False
    return system_norm_value(system, theta) <= system.nu
