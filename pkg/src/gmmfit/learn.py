"""Top-level learners: fit a k-component mixture to sampled data.

Both learners share the same skeleton: estimate a piecewise-polynomial
density from the samples (the only step that touches data), rescale it to
[-1, 1], minimise the order-4k interval-norm distance between the estimate
and a shape-restricted mixture approximant, then walk the threshold
doubling loop, fix up the parameters, and map them back to data
coordinates.

``learn_well_behaved`` searches the common-scale parameter box directly
and needs the caller to bound the precisions.  ``learn_gmm`` removes that
assumption: it enumerates every allocation of the k components to the
estimate's bounded intervals, fits each in interval-local coordinates
(robust however extreme the scales are), and keeps the allocation whose
feasibility threshold is smallest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ak import ak_distance
from .density import DensityEstimate, estimate_density, rescale_to_unit
from .mixtures import (
    DEFAULT_CONSTANTS,
    FAMILIES,
    MixtureParams,
    RescaledComponent,
    RescaledParams,
    l1_to_piecewise,
    precision_bound,
)
from .shapes import ShapePolyConfig, mixture_approx
from .solver import FitProblem, SolveConfig, minimize_objective
from .system import DomainBox

NU_CAP = 3.0  # the norm of a difference of two near-densities stays below this
SMALL_CONSTANT = 1e-2  # the unnamed universal constant in the solver accuracy


class InfeasibleError(RuntimeError):
    """Raised if the threshold loop somehow exhausts its cap."""


@dataclass(frozen=True)
class LearnConfig:
    k: int
    eps: float
    delta: float = 0.1  # failure budget; enters reporting only (the
    # estimator exposes empirical success rates instead of a knob)
    gamma: float | None = None  # precision cap for the bounded path
    family: str = "gaussian"
    seed: int = 0
    starts: int | None = None  # Latin-hypercube starts (default 50 k)
    refine: int | None = None  # simplex-refined starts per solve

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must be in (0, 1)")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class Allocation:
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("allocation counts must be nonnegative")


@dataclass
class FitReport:
    params: MixtureParams
    nu: float
    allocation: tuple | None
    solver: dict = field(default_factory=dict)
    l1_to_estimate: float = float("nan")
    ak_to_estimate: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "model": self.params.to_dict(),
            "nu": self.nu,
            "allocation": list(self.allocation) if self.allocation is not None else None,
            "l1_to_estimate": self.l1_to_estimate,
            "ak_to_estimate": self.ak_to_estimate,
            "solver": self.solver,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def enumerate_allocations(k: int, s: int) -> list[tuple[int, ...]]:
    """All ways to split k components over s intervals, lexicographic."""
    if k < 1 or s < 1:
        raise ValueError("need k >= 1 and s >= 1")
    out: list[tuple[int, ...]] = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for c in range(remaining + 1):
            rec(prefix + (c,), remaining - c, slots - 1)

    rec((), k, s)
    return out


def _nu_loop(eps: float, value: float, slack: float) -> tuple[float, int]:
    """Doubling search: smallest nu in {eps 2^j} accepted for ``value``."""
    nu, doublings = eps, 0
    while value > nu * (1.0 + 1e-6) + slack and nu < NU_CAP:
        nu *= 2.0
        doublings += 1
    if value > nu * (1.0 + 1e-6) + slack and nu >= NU_CAP:
        raise InfeasibleError(
            f"objective {value:.3g} infeasible even at the {NU_CAP} cap"
        )
    return min(nu, NU_CAP), doublings


def _descale(params: MixtureParams, rescale_map) -> MixtureParams:
    """Map unit-coordinate parameters back to data coordinates.

    The density transform is measure preserving, so precisions scale with
    2/(beta - alpha); means map affinely from [-1, 1] onto [alpha, beta].
    """
    alpha, beta = rescale_map
    width = beta - alpha
    return MixtureParams(
        params.weights,
        (params.means + 1.0) * width / 2.0 + alpha,
        params.precisions * 2.0 / width,
        params.family,
    )


def _diagnose(dens: DensityEstimate, params_unit: MixtureParams, eps, order):
    cfg = ShapePolyConfig.build(eps, params_unit.family)
    approx = mixture_approx(params_unit, cfg)
    return (
        l1_to_piecewise(params_unit, dens.pp),
        ak_distance(dens.pp, approx, order),
    )


def _fallback_single_component(dens: DensityEstimate) -> MixtureParams:
    xs = np.linspace(*dens.pp.support, 512)
    vals = dens.pp.evaluate(xs)
    peak = float(xs[np.argmax(vals)])
    tau = float(max(vals.max(), 1e-3) * math.sqrt(2.0 * math.pi))
    return MixtureParams(np.array([1.0]), np.array([peak]), np.array([tau]))


def learn_well_behaved(samples, cfg: LearnConfig) -> FitReport:
    """Bounded-precision learner: every component precision is <= gamma
    (in unit coordinates) for some optimal fit, so a single common-scale
    search suffices."""
    if cfg.gamma is None:
        raise ValueError("the bounded-precision path needs gamma")
    if cfg.family != "gaussian":
        raise ValueError("the bounded-precision path is defined for gaussians")
    k, eps, gamma = cfg.k, cfg.eps, cfg.gamma
    est = estimate_density(samples, k, eps)
    unit = rescale_to_unit(est)
    order = 4 * k

    lam = SMALL_CONSTANT * (1.0 / gamma) * (eps / k) ** 2
    eta = 3.0 * k * gamma
    domain = DomainBox.raw(k, gamma)
    problem = FitProblem(unit, eps, order, eps, domain)
    solve_cfg = SolveConfig(
        lam=lam,
        eta=eta,
        starts=cfg.starts or 50 * k,
        seed=cfg.seed,
        refine=cfg.refine or 8,
    )
    theta, value, diag = minimize_objective(problem, solve_cfg)
    slack = diag["lipschitz"] * lam
    nu, doublings = _nu_loop(eps, value, slack)

    w = theta[:k].copy()
    mu = theta[k : 2 * k].copy()
    tau = theta[2 * k :].copy()
    for i in range(k):  # defensive: the box keeps precisions positive
        if tau[i] <= 0:
            w[i], tau[i] = 0.0, 1.0
    total = w.sum()
    if total <= 0:
        params_unit = _fallback_single_component(unit)
        if k > 1:
            params_unit = MixtureParams(
                np.concatenate([params_unit.weights, np.zeros(k - 1)]),
                np.concatenate([params_unit.means, np.zeros(k - 1)]),
                np.concatenate([params_unit.precisions, np.ones(k - 1)]),
            )
    else:
        params_unit = MixtureParams(w / total, mu, tau)

    l1_est, ak_est = _diagnose(unit, params_unit, eps, order)
    solver_diag = {
        "objective": value,
        "lam": lam,
        "eta": eta,
        "slack": slack,
        "nu_doublings": doublings,
        **{key: diag[key] for key in ("evaluations", "starts", "refined", "lipschitz")},
    }
    return FitReport(
        params=_descale(params_unit, unit.rescale_map),
        nu=nu,
        allocation=None,
        solver=solver_diag,
        l1_to_estimate=l1_est,
        ak_to_estimate=ak_est,
    )


def solver_accuracy(eps: float, k: int, s: int, phi: float) -> float:
    """Approximation radius for the allocation solver: the smallest of the
    perturbation-stability radius, the interval budget, and the weight
    rounding margin."""
    return min(SMALL_CONSTANT * (eps / (phi * k)) ** 2, 1.0 / (16.0 * s), eps / (4.0 * k))


def solution_norm_bound(k: int, s: int, phi: float) -> float:
    omega = DEFAULT_CONSTANTS.density_floor
    return 6.0 * k * s * phi / omega + 3.0 * k * phi / 2.0 + 1.0


def find_fit_given_allocation(
    dens_unit: DensityEstimate,
    allocation,
    eps: float,
    *,
    family: str = "gaussian",
    order: int | None = None,
    seed: int = 0,
    starts: int | None = None,
    refine: int | None = None,
    max_evals_per_start: int | None = None,
) -> tuple[RescaledParams, float, dict]:
    """Fit with a fixed component-to-interval allocation.

    Returns the interval-local parameters, the smallest accepted doubling
    threshold, and solver diagnostics.
    """
    counts = tuple(int(c) for c in allocation)
    k = sum(counts)
    s = len(dens_unit.intervals)
    if len(counts) != s:
        raise ValueError("allocation length must match the interval count")
    order = order or 4 * k
    phi = precision_bound(eps, k, max(dens_unit.degree, 1))
    lam = solver_accuracy(eps, k, s, phi)
    psi = solution_norm_bound(k, s, phi)
    domain = DomainBox.rescaled(k, s, eps, max(dens_unit.degree, 1))
    problem = FitProblem(dens_unit, eps, order, eps, domain, counts, family)
    solve_cfg = SolveConfig(
        lam=lam,
        eta=psi,
        starts=starts or 50 * k,
        seed=seed,
        refine=refine or 4,
        max_evals_per_start=max_evals_per_start,
    )
    theta, value, diag = minimize_objective(problem, solve_cfg)
    slack = diag["lipschitz"] * lam
    nu, doublings = _nu_loop(eps, value, slack)
    comps = tuple(
        RescaledComponent(float(wi), float(mi), float(ti), iv)
        for wi, mi, ti, iv in zip(
            theta[:k] / theta[:k].sum(),
            theta[k : 2 * k],
            theta[2 * k :],
            problem.intervals,
        )
    )
    diag = dict(diag)
    diag.update(
        objective=value, lam=lam, psi=psi, slack=slack, nu_doublings=doublings
    )
    return RescaledParams(comps, family), nu, diag


def _round_weights(weights: np.ndarray, eps: float, k: int) -> np.ndarray:
    """Push solver weights back onto the exact simplex (last takes the rest)."""
    w = np.asarray(weights, dtype=float).copy()
    if k == 1:
        return np.array([1.0])
    w[: k - 1] = np.clip(w[: k - 1] - eps / (2.0 * k), 0.0, 1.0)
    w[k - 1] = 1.0 - w[: k - 1].sum()
    return w


def learn_gmm(samples, cfg: LearnConfig) -> FitReport:
    """General proper learner: no scale assumptions on the components."""
    return _learn_general(samples, cfg, "gaussian")


def learn_family(samples, cfg: LearnConfig, family: str) -> FitReport:
    """Same pipeline for the other location-scale families."""
    if family not in ("exponential", "laplace"):
        raise ValueError("family must be exponential or laplace")
    return _learn_general(samples, cfg, family)


def _learn_general(samples, cfg: LearnConfig, family: str) -> FitReport:
    k, eps = cfg.k, cfg.eps
    est = estimate_density(samples, k, eps)
    unit = rescale_to_unit(est)
    order = 4 * k
    s = len(unit.intervals)

    best = None  # (nu, index, rescaled params, diag)
    for index, counts in enumerate(enumerate_allocations(k, s)):
        rparams, nu, diag = find_fit_given_allocation(
            unit,
            counts,
            eps,
            family=family,
            order=order,
            seed=cfg.seed,
            starts=cfg.starts,
            refine=cfg.refine or 2,
            max_evals_per_start=50 * 3 * k,
        )
        if best is None or nu < best[0]:
            best = (nu, index, counts, rparams, diag)

    nu, _, counts, rparams, diag = best
    # polish the winning allocation with a larger refinement budget
    rparams2, nu2, diag2 = find_fit_given_allocation(
        unit,
        counts,
        eps,
        family=family,
        order=order,
        seed=cfg.seed,
        starts=cfg.starts,
        refine=max(cfg.refine or 0, 6),
        max_evals_per_start=120 * 3 * k,
    )
    if nu2 <= nu:
        nu, rparams, diag = nu2, rparams2, diag2

    raw_unit = rparams.to_raw()
    weights = _round_weights(raw_unit.weights, eps, k)
    params_unit = MixtureParams(weights, raw_unit.means, raw_unit.precisions, family)

    l1_est, ak_est = _diagnose(unit, params_unit, eps, order)
    solver_diag = {
        "allocations": math.comb(k + s - 1, s - 1),
        **{
            key: diag[key]
            for key in (
                "objective",
                "lam",
                "psi",
                "slack",
                "nu_doublings",
                "evaluations",
                "starts",
                "refined",
                "lipschitz",
            )
        },
    }
    return FitReport(
        params=_descale(params_unit, unit.rescale_map),
        nu=nu,
        allocation=counts,
        solver=solver_diag,
        l1_to_estimate=l1_est,
        ak_to_estimate=ak_est,
    )


def learn(samples, cfg: LearnConfig) -> FitReport:
    """Dispatch: bounded-precision path when gamma is set, else general."""
    if cfg.gamma is not None:
        return learn_well_behaved(samples, cfg)
    if cfg.family == "gaussian":
        return learn_gmm(samples, cfg)
    return learn_family(samples, cfg, cfg.family)
