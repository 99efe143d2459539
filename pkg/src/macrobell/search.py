"""Locating Josephson parameters that behave as an ideal nonlinear beam splitter.

The quality measure is this package's own formalization: over one fitted
period pi/omega the worst of (a) leakage out of {|N,0>, |0,N>} and
(b) the deviation of p_N(t) from cos^2(omega t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._parallel import map_ordered
from .errors import DomainError, MacroBellError, NoOscillationError
from .josephson import (NbsParams, build_sector_hamiltonian, edge_probabilities,
                        fitted_omega_scaled)

OBJECTIVE_LABEL = "max(leakage, |p_N - cos^2(omega t)|) over one fitted period"
MIN_BUDGET = 50


@dataclass(frozen=True)
class NbsObjective:
    max_leakage: float
    profile_error: float
    omega_fitted: float

    @property
    def score(self) -> float:
        return max(self.max_leakage, self.profile_error)

    def as_dict(self) -> dict:
        return {"max_leakage": self.max_leakage, "profile_error": self.profile_error,
                "score": self.score, "omega_fitted": self.omega_fitted,
                "objective": OBJECTIVE_LABEL}


def nbs_quality(params: NbsParams, points_per_period: int = 512) -> NbsObjective:
    """Leakage and cos^2 profile error over one fitted period.

    Evaluated in time units of 1/kappa, so rescaling kappa and g together
    leaves the result unchanged.
    """
    w = fitted_omega_scaled(params)
    spectrum = build_sector_hamiltonian(params, params.N).scaled
    s = np.linspace(0.0, math.pi / w, points_per_period + 1)
    p_n, p_0 = edge_probabilities(spectrum, s)
    leak = float(np.max(1.0 - p_n - p_0))
    profile = float(np.max(np.abs(p_n - np.cos(w * s) ** 2)))
    return NbsObjective(max(leak, 0.0), profile, params.kappa * w)


@dataclass(frozen=True)
class SearchResult:
    params: NbsParams
    objective: NbsObjective
    evaluations: int
    grid_best: NbsObjective
    grid_best_params: NbsParams
    history: list = field(default_factory=list, repr=False)


def _evaluate(args):
    N, kappa, g = args
    try:
        return nbs_quality(NbsParams(N, kappa, g))
    except MacroBellError:
        return None


def optimize_nbs(N: int, kappa_range: tuple, g_range: tuple, budget: int = 400,
                 workers: int = 1) -> SearchResult:
    """Log-spaced grid scan, then Nelder-Mead in (log kappa, log g) from the best point.

    Roughly half the evaluation budget goes to the grid.  Candidates whose
    tunnelling cannot be resolved score as failures.  Fully deterministic.
    """
    if budget < MIN_BUDGET:
        raise DomainError(f"budget must be >= {MIN_BUDGET}, got {budget}")
    for lo, hi in (kappa_range, g_range):
        if not 0 < lo <= hi:
            raise DomainError(f"ranges must be positive and ordered, got ({lo}, {hi})")
    side = max(2, int(math.isqrt(budget // 2)))
    ks = np.geomspace(kappa_range[0], kappa_range[1], side)
    gs = np.geomspace(g_range[0], g_range[1], side)
    points = [(N, float(k), float(g)) for k in ks for g in gs]
    results = map_ordered(_evaluate, points, workers)
    history = list(zip(points, results))
    scored = [(r.score, i) for i, r in enumerate(results) if r is not None]
    if not scored:
        raise NoOscillationError("no grid candidate showed a resolvable oscillation")
    _, best_i = min(scored)
    grid_obj, grid_params = results[best_i], NbsParams(*points[best_i])
    evaluations = len(points)
    remaining = budget - evaluations
    best_obj, best_params = grid_obj, grid_params

    lo = np.log([kappa_range[0], g_range[0]])
    hi = np.log([kappa_range[1], g_range[1]])

    def f(z):
        nonlocal best_obj, best_params
        z = np.clip(z, lo, hi)
        k, g = float(np.exp(z[0])), float(np.exp(z[1]))
        r = _evaluate((N, k, g))
        history.append(((N, k, g), r))
        if r is None:
            return 1.0
        if r.score < best_obj.score:
            best_obj, best_params = r, NbsParams(N, k, g)
        return r.score

    if remaining > 0:
        z0 = np.log([grid_params.kappa, grid_params.g])
        step = 0.5 * (hi - lo) / max(side - 1, 1)
        simplex = np.array([z0, z0 + [step[0], 0.0], z0 + [0.0, step[1]]])
        res = minimize(f, z0, method="Nelder-Mead",
                       options={"maxfev": remaining, "initial_simplex": simplex,
                                "xatol": 1e-10, "fatol": 1e-14})
        evaluations += int(res.nfev)
    return SearchResult(best_params, best_obj, evaluations, grid_obj, grid_params, history)
