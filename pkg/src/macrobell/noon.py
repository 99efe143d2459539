"""N-boson CH Bell test built from two interfering NOON states.

Site A holds modes (a, a2) and site B holds (b, b2).  A joint state is a
map from site totals (T_A, T_B) to an amplitude matrix indexed by
(n_a, n_b); the partner occupations are n_a2 = T_A - n_a and
n_b2 = T_B - n_b.  Outcome "+" at a site means exactly (N, 0) bosons in
its two modes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ._parallel import map_ordered
from .errors import DomainError
from .josephson import NbsParams, build_sector_hamiltonian, fitted_omega, fitted_omega_scaled

DEFAULT_THETA = -math.pi / 2
PHI_PI_OVER_16 = math.pi / 16
IDEAL_CH_MAXIMUM = (1.0 + math.sqrt(2.0)) / 2.0
MODES = ("ideal", "hamiltonian")
PAIR_LABELS = ("tt", "ttp", "tpt", "tptp")


@dataclass(frozen=True)
class TwoSiteState:
    blocks: dict
    N: int
    theta: float = DEFAULT_THETA

    def block(self, t_a: int, t_b: int) -> np.ndarray:
        return self.blocks[(t_a, t_b)]

    @property
    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(np.abs(c) ** 2)) for c in self.blocks.values()))

    def block_weights(self) -> dict:
        return {k: float(np.sum(np.abs(c) ** 2)) for k, c in self.blocks.items()}

    def p_plus_plus(self) -> float:
        c = self.blocks.get((self.N, self.N))
        return 0.0 if c is None else float(abs(c[self.N, self.N]) ** 2)

    def p_plus_a(self) -> float:
        return sum(float(np.sum(np.abs(c[self.N, :]) ** 2))
                   for (ta, _), c in self.blocks.items() if ta == self.N)

    def p_plus_b(self) -> float:
        return sum(float(np.sum(np.abs(c[:, self.N]) ** 2))
                   for (_, tb), c in self.blocks.items() if tb == self.N)


@dataclass(frozen=True)
class TimeSettings:
    """Scaled interaction times; the primed values are the alternative settings."""

    t_a: float
    t_a_prime: float
    t_b: float
    t_b_prime: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise DomainError("time settings must be finite")

    @classmethod
    def from_phi(cls, phi: float) -> "TimeSettings":
        """The family (t_a, t'_a, t_b, t'_b) = (0, 2 phi, phi, 3 phi)."""
        return cls(0.0, 2.0 * phi, phi, 3.0 * phi)

    def as_tuple(self) -> tuple:
        return (self.t_a, self.t_a_prime, self.t_b, self.t_b_prime)

    def pairs(self) -> tuple:
        """Setting pairs in the order tt, tt', t't, t't'."""
        return ((self.t_a, self.t_b), (self.t_a, self.t_b_prime),
                (self.t_a_prime, self.t_b), (self.t_a_prime, self.t_b_prime))


def prepare_two_noon(N: int, theta: float = DEFAULT_THETA) -> TwoSiteState:
    """(|N>_a|0>_b + e^{i theta}|0>_a|N>_b)/sqrt2 times (|0>_a2|N>_b2 - i|N>_a2|0>_b2)/sqrt2."""
    if int(N) != N or N < 1:
        raise DomainError(f"N must be an integer >= 1, got {N}")
    N = int(N)
    mid = np.zeros((N + 1, N + 1), dtype=complex)
    mid[N, 0] = 0.5
    mid[0, N] = -0.5j * np.exp(1j * theta)
    all_a = np.zeros((2 * N + 1, 1), dtype=complex)
    all_a[N, 0] = -0.5j
    all_b = np.zeros((1, 2 * N + 1), dtype=complex)
    all_b[0, N] = 0.5 * np.exp(1j * theta)
    return TwoSiteState({(N, N): mid, (2 * N, 0): all_a, (0, 2 * N): all_b}, N, theta)


def ideal_nbs_matrix(total: int, t: float) -> np.ndarray:
    """cos t on |T,0>,|0,T> and -i sin t between them; identity elsewhere."""
    u = np.eye(total + 1, dtype=complex)
    if total == 0:
        return u
    c, s = math.cos(t), math.sin(t)
    u[total, total] = u[0, 0] = c
    u[total, 0] = u[0, total] = -1j * s
    return u


def _check_ideal_support(c: np.ndarray, axis: int, total: int):
    if total == 0:
        return
    inner = np.take(c, np.arange(1, total), axis=axis)
    if inner.size and np.abs(inner).max() > 0:
        raise DomainError(
            f"ideal NBS is only defined on |{total},0> and |0,{total}>; "
            "block has support on intermediate occupations")


def _omega_scaled(params: NbsParams, omega: float | None) -> float:
    return fitted_omega_scaled(params) if omega is None else omega / params.kappa


def local_propagator(total: int, t: float, mode: str, params: NbsParams | None,
                     omega_scaled: float | None) -> np.ndarray:
    """Single-site propagator at scaled time t.

    In hamiltonian mode the evolution time in units of 1/kappa is
    t / omega_scaled, with omega_scaled = omega / kappa.
    """
    if mode == "ideal":
        return ideal_nbs_matrix(total, t)
    spectrum = build_sector_hamiltonian(params, total).scaled
    v = spectrum.eigenvectors
    return (v * spectrum.phases(t / omega_scaled)) @ v.T


def apply_local_nbs(state: TwoSiteState, t_a: float, t_b: float, mode: str = "ideal",
                    params: NbsParams | None = None,
                    omega: float | None = None) -> TwoSiteState:
    """Evolve every block with independent site propagators at scaled times.

    In hamiltonian mode the physical time is scaled time / omega, with omega
    defaulting to the fitted tunnelling frequency of ``params``.  Ideal mode
    acts on the sector of N bosons exactly as the two-state beam splitter;
    sectors of 2N bosons at a site get the same rotation on their edge
    states and identity on the interior, which leaves every "+" outcome
    untouched.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    w = None
    if mode == "hamiltonian":
        if params is None:
            raise DomainError("hamiltonian mode needs NbsParams")
        if params.N != state.N:
            raise DomainError(f"params.N={params.N} does not match state N={state.N}")
        w = _omega_scaled(params, omega)
    out = {}
    cache = {}
    for (ta_tot, tb_tot), c in state.blocks.items():
        if mode == "ideal":
            if ta_tot == state.N:
                _check_ideal_support(c, 0, ta_tot)
            if tb_tot == state.N:
                _check_ideal_support(c, 1, tb_tot)
        key_a, key_b = (ta_tot, t_a), (tb_tot, t_b)
        if key_a not in cache:
            cache[key_a] = local_propagator(ta_tot, t_a, mode, params, w)
        if key_b not in cache:
            cache[key_b] = local_propagator(tb_tot, t_b, mode, params, w)
        out[(ta_tot, tb_tot)] = cache[key_a] @ c @ cache[key_b].T
    return TwoSiteState(out, state.N, state.theta)


@dataclass(frozen=True)
class JointDistribution:
    """Number statistics of a two-site state.

    ``site_totals`` maps (T_A, T_B) to probability; ``modes`` maps
    (T_A, T_B) to the matrix P(n_a, n_b) within that block, which fixes the
    full P(n_a, n_a2, n_b, n_b2); ``lower_site_marginal`` is P(n_a = n, n_b = m, T_A = N).
    """

    site_totals: dict
    modes: dict
    lower_site_marginal: np.ndarray
    N: int

    def total(self) -> float:
        return float(sum(self.site_totals.values()))

    def full(self) -> dict:
        """Sparse map (n_a, n_a2, n_b, n_b2) -> probability over nonzero entries."""
        out = {}
        for (ta, tb), p in self.modes.items():
            for na, nb in zip(*np.nonzero(p)):
                out[(int(na), int(ta - na), int(nb), int(tb - nb))] = float(p[na, nb])
        return out

    def off_support_mass(self) -> float:
        """Mass with a site total outside {0, N, 2N}, or a mode outside {0, N}
        in the (N,N) block."""
        N = self.N
        bad = sum(p for (ta, tb), p in self.site_totals.items()
                  if ta not in (0, N, 2 * N) or tb not in (0, N, 2 * N))
        mid = self.modes.get((N, N))
        if mid is not None:
            keep = np.zeros_like(mid, dtype=bool)
            keep[np.ix_([0, N], [0, N])] = True
            bad += float(mid[~keep].sum())
        return float(bad)


def joint_number_distribution(state: TwoSiteState) -> JointDistribution:
    modes = {k: np.abs(c) ** 2 for k, c in state.blocks.items()}
    totals = {k: float(p.sum()) for k, p in modes.items()}
    N = state.N
    lower = np.zeros((N + 1, 2 * N + 1))
    for (ta, tb), p in modes.items():
        if ta == N:
            lower[:, : tb + 1] += p
    return JointDistribution(totals, modes, lower, N)


@dataclass(frozen=True)
class ChReport:
    settings: TimeSettings
    p_pp: dict
    p_a_plus: float
    p_b_plus: float
    S: float
    mode: str
    theta: float
    omega: float | None = None
    states: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def violation(self) -> bool:
        return self.S > 1.0

    def distributions(self) -> dict:
        return {k: joint_number_distribution(s) for k, s in self.states.items()}

    def row(self) -> dict:
        d = {f"p_pp_{k}": v for k, v in self.p_pp.items()}
        return {"S": self.S, **d, "p_A_plus": self.p_a_plus, "p_B_plus": self.p_b_plus}


def ch_statistic(settings: TimeSettings, mode: str = "ideal", params: NbsParams | None = None,
                 theta: float = DEFAULT_THETA, omega: float | None = None,
                 N: int | None = None, keep_states: bool = True) -> ChReport:
    """CH combination [P++(t_a,t_b) - P++(t_a,t'_b) + P++(t'_a,t_b) + P++(t'_a,t'_b)]
    divided by [P+^A(t'_a) + P+^B(t_b)]."""
    omega_used = None
    if mode == "hamiltonian":
        if params is None:
            raise DomainError("hamiltonian mode needs NbsParams")
        omega_used = fitted_omega(params) if omega is None else omega
        N = params.N
    elif N is None:
        N = params.N if params is not None else 1
    start = prepare_two_noon(N, theta)
    p_pp, states = {}, {}
    for label, (ta, tb) in zip(PAIR_LABELS, settings.pairs()):
        s = apply_local_nbs(start, ta, tb, mode, params, omega)
        p_pp[label] = s.p_plus_plus()
        states[label] = s
    marg = states["tpt"]
    pa, pb = marg.p_plus_a(), marg.p_plus_b()
    denom = pa + pb
    if not denom > 0:
        raise DomainError("CH denominator P+^A + P+^B vanishes")
    S = (p_pp["tt"] - p_pp["ttp"] + p_pp["tpt"] + p_pp["tptp"]) / denom
    return ChReport(settings, p_pp, pa, pb, S, mode, theta, omega_used,
                    states if keep_states else {})


def ideal_ch_closed_form(phi):
    """(3 sin^2 phi - sin^2 3phi)/2 for settings (0, 2phi, phi, 3phi)."""
    phi = np.asarray(phi, dtype=float)
    return (3.0 * np.sin(phi) ** 2 - np.sin(3.0 * phi) ** 2) / 2.0


def _ch_point(args):
    phi, mode, params, theta, omega, N = args
    return ch_statistic(TimeSettings.from_phi(phi), mode, params, theta, omega, N,
                        keep_states=False)


@dataclass(frozen=True)
class ChSweep:
    phi: np.ndarray
    reports: list
    omega: float | None

    @property
    def S(self) -> np.ndarray:
        return np.array([r.S for r in self.reports])

    def peak(self) -> tuple[float, float]:
        i = int(np.argmax(self.S))
        return float(self.phi[i]), float(self.S[i])

    def violation_intervals(self) -> list:
        """Contiguous phi ranges (grid endpoints) where S > 1."""
        above = self.S > 1.0
        out, start = [], None
        for i, flag in enumerate(above):
            if flag and start is None:
                start = i
            if not flag and start is not None:
                out.append((float(self.phi[start]), float(self.phi[i - 1])))
                start = None
        if start is not None:
            out.append((float(self.phi[start]), float(self.phi[-1])))
        return out


def ch_sweep(phis, mode: str = "ideal", params: NbsParams | None = None,
             theta: float = DEFAULT_THETA, workers: int = 1) -> ChSweep:
    phis = np.asarray(phis, dtype=float)
    omega = fitted_omega(params) if mode == "hamiltonian" else None
    N = params.N if params is not None else 1
    items = [(float(p), mode, params, theta, None, N) for p in phis]
    return ChSweep(phis, map_ordered(_ch_point, items, workers), omega)


def ripple_amplitude(S, window: int = 21) -> float:
    """Largest deviation of a sampled S(phi) curve from its local cubic smoothing."""
    from scipy.signal import savgol_filter
    S = np.asarray(S, dtype=float)
    window = min(window, len(S) - (1 - len(S) % 2))
    if window < 5:
        return 0.0
    return float(np.abs(S - savgol_filter(S, window, 3)).max())


@dataclass(frozen=True)
class ChMaximum:
    phi_max: float
    S_max: float
    phi_pi_over_16: float
    S_at_pi_over_16: float


def find_ch_maximum(grid_points: int = 721, phi_max: float = math.pi / 2) -> ChMaximum:
    """Maximize the ideal-model S over the (0, 2phi, phi, 3phi) family.

    A dense grid locates the basin; a bounded scalar search refines it.
    """
    phis = np.linspace(0.0, phi_max, grid_points)
    S = ideal_ch_closed_form(phis)
    i = int(np.argmax(S))
    lo, hi = phis[max(i - 1, 0)], phis[min(i + 1, grid_points - 1)]
    res = minimize_scalar(lambda p: -float(ideal_ch_closed_form(p)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    return ChMaximum(float(res.x), float(-res.fun), PHI_PI_OVER_16,
                     float(ideal_ch_closed_form(PHI_PI_OVER_16)))


def ideal_correlation(t_a: float, t_b: float, branch: int = -1) -> float:
    """Spin-product expectation cos 2(t_a + branch * t_b) for ideal beam splitters."""
    return math.cos(2.0 * (t_a + branch * t_b))


def ideal_chsh(settings: TimeSettings, branch: int = -1) -> float:
    """B = E(t_a,t_b) - E(t_a,t'_b) + E(t'_a,t'_b) + E(t'_a,t_b)."""
    if branch not in (-1, 1):
        raise DomainError("branch must be +1 or -1")
    ta, tap, tb, tbp = settings.as_tuple()
    E = lambda x, y: ideal_correlation(x, y, branch)
    return E(ta, tb) - E(ta, tbp) + E(tap, tbp) + E(tap, tb)
