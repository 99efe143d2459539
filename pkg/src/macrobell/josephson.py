"""Two-mode Josephson dynamics on fixed-total-number sectors.

H = kappa (a^dag a2 + a a2^dag) + g a^dag2 a^2 + g a2^dag2 a2^2, with hbar = 1.

In the nonlinear-beam-splitter regime |N,0> tunnels to |0,N> through a
doublet whose splitting shrinks roughly like (kappa/g)^N.  For N >= 10 the
splitting drops below the float64 resolution of the spectrum (eps * ||H||),
so sectors are diagonalized in extended precision and propagation phases
exp(-i lambda t) are reduced modulo 2 pi in that precision before being
handed to numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import DomainError, NoOscillationError

WORKING_DPS = 50
FRAC_BITS = 192
with mpmath.workdps(120):
    _TWO_PI_FIXED = int(mpmath.nint(mpmath.ldexp(2 * mpmath.pi, FRAC_BITS)))


@dataclass(frozen=True)
class NbsParams:
    N: int
    kappa: float
    g: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be an integer >= 1, got {self.N}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa}")
        if not self.g >= 0:
            raise DomainError(f"g must be >= 0, got {self.g}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "g", float(self.g))


def sector_matrix(kappa: float, g: float, total: int) -> np.ndarray:
    """Float64 tridiagonal matrix; basis index n = bosons in the first mode."""
    n = np.arange(total + 1)
    diag = g * (n * (n - 1) + (total - n) * (total - n - 1))
    off = kappa * np.sqrt(n[1:] * (total - n[1:] + 1.0))
    return np.diag(diag.astype(float)) + np.diag(off, 1) + np.diag(off, -1)


def _fixed_point_phases(lam_fixed: list, p: int, q: int) -> np.ndarray:
    """exp(-i lambda x) for x = p/q, reducing lambda x modulo 2 pi in integers."""
    modulus = _TWO_PI_FIXED * q
    scale = q << FRAC_BITS
    red = [(lam * p) % modulus / scale for lam in lam_fixed]
    return np.exp(-1j * np.array(red))


class ScaledSpectrum:
    """Eigendecomposition of the sector Hamiltonian in units of kappa.

    Depends on the ratio u = g / kappa alone, so every (kappa, g) pair with
    the same float ratio shares one spectrum bit for bit.
    """

    def __init__(self, ratio: float, total: int, dps: int = WORKING_DPS):
        self.ratio = float(ratio)
        self.total = int(total)
        self.dps = dps
        dim = self.total + 1
        with mpmath.workdps(dps):
            h = mpmath.zeros(dim, dim)
            u = mpmath.mpf(self.ratio)
            for n in range(dim):
                h[n, n] = u * (n * (n - 1) + (total - n) * (total - n - 1))
                if n:
                    h[n, n - 1] = h[n - 1, n] = mpmath.sqrt(n * (total - n + 1))
            w, v = mpmath.eigsy(h)
            self.lam_mp = [w[i] for i in range(dim)]
            self.lam_fixed = [int(mpmath.nint(mpmath.ldexp(x, FRAC_BITS))) for x in self.lam_mp]
            self.eigenvalues = np.array([float(x) for x in self.lam_mp])
            self.eigenvectors = np.array(
                [[float(v[i, j]) for j in range(dim)] for i in range(dim)])
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    def phases(self, s: float) -> np.ndarray:
        """exp(-i lambda_k s) for dimensionless time s = kappa t."""
        p, q = float(s).as_integer_ratio()
        return _fixed_point_phases(self.lam_fixed, p, q)


@lru_cache(maxsize=256)
def _scaled_spectrum(ratio: float, total: int, dps: int) -> ScaledSpectrum:
    return ScaledSpectrum(ratio, total, dps)


class SectorHamiltonian:
    """Josephson Hamiltonian restricted to ``total`` bosons, with its spectrum.

    The spectrum is computed in extended precision for the ratio g / kappa
    and rescaled by kappa.  Propagation phases exp(-i lambda t) are reduced
    modulo 2 pi exactly: eigenvalues are fixed-point integers and kappa * t
    is formed as an exact rational, so identical inputs always give
    identical phases.
    """

    def __init__(self, kappa: float, g: float, total: int, dps: int = WORKING_DPS):
        if total < 0:
            raise DomainError(f"sector total must be >= 0, got {total}")
        self.kappa = float(kappa)
        self.g = float(g)
        self.total = int(total)
        self.dps = dps
        self.matrix = sector_matrix(self.kappa, self.g, self.total)
        self.matrix.setflags(write=False)
        self.scaled = _scaled_spectrum(self.g / self.kappa, self.total, dps)
        self.eigenvalues = self.kappa * self.scaled.eigenvalues
        self.eigenvalues.setflags(write=False)
        self.eigenvectors = self.scaled.eigenvectors
        self._kappa_ratio = self.kappa.as_integer_ratio()

    @property
    def dim(self) -> int:
        return self.total + 1

    def __repr__(self):
        return f"SectorHamiltonian(kappa={self.kappa}, g={self.g}, total={self.total})"

    def phases(self, t: float) -> np.ndarray:
        """exp(-i lambda_k t) at physical time t."""
        pt, qt = float(t).as_integer_ratio()
        pk, qk = self._kappa_ratio
        return _fixed_point_phases(self.scaled.lam_fixed, pk * pt, qk * qt)

    def propagator(self, t: float) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.phases(t)) @ v.T

    def expectation(self, psi) -> float:
        psi = np.asarray(psi)
        return float(np.real(np.vdot(psi, self.matrix @ psi)))


@lru_cache(maxsize=256)
def _cached_sector(kappa: float, g: float, total: int, dps: int) -> SectorHamiltonian:
    return SectorHamiltonian(kappa, g, total, dps)


def build_sector_hamiltonian(params: NbsParams, total: int,
                             dps: int = WORKING_DPS) -> SectorHamiltonian:
    if total < 0:
        raise DomainError(f"sector total must be >= 0, got {total}")
    return _cached_sector(params.kappa, params.g, int(total), dps)


def evolve(H: SectorHamiltonian, psi0, t: float) -> np.ndarray:
    """psi(t) = V exp(-i Lambda t) V^T psi0 for a normalized sector vector."""
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (H.dim,):
        raise DomainError(f"state has shape {psi0.shape}, sector needs ({H.dim},)")
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-10:
        raise DomainError(f"input state not normalized (norm={norm:.12f})")
    v = H.eigenvectors
    return v @ (H.phases(t) * (v.T @ psi0))


def _edge_amplitudes(spectrum, phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """<N,0|U|N,0> and <0,N|U|N,0> for phase rows of shape (..., dim)."""
    v = spectrum.eigenvectors
    top = v[spectrum.total]
    return phases @ (top * top), phases @ (v[0] * top)


def edge_probabilities(spectrum, times) -> tuple[np.ndarray, np.ndarray]:
    """p_N and p_0 starting from |N,0>.

    ``spectrum`` is a SectorHamiltonian (physical times) or a ScaledSpectrum
    (times in units of 1/kappa).
    """
    t = np.asarray(times, dtype=float)
    ph = np.array([spectrum.phases(ti) for ti in t]).reshape(len(t), spectrum.total + 1)
    a_n, a_0 = _edge_amplitudes(spectrum, ph)
    return np.abs(a_n) ** 2, np.abs(a_0) ** 2


def p_stay(spectrum, t: float) -> float:
    a_n, _ = _edge_amplitudes(spectrum, spectrum.phases(t))
    return float(abs(a_n) ** 2)


@dataclass(frozen=True)
class FrequencyEstimate:
    """Tunnelling frequency of |N,0> <-> |0,N>.

    ``omega_formula`` is the printed closed form evaluated with hbar = 1 and
    is kept as a reference only; ``omega_fitted`` is defined by p_N(t) first
    reaching 1/2 at t = pi / (4 omega); ``omega_spectral`` is half the
    splitting of the two eigenstates carrying most of |N,0>.
    """

    omega_formula: float
    omega_fitted: float
    omega_spectral: float
    half_time: float


def omega_formula(params: NbsParams) -> float:
    N, k, g = params.N, params.kappa, params.g
    if g == 0.0:
        return math.inf if N > 1 else 2.0 * k
    log_w = math.log(2.0 * g * N) - math.lgamma(N) + N * math.log(k / g)
    return math.exp(log_w)


def _doublet_half_splitting(spectrum: ScaledSpectrum) -> float:
    weights = spectrum.eigenvectors[spectrum.total] ** 2
    i, j = np.argsort(weights)[-2:]
    with mpmath.workdps(spectrum.dps):
        split = abs(spectrum.lam_mp[i] - spectrum.lam_mp[j])
        scale = max(abs(spectrum.eigenvalues).max(), 1.0)
        resolution = mpmath.mpf(10) ** (10 - spectrum.dps) * scale
        if split <= resolution:
            raise NoOscillationError(
                f"tunnelling splitting {float(split):.3e} (units of kappa) is below the "
                f"working precision of the sector spectrum (g/kappa={spectrum.ratio}, "
                f"total={spectrum.total})")
        return float(split / 2)


def omega_spectral(H: SectorHamiltonian) -> float:
    return H.kappa * _doublet_half_splitting(H.scaled)


def fit_half_time(spectrum, times, p_n, degree: int = 5, points: int = 129) -> float:
    """First time p_N falls to 1/2.

    The first sample below 1/2 brackets the crossing; p_N is then evaluated
    exactly on a dense grid over the surrounding sample intervals and a
    least-squares polynomial through those values is solved for 1/2.  The
    fit averages over fast small-amplitude ripple, so the result varies
    smoothly with the parameters.
    """
    times = np.asarray(times, dtype=float)
    below = np.nonzero(np.asarray(p_n) < 0.5)[0]
    if len(below) == 0 or below[0] == 0:
        raise NoOscillationError(
            "p_N never drops below 1/2 on the supplied times; the trace does "
            "not span an oscillation")
    i = below[0]
    lo, hi = times[max(i - 2, 0)], times[min(i + 1, len(times) - 1)]
    local = np.linspace(lo, hi, points)
    p_local, _ = edge_probabilities(spectrum, local)
    poly = Polynomial.fit(local, p_local - 0.5, degree)
    roots = [z.real for z in poly.roots()
             if abs(z.imag) <= 1e-9 * (hi - lo) and lo <= z.real <= hi]
    if not roots:
        # the smoothed profile misses the bracket; fall back to the exact crossing
        return brentq(lambda t: p_stay(spectrum, t) - 0.5, times[i - 1], times[i],
                      xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(min(roots))


@lru_cache(maxsize=256)
def _fitted_scaled(ratio: float, total: int, probe_points: int = 1024) -> float:
    """Half-crossing time in units of 1/kappa, from a probe spanning one spectral period."""
    spectrum = _scaled_spectrum(ratio, total, WORKING_DPS)
    s = np.linspace(0.0, math.pi / _doublet_half_splitting(spectrum), probe_points + 1)
    p_n, _ = edge_probabilities(spectrum, s)
    return fit_half_time(spectrum, s, p_n)


def scaled_frequency(params: NbsParams, trace: "NbsTrace | None" = None) -> FrequencyEstimate:
    """Report the printed, fitted and spectral tunnelling frequencies side by side.

    Without a trace the crossing comes from a probe spanning one spectral
    period; with a trace it is located on the trace's own samples.
    """
    H = build_sector_hamiltonian(params, params.N)
    w_spectral = omega_spectral(H)
    if trace is None:
        s_half = _fitted_scaled(H.scaled.ratio, params.N)
    else:
        s_half = fit_half_time(H.scaled, params.kappa * trace.times, trace.p_N)
    return FrequencyEstimate(omega_formula(params), params.kappa * math.pi / (4.0 * s_half),
                             w_spectral, s_half / params.kappa)


def fitted_omega_scaled(params: NbsParams) -> float:
    """omega_fitted / kappa; depends on g / kappa and N only."""
    return math.pi / (4.0 * _fitted_scaled(params.g / params.kappa, params.N))


def fitted_omega(params: NbsParams) -> float:
    return params.kappa * fitted_omega_scaled(params)


@dataclass(frozen=True)
class NbsTrace:
    times: np.ndarray
    scaled_times: np.ndarray
    p_N: np.ndarray
    p_0: np.ndarray
    omega_fitted: float

    @property
    def leakage(self) -> np.ndarray:
        return 1.0 - self.p_N - self.p_0

    @property
    def max_leakage(self) -> float:
        return float(self.leakage.max())


def nbs_trace(params: NbsParams, t_grid, omega: float | None = None) -> NbsTrace:
    """p_N, p_0 and leakage for |N,0> evolved over physical times ``t_grid``."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise DomainError("time grid must be a non-empty 1-D array")
    H = build_sector_hamiltonian(params, params.N)
    p_n, p_0 = edge_probabilities(H, t)
    if omega is None:
        omega = fitted_omega(params)
    return NbsTrace(t, omega * t, p_n, p_0, omega)
