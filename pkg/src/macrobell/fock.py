"""Single-mode Fock-space and quadrature primitives.

Quadratures follow X = (a + a^dagger)/sqrt(2), so a coherent state with
real amplitude alpha has <X> = sqrt(2) * alpha and Var(X) = 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammainc, gammaln

from .errors import DomainError, TruncationError

TAIL_TOLERANCE = 1e-12
# exp(-x^2/2) underflows double precision just beyond |x| = 37.5
MAX_HALF_WIDTH = 36.0


def default_n_max(alpha: float) -> int:
    """Truncation giving a Poisson tail far below 1e-12 for |alpha| <= 10."""
    a = abs(alpha)
    return int(math.ceil(a * a + 8.0 * a + 20.0))


def poisson_tail(mean: float, n_max: int) -> float:
    """Probability that a Poisson variable with ``mean`` exceeds ``n_max``."""
    if mean == 0.0:
        return 0.0
    return float(gammainc(n_max + 1, mean))


def required_n_max(alpha: complex, tol: float = TAIL_TOLERANCE) -> int:
    mean = abs(alpha) ** 2
    n = max(0, int(mean))
    while poisson_tail(mean, n) > tol:
        n += 1
    return n


@dataclass(frozen=True)
class FockVector:
    """Amplitudes over |0>, ..., |n_max> plus the probability cut off above n_max."""

    amplitudes: np.ndarray
    tail: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.amplitudes) - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockVector":
        return FockVector(self.amplitudes / self.norm, self.tail)


def coherent_amplitudes(alpha: complex, n_max: int | None = None,
                        tol: float = TAIL_TOLERANCE) -> FockVector:
    """Number-basis expansion of the coherent state |alpha>.

    Raises TruncationError when the discarded Poisson tail exceeds ``tol``;
    the error carries the smallest cutoff that would satisfy it.
    """
    if n_max is None:
        n_max = default_n_max(abs(alpha))
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    r = abs(alpha)
    tail = poisson_tail(r * r, n_max)
    if tail > tol:
        need = required_n_max(alpha, tol)
        raise TruncationError(
            f"|alpha|={r:g} with n_max={n_max} discards {tail:.3e} > {tol:.1e}; "
            f"use n_max >= {need}", tail, need)
    n = np.arange(n_max + 1)
    if r == 0.0:
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[0] = 1.0
        return FockVector(amps, 0.0)
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return FockVector(amps.astype(complex), tail)


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Oscillator eigenfunctions psi_n(x), n = 0..n_max, shape (n_max+1, len(x)).

    Three-term recurrence on normalized functions; it is stable for all n
    and never forms the Hermite polynomials themselves.
    """
    x = np.asarray(x, dtype=float)
    psi = np.empty((n_max + 1,) + x.shape)
    psi[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = (x * math.sqrt(2.0 / (n + 1)) * psi[n]
                      - math.sqrt(n / (n + 1)) * psi[n - 1])
    return psi


def symmetric_gauss_legendre(half_width: float, n_nodes: int = 2000,
                             order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [-L, L], mirrored exactly about zero.

    Panels tile [0, L] and are reflected, so every node x has its partner
    -x bit-for-bit and no node sits at the origin.
    """
    panels_half = max(1, n_nodes // (2 * order))
    xg, wg = leggauss(order)
    edges = np.linspace(0.0, half_width, panels_half + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    xs = (0.5 * (hi - lo) * xg + 0.5 * (hi + lo)).ravel()
    ws = (0.5 * (hi - lo) * wg).ravel()
    order_idx = np.argsort(xs)
    xs, ws = xs[order_idx], ws[order_idx]
    return np.concatenate([-xs[::-1], xs]), np.concatenate([ws[::-1], ws])


@dataclass(frozen=True)
class QuadratureTable:
    x: np.ndarray
    weights: np.ndarray
    psi: np.ndarray
    half_width: float
    orthonormality_error: float = field(default=0.0)

    @property
    def n_max(self) -> int:
        return self.psi.shape[0] - 1

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.x, -self.x[::-1])
                    and np.array_equal(self.weights, self.weights[::-1]))

    def density(self, amplitudes) -> np.ndarray:
        """Quadrature density |sum_n c_n psi_n(x)|^2 at the table nodes."""
        c = np.asarray(amplitudes)
        return np.abs(c @ self.psi[: len(c)]) ** 2


def hermite_table(n_max: int, half_width: float | None = None, n_nodes: int = 2000,
                  alpha_max: float = 0.0, order: int = 20,
                  check: bool = True) -> QuadratureTable:
    """Tabulate psi_n on a symmetric composite Gauss-Legendre grid.

    By default the half-width covers both the states of interest
    (sqrt(2)*alpha_max + 6) and the classical turning point of psi_{n_max}.
    """
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    need = math.sqrt(2.0) * alpha_max + 6.0
    if half_width is None:
        half_width = max(need, math.sqrt(2.0 * n_max + 1.0) + 8.0)
    if half_width < need:
        raise DomainError(
            f"grid half-width {half_width:g} < sqrt(2)*alpha_max + 6 = {need:g}")
    if half_width > MAX_HALF_WIDTH:
        raise DomainError(f"grid half-width {half_width:g} exceeds {MAX_HALF_WIDTH}")
    x, w = symmetric_gauss_legendre(half_width, n_nodes, order)
    psi = hermite_functions(n_max, x)
    err = 0.0
    if check:
        gram = (psi * w) @ psi.T
        err = float(np.abs(gram - np.eye(n_max + 1)).max())
        if err > 1e-8:
            raise DomainError(
                f"grid too coarse or narrow for n_max={n_max}: orthonormality "
                f"error {err:.2e}")
    return QuadratureTable(x, w, psi, float(half_width), err)


@dataclass(frozen=True)
class HalfLineOverlap:
    """I+_{nm} = integral over x > 0 of psi_n psi_m."""

    iplus: np.ndarray

    @property
    def n_max(self) -> int:
        return self.iplus.shape[0] - 1

    @property
    def sign_matrix(self) -> np.ndarray:
        return 2.0 * self.iplus - np.eye(self.iplus.shape[0])

    def projectors(self, n_max: int) -> tuple[np.ndarray, np.ndarray]:
        """Projectors onto X > 0 and X <= 0 restricted to |0>..|n_max>."""
        if n_max > self.n_max:
            raise DomainError(
                f"overlap built for n_max={self.n_max}, state needs {n_max}")
        p = self.iplus[: n_max + 1, : n_max + 1]
        return p, np.eye(n_max + 1) - p


def halfline_overlap(table: QuadratureTable) -> HalfLineOverlap:
    if not table.is_symmetric:
        raise DomainError("half-line overlaps need a grid mirrored about x = 0")
    pos = table.x > 0
    a = table.psi[:, pos]
    iplus = (a * table.weights[pos]) @ a.T
    return HalfLineOverlap(0.5 * (iplus + iplus.T))


def overlap_for(n_max: int, alpha_max: float = 0.0, n_nodes: int = 2000) -> HalfLineOverlap:
    """Half-line overlap for states up to ``n_max`` with default grid choices."""
    return halfline_overlap(hermite_table(n_max, alpha_max=alpha_max, n_nodes=n_nodes))
