"""Independent reference computations used to derive frozen test values.

Nothing here imports the code under test.  The Josephson oracle builds the
Hamiltonian from ladder operators on the full two-mode product space,
diagonalizes it with a general (non-symmetric) extended-precision solver and
spot-checks that against an extended-precision matrix exponential.
"""
import math

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import eval_hermite


def lower(ket, mode):
    """Apply the annihilation operator of ``mode`` to {occupations: amplitude}."""
    out = {}
    for occ, amp in ket.items():
        n = occ[mode]
        if n == 0:
            continue
        new = list(occ)
        new[mode] -= 1
        out[tuple(new)] = out.get(tuple(new), 0) + amp * mpmath.sqrt(n)
    return out


def raise_(ket, mode):
    out = {}
    for occ, amp in ket.items():
        new = list(occ)
        new[mode] += 1
        out[tuple(new)] = out.get(tuple(new), 0) + amp * mpmath.sqrt(new[mode])
    return out


def apply_word(word, ket):
    """Apply a product of ladder operators, rightmost first; word items are ('+'|'-', mode)."""
    for kind, mode in reversed(word):
        ket = raise_(ket, mode) if kind == "+" else lower(ket, mode)
    return ket


def josephson_sector(kappa, g, total):
    """Sector block of kappa(a^+ a2 + a a2^+) + g a^+2 a^2 + g a2^+2 a2^2 built from operators.

    Returned in the basis |n, total-n>, n = 0..total.
    """
    terms = [
        (mpmath.mpf(kappa), [("+", 0), ("-", 1)]),
        (mpmath.mpf(kappa), [("-", 0), ("+", 1)]),
        (mpmath.mpf(g), [("+", 0), ("+", 0), ("-", 0), ("-", 0)]),
        (mpmath.mpf(g), [("+", 1), ("+", 1), ("-", 1), ("-", 1)]),
    ]
    dim = total + 1
    out = mpmath.zeros(dim, dim)
    for col in range(dim):
        ket = {(col, total - col): mpmath.mpf(1)}
        for coeff, word in terms:
            for (n, m), amp in apply_word(word, ket).items():
                assert n + m == total
                out[n, col] += coeff * amp
    return out


def propagator(H, t, dps=None):
    """exp(-i H t) as a complex numpy array, computed at enough precision for |H t|."""
    t = mpmath.mpf(float(t))
    norm = max(abs(float(H[i, i])) for i in range(H.rows)) + 1.0
    digits = int(math.log10(norm * abs(float(t)) + 1.0))
    with mpmath.workdps(dps or 40 + 2 * digits):
        U = mpmath.expm(-1j * H * t)
        return np.array([[complex(U[i, j]) for j in range(H.cols)] for i in range(H.rows)])


class SpectralPropagator:
    """exp(-i H t) from a general-purpose mpmath eigensolver run at high precision.

    Phases lambda * t are formed in extended precision from the exact binary
    value of t, so very long times keep their fast components meaningful.
    """

    def __init__(self, H, dps=90):
        self.dps = dps
        with mpmath.workdps(dps):
            w, vr = mpmath.eig(H)
            self.w = [mpmath.re(x) for x in w]
            self.v = []
            for j in range(H.rows):
                col = [mpmath.re(vr[i, j]) for i in range(H.rows)]
                nrm = mpmath.sqrt(sum(c * c for c in col))
                self.v.append([c / nrm for c in col])

    def __call__(self, t):
        dim = len(self.w)
        with mpmath.workdps(self.dps):
            t = mpmath.mpf(float(t))
            ph = [mpmath.expj(-x * t) for x in self.w]
            out = np.empty((dim, dim), dtype=complex)
            for i in range(dim):
                for j in range(dim):
                    out[i, j] = complex(mpmath.fsum(self.v[k][i] * self.v[k][j] * ph[k]
                                                    for k in range(dim)))
        return out


def edge_probabilities(kappa, g, N, times):
    with mpmath.workdps(90):
        H = josephson_sector(kappa, g, N)
    U = SpectralPropagator(H)
    p_n, p_0 = [], []
    for t in times:
        u = U(t)
        p_n.append(abs(u[N, N]) ** 2)
        p_0.append(abs(u[0, N]) ** 2)
    return np.array(p_n), np.array(p_0)


def two_noon_ch(kappa, g, N, settings, omega, theta=-math.pi / 2):
    """P_++ for the four setting pairs and the two marginals from the (N,N) block alone.

    Blocks with 2N bosons at one site cannot give "+" at both sites, so only
    the (N,N) block matters; its amplitudes are (|N,0>|0,N> - i e^{i theta}|0,N>|N,0>)/2.
    """
    with mpmath.workdps(90):
        H = josephson_sector(kappa, g, N)
    prop = SpectralPropagator(H)
    c0 = np.zeros((N + 1, N + 1), dtype=complex)
    c0[N, 0] = 0.5
    c0[0, N] = -0.5j * np.exp(1j * theta)
    cache = {}

    def U(t):
        if t not in cache:
            cache[t] = prop(t / omega)
        return cache[t]

    ta, tap, tb, tbp = settings
    out = {}
    for label, (x, y) in zip(("tt", "ttp", "tpt", "tptp"),
                             ((ta, tb), (ta, tbp), (tap, tb), (tap, tbp))):
        out[label] = U(x) @ c0 @ U(y).T
    return out


def halfline_integral(n, m):
    """Direct adaptive quadrature of the half-line overlap of two oscillator eigenfunctions."""
    def psi(k, x):
        return (eval_hermite(k, x) * math.exp(-x * x / 2)
                / math.sqrt(2.0 ** k * math.factorial(k) * math.sqrt(math.pi)))
    val, _ = integrate.quad(lambda x: psi(n, x) * psi(m, x), 0.0, np.inf, limit=400,
                            epsabs=1e-13, epsrel=1e-13)
    return val


def coherent_overlap(alpha, beta):
    """<alpha|beta> for coherent states."""
    return complex(np.exp(-(abs(alpha) ** 2 + abs(beta) ** 2) / 2 + np.conj(alpha) * beta))


def kerr_coherent_components(t, period=6):
    """Coefficients of exp(-i n^2 t)|a> on |e^{2 pi i k/period} a> via a discrete Fourier sum.

    Valid when exp(-i n^2 t) is periodic in n with the given period.
    """
    f = [np.exp(-1j * t * n * n) for n in range(period)]
    return {k: sum(f[n] * np.exp(-2j * np.pi * k * n / period) for n in range(period)) / period
            for k in range(period)}
