"""Spin-1/2 Dicke states and their one- and two-site reduced quantities.

Conventions: spin up is local index 0, and ``|n>`` is the normalized
symmetrization of ``n`` up spins and ``N - n`` down spins. A one-body operator
``A`` is a 2x2 array with ``A[0, 0] = A_upup``, ``A[0, 1] = A_updown`` and so
on. Matrix elements are the site-averaged ones,

    <m|A|n>       = (1/N)       <m| sum_j A_j |n>
    <m|B (x) C|n> = 1/(N(N-1))  <m| sum_{i != j} B_i C_j |n>,

which for symmetric states equal the site-(1) and sites-(1,2) values.

Closed forms come from the two-mode (Schwinger boson) picture: on the
symmetric subspace ``sum_j |a><b|_j = a_a^dag a_b`` and the off-diagonal pair
sum is the normal-ordered product ``a_a^dag a_c^dag a_b a_e``.
"""

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.linalg

from exkit import _kernels
from exkit.hermitian_core import trace_distance

UP, DOWN = 0, 1
DENSE_MAX_N = 12


@dataclass(frozen=True)
class DickeVector:
    """Coefficients ``alpha_0..alpha_N`` of ``Psi = sum alpha_n |n>``."""

    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.N + 1,):
            raise ValueError(f"need {self.N + 1} coefficients, got shape {c.shape}")
        norm = np.vdot(c, c).real
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"coefficients are not normalized (sum |a|^2 = {norm:.12g})")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, N, n):
        _check_n(N, n)
        c = np.zeros(N + 1, dtype=complex)
        c[n] = 1
        return cls(N, c)

    @classmethod
    def normalized(cls, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        return cls(c.size - 1, c / np.linalg.norm(c))

    @classmethod
    def random(cls, N, seed=None):
        rng = np.random.default_rng(seed)
        return cls.normalized(rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1))


def _check_n(N, n):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if int(n) != n or not 0 <= n <= N:
        raise ValueError(f"n must lie in 0..{N}, got {n}")


def dicke_state_dense(N, n):
    """``|n>`` as a vector of length ``2**N`` (site 0 slowest, up = bit value 0)."""
    _check_n(N, n)
    if N > DENSE_MAX_N:
        raise ValueError(f"dense Dicke states are capped at N={DENSE_MAX_N}")
    idx = np.arange(2**N)
    downs = np.array([bin(i).count("1") for i in idx])
    v = np.where(downs == N - n, 1.0, 0.0)
    return v / np.sqrt(comb(N, n))


# ---------------------------------------------------------------------------
# two-mode Fock algebra


def _apply(ops, m_up, N):
    """Apply a word of (kind, mode) ops, rightmost first, to Fock state ``|m_up, N - m_up>``.

    Returns ``(amplitude, new_up)`` or ``(0, None)``.
    """
    occ = [m_up, N - m_up]
    amp = 1.0
    for kind, mode in reversed(ops):
        if kind == "a":
            if occ[mode] == 0:
                return 0.0, None
            amp *= np.sqrt(occ[mode])
            occ[mode] -= 1
        else:
            occ[mode] += 1
            amp *= np.sqrt(occ[mode])
    return amp, occ[UP]


def single_site_element(N, m, n, A):
    """``<m|A|n>`` for a one-body operator averaged over sites."""
    _check_n(N, m)
    _check_n(N, n)
    if abs(m - n) > 1:
        return 0.0j
    A = np.asarray(A, dtype=complex)
    total = 0.0j
    for a in (UP, DOWN):
        for b in (UP, DOWN):
            amp, out = _apply([("c", a), ("a", b)], n, N)
            if out == m:
                total += A[a, b] * amp
    return total / N


def two_site_element(N, m, n, B, C):
    """``<m|B (x) C|n>`` for two-site product operators averaged over ordered pairs."""
    if N < 2:
        raise ValueError("two-site elements need N >= 2")
    _check_n(N, m)
    _check_n(N, n)
    if abs(m - n) > 2:
        return 0.0j
    B = np.asarray(B, dtype=complex)
    C = np.asarray(C, dtype=complex)
    total = 0.0j
    for a in (UP, DOWN):
        for b in (UP, DOWN):
            if B[a, b] == 0:
                continue
            for c in (UP, DOWN):
                for e in (UP, DOWN):
                    if C[c, e] == 0:
                        continue
                    amp, out = _apply([("c", a), ("c", c), ("a", b), ("a", e)], n, N)
                    if out == m:
                        total += B[a, b] * C[c, e] * amp
    return total / (N * (N - 1))


def generating_matrix_element(N, m, n, s, A, use_numba=None):
    """``<m| (x)_N exp(sA) |n>`` as a finite multinomial sum.

    The sum runs over the number ``x`` of sites that are up in both bra and
    ket, for ``max(0, m+n-N) <= x <= min(m, n)``; outside that range the
    multinomial coefficient vanishes.
    """
    _check_n(N, m)
    _check_n(N, n)
    G = scipy.linalg.expm(s * np.asarray(A, dtype=complex))
    return _kernels.generating_sum(N, m, n, G, use_numba=use_numba)


# ---------------------------------------------------------------------------
# reference closed forms, kept unmodified for comparison (--paper-formula)


def paper_single_site_element(N, m, n, A):
    """Four-term one-body formula in its reference form; see :func:`single_site_element`.

    In this form the off-diagonal Kronecker deltas are attached to the wrong
    matrix entries (``A_updown`` needs ``m = n + 1``) and the lowering term
    carries ``sqrt((m-1)(N-m))`` instead of ``sqrt((m+1)(N-m))``.
    """
    A = np.asarray(A, dtype=complex)
    d = lambda x, y: 1.0 if x == y else 0.0  # noqa: E731
    val = (
        m * d(m, n) * A[0, 0]
        + np.sqrt(max(m * (N - m + 1), 0)) * d(m, n - 1) * A[0, 1]
        + np.sqrt(max((m - 1) * (N - m), 0)) * d(m - 1, n) * A[1, 0]
        + (N - m) * d(m, n) * A[1, 1]
    )
    return val / N


def paper_two_site_element(N, m, n, B, C):
    """Ten-term two-body formula in its reference form; see :func:`two_site_element`."""
    B = np.asarray(B, dtype=complex)
    C = np.asarray(C, dtype=complex)
    d = lambda x, y: 1.0 if x == y else 0.0  # noqa: E731
    r = lambda x: np.sqrt(max(x, 0))  # noqa: E731
    uu, ud, du, dd = (0, 0), (0, 1), (1, 0), (1, 1)
    val = (
        m * (m - 1) * B[uu] * C[uu] * d(m, n)
        + m * r(m * (N - m + 1)) * (B[uu] * C[ud] + B[ud] * C[uu]) * d(m - 1, n)
        + m * r((N - m) * (m + 1)) * (B[uu] * C[du] + B[du] * C[uu]) * d(m + 1, n)
        + m * (N - m) * (B[uu] * C[dd] + B[dd] * C[uu]) * d(m, n)
        + r(m * (m - 1) * (N - m + 2) * (N - m + 1)) * B[ud] * C[ud] * d(m - 2, n)
        + m * (N - m) * (B[ud] * C[du] + B[du] * C[ud]) * d(m, n)
        + (N - m) * r(m * (N - m + 1)) * (B[ud] * C[dd] + B[dd] * C[ud]) * d(m - 1, n)
        + r((m + 2) * (m + 1) * (N - m) * (N - m - 1)) * B[du] * C[du] * d(m + 2, n)
        + (N - m - 1) * r((m + 1) * (N - m)) * (B[du] * C[dd] + B[dd] * C[du]) * d(m + 1, n)
        + (N - m) * (N - m - 1) * B[dd] * C[dd] * d(m, n)
    )
    return val / (N * (N - 1))


# ---------------------------------------------------------------------------
# marginals


def _unit(a, b):
    E = np.zeros((2, 2))
    E[a, b] = 1.0
    return E


def two_site_marginal(psi, element=None):
    """Two-site reduced density matrix of ``Psi = sum alpha_n |n>`` (4 x 4).

    ``element(N, m, n, B, C)`` defaults to :func:`two_site_element`.
    """
    element = two_site_element if element is None else element
    if not isinstance(psi, DickeVector):
        psi = DickeVector.normalized(psi)
    N, alpha = psi.N, psi.coeffs
    if N < 2:
        raise ValueError("two-site marginal needs N >= 2")
    rho = np.zeros((4, 4), dtype=complex)
    # rho[(a,b),(c,e)] = <Psi| |c><a| (x) |e><b| |Psi>
    for a in (UP, DOWN):
        for b in (UP, DOWN):
            for c in (UP, DOWN):
                for e in (UP, DOWN):
                    Ba, Cb = _unit(c, a), _unit(e, b)
                    val = 0.0j
                    for n in range(N + 1):
                        m = n + (a - c) + (b - e)  # up count after |c><a| (x) |e><b|
                        if 0 <= m <= N and alpha[n] != 0 and alpha[m] != 0:
                            val += np.conj(alpha[m]) * alpha[n] * element(N, m, n, Ba, Cb)
                    rho[2 * a + b, 2 * c + e] = val
    return (rho + rho.conj().T) / 2


def dense_two_site_marginal(psi):
    """Two-site marginal by building ``Psi`` on ``2**N`` amplitudes and tracing out."""
    if not isinstance(psi, DickeVector):
        psi = DickeVector.normalized(psi)
    N = psi.N
    v = sum(a * dicke_state_dense(N, n) for n, a in enumerate(psi.coeffs) if a != 0)
    T = v.reshape(4, 2 ** (N - 2))
    return T @ T.conj().T


def one_site_marginal(psi):
    """One-site reduced density matrix (2 x 2)."""
    if not isinstance(psi, DickeVector):
        psi = DickeVector.normalized(psi)
    N, alpha = psi.N, psi.coeffs
    rho = np.zeros((2, 2), dtype=complex)
    for a in (UP, DOWN):
        for c in (UP, DOWN):
            E = _unit(c, a)
            rho[a, c] = sum(
                np.conj(alpha[m]) * alpha[n] * single_site_element(N, m, n, E)
                for n in range(N + 1)
                for m in (n - 1, n, n + 1)
                if 0 <= m <= N
            )
    return (rho + rho.conj().T) / 2


def asymptotic_mixture(N, n):
    """``(P_1 + P_-1 + P_i + P_-i)/4`` with ``P_eps`` the projector on ``phi_eps (x) phi_eps``.

    ``phi_eps = (sqrt(n) |up> + eps sqrt(N - n) |down>) / sqrt(N)``.
    """
    _check_n(N, n)
    rho = np.zeros((4, 4), dtype=complex)
    for eps in (1, -1, 1j, -1j):
        phi = np.array([np.sqrt(n), eps * np.sqrt(N - n)]) / np.sqrt(N)
        v = np.kron(phi, phi)
        rho += np.outer(v, v.conj()) / 4
    return rho


def separability_gap(N, n):
    """``tr| tr_{N-2} |n><n| - asymptotic_mixture(N, n) |``."""
    return trace_distance(two_site_marginal(DickeVector.basis(N, n)), asymptotic_mixture(N, n))


def gap_sweep(Ns, fraction=0.5):
    """Gaps at ``n = round(fraction * N)`` and the fitted log-log slope."""
    Ns = [int(N) for N in Ns]
    gaps = np.array([separability_gap(N, int(round(fraction * N))) for N in Ns])
    slope = float(np.polyfit(np.log(Ns), np.log(gaps), 1)[0])
    return gaps, slope
