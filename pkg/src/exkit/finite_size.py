"""Finite-size de Finetti bound for two-site marginals of symmetric N-site states.

If ``rho`` is the two-site marginal of a symmetric state on ``N`` sites, then

    rho' = (1 - c/N) rho + (c/N) * 2 P^s / (d (d + 1)),
    c    = N d (d + 1) / (N - 1 + d (d + 1)),

is exchangeable and ``(1/2) tr|rho - rho'| <= c/N <= d(d+1)/N``. The argument only
uses positivity of ``(sum_j B_j)^2`` in the extension, which gives the
necessary condition ``N(N-1) rho(B (x) B) + N rho(B^2 (x) I) >= 0``; that
condition is exposed separately as :func:`n_extendability_necessary`.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from exkit.definetti_maps import v_inverse
from exkit.exchange_cert import CertificateReport, _gram, certify_exchangeable
from exkit.hermitian_core import (
    PSD_TOL,
    InvalidDimensionError,
    as_density,
    as_flip_invariant,
    basis_stack,
    local_dim,
    partial_trace,
    permute_sites,
    symmetric_projector,
    trace_distance,
)


def symmetrize_sites(op, d, N):
    """Average ``U_pi op U_pi^*`` over all permutations of ``N`` sites.

    Uses the coset decomposition ``Sym_k = (1/k) sum_j T_(j k) Sym_{k-1}``, so
    the cost is ``N(N+1)/2`` site permutations instead of ``N!``.
    """
    op = np.asarray(op)
    dims = [d] * N
    out = op
    for k in range(2, N + 1):
        acc = out.copy()
        for j in range(k - 1):
            perm = list(range(N))
            perm[j], perm[k - 1] = perm[k - 1], perm[j]
            acc = acc + permute_sites(out, dims, perm)
        out = acc / k
    return out


def symmetric_marginal(rho_N, d, N):
    """Two-site marginal of an N-site operator (sites 0 and 1 kept)."""
    return partial_trace(rho_N, [d] * N, [0, 1])


def c_coefficient(N, d):
    """``N d (d+1) / (N - 1 + d (d+1))``; also accepted for ``N = 2``."""
    if int(N) != N or N < 2:
        raise InvalidDimensionError(f"N must be an integer >= 2, got {N}")
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"d must be an integer >= 2, got {d}")
    k = d * (d + 1)
    return N * k / (N - 1 + k)


def symmetric_state(d):
    """Normalized symmetric-projector state ``2 P^s / (d (d+1))``."""
    return 2 * symmetric_projector(d) / (d * (d + 1))


@dataclass
class ApproximantResult:
    N: int
    d: int
    c: float
    approximant: np.ndarray
    distance_to_input: float
    bound: float
    certificate: CertificateReport
    necessary_condition: Optional["NecessaryConditionResult"] = None

    @property
    def c_over_N(self):
        return self.c / self.N

    @property
    def normalized_distance(self):
        """``tr|rho - rho'| / 2``, the normalization under which ``c/N`` is a guaranteed bound."""
        return self.distance_to_input / 2


def exchangeable_approximant(rho, N, tol=PSD_TOL):
    """Mix ``rho`` with the symmetric-projector state at weight ``c/N``.

    The result is certified with :func:`certify_exchangeable`; the N-site
    necessary condition is evaluated as well, since the exchangeability of the
    approximant is only guaranteed when it holds.
    """
    rho = as_density(as_flip_invariant(rho))
    d = local_dim(rho)
    c = c_coefficient(N, d)
    mixed = (1 - c / N) * rho + (c / N) * symmetric_state(d)
    return ApproximantResult(
        N=int(N),
        d=d,
        c=c,
        approximant=mixed,
        distance_to_input=trace_distance(rho, mixed),
        bound=d * (d + 1) / N,
        certificate=certify_exchangeable(mixed, tol=tol),
        necessary_condition=n_extendability_necessary(rho, N, tol=tol),
    )


@dataclass
class NecessaryConditionResult:
    passed: bool
    N: int
    min_eigenvalue: float
    witness: Optional[np.ndarray] = None
    witness_value: Optional[float] = None


def square_form(rho, d=None):
    """``S[k, l] = tr rho ((E_k E_l + E_l E_k)/2 (x) I)`` = ``tr rho_1 (E_k E_l + E_l E_k)/2``."""
    d = local_dim(rho) if d is None else d
    rho1 = partial_trace(rho, [d, d], [0])
    E = basis_stack(d)
    P = np.einsum("aij,bjk->abik", E, E)
    S = np.einsum("abik,ki->ab", P, rho1).real
    return (S + S.T) / 2


def n_extendability_necessary(rho, N, tol=PSD_TOL):
    """Check ``N(N-1) rho(B (x) B) + N rho(B^2 (x) I) >= 0`` for all hermitian ``B``.

    Equivalent to ``Q + S/(N-1)`` being PSD with ``Q`` the Gram form. Failing
    this proves ``rho`` has no symmetric extension to ``N`` sites; passing
    it proves nothing beyond the inequality itself.
    """
    if int(N) != N or N < 2:
        raise InvalidDimensionError(f"N must be an integer >= 2, got {N}")
    rho = as_flip_invariant(rho)
    d = local_dim(rho)
    R = _gram(rho, d) + square_form(rho, d) / (N - 1)
    w, V = np.linalg.eigh(R)
    res = NecessaryConditionResult(passed=bool(w[0] >= -tol), N=int(N), min_eigenvalue=float(w[0]))
    if not res.passed:
        B = v_inverse(V[:, 0])
        B = B / np.max(np.abs(np.linalg.eigvalsh(B)))
        res.witness = B
        res.witness_value = extension_inequality(rho, B, N)
    return res


def extension_inequality(rho, B, N):
    """``N(N-1) tr rho(B (x) B) + N tr rho(B^2 (x) I)``; nonnegative for N-extendable rho."""
    d = B.shape[0]
    bb = np.trace(rho @ np.kron(B, B)).real
    b2 = np.trace(rho @ np.kron(B @ B, np.eye(d))).real
    return float(N * (N - 1) * bb + N * b2)


def proof_chain(rho, B, N):
    """The three quantities in the lower-bound chain for the approximant.

    Returns ``(value, middle, lower)`` with

    * ``value  = (1 - c/N) rho(B (x) B) + (c/N) (2/(d(d+1))) tr P^s (B (x) B)``
    * ``middle = -(1 - c/N) rho(B^2)/(N-1) + c/(N d(d+1)) (tr B^2 + (tr B)^2)``
    * ``lower  = (tr B^2 - rho(B^2 (x) I)) / (N - 1 + d(d+1))``

    For ``rho`` meeting the N-site necessary condition: value >= middle >= lower >= 0.
    """
    d = B.shape[0]
    c = c_coefficient(N, d)
    k = d * (d + 1)
    BB = np.kron(B, B)
    rho_bb = np.trace(rho @ BB).real
    rho_b2 = np.trace(rho @ np.kron(B @ B, np.eye(d))).real
    trb2 = np.trace(B @ B).real
    trb = np.trace(B).real
    value = (1 - c / N) * rho_bb + (c / N) * (2 / k) * np.trace(symmetric_projector(d) @ BB).real
    middle = -(1 - c / N) * rho_b2 / (N - 1) + c / (N * k) * (trb2 + trb**2)
    lower = (trb2 - rho_b2) / (N - 1 + k)
    return float(value), float(middle), float(lower)


def distance_to_exchangeable_upper(rho, N, tol=PSD_TOL):
    """Upper bound on ``min tr|rho - rho'|`` over exchangeable ``rho'``.

    Zero when ``rho`` itself certifies as exchangeable, otherwise the distance
    to the mixed approximant (half of which is at most ``c/N``).
    """
    rho = as_density(as_flip_invariant(rho))
    if certify_exchangeable(rho, tol=tol).verdict != "not_exchangeable":
        return 0.0
    return exchangeable_approximant(rho, N, tol=tol).distance_to_input
