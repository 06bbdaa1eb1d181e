"""Exchangeability certificates for two-site symmetric states.

A flip-invariant two-site state ``rho`` is exchangeable exactly when
``tr rho (B (x) B) >= 0`` for every hermitian ``B``. In the coordinates of
:func:`exkit.definetti_maps.v_map` this quadratic form is the real symmetric
matrix :func:`gram_form`, so the test is one eigenvalue problem:

* a negative eigenvector is a witness ``B`` with ``tr rho (B (x) B) < 0``;
* a PSD Gram matrix yields ``rho = sum_a w_a B_a (x) B_a`` from its spectral
  decomposition (inverting the coordinate map term by term).
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize

from exkit.definetti_maps import v_inverse
from exkit.hermitian_core import (
    PSD_TOL,
    as_density,
    as_flip_invariant,
    basis_stack,
    flip_operator,
    local_dim,
    partial_trace,
)

log = logging.getLogger(__name__)

EXCHANGEABLE = "exchangeable"
NOT_EXCHANGEABLE = "not_exchangeable"
BOUNDARY = "boundary"

# eigenvalues above -ROUNDOFF * max|eig| are treated as exact zeros
ROUNDOFF = 1e-12


class NotInConeError(ValueError):
    """The Gram form is not PSD, so no tensor-square decomposition exists."""

    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"Gram form has eigenvalue {min_eigenvalue:.3e} < 0; "
            "use certify_exchangeable() to obtain a witness instead"
        )


@dataclass
class CertificateReport:
    verdict: str
    min_eigenvalue: float
    tol: float
    witness: Optional[np.ndarray] = None
    witness_value: Optional[float] = None
    decomposition: Optional[list] = None
    reconstruction_error: Optional[float] = None

    @property
    def exchangeable(self):
        return self.verdict == EXCHANGEABLE

    def reconstruct(self):
        """``sum w B (x) B`` over the decomposition."""
        if self.decomposition is None:
            raise ValueError("report carries no decomposition")
        return reconstruct(self.decomposition)


def reconstruct(terms):
    terms = list(terms)
    if not terms:
        raise ValueError("empty decomposition")
    return sum(w * np.kron(B, B) for w, B in terms)


def gram_form(rho, tol=1e-10):
    """``Q[k, l] = tr rho (E_k (x) E_l)`` over the hermitian coordinate basis.

    Linear in ``rho``; symmetric because ``rho`` commutes with the flip.
    """
    rho = as_flip_invariant(rho, tol=tol)
    d = local_dim(rho)
    return _gram(rho, d)


def _gram(rho, d):
    E = basis_stack(d)
    r = rho.reshape(d, d, d, d)  # r[i, k, j, l] = rho[(i,k), (j,l)]
    Q = np.einsum("jlik,aij,bkl->ab", r, E, E, optimize=True).real
    return (Q + Q.T) / 2


def _spectral_terms(Q, floor=None):
    w, V = np.linalg.eigh(Q)
    if floor is None:
        # drop eigenvalues that are roundoff relative to the spectrum
        floor = ROUNDOFF * max(1.0, float(np.max(np.abs(w))))
    terms = []
    for lam, tau in zip(w[::-1], V[:, ::-1].T):
        if lam <= floor:
            break
        terms.append((float(lam), _canonical_sign(v_inverse(tau))))
    return terms


def _canonical_sign(B):
    # B (x) B is blind to the sign of B; fix it by the largest-magnitude coordinate
    flat = np.concatenate([B.real.ravel(), B.imag.ravel()])
    return -B if flat[np.argmax(np.abs(flat))] < 0 else B


def _witness(rho, tau):
    """Witness normalized to operator norm one, so ``rho(B (x) B) <= lambda_min``."""
    B = v_inverse(tau)
    B = B / np.max(np.abs(np.linalg.eigvalsh(B)))
    B = _canonical_sign(B)
    value = float(np.trace(rho @ np.kron(B, B)).real)
    return B, value


def _trace_norm(M):
    return float(np.abs(np.linalg.eigvalsh((M + M.conj().T) / 2)).sum())


def certify_exchangeable(rho, tol=PSD_TOL):
    """Decide exchangeability of a flip-invariant two-site density matrix.

    Verdicts: ``not_exchangeable`` when ``lambda_min < -tol`` (a witness is
    attached), ``boundary`` when ``lambda_min`` is negative but within ``tol``
    and above roundoff (witness and decomposition both attached), and
    ``exchangeable`` otherwise (decomposition attached). ``tol`` is scaled by
    the trace norm of ``rho``, i.e. used as is for states.

    Raises :class:`~exkit.hermitian_core.NotFlipInvariantError` for inputs that
    are not symmetric under exchange of the two sites.
    """
    rho = as_flip_invariant(rho)
    rho = as_density(rho, tol=max(1e-10, tol))
    d = local_dim(rho)
    Q = _gram(rho, d)
    w, V = np.linalg.eigh(Q)
    lmin = float(w[0])
    tol_eff = tol * max(1.0, _trace_norm(rho))
    floor = ROUNDOFF * max(1.0, float(np.max(np.abs(w))))

    report = CertificateReport(verdict=EXCHANGEABLE, min_eigenvalue=lmin, tol=tol_eff)
    if lmin < -floor:
        report.witness, report.witness_value = _witness(rho, V[:, 0])
    if lmin < -tol_eff:
        report.verdict = NOT_EXCHANGEABLE
        return report
    if lmin < -floor:
        report.verdict = BOUNDARY
    report.decomposition = _spectral_terms(Q)
    report.reconstruction_error = _trace_norm(reconstruct(report.decomposition) - rho)
    return report


def bb_decompose(rho, tol=PSD_TOL):
    """``rho = sum w B (x) B`` for a flip-invariant operator with PSD Gram form.

    Returns at most ``d^2`` pairs ``(w > 0, B hermitian)``. Works for any
    flip-invariant hermitian operator, not only states.
    """
    rho = as_flip_invariant(rho)
    d = local_dim(rho)
    Q = _gram(rho, d)
    w = np.linalg.eigvalsh(Q)
    if w[0] < -tol * max(1.0, _trace_norm(rho)):
        raise NotInConeError(w[0])
    return _spectral_terms(Q)


# ---------------------------------------------------------------------------
# dual cone: tr A (rho (x) rho) >= 0 for all states


@dataclass
class ConeDecomposition:
    """Outcome of :func:`cone_decompose`.

    ``status`` is ``"decomposed"`` (``A = L + sum w B (x) B``),
    ``"outside_cone"`` (``counterexample`` is a state with
    ``tr A (rho (x) rho) < 0``) or ``"failed"`` (no certificate either way).
    """

    status: str
    min_product_value: float
    minimizer: np.ndarray
    L: Optional[np.ndarray] = None
    terms: list = field(default_factory=list)
    perturbation: float = 0.0
    reconstruction_error: Optional[float] = None
    message: str = ""

    @property
    def counterexample(self):
        return self.minimizer if self.status == "outside_cone" else None


def _product_objective(A, d):
    At = A.reshape(d, d, d, d)

    def value_and_grad(x):
        G = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
        t = float(np.vdot(G, G).real)
        rho = G @ G.conj().T / t
        # K = tr_2 [A (I (x) rho)], so that d tr A(rho (x) rho) = 2 tr K d rho
        K = np.einsum("ikjl,lk->ij", At, rho)
        f = float(np.trace(K @ rho).real)
        W = (4.0 / t) * (G.conj().T @ K - np.trace(K @ rho) * G.conj().T)
        g = np.concatenate([W.T.real.ravel(), -W.T.imag.ravel()])
        return f, g

    return value_and_grad


def min_product_expectation(A, starts=16, seed=0):
    """Multi-start minimization of ``tr A (rho (x) rho)`` over density matrices.

    Returns ``(value, rho)``. Starts are the maximally mixed state, the
    eigenprojectors of the reduced operator ``tr_2 A`` and random Ginibre
    factors; the best result wins, ties to the lowest start index.
    """
    A = as_flip_invariant(A)
    d = local_dim(A)
    fg = _product_objective(A, d)
    rng = np.random.default_rng(seed)
    inits = [np.eye(d, dtype=complex)]
    _, U = np.linalg.eigh(partial_trace(A, [d, d], [0]))
    inits += [np.outer(U[:, k], np.ones(d)) + 1e-3 * np.eye(d) for k in range(d)]
    for _ in range(starts):
        inits.append(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    best = (np.inf, None)
    for G0 in inits:
        x0 = np.concatenate([G0.real.ravel(), G0.imag.ravel()])
        res = scipy.optimize.minimize(fg, x0, jac=True, method="L-BFGS-B", options={"maxiter": 2000, "gtol": 1e-12, "ftol": 1e-15})
        if res.fun < best[0] - 1e-14:
            G = (res.x[: d * d] + 1j * res.x[d * d :]).reshape(d, d)
            rho = G @ G.conj().T
            best = (float(res.fun), rho / np.trace(rho).real)
    return best


def _gram_operator_matrix(d):
    """Rows ``vec(T_kl^T)`` with ``T_kl = E_k (x) E_l``; ``gram(L) = Re(rows @ vec(L))``."""
    E = basis_stack(d)
    n = d * d
    rows = np.empty((n * n, n * n), dtype=complex)
    for k in range(n):
        for l in range(n):
            T = np.kron(E[k], E[l])
            rows[k * n + l] = T.T.ravel(order="F")
    return rows


def _find_psd_part(A, d):
    import cvxpy as cp

    n = d * d
    F = flip_operator(d)
    Gq = _gram(A, d)
    rows = _gram_operator_matrix(d)
    L = cp.Variable((n, n), hermitian=True)
    S = cp.Variable((n, n), symmetric=True)
    t = cp.Variable()
    gram_L = cp.reshape(cp.real(rows @ cp.vec(L, order="F")), (n, n), order="C")
    cons = [
        L >> 0,
        F @ L @ F == L,
        S == Gq - gram_L,
        S - t * np.eye(n) >> 0,
        t <= 1.0,
    ]
    prob = cp.Problem(cp.Maximize(t), cons)
    with warnings.catch_warnings():
        # "inaccurate" solutions are fine: the caller re-verifies the reconstruction
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    if L.value is None:
        return None, -np.inf
    return L.value, float(t.value)


def _clean_psd_flip(L, d):
    F = flip_operator(d)
    L = (L + L.conj().T) / 2
    L = (L + F @ L @ F) / 2
    w, U = np.linalg.eigh(L)
    return (U * np.clip(w, 0, None)) @ U.conj().T


def cone_decompose(A, tol=PSD_TOL, starts=16, seed=0, delta=1e-8):
    """Write ``A = L + sum w B (x) B`` with ``L >= 0`` flip-invariant, or refute.

    First the product expectation ``tr A (rho (x) rho)`` is minimized over
    states; a value below ``-tol`` rejects ``A`` with the minimizing state.
    Otherwise, if the Gram form of ``A`` is PSD the decomposition has
    ``L = 0``; if not, a PSD part ``L`` making ``A - L`` Gram-PSD is found by a
    small SDP. When that only succeeds after adding ``delta * I (x) I``, the
    shift is reported in ``perturbation`` (and the decomposition is of the
    shifted operator).
    """
    A = as_flip_invariant(A)
    d = local_dim(A)
    scale = max(1.0, _trace_norm(A))
    tol_eff = tol * scale
    fmin, rho0 = min_product_expectation(A, starts=starts, seed=seed)
    out = ConeDecomposition(status="failed", min_product_value=fmin, minimizer=rho0)
    if fmin < -tol_eff:
        out.status = "outside_cone"
        out.message = f"tr A(rho x rho) = {fmin:.6g} < 0 at the reported state"
        return out

    for shift in (0.0, delta * scale):
        As = A + shift * np.eye(d * d)
        Q = _gram(As, d)
        if np.linalg.eigvalsh(Q)[0] >= -ROUNDOFF * max(1.0, np.abs(Q).max()):
            L = np.zeros_like(As)
        else:
            L, margin = _find_psd_part(As, d)
            if L is None:
                continue
            L = _clean_psd_flip(L, d)
        terms = _spectral_terms(_gram(As - L, d))
        approx = L + (reconstruct(terms) if terms else 0.0)
        err = _trace_norm(approx - As)
        if err <= 10 * tol_eff:
            out.status = "decomposed"
            out.L, out.terms, out.perturbation, out.reconstruction_error = L, terms, shift, err
            return out
        log.debug("cone_decompose: shift %.1e left reconstruction error %.3e", shift, err)
        out.reconstruction_error = err
    out.message = "no PSD part found within tolerance; inner minimum may be a local minimum"
    return out
