"""Mean-field spin Hamiltonians and their ground-state energy density.

For a flip-invariant pair interaction ``h`` on ``C^d (x) C^d`` the N-site
Hamiltonian is ``H^N = -(2/N) sum_{i<j} h_ij`` (minus ``sum_j f_j`` when a
one-body field ``f`` is present). For ferromagnetic ``h = sum_a X_a (x) X_a``
the energy density as ``N -> oo`` is

    e0(h) = -max_{|phi|=1} ( <phi phi|h|phi phi> + <phi|f|phi> ),

a maximization over product states that :func:`e0` carries out with a
multi-start self-consistent iteration.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from exkit import _kernels
from exkit.definetti_maps import m_map, v_inverse
from exkit.hermitian_core import (
    as_flip_invariant,
    as_hermitian,
    flip_operator,
    local_dim,
    partial_trace,
    permute_sites,
    random_unit_vector,
)

log = logging.getLogger(__name__)

SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2

EXACT_MAX_DIM = 4096
DENSE_EIGH_MAX_DIM = 1024


class NotFerromagneticError(ValueError):
    def __init__(self, min_eigenvalue, witness):
        self.min_eigenvalue = float(min_eigenvalue)
        self.witness = witness
        super().__init__(
            f"interaction is not a sum of tensor squares: its coordinate matrix has "
            f"eigenvalue {min_eigenvalue:.3e}; tr h(B x B) < 0 for the attached witness"
        )


@dataclass(frozen=True)
class PairInteraction:
    """Flip-invariant pair interaction with optional tensor-square terms and field."""

    h: np.ndarray
    ferro_terms: Optional[tuple] = None
    one_body: Optional[np.ndarray] = None

    def __post_init__(self):
        h = as_flip_invariant(self.h)
        object.__setattr__(self, "h", h)
        d = local_dim(h)
        if self.one_body is not None:
            f = as_hermitian(self.one_body)
            if f.shape != (d, d):
                raise ValueError(f"one-body term must be {d}x{d}")
            object.__setattr__(self, "one_body", f)
        if self.ferro_terms is not None:
            terms = tuple(as_hermitian(X) for X in self.ferro_terms)
            rebuilt = sum((np.kron(X, X) for X in terms), np.zeros_like(h))
            err = float(np.max(np.abs(rebuilt - h)))
            if err > 1e-10 * max(1.0, float(np.max(np.abs(h)))):
                raise ValueError(f"ferro_terms do not reproduce h (max error {err:.3e})")
            object.__setattr__(self, "ferro_terms", terms)

    @property
    def d(self):
        return local_dim(self.h)

    @property
    def field(self):
        return np.zeros((self.d, self.d), dtype=complex) if self.one_body is None else self.one_body

    @property
    def is_ferromagnetic(self):
        return self.ferro_terms is not None

    @classmethod
    def from_terms(cls, terms, one_body=None):
        terms = [as_hermitian(X) for X in terms]
        return cls(sum(np.kron(X, X) for X in terms), tuple(terms), one_body)

    @classmethod
    def auto(cls, h, one_body=None, tol=1e-10):
        """Attach a tensor-square decomposition when one exists."""
        try:
            terms = ferro_decompose(h, tol=tol)
        except NotFerromagneticError:
            terms = None
        return cls(h, None if terms is None else tuple(terms), one_body)


# ---------------------------------------------------------------------------
# Hamiltonians


def mean_field_hamiltonian(p, N, use_numba=None):
    """Dense ``H^N = -(2/N) sum_{i<j} h_ij - sum_j f_j``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    d = p.d
    if d**N > EXACT_MAX_DIM:
        raise ValueError(f"d^N = {d ** N} exceeds the dense limit {EXACT_MAX_DIM}")
    h = p.h
    f = p.field
    real = not (np.any(h.imag) or np.any(f.imag))
    if real:
        h, f = h.real, f.real
    H = -(2.0 / N) * _kernels.embed_pair_sum(h, d, N, use_numba=use_numba)
    if p.one_body is not None:
        H -= _one_body_sum(f, d, N)
    return H


def _one_body_sum(f, d, N):
    out = np.zeros((d**N, d**N), dtype=f.dtype)
    for j in range(N):
        out += np.kron(np.kron(np.eye(d**j), f), np.eye(d ** (N - j - 1)))
    return out


def site_operator(X, j, N):
    d = X.shape[0]
    return np.kron(np.kron(np.eye(d**j), X), np.eye(d ** (N - j - 1)))


def exact_ground_energy(p, N):
    """``lambda_min(H^N) / N`` for ``d^N <= 4096``.

    The matrix is always built densely. Up to dimension 1024 it is handed to
    LAPACK; above that, ARPACK Lanczos on the same dense matrix is an order
    of magnitude faster on one core and agrees to machine precision.
    """
    H = mean_field_hamiltonian(p, N)
    if H.shape[0] <= DENSE_EIGH_MAX_DIM:
        w = scipy.linalg.eigh(H, eigvals_only=True, subset_by_index=[0, 0], driver="evr")
    else:
        v0 = np.ones(H.shape[0], dtype=H.dtype)
        w = scipy.sparse.linalg.eigsh(H, k=1, which="SA", tol=0, v0=v0, return_eigenvectors=False)
    return float(w[0]) / N


# ---------------------------------------------------------------------------
# ferromagnetic structure


def ferro_decompose(h, tol=1e-10):
    """Hermitian ``X_a`` with ``h = sum_a X_a (x) X_a``, or raise :class:`NotFerromagneticError`.

    A decomposition exists exactly when the coordinate matrix ``m_map(h)`` is
    PSD; its spectral decomposition ``sum lam |tau><tau|`` gives
    ``X_a = sqrt(lam) v_inverse(tau)``.
    """
    h = as_flip_invariant(h)
    M = m_map(h)
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[0] < -tol * scale:
        B = v_inverse(V[:, 0])
        raise NotFerromagneticError(w[0], B)
    terms = [np.sqrt(lam) * v_inverse(V[:, k]) for k, lam in enumerate(w) if lam > 1e-14 * scale]
    return terms[::-1]


def bcs_interaction(field_h=0.0, lam=1.0):
    """Spin-1/2 BCS pair interaction ``lam (S^x S^x + S^y S^y)`` with field ``field_h S^z``.

    With this normalization ``e0 = -lam/4`` at zero field. For ``lam < 0``
    the pair part carries no tensor-square terms.
    """
    h = lam * (np.kron(SX, SX) + np.kron(SY, SY))
    one = field_h * SZ if field_h != 0 else None
    if lam >= 0:
        terms = (np.sqrt(lam) * SX, np.sqrt(lam) * SY)
        return PairInteraction(h, terms, one)
    return PairInteraction(h, None, one)


def composite_interaction(p1, p2):
    """``h1 (x) h2`` between composite particles on ``C^{d1} (x) C^{d2}``.

    ``kron(h1, h2)`` acts on sites ordered ``(1a, 2a, 1b, 2b)``; the result is
    reordered to ``(1a, 1b) (x) (2a, 2b)``, i.e. particle 1 then particle 2.
    """
    d1, d2 = p1.d, p2.d
    raw = np.kron(p1.h, p2.h)
    h = permute_sites(raw, [d1, d1, d2, d2], [0, 2, 1, 3])
    terms = None
    if p1.is_ferromagnetic and p2.is_ferromagnetic:
        terms = tuple(np.kron(X, Y) for X in p1.ferro_terms for Y in p2.ferro_terms)
    return PairInteraction(h, terms)


def neg_form(p, N):
    """``-N sum_a (mean X_a)^2 + (1/N) sum_a sum_i X_{a,i}^2`` as a dense matrix."""
    if not p.is_ferromagnetic:
        raise ValueError("needs ferro_terms")
    D = p.d**N
    out = np.zeros((D, D), dtype=complex)
    for X in p.ferro_terms:
        sites = [site_operator(X, j, N) for j in range(N)]
        mean = sum(sites) / N
        out += -N * mean @ mean + sum(s @ s for s in sites) / N
    return out


# ---------------------------------------------------------------------------
# variational energy density


@dataclass
class GroundStateResult:
    e0: float
    argmax_state: np.ndarray
    starts_used: int
    converged: bool
    residual: float
    iterations: int = 0
    ferromagnetic: bool = True
    history: list = field(default_factory=list, repr=False)

    @property
    def label(self):
        if self.ferromagnetic:
            return "energy density"
        return "variational upper bound on products"


def product_value(p, phi):
    """``<phi phi|h|phi phi> + <phi|f|phi>`` for a unit vector ``phi``."""
    d = phi.shape[0]
    T = p.h.reshape(d, d, d, d)
    c = phi.conj()
    val = np.einsum("i,j,ijkl,k,l->", c, c, T, phi, phi, optimize=True).real
    if p.one_body is not None:
        val += np.vdot(phi, p.one_body @ phi).real
    return float(val)


def mean_field_operator(p, phi):
    """``tr_2[h (I (x) |phi><phi|)] + f/2``; equals ``sum_a <X_a> X_a + f/2`` for ferro ``h``.

    Half the gradient of :func:`product_value` with respect to ``|phi><phi|``.
    """
    d = phi.shape[0]
    T = p.h.reshape(d, d, d, d)
    # K[i, k] = sum_{j,l} h[(i,j),(k,l)] conj(phi_j) phi_l
    K = np.einsum("ijkl,j,l->ik", T, phi.conj(), phi)
    K = (K + K.conj().T) / 2
    if p.one_body is not None:
        K = K + p.one_body / 2
    return K


def stationarity_residual(p, phi):
    """``|| (K - <phi|K|phi>) phi ||`` for the mean-field operator ``K``."""
    K = mean_field_operator(p, phi)
    return float(np.linalg.norm(K @ phi - np.vdot(phi, K @ phi) * phi))


def _top_vector(K):
    w, U = np.linalg.eigh(K)
    return U[:, -1]


def _ascent_step(p, phi, value):
    """Projected gradient ascent with backtracking on the unit sphere."""
    K = mean_field_operator(p, phi)
    g = K @ phi
    g = g - np.vdot(phi, g) * phi
    step = 1.0
    for _ in range(40):
        trial = phi + step * g
        trial = trial / np.linalg.norm(trial)
        tv = product_value(p, trial)
        if tv > value:
            return trial, tv
        step /= 2
    return phi, value


def _scf_run(p, phi, tol, max_iter):
    value = product_value(p, phi)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        cand = _top_vector(mean_field_operator(p, phi))
        cv = product_value(p, cand)
        if cv < value - 1e-15:
            # the eigenvector update failed to increase the objective
            cand, cv = _ascent_step(p, phi, value)
        gain = cv - value
        phi, value = cand, cv
        if gain <= tol and stationarity_residual(p, phi) <= np.sqrt(tol):
            converged = True
            break
    return phi, value, it, converged


def e0(p, starts=32, tol=1e-10, max_iter=500, seed=0, init=None):
    """Ground-state energy density ``-max_phi (<phi phi|h|phi phi> + <phi|f|phi>)``.

    Self-consistent iteration ``phi <- top eigenvector of K(phi)`` from
    ``starts`` seeded random unit vectors (plus any ``init`` vectors), with a
    projected-gradient fallback whenever an update fails to increase the
    objective. The best start wins; ties go to the lowest start index. For
    non-ferromagnetic ``h`` the result is labelled as an upper bound.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    rng = np.random.default_rng(seed)
    d = p.d
    inits = [np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in (init or [])]
    inits += [random_unit_vector(d, rng) for _ in range(starts)]
    best = None
    for k, phi0 in enumerate(inits):
        phi, value, it, conv = _scf_run(p, phi0, tol, max_iter)
        if best is None or value > best[1] + 1e-13:
            best = (phi, value, it, conv, k)
    phi, value, it, conv, _ = best
    if not conv:
        log.warning("e0: best start did not converge in %d iterations", max_iter)
    # fix the global phase: first nonzero component real positive
    j = int(np.argmax(np.abs(phi) > 1e-12))
    phi = phi * np.exp(-1j * np.angle(phi[j]))
    return GroundStateResult(
        e0=-value,
        argmax_state=phi,
        starts_used=len(inits),
        converged=conv,
        residual=stationarity_residual(p, phi),
        iterations=it,
        ferromagnetic=p.is_ferromagnetic,
    )


def bloch_grid_max(p, points=129, use_numba=None):
    """Grid maximum of the product objective for qubits (``points x points`` grid)."""
    if p.d != 2:
        raise ValueError("Bloch grid only for d = 2")
    thetas = np.linspace(0.0, np.pi, points)
    phis = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    vals = _kernels.bloch_grid_objective(p.h, p.field, thetas, phis, use_numba=use_numba)
    t, f = np.unravel_index(np.argmax(vals), vals.shape)
    phi = np.array([np.cos(thetas[t] / 2), np.exp(1j * phis[f]) * np.sin(thetas[t] / 2)])
    return float(vals[t, f]), phi


# ---------------------------------------------------------------------------
# composite particles


@dataclass
class MultiplicativityReport:
    lhs: float
    rhs: float
    gap: float
    product_bound: float
    product_bound_holds: bool
    composite: GroundStateResult
    factors: tuple


def is_positive_definite(h, rel=1e-10):
    w = np.linalg.eigvalsh(h)
    return bool(w[0] > rel * max(1.0, float(np.max(np.abs(w)))))


def check_multiplicativity(p1, p2, starts=32, tol=1e-10, max_iter=500, seed=0, require_pd=True):
    """Compare ``e0(h1 (x) h2)`` with ``-e0(h1) e0(h2)``.

    ``lhs <= rhs`` (up to optimizer accuracy) always holds by restricting to
    product vectors; equality needs ``h1`` positive definite, which is
    enforced unless ``require_pd=False``.
    """
    if require_pd and not is_positive_definite(p1.h):
        raise ValueError("h1 must be positive definite")
    if not (p1.is_ferromagnetic and p2.is_ferromagnetic):
        log.warning("check_multiplicativity: factors without tensor-square terms")
    opts = dict(starts=starts, tol=tol, max_iter=max_iter, seed=seed)
    r1 = e0(p1, **opts)
    r2 = e0(p2, **opts)
    comp = composite_interaction(p1, p2)
    seed_vec = np.kron(r1.argmax_state, r2.argmax_state)
    rc = e0(comp, init=[seed_vec], **opts)
    rhs = -r1.e0 * r2.e0
    return MultiplicativityReport(
        lhs=rc.e0,
        rhs=rhs,
        gap=abs(rc.e0 - rhs),
        product_bound=rhs,
        product_bound_holds=bool(rc.e0 <= rhs + 1e-9),
        composite=rc,
        factors=(r1, r2),
    )


def conditional_state(p1, phi12, d2):
    """Two-site state on particle 2 weighted by ``h1`` on particle 1.

    ``omega(x) = <v|h1 (x) x|v> / <v|h1 (x) 1|v>`` with ``v = phi12 (x) phi12``
    and sites ordered as in :func:`composite_interaction`.
    """
    d1 = p1.d
    phi12 = np.asarray(phi12, dtype=complex)
    phi12 = phi12 / np.linalg.norm(phi12)
    v = np.kron(phi12, phi12)
    # move to site order (1a, 1b, 2a, 2b) to pair h1 with particle-1 factors
    v = v.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(-1)
    P = np.outer(v, v.conj())
    # omega(x) = tr[P (h1 (x) x)] = tr[ R x ] with R = tr_1[P (h1 (x) I)]
    R = partial_trace(P @ np.kron(p1.h, np.eye(d2 * d2)), [d1 * d1, d2 * d2], [1])
    denom = float(np.trace(R).real)
    if denom <= 1e-14:
        raise ValueError("vanishing normalization: h1 is not positive definite")
    rho = R / denom
    rho = (rho + rho.conj().T) / 2
    F = flip_operator(d2)
    return (rho + F @ rho @ F) / 2


def random_ferromagnetic(d, terms=3, seed=None, positive_definite=False):
    """Random ``sum_a X_a (x) X_a``; with ``positive_definite`` an ``c I (x) I`` term is included."""
    rng = np.random.default_rng(seed)
    Xs = []
    for _ in range(terms):
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        Xs.append((G + G.conj().T) / 4)
    if positive_definite:
        # X (x) X has eigenvalues x_i x_j; a dominant identity part keeps every product positive
        s = 1.0 + sum(np.abs(np.linalg.eigvalsh(X)).max() ** 2 for X in Xs)
        Xs.insert(0, np.sqrt(s) * np.eye(d))
    p = PairInteraction.from_terms(Xs)
    if positive_definite and not is_positive_definite(p.h):  # pragma: no cover - by construction
        raise RuntimeError("failed to build a positive definite interaction")
    return p


def with_field(p, one_body):
    return replace(p, one_body=one_body)
