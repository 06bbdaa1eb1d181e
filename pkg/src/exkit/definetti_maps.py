"""Real coordinates for hermitian matrices and flip-invariant two-site operators.

``v_map`` sends a d x d hermitian matrix to ``R^{d^2}`` isometrically
(trace inner product to dot product). ``m_map`` sends a flip-invariant
hermitian operator ``A`` on ``C^d (x) C^d`` to a real symmetric ``d^2 x d^2``
matrix with

    tr A (B (x) B) = <v_map(B)| m_map(A) |v_map(B)>,

so ``m_map(B (x) B)`` is the rank-one projector ``|v_map(B)><v_map(B)|``.
Both maps are defined recursively by splitting ``C^d = C (+) C^{d-1}``.

The operator ``A`` is first written in the basis of the symmetric and the
antisymmetric subspaces (see :func:`sym_antisym_basis`), giving the blocks of
:class:`BlockForm`; ``m_map`` is then assembled block by block, with the
off-diagonal coupling ``Y1, Y2`` handled by :func:`t1_map` / :func:`t2_map`.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from exkit.hermitian_core import (
    InvalidDimensionError,
    InvalidShapeError,
    as_flip_invariant,
    as_hermitian,
    basis_stack,
    coordinate_layout,
    local_dim,
)

SQRT2 = np.sqrt(2.0)
R2 = 1.0 / SQRT2


# ---------------------------------------------------------------------------
# V_d


def v_map(B):
    """Recursive real coordinates ``(b, sqrt2 Re psi, sqrt2 Im psi, V(B0))``.

    ``b = B[0, 0]``, ``psi = B[1:, 0]`` and ``B0 = B[1:, 1:]``.
    """
    B = as_hermitian(B)
    return _v_rec(B)


def _v_rec(B):
    d = B.shape[0]
    if d == 1:
        return np.array([B[0, 0].real])
    psi = B[1:, 0]
    return np.concatenate(([B[0, 0].real], SQRT2 * psi.real, SQRT2 * psi.imag, _v_rec(B[1:, 1:])))


def v_inverse(tau, d=None):
    """Hermitian matrix with coordinate vector ``tau``."""
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1:
        raise InvalidShapeError(f"coordinate vector must be 1-d, got shape {tau.shape}")
    n = tau.size
    dd = int(round(np.sqrt(n)))
    if dd * dd != n or (d is not None and d != dd) or n == 0:
        raise InvalidShapeError(f"length {n} is not d^2 for d={d}")
    return np.tensordot(tau, basis_stack(dd), axes=1)


def beta_index(d, kind, i, j=None):
    """Slot of ``V_{d-1}(B0)`` holding a given entry of ``B0``.

    ``i, j`` are the labels ``1..d-1`` of the basis vectors of ``C^{d-1}``.
    ``kind="diag"`` gives the slot of ``[B0]_ii``; ``"re"``/``"im"`` with
    ``i < j`` give the slots of ``sqrt2 Re [B0]_ij`` and ``sqrt2 Im [B0]_ij``
    (the latter in the sense of the recursive layout, i.e. ``Im [B0]_ji``).
    """
    return _beta_table(d)[(kind, i, i if j is None else j)]


@lru_cache(maxsize=None)
def _beta_table(d):
    if d < 2:
        raise InvalidDimensionError("beta indices need d >= 2")
    return {(kind, p + 1, q + 1): a for a, (kind, p, q) in enumerate(coordinate_layout(d - 1))}


# ---------------------------------------------------------------------------
# symmetric / antisymmetric bases


def _pairs(lo, hi, strict):
    return [(p, q) for p in range(lo, hi) for q in range(p + (1 if strict else 0), hi)]


def _sym_vec(d, p, q):
    v = np.zeros(d * d)
    if p == q:
        v[p * d + p] = 1.0
    else:
        v[p * d + q] = v[q * d + p] = R2
    return v


def _anti_vec(d, p, q):
    v = np.zeros(d * d)
    v[p * d + q] = R2
    v[q * d + p] = -R2
    return v


@lru_cache(maxsize=None)
def _sym_antisym(d):
    # recursive order {e0e0, g_i, f...} equals lexicographic (p <= q); likewise antisym
    S = np.array([_sym_vec(d, p, q) for p, q in _pairs(0, d, False)]).T
    A = np.array([_anti_vec(d, p, q) for p, q in _pairs(0, d, True)]).reshape(-1, d * d).T
    S.setflags(write=False)
    A.setflags(write=False)
    return S, A


def sym_antisym_basis(d):
    """Orthonormal bases of the symmetric and antisymmetric subspaces of ``C^d (x) C^d``.

    Returned as columns of a ``(d^2, d(d+1)/2)`` and a ``(d^2, d(d-1)/2)``
    array. Symmetric order: ``e0e0``, ``g_i = (e0 e_i + e_i e0)/sqrt2``, then the
    same construction on ``e_1..e_{d-1}``; antisymmetric order: ``h_i``, then
    recursively. Both amount to lexicographic pair order.
    """
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"d must be >= 2, got {d}")
    return _sym_antisym(int(d))


def sub_pair_index(d):
    """Column index in ``Phi/Y1/Z1`` (sym) and ``Y2/Z2`` (antisym) of sub-pairs.

    Keys are 1-based label pairs ``(i, j)``: ``i <= j`` for the symmetric
    table, ``i < j`` for the antisymmetric one.
    """
    return _sub_index(int(d))


@lru_cache(maxsize=None)
def _sub_index(d):
    sym = {(p + 1, q + 1): n for n, (p, q) in enumerate(_pairs(0, d - 1, False))}
    anti = {(p + 1, q + 1): n for n, (p, q) in enumerate(_pairs(0, d - 1, True))}
    return sym, anti


# ---------------------------------------------------------------------------
# block form


@dataclass(frozen=True)
class BlockForm:
    """Blocks of a flip-invariant operator in the symmetric/antisymmetric basis.

    Symmetric sector ordered ``(e0e0 | g_1..g_{d-1} | f...)``::

        [[a,   phi^dag, Phi^dag],
         [phi, X1,      Y1     ],
         [Phi, Y1^dag,  Z1     ]]

    antisymmetric sector ordered ``(h_1..h_{d-1} | k...)``::

        [[X2,     Y2],
         [Y2^dag, Z2]]
    """

    d: int
    a: float
    phi: np.ndarray
    Phi: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray


def block_decompose(A, tol=1e-10):
    """Split a flip-invariant operator into its :class:`BlockForm`."""
    A = as_flip_invariant(A, tol=tol)
    d = local_dim(A)
    S, Q = sym_antisym_basis(d)
    As = S.T @ A @ S
    Aa = Q.T @ A @ Q
    return BlockForm(
        d=d,
        a=float(As[0, 0].real),
        phi=As[1:d, 0].copy(),
        Phi=As[d:, 0].copy(),
        X1=As[1:d, 1:d].copy(),
        X2=Aa[: d - 1, : d - 1].copy(),
        Y1=As[1:d, d:].copy(),
        Y2=Aa[: d - 1, d - 1 :].copy(),
        Z1=As[d:, d:].copy(),
        Z2=Aa[d - 1 :, d - 1 :].copy(),
    )


def block_assemble(bf):
    """Inverse of :func:`block_decompose`."""
    d = bf.d
    S, Q = sym_antisym_basis(d)
    ns, na = S.shape[1], Q.shape[1]
    As = np.zeros((ns, ns), dtype=complex)
    As[0, 0] = bf.a
    As[1:d, 0] = bf.phi
    As[0, 1:d] = bf.phi.conj()
    As[d:, 0] = bf.Phi
    As[0, d:] = bf.Phi.conj()
    As[1:d, 1:d] = bf.X1
    As[1:d, d:] = bf.Y1
    As[d:, 1:d] = bf.Y1.conj().T
    As[d:, d:] = bf.Z1
    Aa = np.zeros((na, na), dtype=complex)
    Aa[: d - 1, : d - 1] = bf.X2
    Aa[: d - 1, d - 1 :] = bf.Y2
    Aa[d - 1 :, : d - 1] = bf.Y2.conj().T
    Aa[d - 1 :, d - 1 :] = bf.Z2
    return S @ As @ S.T + Q @ Aa @ Q.T


# ---------------------------------------------------------------------------
# T1 / T2


def _eps(k, l):
    return 1.0 if k < l else -1.0


def _t_maps(Y1, Y2, d):
    n = d - 1
    sym, anti = sub_pair_index(d)
    if Y1.shape != (n, len(sym)) or Y2.shape != (n, len(anti)):
        raise InvalidShapeError(
            f"Y1/Y2 shapes {Y1.shape}/{Y2.shape} do not match d={d}"
        )

    # [Y]_{r,pq} below is <pair pq|A|g_r> (resp. h_r), the conjugate of the
    # stored block entry <g_r|A|pair pq>; with the stored entry itself every
    # imaginary part comes out with the wrong sign against the B (x) B image.
    def y1(r, p, q):
        return Y1[r - 1, sym[(min(p, q), max(p, q))]].conjugate()

    def y2(r, p, q):
        # component along the antisymmetric vector of the unordered pair {p, q}
        return Y2[r - 1, anti[(min(p, q), max(p, q))]].conjugate()

    T1 = np.zeros((n, n * n))
    T2 = np.zeros((n, n * n))
    labels = range(1, d)
    for i in labels:
        b = beta_index(d, "diag", i)
        T1[i - 1, b] = y1(i, i, i).real
        T2[i - 1, b] = y1(i, i, i).imag
        for k in labels:
            if k == i:
                continue
            z = y1(i, i, k) + _eps(k, i) * y2(i, i, k)
            T1[k - 1, b] = R2 * z.real
            T2[k - 1, b] = R2 * z.imag
    for i in labels:
        for l in labels:
            if not i < l:
                continue
            bR = beta_index(d, "re", i, l)
            bI = beta_index(d, "im", i, l)
            u = (y1(i, i, l) + _eps(i, l) * y2(i, i, l)) * R2
            w = (y1(l, i, l) + _eps(l, i) * y2(l, i, l)) * R2
            T1[i - 1, bR] = R2 * (y1(l, i, i) + u).real
            T2[i - 1, bR] = R2 * (y1(l, i, i) + u).imag
            T1[l - 1, bR] = R2 * (y1(i, l, l) + w).real
            T2[l - 1, bR] = R2 * (y1(i, l, l) + w).imag
            T1[i - 1, bI] = -R2 * (y1(l, i, i) - u).imag
            T2[i - 1, bI] = R2 * (y1(l, i, i) - u).real
            T1[l - 1, bI] = R2 * (y1(i, l, l) - w).imag
            T2[l - 1, bI] = -R2 * (y1(i, l, l) - w).real
            for k in labels:
                if k == i or k == l:
                    continue
                p = y1(l, i, k) + _eps(k, i) * y2(l, i, k)
                q = y1(i, l, k) + _eps(k, l) * y2(i, l, k)
                T1[k - 1, bR] = ((p + q) / 2).real
                T2[k - 1, bR] = ((p + q) / 2).imag
                T1[k - 1, bI] = -((p - q) / 2).imag
                T2[k - 1, bI] = ((p - q) / 2).real
    return T1, T2


def t1_map(Y1, Y2, d=None):
    """Real ``(d-1) x (d-1)^2`` block coupling ``Re phi`` rows to ``V_{d-1}`` columns."""
    Y1 = np.asarray(Y1, dtype=complex)
    Y2 = np.asarray(Y2, dtype=complex)
    d = Y1.shape[0] + 1 if d is None else d
    return _t_maps(Y1, Y2, d)[0]


def t2_map(Y1, Y2, d=None):
    """Real ``(d-1) x (d-1)^2`` block coupling ``Im phi`` rows to ``V_{d-1}`` columns."""
    Y1 = np.asarray(Y1, dtype=complex)
    Y2 = np.asarray(Y2, dtype=complex)
    d = Y1.shape[0] + 1 if d is None else d
    return _t_maps(Y1, Y2, d)[1]


# ---------------------------------------------------------------------------
# M_d


def _phi_matrix(Phi, d):
    """``[Phi]`` as a symmetric ``(d-1) x (d-1)`` complex matrix (off-diagonals / sqrt2)."""
    sym, _ = sub_pair_index(d)
    out = np.zeros((d - 1, d - 1), dtype=complex)
    for (p, q), n in sym.items():
        if p == q:
            out[p - 1, p - 1] = Phi[n]
        else:
            out[p - 1, q - 1] = out[q - 1, p - 1] = R2 * Phi[n]
    return out


def m_map(A, tol=1e-10):
    """Real symmetric ``d^2 x d^2`` image of a flip-invariant hermitian operator."""
    A = as_flip_invariant(A, tol=tol)
    return _m_rec(A)


def _m_rec(A):
    d = local_dim(A)
    if d == 1:
        return np.array([[A[0, 0].real]])
    bf = block_decompose(A, tol=np.inf)
    n = d - 1
    out = np.zeros((d * d, d * d))
    re = slice(1, 1 + n)
    im = slice(1 + n, 1 + 2 * n)
    rest = slice(1 + 2 * n, d * d)

    out[0, 0] = bf.a
    out[0, re] = out[re, 0] = bf.phi.real
    out[0, im] = out[im, 0] = bf.phi.imag
    vX = _v_rec((bf.X1 + bf.X2) / 2)
    out[0, rest] = out[rest, 0] = vX

    P = _phi_matrix(bf.Phi, d)
    dX = (bf.X1 - bf.X2) / 2
    out[re, re] = dX.real + P.real
    # mixed block is (Im dX)^T + [Im Phi]; the table as printed has Im dX
    # untransposed, which fails the rank-one test for every complex psi
    out[re, im] = dX.imag.T + P.imag
    out[im, re] = out[re, im].T
    out[im, im] = dX.real - P.real

    T1, T2 = _t_maps(bf.Y1, bf.Y2, d)
    out[re, rest] = T1
    out[rest, re] = T1.T
    out[im, rest] = T2
    out[rest, im] = T2.T

    S, Q = sym_antisym_basis(n) if n >= 2 else (np.ones((1, 1)), np.zeros((1, 0)))
    Z = S @ bf.Z1 @ S.T + Q @ bf.Z2 @ Q.T
    out[rest, rest] = _m_rec(Z)
    return out


def vec_upper(M):
    """Upper-triangular entries of a symmetric matrix, row by row."""
    iu = np.triu_indices(M.shape[0])
    return M[iu]


@lru_cache(maxsize=None)
def _m_system(d):
    """LU factors of m_map on the basis ``{(E_k E_l + E_l E_k)/2}`` of flip-invariant operators."""
    E = basis_stack(d)
    n = d * d
    ops = []
    cols = []
    for k in range(n):
        for l in range(k, n):
            T = np.kron(E[k], E[l])
            if k != l:
                T = (T + np.kron(E[l], E[k])) / 2
            ops.append(T)
            cols.append(vec_upper(_m_rec(T)))
    G = np.array(cols).T
    return scipy.linalg.lu_factor(G), np.array(ops)


def m_inverse(M, d=None):
    """Flip-invariant hermitian operator with ``m_map(A) = M``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidShapeError(f"expected a square matrix, got {M.shape}")
    n = M.shape[0]
    dd = int(round(np.sqrt(n)))
    if dd * dd != n or (d is not None and d != dd):
        raise InvalidShapeError(f"size {n} is not d^2")
    if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
        raise ValueError("m_inverse needs a symmetric matrix")
    M = (M + M.T) / 2
    lu, ops = _m_system(dd)
    c = scipy.linalg.lu_solve(lu, vec_upper(M))
    A = np.tensordot(c, ops, axes=1)
    return (A + A.conj().T) / 2


def flip_invariant_dimension(d):
    """Real dimension of the flip-invariant hermitian operators on ``C^d (x) C^d``."""
    return d * d * (d * d + 1) // 2
