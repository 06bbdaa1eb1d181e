"""Dense complex linear algebra shared by every other module.

Conventions
-----------
* Composite index ``(i, k) -> i * dim(B) + k``: site 0 varies slowest, exactly
  as ``np.kron`` lays things out.
* Hermitian matrices are plain ``ndarray``; the validators below symmetrize
  inputs that are hermitian up to roundoff and reject the rest.
* PSD verdicts use ``lambda_min >= -tol * scale``; ``tol`` is always a parameter.
"""

from functools import lru_cache, reduce

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9


class InvalidDimensionError(ValueError):
    pass


class InvalidShapeError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NotFlipInvariantError(ValueError):
    """Raised for two-site operators that do not commute with the flip."""

    def __init__(self, max_violation, tol):
        self.max_violation = float(max_violation)
        self.tol = tol
        super().__init__(
            f"operator is not flip invariant: max |FA - AF| = {max_violation:.3e} > {tol:.1e}"
        )


# ---------------------------------------------------------------------------
# validation


def as_square(op):
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise InvalidShapeError(f"expected a square matrix, got shape {op.shape}")
    if not np.all(np.isfinite(op)):
        raise InvalidShapeError("matrix has non-finite entries")
    return op


def as_hermitian(op, tol=HERMITIAN_TOL):
    """Return ``(op + op^dag)/2`` if ``op`` is hermitian within ``tol``, else raise.

    The tolerance is relative to ``max(1, max|op|)``.
    """
    op = as_square(op).astype(complex)
    scale = max(1.0, float(np.max(np.abs(op))) if op.size else 1.0)
    err = float(np.max(np.abs(op - op.conj().T))) if op.size else 0.0
    if err > tol * scale:
        raise NotHermitianError(f"matrix is not hermitian: max |A - A^dag| = {err:.3e}")
    return (op + op.conj().T) / 2


def local_dim(op):
    """Local dimension ``d`` of a two-site operator of size ``d**2``."""
    n = as_square(op).shape[0]
    d = int(round(np.sqrt(n)))
    if d * d != n or d < 1:
        raise InvalidShapeError(f"size {n} is not a perfect square")
    return d


def flip_violation(A, d=None):
    d = local_dim(A) if d is None else d
    F = flip_operator(d) if d >= 2 else np.eye(1)
    return float(np.max(np.abs(F @ A - A @ F)))


def as_flip_invariant(A, tol=1e-10):
    """Validate a hermitian flip-invariant two-site operator; return it symmetrized."""
    A = as_hermitian(A, tol=max(tol, HERMITIAN_TOL))
    d = local_dim(A)
    if d < 2:
        return A
    scale = max(1.0, float(np.max(np.abs(A))))
    viol = flip_violation(A, d)
    if viol > tol * scale:
        raise NotFlipInvariantError(viol, tol)
    F = flip_operator(d)
    return (A + F @ A @ F) / 2


def is_density(rho, tol=1e-10):
    rho = np.asarray(rho)
    try:
        rho = as_hermitian(rho)
    except ValueError:
        return False
    return abs(np.trace(rho).real - 1) <= tol and np.linalg.eigvalsh(rho)[0] >= -tol


def as_density(rho, tol=1e-10):
    rho = as_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValueError(f"density matrix must have unit trace, got {tr:.12g}")
    lmin = np.linalg.eigvalsh(rho)[0]
    if lmin < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lmin:.3e}")
    return rho


def min_eigh(M):
    """Smallest eigenvalue and its unit eigenvector of a hermitian/symmetric matrix."""
    w, v = np.linalg.eigh(M)
    return float(w[0]), v[:, 0]


def is_psd(M, tol=PSD_TOL):
    """PSD test ``lambda_min >= -tol * max(1, ||M||_1)`` (trace norm)."""
    w = np.linalg.eigvalsh(M)
    scale = max(1.0, float(np.abs(w).sum()))
    return bool(w[0] >= -tol * scale)


# ---------------------------------------------------------------------------
# tensors and site bookkeeping


def tensor(*ops):
    """Kronecker product with the first factor varying slowest."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    return reduce(np.kron, [np.asarray(o) for o in ops])


@lru_cache(maxsize=None)
def _flip(d):
    F = np.zeros((d * d, d * d))
    for i in range(d):
        for k in range(d):
            F[k * d + i, i * d + k] = 1.0
    F.setflags(write=False)
    return F


def flip_operator(d):
    """Swap ``F(x (x) y) = y (x) x`` on ``C^d (x) C^d``."""
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"flip needs d >= 2, got {d}")
    return _flip(int(d))


def symmetric_projector(d):
    """``P^s = (I + F)/2``, rank ``d(d+1)/2``."""
    F = flip_operator(d)
    return (np.eye(d * d) + F) / 2


def _check_dims(op, dims):
    dims = [int(x) for x in dims]
    if any(x < 1 for x in dims):
        raise InvalidShapeError(f"site dimensions must be positive: {dims}")
    n = int(np.prod(dims))
    if op.shape != (n, n):
        raise InvalidShapeError(f"dims {dims} imply size {n}, matrix is {op.shape}")
    return dims


def partial_trace(op, dims, keep):
    """Trace out every site not in ``keep``; kept sites stay in their original order."""
    op = np.asarray(op)
    dims = _check_dims(op, dims)
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= len(dims) for k in keep):
        raise InvalidShapeError(f"site index out of range in keep={keep}")
    n = len(dims)
    drop = [k for k in range(n) if k not in keep]
    t = op.reshape(dims + dims)
    # einsum letters: rows a.., cols A..; traced sites share the row letter
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters) + 26:
        raise InvalidShapeError("too many sites")
    upper = letters.upper()
    rows = [letters[k] for k in range(n)]
    cols = [letters[k] if k in drop else upper[k] for k in range(n)]
    out = [letters[k] for k in keep] + [upper[k] for k in keep]
    res = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    m = int(np.prod([dims[k] for k in keep])) if keep else 1
    return res.reshape(m, m)


def permute_sites(op, dims, perm):
    """Conjugate ``op`` by the site permutation unitary.

    Output site ``k`` is input site ``perm[k]``, so with ``perm=[1, 0]`` the
    operator ``A (x) B`` becomes ``B (x) A``.
    """
    op = np.asarray(op)
    dims = _check_dims(op, dims)
    perm = [int(p) for p in perm]
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of {n} sites: {perm}")
    t = op.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    size = int(np.prod(dims))
    return t.reshape(size, size)


def trace_distance(rho, sigma):
    """``tr|rho - sigma|``, without the factor 1/2."""
    rho = as_square(rho)
    sigma = as_square(sigma)
    if rho.shape != sigma.shape:
        raise InvalidShapeError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    diff = rho - sigma
    diff = (diff + diff.conj().T) / 2
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


# ---------------------------------------------------------------------------
# hermitian basis in the recursive coordinate layout


@lru_cache(maxsize=None)
def coordinate_layout(d):
    """Slot labels of the recursive real coordinates of a d x d hermitian matrix.

    Returns a tuple of ``(kind, p, q)`` with kind in ``{"diag", "re", "im"}``
    and 0-based ``p <= q``. The order is: ``B[0,0]``, then ``sqrt2 Re B[q,0]``
    for ``q = 1..d-1``, then ``sqrt2 Im B[q,0]``, then the same layout for the
    lower-right ``(d-1) x (d-1)`` block.
    """
    slots = []
    for p in range(d):
        slots.append(("diag", p, p))
        slots.extend(("re", p, q) for q in range(p + 1, d))
        slots.extend(("im", p, q) for q in range(p + 1, d))
    return tuple(slots)


@lru_cache(maxsize=None)
def _basis(d):
    r2 = np.sqrt(0.5)
    out = []
    for kind, p, q in coordinate_layout(d):
        E = np.zeros((d, d), dtype=complex)
        if kind == "diag":
            E[p, p] = 1.0
        elif kind == "re":
            E[p, q] = E[q, p] = r2
        else:
            # coordinate is sqrt2 * Im B[q, p]
            E[q, p] = 1j * r2
            E[p, q] = -1j * r2
        E.setflags(write=False)
        out.append(E)
    return tuple(out)


def hermitian_basis(d):
    """Orthonormal basis ``{E_k}`` of d x d hermitian matrices, ``tr E_k E_l = delta_kl``.

    ``E_k`` is the matrix whose recursive coordinate vector is the k-th unit
    vector, so expansions in this basis are exactly the coordinate map.
    """
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"d must be a positive integer, got {d}")
    return list(_basis(int(d)))


def basis_stack(d):
    """The hermitian basis as a ``(d*d, d, d)`` array."""
    return np.array(_basis(int(d)))


# ---------------------------------------------------------------------------
# random inputs


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(d, seed=None):
    """Random hermitian matrix with i.i.d. complex Gaussian entries, symmetrized."""
    rng = _rng(seed)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (G + G.conj().T) / 2


def random_density(d, seed=None, rank=None):
    """Random density matrix ``G G^dag / tr`` (Ginibre; full rank unless ``rank`` given)."""
    rng = _rng(seed)
    r = d if rank is None else rank
    G = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_unit_vector(d, seed=None):
    rng = _rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_flip_invariant(d, seed=None):
    """Random hermitian operator on ``C^d (x) C^d`` commuting with the flip."""
    A = random_hermitian(d * d, seed)
    F = flip_operator(d)
    return (A + F @ A @ F) / 2


def projector(v):
    v = np.asarray(v)
    return np.outer(v, v.conj())
