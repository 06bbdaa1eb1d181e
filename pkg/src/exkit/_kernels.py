"""Hot numeric loops, compiled with numba when available.

Every kernel has a numba version and a pure-numpy version with identical
signatures. The numpy path is used when numba is missing or when the
environment variable ``EXKIT_DISABLE_JIT`` is set to a truthy value; it is
also what the benchmark compares against.

Kernels
-------
embed_pair_sum
    Dense ``sum_{i<j} h_{ij}`` on ``(C^d)^{(x)N}`` (site 0 slowest).
bloch_grid_objective
    ``<phi phi|h|phi phi> + <phi|f|phi>`` on a (theta, phi) grid of qubit states.
generating_sum
    Multinomial sum for ``<m| (x)_N G |n>`` between Dicke states.
"""

import math
import os

import numpy as np
from scipy.special import gammaln

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_FLAG = os.environ.get("EXKIT_DISABLE_JIT", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# pair embedding


def _embed_pair_sum_py(h, d, N):
    D = d**N
    out = np.zeros((D, D), dtype=h.dtype)
    a = np.arange(D)
    w = d ** np.arange(N - 1, -1, -1)
    digits = (a[:, None] // w[None, :]) % d
    for i in range(N):
        for j in range(i + 1, N):
            ai, aj = digits[:, i], digits[:, j]
            stem = a - ai * w[i] - aj * w[j]
            row = ai * d + aj
            # rows a are distinct for fixed (bi, bj), so fancy-index += is safe
            for bi in range(d):
                for bj in range(d):
                    out[a, stem + bi * w[i] + bj * w[j]] += h[row, bi * d + bj]
    return out


def _embed_pair_sum_jit_impl(h, d, N, out):
    # out is allocated by the caller: np.zeros is lazy, numba's is not
    D = d**N
    w = np.empty(N, dtype=np.int64)
    acc = 1
    for k in range(N - 1, -1, -1):
        w[k] = acc
        acc *= d
    for a in range(D):
        for i in range(N):
            ai = (a // w[i]) % d
            for j in range(i + 1, N):
                aj = (a // w[j]) % d
                stem = a - ai * w[i] - aj * w[j]
                row = ai * d + aj
                for bi in range(d):
                    for bj in range(d):
                        v = h[row, bi * d + bj]
                        if v != 0:
                            out[a, stem + bi * w[i] + bj * w[j]] += v
    return out


# ---------------------------------------------------------------------------
# Bloch-sphere grid


def _bloch_grid_objective_py(h, f, thetas, phis):
    c = np.cos(thetas / 2.0)[:, None]
    s = np.sin(thetas / 2.0)[:, None]
    e = np.exp(1j * phis)[None, :]
    v0 = np.broadcast_to(c, (thetas.size, phis.size)).astype(complex)
    v1 = s * e
    vec = np.stack([v0, v1], axis=-1)  # (T, P, 2)
    pair = np.einsum("tpa,tpb->tpab", vec, vec).reshape(thetas.size, phis.size, 4)
    two = np.einsum("tpa,ab,tpb->tp", pair.conj(), h, pair)
    one = np.einsum("tpa,ab,tpb->tp", vec.conj(), f, vec)
    return (two + one).real


def _bloch_grid_objective_jit_impl(h, f, thetas, phis):
    T = thetas.size
    P = phis.size
    out = np.empty((T, P))
    v = np.empty(2, dtype=np.complex128)
    pv = np.empty(4, dtype=np.complex128)
    for t in range(T):
        c = math.cos(thetas[t] / 2.0)
        s = math.sin(thetas[t] / 2.0)
        for p in range(P):
            v[0] = c
            v[1] = s * complex(math.cos(phis[p]), math.sin(phis[p]))
            for a in range(2):
                for b in range(2):
                    pv[2 * a + b] = v[a] * v[b]
            acc = 0.0 + 0.0j
            for r in range(4):
                row = 0.0 + 0.0j
                for q in range(4):
                    row += h[r, q] * pv[q]
                acc += pv[r].conjugate() * row
            for r in range(2):
                row = 0.0 + 0.0j
                for q in range(2):
                    row += f[r, q] * v[q]
                acc += v[r].conjugate() * row
            out[t, p] = acc.real
    return out


# ---------------------------------------------------------------------------
# Dicke generating function


def _generating_sum_py(N, m, n, g):
    lo = max(0, m + n - N)
    hi = min(m, n)
    if lo > hi:
        return 0.0 + 0.0j
    x_uu = np.arange(lo, hi + 1)
    x_ud = m - x_uu
    x_du = n - x_uu
    x_dd = N - x_uu - x_ud - x_du
    logc = (
        gammaln(N + 1)
        - gammaln(x_uu + 1)
        - gammaln(x_ud + 1)
        - gammaln(x_du + 1)
        - gammaln(x_dd + 1)
        - 0.5 * (gammaln(N + 1) - gammaln(m + 1) - gammaln(N - m + 1))
        - 0.5 * (gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1))
    )
    terms = (
        np.exp(logc)
        * np.power(g[0, 0], x_uu)
        * np.power(g[0, 1], x_ud)
        * np.power(g[1, 0], x_du)
        * np.power(g[1, 1], x_dd)
    )
    return complex(terms.sum())


def _ipow(z, k):
    r = 1.0 + 0.0j
    for _ in range(k):
        r *= z
    return r


def _generating_sum_jit_impl(N, m, n, g):
    lo = max(0, m + n - N)
    hi = min(m, n)
    total = 0.0 + 0.0j
    norm = 0.5 * (math.lgamma(N + 1) - math.lgamma(m + 1) - math.lgamma(N - m + 1))
    norm += 0.5 * (math.lgamma(N + 1) - math.lgamma(n + 1) - math.lgamma(N - n + 1))
    for x_uu in range(lo, hi + 1):
        x_ud = m - x_uu
        x_du = n - x_uu
        x_dd = N - x_uu - x_ud - x_du
        logc = (
            math.lgamma(N + 1)
            - math.lgamma(x_uu + 1)
            - math.lgamma(x_ud + 1)
            - math.lgamma(x_du + 1)
            - math.lgamma(x_dd + 1)
            - norm
        )
        total += (
            math.exp(logc)
            * _ipow_k(g[0, 0], x_uu)
            * _ipow_k(g[0, 1], x_ud)
            * _ipow_k(g[1, 0], x_du)
            * _ipow_k(g[1, 1], x_dd)
        )
    return total


if HAVE_NUMBA:
    _ipow_k = njit(cache=True)(_ipow)
    _embed_pair_sum_jit = njit(cache=True)(_embed_pair_sum_jit_impl)
    _bloch_grid_objective_jit = njit(cache=True)(_bloch_grid_objective_jit_impl)
    _generating_sum_jit = njit(cache=True)(_generating_sum_jit_impl)
else:  # pragma: no cover
    _ipow_k = _ipow
    _embed_pair_sum_jit = _embed_pair_sum_jit_impl
    _bloch_grid_objective_jit = _bloch_grid_objective_jit_impl
    _generating_sum_jit = _generating_sum_jit_impl


def embed_pair_sum(h, d, N, use_numba=None):
    """Return ``sum_{i<j} h_{ij}`` as a dense ``d**N`` square matrix."""
    h = np.ascontiguousarray(h)
    if h.dtype != np.float64:
        h = h.astype(np.complex128)
    if N < 2:
        raise ValueError("need at least two sites")
    if USE_NUMBA if use_numba is None else use_numba:
        return _embed_pair_sum_jit(h, d, N, np.zeros((d**N, d**N), dtype=h.dtype))
    return _embed_pair_sum_py(h, d, N)


def bloch_grid_objective(h, f, thetas, phis, use_numba=None):
    """Product-state objective over a grid of qubit vectors.

    The grid point ``(theta, phi)`` is ``(cos(theta/2), e^{i phi} sin(theta/2))``.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    f = np.ascontiguousarray(f, dtype=np.complex128)
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    phis = np.ascontiguousarray(phis, dtype=np.float64)
    if USE_NUMBA if use_numba is None else use_numba:
        return _bloch_grid_objective_jit(h, f, thetas, phis)
    return _bloch_grid_objective_py(h, f, thetas, phis)


def generating_sum(N, m, n, g, use_numba=None):
    """``<m| G^{(x)N} |n>`` for a 2x2 matrix ``G`` (index 0 = spin up)."""
    g = np.ascontiguousarray(g, dtype=np.complex128)
    if USE_NUMBA if use_numba is None else use_numba:
        return complex(_generating_sum_jit(int(N), int(m), int(n), g))
    return _generating_sum_py(int(N), int(m), int(n), g)
