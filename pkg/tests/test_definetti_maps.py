import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exkit.definetti_maps import (
    BlockForm,
    beta_index,
    block_assemble,
    block_decompose,
    flip_invariant_dimension,
    m_inverse,
    m_map,
    sub_pair_index,
    sym_antisym_basis,
    t1_map,
    t2_map,
    v_inverse,
    v_map,
)
from exkit.hermitian_core import (
    InvalidShapeError,
    NotFlipInvariantError,
    hermitian_basis,
    random_density,
    random_flip_invariant,
    random_hermitian,
    symmetric_projector,
)

Z = np.diag([1.0, -1.0])
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def gram_oracle(A, d):
    # tr A (E_k (x) E_l) with E_k the coordinate basis, straight from the definition
    E = hermitian_basis(d)
    n = d * d
    M = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            M[k, l] = np.trace(A @ np.kron(E[k], E[l])).real
    return (M + M.T) / 2


def test_v_map_examples():
    np.testing.assert_allclose(v_map(Z), [1, 0, 0, -1])
    psi = (1 + 1j) / np.sqrt(2)
    B = np.array([[0, np.conj(psi)], [psi, 0]])
    np.testing.assert_allclose(v_map(B), [0, 1, 1, 0], atol=1e-15)
    np.testing.assert_allclose(v_inverse([0, 1, 1, 0]), B, atol=1e-15)
    with pytest.raises(InvalidShapeError):
        v_inverse(np.zeros(5))
    with pytest.raises(InvalidShapeError):
        v_inverse(np.zeros(4), d=3)


def test_v_map_recursive_layout_d3():
    B = np.array([[1, 2 - 1j, 3 + 4j], [2 + 1j, 5, 6 - 2j], [3 - 4j, 6 + 2j, 7]])
    r2 = np.sqrt(2)
    expect = [1, r2 * 2, r2 * 3, r2 * 1, r2 * -4, 5, r2 * 6, r2 * 2, 7]
    np.testing.assert_allclose(v_map(B), expect, atol=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_v_map_isometry(d):
    rng = np.random.default_rng(d)
    for _ in range(200):
        B1, B2 = random_hermitian(d, rng), random_hermitian(d, rng)
        assert np.trace(B1 @ B1).real == pytest.approx(np.dot(v_map(B1), v_map(B1)), rel=1e-12)
        assert np.trace(B1 @ B2).real == pytest.approx(np.dot(v_map(B1), v_map(B2)), rel=1e-10, abs=1e-12)
        np.testing.assert_allclose(v_inverse(v_map(B1)), B1, atol=1e-13)


def test_beta_index_d3():
    assert beta_index(3, "diag", 1) == 0
    assert beta_index(3, "re", 1, 2) == 1
    assert beta_index(3, "im", 1, 2) == 2
    assert beta_index(3, "diag", 2) == 3


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_beta_index_bijective_and_consistent(d):
    slots = [beta_index(d, "diag", i) for i in range(1, d)]
    for i in range(1, d):
        for j in range(i + 1, d):
            slots += [beta_index(d, "re", i, j), beta_index(d, "im", i, j)]
    assert sorted(slots) == list(range((d - 1) ** 2))
    B0 = random_hermitian(d - 1, seed=d)
    v = v_map(B0)
    for i in range(1, d):
        assert v[beta_index(d, "diag", i)] == pytest.approx(B0[i - 1, i - 1].real)
        for j in range(i + 1, d):
            assert v[beta_index(d, "re", i, j)] == pytest.approx(np.sqrt(2) * B0[i - 1, j - 1].real)
    with pytest.raises(KeyError):
        beta_index(d, "re", 1, 1)


def test_sym_antisym_basis_d2():
    S, A = sym_antisym_basis(2)
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(S.T, [[1, 0, 0, 0], [0, r, r, 0], [0, 0, 0, 1]])
    np.testing.assert_allclose(A.T, [[0, r, -r, 0]])


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_sym_antisym_basis_orthonormal(d):
    S, A = sym_antisym_basis(d)
    assert S.shape == (d * d, d * (d + 1) // 2)
    assert A.shape == (d * d, d * (d - 1) // 2)
    U = np.hstack([S, A])
    np.testing.assert_allclose(U.T @ U, np.eye(d * d), atol=1e-14)
    P = U.T @ symmetric_projector(d) @ U
    expect = np.diag([1.0] * S.shape[1] + [0.0] * A.shape[1])
    np.testing.assert_allclose(P, expect, atol=1e-14)


def test_block_form_examples():
    bf = block_decompose(np.eye(9))
    assert bf.a == 1
    np.testing.assert_allclose(bf.X1, np.eye(2))
    np.testing.assert_allclose(bf.X2, np.eye(2))
    np.testing.assert_allclose(bf.Z1, np.eye(3))
    np.testing.assert_allclose(bf.Z2, np.eye(1))
    for blk in (bf.phi, bf.Phi, bf.Y1, bf.Y2):
        assert np.max(np.abs(blk)) == 0
    zz = block_decompose(np.kron(Z, Z))
    assert zz.a == pytest.approx(1)
    np.testing.assert_allclose(zz.X1, [[-1]], atol=1e-15)
    np.testing.assert_allclose(zz.X2, [[-1]], atol=1e-15)
    np.testing.assert_allclose(zz.Z1, [[1]], atol=1e-15)
    assert zz.Z2.shape == (1, 0) or zz.Z2.size == 0
    with pytest.raises(NotFlipInvariantError):
        block_decompose(np.kron(Z, np.eye(2)))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5))
def test_block_roundtrip(seed, d):
    A = random_flip_invariant(d, seed)
    bf = block_decompose(A)
    assert isinstance(bf, BlockForm)
    np.testing.assert_allclose(block_assemble(bf), A, atol=1e-12)


def test_t_maps_zero_and_rank_one():
    for d in (2, 3, 4):
        sym, anti = sub_pair_index(d)
        Y1 = np.zeros((d - 1, len(sym)))
        Y2 = np.zeros((d - 1, len(anti)))
        assert np.max(np.abs(t1_map(Y1, Y2, d))) == 0
        assert np.max(np.abs(t2_map(Y1, Y2, d))) == 0
        B = random_hermitian(d, seed=d)
        bf = block_decompose(np.kron(B, B))
        psi = B[1:, 0]
        vb0 = v_map(B[1:, 1:])
        np.testing.assert_allclose(t1_map(bf.Y1, bf.Y2, d), np.outer(np.sqrt(2) * psi.real, vb0), atol=1e-12)
        np.testing.assert_allclose(t2_map(bf.Y1, bf.Y2, d), np.outer(np.sqrt(2) * psi.imag, vb0), atol=1e-12)


@pytest.mark.parametrize("d", [3, 4])
def test_t_maps_jointly_injective(d):
    sym, anti = sub_pair_index(d)
    n1, n2 = (d - 1) * len(sym), (d - 1) * len(anti)
    # real-linear map from (Re Y1, Im Y1, Re Y2, Im Y2) to (T1, T2)
    cols = []
    for k in range(2 * (n1 + n2)):
        x = np.zeros(2 * (n1 + n2))
        x[k] = 1
        Y1 = (x[:n1] + 1j * x[n1:2 * n1]).reshape(d - 1, len(sym))
        rest = x[2 * n1:]
        Y2 = (rest[:n2] + 1j * rest[n2:]).reshape(d - 1, len(anti))
        cols.append(np.concatenate([t1_map(Y1, Y2, d).ravel(), t2_map(Y1, Y2, d).ravel()]))
    L = np.array(cols).T
    rng = np.random.default_rng(0)
    x = rng.standard_normal(L.shape[1])
    sol = np.linalg.lstsq(L, L @ x, rcond=None)[0]
    np.testing.assert_allclose(sol, x, atol=1e-12)
    assert np.linalg.matrix_rank(L) == L.shape[1]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_m_map_rank_one(d):
    rng = np.random.default_rng(100 + d)
    for _ in range(100):
        B = random_hermitian(d, rng)
        v = v_map(B)
        np.testing.assert_allclose(m_map(np.kron(B, B)), np.outer(v, v), atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_m_map_matches_trace_oracle(d):
    A = random_flip_invariant(d, seed=d)
    M = m_map(A)
    np.testing.assert_allclose(M, M.T, atol=1e-12)
    np.testing.assert_allclose(M, gram_oracle(A, d), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_trace_identity(d):
    rng = np.random.default_rng(500 + d)
    for _ in range(100):
        A = random_flip_invariant(d, rng)
        B = random_hermitian(d, rng)
        v = v_map(B)
        lhs = np.trace(A @ np.kron(B, B)).real
        tol = 1e-10 * np.linalg.norm(A, 2) * np.linalg.norm(B, 2) ** 2
        assert abs(lhs - v @ m_map(A) @ v) < tol


def test_m_map_identity_on_states():
    for d in (2, 3):
        M = m_map(np.eye(d * d))
        for seed in range(10):
            v = v_map(random_density(d, seed))
            assert v @ M @ v == pytest.approx(1.0)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_m_inverse_roundtrip(d):
    for seed in range(5):
        A = random_flip_invariant(d, seed)
        np.testing.assert_allclose(m_inverse(m_map(A), d), A, atol=1e-11)
    tau = np.random.default_rng(d).standard_normal(d * d)
    B = v_inverse(tau)
    np.testing.assert_allclose(m_inverse(np.outer(tau, tau)), np.kron(B, B), atol=1e-11)


def test_m_map_real_linear():
    A1, A2 = random_flip_invariant(3, 1), random_flip_invariant(3, 2)
    np.testing.assert_allclose(m_map(0.3 * A1 - 1.7 * A2), 0.3 * m_map(A1) - 1.7 * m_map(A2), atol=1e-12)


def test_dimension_audit():
    for d in (2, 3, 4, 5):
        n = d * d
        assert flip_invariant_dimension(d) == n * (n + 1) // 2


def test_m_map_rejects_asymmetric():
    with pytest.raises(NotFlipInvariantError):
        m_map(np.kron(Z, np.eye(2)))
