import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exkit.hermitian_core import (
    InvalidShapeError,
    NotFlipInvariantError,
    NotHermitianError,
    as_density,
    as_flip_invariant,
    as_hermitian,
    basis_stack,
    flip_operator,
    hermitian_basis,
    is_psd,
    local_dim,
    partial_trace,
    permute_sites,
    random_density,
    random_flip_invariant,
    random_hermitian,
    symmetric_projector,
    tensor,
    trace_distance,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def loop_partial_trace_second(op, d1, d2):
    # keep site 0 of a two-site operator, written out index by index
    out = np.zeros((d1, d1), dtype=complex)
    for i in range(d1):
        for j in range(d1):
            for k in range(d2):
                out[i, j] += op[i * d2 + k, j * d2 + k]
    return out


def test_flip_swaps_product_vectors(rng):
    for d in (2, 3, 4):
        F = flip_operator(d)
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        np.testing.assert_allclose(F @ np.kron(x, y), np.kron(y, x), atol=1e-14)
        np.testing.assert_allclose(F @ F, np.eye(d * d))


def test_flip_is_read_only():
    with pytest.raises(ValueError):
        flip_operator(2)[0, 0] = 5


def test_flip_conjugation_swaps_factors(rng):
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 3))
    F = flip_operator(3)
    np.testing.assert_allclose(F @ np.kron(A, B) @ F, np.kron(B, A), atol=1e-13)


def test_symmetric_projector_rank_and_identity():
    for d in (2, 3, 4):
        P = symmetric_projector(d)
        np.testing.assert_allclose(P @ P, P, atol=1e-14)
        assert round(np.trace(P).real) == d * (d + 1) // 2
        for seed in range(200):
            B = random_hermitian(d, seed)
            lhs = np.trace(P @ np.kron(B, B)).real
            rhs = 0.5 * np.trace(B @ B).real + 0.5 * np.trace(B).real ** 2
            assert abs(lhs - rhs) < 1e-10 * max(1, abs(rhs))


def test_tensor_associative(rng):
    A, B, C = (rng.standard_normal((k, k)) for k in (2, 3, 2))
    np.testing.assert_allclose(tensor(tensor(A, B), C), tensor(A, tensor(B, C)))
    np.testing.assert_array_equal(tensor(A), A)
    with pytest.raises(ValueError):
        tensor()


def test_partial_trace_matches_loops(rng):
    op = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    np.testing.assert_allclose(partial_trace(op, [2, 3], [0]), loop_partial_trace_second(op, 2, 3))


def test_partial_trace_of_product(rng):
    s = random_density(2, rng)
    t = random_density(3, rng)
    u = random_density(2, rng)
    np.testing.assert_allclose(partial_trace(tensor(s, t), [2, 3], [1]), t, atol=1e-14)
    np.testing.assert_allclose(partial_trace(tensor(s, t, u), [2, 3, 2], [0, 2]), tensor(s, u), atol=1e-14)
    np.testing.assert_allclose(partial_trace(tensor(s, t), [2, 3], []), [[1.0]], atol=1e-14)


def test_partial_trace_bad_dims():
    with pytest.raises(InvalidShapeError):
        partial_trace(np.eye(6), [2, 2], [0])
    with pytest.raises(InvalidShapeError):
        partial_trace(np.eye(4), [2, 2], [3])


def test_permute_sites_reorders_factors(rng):
    ops = [rng.standard_normal((d, d)) for d in (2, 3, 2)]
    for perm in itertools.permutations(range(3)):
        dims = [2, 3, 2]
        out = permute_sites(tensor(*ops), dims, list(perm))
        expect = tensor(*[ops[p] for p in perm])
        np.testing.assert_allclose(out, expect, atol=1e-14)
    with pytest.raises(ValueError):
        permute_sites(np.eye(4), [2, 2], [0, 0])


def test_hermitian_validation():
    A = np.array([[1, 2j], [-2j, 3]])
    np.testing.assert_allclose(as_hermitian(A + 1e-14), A + 1e-14)
    with pytest.raises(NotHermitianError):
        as_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvalidShapeError):
        as_hermitian(np.ones((2, 3)))
    with pytest.raises(InvalidShapeError):
        as_hermitian(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(InvalidShapeError):
        local_dim(np.eye(3))


def test_flip_invariance_check():
    with pytest.raises(NotFlipInvariantError) as err:
        as_flip_invariant(np.kron(np.diag([1.0, 0]), np.eye(2)))
    assert err.value.max_violation > 0
    A = random_flip_invariant(3, seed=1)
    np.testing.assert_allclose(as_flip_invariant(A), A, atol=1e-15)


def test_density_validation():
    with pytest.raises(ValueError):
        as_density(np.eye(2))
    with pytest.raises(ValueError):
        as_density(np.diag([1.5, -0.5]))
    as_density(np.eye(2) / 2)


def test_psd_threshold_scales():
    assert is_psd(np.diag([1.0, -1e-10]))
    assert not is_psd(np.diag([1.0, -1e-3]))


def test_basis_orthonormal_and_complete():
    for d in (1, 2, 3, 5):
        E = basis_stack(d)
        assert E.shape == (d * d, d, d)
        G = np.einsum("aij,bji->ab", E, E)
        np.testing.assert_allclose(G, np.eye(d * d), atol=1e-14)
        for M in E:
            np.testing.assert_allclose(M, M.conj().T)
    B = random_hermitian(4, seed=3)
    coeffs = [np.trace(E @ B).real for E in hermitian_basis(4)]
    np.testing.assert_allclose(sum(c * E for c, E in zip(coeffs, hermitian_basis(4))), B, atol=1e-13)


def test_trace_distance_examples():
    a = np.diag([1.0, 0])
    b = np.diag([0, 1.0])
    assert trace_distance(a, a) == 0
    assert trace_distance(a, b) == pytest.approx(2.0)
    with pytest.raises(InvalidShapeError):
        trace_distance(a, np.eye(3))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 4))
def test_trace_distance_triangle(seed, d):
    rng = np.random.default_rng(seed)
    r, s, t = (random_density(d, rng) for _ in range(3))
    assert trace_distance(r, t) <= trace_distance(r, s) + trace_distance(s, t) + 1e-12
    assert trace_distance(r, s) == pytest.approx(trace_distance(s, r), abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 4))
def test_random_density_is_state(seed, d):
    rho = random_density(d, seed)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho)[0] > -1e-14
