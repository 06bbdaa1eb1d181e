import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exkit.definetti_maps import m_map
from exkit.exchange_cert import (
    BOUNDARY,
    EXCHANGEABLE,
    NOT_EXCHANGEABLE,
    NotInConeError,
    bb_decompose,
    certify_exchangeable,
    cone_decompose,
    gram_form,
    min_product_expectation,
    reconstruct,
)
from exkit.hermitian_core import (
    NotFlipInvariantError,
    hermitian_basis,
    random_density,
    random_flip_invariant,
    random_hermitian,
    symmetric_projector,
    trace_distance,
)

Z = np.diag([1.0, -1.0])
I2 = np.eye(2)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def singlet_symmetric():
    v = np.array([0, 1, 1, 0]) / np.sqrt(2)
    return np.outer(v, v)


def mixture(d, k, rng):
    p = rng.dirichlet(np.ones(k))
    return sum(pi * np.kron(s, s) for pi, s in zip(p, (random_density(d, rng) for _ in range(k))))


def test_gram_form_product_of_mixed():
    Q = gram_form(np.eye(4) / 4)
    t = np.array([np.trace(E).real for E in hermitian_basis(2)])
    np.testing.assert_allclose(Q, np.outer(t, t) / 4, atol=1e-15)
    assert np.linalg.matrix_rank(Q, tol=1e-12) == 1


def test_gram_form_singlet_value_at_z():
    Q = gram_form(singlet_symmetric())
    z = np.array([1, 0, 0, -1.0])
    assert z @ Q @ z == pytest.approx(-1.0)
    assert np.linalg.eigvalsh(Q)[0] < 0


@pytest.mark.parametrize("d", [2, 3])
def test_gram_equals_m_map(d):
    for seed in range(20):
        A = random_flip_invariant(d, seed)
        np.testing.assert_allclose(gram_form(A), m_map(A), atol=1e-10)


def test_certify_singlet_symmetric():
    rep = certify_exchangeable(singlet_symmetric())
    assert rep.verdict == NOT_EXCHANGEABLE
    assert not rep.exchangeable
    assert rep.min_eigenvalue == pytest.approx(-0.5)
    B = rep.witness
    value = np.trace(singlet_symmetric() @ np.kron(B, B)).real
    assert value == pytest.approx(rep.witness_value)
    assert value <= rep.min_eigenvalue + rep.tol
    np.testing.assert_allclose(np.abs(B), np.abs(Z), atol=1e-12)


def test_certify_classical_anticorrelated():
    rho = np.diag([0, 0.5, 0.5, 0])
    rep = certify_exchangeable(rho)
    assert rep.verdict == NOT_EXCHANGEABLE
    assert np.trace(rho @ np.kron(Z, Z)).real == pytest.approx(-1.0)
    assert rep.witness_value < 0


def test_certify_product_states():
    for seed in range(10):
        s = random_density(3, seed)
        rep = certify_exchangeable(np.kron(s, s))
        assert rep.verdict == EXCHANGEABLE
        assert rep.reconstruction_error < 1e-12
        assert len(rep.decomposition) == 1
        w, B = rep.decomposition[0]
        np.testing.assert_allclose(np.sqrt(w) * B, s, atol=1e-10)


def test_certify_rejects_asymmetric():
    with pytest.raises(NotFlipInvariantError):
        certify_exchangeable(np.kron(np.diag([1.0, 0]), I2 / 2))


def test_boundary_band():
    # rho(Z x Z) = -p for this mixture and the Gram minimum is -p/2
    mix = lambda p: p * singlet_symmetric() + (1 - p) * np.eye(4) / 4  # noqa: E731
    rep = certify_exchangeable(mix(1e-9), tol=1e-9)
    assert rep.min_eigenvalue == pytest.approx(-5e-10, rel=1e-6)
    assert rep.verdict == BOUNDARY
    assert rep.witness is not None and rep.decomposition is not None
    assert certify_exchangeable(mix(1e-9), tol=1e-12).verdict == NOT_EXCHANGEABLE
    assert certify_exchangeable(mix(0.0)).verdict == EXCHANGEABLE


def test_bb_decompose_examples():
    s = random_density(2, seed=4)
    terms = bb_decompose(np.kron(s, s))
    assert len(terms) == 1
    for d in (2, 3):
        terms = bb_decompose(np.eye(d * d) / d**2)
        assert trace_distance(reconstruct(terms), np.eye(d * d) / d**2) < 1e-10
        assert len(terms) <= d * d
    with pytest.raises(NotInConeError):
        bb_decompose(singlet_symmetric())


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_bb_decompose_mixtures(seed):
    rng = np.random.default_rng(seed)
    rho = mixture(3, 5, rng)
    terms = bb_decompose(rho)
    assert len(terms) <= 9
    assert all(w > 0 for w, _ in terms)
    for _, B in terms:
        np.testing.assert_allclose(B, B.conj().T)
    assert trace_distance(reconstruct(terms), rho) < 1e-10


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_witness_is_sound(seed, d):
    rho = random_density(d * d, seed)
    F = np.eye(d * d)[[i % d * d + i // d for i in range(d * d)]]
    rho = (rho + F @ rho @ F) / 2
    rep = certify_exchangeable(rho)
    if rep.verdict == NOT_EXCHANGEABLE:
        B = rep.witness
        assert np.trace(rho @ np.kron(B, B)).real < 0
    else:
        assert rep.reconstruction_error < 10 * rep.tol


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([2, 3]), st.floats(0.01, 1.0))
def test_mixing_with_symmetric_state_monotone(seed, d, p):
    rng = np.random.default_rng(seed)
    rho = random_flip_invariant(d, rng)
    rho = rho - np.linalg.eigvalsh(rho)[0] * np.eye(d * d)
    rho /= np.trace(rho).real
    sym = 2 * symmetric_projector(d) / (d * (d + 1))
    before = np.linalg.eigvalsh(gram_form(rho))[0]
    after = np.linalg.eigvalsh(gram_form((1 - p) * rho + p * sym))[0]
    assert after >= (1 - p) * before - 1e-12
    assert np.linalg.eigvalsh(gram_form(sym))[0] >= -1e-12


def test_classical_restriction():
    # diagonal rho = measure mu on pairs; diagonal B gives F[x, y] = mu(x, y) as the form
    rng = np.random.default_rng(7)
    d = 3
    mu = rng.random((d, d))
    mu = (mu + mu.T) / 2
    mu /= mu.sum()
    rho = np.diag(mu.ravel())
    Q = gram_form(rho)
    diag_slots = [k for k, E in enumerate(hermitian_basis(d)) if np.count_nonzero(E) == 1]
    np.testing.assert_allclose(Q[np.ix_(diag_slots, diag_slots)], mu, atol=1e-15)


def test_cone_decompose_examples():
    B = random_hermitian(2, seed=1)
    res = cone_decompose(np.kron(B, B))
    assert res.status == "decomposed"
    assert np.max(np.abs(res.L)) == 0
    assert len(res.terms) == 1
    res = cone_decompose(symmetric_projector(3))
    assert res.status == "decomposed"
    assert res.reconstruction_error < 1e-8
    res = cone_decompose(np.kron(Z, Z) + np.eye(4))
    assert res.status == "decomposed"
    res = cone_decompose(np.kron(Z, Z) - 0.5 * np.eye(4))
    assert res.status == "outside_cone"
    rho = res.counterexample
    assert np.trace((np.kron(Z, Z) - 0.5 * np.eye(4)) @ np.kron(rho, rho)).real == pytest.approx(-0.5, abs=1e-6)


@pytest.mark.parametrize("d", [2, 3])
def test_cone_decompose_antisymmetric_projector(d):
    # positive, but its Gram form is indefinite: needs a nonzero PSD part
    A = np.eye(d * d) - symmetric_projector(d)
    assert np.linalg.eigvalsh(gram_form(A))[0] < -0.1
    res = cone_decompose(A)
    assert res.status == "decomposed"
    assert np.linalg.eigvalsh(res.L)[0] >= -1e-12
    F = np.eye(d * d)[[i % d * d + i // d for i in range(d * d)]]
    np.testing.assert_allclose(F @ res.L @ F, res.L, atol=1e-12)
    approx = res.L + (reconstruct(res.terms) if res.terms else 0)
    assert trace_distance(approx, A + res.perturbation * np.eye(d * d)) < 1e-8


def test_min_product_grid_check():
    A = np.kron(Z, Z) - 0.5 * np.eye(4)
    val, rho = min_product_expectation(A)
    # Bloch grid: tr A(rho x rho) = z^2 - 0.5 for rho with Bloch z-component z
    zs = np.linspace(-1, 1, 401)
    assert val == pytest.approx(np.min(zs**2) - 0.5, abs=1e-8)
    assert np.trace(rho).real == pytest.approx(1.0)
