import numpy as np
import pytest
from hypothesis import given, settings

from sepcond.errors import DegenerateSpectrum, NotUnit
from sepcond.linalg import eig_hermitian, identity
from sepcond.projectors import (
    OUTCOMES, beam_projectors, lagrange_projectors, reconstruct_observable, solve, vandermonde,
)
from sepcond.spin import E_X, E_Z, rotation_unitary, spin1_matrices, spin_projection

from conftest import SQ2, random_direction, random_hermitian, unit_vectors

S = spin1_matrices()


def check_projector_set(ps, tol=1e-11):
    for i, p in enumerate(ps.projectors):
        assert np.max(np.abs(p - p.conj().T)) <= 1e-12
        for j, q in enumerate(ps.projectors):
            expected = p if i == j else np.zeros_like(p)
            assert np.max(np.abs(p @ q - expected)) <= tol
    assert np.max(np.abs(sum(ps.projectors) - identity(ps.projectors[0].shape[0]))) <= tol


def test_beam_projectors_z():
    ps = beam_projectors(E_Z)
    assert tuple(ps.outcomes) == OUTCOMES
    np.testing.assert_allclose(ps[1], np.diag([1, 0, 0]), atol=1e-15)
    np.testing.assert_allclose(ps[0], np.diag([0, 1, 0]), atol=1e-15)
    np.testing.assert_allclose(ps[-1], np.diag([0, 0, 1]), atol=1e-15)


def test_beam_projectors_x_frozen():
    # outer product of the +1 eigenvector of S_x
    q = 1 / (2 * SQ2)
    expected = np.array([[0.25, q, 0.25], [q, 0.5, q], [0.25, q, 0.25]])
    np.testing.assert_allclose(beam_projectors(E_X)[1], expected, atol=1e-15)
    v = eig_hermitian(S.sx).eigenvectors[:, 0]
    np.testing.assert_allclose(np.outer(v, v.conj()), expected, atol=1e-14)


def test_beam_projectors_rejects_non_unit():
    with pytest.raises(NotUnit):
        beam_projectors([1.0, 1.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(unit_vectors)
def test_beam_projector_invariants(a):
    ps = beam_projectors(a)
    check_projector_set(ps)
    for p in ps.projectors:
        assert abs(np.trace(p) - 1) < 1e-12


def test_lagrange_examples():
    ps = lagrange_projectors(S.sz)
    np.testing.assert_allclose(ps.outcomes, [1, 0, -1])
    for p, d in zip(ps.projectors, np.eye(3)):
        np.testing.assert_allclose(p, np.diag(d), atol=1e-15)
    ps = lagrange_projectors(np.diag([2.0, 5.0]))
    np.testing.assert_allclose(ps[2.0], np.diag([1, 0]), atol=1e-15)
    with pytest.raises(DegenerateSpectrum):
        lagrange_projectors(np.diag([1.0, 1.0, 0.0]))


def test_lagrange_matches_closed_form(rng):
    for _ in range(100):
        a = random_direction(rng)
        closed, lag = beam_projectors(a), lagrange_projectors(spin_projection(a))
        for k in OUTCOMES:
            assert np.max(np.abs(closed[k] - lag[k])) <= 1e-11


@pytest.mark.parametrize("dim", [2, 3, 5, 9])
def test_lagrange_matches_eigenvectors(rng, dim):
    for _ in range(10):
        # well separated spectrum
        q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        lam = np.arange(dim, dtype=float) - dim / 2 + rng.uniform(-0.2, 0.2, size=dim)
        A = (q * lam) @ q.conj().T
        A = (A + A.conj().T) / 2
        ps = lagrange_projectors(A)
        check_projector_set(ps, tol=1e-9)
        spec = eig_hermitian(A)
        for i, p in enumerate(ps.projectors):
            v = spec.eigenvectors[:, i]
            assert np.max(np.abs(p - np.outer(v, v.conj()))) <= 1e-10
        recon = sum(o * p for o, p in zip(ps.outcomes, ps.projectors))
        assert np.max(np.abs(recon - A)) <= 1e-11 * max(1.0, np.abs(A).max())


def test_reconstruct_observable(rng):
    first, second = reconstruct_observable(beam_projectors(E_Z))
    np.testing.assert_allclose(first, S.sz, atol=1e-15)
    np.testing.assert_allclose(second, np.diag([1, 0, 1]), atol=1e-15)
    for _ in range(50):
        a = random_direction(rng)
        K = spin_projection(a)
        first, second = reconstruct_observable(beam_projectors(a))
        assert np.max(np.abs(first - K)) <= 1e-11
        assert np.max(np.abs(second - K @ K)) <= 1e-11


def test_unitary_covariance(rng):
    for _ in range(50):
        u, w = random_direction(rng), random_direction(rng)
        U = rotation_unitary(u, w)
        pu, pw = beam_projectors(u), beam_projectors(w)
        for k in OUTCOMES:
            assert np.max(np.abs(U @ pu[k] @ U.conj().T - pw[k])) <= 1e-10


def test_solve_against_numpy(rng):
    for n in (1, 3, 9):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        b = rng.normal(size=(n, 2))
        np.testing.assert_allclose(solve(a, b), np.linalg.solve(a, b), atol=1e-10)
    with pytest.raises(np.linalg.LinAlgError):
        solve(np.zeros((2, 2)), np.eye(2))


def test_vandermonde_layout():
    v = vandermonde([2.0, 3.0])
    np.testing.assert_array_equal(v, [[1, 2], [1, 3]])
