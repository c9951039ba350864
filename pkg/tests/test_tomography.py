import numpy as np
import pytest

from sepcond.errors import NonRealCoefficient, NotPSD, SingularDesign
from sepcond.experiment import (
    ExperimentConfig, as_eprb_table, counterexample_frequencies, eprb_frequencies, eprb_moments,
    moments_from_events, simulate, single_moments,
)
from sepcond.linalg import eig_hermitian, identity
from sepcond.projectors import beam_projectors
from sepcond.spin import E_X, E_Z, operator_basis, spin1_matrices
from sepcond.tomography import (
    F0_SINGLE, ExpansionCoefficients, assemble_source, canonical_design, canonical_pair_design,
    expand_source, predict_first_moment, predict_second_moment, psd_repair, reconstruct_pair_source,
    reconstruct_source, separability_residual,
)

from conftest import SINGLET, SQ2, random_direction, random_hermitian, random_source

S = spin1_matrices()
MZ = beam_projectors(E_Z)[1]
# independent symbolic evaluation of Tr(B_i M_+1(e_z))
MZ_COEFFS = np.array([1 / np.sqrt(3), 0, 0, 1 / SQ2, -np.sqrt(6) / 12, SQ2 / 4, 0, 0, 0])


def exact_observations(F, design):
    out = []
    for a in design:
        m = single_moments(F, a)
        out.append((a, m[1], m[2]))
    return out


def pair_observations(F, pairs):
    return [((a, b), eprb_moments(F, a, b)) for a, b in pairs]


def test_expand_examples(rng):
    c = expand_source(identity(3) / 3).values
    np.testing.assert_allclose(c, [F0_SINGLE] + [0] * 8, atol=1e-15)
    np.testing.assert_allclose(expand_source(MZ).values, MZ_COEFFS, atol=1e-15)
    assert abs(expand_source(MZ)[3] - np.trace(S.sz @ MZ).real / SQ2) < 1e-15
    for _ in range(20):
        F = random_source(rng)
        np.testing.assert_allclose(assemble_source(expand_source(F)).matrix, F, atol=1e-12)


def test_expand_rejects_non_hermitian():
    with pytest.raises(NonRealCoefficient):
        expand_source(np.diag([1.0, 0, 0]) + 1e-3j * np.eye(3))


def test_coefficient_realness(rng):
    B = operator_basis()
    for dim in (3, 9):
        for _ in range(10):
            F = random_source(rng, dim)
            basis = B if dim == 3 else [np.kron(x, y) for x in B for y in B]
            raw = np.array([np.trace(b.conj().T @ F) for b in basis])
            assert np.max(np.abs(raw.imag)) <= 1e-10


def test_basis_completeness(rng):
    B = operator_basis()
    for _ in range(20):
        X = random_hermitian(rng, 3)
        back = sum(np.trace(b.conj().T @ X) * b for b in B)
        assert np.max(np.abs(back - X)) <= 1e-12 * max(1.0, np.abs(X).max())


def test_assemble_examples():
    np.testing.assert_allclose(assemble_source([F0_SINGLE] + [0] * 8).matrix, identity(3) / 3, atol=1e-15)
    np.testing.assert_allclose(assemble_source(ExpansionCoefficients(MZ_COEFFS)).matrix, MZ, atol=1e-15)
    with pytest.raises(NotPSD):
        assemble_source([F0_SINGLE, 10] + [0] * 7)
    with pytest.raises(ValueError):
        assemble_source([0.5] + [0] * 8)


def test_pair_expansion_singlet():
    c = expand_source(SINGLET).values
    assert c.shape == (9, 9) and abs(c[0, 0] - 1 / 3) < 1e-15
    np.testing.assert_allclose(assemble_source(c).matrix, SINGLET, atol=1e-14)
    c = expand_source(identity(9) / 9).values
    assert np.count_nonzero(np.abs(c) > 1e-15) == 1


def test_predict_moments_examples(rng):
    iso = ExpansionCoefficients(np.array([F0_SINGLE] + [0.0] * 8))
    for _ in range(10):
        a = random_direction(rng)
        assert predict_first_moment(iso, a) == 0.0
        assert abs(predict_second_moment(iso, a) - 2 / 3) < 1e-15
    c = np.zeros(9)
    c[0], c[1] = F0_SINGLE, 1 / SQ2
    assert abs(predict_first_moment(c, E_X) - 1) < 1e-15
    cz = expand_source(MZ)
    assert abs(predict_first_moment(cz, E_Z) - 1) < 1e-15
    assert abs(predict_second_moment(cz, E_Z) - 1) < 1e-15
    assert abs(predict_second_moment(cz, E_X) - 0.5) < 1e-15


def test_predictions_match_direct_trace(rng):
    for _ in range(50):
        F, a = random_source(rng), random_direction(rng)
        c = expand_source(F)
        m = single_moments(F, a)
        assert abs(predict_first_moment(c, a) - m[1]) < 1e-12
        assert abs(predict_second_moment(c, a) - m[2]) < 1e-12


def test_canonical_design_conditioning():
    from sepcond.tomography import _second_moment_row

    d = canonical_design()
    assert len(d) == 5
    first = np.array(d)
    second = np.array([_second_moment_row(a) for a in d])
    assert np.linalg.matrix_rank(first) == 3 and np.linalg.cond(first) < 1e6
    assert np.linalg.matrix_rank(second) == 5 and np.linalg.cond(second) < 1e6
    assert len(canonical_pair_design()) == 25


def test_reconstruct_examples():
    F = reconstruct_source(exact_observations(identity(3) / 3, canonical_design()))
    assert np.max(np.abs(F.matrix - identity(3) / 3)) <= 1e-12
    np.testing.assert_allclose(expand_source(F).values[1:], 0, atol=1e-12)
    F = reconstruct_source(exact_observations(MZ, canonical_design()))
    assert np.max(np.abs(F.matrix - MZ)) <= 1e-10
    with pytest.raises(SingularDesign):
        reconstruct_source(exact_observations(MZ, [E_Z] * 5))


def test_reconstruct_round_trip(rng):
    for _ in range(20):
        F = random_source(rng)
        G = reconstruct_source(exact_observations(F, canonical_design()))
        assert np.linalg.norm(G.matrix - F) <= 1e-9


def test_reconstruct_random_oversampled_design(rng):
    F = random_source(rng)
    design = [random_direction(rng) for _ in range(12)]
    assert np.linalg.norm(reconstruct_source(exact_observations(F, design)).matrix - F) <= 1e-9


def test_reconstruct_noise_scaling(rng):
    n = 10**6
    for trial in range(3):
        F = random_source(rng)
        obs = []
        for i, a in enumerate(canonical_design()):
            log = simulate(ExperimentConfig("single-sg", a, None, n, 1000 * trial + i), F)
            m = moments_from_events(log)
            obs.append((a, m[1], m[2]))
        G = reconstruct_source(obs)
        assert np.linalg.norm(G.matrix - F) <= 0.05
        assert G.psd_adjustment >= 0


def test_psd_repair():
    bad = np.diag([0.7, 0.32, -0.02]).astype(complex)
    G, clipped = psd_repair(bad)
    assert abs(clipped - 0.02) < 1e-15
    assert abs(np.trace(G) - 1) < 1e-14
    assert eig_hermitian(G).eigenvalues[-1] >= 0


def test_reconstruct_rejects_large_repair():
    # moments of a non-physical matrix: <k> = 1 with <k²> = 2/3 at a = e_z
    obs = []
    for a in canonical_design():
        m1 = float(a[2]) * 1.0
        obs.append((a, m1, 2 / 3))
    with pytest.raises(NotPSD):
        reconstruct_source(obs)


def test_pair_reconstruction_examples(rng):
    pairs = canonical_pair_design()
    G = reconstruct_pair_source(pair_observations(SINGLET, pairs))
    assert np.max(np.abs(G.matrix - SINGLET)) <= 1e-9
    G = reconstruct_pair_source(pair_observations(identity(9) / 9, pairs))
    c = expand_source(G).values
    assert abs(c[0, 0] - 1 / 3) < 1e-12
    c[0, 0] = 0
    assert np.max(np.abs(c)) < 1e-12
    with pytest.raises(SingularDesign):
        reconstruct_pair_source(pair_observations(SINGLET, [(E_Z, E_X)]))


def test_pair_reconstruction_random_source(rng):
    F = random_source(rng, 9)
    G = reconstruct_pair_source(pair_observations(F, canonical_pair_design()))
    assert np.max(np.abs(G.matrix - F)) <= 1e-9


def quantum_dataset(F, pairs):
    return [((a, b), eprb_frequencies(F, a, b)) for a, b in pairs]


def counter_dataset(pairs, r=4):
    return [((a, b), as_eprb_table(counterexample_frequencies(a, b, r))) for a, b in pairs]


def test_separability_quantum_data(rng):
    pairs = canonical_pair_design()
    for F in (SINGLET, random_source(rng, 9), random_source(rng, 9, rank=2)):
        rep = separability_residual(quantum_dataset(F, pairs))
        assert rep.residual <= 1e-8
        assert rep.psd_adjustment >= 0


def test_separability_single_pair_fits_anything(rng):
    a, b = random_direction(rng), random_direction(rng)
    rep = separability_residual(counter_dataset([(a, b)]))
    assert rep.residual <= 1e-10


def test_separability_counterexample_flagged():
    rep = separability_residual(counter_dataset(canonical_pair_design()))
    assert rep.residual >= 0.045
    assert rep.psd_adjustment > 0


def test_separability_monotone_over_nested_designs():
    pairs = canonical_pair_design()
    res = [separability_residual(counter_dataset(pairs[:n])).residual for n in (2, 5, 10, 25)]
    for lo, hi in zip(res, res[1:]):
        assert hi >= lo - 1e-6


def test_separability_matches_convex_oracle():
    cp = pytest.importorskip("cvxpy")
    from sepcond.tomography import _frequency_design

    data = counter_dataset(canonical_pair_design())
    A, y = _frequency_design(data)
    B = operator_basis()
    basis = [np.kron(x, z) for x in B for z in B]
    X = cp.Variable((9, 9), hermitian=True)
    coeffs = cp.hstack([cp.real(cp.trace(b.conj().T @ X)) for b in basis])
    prob = cp.Problem(cp.Minimize(cp.sum_squares(A @ coeffs - y)), [X >> 0, cp.real(cp.trace(X)) == 1])
    prob.solve()
    oracle = np.sqrt(prob.value / len(y))
    got = separability_residual(data).residual
    assert abs(got - oracle) <= 1e-3 * oracle
