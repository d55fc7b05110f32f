import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindblad_lab import linalg as la
from lindblad_lab.errors import CoeffNotPSD, NotDetailedBalanced
from lindblad_lab.generator import (
    GKSForm,
    LindbladGenerator,
    check_detailed_balance,
    db_spectral_data,
    fixed_point_algebra,
    generator_distance,
    modular_blocks,
    superoperator_matrix,
    to_standard_form,
    validate_lindblad,
)
from lindblad_lab.sampling import random_complex, random_density, random_generator, random_unitary
from lindblad_lab.subalgebra import SubalgebraSpec, conditional_expectation

import oracles


def test_superoperator_matches_direct_action(rng):
    gen = random_generator(3, rng)
    x = random_complex(3, rng)
    assert np.allclose(la.apply_superop(superoperator_matrix(gen), x), gen(x))


def test_double_convention_converts():
    v = la.SIGMA_MINUS
    half = LindbladGenerator.from_jumps([v])
    double = LindbladGenerator.from_jumps([v / np.sqrt(2)], convention="double")
    assert np.allclose(superoperator_matrix(half), superoperator_matrix(double))


def test_amplitude_damping_action():
    gen = LindbladGenerator.from_jumps([la.SIGMA_MINUS])
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    # basis (|e>, |g>): population of |e> decays, coherences at rate 1/2
    expected = np.array([[4.0 - 1.0, -1.0], [-1.5, 0.0]])
    assert np.allclose(gen(x), expected)


@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_standard_form_preserves_generator(n, seed):
    rng = np.random.default_rng(seed)
    gen = random_generator(n, rng)
    sf = to_standard_form(gen)
    assert generator_distance(gen, sf.generator()) < 1e-10
    for v in sf.unit_jumps:
        assert abs(np.trace(v)) < 1e-10
    gram = np.array([[la.tau(a.conj().T @ b) for b in sf.unit_jumps] for a in sf.unit_jumps])
    assert np.allclose(gram, np.eye(len(sf.unit_jumps)), atol=1e-10)
    assert abs(np.trace(sf.hamiltonian)) < 1e-10


def test_standard_form_is_representation_independent(rng):
    jumps = [random_complex(3, rng) for _ in range(3)]
    u = random_unitary(3, rng)
    mixed = [sum(u[i, j] * jumps[j] for j in range(3)) for i in range(3)]
    w1 = sorted(to_standard_form(LindbladGenerator.from_jumps(jumps)).weights)
    w2 = sorted(to_standard_form(LindbladGenerator.from_jumps(mixed)).weights)
    assert np.allclose(w1, w2)


def test_identity_jump_generates_nothing():
    sf = to_standard_form(LindbladGenerator.from_jumps([np.eye(2)]))
    assert sf.unit_jumps == ()
    assert np.allclose(sf.hamiltonian, 0)


def test_gks_half_identity_is_depolarizer():
    n = 2
    basis = [np.sqrt(n) * e for e in la.matrix_units(n)]
    gen = GKSForm(tuple(basis), 0.5 * np.eye(n * n), np.zeros((n, n))).to_generator()
    ident = np.eye(n * n)
    e_tau = np.outer(np.eye(n).ravel(), np.eye(n).ravel()) / n
    assert np.allclose(superoperator_matrix(gen), -n * n * (ident - e_tau))


def test_gks_rejects_indefinite_coefficients():
    basis = (la.SIGMA_X, la.SIGMA_Z)
    with pytest.raises(CoeffNotPSD):
        GKSForm(basis, np.diag([1.0, -1.0]), np.zeros((2, 2))).to_generator()


def test_validate_accepts_generators(rng):
    assert validate_lindblad(superoperator_matrix(random_generator(2, rng))).valid


def test_validate_flags_transpose_map():
    t = la.superop_from_function(lambda x: x.T - x, 2)
    res = validate_lindblad(t)
    assert not res.valid
    assert "m_L not positive semidefinite" in res.violations


def test_validate_flags_non_unital():
    s = superoperator_matrix(LindbladGenerator.from_jumps([la.SIGMA_MINUS]))
    s = s + np.outer(np.eye(4)[0], np.eye(4)[0])
    assert "L(I) != 0" in validate_lindblad(s).violations


def test_modular_blocks_pair_by_conjugation(rng):
    sigma = random_density(3, rng)
    blocks = dict(modular_blocks(sigma))
    for w, basis in blocks.items():
        for b in basis:
            assert np.allclose(sigma @ b @ np.linalg.inv(sigma), np.exp(-w) * b, atol=1e-10)
        if w > 0:
            partner = blocks[-w]
            assert all(np.allclose(a.conj().T, b) for a, b in zip(basis, partner))


def test_db_data_reconstructs_generator(rng):
    gen, sigma = oracles.random_db_instance(3, rng)
    db = db_spectral_data(gen, sigma)
    assert generator_distance(gen, db.generator()) < 1e-10
    for j, p in enumerate(db.partner):
        assert db.omegas[p] == pytest.approx(-db.omegas[j])
        assert db.weights[p] == pytest.approx(db.weights[j] * np.exp(db.omegas[j]), rel=1e-9)
    s_weighted = sum(
        np.exp(-w / 2) * superoperator_matrix(LindbladGenerator.from_jumps([wj]))
        for w, wj in zip(db.omegas, db.weighted_jumps())
    )
    assert np.allclose(s_weighted, superoperator_matrix(gen))


def test_amplitude_damping_detailed_balance():
    s1, s2 = 0.7, 0.3
    gen = LindbladGenerator.from_jumps([la.SIGMA_MINUS, la.SIGMA_PLUS], weights=[1.0, s1 / s2])
    assert check_detailed_balance(gen, np.diag([s1, s2]))
    assert not check_detailed_balance(gen, np.diag([s2, s1]))
    with pytest.raises(NotDetailedBalanced):
        db_spectral_data(gen, np.diag([s2, s1]))


@pytest.mark.parametrize("blocks", [((1, 3),), ((3, 1),), ((2, 2),), ((1, 1), (1, 2)), ((1, 2), (2, 1))])
def test_fixed_point_algebra_recovers_blocks(blocks, rng):
    spec = SubalgebraSpec(blocks, random_unitary(sum(a * b for a, b in blocks), rng))
    n = spec.dim
    commutant = spec.commutant_basis()
    gen = LindbladGenerator.from_jumps([sum(rng.standard_normal() * c for c in commutant) for _ in range(3)])
    fpa = fixed_point_algebra(gen)
    assert sorted(fpa.spec.blocks) == sorted(blocks)
    assert fpa.dim == sum(a * a for a, _ in blocks)
    for b in spec.basis():
        assert np.allclose(conditional_expectation(fpa.spec, b), b, atol=1e-8)
    x = random_complex(n, rng)
    assert np.allclose(gen(conditional_expectation(spec, x)), 0, atol=1e-9)
