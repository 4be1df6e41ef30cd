import numpy as np
import pytest

from oracles import bits_to_index, haar, index_to_bits, kron_embed
from qcamodels import Lattice, MargolusQCA, Tiling, basis_state, excitation_state, random_state, validate, walk_example
from qcamodels.exceptions import ConfigurationError, UsageError
from qcamodels.mqca import SWAP, WALK_MATRIX, pqca_from_cell_unitary
from qcamodels.state import permute_sites


def ring_swap_mqca(n):
    return MargolusQCA(Lattice((n,)), Tiling((2,), (0,)), Tiling((2,), (1,)), SWAP, SWAP)


def tiled_operator(u, blocks, n):
    out = np.eye(1 << n, dtype=complex)
    for b in blocks:
        out = kron_embed(u, b, n) @ out
    return out


# validate

def test_walk_ring_validates():
    rep = validate(walk_example(8))
    assert rep.passed, str(rep)


def test_unstaggered_fails_overlap():
    m = MargolusQCA(Lattice((8,)), Tiling((2,), (0,)), Tiling((2,), (0,)), WALK_MATRIX, WALK_MATRIX)
    rep = validate(m)
    assert not rep.passed
    assert any("overlap" in f for f in rep.failures())


def test_non_unitary_block_reported():
    bad = WALK_MATRIX.copy()
    bad[0, 0] = 2
    rep = validate(MargolusQCA(Lattice((8,)), Tiling((2,), (0,)), Tiling((2,), (1,)), bad, WALK_MATRIX))
    assert not rep.passed
    assert any("unitary" in f for f in rep.failures())


def test_invalid_model_refuses_to_fit():
    m = MargolusQCA(Lattice((8,)), Tiling((2,), (0,)), Tiling((2,), (0,)), WALK_MATRIX, WALK_MATRIX)
    with pytest.raises((UsageError, ConfigurationError)):
        m.fit()


def test_indivisible_extent_rejected():
    with pytest.raises(UsageError, match="not divisible"):
        MargolusQCA(Lattice((6,)), Tiling((4,), (0,)), Tiling((4,), (2,)), np.eye(16), np.eye(16)).fit()


# step

def test_identity_blocks():
    m = MargolusQCA(Lattice((6,)), Tiling((2,), (0,)), Tiling((2,), (1,)), np.eye(4), np.eye(4)).fit()
    s = random_state(Lattice((6,)), 1)
    np.testing.assert_allclose(m.step(s).amplitudes, s.amplitudes)
    rows = m.run(s, 4)
    assert rows.shape == (5, 6)
    np.testing.assert_allclose(rows, np.repeat(rows[:1], 5, axis=0), atol=1e-14)


def test_four_site_walk_matches_dense_product():
    m = walk_example(4).fit()
    a = tiled_operator(WALK_MATRIX, [[0, 1], [2, 3]], 4)
    b = tiled_operator(WALK_MATRIX, [[1, 2], [3, 0]], 4)
    expected = (b @ a)[:, 1]
    got = m.step(basis_state(Lattice((4,)), "0001")).amplitudes
    np.testing.assert_allclose(got, expected, atol=1e-14)
    np.testing.assert_allclose(m.global_operator(), b @ a, atol=1e-14)


def test_swap_blocks_follow_permutation_oracle():
    n = 6
    m = ring_swap_mqca(n).fit()
    for j in range(1 << n):
        bits = index_to_bits(j, n)
        for pairs in ([(0, 1), (2, 3), (4, 5)], [(1, 2), (3, 4), (5, 0)]):
            for x, y in pairs:
                bits[x], bits[y] = bits[y], bits[x]
        out = m._step(np.eye(1 << n)[j][None].astype(complex))[0]
        assert abs(out[bits_to_index(bits)] - 1) < 1e-14


def test_swap_blocks_move_even_and_odd_particles_oppositely():
    m = ring_swap_mqca(8).fit()
    lat = Lattice((8,))
    assert m.run(excitation_state(lat, [0]), 1)[1].argmax() == 2
    assert m.run(excitation_state(lat, [1]), 1)[1].argmax() == 7


def test_run_zero_steps_and_negative():
    m = walk_example(6).fit()
    s = excitation_state(Lattice((6,)), [2])
    rows = m.run(s, 0)
    np.testing.assert_array_equal(rows, s.probabilities()[None])
    with pytest.raises(UsageError):
        m.run(s, -1)


def test_walk_conserves_total_probability_n12():
    m = walk_example(12).fit()
    rows = m.run(excitation_state(Lattice((12,)), [0]), 10)
    np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-12)
    assert np.count_nonzero(rows[-1] > 1e-6) > 2


# walk_example

def test_walk_example_rejects_odd():
    with pytest.raises(ConfigurationError):
        walk_example(7)


def test_walk_matrix_unitary_and_sqrt_swap():
    assert np.max(np.abs(WALK_MATRIX.conj().T @ WALK_MATRIX - np.eye(4))) < 1e-15
    mid = WALK_MATRIX[1:3, 1:3]
    sq = mid @ mid
    ph = sq[0, 1]
    np.testing.assert_allclose(sq / ph, [[0, 1], [1, 0]], atol=1e-15)


# pqca

def test_pqca_identity_shuffles_and_conserves():
    m = pqca_from_cell_unitary(np.eye(4), 4).fit()
    assert validate(m).passed
    s = excitation_state(Lattice((8,)), [0, 5])
    rows = m.run(s, 6)
    np.testing.assert_allclose(rows.sum(axis=1), 2.0, atol=1e-14)


def test_pqca_swap_translates_subcells():
    m = pqca_from_cell_unitary(SWAP, 4).fit()
    lat = Lattice((8,))
    # left subcells (even) drift right by one cell, right subcells (odd) drift left
    for x in range(4):
        assert m.run(excitation_state(lat, [2 * x]), 1)[1].argmax() == (2 * x + 2) % 8
        assert m.run(excitation_state(lat, [2 * x + 1]), 1)[1].argmax() == (2 * x - 1) % 8


def test_pqca_arity_errors():
    with pytest.raises(ConfigurationError):
        pqca_from_cell_unitary(np.eye(2))
    with pytest.raises(ConfigurationError):
        pqca_from_cell_unitary(np.eye(3))


# invariants

@pytest.mark.parametrize("seed", range(3))
def test_translation_covariance(seed):
    m = walk_example(8).fit()
    lat = m.lattice_
    psi = random_state(lat, seed).amplitudes[None]
    smap = lat.shift_map((2,))
    np.testing.assert_allclose(m._step(permute_sites(psi, smap)), permute_sites(m._step(psi), smap), atol=1e-12)


def test_causality_within_block_union():
    m = walk_example(8).fit()
    lat = m.lattice_
    rng = np.random.default_rng(0)
    psi = random_state(lat, rng)
    x = 3
    phi = psi.amplitudes.copy()
    mask = 1 << x
    idx = np.arange(phi.size)
    phi = phi.copy()
    phi[idx & mask == 0], phi[idx & mask != 0] = psi.amplitudes[idx & mask != 0], psi.amplitudes[idx & mask == 0]
    pa = m.step(psi).probabilities()
    pb = m.step(type(psi)(phi, lat)).probabilities()
    # blocks containing 3: A [2,3]; B blocks touching those: [1,2], [3,4]
    outside = [s for s in range(8) if s not in {1, 2, 3, 4}]
    assert np.max(np.abs(pa[outside] - pb[outside])) < 1e-12


def test_intra_tiling_order_irrelevant():
    m = walk_example(8).fit()
    psi = random_state(Lattice((8,)), 4).amplitudes
    from qcamodels.state import apply_operator
    fwd, rev = psi.copy(), psi.copy()
    for b in m.blocks_a_:
        fwd = apply_operator(fwd, WALK_MATRIX, b, 8)
    for b in reversed(m.blocks_a_):
        rev = apply_operator(rev, WALK_MATRIX, b, 8)
    np.testing.assert_allclose(fwd, rev, atol=1e-12)


def test_walk_number_conservation():
    m = walk_example(8).fit()
    rows = m.run(excitation_state(Lattice((8,)), [1, 2, 6]), 20)
    np.testing.assert_allclose(rows.sum(axis=1), 3.0, atol=1e-12)


def test_two_dimensional_blocks():
    rng = np.random.default_rng(11)
    lat = Lattice((2, 4))
    m = MargolusQCA(lat, Tiling((2, 2), (0, 0)), Tiling((2, 2), (1, 1)), haar(16, rng), haar(16, rng)).fit()
    assert validate(m).passed
    psi = random_state(lat, rng)
    assert abs(np.linalg.norm(m.step(psi).amplitudes) - 1) < 1e-12


def test_half_step_composes_to_full():
    m = walk_example(6).fit()
    s = random_state(Lattice((6,)), 9)
    np.testing.assert_allclose(m.half_step(m.half_step(s, "a"), "b").amplitudes, m.step(s).amplitudes, atol=1e-14)


def test_sklearn_surface():
    m = walk_example(6)
    params = m.get_params()
    assert set(params) >= {"lattice", "tiling_a", "tiling_b", "u_a", "u_b", "n_steps"}
    s = excitation_state(Lattice((6,)), [0])
    out = m.set_params(n_steps=3).fit_transform(s.amplitudes[None])
    np.testing.assert_allclose(out[0], walk_example(6).fit().evolve(s, 3).amplitudes, atol=1e-14)
