import numpy as np
import pytest

from oracles import kron_embed, sum_trace
from qcamodels import (CouplingMap, Colouring, Lattice, MargolusQCA, NeighbourhoodScheme, Tiling,
                       assemble_global, check_causality, check_consistency, check_translation, check_unitarity,
                       flip_flop_example, random_state, walk_cqca_example, walk_example)
from qcamodels.ctqca import PiecewiseCTQCA
from qcamodels.exceptions import ResourceError, UsageError
from qcamodels.mqca import WALK_MATRIX
from qcamodels.transpile import ctqca_to_cqca, mqca_to_cqca
from qcamodels.verify import _trace_out, default_regions, measured_causal_radius, run_checks


def identity_model(n=4):
    return MargolusQCA(Lattice((n,)), Tiling((2,), (0,)), Tiling((2,), (1,)), np.eye(4), np.eye(4)).fit()


def test_assemble_identity_and_walk():
    np.testing.assert_array_equal(assemble_global(identity_model()).matrix, np.eye(16))
    a = kron_embed(WALK_MATRIX, [0, 1], 4) @ kron_embed(WALK_MATRIX, [2, 3], 4)
    b = kron_embed(WALK_MATRIX, [1, 2], 4) @ kron_embed(WALK_MATRIX, [3, 0], 4)
    np.testing.assert_allclose(assemble_global(walk_example(4).fit()).matrix, b @ a, atol=1e-14)


def test_assemble_zero_time_segment():
    cmap = CouplingMap(Colouring.uniform(), NeighbourhoodScheme.nearest(1), {(0, 0): np.eye(4)})
    p = PiecewiseCTQCA(Lattice((3,)), [(0.0, cmap)]).fit()
    np.testing.assert_array_equal(assemble_global(p).matrix, np.eye(8))


def test_assemble_cap():
    with pytest.raises(ResourceError):
        assemble_global(walk_example(14).fit())


def test_unitarity_pass_and_fail():
    assert check_unitarity(assemble_global(walk_example(6).fit()), 1e-10).passed
    m = np.eye(8, dtype=complex)
    m[2, 5] = 1e-3
    rep = check_unitarity(m, 1e-6)
    assert not rep.passed and rep.deviation > 1e-6
    q = ctqca_to_cqca(flip_flop_example(6), 0.1, 0.5).fit()
    assert check_unitarity(assemble_global(q), 1e-10).passed


def test_translation():
    m = walk_example(8).fit()
    assert check_translation(m, (0,)).deviation == 0
    assert check_translation(m, (2,), 1e-12).passed
    with pytest.raises(UsageError):
        check_translation(m, (1,))


def test_causality_examples():
    assert check_causality(identity_model(), 0).passed
    assert check_causality(walk_example(8).fit(), 2, 1e-12).passed
    assert not check_causality(walk_example(8).fit(), 1).passed
    ff = flip_flop_example(8, dt=0.1).fit()  # first-order Trotter step, parity layers
    r = ff.light_cone_radius()
    assert check_causality(ff, r).passed
    assert not check_causality(ff, 0).passed


def test_declared_radius_is_tight_for_examples():
    for model in (walk_example(8).fit(), walk_cqca_example(8).fit(), flip_flop_example(8).fit()):
        assert measured_causal_radius(model) == model.light_cone_radius()


def test_consistency_examples():
    m = walk_example(8).fit()
    assert check_consistency(m, [([0], [0])]).deviation < 1e-14
    assert check_consistency(m, [([0], [0, 1, 2])], 1e-10).passed
    for model in (walk_example(6).fit(), mqca_to_cqca(walk_example(8)).fit(), flip_flop_example(6).fit()):
        assert check_consistency(model, tol=1e-10).passed


def test_consistency_region_errors():
    m = walk_example(8).fit()
    with pytest.raises(UsageError):
        check_consistency(m, [([3], [0, 1])])
    with pytest.raises(UsageError):
        check_consistency(m, [([0], list(range(7)))])


def test_default_regions_nested():
    pairs = default_regions(walk_example(6).fit())
    assert all(set(a) <= set(b) and len(b) <= 3 for a, b in pairs)
    assert ([0], [0, 1, 2]) in [(list(a), list(b)) for a, b in pairs]


@pytest.mark.parametrize("keep", [[0], [2], [1, 0], [0, 2], [2, 1, 0]])
def test_trace_out_matches_loop_oracle(keep):
    rng = np.random.default_rng(len(keep))
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    np.testing.assert_allclose(_trace_out(a, 3, keep), sum_trace(a, 3, keep), atol=1e-12)


def test_run_checks_all_and_unknown():
    reps = run_checks(walk_example(8).fit())
    assert [r.name.split("[")[0] for r in reps] == ["unitarity", "translation", "causality", "consistency"]
    assert all(r.passed for r in reps)
    assert "PASS" in str(reps[0])
    with pytest.raises(UsageError):
        run_checks(walk_example(8).fit(), ("bogus",))
    assert len(run_checks(walk_example(8).fit(), ("unitarity",))) == 1


def test_non_causal_model_detected():
    # generic 4-site blocks spread further than a radius-1 claim allows
    rng = np.random.default_rng(3)
    from oracles import haar
    m = MargolusQCA(Lattice((8,)), Tiling((4,), (0,)), Tiling((4,), (2,)), haar(16, rng), haar(16, rng)).fit()
    assert not check_causality(m, 1).passed
    assert check_causality(m, m.light_cone_radius()).passed
    s = random_state(m.lattice_, rng)
    assert abs(np.linalg.norm(m.step(s).amplitudes) - 1) < 1e-12
