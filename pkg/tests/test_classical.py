import numpy as np
import pytest

from oracles import bits_to_index, index_to_bits
from qcamodels import BitRow, Lattice, RuleTable, SecondOrderECA, Tiling, eca_run, eca_step, reversible_block_to_mqca
from qcamodels.classical import block_ca_step, permutation_matrix
from qcamodels.exceptions import ConfigurationError, UsageError
from qcamodels.verify import measured_causal_radius


def test_rule_table_round_trip():
    for n in range(256):
        assert RuleTable.from_table(RuleTable(n).table).rule_number == n


def test_rule_30_table():
    t = RuleTable(30).table
    assert [t[k] for k in [(1, 1, 1), (1, 1, 0), (1, 0, 1), (1, 0, 0), (0, 1, 1), (0, 1, 0), (0, 0, 1), (0, 0, 0)]] \
        == [0, 0, 0, 1, 1, 1, 1, 0]


def test_rule_range():
    with pytest.raises(ConfigurationError):
        RuleTable(256)


def test_single_seed_step():
    assert str(eca_step(30, "00100")) == "01110"


def test_rule_0_and_204():
    row = BitRow.parse("0110100111")
    assert not eca_step(0, row).bits.any()
    assert eca_step(204, row) == row


def test_run_examples():
    assert eca_run(30, "010", 0) == [BitRow.parse("010")]
    rows = eca_run(30, BitRow.single_seed(11), 3)
    assert [str(r) for r in rows] == ["00000100000", "00001110000", "00011001000", "00110111100"]
    quiet = eca_run(110, "000000", 5)
    assert all(not r.bits.any() for r in quiet)
    with pytest.raises(UsageError):
        eca_run(30, "010", -1)


def test_row_parsing_and_rendering():
    row = BitRow.parse("..#.#")
    assert str(row) == "00101" and row.render() == "..#.#"
    with pytest.raises(ConfigurationError):
        BitRow.parse("01x")
    with pytest.raises(ConfigurationError):
        BitRow.parse("01")


def test_periodic_wrap():
    # the seed at the right edge feeds cell 0 through the wrap
    assert str(eca_step(30, "00001")) == "10011"


def test_permutation_matrix():
    np.testing.assert_array_equal(permutation_matrix([0, 1, 2, 3]), np.eye(4))
    with pytest.raises(UsageError):
        permutation_matrix([0, 0, 1, 2])
    with pytest.raises(UsageError):
        permutation_matrix([0, 2, 1])


@pytest.mark.parametrize("perm", [[0, 1, 2, 3], [0, 2, 1, 3], [3, 0, 1, 2], [1, 0, 3, 2]])
def test_block_embedding_exhaustive(perm):
    lat = Lattice((6,))
    ta, tb = Tiling((2,), (0,)), Tiling((2,), (1,))
    m = reversible_block_to_mqca(perm, ta, tb, lat).fit()
    for j in range(64):
        out = m._step(np.eye(64, dtype=complex)[j][None])[0]
        probs = np.abs(out) ** 2
        k = bits_to_index(block_ca_step(np.array(index_to_bits(j, 6), dtype=np.uint8), perm, ta, tb, lat))
        assert abs(probs[k] - 1) < 1e-12
        assert probs.sum() - probs[k] < 1e-12


def test_identity_embedding():
    m = reversible_block_to_mqca(list(range(8)), Tiling((3,), (0,)), Tiling((3,), (1,)), Lattice((6,))).fit()
    np.testing.assert_array_equal(m.global_operator(), np.eye(64))


def test_second_order_rule_30_matches_classical():
    w = 5
    q = SecondOrderECA(width=w).fit()
    rng = np.random.default_rng(0)
    for _ in range(10):
        prev, cur = BitRow(rng.integers(0, 2, w)), BitRow(rng.integers(0, 2, w))
        idx = sum((int(prev.bits[x]) << (2 * x)) | (int(cur.bits[x]) << (2 * x + 1)) for x in range(w))
        out = q._step(np.eye(1 << (2 * w), dtype=complex)[idx][None])[0]
        j = int(np.argmax(np.abs(out)))
        p2, c2 = q.classical_step(prev, cur)
        assert [(j >> (2 * x)) & 1 for x in range(w)] == list(p2.bits)
        assert [(j >> (2 * x + 1)) & 1 for x in range(w)] == list(c2.bits)


def test_second_order_is_permutation_and_radius_two():
    q = SecondOrderECA(width=4).fit()
    u = q.global_operator()
    np.testing.assert_array_equal(np.abs(u) ** 2 @ np.ones(256), np.ones(256))
    np.testing.assert_array_equal(u.conj().T @ u, np.eye(256))
    assert q.light_cone_radius() == 2
    assert measured_causal_radius(q) == 2


def test_second_order_with_zero_prev_reproduces_eca():
    q = SecondOrderECA(width=7)
    q.fit()
    cur = BitRow.single_seed(7)
    _, nxt = q.classical_step(BitRow(np.zeros(7)), cur)
    assert nxt == eca_step(30, cur)
