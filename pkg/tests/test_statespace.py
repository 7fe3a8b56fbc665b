import math

import numpy as np
import pytest

from bosonwalk.statespace import (
    AmplitudeTable,
    ConfigurationBasis,
    config_rank,
    config_unrank,
    effective_dimension,
    normalize,
    read_snapshot,
    space_dimension,
    write_snapshot,
)


def test_dimension_values():
    assert space_dimension(12, 10) == 293930
    assert space_dimension(0, 5) == 1
    assert space_dimension(2, 2) == 3


def test_dimension_errors():
    with pytest.raises(ValueError):
        space_dimension(3, 0)
    with pytest.raises(ValueError):
        space_dimension(-1, 3)


@pytest.mark.parametrize("n,m", [(3, 4), (5, 5), (7, 2), (1, 9), (12, 10)])
def test_pascal_recurrence(n, m):
    assert space_dimension(n, m) == space_dimension(n, m - 1) + space_dimension(n - 1, m)


def test_rank_unrank_endpoints():
    assert config_unrank(0, 2, 2) == (2, 0)
    assert config_rank((2, 0)) == 0
    assert config_unrank(2, 2, 2) == (0, 2)


def test_rank_unrank_exhaustive_small():
    for rank in range(space_dimension(3, 4)):
        assert config_rank(config_unrank(rank, 3, 4)) == rank


def test_unrank_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        config_unrank(20, 3, 4)
    with pytest.raises(ValueError, match="out of range"):
        config_unrank(-1, 3, 4)


def test_basis_rank_rejects_wrong_sum():
    basis = ConfigurationBasis(3, 4)
    with pytest.raises(ValueError, match="sum to 2"):
        basis.rank((1, 1, 0, 0))
    with pytest.raises(ValueError, match="expected 4"):
        basis.rank((3, 0, 0))


def test_basis_enumeration_matches_unrank():
    basis = ConfigurationBasis(4, 3)
    for rank in range(basis.dimension):
        assert basis.unrank(rank) == config_unrank(rank, 4, 3)


def test_rank_array_agrees_with_scalar_rank():
    basis = ConfigurationBasis(5, 4)
    ranks = basis.rank_array(basis.occupations)
    assert np.array_equal(ranks, np.arange(basis.dimension))


def test_normalize_single_entry():
    basis = ConfigurationBasis(2, 2)
    table = AmplitudeTable.from_terms(basis, 2, [(1, (2, 0), 3 + 4j)])
    k, normalized = normalize(table)
    assert k == 5.0
    assert normalized.amplitude(1, 0) == pytest.approx(0.6 + 0.8j, abs=1e-15)


def test_normalize_walk_initial_state():
    basis = ConfigurationBasis(12, 10)
    n1 = (0, 0, 12, 0, 0, 0, 0, 0, 0, 0)
    n2 = (0, 0, 0, 0, 12, 0, 0, 0, 0, 0)
    table = AmplitudeTable.from_terms(basis, 2, [(1, n1, -1j), (2, n2, 1.0)])
    k, normalized = normalize(table)
    assert k == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert normalized.amplitude(1, basis.rank(n1)) == pytest.approx(
        -1j / math.sqrt(2.0), abs=1e-15
    )
    assert normalized.amplitude(2, basis.rank(n2)) == pytest.approx(
        1.0 / math.sqrt(2.0), abs=1e-15
    )


def test_normalize_idempotent():
    basis = ConfigurationBasis(2, 3)
    table = AmplitudeTable.from_terms(
        basis, 2, [(1, (2, 0, 0), 1.5), (2, (0, 1, 1), -0.5j)]
    )
    k1, once = normalize(table)
    k2, twice = normalize(once)
    # Renormalizing a unit table is the identity up to one rounding step.
    assert abs(k2 - 1.0) < 1e-15
    assert np.allclose(once.amps, twice.amps, rtol=0.0, atol=1e-15)


def test_normalize_rejects_zero_table():
    basis = ConfigurationBasis(2, 2)
    with pytest.raises(ValueError, match="all-zero"):
        normalize(AmplitudeTable(basis, 2))


def test_effective_dimension_counts_distinct_configs():
    basis = ConfigurationBasis(12, 10)
    n1 = (0, 0, 12, 0, 0, 0, 0, 0, 0, 0)
    n2 = (0, 0, 0, 0, 12, 0, 0, 0, 0, 0)
    _, table = normalize(
        AmplitudeTable.from_terms(basis, 2, [(1, n1, -1j), (2, n2, 1.0)])
    )
    assert effective_dimension(table) == 2

    small = ConfigurationBasis(3, 4)
    t = AmplitudeTable(small, 2)
    t.amps[0, 5] = 0.5
    t.amps[1, 5] = 0.5
    t.amps[0, 7] = np.sqrt(0.5)
    assert effective_dimension(t) == 2


def test_effective_dimension_rejects_negative_tol():
    basis = ConfigurationBasis(1, 2)
    table = AmplitudeTable.from_terms(basis, 2, [(1, (1, 0), 1.0)])
    with pytest.raises(ValueError):
        effective_dimension(table, -1.0)


def test_from_terms_accumulates_and_validates():
    basis = ConfigurationBasis(2, 2)
    table = AmplitudeTable.from_terms(
        basis, 2, [(1, (2, 0), 0.5), (1, (2, 0), 0.25)]
    )
    assert table.amplitude(1, 0) == 0.75
    with pytest.raises(ValueError, match="chirality"):
        AmplitudeTable.from_terms(basis, 2, [(3, (2, 0), 1.0)])


def test_entries_sorted_and_compact():
    basis = ConfigurationBasis(2, 3)
    table = AmplitudeTable(basis, 2)
    table.amps[1, 3] = 0.5
    table.amps[0, 4] = 1e-16
    table.amps[0, 1] = 0.25j
    dropped = table.compact(1e-14)
    assert dropped == 1
    chirality, rank, amp = table.entries()
    assert list(chirality) == [1, 2]
    assert list(rank) == [1, 3]
    assert amp[0] == 0.25j and amp[1] == 0.5
    assert table.entry_count == 2


def test_snapshot_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    basis = ConfigurationBasis(3, 4)
    table = AmplitudeTable(basis, 2)
    table.amps[:] = rng.normal(size=(2, basis.dimension)) + 1j * rng.normal(
        size=(2, basis.dimension)
    )
    table.amps[:, table.config_weights() < 0.5] = 0.0  # leave genuine zeros
    table.norm_constant = 1.25
    path = tmp_path / "state.npz"
    write_snapshot(path, table, step=17, meta={"drop_threshold": 1e-14})
    loaded, step, meta = read_snapshot(path, basis)
    assert step == 17
    assert meta == {"drop_threshold": 1e-14}
    assert loaded.norm_constant == 1.25
    assert np.array_equal(loaded.amps, table.amps)


def test_snapshot_rejects_mismatched_basis(tmp_path):
    basis = ConfigurationBasis(3, 4)
    table = AmplitudeTable.from_terms(basis, 2, [(1, (3, 0, 0, 0), 1.0)])
    path = tmp_path / "state.npz"
    write_snapshot(path, table, step=0)
    with pytest.raises(ValueError, match="snapshot is for"):
        read_snapshot(path, ConfigurationBasis(2, 4))
