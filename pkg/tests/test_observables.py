import itertools
import math

import numpy as np
import pytest

from bosonwalk.observables import (
    ObservableSchedule,
    compute_record,
    config_probability,
    counting_statistics,
    detect_regime_change,
    g2,
    g2_matrix,
    occupancy_weight,
    phase_space,
    phase_space_table,
    vertex_density,
    vertex_moment,
)
from bosonwalk.statespace import AmplitudeTable, ConfigurationBasis, normalize


@pytest.fixture
def walk_init():
    basis = ConfigurationBasis(12, 10)
    n1 = (0, 0, 12, 0, 0, 0, 0, 0, 0, 0)
    n2 = (0, 0, 0, 0, 12, 0, 0, 0, 0, 0)
    _, table = normalize(
        AmplitudeTable.from_terms(basis, 2, [(1, n1, -1j), (2, n2, 1.0)])
    )
    return basis, table, n1, n2


def random_state(n, m, d=2, seed=0):
    rng = np.random.default_rng(seed)
    basis = ConfigurationBasis(n, m)
    table = AmplitudeTable(basis, d)
    table.amps[:] = rng.normal(size=(d, basis.dimension)) + 1j * rng.normal(
        size=(d, basis.dimension)
    )
    _, table = normalize(table)
    return table


def test_config_probability_initial_state(walk_init):
    basis, table, n1, n2 = walk_init
    assert config_probability(table, basis.rank(n1)) == pytest.approx(0.5, abs=1e-15)
    assert config_probability(table, basis.rank(n2)) == pytest.approx(0.5, abs=1e-15)
    assert config_probability(table, 0) == 0.0  # unreached configuration


def test_config_probability_single_entry():
    basis = ConfigurationBasis(2, 2)
    _, table = normalize(AmplitudeTable.from_terms(basis, 2, [(1, (1, 1), 2.0)]))
    assert config_probability(table, basis.rank((1, 1))) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        config_probability(table, 3)


def test_vertex_moment_initial_state(walk_init):
    _, table, _, _ = walk_init
    assert vertex_moment(table, 3, 1) == pytest.approx(6.0, rel=1e-15)
    for q in (1, 2, 3):
        assert vertex_moment(table, 1, q) == 0.0
    with pytest.raises(ValueError):
        vertex_moment(table, 3, 0)
    with pytest.raises(ValueError):
        vertex_moment(table, 11, 1)


def test_density_sums_to_particle_count():
    table = random_state(3, 5, seed=1)
    assert vertex_density(table).sum() == pytest.approx(3.0, abs=1e-9)


def test_variance_non_negative():
    for seed in range(5):
        table = random_state(4, 4, seed=seed)
        for vertex in range(1, 5):
            var = vertex_moment(table, vertex, 2) - vertex_moment(table, vertex, 1) ** 2
            assert var > -1e-12


def test_g2_number_state():
    basis = ConfigurationBasis(12, 10)
    occ = tuple(12 if v == 4 else 0 for v in range(1, 11))
    _, table = normalize(AmplitudeTable.from_terms(basis, 2, [(1, occ, 1.0)]))
    assert g2(table, 4, 4) == pytest.approx(11.0 / 12.0, rel=1e-12)
    # Any pair touching an unoccupied vertex is undefined.
    assert math.isnan(g2(table, 1, 4))
    assert math.isnan(g2(table, 1, 2))


def test_g2_symmetry_and_moment_consistency():
    table = random_state(4, 5, seed=3)
    matrix = g2_matrix(table)
    assert np.allclose(matrix, matrix.T, atol=1e-12, equal_nan=True)
    for vertex in range(1, 6):
        mean = vertex_moment(table, vertex, 1)
        second = vertex_moment(table, vertex, 2)
        assert matrix[vertex - 1, vertex - 1] == pytest.approx(
            (second - mean) / mean**2, rel=1e-12
        )


def test_occupancy_weight_values():
    assert occupancy_weight(12, 12, 10) == pytest.approx(1.0 / 293930.0, rel=1e-15)
    assert occupancy_weight(0, 12, 10) == pytest.approx(125970.0 / 293930.0, rel=1e-15)
    with pytest.raises(ValueError):
        occupancy_weight(13, 12, 10)


def test_counting_initial_state(walk_init):
    _, table, _, _ = walk_init
    stats = counting_statistics(table, 3)
    assert stats.histogram[12] == pytest.approx(0.5, abs=1e-15)
    assert stats.histogram[0] == pytest.approx(0.5, abs=1e-15)
    assert stats.histogram[1:12].sum() == 0.0
    expected = 0.5 * (1.0 / 293930.0) / 10.0
    assert stats.weighted[12] == pytest.approx(expected, rel=1e-12)


def test_counting_histogram_sums_to_one():
    table = random_state(3, 4, seed=5)
    for vertex in range(1, 5):
        stats = counting_statistics(table, vertex)
        assert stats.histogram.sum() == pytest.approx(1.0, abs=1e-12)
        assert (stats.weighted >= 0).all()


def test_counting_unrestricted_reading():
    table = random_state(3, 4, seed=6)
    stats = counting_statistics(table, 2, unrestricted=True)
    envelope = np.array([occupancy_weight(n, 3, 4) / 4 for n in range(4)])
    assert np.allclose(stats.weighted, envelope, atol=1e-15)


def brute_phase_space(table, mode, n_modes):
    """Direct sum over explicitly enumerated mode compositions."""
    def w(n):
        return 1.0 if n <= 1 else (math.factorial(n) / float(n**n)) ** 2

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for tail in compositions(total - head, parts - 1):
                yield (head,) + tail

    p = table.config_weights()
    occ = table.basis.occupations
    x = y = e = 0.0
    for l in range(table.basis.dimension):
        if p[l] == 0.0:
            continue
        for a in range(1, table.n_vertices + 1):
            n = int(occ[l, a - 1])
            phi = 2.0 * math.pi * mode / n_modes
            for comp in compositions(n, n_modes):
                x += p[l] * w(n) * math.cos(phi * a)
                y += p[l] * w(n) * math.sin(phi * a)
                e += p[l] * w(n) * (comp[mode - 1] + 0.5 - math.cos(2 * phi * a))
    return x, y, e


def test_phase_space_single_walker_closed_form():
    basis = ConfigurationBasis(1, 2)
    _, table = normalize(AmplitudeTable.from_terms(basis, 2, [(1, (1, 0), 1.0)]))
    x, p, e = phase_space(table, 1)
    assert x == pytest.approx(2.0, abs=1e-12)
    # phi is a multiple of 2*pi for every vertex, so the momentum vanishes.
    assert p == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n,m", [(1, 2), (2, 2), (2, 3), (3, 3)])
def test_phase_space_matches_composition_enumeration(n, m):
    table = random_state(n, m, seed=n * 10 + m)
    xs, ps, es = phase_space_table(table)
    for mode in range(1, n + 1):
        bx, bp, be = brute_phase_space(table, mode, n)
        assert xs[mode - 1] == pytest.approx(bx, abs=1e-12)
        assert ps[mode - 1] == pytest.approx(bp, abs=1e-12)
        assert es[mode - 1] == pytest.approx(be, abs=1e-12)


def test_phase_space_mode_range():
    basis = ConfigurationBasis(2, 2)
    _, table = normalize(AmplitudeTable.from_terms(basis, 2, [(1, (2, 0), 1.0)]))
    with pytest.raises(ValueError):
        phase_space(table, 3)


def test_regime_constant_series():
    report = detect_regime_change([(i, 7) for i in range(5)])
    assert report.change_step == 0
    assert report.terminal_values == (7,)


def test_regime_constructed_tail():
    values = [5, 9, 14, 20, 20, 21, 20, 21, 20, 21]
    report = detect_regime_change(list(enumerate(values)))
    assert report.change_step == 3  # the first 20 of the alternating tail
    assert report.terminal_values == (20, 21)


def test_regime_insufficient_evidence():
    report = detect_regime_change(
        [(0, 3), (1, 8), (2, 11), (3, 11), (4, 11), (5, 11)]
    )
    assert report.change_step == 2
    # A terminal stretch covering only the last three steps is not evidence.
    report = detect_regime_change([(0, 3), (1, 8), (2, 11), (3, 11), (4, 11)])
    assert report.change_step is None
    assert report.terminal_values == ()


def test_regime_truncation_invariance():
    tail = [146860, 147070] * 40
    series = list(enumerate([10, 200, 4000, 60000, 120000] + tail))
    full = detect_regime_change(series)
    assert full.change_step == 5
    for cut in range(full.change_step + 10, len(series)):
        truncated = detect_regime_change(series[:cut])
        assert truncated.change_step == full.change_step
        assert truncated.terminal_values == full.terminal_values


def test_regime_input_validation():
    with pytest.raises(ValueError):
        detect_regime_change([])
    with pytest.raises(ValueError):
        detect_regime_change([(0, 1), (0, 2)])


def test_schedule_and_record():
    schedule = ObservableSchedule(
        {"densities": "all", "g2": [0, 4], "effective_dimension": {"every": 2}}
    )
    assert set(schedule.families_at(0)) == {"densities", "g2", "effective_dimension"}
    assert set(schedule.families_at(3)) == {"densities"}
    assert set(schedule.families_at(4)) == {"densities", "g2", "effective_dimension"}
    assert schedule.validate_range(3) == ["g2: steps [4] outside 0..3"]
    with pytest.raises(ValueError, match="unknown observable family"):
        ObservableSchedule({"entropy": "all"})

    table = random_state(2, 3, seed=9)
    record = compute_record(table, 4, ("densities", "counting", "effective_dimension"))
    assert record.step == 4
    assert record.densities is not None and record.g2 is None
    assert len(record.counting) == 3
    assert record.counting_aggregate.histogram.sum() == pytest.approx(1.0, abs=1e-12)
    assert record.effective_dim > 0
