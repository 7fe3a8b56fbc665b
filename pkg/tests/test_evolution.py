import math

import numpy as np
import pytest

from bosonwalk.coin import coin_matrix
from bosonwalk.evolution import (
    ObserverError,
    ShiftKernel,
    apply_conditional_shift,
    run,
)
from bosonwalk.graphs import build_named
from bosonwalk.statespace import (
    AmplitudeTable,
    ConfigurationBasis,
    normalize,
    read_snapshot,
)

S2 = 1.0 / math.sqrt(2.0)


def single_walker_table(basis, chirality, vertex):
    occ = tuple(1 if v == vertex else 0 for v in range(1, basis.n_vertices + 1))
    return AmplitudeTable.from_terms(basis, 2, [(chirality, occ, 1.0)])


def test_single_particle_step_on_triangle():
    # One walker on vertex 1 with chirality 1: component 1's edge 1->2 moves
    # it to vertex 2, and the coin splits the chirality with h[:, 1] weights.
    basis = ConfigurationBasis(1, 3)
    g = build_named("cycle", 3)
    table = single_walker_table(basis, 1, 1)
    out = apply_conditional_shift(table, g, coin_matrix(2))
    moved = basis.rank((0, 1, 0))
    assert out.amplitude(1, moved) == pytest.approx(S2, abs=1e-15)
    assert out.amplitude(2, moved) == pytest.approx(S2, abs=1e-15)
    assert out.entry_count == 2


def test_bosonic_factor_on_doubly_occupied_source():
    basis = ConfigurationBasis(2, 3)
    g = build_named("cycle", 3)
    table = AmplitudeTable.from_terms(basis, 2, [(1, (2, 0, 0), 1.0)])
    out = apply_conditional_shift(table, g, coin_matrix(2))
    target = basis.rank((1, 1, 0))
    assert out.amplitude(1, target) == pytest.approx(math.sqrt(2.0) * S2, abs=1e-14)
    assert out.amplitude(2, target) == pytest.approx(math.sqrt(2.0) * S2, abs=1e-14)


def test_vacuum_annihilation_contributes_nothing():
    basis = ConfigurationBasis(1, 3)
    g = build_named("cycle", 3)
    # Chirality 2 walks the transposed component; vertex 1's only outgoing
    # edge there is 1->3.
    table = single_walker_table(basis, 2, 1)
    out = apply_conditional_shift(table, g, coin_matrix(2))
    moved = basis.rank((0, 0, 1))
    chirality, rank, _ = out.entries()
    assert set(zip(chirality, rank)) == {(1, moved), (2, moved)}


def test_zero_particles_shift_to_zero_state():
    basis = ConfigurationBasis(0, 4)
    g = build_named("cycle", 4)
    table = AmplitudeTable.from_terms(basis, 2, [(1, (0, 0, 0, 0), 1.0)])
    out = apply_conditional_shift(table, g, coin_matrix(2))
    assert out.entry_count == 0
    with pytest.raises(ValueError):
        normalize(out)


def test_dimension_mismatches_rejected():
    basis = ConfigurationBasis(1, 3)
    table = single_walker_table(basis, 1, 1)
    with pytest.raises(ValueError, match="coin order"):
        apply_conditional_shift(table, build_named("cycle", 3), coin_matrix(3))
    with pytest.raises(ValueError, match="vertices"):
        ShiftKernel(build_named("cycle", 4), basis)


def test_run_zero_steps_returns_init():
    basis = ConfigurationBasis(2, 4)
    g = build_named("cycle", 4)
    _, init = normalize(AmplitudeTable.from_terms(basis, 2, [(1, (2, 0, 0, 0), 1.0)]))
    result = run(init, g, coin_matrix(2), 0)
    assert result.final is init
    assert result.reports == []


def test_norm_and_conservation_short_run():
    basis = ConfigurationBasis(2, 4)
    g = build_named("cycle", 4)
    _, init = normalize(
        AmplitudeTable.from_terms(basis, 2, [(1, (2, 0, 0, 0), -1j), (2, (0, 0, 2, 0), 1.0)])
    )
    seen = []

    def check(step, table):
        seen.append(step)
        assert abs(np.sum(np.abs(table.amps) ** 2) - 1.0) < 1e-12
        # Every stored configuration conserves the particle number.
        assert (table.basis.occupations.sum(axis=1) == 2).all()

    result = run(init, g, coin_matrix(2), 25, on_step=check)
    assert seen == list(range(26))
    assert all(r.entry_count >= r.effective_dim for r in result.reports)


def test_observer_failure_names_step():
    basis = ConfigurationBasis(1, 3)
    g = build_named("cycle", 3)
    _, init = normalize(single_walker_table(basis, 1, 1))

    def boom(step, table):
        if step == 3:
            raise RuntimeError("sensor fell off")

    with pytest.raises(ObserverError, match="step 3"):
        run(init, g, coin_matrix(2), 5, on_step=boom)


def test_thread_count_does_not_change_results():
    basis = ConfigurationBasis(3, 5)
    g = build_named("cycle", 5)
    _, init = normalize(
        AmplitudeTable.from_terms(basis, 2, [(1, (3, 0, 0, 0, 0), -1j), (2, (0, 0, 3, 0, 0), 1.0)])
    )
    r1 = run(init.copy(), g, coin_matrix(2), 30, threads=1)
    r4 = run(init.copy(), g, coin_matrix(2), 30, threads=4)
    assert r1.reports == r4.reports
    assert np.array_equal(r1.final.amps, r4.final.amps)


def test_double_coin_factor_changes_dynamics():
    basis = ConfigurationBasis(2, 4)
    g = build_named("cycle", 4)
    _, init = normalize(AmplitudeTable.from_terms(basis, 2, [(1, (2, 0, 0, 0), 1.0)]))
    plain = run(init.copy(), g, coin_matrix(2), 6)
    doubled = run(init.copy(), g, coin_matrix(2), 6, double_coin_factor=True)
    assert not np.allclose(plain.final.amps, doubled.final.amps)


def test_snapshot_resume_is_bit_exact(tmp_path):
    basis = ConfigurationBasis(3, 4)
    g = build_named("cycle", 4)
    _, init = normalize(
        AmplitudeTable.from_terms(basis, 2, [(1, (3, 0, 0, 0), -1j), (2, (0, 3, 0, 0), 1.0)])
    )
    full = run(init.copy(), g, coin_matrix(2), 12)
    part = run(
        init.copy(), g, coin_matrix(2), 6,
        snapshot_every=6, snapshot_dir=str(tmp_path),
    )
    table, step, _ = read_snapshot(tmp_path / "snapshot_step000006.npz", basis)
    assert step == 6
    assert np.array_equal(table.amps, part.final.amps)
    resumed = run(table, g, coin_matrix(2), 12, start_step=6)
    assert np.array_equal(resumed.final.amps, full.final.amps)
    assert resumed.reports == full.reports[6:]


def test_kernel_reuse_matches_fresh_kernel():
    basis = ConfigurationBasis(2, 5)
    g = build_named("cycle", 5)
    kernel = ShiftKernel(g, basis)
    table = AmplitudeTable.from_terms(basis, 2, [(1, (1, 1, 0, 0, 0), 1.0)])
    a = apply_conditional_shift(table, g, coin_matrix(2), kernel)
    b = apply_conditional_shift(table, g, coin_matrix(2))
    assert np.array_equal(a.amps, b.amps)
