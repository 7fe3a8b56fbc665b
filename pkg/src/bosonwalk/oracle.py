"""Dense reference evolution for small instances.

Builds the full conditional-shift matrix over the d*D(N, M)-dimensional
(chirality, configuration) basis and evolves by explicit matrix-vector
products.  This path deliberately shares no code with the sparse kernel:
configurations are enumerated with itertools and indexed through a dict, and
edges are read straight off the GraphSpec, so agreement between the two
engines is evidence rather than tautology.

Guarded to d*D <= 5000; test scale only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .coin import CoinMatrix
from .graphs import GraphSpec
from .statespace import AmplitudeTable, ConfigurationBasis

__all__ = ["DenseOperator", "dense_step_matrix", "compare_evolution", "SIZE_GUARD"]

SIZE_GUARD = 5000


def _all_occupations(n_particles: int, n_vertices: int) -> list[tuple[int, ...]]:
    """Every way to place n_particles on n_vertices, first coordinate descending."""
    def spread(total, slots):
        if slots == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for tail in spread(total - head, slots - 1):
                yield (head,) + tail

    return list(spread(n_particles, n_vertices))


@dataclass
class DenseOperator:
    """Explicit conditional-shift matrix.

    ``matrix[(j * D + l1), (k * D + l)]`` is the amplitude factor for moving
    one particle along a component-k edge from configuration l to l1 while
    rotating chirality k into j.  ``index`` maps occupation tuples to their
    column block offset l.
    """

    coin_order: int
    configurations: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int]
    matrix: np.ndarray


def dense_step_matrix(graph: GraphSpec, coin: CoinMatrix, n_particles: int) -> DenseOperator:
    """Assemble the conditional shift as a dense matrix.

    Raises
    ------
    ValueError
        If d * D(N, M) exceeds the size guard, or dimensions disagree.
    """
    if graph.coin_order != coin.order:
        raise ValueError(
            f"graph coin order {graph.coin_order} != coin order {coin.order}"
        )
    configs = _all_occupations(n_particles, graph.n_vertices)
    dim = len(configs)
    total = graph.coin_order * dim
    if total > SIZE_GUARD:
        raise ValueError(
            f"dense operator dimension {total} exceeds the {SIZE_GUARD} guard"
        )
    index = {c: i for i, c in enumerate(configs)}
    d = graph.coin_order
    matrix = np.zeros((total, total), dtype=np.complex128)
    for k0, edges in enumerate(graph.components):
        for l, occ in enumerate(configs):
            for mu, nu in edges:
                if occ[mu - 1] == 0:
                    continue
                moved = list(occ)
                moved[mu - 1] -= 1
                moved[nu - 1] += 1
                l1 = index[tuple(moved)]
                factor = np.sqrt(occ[mu - 1] * (occ[nu - 1] + 1))
                for j in range(d):
                    matrix[j * dim + l1, k0 * dim + l] += coin.h[j, k0] * factor
    return DenseOperator(
        coin_order=d, configurations=configs, index=index, matrix=matrix
    )


def evolve_dense(op: DenseOperator, psi0: np.ndarray, steps: int) -> list[np.ndarray]:
    """Normalized dense states after 0..steps applications of ``op``."""
    dim = len(op.configurations)
    psi = psi0.astype(np.complex128)
    psi = psi / np.linalg.norm(psi)
    history = [psi.copy()]
    for _ in range(steps):
        psi = op.matrix @ psi
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            raise ValueError("dense state vanished")
        psi = psi / norm
        history.append(psi.copy())
    return history


def compare_evolution(
    graph: GraphSpec,
    coin: CoinMatrix,
    init_terms,
    steps: int,
    n_particles: int,
) -> float:
    """Max per-step sup-norm deviation between the sparse and dense engines.

    ``init_terms`` is the usual list of (chirality, occupations, amplitude);
    both paths start from it, normalize per step with the same rule, and are
    aligned entry-by-entry through occupation tuples (never through ranks, so
    the two indexing schemes stay independent).
    """
    from .evolution import apply_conditional_shift  # deferred: avoid cycle

    op = dense_step_matrix(graph, coin, n_particles)
    dim = len(op.configurations)
    d = graph.coin_order

    psi0 = np.zeros(d * dim, dtype=np.complex128)
    for chirality, occupations, amplitude in init_terms:
        psi0[(int(chirality) - 1) * dim + op.index[tuple(int(v) for v in occupations)]] += complex(amplitude)
    dense_history = evolve_dense(op, psi0, steps)

    basis = ConfigurationBasis(n_particles, graph.n_vertices)
    table = AmplitudeTable.from_terms(basis, d, init_terms)
    table.amps /= table.norm()

    # Alignment of the two layouts through occupation tuples.
    sparse_col = np.array(
        [op.index[tuple(int(v) for v in basis.occupations[l])]
         for l in range(basis.dimension)]
    )

    worst = 0.0
    for step in range(steps + 1):
        dense = dense_history[step].reshape(d, dim)
        aligned = np.zeros_like(dense)
        aligned[:, sparse_col] = table.amps
        worst = max(worst, float(np.max(np.abs(aligned - dense))))
        if step < steps:
            table = apply_conditional_shift(table, graph, coin)
            norm = table.norm()
            if norm == 0.0:
                raise ValueError("sparse state vanished")
            table.amps /= norm
    return worst
