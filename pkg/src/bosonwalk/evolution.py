"""Conditional-shift evolution of the walk state.

One step moves a single boson along one directed edge, in superposition over
all choices: an input entry (chirality k, configuration l) contributes
``h[j, k] * C * sqrt(n_mu * (n_nu + 1))`` to every output key (j, l1) where
(mu -> nu) runs over the edges of component k with an occupied source and l1
is the configuration with that one particle moved.  The shift does not
preserve the norm, so every step ends with a normalization (and a compaction
that zeroes amplitudes below the drop threshold).

Determinism contract: contributions are gathered per (component, edge) job -
workers may compute the gathers in parallel - and scattered into the output
in a fixed job order; within one edge the target ranks are distinct, so the
floating-point accumulation order is independent of the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coin import CoinMatrix
from .graphs import GraphSpec
from .statespace import (
    DROP_THRESHOLD,
    EFFECTIVE_DIM_TOL,
    AmplitudeTable,
    ConfigurationBasis,
    effective_dimension,
    write_snapshot,
)

__all__ = [
    "ShiftKernel",
    "StepReport",
    "RunResult",
    "ObserverError",
    "apply_conditional_shift",
    "run",
]


class ObserverError(RuntimeError):
    """A scheduled observer raised; the message names the failing step."""


@dataclass
class StepReport:
    """Per-step instrumentation.

    ``wall_time`` is informational and excluded from equality so that runs
    with different worker counts compare bit-identical.
    """

    step: int
    pre_norm: float
    norm_constant: float
    entry_count: int
    effective_dim: int
    wall_time: float = field(default=0.0, compare=False)


class ShiftKernel:
    """Precomputed single-particle move tables for one (graph, basis) pair.

    For every component k and every directed edge (mu -> nu) the kernel
    stores the ranks with an occupied source, the rank reached by moving one
    particle mu -> nu, and the bosonic factor sqrt(n_mu * (n_nu + 1)).
    """

    def __init__(self, graph: GraphSpec, basis: ConfigurationBasis):
        if graph.n_vertices != basis.n_vertices:
            raise ValueError(
                f"graph has {graph.n_vertices} vertices, basis {basis.n_vertices}"
            )
        self.graph = graph
        self.basis = basis
        occ = basis.occupations
        jobs = []
        for k0, edges in enumerate(graph.components):
            for mu, nu in edges:
                src_occ = occ[:, mu - 1]
                valid = np.nonzero(src_occ > 0)[0].astype(np.int64)
                moved = occ[valid].astype(np.int64)
                moved[:, mu - 1] -= 1
                moved[:, nu - 1] += 1
                tgt = basis.rank_array(moved)
                factor = np.sqrt(
                    occ[valid, mu - 1].astype(np.float64)
                    * (occ[valid, nu - 1].astype(np.float64) + 1.0)
                )
                jobs.append((k0, valid, tgt, factor))
        self._jobs = jobs

    def component_sums(self, amps: np.ndarray, threads: int = 1) -> np.ndarray:
        """Per-component scatter of moved amplitudes; shape (d, D).

        Row k is sum over component-k edges of factor * amps[k, src]
        accumulated at the target ranks.
        """
        d, dim = amps.shape
        sums = np.zeros((d, dim), dtype=np.complex128)

        def gather(job):
            k0, src, _tgt, factor = job
            return factor * amps[k0, src]

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                values = list(pool.map(gather, self._jobs))
        else:
            values = [gather(job) for job in self._jobs]
        # Fixed job order; within a job the targets are distinct, so the
        # fancy-indexed += below is collision-free and order-independent.
        for (k0, _src, tgt, _factor), vals in zip(self._jobs, values):
            sums[k0, tgt] += vals
        return sums


def apply_conditional_shift(
    table: AmplitudeTable,
    graph: GraphSpec,
    coin: CoinMatrix,
    kernel: ShiftKernel | None = None,
    *,
    double_coin_factor: bool = False,
    threads: int = 1,
) -> AmplitudeTable:
    """One unnormalized conditional-shift application.

    Parameters
    ----------
    table : AmplitudeTable
        Input state (normalized by convention; not enforced).
    graph, coin : GraphSpec, CoinMatrix
        Must agree with the table on d and M.
    kernel : ShiftKernel, optional
        Reused move tables; built on the fly when omitted.
    double_coin_factor : bool
        Apply the coin entry twice per contribution (the literal reading of
        the printed recursion, kept for comparison); default applies it
        exactly once.
    threads : int
        Worker count for the gather stage; does not affect the result.

    Returns
    -------
    AmplitudeTable
        Unnormalized output state; callers must normalize before computing
        observables.
    """
    if graph.coin_order != coin.order:
        raise ValueError(
            f"graph coin order {graph.coin_order} != coin order {coin.order}"
        )
    if table.coin_order != coin.order:
        raise ValueError(
            f"state coin order {table.coin_order} != coin order {coin.order}"
        )
    if kernel is None:
        kernel = ShiftKernel(graph, table.basis)
    elif kernel.graph is not graph and kernel.graph != graph:
        raise ValueError("kernel was built for a different graph")
    sums = kernel.component_sums(table.amps, threads=threads)
    h = coin.h * coin.h if double_coin_factor else coin.h
    out = AmplitudeTable(table.basis, table.coin_order)
    for j in range(coin.order):
        for k in range(coin.order):
            out.amps[j] += h[j, k] * sums[k]
    return out


@dataclass
class RunResult:
    final: AmplitudeTable
    reports: list[StepReport]
    records: list


def run(
    init: AmplitudeTable,
    graph: GraphSpec,
    coin: CoinMatrix,
    steps: int,
    schedule=None,
    *,
    drop_threshold: float = DROP_THRESHOLD,
    effective_dim_tol: float = EFFECTIVE_DIM_TOL,
    double_coin_factor: bool = False,
    threads: int = 1,
    start_step: int = 0,
    on_step=None,
    snapshot_every: int | None = None,
    snapshot_dir=None,
    snapshot_meta: dict | None = None,
    record_options: dict | None = None,
) -> RunResult:
    """Drive ``steps - start_step`` conditional-shift steps.

    Each step applies the shift, normalizes, compacts, and reports.  The
    state passed in is treated as the (already normalized) state at
    ``start_step``; scheduled observables are evaluated on the normalized
    state at every requested step, including ``start_step`` itself.

    Parameters
    ----------
    schedule : ObservableSchedule, optional
        Which observable families to record at which steps (see
        :mod:`bosonwalk.observables`).  None records nothing.
    on_step : callable, optional
        ``on_step(step, table)`` invoked after each step (and once for the
        initial state); an exception aborts the run as ObserverError naming
        the step.
    snapshot_every : int, optional
        Write a resumable snapshot to ``snapshot_dir`` at every multiple of
        this step count; resuming from one reproduces the uninterrupted run
        bit-exactly.
    record_options : dict, optional
        Extra keyword arguments for the observable evaluation (counting
        interpretation flag, phase-space mode count).

    Returns
    -------
    RunResult
        Final state, per-step reports, and the observable record series.
    """
    if steps < start_step:
        raise ValueError(f"steps {steps} < start step {start_step}")
    if snapshot_every is not None and snapshot_every < 1:
        raise ValueError("snapshot interval must be >= 1")

    from .observables import compute_record  # local import; no cycle at call time

    kernel = ShiftKernel(graph, init.basis)
    state = init
    reports: list[StepReport] = []
    records: list = []
    snapshots_written: list[tuple[int, str]] = []
    options = record_options or {}

    def observe(step: int, table: AmplitudeTable):
        if on_step is not None:
            try:
                on_step(step, table)
            except Exception as exc:
                raise ObserverError(f"observer failed at step {step}: {exc}") from exc
        if schedule is not None:
            families = schedule.families_at(step)
            if families:
                records.append(
                    compute_record(
                        table,
                        step,
                        families,
                        effective_dim_tol=effective_dim_tol,
                        **options,
                    )
                )

    observe(start_step, state)
    for step in range(start_step + 1, steps + 1):
        began = time.perf_counter()
        shifted = apply_conditional_shift(
            state, graph, coin, kernel,
            double_coin_factor=double_coin_factor, threads=threads,
        )
        pre_norm = shifted.norm()
        if pre_norm == 0.0:
            raise ValueError(
                f"state vanished at step {step}; check the drop threshold"
            )
        shifted.amps /= pre_norm
        shifted.norm_constant = pre_norm
        shifted.compact(drop_threshold)
        state = shifted
        reports.append(
            StepReport(
                step=step,
                pre_norm=pre_norm,
                norm_constant=pre_norm,
                entry_count=state.entry_count,
                effective_dim=effective_dimension(state, effective_dim_tol),
                wall_time=time.perf_counter() - began,
            )
        )
        observe(step, state)
        if (
            snapshot_every is not None
            and snapshot_dir is not None
            and step % snapshot_every == 0
        ):
            path = f"{snapshot_dir}/snapshot_step{step:06d}.npz"
            write_snapshot(path, state, step, meta=snapshot_meta)
            snapshots_written.append((step, path))

    result = RunResult(final=state, reports=reports, records=records)
    result.snapshots = snapshots_written
    return result
