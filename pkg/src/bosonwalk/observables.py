"""Observables of a normalized walk state.

Everything here is a pure function of an immutable state snapshot: vertex
densities and higher occupation moments, configuration probabilities, the
normal-ordered second-order correlation g2, per-vertex counting statistics
(bare occupancy histogram and the combinatorially weighted series), per-mode
phase-space coordinates, and the regime-change detector for the effective-
dimension time series.

Conventions: vertices and chiralities are 1-based, configuration ranks and
steps 0-based; ``math.nan`` is the undefined-marker for g2 at vanishing
density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statespace import (
    EFFECTIVE_DIM_TOL,
    AmplitudeTable,
    effective_dimension,
    space_dimension,
)

__all__ = [
    "config_probability",
    "probabilities",
    "vertex_density",
    "vertex_moment",
    "moment_table",
    "g2",
    "g2_matrix",
    "occupancy_weight",
    "CountingStatistics",
    "counting_statistics",
    "phase_space",
    "phase_space_table",
    "RegimeChangeReport",
    "detect_regime_change",
    "ObservableRecord",
    "ObservableSchedule",
    "compute_record",
    "OBSERVABLE_FAMILIES",
    "DEFAULT_MOMENT_ORDERS",
]

G2_DENOMINATOR_FLOOR = 1e-15
DEFAULT_MOMENT_ORDERS = (1, 2, 3)

OBSERVABLE_FAMILIES = (
    "densities",
    "moments",
    "g2",
    "counting",
    "phase_space",
    "effective_dimension",
)


def probabilities(table: AmplitudeTable) -> np.ndarray:
    """Configuration probabilities P_l = sum_j |C_jl|^2, length D.

    Assumes a normalized table, so the result sums to 1.
    """
    return table.config_weights()


def config_probability(table: AmplitudeTable, rank: int) -> float:
    """Probability of the configuration at ``rank``."""
    if not 0 <= rank < table.basis.dimension:
        raise ValueError(f"rank {rank} out of 0..{table.basis.dimension - 1}")
    return float(np.sum(np.abs(table.amps[:, rank]) ** 2))


def vertex_density(table: AmplitudeTable) -> np.ndarray:
    """Expected occupation per vertex, length M; sums to N."""
    p = probabilities(table)
    return p @ table.basis.occupations.astype(np.float64)


def vertex_moment(table: AmplitudeTable, vertex: int, order: int) -> float:
    """q-th moment of the occupation number on a vertex.

    ``order`` must be >= 1; the trivial q=0 case is rejected to avoid silent
    misuse.
    """
    if not 1 <= vertex <= table.n_vertices:
        raise ValueError(f"vertex {vertex} out of 1..{table.n_vertices}")
    if order < 1:
        raise ValueError("moment order must be >= 1")
    p = probabilities(table)
    n = table.basis.occupations[:, vertex - 1].astype(np.float64)
    return float(np.sum(p * n**order))


def moment_table(table: AmplitudeTable, orders=DEFAULT_MOMENT_ORDERS) -> np.ndarray:
    """Moments for all vertices; shape (len(orders), M)."""
    p = probabilities(table)
    occ = table.basis.occupations.astype(np.float64)
    return np.stack([p @ occ**q for q in orders])


def g2(table: AmplitudeTable, vertex_a: int, vertex_b: int) -> float:
    """Normal-ordered second-order spatial correlation between two vertices.

    ``<n_a (n_b - delta_ab)> / (<n_a><n_b>)``; returns ``nan`` (the
    undefined-marker) when the denominator is below 1e-15.
    """
    m = table.n_vertices
    if not (1 <= vertex_a <= m and 1 <= vertex_b <= m):
        raise ValueError(f"vertex pair ({vertex_a}, {vertex_b}) out of 1..{m}")
    return float(g2_matrix(table)[vertex_a - 1, vertex_b - 1])


def g2_matrix(table: AmplitudeTable) -> np.ndarray:
    """Full M x M g2 matrix; ``nan`` marks undefined pairs."""
    p = probabilities(table)
    occ = table.basis.occupations.astype(np.float64)
    density = p @ occ
    second = occ.T @ (occ * p[:, None])
    numerator = second - np.diag(density)
    denominator = np.outer(density, density)
    out = np.full_like(denominator, np.nan)
    defined = denominator >= G2_DENOMINATOR_FLOOR
    out[defined] = numerator[defined] / denominator[defined]
    return out


def occupancy_weight(n: int, n_particles: int, n_vertices: int) -> float:
    """Combinatorial weight of finding exactly n bosons on a fixed vertex.

    D(N - n, M - 1) / D(N, M): the fraction of configurations that place n
    particles on the vertex, among all ways of distributing N over M.
    """
    if not 0 <= n <= n_particles:
        raise ValueError(f"occupancy {n} out of 0..{n_particles}")
    if n_vertices == 1:
        return 1.0 if n == n_particles else 0.0
    return space_dimension(n_particles - n, n_vertices - 1) / space_dimension(
        n_particles, n_vertices
    )


@dataclass
class CountingStatistics:
    """Distribution over occupation values n = 0..N for one vertex.

    ``histogram[n]`` is the bare probability of observing n bosons on the
    vertex (sums to 1); ``weighted[n]`` additionally carries the
    combinatorial envelope D(N-n, M-1) / (M * D(N, M)), the interpretation
    used for the counting-statistics series (it does not sum to 1 by
    construction).
    """

    vertex: int
    histogram: np.ndarray
    weighted: np.ndarray


def counting_statistics(
    table: AmplitudeTable, vertex: int, *, unrestricted: bool = False
) -> CountingStatistics:
    """Counting statistics for one vertex.

    By default the weighted series ties the amplitude sum to the occupancy:
    weighted[n] = histogram[n] * envelope(n).  With ``unrestricted=True``
    the literal envelope reading is used instead (total weight 1 times the
    envelope, independent of how the state distributes over n); kept for
    comparison.
    """
    m = table.n_vertices
    n_particles = table.n_particles
    if not 1 <= vertex <= m:
        raise ValueError(f"vertex {vertex} out of 1..{m}")
    p = probabilities(table)
    occ = table.basis.occupations[:, vertex - 1]
    histogram = np.bincount(occ, weights=p, minlength=n_particles + 1)
    envelope = np.array(
        [occupancy_weight(n, n_particles, m) / m for n in range(n_particles + 1)]
    )
    if unrestricted:
        weighted = float(p.sum()) * envelope
    else:
        weighted = histogram * envelope
    return CountingStatistics(vertex=vertex, histogram=histogram, weighted=weighted)


def _mode_fold_tables(n_particles: int, n_modes: int):
    """Occupancy-indexed lookup tables for the phase-space closed forms.

    For occupancy n the x/p series needs W(n) * Cmp(n, n_modes) and the
    energy series needs W(n) * sum_m m * Cmp(n - m, n_modes - 1) plus the
    same W(n) * Cmp(n, n_modes) factor, where W(n) = (n!/n^n)^2 squashes
    high occupancies and Cmp counts weak compositions (marginalizing the
    unpinned modes).
    """

    def cmp_count(n: int, parts: int) -> int:
        if parts == 0:
            return 1 if n == 0 else 0
        return math.comb(n + parts - 1, n)

    def w(n: int) -> float:
        if n <= 1:
            return 1.0
        return (math.factorial(n) / float(n**n)) ** 2

    max_n = n_particles
    wc = np.zeros(max_n + 1)
    wm = np.zeros(max_n + 1)
    for n in range(max_n + 1):
        wc[n] = w(n) * cmp_count(n, n_modes)
        wm[n] = w(n) * sum(
            m * cmp_count(n - m, n_modes - 1) for m in range(n + 1)
        )
    return wc, wm


def phase_space(table: AmplitudeTable, mode: int, n_modes: int | None = None):
    """Phase-space coordinates (x, p, E) of one mode.

    Mode phases are phi_eta = 2*pi*eta/n_modes and vertex coordinates are
    the labels x_alpha = alpha; the sum over per-vertex mode occupations is
    folded into closed form by pinning the requested mode and marginalizing
    the rest (see :func:`_mode_fold_tables`).  ``n_modes`` defaults to the
    particle number.
    """
    xs, ps, es = phase_space_table(table, n_modes)
    count = len(xs)
    if not 1 <= mode <= count:
        raise ValueError(f"mode {mode} out of 1..{count}")
    return float(xs[mode - 1]), float(ps[mode - 1]), float(es[mode - 1])


def phase_space_table(table: AmplitudeTable, n_modes: int | None = None):
    """(x, p, E) arrays over modes 1..n_modes."""
    n_particles = table.n_particles
    if n_modes is None:
        n_modes = n_particles
    if n_modes < 1:
        raise ValueError("need at least one mode")
    wc, wm = _mode_fold_tables(n_particles, n_modes)
    p = probabilities(table)
    occ = table.basis.occupations
    # u[alpha] carries the x/p summand, v[alpha] the energy's m-weighted part.
    u = p @ wc[occ]
    v = p @ wm[occ]
    alpha = np.arange(1, table.n_vertices + 1, dtype=np.float64)
    eta = np.arange(1, n_modes + 1, dtype=np.float64)
    phase = 2.0 * np.pi * np.outer(eta, alpha) / n_modes
    xs = np.cos(phase) @ u
    ps = np.sin(phase) @ u
    es = v.sum() + (0.5 - np.cos(2.0 * phase)) @ u
    return xs, ps, es


@dataclass
class RegimeChangeReport:
    """Result of scanning an effective-dimension series for saturation.

    ``change_step`` is None when the series shows no settled terminal
    regime (the no-change marker); otherwise every dimension at steps >=
    change_step lies in ``terminal_values`` (at most two values).
    """

    change_step: int | None
    terminal_values: tuple[int, ...]
    rule: str = "terminal-two-value-suffix"


def detect_regime_change(dims) -> RegimeChangeReport:
    """Find the earliest step after which the dimension series is terminal.

    The terminal regime is the longest suffix whose value set has size <= 2,
    required (when size 2) to show both values at least twice.  A suffix
    covering only the final 3 or fewer steps is insufficient evidence and
    yields the no-change marker.

    Parameters
    ----------
    dims : sequence of (step, dimension)
        Steps must be strictly increasing.
    """
    items = [(int(s), int(v)) for s, v in dims]
    if not items:
        raise ValueError("empty dimension series")
    steps = [s for s, _ in items]
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be strictly increasing")
    values = [v for _, v in items]
    counts: dict[int, int] = {}
    earliest = None
    for i in range(len(values) - 1, -1, -1):
        counts[values[i]] = counts.get(values[i], 0) + 1
        if len(counts) > 2:
            break
        if len(counts) == 1 or min(counts.values()) >= 2:
            if len(values) - i >= 4:
                earliest = i
    if earliest is None:
        return RegimeChangeReport(change_step=None, terminal_values=())
    terminal = tuple(sorted(set(values[earliest:])))
    return RegimeChangeReport(change_step=steps[earliest], terminal_values=terminal)


@dataclass
class ObservableRecord:
    """Bundle of scheduled observables at one step; unscheduled fields are None."""

    step: int
    densities: np.ndarray | None = None
    moments: np.ndarray | None = None
    moment_orders: tuple[int, ...] = DEFAULT_MOMENT_ORDERS
    g2: np.ndarray | None = None
    counting: list[CountingStatistics] | None = None
    counting_aggregate: CountingStatistics | None = None
    phase_space: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    effective_dim: int | None = None


@dataclass
class ObservableSchedule:
    """Which observable families to evaluate at which steps.

    Each family maps to either the string ``"all"``, an explicit step
    collection, or ``{"every": k}`` meaning steps divisible by k (plus step
    0).  Unknown family names are rejected.
    """

    families: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in self.families:
            if name not in OBSERVABLE_FAMILIES:
                raise ValueError(
                    f"unknown observable family {name!r}; "
                    f"expected one of {OBSERVABLE_FAMILIES}"
                )

    @classmethod
    def all_steps(cls, families=OBSERVABLE_FAMILIES):
        return cls({name: "all" for name in families})

    def scheduled_steps(self, name: str, last_step: int) -> set[int]:
        rule = self.families.get(name)
        if rule is None:
            return set()
        if rule == "all":
            return set(range(0, last_step + 1))
        if isinstance(rule, dict):
            every = int(rule["every"])
            return {0, *range(every, last_step + 1, every)}
        return {int(s) for s in rule}

    def families_at(self, step: int) -> tuple[str, ...]:
        out = []
        for name, rule in self.families.items():
            if rule == "all":
                out.append(name)
            elif isinstance(rule, dict):
                if step == 0 or step % int(rule["every"]) == 0:
                    out.append(name)
            elif step in {int(s) for s in rule}:
                out.append(name)
        return tuple(out)

    def validate_range(self, last_step: int) -> list[str]:
        """Schedule steps must lie in 0..last_step; returns violations."""
        problems = []
        for name, rule in self.families.items():
            if rule == "all" or isinstance(rule, dict):
                continue
            bad = [int(s) for s in rule if not 0 <= int(s) <= last_step]
            if bad:
                problems.append(f"{name}: steps {bad} outside 0..{last_step}")
        return problems


def compute_record(
    table: AmplitudeTable,
    step: int,
    families,
    *,
    effective_dim_tol: float = EFFECTIVE_DIM_TOL,
    counting_unrestricted: bool = False,
    phase_space_modes: int | None = None,
    moment_orders=DEFAULT_MOMENT_ORDERS,
) -> ObservableRecord:
    """Evaluate the requested observable families on one normalized state."""
    record = ObservableRecord(step=step, moment_orders=tuple(moment_orders))
    for name in families:
        if name == "densities":
            record.densities = vertex_density(table)
        elif name == "moments":
            record.moments = moment_table(table, moment_orders)
        elif name == "g2":
            record.g2 = g2_matrix(table)
        elif name == "counting":
            record.counting = [
                counting_statistics(table, v, unrestricted=counting_unrestricted)
                for v in range(1, table.n_vertices + 1)
            ]
            hist = np.mean([c.histogram for c in record.counting], axis=0)
            weighted = np.mean([c.weighted for c in record.counting], axis=0)
            record.counting_aggregate = CountingStatistics(
                vertex=0, histogram=hist, weighted=weighted
            )
        elif name == "phase_space":
            record.phase_space = phase_space_table(table, phase_space_modes)
        elif name == "effective_dimension":
            record.effective_dim = effective_dimension(table, effective_dim_tol)
        else:
            raise ValueError(f"unknown observable family {name!r}")
    return record
