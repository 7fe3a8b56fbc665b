"""Bosonic configuration space: enumeration, ranking, and the amplitude table.

A configuration is an occupation vector n = (n_1..n_M) of non-negative
integers summing to the fixed particle number N.  Configurations are ordered
lexicographically with the first coordinate descending, so rank 0 is
(N, 0, ..., 0) and rank D-1 is (0, ..., 0, N); ranks are computed in O(M) by
prefix-count sums (combinatorial number system).

The walk state is a chirality-resolved table of complex amplitudes over this
basis.  Storage is a dense (d, D) array (the run scale keeps d*D small), but
the keyed view used by snapshots and observables exposes only the nonzero
entries sorted by (chirality, rank).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "space_dimension",
    "config_rank",
    "config_unrank",
    "ConfigurationBasis",
    "AmplitudeTable",
    "normalize",
    "effective_dimension",
    "write_snapshot",
    "read_snapshot",
    "DROP_THRESHOLD",
    "EFFECTIVE_DIM_TOL",
]

# Compaction drops amplitudes with modulus below this (absolute,
# post-normalization); the effective dimension counts configurations whose
# weight (summed modulus squared over chiralities) exceeds the tolerance.
# Both sit far below the rounding floor accumulated over a 400-step run and
# are overridable through the run configuration.
DROP_THRESHOLD = 1e-14
EFFECTIVE_DIM_TOL = 1e-24


def space_dimension(n_particles: int, n_vertices: int) -> int:
    """Number of occupation vectors of n_particles bosons on n_vertices.

    Exact integer binomial(M + N - 1, N); no overflow for any practical
    size (Python integers are unbounded).

    Examples
    --------
    >>> space_dimension(12, 10)
    293930
    >>> space_dimension(0, 5)
    1
    """
    if n_vertices < 1:
        raise ValueError(f"need at least one vertex, got {n_vertices}")
    if n_particles < 0:
        raise ValueError(f"particle count must be >= 0, got {n_particles}")
    return math.comb(n_vertices + n_particles - 1, n_particles)


def config_rank(occupations) -> int:
    """Rank of an occupation vector in the descending-first-coordinate order.

    The particle number and vertex count are inferred from the vector; the
    result lies in 0..D(N, M)-1.
    """
    occ = [int(v) for v in occupations]
    if any(v < 0 for v in occ):
        raise ValueError(f"occupations must be non-negative, got {occ}")
    m = len(occ)
    rank = 0
    remaining = sum(occ)
    for a in range(m - 1):
        parts_left = m - a - 1
        t = remaining - occ[a] - 1
        if t >= 0:
            rank += math.comb(t + parts_left, parts_left)
        remaining -= occ[a]
    return rank


def config_unrank(rank: int, n_particles: int, n_vertices: int) -> tuple[int, ...]:
    """Occupation vector at ``rank``; inverse of :func:`config_rank`."""
    dim = space_dimension(n_particles, n_vertices)
    if not 0 <= rank < dim:
        raise ValueError(f"rank {rank} out of range 0..{dim - 1}")
    occ = []
    remaining = n_particles
    for a in range(n_vertices - 1):
        parts_left = n_vertices - a - 1
        for c in range(remaining, -1, -1):
            block = math.comb(remaining - c + parts_left - 1, parts_left - 1)
            if rank < block:
                occ.append(c)
                remaining -= c
                break
            rank -= block
    occ.append(remaining)
    return tuple(occ)


@lru_cache(maxsize=None)
def _composition_block(n: int, parts: int) -> np.ndarray:
    """All weak compositions of n into ``parts`` parts, descending lex order."""
    if parts == 1:
        return np.array([[n]], dtype=np.int32)
    rows = []
    for c in range(n, -1, -1):
        tail = _composition_block(n - c, parts - 1)
        head = np.full((tail.shape[0], 1), c, dtype=np.int32)
        rows.append(np.hstack([head, tail]))
    return np.ascontiguousarray(np.vstack(rows))


class ConfigurationBasis:
    """The full ranked configuration space for fixed (N, M).

    Attributes
    ----------
    n_particles, n_vertices : int
    dimension : int
        D(N, M).
    occupations : np.ndarray
        (D, M) int32 array, row ``l`` = configuration of rank ``l``.
    """

    def __init__(self, n_particles: int, n_vertices: int):
        self.n_particles = int(n_particles)
        self.n_vertices = int(n_vertices)
        self.dimension = space_dimension(n_particles, n_vertices)
        occ = _composition_block(self.n_particles, self.n_vertices).copy()
        occ.setflags(write=False)
        self.occupations = occ
        # Prefix-count table for vectorized ranking:
        # counts[t, k] = binomial(t + k, k) = number of compositions of <= t
        # into k + 1 parts.  int64 is exact as long as D fits, which the
        # engine sizes guarantee.
        n, m = self.n_particles, self.n_vertices
        counts = np.zeros((max(n, 1), m), dtype=np.int64)
        for t in range(max(n, 1)):
            for k in range(m):
                counts[t, k] = math.comb(t + k, k)
        self._counts = counts

    def rank(self, occupations) -> int:
        occ = tuple(int(v) for v in occupations)
        if len(occ) != self.n_vertices:
            raise ValueError(
                f"expected {self.n_vertices} occupations, got {len(occ)}"
            )
        if sum(occ) != self.n_particles:
            raise ValueError(
                f"occupations sum to {sum(occ)}, expected {self.n_particles}"
            )
        return config_rank(occ)

    def unrank(self, rank: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.occupations[rank])

    def rank_array(self, occ: np.ndarray) -> np.ndarray:
        """Vectorized rank of each row of an (n, M) occupation matrix."""
        occ = np.asarray(occ, dtype=np.int64)
        m = self.n_vertices
        if occ.shape[1] != m:
            raise ValueError(f"expected {m} columns, got {occ.shape[1]}")
        if m == 1:
            return np.zeros(occ.shape[0], dtype=np.int64)
        remaining = self.n_particles - np.cumsum(occ, axis=1) + occ
        t = remaining[:, : m - 1] - occ[:, : m - 1] - 1
        parts_left = np.arange(m - 1, 0, -1)
        terms = np.where(t >= 0, self._counts[np.maximum(t, 0), parts_left], 0)
        return terms.sum(axis=1)


class AmplitudeTable:
    """Chirality-resolved complex amplitudes over a configuration basis.

    Entries are keyed by (chirality j in 1..d, configuration rank l in
    0..D-1).  ``norm_constant`` records the scale factor applied by the most
    recent normalization (1.0 for a freshly built table).
    """

    def __init__(self, basis: ConfigurationBasis, coin_order: int,
                 amplitudes: np.ndarray | None = None):
        if coin_order < 1:
            raise ValueError(f"coin order must be >= 1, got {coin_order}")
        self.basis = basis
        self.coin_order = int(coin_order)
        if amplitudes is None:
            amplitudes = np.zeros((coin_order, basis.dimension), dtype=np.complex128)
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (coin_order, basis.dimension):
            raise ValueError(
                f"amplitude array shape {amplitudes.shape} does not match "
                f"(d={coin_order}, D={basis.dimension})"
            )
        self.amps = amplitudes
        self.norm_constant = 1.0

    @property
    def n_particles(self) -> int:
        return self.basis.n_particles

    @property
    def n_vertices(self) -> int:
        return self.basis.n_vertices

    @classmethod
    def from_terms(cls, basis: ConfigurationBasis, coin_order: int, terms):
        """Build a table from (chirality, occupations, amplitude) terms.

        Chirality is 1-based.  Terms addressing the same key accumulate.
        """
        table = cls(basis, coin_order)
        for chirality, occupations, amplitude in terms:
            j = int(chirality)
            if not 1 <= j <= coin_order:
                raise ValueError(f"chirality {j} out of 1..{coin_order}")
            rank = basis.rank(occupations)
            table.amps[j - 1, rank] += complex(amplitude)
        return table

    def copy(self) -> "AmplitudeTable":
        dup = AmplitudeTable(self.basis, self.coin_order, self.amps.copy())
        dup.norm_constant = self.norm_constant
        return dup

    def norm(self) -> float:
        """sqrt of the modulus-squared sum, reduced in (j, l) key order."""
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def config_weights(self) -> np.ndarray:
        """Per-configuration weight sum_j |C_jl|^2, length D."""
        return np.sum(np.abs(self.amps) ** 2, axis=0)

    def amplitude(self, chirality: int, rank: int) -> complex:
        """Amplitude at key (chirality 1..d, rank 0..D-1)."""
        if not 1 <= chirality <= self.coin_order:
            raise ValueError(f"chirality {chirality} out of 1..{self.coin_order}")
        if not 0 <= rank < self.basis.dimension:
            raise ValueError(f"rank {rank} out of 0..{self.basis.dimension - 1}")
        return complex(self.amps[chirality - 1, rank])

    @property
    def entry_count(self) -> int:
        """Number of stored (nonzero) keyed entries."""
        return int(np.count_nonzero(self.amps))

    def entries(self):
        """Nonzero entries as arrays (chirality, rank, amplitude), (j, l)-sorted."""
        j, l = np.nonzero(self.amps)
        return j.astype(np.int32) + 1, l.astype(np.int64), self.amps[j, l]

    def compact(self, threshold: float = DROP_THRESHOLD) -> int:
        """Zero all amplitudes with modulus below ``threshold``; return count dropped."""
        if threshold < 0:
            raise ValueError("drop threshold must be >= 0")
        small = (np.abs(self.amps) < threshold) & (self.amps != 0)
        self.amps[small] = 0.0
        return int(np.count_nonzero(small))

    def scaled_inplace(self, factor: float) -> None:
        self.amps *= factor


def normalize(table: AmplitudeTable) -> tuple[float, AmplitudeTable]:
    """Scale a table to unit norm.

    Returns
    -------
    (K, normalized_table)
        K is the norm of the input; the returned table is a new object with
        sum of |C|^2 equal to 1 within 1e-12 and ``norm_constant`` K.

    Raises
    ------
    ValueError
        All-zero table (an evolution bug or an over-aggressive drop
        threshold upstream).
    """
    k = table.norm()
    if k == 0.0:
        raise ValueError("cannot normalize an all-zero amplitude table")
    result = table.copy()
    result.amps /= k
    result.norm_constant = k
    return k, result


def effective_dimension(table: AmplitudeTable, tol: float = EFFECTIVE_DIM_TOL) -> int:
    """Number of configurations carrying weight above ``tol``.

    Weight is the modulus-squared sum over chiralities; ``tol`` defaults to
    far below the 400-step rounding floor so "nonzero" means structurally
    reached.
    """
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    return int(np.count_nonzero(table.config_weights() > tol))


_SNAPSHOT_VERSION = 1


def write_snapshot(path, table: AmplitudeTable, step: int, meta: dict | None = None) -> None:
    """Write a bit-exact resumable snapshot (.npz).

    Stores the nonzero entries as (chirality, rank, re, im) sorted by
    (chirality, rank), together with (N, M, d, step, norm constant) and an
    optional JSON metadata blob used by resume-consistency checks.
    """
    chirality, rank, amp = table.entries()
    np.savez(
        path,
        version=np.int64(_SNAPSHOT_VERSION),
        n_particles=np.int64(table.n_particles),
        n_vertices=np.int64(table.n_vertices),
        coin_order=np.int64(table.coin_order),
        step=np.int64(step),
        norm_constant=np.float64(table.norm_constant),
        chirality=chirality,
        rank=rank,
        amp_re=amp.real.astype(np.float64),
        amp_im=amp.imag.astype(np.float64),
        meta_json=np.array(json.dumps(meta if meta is not None else {}, sort_keys=True)),
    )


def read_snapshot(path, basis: ConfigurationBasis | None = None):
    """Load a snapshot; returns (table, step, meta).

    A pre-built basis for the snapshot's (N, M) may be supplied to avoid
    re-enumeration.
    """
    with np.load(path, allow_pickle=False) as data:
        n = int(data["n_particles"])
        m = int(data["n_vertices"])
        d = int(data["coin_order"])
        step = int(data["step"])
        if basis is None:
            basis = ConfigurationBasis(n, m)
        elif (basis.n_particles, basis.n_vertices) != (n, m):
            raise ValueError(
                f"snapshot is for (N={n}, M={m}), basis has "
                f"(N={basis.n_particles}, M={basis.n_vertices})"
            )
        table = AmplitudeTable(basis, d)
        j = data["chirality"].astype(np.int64) - 1
        l = data["rank"].astype(np.int64)
        table.amps[j, l] = data["amp_re"] + 1j * data["amp_im"]
        table.norm_constant = float(data["norm_constant"])
        meta = json.loads(str(data["meta_json"]))
    return table, step, meta
