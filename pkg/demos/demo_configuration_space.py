"""Tour of the bosonic configuration space: dimensions, ranking, snapshots.

Run as: python3 demos/demo_configuration_space.py
"""

import numpy as np

import bosonwalk as bw

# The space of N bosons on M vertices has binomial(M+N-1, N) configurations.
for n, m in [(2, 2), (3, 4), (12, 10)]:
    print(f"D(N={n}, M={m}) = {bw.space_dimension(n, m)}")

# Configurations are ordered lexicographically, first coordinate descending.
basis = bw.ConfigurationBasis(3, 3)
print(f"\nAll {basis.dimension} configurations of 3 bosons on 3 vertices:")
for rank in range(basis.dimension):
    occ = basis.unrank(rank)
    assert bw.config_rank(occ) == rank
    print(f"  rank {rank:2d} -> {occ}")

# The walk state is a keyed table of complex amplitudes over that basis.
table = bw.AmplitudeTable.from_terms(
    basis, 2, [(1, (3, 0, 0), -1j), (2, (0, 0, 3), 1.0)]
)
k, table = bw.normalize(table)
print(f"\nnormalization constant K = {k:.6f}")
chirality, rank, amp = table.entries()
for j, l, a in zip(chirality, rank, amp):
    print(f"  chirality {j}, config {basis.unrank(l)}: {a:.4f}")

# Snapshots round-trip bit-exactly, which is what makes runs resumable.
bw.write_snapshot("/tmp/demo_state.npz", table, step=0, meta={"demo": True})
loaded, step, meta = bw.read_snapshot("/tmp/demo_state.npz")
print(f"\nsnapshot round trip exact: {np.array_equal(loaded.amps, table.amps)}")
