"""Observables of a short walk: densities, g2, counting, phase space.

Run as: python3 demos/demo_observables.py
"""

import numpy as np

import bosonwalk as bw

graph = bw.build_named("cycle", 6)
coin = bw.coin_matrix(2)
basis = bw.ConfigurationBasis(4, 6)

init = bw.AmplitudeTable.from_terms(
    basis, 2, [(1, (4, 0, 0, 0, 0, 0), -1j), (2, (0, 0, 0, 4, 0, 0), 1.0)]
)
_, init = bw.normalize(init)

result = bw.run(init, graph, coin, steps=12)
state = result.final

print("vertex densities after 12 steps (sum = 4):")
for vertex, value in enumerate(bw.vertex_density(state), start=1):
    bar = "#" * int(round(20 * value))
    print(f"  v{vertex}: {value:.4f} {bar}")

print("\nsecond-order correlation g2 (diagonal = bunching on a vertex):")
print(np.array_str(bw.g2_matrix(state), precision=3, suppress_small=True))

print("\ncounting statistics on vertex 1 (probability of n bosons):")
stats = bw.counting_statistics(state, 1)
for n, (q, w) in enumerate(zip(stats.histogram, stats.weighted)):
    print(f"  n={n}: P={q:.4f}   weighted={w:.3e}")

print("\nphase-space coordinates per mode (x, p, E):")
xs, ps, es = bw.phase_space_table(state)
for mode, (x, p, e) in enumerate(zip(xs, ps, es), start=1):
    print(f"  mode {mode}: x={x:+.4f}  p={p:+.4f}  E={e:.4f}")

print("\neffective dimension per step (support count):")
dims = [(0, 2)] + [(r.step, r.effective_dim) for r in result.reports]
print(" ", " -> ".join(f"{d}" for _, d in dims))
print("regime report:", bw.detect_regime_change(dims))
