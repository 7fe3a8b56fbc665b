"""One conditional-shift step worked by hand on a 3-cycle.

Run as: python3 demos/demo_conditional_shift.py
"""

import bosonwalk as bw

graph = bw.build_named("cycle", 3)
print("component 1 (counterclockwise):", graph.components[0])
print("component 2 (its transpose):  ", graph.components[1])

coin = bw.coin_matrix(2)
print("\ncoin matrix:\n", coin.h.real)

# A single walker on vertex 1 with chirality 1.  Component 1 carries the
# edge 1->2, so the walker moves to vertex 2 while the coin splits its
# chirality into (h[1,1], h[2,1]) = (1, 1)/sqrt(2).
basis = bw.ConfigurationBasis(1, 3)
state = bw.AmplitudeTable.from_terms(basis, 2, [(1, (1, 0, 0), 1.0)])
shifted = bw.apply_conditional_shift(state, graph, coin)
print("\nafter one shift of |chirality 1, (1,0,0)>:")
for j, l, a in zip(*shifted.entries()):
    print(f"  chirality {j}, config {basis.unrank(l)}: {a.real:+.6f}")

# With two bosons on the source vertex the hop picks up the bosonic
# enhancement sqrt(n_mu * (n_nu + 1)) = sqrt(2).
basis2 = bw.ConfigurationBasis(2, 3)
state2 = bw.AmplitudeTable.from_terms(basis2, 2, [(1, (2, 0, 0), 1.0)])
shifted2 = bw.apply_conditional_shift(state2, graph, coin)
print("\nafter one shift of |chirality 1, (2,0,0)>:")
for j, l, a in zip(*shifted2.entries()):
    print(f"  chirality {j}, config {basis2.unrank(l)}: {a.real:+.6f}")
print("(the 1.0 amplitudes became sqrt(2)/sqrt(2) = 1: enhancement times coin)")

# The shift is not norm-preserving; normalize before reading observables.
k, normalized = bw.normalize(shifted2)
print(f"\npre-normalization norm = {k:.6f}")
