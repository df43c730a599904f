"""
Classical sanity checks: completeness, soundness, simulation
============================================================
"""

from fractions import Fraction

from qzk import g3c, gi
from qzk.combinatorics import Graph
from qzk.commitment import CommitmentScheme

# honest prover always convinces, whatever challenge strategy the verifier uses
inst = gi.single_edge_instance()
print("GI completeness:", gi.completeness(inst, lambda h: h.bits & 1))

# a non-isomorphic pair: the best prover answers only one of two challenges
no = gi.GIInstance.from_graphs(Graph.complete(3), Graph.from_edges(3, [(1, 2), (2, 3)]))
print("GI cheating value on K3 vs path:", gi.optimal_cheating_value(no))

# %%
# K4 has no proper 3-coloring. With binding commitments the prover is stuck
# with one assignment per round, and the best one fails one edge in six.
k4 = g3c.k4()
res = g3c.classical_g3c_soundness(k4, CommitmentScheme.transparent(1), rounds=k4.m ** 2,
                                  mc_rounds=20_000, seed=0)
print("K4 per-round optimum:", res.per_round, " 36 rounds:", float(res.bound))
print("Monte Carlo acceptance: %.4f +- %.4f" % (res.mc_acceptance, res.mc_standard_error))

# %%
# The classical simulator guesses an edge. Under ideal commitments its
# success rate is 1/m even against a verifier that reads the commitments.
tri = g3c.triangle()
reader = lambda coms: sum(int(s, 2) for s in coms) % 3
p = g3c.simulator_success_probability(tri, CommitmentScheme.ideal(1), reader)
print("simulator success:", p, "==", Fraction(1, tri.m))
print("revealed pairs:", g3c.simulator_revealed_pairs(tri, CommitmentScheme.ideal(1), reader))
