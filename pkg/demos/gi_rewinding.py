"""
Rewinding a quantum verifier in the graph isomorphism protocol
==============================================================

We build the channel a cheating quantum verifier experiences in one round
of the protocol, then the simulator that never sees the witness, and check
that the two are the same channel.
"""

import numpy as np

from qzk import gi, rewind
from qzk.channel import choi_trace_distance

# the smallest interesting yes-instance: one edge on three vertices, relabeled
inst = gi.single_edge_instance()
print("G0 edges:", inst.g0.edges, " G1 edges:", inst.g1.edges)
print("witness sigma:", inst.sigma.images)

# %%
# A verifier is a family of unitaries V_H on (W, V, A), one per message H.
# W is the verifier's private workspace and is where the auxiliary input lives.
fam = gi.VerifierFamily.random(inst.g0, seed=7, w_dim=2, v_dim=2)
print("verifier messages:", [h.edges for h in fam.y_basis])

phi = gi.build_phi_direct(inst, fam)
print("real interaction: W ->", phi.out_layout)

# %%
# The simulator prepares a uniform superposition over its own guesses,
# runs the verifier, and measures whether the guess matched the challenge.
asm = gi.assemble(inst, fam)
q = rewind.compress_q(asm)
print("compressed success operator Q:\n", np.round(q, 12))

sim = rewind.simulate_gi(asm)
print("Choi distance real vs simulated: %.2e" % choi_trace_distance(phi, sim))

# %%
# A single measurement succeeds with probability 1/2 for every input, and
# on failure one rewind returns the state to exactly where it started.
psi = np.array([0.6, 0.8j])
br = rewind.first_round_branches(asm, psi)
print("Pr[outcome 0] =", round(br.prob_outcome0, 12))
print("recovery error:", np.linalg.norm(br.recovered - br.delta0))
