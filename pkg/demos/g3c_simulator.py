"""
Three-coloring with commitments: ideal and leaky
================================================

On the triangle the simulator guesses which of m = 3 edges will be
challenged. With ideal commitments every input succeeds with probability
exactly 1/m. Leaky commitments split that eigenvalue apart.
"""

import numpy as np

from qzk import g3c, rewind
from qzk.channel import choi_trace_distance
from qzk.commitment import CommitmentScheme

tri = g3c.triangle()
ideal = CommitmentScheme.ideal(1)
fam = g3c.G3CVerifierFamily.random(tri, ideal.alphabet(), seed=3)

print("spec(Q), ideal:", g3c.q_spectrum(tri, fam, ideal))

real = g3c.build_g3c_interaction(tri, fam, ideal)
for k in (1, 2, 3, 5):
    sim, diag = g3c.build_g3c_simulator(tri, fam, ideal, k=k)
    print(f"k={k}: residual {diag.residual_failure:.3e} "
          f"(closed form {rewind.closed_form_residual(1 / 3, k):.3e}), "
          f"Choi distance to real {choi_trace_distance(sim, real):.1e}")

# %%
# A leaky scheme reveals the committed color with probability eps.
leak_fam = g3c.G3CVerifierFamily.random(tri, CommitmentScheme.leaky(0).alphabet(), seed=1)
for eps in (0, 0.05, 0.1, 0.2):
    eig = g3c.q_spectrum_under_leak(tri, leak_fam, eps)
    print(f"eps={eps:<4} eigenvalues {np.round(eig, 6)} spread {g3c.spectrum_spread(eig, 3):.2e}")
