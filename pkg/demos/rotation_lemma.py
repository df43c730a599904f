"""
The two-dimensional picture behind rewinding
============================================

For an eigenvector of the compressed success operator, the rewinding loop
lives in a plane. This script checks the six identities that define that
plane and tabulates how quickly the loop's failure probability shrinks.
"""

import numpy as np

from qzk import rewind

for lam in (0.1, 0.25, 0.5, 0.75, 0.9):
    u, pi0, delta0 = rewind.rotation_example(lam)
    dec = rewind.lemma_decompose(u, pi0, delta0, np.array([1.0, 0.0]))
    print(f"lambda={lam:<5} measured={dec.lam:.12f} worst identity residual={dec.max_residual:.1e}")

# %%
# Residual failure after k rounds: (1 - lam) (1 - 4 lam (1 - lam))^(k-1).
# lam = 1/2 finishes in two rounds; smaller lam converges more slowly.
print("\n k   lam=1/2    lam=1/3    lam=1/10")
for k in range(1, 7):
    row = [rewind.closed_form_residual(lam, k) for lam in (0.5, 1 / 3, 0.1)]
    print(f"{k:2d}  " + "  ".join(f"{r:.3e}" for r in row))

print("\nrounds needed for 1e-6 at lam=1/10:", rewind.default_iterations([0.1]))
