"""
Toy commitment schemes
======================

Binding is checked by brute force. Concealing is the exact total variation
distance between the commitment distributions of two values.
"""

from fractions import Fraction

from qzk.commitment import CommitmentScheme, binding_check, commit, concealing_tv, support_table_csv

t = CommitmentScheme.transparent(3)
s = commit(t, 2, "101")
print("transparent commit(2, 101) =", s)
for n in range(1, 7):
    rep = binding_check(CommitmentScheme.transparent(n))
    print(f"N={n}: binding {rep.passed} after {rep.pairs_checked} pairs")

# a scheme that ignores its value is not binding
broken = CommitmentScheme.from_function(lambda a, x: "00" + x, 2)
print("broken scheme counterexample:", binding_check(broken).counterexample)

# %%
for scheme in (t, CommitmentScheme.ideal(3), CommitmentScheme.leaky(Fraction(1, 10), 3)):
    print(f"{scheme.kind:<12} TV(1, 2) = {concealing_tv(scheme, 1, 2)}")

print()
print(support_table_csv(CommitmentScheme.leaky(Fraction(1, 4), 1)))
