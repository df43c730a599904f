"""Acceptance criteria, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""
from fractions import Fraction

import numpy as np
import pytest

from qzk import g3c, gi, rewind
from qzk.channel import choi_trace_distance, maximally_entangled, state_trace_distance
from qzk.combinatorics import all_graphs, find_isomorphism, orbit
from qzk.commitment import CommitmentScheme, binding_check, concealing_tv
from qzk.linalg import RegisterLayout, random_state

SEEDS = range(1, 21)
INSTANCE = gi.single_edge_instance()


def family(seed):
    return gi.VerifierFamily.random(INSTANCE.g0, seed, w_dim=2, v_dim=2)


@pytest.fixture(scope="module")
def gi_cases():
    out = []
    for seed in SEEDS:
        fam = family(seed)
        out.append((seed, fam, gi.assemble(INSTANCE, fam), gi.build_phi_direct(INSTANCE, fam)))
    return out


@pytest.mark.criterion(1, "GI channel equality, 20 families, Choi distance <= 1e-9")
def test_criterion_1_gi_channel_equality(gi_cases):
    worst = 0.0
    for seed, fam, asm, phi in gi_cases:
        d = choi_trace_distance(phi, rewind.simulate_gi(asm))
        worst = max(worst, d)
        assert d <= 1e-9, f"seed {seed}: {d}"
    print(f"criterion 1: max Choi distance {worst:.3e}")


@pytest.mark.criterion(2, "Q = I/2: operator residual <= 1e-9, eigenvalues within 1e-10")
def test_criterion_2_claim_half(gi_cases):
    for seed, fam, asm, phi in gi_cases:
        res = rewind.claim_operator_residual(asm, 0.5)
        dev = np.abs(np.linalg.eigvalsh(rewind.compress_q(asm)) - 0.5).max()
        assert res <= 1e-9, f"seed {seed}: {res}"
        assert dev <= 1e-10, f"seed {seed}: {dev}"


@pytest.mark.criterion(3, "six rotation-lemma identities <= 1e-10 (synthetic and 20 protocol instances)")
def test_criterion_3_lemma(gi_cases):
    for lam in (0.1, 0.25, 0.5, 0.75, 0.9):
        dec = rewind.lemma_decompose(*rewind.rotation_example(lam), np.array([1.0, 0.0]))
        assert len(dec.residuals) == 6
        assert dec.max_residual <= 1e-10, (lam, dec.residuals)
    for seed, fam, asm, phi in gi_cases:
        g0 = asm.zero_state(random_state(2, seed)).reshape(-1)
        dec = rewind.lemma_decompose(asm.linear_operator("U"), asm.linear_operator("Pi0"),
                                     asm.linear_operator("Delta0"), g0)
        assert len(dec.residuals) == 6
        assert dec.max_residual <= 1e-10, (seed, dec.residuals)


@pytest.mark.criterion(4, "outcome-0 probability 1/2 +- 1e-10 and recovery to delta0 <= 1e-10")
def test_criterion_4_outcome_probabilities(gi_cases):
    for seed, fam, asm, phi in gi_cases:
        for j in range(20):
            br = rewind.first_round_branches(asm, random_state(2, [seed, j]))
            assert abs(br.prob_outcome0 - 0.5) <= 1e-10
            assert np.linalg.norm(br.recovered - br.delta0) <= 1e-10


@pytest.mark.criterion(5, "entangled auxiliary input, state trace distance <= 1e-9")
def test_criterion_5_entangled_input(gi_cases):
    e = RegisterLayout.of(("E", 2))
    omega = maximally_entangled(2)
    for seed, fam, asm, phi in gi_cases:
        real = phi.tensor_identity(e).apply(omega)
        sim = rewind.simulate_gi(asm).tensor_identity(e).apply(omega)
        assert state_trace_distance(real, sim) <= 1e-9, seed


@pytest.mark.criterion(6, "classical GI: completeness exactly 1 (n <= 4), cheating value exactly 1/2 (n = 3, 4)")
def test_criterion_6_classical_gi():
    strategies = [lambda h: 0, lambda h: 1, lambda h: h.m % 2, lambda h: h.bits & 1]
    for n in (1, 2, 3, 4):
        for g0 in all_graphs(n):
            for g1 in orbit(g0):
                inst = gi.GIInstance.from_graphs(g0, g1)
                assert all(gi.completeness(inst, s) == 1 for s in strategies)
    for n in (3, 4):
        graphs = all_graphs(n)
        count = 0
        for g0 in graphs:
            for g1 in graphs:
                if find_isomorphism(g0, g1) is None:
                    assert gi.optimal_cheating_value(gi.GIInstance.from_graphs(g0, g1)) == Fraction(1, 2)
                    count += 1
        assert count > 0


@pytest.mark.criterion(7, "G3C ideal triangle: spec(Q) = {1/3}, residual closed form, conditional channel <= 1e-8")
def test_criterion_7_g3c_ideal():
    inst = g3c.triangle()
    scheme = CommitmentScheme.ideal(1)
    for seed in (1, 2, 3):
        fam = g3c.G3CVerifierFamily.random(inst, scheme.alphabet(), seed)
        eig = g3c.q_spectrum(inst, fam, scheme)
        assert np.abs(eig - 1 / 3).max() <= 1e-10
        real = g3c.build_g3c_interaction(inst, fam, scheme)
        for k in (1, 2, 3, 5):
            sim, diag = g3c.build_g3c_simulator(inst, fam, scheme, k=k)
            assert abs(diag.residual_failure - (2 / 3) * (1 / 9) ** (k - 1)) <= 1e-9
            assert choi_trace_distance(sim, real) <= 1e-8


@pytest.mark.criterion(8, "G3C leaky spectrum: spread(0) = 0, nondecreasing in eps, eigenvalues in [0, 1]")
def test_criterion_8_leaky_spectrum():
    inst = g3c.triangle()
    fam = g3c.G3CVerifierFamily.random(inst, CommitmentScheme.leaky(0).alphabet(), seed=1)
    spreads = []
    for eps in (0, 0.05, 0.1, 0.2):
        eig = g3c.q_spectrum_under_leak(inst, fam, eps)
        assert eig.min() >= -1e-10 and eig.max() <= 1 + 1e-10
        spreads.append(g3c.spectrum_spread(eig, inst.m))
    print(f"criterion 8: spreads {spreads}")
    assert spreads[0] <= 1e-10
    assert all(a <= b for a, b in zip(spreads, spreads[1:]))


@pytest.mark.criterion(9, "K4 soundness: 5/6 per round, (5/6)^36 exact, Monte Carlo within 3 SE")
def test_criterion_9_k4_soundness():
    k4 = g3c.k4()
    res = g3c.classical_g3c_soundness(k4, CommitmentScheme.transparent(1), rounds=36, mc_rounds=100_000, seed=0)
    assert res.per_round == Fraction(5, 6)
    assert res.bound == Fraction(5 ** 36, 6 ** 36)
    z = abs(res.mc_acceptance - 5 / 6) / res.mc_standard_error
    print(f"criterion 9: acceptance {res.mc_acceptance:.5f}, z = {z:.2f}")
    assert z <= 3


@pytest.mark.criterion(10, "commitment audit: binding N = 1..6, TV 1 / 0 / eps within 1e-12")
def test_criterion_10_commitment_audit():
    for n in range(1, 7):
        assert binding_check(CommitmentScheme.transparent(n)).passed
    gamma = (1, 2, 3)
    for a in gamma:
        for b in gamma:
            if a == b:
                continue
            assert abs(concealing_tv(CommitmentScheme.transparent(2), a, b) - 1) <= 1e-12
            assert abs(concealing_tv(CommitmentScheme.ideal(2), a, b)) <= 1e-12
            for eps in (0.0, 0.05, 0.1, 0.2, 0.5):
                assert abs(concealing_tv(CommitmentScheme.leaky(eps, 2), a, b) - eps) <= 1e-12


@pytest.mark.criterion(11, "direct vs engine channel construction, Choi distance <= 1e-12, 10 families")
def test_criterion_11_oracle_cross_check():
    for seed in range(1, 11):
        fam = family(seed)
        d = choi_trace_distance(gi.build_phi_direct(INSTANCE, fam), gi.build_phi_engine(INSTANCE, fam))
        assert d <= 1e-12, (seed, d)
