import numpy as np
import pytest

from qzk import g3c, gi, rewind
from qzk.channel import choi_trace_distance, maximally_entangled, state_trace_distance
from qzk.commitment import CommitmentScheme
from qzk.linalg import RegisterLayout, embed_operator, projector, random_density, random_state


@pytest.fixture(scope="module")
def instance():
    return gi.single_edge_instance()


@pytest.fixture(scope="module")
def family(instance):
    return gi.VerifierFamily.random(instance.g0, seed=21)


@pytest.fixture(scope="module")
def full(instance, family):
    return gi.assemble(instance, family, ancilla="full")


@pytest.fixture(scope="module")
def reach(instance, family):
    return gi.assemble(instance, family, ancilla="reachable")


def dense(asm, name):
    op = asm.linear_operator(name)
    return op.matmat(np.eye(op.shape[0], dtype=complex))


def test_assembly_dimensions(full):
    assert full.layout.names == ("W", "V", "A", "Y", "B", "Z", "R")
    assert full.layout.dim("R") == 12
    assert full.K == 3 * 2 * 6 * 12
    assert full.modeled_dim == full.layout.total


def test_prepared_superposition(full, instance, family):
    t0 = full.prep.apply(np.eye(full.K)[0])
    assert np.linalg.norm(t0 - gi.simulator_target(instance, family)) <= 1e-10
    nz = t0[np.abs(t0) > 1e-14]
    assert nz.size == 12 and np.allclose(nz, 1 / np.sqrt(12), atol=1e-12)


def test_operator_invariants(reach):
    n = reach.modeled_dim
    eye = np.eye(n)
    u = dense(reach, "U")
    assert np.linalg.norm(u.conj().T @ u - eye) <= 1e-10
    for name in ("Pi0", "Delta0"):
        p = dense(reach, name)
        assert np.linalg.norm(p @ p - p) <= 1e-10
        assert np.linalg.norm(p - p.conj().T) <= 1e-10
        q = eye - p
        assert np.linalg.norm(q @ q - q) <= 1e-10
    flat = np.eye(n, dtype=complex).reshape((n,) + reach.shape)
    t = reach.apply_T(flat).reshape(n, n)
    v = reach.apply_V(flat).reshape(n, n)
    assert np.linalg.norm(t.conj().T @ t - eye) <= 1e-10
    assert np.linalg.norm(v.conj().T @ v - eye) <= 1e-10
    assert np.allclose(reach.pi0(flat) + reach.pi1(flat), flat)
    assert np.allclose(reach.delta0(flat) + reach.delta1(flat), flat)


def test_xor_projector_examples(full):
    s = np.zeros((1,) + full.shape, dtype=complex)
    labels = full.labels
    k00 = np.flatnonzero((labels[:, 1] == 0))[3]
    k01 = np.flatnonzero((labels[:, 1] == 1))[3]
    s[0, 1, 0, 0, k00] = 1
    assert np.array_equal(full.pi0(s), s)
    s2 = np.zeros_like(s)
    s2[0, 1, 0, 0, k01] = 1
    assert np.array_equal(full.pi0(s2), np.zeros_like(s2))


def test_controlled_unitary_matches_embedding(full, family):
    small = RegisterLayout.of(("W", 2), ("V", 2), ("A", 2), ("Y", 3))
    ctrl = sum(embed_operator(np.kron(family.unitaries[y], projector(y, 3)), ["W", "V", "A", "Y"], small)
               for y in range(3))
    # states with B = Z = R = 0: label index y * (2 * 6 * 12)
    stride = 2 * 6 * 12
    for y in range(3):
        emb = embed_operator(family.unitaries[y], ["W", "V", "A"], small)
        for col in range(8):
            s = np.zeros((1,) + full.shape, dtype=complex)
            s.reshape(1, 8, full.K)[0, col, y * stride] = 1
            got = full.apply_V(s).reshape(8, full.K)[:, y * stride]
            assert np.allclose(got, ctrl[:, col * 3 + y].reshape(8, 3)[:, y], atol=1e-14)
            assert np.allclose(got, emb[:, col * 3 + y].reshape(8, 3)[:, y], atol=1e-14)


def test_q_is_half(full, reach):
    for asm in (full, reach):
        q = rewind.compress_q(asm)
        assert np.abs(q - np.eye(2) / 2).max() <= 1e-10


def test_q_quadratic_form(reach):
    q = rewind.compress_q(reach)
    for seed in range(20):
        psi = random_state(2, seed)
        assert abs(np.vdot(psi, q @ psi).real - rewind.success_probability(reach, psi)) <= 1e-12


def test_claim_operator_identity(full):
    assert rewind.claim_operator_residual(full, 0.5) <= 1e-10
    assert rewind.claim_operator_residual(full, 0.4) > 0.1


@pytest.mark.parametrize("lam", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_rotation_lemma(lam):
    dec = rewind.lemma_decompose(*rewind.rotation_example(lam), np.array([1.0, 0.0]))
    assert dec.lam == pytest.approx(lam, abs=1e-12)
    assert dec.max_residual <= 1e-10
    assert set(dec.residuals) == {"orth_gamma", "orth_delta", "forward_gamma0", "forward_gamma1",
                                  "adjoint_delta0", "adjoint_delta1"}


def test_protocol_lemma(reach):
    g0 = reach.zero_state(random_state(2, 3)).reshape(-1)
    ops = [reach.linear_operator(n) for n in ("U", "Pi0", "Delta0")]
    dec = rewind.lemma_decompose(*ops, g0)
    assert dec.lam == pytest.approx(0.5, abs=1e-10)
    assert abs(np.vdot(dec.gamma0, dec.gamma1)) <= 1e-10
    assert dec.max_residual <= 1e-10
    p0 = ops[1].matvec(ops[0].matvec(g0))
    assert abs(np.vdot(p0, p0).real - dec.lam) <= 1e-10


def test_protocol_lemma_with_dense_matrices(reach):
    g0 = reach.zero_state(random_state(2, 4)).reshape(-1)
    dec = rewind.lemma_decompose(dense(reach, "U"), dense(reach, "Pi0"), dense(reach, "Delta0"), g0)
    assert dec.max_residual <= 1e-10


def test_lemma_errors():
    u, p, d = rewind.rotation_example(1.0)
    with pytest.raises(rewind.DegenerateEigenvalueError):
        rewind.lemma_decompose(u, p, d, np.array([1.0, 0.0]))
    u, p, d = rewind.rotation_example(0.3)
    with pytest.raises(rewind.PreconditionError):
        rewind.lemma_decompose(u, p, d, np.array([1.0, 1.0]))
    # a mix of two eigenvalues is not an eigenvector
    u3 = np.eye(3, dtype=complex)
    u3[:2, :2] = rewind.rotation_example(0.3)[0]
    u3 = np.kron(u3, np.eye(1))
    p3 = np.diag([1.0, 0, 1.0]).astype(complex)
    d3 = np.diag([1.0, 0, 1.0]).astype(complex)
    with pytest.raises(rewind.PreconditionError):
        rewind.lemma_decompose(u3, p3, d3, np.array([1.0, 0, 1.0]) / np.sqrt(2))


def test_single_rewind_equals_real_channel(full, reach, instance, family):
    phi = gi.build_phi_direct(instance, family)
    assert choi_trace_distance(rewind.simulate_gi(full), phi) <= 1e-9
    assert choi_trace_distance(rewind.simulate_gi(reach), phi) <= 1e-9


def test_outcome_probability_and_recovery(reach):
    for seed in range(10):
        br = rewind.first_round_branches(reach, random_state(2, seed))
        assert abs(br.prob_outcome0 - 0.5) <= 1e-10
        assert np.linalg.norm(br.recovered - br.delta0) <= 1e-10


def test_mixed_inputs_agree(reach, instance, family):
    phi = gi.build_phi_direct(instance, family)
    sim = rewind.simulate_gi(reach)
    for seed in range(5):
        rho = random_density(2, seed)
        assert state_trace_distance(phi.apply(rho), sim.apply(rho)) <= 1e-9


def test_entangled_auxiliary_input(reach, instance, family):
    e = RegisterLayout.of(("E", 2))
    real = gi.build_phi_direct(instance, family).tensor_identity(e)
    sim = rewind.simulate_gi(reach).tensor_identity(e)
    omega = maximally_entangled(2)
    assert state_trace_distance(real.apply(omega), sim.apply(omega)) <= 1e-9


def test_iterated_gi(full, instance, family):
    res = rewind.simulate_iterated(full, k=2)
    assert abs(res.residual_failure) <= 1e-12
    assert res.success_probs[0] == pytest.approx(0.5, abs=1e-10)
    assert res.success_probs[1] == pytest.approx(1.0, abs=1e-10)
    phi = gi.build_phi_direct(instance, family)
    assert choi_trace_distance(res.conditional_channel, phi) <= 1e-9


def test_iterated_arguments(full):
    with pytest.raises(ValueError):
        rewind.simulate_iterated(full, k=0)
    assert rewind.simulate_iterated(full).residual_failure <= 1e-6


def test_degenerate_spectrum_refused(instance, family):
    support = [((0, 0, 0, 1), 1.0)]
    dims = {"A": 2, "Y": 3, "B": 2, "Z": 6, "R": 12}
    asm = rewind.build_assembly(2, 2, family.unitaries, dims, support, pi0=lambda a, b: True)
    assert np.allclose(rewind.compress_q(asm), np.eye(2))
    with pytest.raises(rewind.DegenerateEigenvalueError):
        rewind.simulate_iterated(asm, k=3)


def test_build_assembly_validation(family):
    dims = {"A": 2, "Y": 3, "B": 2, "Z": 6, "R": 12}
    with pytest.raises(ValueError):
        rewind.build_assembly(2, 2, family.unitaries, dims, [((0, 0, 0, 1), 1.0)], ancilla="sparse")
    from qzk.linalg import ContractViolation
    with pytest.raises(ContractViolation):
        rewind.build_assembly(2, 2, family.unitaries, dims, [((0, 5, 0, 1), 1.0)])
    with pytest.raises(ContractViolation):
        rewind.build_assembly(2, 2, family.unitaries[:2], dims, [((0, 0, 0, 1), 1.0)])


def test_closed_form_and_default_iterations():
    assert rewind.closed_form_residual(0.5, 1) == 0.5
    assert rewind.closed_form_residual(0.5, 2) == 0.0
    assert rewind.closed_form_residual(1 / 3, 2) == pytest.approx(2 / 27)
    k = rewind.default_iterations([1 / 3])
    assert rewind.closed_form_residual(1 / 3, k) <= 1e-6 < rewind.closed_form_residual(1 / 3, k - 1)


@pytest.fixture(scope="module")
def triangle_ideal():
    inst = g3c.triangle()
    scheme = CommitmentScheme.ideal(1)
    fam = g3c.G3CVerifierFamily.random(inst, scheme.alphabet(), seed=5)
    return inst, fam, scheme


def test_iterated_triangle_residuals(triangle_ideal):
    asm = g3c.assemble_g3c(*triangle_ideal)
    r1 = rewind.simulate_iterated(asm, k=1)
    r2 = rewind.simulate_iterated(asm, k=2)
    assert r1.residual_failure == pytest.approx(2 / 3, abs=1e-9)
    assert r2.residual_failure == pytest.approx(2 / 27, abs=1e-9)
    assert all(p >= 1 / 3 - 1e-10 for p in r2.success_probs)
    assert r2.success_probs[1] == pytest.approx(8 / 9, abs=1e-10)


def test_rewound_amplitudes_for_one_over_m(triangle_ideal):
    # after a failure and one rewind: (2 sqrt(m-1)/m) delta0 + ((m-2)/m) delta1
    asm = g3c.assemble_g3c(*triangle_ideal)
    m = 3
    g0 = asm.zero_state(random_state(2, 9))
    s = asm.apply_U(g0)
    d0 = asm.pi0(s) / np.sqrt(1 / m)
    d1 = asm.pi1(s) / np.sqrt(1 - 1 / m)
    after = asm.apply_U(asm.reflect_zero(asm.apply_U_adj(d1)))
    expected = (2 * np.sqrt(m - 1) / m) * d0 + ((m - 2) / m) * d1
    assert np.linalg.norm(after - expected) <= 1e-10


def test_component_residuals_sum_for_leaky_spectrum():
    inst = g3c.triangle()
    fam = g3c.G3CVerifierFamily.random(inst, CommitmentScheme.leaky(0).alphabet(), seed=2)
    asm = g3c.assemble_g3c(inst, fam, CommitmentScheme.leaky(0.3))
    rho = random_density(2, 1)
    res = rewind.simulate_iterated(asm, k=4, rho=rho)
    assert np.ptp(res.q_eigenvalues) > 1e-4
    assert res.residual_failure == pytest.approx(res.component_residuals.sum(), abs=1e-12)
    out = res.conditional_channel.apply(rho)
    assert abs(np.trace(out) - 1) <= 1e-12
