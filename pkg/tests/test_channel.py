import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qzk.channel import (
    Channel,
    ChoiMatrix,
    LabeledChannel,
    choi_of,
    choi_trace_distance,
    depolarizing_channel,
    identity_channel,
    labeled_trace_distance,
    load_choi,
    maximally_entangled,
    save_choi,
    state_trace_distance,
    transpose_map,
    unitary_channel,
    verify_admissible,
)
from qzk.linalg import DensityOperator, RegisterLayout, projector, random_density, random_unitary

Q1 = RegisterLayout.of(("A", 2))
X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_channel(d_in, d_out, rank, seed):
    # Stinespring: isometry C^d_in -> C^d_out (x) C^rank
    v = random_unitary(d_out * rank, seed)[:, :d_in]
    kraus = v.reshape(d_out, rank, d_in).transpose(1, 0, 2)
    return Channel.from_kraus(kraus, RegisterLayout.of(("I", d_in)), RegisterLayout.of(("O", d_out)))


def test_identity_choi():
    j = choi_of(identity_channel(Q1)).matrix
    expected = sum(np.kron(np.outer(np.eye(2)[i], np.eye(2)[k]), np.outer(np.eye(2)[i], np.eye(2)[k]))
                   for i in range(2) for k in range(2))
    assert np.allclose(j, expected)
    assert abs(np.trace(j) - 2) <= 1e-15


def test_depolarizing_choi():
    j = choi_of(depolarizing_channel(Q1)).matrix
    assert np.allclose(j, np.kron(np.eye(2) / 2, np.eye(2)))
    assert abs(np.trace(j) - 2) <= 1e-15


def test_unitary_choi_rank_one():
    u = random_unitary(3, 4)
    j = choi_of(unitary_channel(u, RegisterLayout.of(("A", 3)))).matrix
    vals = np.linalg.eigvalsh(j)
    assert abs(vals[-1] - 3) <= 1e-12
    assert np.abs(vals[:-1]).max() <= 1e-12


def test_kraus_and_function_choi_agree():
    ch = random_channel(2, 3, 2, 9)
    as_fn = Channel(ch.in_layout, ch.out_layout, fn=ch.apply)
    assert np.allclose(choi_of(ch).matrix, choi_of(as_fn).matrix, atol=1e-14)


def test_choi_output_shape_mismatch():
    bad = Channel(Q1, RegisterLayout.of(("B", 3)), fn=lambda x: x)
    with pytest.raises(ValueError):
        choi_of(bad)


def test_distance_examples():
    ident = identity_channel(Q1)
    flip = unitary_channel(X, Q1)
    assert choi_trace_distance(ident, ident) == pytest.approx(0, abs=1e-15)
    assert choi_trace_distance(ident, flip) == pytest.approx(4, abs=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        choi_trace_distance(identity_channel(Q1), identity_channel(RegisterLayout.of(("A", 3))))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**20))
def test_distance_is_a_metric(seed):
    a, b, c = (random_channel(2, 2, 2, seed + i) for i in range(3))
    ab, ba = choi_trace_distance(a, b), choi_trace_distance(b, a)
    assert ab == pytest.approx(ba, abs=1e-12)
    assert ab <= choi_trace_distance(a, c) + choi_trace_distance(c, b) + 1e-9


def test_factored_distance_matches_dense(monkeypatch):
    import qzk.channel as ch

    a, b = random_channel(3, 4, 3, 1), random_channel(3, 4, 2, 2)
    dense = choi_trace_distance(a, b)
    monkeypatch.setattr(ch, "DENSE_CHOI_LIMIT", 0)
    assert choi_trace_distance(a, b) == pytest.approx(dense, abs=1e-12)


def test_state_distance_examples():
    rho = random_density(3, 0)
    assert state_trace_distance(rho, rho) == 0
    assert state_trace_distance(projector(0, 2), projector(1, 2)) == pytest.approx(1)
    assert state_trace_distance(projector(0, 2), np.eye(2) / 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        state_trace_distance(np.eye(2) / 2, np.eye(3) / 3)


def test_admissibility_examples():
    rep = verify_admissible(identity_channel(Q1))
    assert rep.ok
    rep = verify_admissible(transpose_map(Q1))
    assert not rep.cp_ok and rep.tp_ok
    assert rep.min_choi_eigenvalue == pytest.approx(-1)
    scaled = Channel.from_kraus(0.5 * np.eye(2), Q1, Q1)
    assert not verify_admissible(scaled).tp_ok


def test_linearity_and_trace_preservation():
    ch = random_channel(3, 2, 3, 5)
    r1, r2 = random_density(3, 1), random_density(3, 2)
    out = ch.apply(0.3 * r1 - 1.7 * r2)
    assert np.abs(out - (0.3 * ch.apply(r1) - 1.7 * ch.apply(r2))).max() <= 1e-9
    assert abs(np.trace(ch.apply(r1)) - 1) <= 1e-9


def test_composition_on_basis_inputs():
    f, g = random_channel(2, 3, 2, 7), random_channel(3, 2, 2, 8)
    fg = f.then(g)
    for i in range(2):
        for k in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, k] = 1
            assert np.abs(fg.apply(e) - g.apply(f.apply(e))).max() <= 1e-9
    lazy = Channel(f.in_layout, f.out_layout, fn=f.apply).then(g)
    assert np.abs(lazy.apply(np.eye(2) / 2) - fg.apply(np.eye(2) / 2)).max() <= 1e-12


def test_tensor_identity_and_trace_out():
    ch = random_channel(2, 3, 2, 3)
    extra = RegisterLayout.of(("E", 2))
    big = ch.tensor_identity(extra)
    rho_a, rho_e = random_density(2, 1), random_density(2, 2)
    out = big.apply(np.kron(rho_a, rho_e))
    assert np.abs(out - np.kron(ch.apply(rho_a), rho_e)).max() <= 1e-12
    fn_big = Channel(ch.in_layout, ch.out_layout, fn=ch.apply).tensor_identity(extra)
    assert np.abs(fn_big.apply(np.kron(rho_a, rho_e)) - out).max() <= 1e-12
    back = big.trace_out(["E"])
    assert np.abs(back.apply(np.kron(rho_a, rho_e)) - ch.apply(rho_a)).max() <= 1e-12


def test_equal_channels_agree_on_entangled_inputs():
    ch = random_channel(2, 3, 2, 11)
    twin = Channel(ch.in_layout, ch.out_layout, fn=ch.apply)
    omega = maximally_entangled(2)
    a = ch.tensor_identity(RegisterLayout.of(("E", 2))).apply(omega)
    b = twin.tensor_identity(RegisterLayout.of(("E", 2))).apply(omega)
    assert state_trace_distance(a, b) <= 1e-9


def test_density_operator_application():
    ch = identity_channel(Q1)
    rho = DensityOperator(Q1, np.eye(2) / 2)
    assert ch(rho).layout == Q1


def test_choi_file_round_trip(tmp_path):
    j = choi_of(random_channel(2, 2, 2, 3))
    path = tmp_path / "c.bin"
    save_choi(j, path)
    raw = path.read_bytes()
    assert raw[:6] == b"QCHOI1"
    assert len(raw) == 6 + 16 + 16 * 16
    back = load_choi(path)
    assert (back.d_in, back.d_out) == (2, 2)
    assert np.array_equal(back.matrix, j.matrix)


def test_choi_file_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        load_choi(path)


def test_choi_partial_trace_forms_agree():
    ch = random_channel(2, 3, 2, 6)
    factored = choi_of(ch)
    dense = ChoiMatrix(2, 3, _matrix=factored.matrix)
    assert np.allclose(factored.partial_trace_output(), np.eye(2))
    assert np.allclose(dense.partial_trace_output(), np.eye(2))


def _labeled(seed):
    w = RegisterLayout.of(("W", 2))
    q = RegisterLayout.of(("Q", 2))
    lab = RegisterLayout.of(("L", 3))
    v = random_unitary(6, seed)[:, :2].reshape(2, 3, 2)
    blocks = {(l,): v[:, l, :][None] for l in range(3)}
    return LabeledChannel(w, q, lab, blocks)


def test_labeled_channel_matches_dense_form():
    a, b = _labeled(1), _labeled(2)
    rho = random_density(2, 0)
    assert np.abs(a.apply(rho) - a.to_channel().apply(rho)).max() <= 1e-14
    assert a.tp_residual() <= 1e-12
    assert verify_admissible(a).ok
    dense = choi_trace_distance(a.to_channel(), b.to_channel())
    assert labeled_trace_distance(a, b) == pytest.approx(dense, abs=1e-12)
    assert choi_trace_distance(a, b) == pytest.approx(dense, abs=1e-12)
    assert choi_trace_distance(a, b.to_channel()) == pytest.approx(dense, abs=1e-12)


def test_labeled_channel_label_range():
    w = RegisterLayout.of(("W", 2))
    with pytest.raises(ValueError):
        LabeledChannel(w, w, RegisterLayout.of(("L", 2)), {(2,): np.eye(2)[None]})
