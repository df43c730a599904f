"""Admissible maps: application, Choi matrices, admissibility and distances.

Choi convention (input factor second)::

    J(Phi) = sum_ij Phi(|i><j|) (x) |i><j|

so ``J[(o, i), (o', j)] = <o| Phi(|i><j|) |o'>``.  For a Kraus operator ``K``
the matching Choi vector is ``K.reshape(-1)``.

The diamond distance is not computed; ``choi_trace_distance`` is used with
``||J(D)||_1 / d_in <= ||D||_<> <= ||J(D)||_1``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import TOL, check_dim
from .linalg import DensityOperator, RegisterLayout, trace_norm

CHOI_MAGIC = b"QCHOI1"
# above this Choi dimension, Kraus factors are used instead of dense matrices
DENSE_CHOI_LIMIT = 4096


class Channel:
    """A linear map from operators on ``in_layout`` to operators on ``out_layout``.

    Backed either by Kraus operators (array of shape ``(r, d_out, d_in)``) or
    by an arbitrary linear function on matrices.  Instances are immutable.
    """

    def __init__(self, in_layout: RegisterLayout, out_layout: RegisterLayout,
                 kraus: np.ndarray | None = None,
                 fn: Callable[[np.ndarray], np.ndarray] | None = None):
        if (kraus is None) == (fn is None):
            raise ValueError("give exactly one of kraus= or fn=")
        self.in_layout = in_layout
        self.out_layout = out_layout
        if kraus is not None:
            kraus = np.asarray(kraus, dtype=complex)
            if kraus.ndim == 2:
                kraus = kraus[None]
            expected = (out_layout.total, in_layout.total)
            if kraus.shape[1:] != expected:
                raise ValueError(f"Kraus shape {kraus.shape[1:]} != {expected}")
            kraus.setflags(write=False)
        self.kraus = kraus
        self._fn = fn

    @classmethod
    def from_kraus(cls, kraus, in_layout: RegisterLayout, out_layout: RegisterLayout) -> "Channel":
        return cls(in_layout, out_layout, kraus=np.asarray(kraus))

    @property
    def d_in(self) -> int:
        return self.in_layout.total

    @property
    def d_out(self) -> int:
        return self.out_layout.total

    def apply(self, rho) -> np.ndarray:
        if isinstance(rho, DensityOperator):
            rho = rho.matrix
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.d_in, self.d_in):
            raise ValueError(f"input shape {rho.shape} does not match d_in={self.d_in}")
        if self.kraus is None:
            return np.asarray(self._fn(rho), dtype=complex)
        tmp = self.kraus @ rho
        return np.einsum("kab,kcb->ac", tmp, self.kraus.conj())

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        return DensityOperator(self.out_layout, self.apply(rho))

    def then(self, second: "Channel") -> "Channel":
        """``second`` applied after ``self``."""
        if second.in_layout.dims != self.out_layout.dims:
            raise ValueError("output of the first channel does not match input of the second")
        if self.kraus is not None and second.kraus is not None:
            k = np.einsum("jab,ibc->jiac", second.kraus, self.kraus)
            return Channel(self.in_layout, second.out_layout, kraus=k.reshape(-1, second.d_out, self.d_in))
        return Channel(self.in_layout, second.out_layout, fn=lambda x: second.apply(self.apply(x)))

    def tensor_identity(self, extra: RegisterLayout) -> "Channel":
        """``self (x) id`` with the untouched registers appended last."""
        de = extra.total
        in_l, out_l = self.in_layout + extra, self.out_layout + extra
        if self.kraus is not None:
            eye = np.eye(de, dtype=complex)
            k = np.stack([np.kron(kk, eye) for kk in self.kraus])
            return Channel(in_l, out_l, kraus=k)

        def fn(x):
            d_in = self.d_in
            blocks = x.reshape(d_in, de, d_in, de)
            out = np.zeros((self.d_out, de, self.d_out, de), dtype=complex)
            for e in range(de):
                for f in range(de):
                    out[:, e, :, f] = self.apply(blocks[:, e, :, f])
            return out.reshape(self.d_out * de, self.d_out * de)

        return Channel(in_l, out_l, fn=fn)

    def trace_out(self, names: Sequence[str]) -> "Channel":
        """Discard output registers ``names``."""
        keep = self.out_layout.without(names)
        if self.kraus is None:
            from .linalg import partial_trace

            return Channel(self.in_layout, keep,
                           fn=lambda x: partial_trace(DensityOperator(self.out_layout, self.apply(x)), names).matrix)
        dims = self.out_layout.dims
        drop = [self.out_layout.index(n) for n in names]
        kept = [i for i in range(len(dims)) if i not in drop]
        r = self.kraus.shape[0]
        k = self.kraus.reshape((r,) + dims + (self.d_in,))
        order = [0] + [1 + i for i in drop] + [1 + i for i in kept] + [1 + len(dims)]
        k = k.transpose(order).reshape(-1, keep.total, self.d_in)
        return Channel(self.in_layout, keep, kraus=k)


def identity_channel(layout: RegisterLayout) -> Channel:
    return Channel(layout, layout, kraus=np.eye(layout.total, dtype=complex))


def unitary_channel(u: np.ndarray, layout: RegisterLayout) -> Channel:
    return Channel(layout, layout, kraus=np.asarray(u, dtype=complex))


def depolarizing_channel(layout: RegisterLayout) -> Channel:
    d = layout.total
    return Channel(layout, layout, fn=lambda x: np.trace(x) * np.eye(d, dtype=complex) / d)


def transpose_map(layout: RegisterLayout) -> Channel:
    """Positive but not completely positive; a standard negative example."""
    return Channel(layout, layout, fn=lambda x: x.T.copy())


@dataclass
class ChoiMatrix:
    """Choi matrix of dimension ``d_out * d_in``.

    When ``factor`` is set, ``J = factor @ factor.conj().T`` and the dense
    matrix is only formed on demand.
    """

    d_in: int
    d_out: int
    _matrix: np.ndarray | None = None
    factor: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.d_in * self.d_out

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            check_dim(self.dim, "Choi dimension")
            self._matrix = self.factor @ self.factor.conj().T
        return self._matrix

    def partial_trace_output(self) -> np.ndarray:
        if self.factor is not None:
            f = self.factor.reshape(self.d_out, self.d_in, -1)
            return np.einsum("oik,ojk->ij", f, f.conj())
        j = self.matrix.reshape(self.d_out, self.d_in, self.d_out, self.d_in)
        return np.einsum("oioj->ij", j)


def choi_of(handle: Channel) -> ChoiMatrix:
    d_in, d_out = handle.d_in, handle.d_out
    if handle.kraus is not None:
        factor = handle.kraus.reshape(handle.kraus.shape[0], -1).T
        return ChoiMatrix(d_in, d_out, factor=factor)
    check_dim(d_in * d_out, "Choi dimension")
    j = np.zeros((d_out, d_in, d_out, d_in), dtype=complex)
    for i in range(d_in):
        for k in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[i, k] = 1.0
            out = handle.apply(unit)
            if out.shape != (d_out, d_out):
                raise ValueError(f"channel output shape {out.shape} does not match d_out={d_out}")
            j[:, i, :, k] = out
    return ChoiMatrix(d_in, d_out, _matrix=j.reshape(d_in * d_out, d_in * d_out))


def _as_choi(x) -> ChoiMatrix:
    if isinstance(x, LabeledChannel):
        x = x.to_channel()
    return choi_of(x) if isinstance(x, Channel) else x


def choi_trace_distance(a, b) -> float:
    """``||J(a) - J(b)||_1``; accepts Choi matrices or channels."""
    if isinstance(a, LabeledChannel) and isinstance(b, LabeledChannel):
        return labeled_trace_distance(a, b)
    a, b = _as_choi(a), _as_choi(b)
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise ValueError(f"Choi dimension mismatch: {(a.d_in, a.d_out)} vs {(b.d_in, b.d_out)}")
    if a.factor is not None and b.factor is not None and a.dim > DENSE_CHOI_LIMIT:
        return _factored_trace_distance(a.factor, b.factor)
    return trace_norm(a.matrix - b.matrix)


def _factored_trace_distance(fa: np.ndarray, fb: np.ndarray) -> float:
    # FA FA^+ - FB FB^+ = C S C^+ with C = [FA FB]; with C = QR its spectrum is that of R S R^+.
    c = np.hstack([fa, fb])
    q, r = np.linalg.qr(c, mode="reduced")
    s = np.concatenate([np.ones(fa.shape[1]), -np.ones(fb.shape[1])])
    core = (r * s) @ r.conj().T
    return float(np.abs(np.linalg.eigvalsh((core + core.conj().T) / 2)).sum())


def state_trace_distance(rho, xi) -> float:
    """Optimal one-shot distinguishing advantage ``(1/2)||rho - xi||_1``."""
    if isinstance(rho, DensityOperator) and isinstance(xi, DensityOperator):
        if rho.layout.dims != xi.layout.dims:
            raise ValueError("states live on different layouts")
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    x = xi.matrix if isinstance(xi, DensityOperator) else np.asarray(xi)
    if r.shape != x.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {x.shape}")
    return 0.5 * trace_norm(r - x)


@dataclass(frozen=True)
class AdmissibilityReport:
    cp_ok: bool
    tp_ok: bool
    min_choi_eigenvalue: float
    tp_residual: float

    @property
    def ok(self) -> bool:
        return self.cp_ok and self.tp_ok


def verify_admissible(handle, tol: float = TOL.cp) -> AdmissibilityReport:
    if isinstance(handle, LabeledChannel):
        # Kraus form is CP by construction
        res = handle.tp_residual()
        return AdmissibilityReport(True, res <= tol, 0.0, res)
    j = choi_of(handle)
    if j.factor is not None and j.dim > DENSE_CHOI_LIMIT:
        # J = F F^+ is PSD by construction; report the smallest eigenvalue of the Gram form
        g = j.factor.conj().T @ j.factor
        min_eig = min(0.0, float(np.linalg.eigvalsh(g)[0]))
    else:
        m = j.matrix
        min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    tp_res = float(np.linalg.norm(j.partial_trace_output() - np.eye(j.d_in)))
    return AdmissibilityReport(min_eig >= -tol, tp_res <= tol, min_eig, tp_res)


def maximally_entangled(d: int) -> np.ndarray:
    """Density matrix of ``sum_i |i>|i> / sqrt(d)`` on ``C^d (x) C^d``."""
    v = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return np.outer(v, v.conj())


def save_choi(j: ChoiMatrix, path) -> None:
    """Write ``QCHOI1``, d_in and d_out as little-endian u64, then row-major complex128 entries."""
    m = np.ascontiguousarray(j.matrix, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(CHOI_MAGIC)
        fh.write(struct.pack("<QQ", j.d_in, j.d_out))
        fh.write(m.tobytes(order="C"))


def load_choi(path) -> ChoiMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHOI_MAGIC))
        if magic != CHOI_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        d_in, d_out = struct.unpack("<QQ", fh.read(16))
        dim = d_in * d_out
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != dim * dim:
        raise ValueError(f"expected {dim * dim} entries, found {data.size}")
    return ChoiMatrix(int(d_in), int(d_out), _matrix=data.reshape(dim, dim).astype(complex))


class LabeledChannel:
    """A channel whose output is block diagonal in classical label registers.

    The map is ``rho -> sum_l Phi_l(rho) (x) |l><l|`` with ``Phi_l`` given by
    Kraus operators from ``in_layout`` to ``quantum_layout``; the output
    layout is ``quantum_layout + label_layout``.  Labels are tuples of ints.
    """

    def __init__(self, in_layout: RegisterLayout, quantum_layout: RegisterLayout,
                 label_layout: RegisterLayout, blocks: dict):
        self.in_layout = in_layout
        self.quantum_layout = quantum_layout
        self.label_layout = label_layout
        shape = (quantum_layout.total, in_layout.total)
        clean = {}
        for label, ks in blocks.items():
            label = tuple(int(x) for x in label)
            if len(label) != len(label_layout.dims) or any(
                    not 0 <= x < d for x, d in zip(label, label_layout.dims)):
                raise ValueError(f"label {label} outside {label_layout.dims}")
            ks = np.asarray(ks, dtype=complex)
            if ks.ndim == 2:
                ks = ks[None]
            if ks.shape[1:] != shape:
                raise ValueError(f"block Kraus shape {ks.shape[1:]} != {shape}")
            ks.setflags(write=False)
            clean[label] = ks
        self.blocks = dict(sorted(clean.items()))

    @property
    def out_layout(self) -> RegisterLayout:
        return self.quantum_layout + self.label_layout

    @property
    def d_in(self) -> int:
        return self.in_layout.total

    @property
    def d_out(self) -> int:
        return self.out_layout.total

    def scaled(self, factor: float) -> "LabeledChannel":
        return LabeledChannel(self.in_layout, self.quantum_layout, self.label_layout,
                              {k: v * factor for k, v in self.blocks.items()})

    def apply_blocks(self, rho) -> dict:
        rho = np.asarray(rho.matrix if isinstance(rho, DensityOperator) else rho, dtype=complex)
        return {k: np.einsum("kab,bc,kdc->ad", ks, rho, ks.conj()) for k, ks in self.blocks.items()}

    def label_index(self, label) -> int:
        return int(np.ravel_multi_index(label, self.label_layout.dims))

    def apply(self, rho) -> np.ndarray:
        check_dim(self.d_out, "labeled channel output")
        dq, dl = self.quantum_layout.total, self.label_layout.total
        out = np.zeros((dq, dl, dq, dl), dtype=complex)
        for label, block in self.apply_blocks(rho).items():
            i = self.label_index(label)
            out[:, i, :, i] = block
        return out.reshape(dq * dl, dq * dl)

    def to_channel(self) -> Channel:
        check_dim(self.d_out * self.d_in, "labeled channel Choi dimension")
        dq, dl = self.quantum_layout.total, self.label_layout.total
        kraus = []
        for label, ks in self.blocks.items():
            full = np.zeros((ks.shape[0], dq, dl, self.d_in), dtype=complex)
            full[:, :, self.label_index(label), :] = ks
            kraus.append(full.reshape(ks.shape[0], dq * dl, self.d_in))
        return Channel(self.in_layout, self.out_layout, kraus=np.concatenate(kraus))

    def tp_residual(self) -> float:
        total = sum(np.einsum("kba,kbc->ac", ks.conj(), ks) for ks in self.blocks.values())
        return float(np.linalg.norm(total - np.eye(self.d_in)))


def _block_distance(ka: np.ndarray | None, kb: np.ndarray | None, d_in: int, d_out: int) -> float:
    fa = None if ka is None else ka.reshape(ka.shape[0], -1).T
    fb = None if kb is None else kb.reshape(kb.shape[0], -1).T
    if fa is None:
        fa = np.zeros((d_out * d_in, 0), dtype=complex)
    if fb is None:
        fb = np.zeros((d_out * d_in, 0), dtype=complex)
    if d_out * d_in > DENSE_CHOI_LIMIT:
        return _factored_trace_distance(fa, fb)
    return trace_norm(fa @ fa.conj().T - fb @ fb.conj().T)


def labeled_trace_distance(a: LabeledChannel, b: LabeledChannel) -> float:
    """Choi trace distance of two labeled channels, summed block by block."""
    if (a.in_layout.dims, a.quantum_layout.dims, a.label_layout.dims) != (
            b.in_layout.dims, b.quantum_layout.dims, b.label_layout.dims):
        raise ValueError("labeled channels have different layouts")
    keys = sorted(set(a.blocks) | set(b.blocks))
    return float(sum(_block_distance(a.blocks.get(k), b.blocks.get(k), a.d_in, a.quantum_layout.total)
                     for k in keys))
