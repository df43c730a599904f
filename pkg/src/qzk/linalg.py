"""Dense complex linear algebra over named tensor-product registers.

Conventions: kets are 1-d complex arrays, operators are 2-d arrays, and a
:class:`RegisterLayout` fixes the tensor ordering (first register is the
most significant index).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .config import TOL, check_dim


class ContractViolation(ValueError):
    """An input violates a documented precondition."""


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.registers]
        if len(set(names)) != len(names):
            raise ContractViolation(f"duplicate register names in {names}")
        for name, d in self.registers:
            if int(d) < 1:
                raise ContractViolation(f"register {name} has dimension {d}")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple((str(n), int(d)) for n, d in pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    @property
    def total(self) -> int:
        return prod(self.dims)

    def dim(self, name: str) -> int:
        return self.dims[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown register {name!r}; layout has {self.names}") from None

    def select(self, names: Iterable[str]) -> "RegisterLayout":
        return RegisterLayout(tuple((n, self.dim(n)) for n in names))

    def without(self, names: Iterable[str]) -> "RegisterLayout":
        drop = set(names)
        for n in drop:
            self.index(n)
        return RegisterLayout(tuple(r for r in self.registers if r[0] not in drop))

    def __add__(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.registers + other.registers)


@dataclass(frozen=True)
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.layout.total,):
            raise ContractViolation(f"amplitudes shape {amps.shape} != ({self.layout.total},)")
        if not np.all(np.isfinite(amps)):
            raise ContractViolation("non-finite amplitudes")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = TOL.structural) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.layout, np.outer(a, a.conj()))


@dataclass(frozen=True)
class DensityOperator:
    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.total
        if m.shape != (d, d):
            raise ContractViolation(f"matrix shape {m.shape} != ({d}, {d})")
        if not np.all(np.isfinite(m)):
            raise ContractViolation("non-finite entries")
        object.__setattr__(self, "matrix", m)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self, normalized: bool = True, tol: float = TOL.structural) -> None:
        m = self.matrix
        if np.linalg.norm(m - m.conj().T) > tol:
            raise ContractViolation("density operator is not Hermitian")
        if np.linalg.eigvalsh((m + m.conj().T) / 2)[0] < -tol:
            raise ContractViolation("density operator is not positive semidefinite")
        tr = self.trace()
        if normalized and abs(tr - 1) > tol:
            raise ContractViolation(f"trace {tr} != 1")
        if not normalized and tr > 1 + tol:
            raise ContractViolation(f"sub-normalized trace {tr} exceeds 1")


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, guarded by the global dimension cap."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 2 and b.ndim == 2:
        check_dim(max(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), "tensor product dimension")
    else:
        check_dim(a.size * b.size, "tensor product dimension")
    return np.kron(a, b)


def embed_operator(op: np.ndarray, targets: Sequence[str], layout: RegisterLayout) -> np.ndarray:
    """Lift ``op`` acting on ``targets`` to the full ``layout``.

    ``op`` is ordered by ``targets`` (first target most significant), which
    need not be adjacent or in layout order.
    """
    op = np.asarray(op, dtype=complex)
    positions = [layout.index(t) for t in targets]
    if len(set(positions)) != len(positions):
        raise ContractViolation(f"repeated targets {targets}")
    tdims = [layout.dims[p] for p in positions]
    tdim = prod(tdims)
    if op.shape != (tdim, tdim):
        raise ContractViolation(f"operator shape {op.shape} does not match targets of dimension {tdim}")
    total = check_dim(layout.total, "embedded operator dimension")

    rest = [i for i in range(len(layout.dims)) if i not in positions]
    rdims = [layout.dims[i] for i in rest]
    full = np.kron(op, np.eye(prod(rdims), dtype=complex))
    # axis order of `full` is (targets..., rest...) for both output and input
    order = positions + rest
    k = len(order)
    full = full.reshape(tdims + rdims + tdims + rdims)
    inverse = np.argsort(order)
    perm = list(inverse) + [k + i for i in inverse]
    return full.transpose(perm).reshape(total, total)


def partial_trace(rho: DensityOperator, discard: Sequence[str]) -> DensityOperator:
    layout = rho.layout
    drop = [layout.index(n) for n in discard]
    if not drop:
        return rho
    dims = layout.dims
    k = len(dims)
    t = rho.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * k > len(letters):
        raise ContractViolation("too many registers for partial_trace")
    row = list(letters[:k])
    col = list(letters[k:2 * k])
    for i in drop:
        col[i] = row[i]
    keep = [i for i in range(k) if i not in drop]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    new_layout = layout.without(discard)
    d = new_layout.total
    return DensityOperator(new_layout, reduced.reshape(d, d))


def hermitian_eigensystem(m: np.ndarray, tol: float = TOL.eigen) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.linalg.norm(m - m.conj().T) > tol * scale:
        raise ContractViolation("matrix is not Hermitian within tolerance")
    return np.linalg.eigh((m + m.conj().T) / 2)


def trace_norm(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    if np.allclose(m, m.conj().T, atol=1e-14, rtol=0):
        return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def random_unitary(dim: int, seed) -> np.ndarray:
    """Seeded approximately-Haar unitary from the QR decomposition of a Ginibre matrix.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    if dim < 1:
        raise ContractViolation("dimension must be positive")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, seed, rank: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


class StatePrep:
    """Unitary sending ``|0>`` to ``target``, identity off span{|0>, target}.

    Built as a phase reflection on ``|0>`` followed by a Householder
    reflection; applied in O(dim) without forming the matrix.
    """

    def __init__(self, target: np.ndarray, tol: float = TOL.structural):
        t = np.asarray(target, dtype=complex).ravel()
        if abs(np.linalg.norm(t) - 1) > tol:
            raise ContractViolation("target state is not normalized")
        self.dim = t.size
        self.target = t
        t0 = t[0]
        self.phase = t0 / abs(t0) if abs(t0) > 0 else 1.0 + 0j
        # Householder vector exchanging |0> and conj(phase)*target (real overlap)
        w = -np.conj(self.phase) * t
        w[0] += 1.0
        nw = np.linalg.norm(w)
        self.w = None if nw < 1e-15 else w / nw

    def _reflect(self, x: np.ndarray) -> np.ndarray:
        if self.w is None:
            return x
        coeff = np.tensordot(self.w.conj(), x, axes=([0], [-1]))
        return x - 2 * np.multiply.outer(coeff, self.w)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply along the last axis of ``x``."""
        x = np.array(x, dtype=complex)
        x[..., 0] *= self.phase
        return self._reflect(x)

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        x = self._reflect(np.asarray(x, dtype=complex))
        x = np.array(x)
        x[..., 0] *= np.conj(self.phase)
        return x

    def matrix(self) -> np.ndarray:
        check_dim(self.dim, "state preparation dimension")
        return self.apply(np.eye(self.dim, dtype=complex)).T


def state_preparation_unitary(target) -> np.ndarray:
    if isinstance(target, StateVector):
        target = target.amplitudes
    return StatePrep(target).matrix()
