"""Quantum rewinding: simulator assemblies, the compressed operator Q, the
two-dimensional rotation decomposition, and the rewinding procedures.

An assembly lives on registers ``W, V, A, Y, B, Z, R``.  The verifier acts on
``(W, V, A)`` controlled by ``Y``; the simulator's preparation unitary ``T``
acts on ``(Y, B, Z, R)``.  Every ``(Y, B, Z, R)`` basis state is a classical
label ``(y, b, z, r)`` and the operators ``T``, ``V``, ``Pi``, ``Delta`` never
leave the span of ``|0>`` and the labels in the support of ``T|0>``.  The
assembly therefore stores an explicit list of ancilla labels: either every
product basis state (``ancilla="full"``) or only that invariant span
(``ancilla="reachable"``).  Both give the same operators on the relevant
subspace; the reachable form is what makes the 3-coloring simulator fit in
memory.

State arrays have shape ``(batch, dW, dV, dA, K)`` with ``K`` the number of
ancilla labels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .channel import Channel, LabeledChannel
from .config import TOL, check_dim
from .linalg import ContractViolation, RegisterLayout, StatePrep


class DegenerateEigenvalueError(ValueError):
    """An eigenvalue of Q sits too close to 0 or 1 for the rotation analysis."""


class PreconditionError(ValueError):
    """The supplied vector is not an eigenvector within tolerance."""


OUTPUT_REGISTERS = ("W", "V", "A", "Y", "Z")


@dataclass(frozen=True)
class SimulatorAssembly:
    layout: RegisterLayout
    labels: np.ndarray
    prep: StatePrep
    unitaries: np.ndarray
    _groups: dict = field(repr=False, compare=False)

    @property
    def dW(self) -> int:
        return self.layout.dim("W")

    @property
    def dV(self) -> int:
        return self.layout.dim("V")

    @property
    def dA(self) -> int:
        return self.layout.dim("A")

    @property
    def K(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.dW, self.dV, self.dA, self.K)

    @property
    def modeled_dim(self) -> int:
        return self.dW * self.dV * self.dA * self.K

    @property
    def output_layout(self) -> RegisterLayout:
        return self.layout.select(OUTPUT_REGISTERS)

    # -- operators ---------------------------------------------------------

    def zero_state(self, psi: np.ndarray) -> np.ndarray:
        """``|psi>|0_X>`` for each row of ``psi`` (shape ``(batch, dW)``)."""
        psi = np.atleast_2d(np.asarray(psi, dtype=complex))
        out = np.zeros((psi.shape[0],) + self.shape, dtype=complex)
        out[:, :, 0, 0, 0] = psi
        return out

    def apply_T(self, s: np.ndarray) -> np.ndarray:
        return self.prep.apply(s)

    def apply_T_adj(self, s: np.ndarray) -> np.ndarray:
        return self.prep.apply_adjoint(s)

    def _controlled(self, s: np.ndarray, adjoint: bool) -> np.ndarray:
        b = s.shape[0]
        d = self.dW * self.dV * self.dA
        flat = s.reshape(b, d, self.K)
        out = np.empty_like(flat)
        for y, ks in self._groups["y"].items():
            u = self.unitaries[y]
            if adjoint:
                u = u.conj().T
            out[:, :, ks] = np.einsum("ij,bjk->bik", u, flat[:, :, ks])
        return out.reshape(s.shape)

    def apply_V(self, s: np.ndarray) -> np.ndarray:
        return self._controlled(s, adjoint=False)

    def apply_V_adj(self, s: np.ndarray) -> np.ndarray:
        return self._controlled(s, adjoint=True)

    def apply_U(self, s: np.ndarray) -> np.ndarray:
        return self.apply_V(self.apply_T(s))

    def apply_U_adj(self, s: np.ndarray) -> np.ndarray:
        return self.apply_T_adj(self.apply_V_adj(s))

    def pi0(self, s: np.ndarray) -> np.ndarray:
        return s * self._groups["pi0"][None, None, None]

    def pi1(self, s: np.ndarray) -> np.ndarray:
        return s - self.pi0(s)

    def delta0(self, s: np.ndarray) -> np.ndarray:
        out = np.zeros_like(s)
        out[:, :, 0, 0, 0] = s[:, :, 0, 0, 0]
        return out

    def delta1(self, s: np.ndarray) -> np.ndarray:
        return s - self.delta0(s)

    def reflect_zero(self, s: np.ndarray) -> np.ndarray:
        """``Delta0 - Delta1 = I_W (x) (2|0_X><0_X| - I_X)``."""
        return 2 * self.delta0(s) - s

    def linear_operator(self, name: str) -> LinearOperator:
        """Flat-vector view of ``U``, ``Pi0`` or ``Delta0`` on the modeled space."""
        fwd, adj = {
            "U": (self.apply_U, self.apply_U_adj),
            "Pi0": (self.pi0, self.pi0),
            "Delta0": (self.delta0, self.delta0),
        }[name]
        n = self.modeled_dim

        def wrap(f):
            return lambda v: f(np.asarray(v, dtype=complex).reshape((1,) + self.shape)).reshape(-1)

        return LinearOperator((n, n), matvec=wrap(fwd), rmatvec=wrap(adj), dtype=complex)

    # -- outputs -----------------------------------------------------------

    def output_kraus(self, states: np.ndarray) -> np.ndarray:
        """Kraus operators ``W -> (W,V,A,Y,Z)`` after tracing ``B`` and ``R``.

        ``states[w]`` is the (unnormalized) final state for input ``|w>``.
        """
        dW_in = states.shape[0]
        d = self.dW * self.dV * self.dA
        dY, dZ = self.layout.dim("Y"), self.layout.dim("Z")
        g = self._groups
        out = np.zeros((g["n_traced"], d, dY, dZ, dW_in), dtype=complex)
        flat = states.reshape(dW_in, d, self.K).transpose(2, 1, 0)
        out[g["traced"], :, self.labels[:, 0], self.labels[:, 2], :] = flat
        kraus = out.reshape(g["n_traced"], d * dY * dZ, dW_in)
        norms = np.linalg.norm(kraus.reshape(kraus.shape[0], -1), axis=1)
        return kraus[norms > 0]

    @property
    def labeled_output(self) -> bool:
        """True when every traced ``(b, r)`` value carries a single ``(y, z)`` label."""
        return self._groups["labeled"]

    def output_blocks(self, states: np.ndarray) -> dict:
        """Like :meth:`output_kraus`, keyed by the classical ``(y, z)`` output label."""
        if not self.labeled_output:
            raise ContractViolation("Y and Z are not classical labels of the traced registers")
        dW_in = states.shape[0]
        flat = states.reshape(dW_in, -1, self.K)
        keep = np.flatnonzero(np.linalg.norm(flat, axis=(0, 1)) > 0)
        blocks: dict[tuple[int, int], list] = {}
        for k in keep:
            key = (int(self.labels[k, 0]), int(self.labels[k, 2]))
            blocks.setdefault(key, []).append(flat[:, :, k].T)
        return {key: np.stack(v) for key, v in blocks.items()}

    def labeled_channel(self, block_list: Sequence[dict]) -> LabeledChannel:
        merged: dict = {}
        for blocks in block_list:
            for key, ks in blocks.items():
                merged.setdefault(key, []).append(ks)
        q = self.layout.select(["W", "V", "A"])
        return LabeledChannel(self.layout.select(["W"]), q, self.layout.select(["Y", "Z"]),
                              {key: np.concatenate(v) for key, v in merged.items()})


def build_assembly(w_dim: int, v_dim: int, unitaries: np.ndarray,
                   dims: dict[str, int],
                   support: Sequence[tuple[tuple[int, int, int, int], complex]],
                   ancilla: str = "reachable",
                   pi0: Callable[[int, int], bool] | None = None) -> SimulatorAssembly:
    """Assemble a simulator from the verifier unitaries and the prepared superposition.

    ``dims`` gives the dimensions of ``A, Y, B, Z, R``; ``support`` lists
    ``((y, b, z, r), amplitude)`` pairs of ``T|0>``.  ``pi0(a, b)`` selects the
    success outcome, defaulting to ``a == b``.
    """
    a_dim = dims["A"]
    layout = RegisterLayout.of(("W", w_dim), ("V", v_dim), ("A", a_dim), ("Y", dims["Y"]),
                               ("B", dims["B"]), ("Z", dims["Z"]), ("R", dims["R"]))
    unitaries = np.asarray(unitaries, dtype=complex)
    d = w_dim * v_dim * a_dim
    if unitaries.shape != (dims["Y"], d, d):
        raise ContractViolation(f"unitaries shape {unitaries.shape} != {(dims['Y'], d, d)}")
    check_dim(layout.total if ancilla == "full" else d * (len(support) + 1), "assembly dimension")

    anc_dims = (dims["Y"], dims["B"], dims["Z"], dims["R"])
    if ancilla == "full":
        labels = list(itertools.product(*(range(x) for x in anc_dims)))
    elif ancilla == "reachable":
        labels = [(0, 0, 0, 0)]
        seen = {labels[0]}
        for lab, _ in support:
            if tuple(lab) not in seen:
                seen.add(tuple(lab))
                labels.append(tuple(lab))
    else:
        raise ValueError(f"unknown ancilla mode {ancilla!r}")
    index = {lab: k for k, lab in enumerate(labels)}
    target = np.zeros(len(labels), dtype=complex)
    for lab, amp in support:
        lab = tuple(lab)
        for x, dx in zip(lab, anc_dims):
            if not 0 <= x < dx:
                raise ContractViolation(f"label {lab} outside ancilla dims {anc_dims}")
        target[index[lab]] += amp
    prep = StatePrep(target)
    labels_arr = np.array(labels, dtype=np.int64).reshape(-1, 4)

    pi0 = pi0 or (lambda a, b: a == b)
    mask = np.array([[1.0 if pi0(a, b) else 0.0 for b in labels_arr[:, 1]] for a in range(a_dim)])
    by_y: dict[int, np.ndarray] = {}
    for y in np.unique(labels_arr[:, 0]):
        by_y[int(y)] = np.flatnonzero(labels_arr[:, 0] == y)
    traced_keys = {}
    traced = np.array([traced_keys.setdefault((int(b), int(r)), len(traced_keys))
                       for b, r in labels_arr[:, [1, 3]]], dtype=np.int64)
    yz = {}
    for t, (y, z) in zip(traced, labels_arr[:, [0, 2]]):
        yz.setdefault(int(t), set()).add((int(y), int(z)))
    labeled = all(len(v) == 1 for v in yz.values())
    groups = {"y": by_y, "pi0": mask, "traced": traced, "n_traced": len(traced_keys), "labeled": labeled}
    return SimulatorAssembly(layout, labels_arr, prep, unitaries, groups)


# -- Q and the eigenvalue claim ----------------------------------------------

def compress_q(asm: SimulatorAssembly) -> np.ndarray:
    """``Q = (I (x) <0_X|) T* V* Pi0 V T (I (x) |0_X>)`` as a ``dW x dW`` matrix."""
    s = asm.pi0(asm.apply_U(asm.zero_state(np.eye(asm.dW)))).reshape(asm.dW, -1)
    q = s.conj() @ s.T
    return (q + q.conj().T) / 2


def success_probability(asm: SimulatorAssembly, psi: np.ndarray) -> float:
    """``||Pi0 V T (|psi>|0_X>)||^2``, evaluated directly on the state."""
    s = asm.pi0(asm.apply_U(asm.zero_state(psi)))
    return float(np.vdot(s, s).real)


def claim_operator_residual(asm: SimulatorAssembly, lam: float, batch: int = 128) -> float:
    """Frobenius norm of ``Delta0 T* V* Pi0 V T Delta0 - lam * Delta0`` over the modeled space.

    The operator is applied column by column to every basis vector.
    """
    n = asm.modeled_dim
    total = 0.0
    for start in range(0, n, batch):
        stop = min(n, start + batch)
        cols = np.zeros((stop - start, n), dtype=complex)
        cols[np.arange(stop - start), np.arange(start, stop)] = 1.0
        s = cols.reshape((-1,) + asm.shape)
        d0 = asm.delta0(s)
        img = asm.delta0(asm.apply_U_adj(asm.pi0(asm.apply_U(d0))))
        total += float(np.sum(np.abs(img - lam * d0) ** 2))
    return float(np.sqrt(total))


# -- the rotation decomposition ----------------------------------------------

@dataclass(frozen=True)
class LemmaDecomposition:
    lam: float
    gamma0: np.ndarray
    gamma1: np.ndarray
    delta0: np.ndarray
    delta1: np.ndarray
    eigen_residual: float
    residuals: dict[str, float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def lemma_decompose(U, Pi0, Delta0, gamma0: np.ndarray,
                    tol: float = TOL.structural, eps: float = TOL.degenerate) -> LemmaDecomposition:
    """Split ``U`` on the span of ``gamma0`` into a pair of rotations on two planes.

    ``U``, ``Pi0`` and ``Delta0`` may be dense matrices or linear operators;
    ``Pi1 = I - Pi0`` and ``Delta1 = I - Delta0``.
    """
    U, Pi0, Delta0 = aslinearoperator(U), aslinearoperator(Pi0), aslinearoperator(Delta0)
    g0 = np.asarray(gamma0, dtype=complex).ravel()
    if abs(np.linalg.norm(g0) - 1) > tol:
        raise PreconditionError("gamma0 is not a unit vector")

    u_g0 = U.matvec(g0)
    p0 = Pi0.matvec(u_g0)
    image = Delta0.matvec(U.rmatvec(Pi0.matvec(U.matvec(Delta0.matvec(g0)))))
    lam = float(np.vdot(g0, image).real)
    eig_res = float(np.linalg.norm(image - lam * g0))
    if eig_res > tol:
        raise PreconditionError(f"gamma0 is not an eigenvector (residual {eig_res:.3e})")
    if not eps < lam < 1 - eps:
        raise DegenerateEigenvalueError(f"eigenvalue {lam} outside ({eps}, {1 - eps})")

    s, c = np.sqrt(lam), np.sqrt(1 - lam)
    d0 = p0 / s
    d1 = (u_g0 - p0) / c
    ud0 = U.rmatvec(d0)
    g1 = (ud0 - Delta0.matvec(ud0)) / c
    ud1 = U.rmatvec(d1)
    residuals = {
        "orth_gamma": abs(np.vdot(g0, g1)),
        "orth_delta": abs(np.vdot(d0, d1)),
        "forward_gamma0": np.linalg.norm(u_g0 - (s * d0 + c * d1)),
        "forward_gamma1": np.linalg.norm(U.matvec(g1) - (c * d0 - s * d1)),
        "adjoint_delta0": np.linalg.norm(ud0 - (s * g0 + c * g1)),
        "adjoint_delta1": np.linalg.norm(ud1 - (c * g0 - s * g1)),
    }
    return LemmaDecomposition(lam, g0, g1, d0, d1, eig_res,
                              {k: float(v) for k, v in residuals.items()})


def rotation_example(lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real 2x2 rotation with ``|<0|U|0>|^2 = lam`` and ``Pi0 = Delta0 = |0><0|``."""
    theta = np.arccos(np.sqrt(lam))
    u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], dtype=complex)
    p = np.diag([1.0, 0.0]).astype(complex)
    return u, p, p.copy()


# -- procedures --------------------------------------------------------------

@dataclass(frozen=True)
class GIBranches:
    gamma0: np.ndarray
    prob_outcome0: float
    delta0: np.ndarray
    delta1: np.ndarray
    recovered: np.ndarray


def first_round_branches(asm: SimulatorAssembly, psi: np.ndarray) -> GIBranches:
    """Evolve one pure input through the single-rewind procedure, keeping each branch."""
    g0 = asm.zero_state(psi)
    s = asm.apply_U(g0)
    b0, b1 = asm.pi0(s), asm.pi1(s)
    p0 = float(np.vdot(b0, b0).real)
    d0 = b0 / np.sqrt(p0)
    d1 = b1 / np.sqrt(1 - p0)
    rec = asm.apply_U(asm.reflect_zero(asm.apply_U_adj(d1)))
    return GIBranches(g0[0], p0, d0[0], d1[0], rec[0])


def simulate_gi(asm: SimulatorAssembly) -> Channel:
    """The single-rewind simulator as a channel ``W -> (W, V, A, Y, Z)``.

    Both measurement branches contribute; the outcome-1 branch is rewound once
    with ``U* ``, the reflection about ``|0_X>`` and ``U``, then output.
    """
    s = asm.apply_U(asm.zero_state(np.eye(asm.dW)))
    good = asm.pi0(s)
    rewound = asm.apply_U(asm.reflect_zero(asm.apply_U_adj(asm.pi1(s))))
    kraus = np.concatenate([asm.output_kraus(good), asm.output_kraus(rewound)])
    return Channel.from_kraus(kraus, asm.layout.select(["W"]), asm.output_layout)


def closed_form_residual(lam: float, k: int) -> float:
    """Failure probability after ``k`` rounds for a single eigenvalue ``lam``."""
    return (1 - lam) * (1 - 4 * lam * (1 - lam)) ** (k - 1)


def default_iterations(eigenvalues, target: float = 1e-6, k_max: int = 10_000) -> int:
    for k in range(1, k_max + 1):
        if max(closed_form_residual(float(l), k) for l in eigenvalues) <= target:
            return k
    raise DegenerateEigenvalueError(f"no k <= {k_max} reaches residual {target}")


@dataclass
class IteratedResult:
    success_probs: list[float]
    reach_probs: list[float]
    residual_failure: float
    success_channel: Channel | LabeledChannel
    conditional_channel: Channel | LabeledChannel
    q_eigenvalues: np.ndarray
    component_residuals: np.ndarray

    @property
    def first_success(self) -> float:
        return self.success_probs[0]


def _gram(states: np.ndarray) -> np.ndarray:
    s = states.reshape(states.shape[0], -1)
    return s.conj() @ s.T


def simulate_iterated(asm: SimulatorAssembly, k: int | None = None, rho: np.ndarray | None = None,
                      eps: float = TOL.degenerate, flat_tol: float = TOL.structural) -> IteratedResult:
    """The repeat-until-success rewinding loop, truncated after ``k`` rounds.

    Each round applies ``U``, measures ``{Pi0, Pi1}``, and on failure applies
    ``U*`` and the reflection about ``|0_X>``.  Probabilities refer to the
    input ``rho`` (maximally mixed by default); ``success_probs[j]`` is the
    success probability of round ``j + 1`` conditioned on reaching it.
    """
    q = compress_q(asm)
    eigs, vecs = np.linalg.eigh(q)
    if eigs[0] <= eps or eigs[-1] >= 1 - eps:
        raise DegenerateEigenvalueError(f"spectrum of Q {eigs} not inside ({eps}, {1 - eps})")
    if k is None:
        k = default_iterations(eigs)
    if k < 1:
        raise ValueError("at least one iteration is required")
    dW = asm.dW
    rho = np.eye(dW, dtype=complex) / dW if rho is None else np.asarray(rho, dtype=complex)

    labeled = asm.labeled_output
    emit = asm.output_blocks if labeled else asm.output_kraus
    state = asm.apply_U(asm.zero_state(np.eye(dW)))
    kraus, absolute = [], []
    for j in range(k):
        good = asm.pi0(state)
        fail = state - good
        kraus.append(emit(good))
        absolute.append(float(np.trace(_gram(good) @ rho).real))
        if j + 1 < k:
            state = asm.apply_U(asm.reflect_zero(asm.apply_U_adj(fail)))
    residual = float(np.trace(_gram(fail) @ rho).real)

    reach, probs, left = [], [], 1.0
    for p in absolute:
        reach.append(left)
        probs.append(p / left if left > 0 else 0.0)
        left -= p
    w = asm.layout.select(["W"])
    if labeled:
        success = asm.labeled_channel(kraus)
    else:
        success = Channel.from_kraus(np.concatenate(kraus), w, asm.output_layout)
    if eigs[-1] - eigs[0] <= flat_tol:
        scale = 1.0 / np.sqrt(1 - closed_form_residual(float(eigs.mean()), k))
        if labeled:
            conditional = success.scaled(scale)
        else:
            conditional = Channel.from_kraus(success.kraus * scale, w, asm.output_layout)
    else:
        def conditional_fn(x):
            out = success.apply(x)
            return out / np.trace(out)
        # nonlinear: renormalized per input
        conditional = Channel(w, asm.output_layout, fn=conditional_fn)

    weights = np.real(np.einsum("wi,wv,vi->i", vecs.conj(), rho, vecs))
    comp = np.array([weights[i] * closed_form_residual(float(eigs[i]), k) for i in range(dW)])
    return IteratedResult(probs, reach, residual, success, conditional, eigs, comp)
