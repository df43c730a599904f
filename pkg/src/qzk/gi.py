"""The Goldreich-Micali-Wigderson graph isomorphism protocol.

Classical engine (completeness, optimal cheating value), the restricted
quantum verifier ``{V_H}``, its message operators ``M_{H,a}`` and the
interaction channel, built twice along independent code paths.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt
from typing import Callable

import numpy as np

from . import rewind
from .channel import Channel
from .combinatorics import (
    Graph,
    Permutation,
    all_graphs,
    apply_permutation,
    compose,
    enumerate_group,
    find_isomorphism,
    orbit,
    permutation_index,
)
from .linalg import ContractViolation, RegisterLayout, embed_operator, projector, random_unitary


class NotIsomorphicError(ValueError):
    """Channel constructions are only defined on yes-instances."""


@dataclass(frozen=True)
class GIInstance:
    g0: Graph
    g1: Graph
    sigma: Permutation

    @classmethod
    def from_graphs(cls, g0: Graph, g1: Graph) -> "GIInstance":
        sigma = find_isomorphism(g0, g1)
        return cls(g0, g1, sigma if sigma is not None else Permutation.identity(g0.n))

    @property
    def n(self) -> int:
        return self.g0.n

    @property
    def isomorphic(self) -> bool:
        return apply_permutation(self.sigma, self.g1) == self.g0

    def require_isomorphic(self) -> None:
        if not self.isomorphic:
            raise NotIsomorphicError("the instance is not a yes-instance (sigma(G1) != G0)")


def single_edge_instance() -> GIInstance:
    """G0 = {1,2}, G1 = {2,3} on three vertices."""
    return GIInstance.from_graphs(Graph.from_edges(3, [(1, 2)]), Graph.from_edges(3, [(2, 3)]))


@dataclass(frozen=True)
class VerifierFamily:
    """Unitaries ``V_H`` on ``(W, V, A)`` for each graph ``H`` in ``y_basis``."""

    n: int
    y_basis: tuple[Graph, ...]
    w_dim: int
    v_dim: int
    unitaries: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        u = np.asarray(self.unitaries, dtype=complex)
        d = self.w_dim * self.v_dim * 2
        if u.shape != (len(self.y_basis), d, d):
            raise ContractViolation(f"unitaries shape {u.shape} != {(len(self.y_basis), d, d)}")
        if len(set(self.y_basis)) != len(self.y_basis):
            raise ContractViolation("y basis graphs must be distinct")
        u.setflags(write=False)
        object.__setattr__(self, "unitaries", u)

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout.of(("W", self.w_dim), ("V", self.v_dim), ("A", 2))

    def index(self, h: Graph) -> int:
        try:
            return self.y_basis.index(h)
        except ValueError:
            raise KeyError(f"{h} is not in the verifier's message basis") from None

    def unitary(self, h: Graph) -> np.ndarray:
        return self.unitaries[self.index(h)]

    @classmethod
    def random(cls, g0: Graph, seed: int, w_dim: int = 2, v_dim: int = 2,
               full_basis: bool = False) -> "VerifierFamily":
        basis = tuple(all_graphs(g0.n)) if full_basis else tuple(orbit(g0))
        d = w_dim * v_dim * 2
        us = np.stack([random_unitary(d, [seed, h.bits]) for h in basis])
        return cls(g0.n, basis, w_dim, v_dim, us, seed)

    @classmethod
    def constant(cls, g0: Graph, unitary: np.ndarray, w_dim: int = 2, v_dim: int = 2) -> "VerifierFamily":
        basis = tuple(orbit(g0))
        return cls(g0.n, basis, w_dim, v_dim, np.stack([unitary] * len(basis)))

    def manifest(self) -> dict:
        if self.seed is None:
            raise ValueError("only seeded families have a manifest")
        return {"n": self.n, "y_basis": [h.bits for h in self.y_basis],
                "dims": {"W": self.w_dim, "V": self.v_dim, "A": 2}, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.manifest(), indent=2, sort_keys=True)

    @classmethod
    def from_manifest(cls, data: dict) -> "VerifierFamily":
        n = int(data["n"])
        basis = tuple(Graph(n, int(b)) for b in data["y_basis"])
        dims = data["dims"]
        if int(dims.get("A", 2)) != 2:
            raise ContractViolation("register A must be a single qubit")
        w, v = int(dims["W"]), int(dims["V"])
        seed = int(data["seed"])
        d = w * v * 2
        us = np.stack([random_unitary(d, [seed, h.bits]) for h in basis])
        return cls(n, basis, w, v, us, seed)

    @classmethod
    def from_json(cls, text: str) -> "VerifierFamily":
        return cls.from_manifest(json.loads(text))


def message_operator(family: VerifierFamily, h: Graph, a: int) -> np.ndarray:
    """``M_{H,a} = (I_{WV} (x) <a|) V_H (I_W (x) |0_{VA}>)``, shape ``(dW*dV, dW)``."""
    u = family.unitary(h)
    w, v = family.w_dim, family.v_dim
    cols = u.reshape(w * v, 2, w, v * 2)[:, :, :, 0]
    return cols[:, a, :]


def output_layout(instance: GIInstance, family: VerifierFamily) -> RegisterLayout:
    return RegisterLayout.of(("W", family.w_dim), ("V", family.v_dim), ("A", 2),
                             ("Y", len(family.y_basis)), ("Z", factorial(instance.n)))


def _check(instance: GIInstance, family: VerifierFamily) -> None:
    instance.require_isomorphic()
    if family.n != instance.n:
        raise ContractViolation("family and instance disagree on n")
    missing = [h for h in orbit(instance.g0) if h not in family.y_basis]
    if missing:
        raise ContractViolation(f"y basis misses orbit graphs {missing}")


def build_phi_direct(instance: GIInstance, family: VerifierFamily) -> Channel:
    """The interaction map as the explicit sum over ``pi`` and ``a``."""
    _check(instance, family)
    out = output_layout(instance, family)
    group = enumerate_group(instance.n)
    dWV, dY, dZ = family.w_dim * family.v_dim, out.dim("Y"), out.dim("Z")
    weight = 1 / sqrt(len(group))
    kraus = []
    for pi in group:
        h = apply_permutation(pi, instance.g0)
        for a in (0, 1):
            tau = compose(pi, instance.sigma.power(a))
            k = np.zeros((dWV, 2, dY, dZ, family.w_dim), dtype=complex)
            k[:, a, family.index(h), permutation_index(tau), :] = weight * message_operator(family, h, a)
            kraus.append(k.reshape(out.total, family.w_dim))
    return Channel.from_kraus(np.stack(kraus), family.layout.select(["W"]), out)


def _shift(dim: int, to: int) -> np.ndarray:
    """Cyclic shift sending ``|0>`` to ``|to>``."""
    return np.roll(np.eye(dim, dtype=complex), to, axis=0)


def build_phi_engine(instance: GIInstance, family: VerifierFamily) -> Channel:
    """The interaction map by simulating the message flow on density matrices.

    The prover writes ``H`` into ``Y``, the verifier applies ``V_H`` (as the
    ``Y``-controlled unitary), ``A`` is dephased, and ``tau`` is written into
    ``Z`` controlled on ``A``.
    """
    _check(instance, family)
    out = output_layout(instance, family)
    group = enumerate_group(instance.n)
    dY, dZ = out.dim("Y"), out.dim("Z")
    d_wva = family.w_dim * family.v_dim * 2
    controlled = np.zeros((d_wva * dY, d_wva * dY), dtype=complex)
    for y in range(dY):
        controlled += np.kron(family.unitaries[y], projector(y, dY))
    big_v = embed_operator(controlled, ["W", "V", "A", "Y"], out)
    dephase = [embed_operator(projector(a, 2), ["A"], out) for a in (0, 1)]
    steps = []
    for pi in group:
        h = apply_permutation(pi, instance.g0)
        write_h = embed_operator(_shift(dY, family.index(h)), ["Y"], out)
        write_tau = sum(
            np.kron(projector(a, 2), _shift(dZ, permutation_index(compose(pi, instance.sigma.power(a)))))
            for a in (0, 1))
        steps.append((big_v @ write_h, embed_operator(write_tau, ["A", "Z"], out)))
    ancilla0 = projector(0, out.total // family.w_dim)

    def fn(x):
        rho0 = np.kron(x, ancilla0)
        acc = np.zeros_like(rho0)
        for u, tau in steps:
            r = u @ rho0 @ u.conj().T
            r = sum(p @ r @ p for p in dephase)
            acc += tau @ r @ tau.conj().T
        return acc / len(steps)

    return Channel(family.layout.select(["W"]), out, fn=fn)


def assemble(instance: GIInstance, family: VerifierFamily, ancilla: str = "full") -> rewind.SimulatorAssembly:
    """Simulator assembly: ``T|0> = (2 n!)^(-1/2) sum_{b,pi} |pi(G_b)>|b>|pi>|pi,b>``."""
    _check(instance, family)
    group = enumerate_group(instance.n)
    amp = 1 / sqrt(2 * len(group))
    graphs = (instance.g0, instance.g1)
    support = []
    for pi in group:
        p = permutation_index(pi)
        for b in (0, 1):
            y = family.index(apply_permutation(pi, graphs[b]))
            support.append(((y, b, p, 2 * p + b), amp))
    dims = {"A": 2, "Y": len(family.y_basis), "B": 2, "Z": len(group), "R": 2 * len(group)}
    return rewind.build_assembly(family.w_dim, family.v_dim, family.unitaries, dims, support, ancilla)


def simulator_target(instance: GIInstance, family: VerifierFamily) -> np.ndarray:
    """The prescribed ``T|0>`` as a dense vector on ``(Y, B, Z, R)``."""
    group = enumerate_group(instance.n)
    n_f = len(group)
    dY = len(family.y_basis)
    t = np.zeros((dY, 2, n_f, 2 * n_f), dtype=complex)
    for pi in group:
        p = permutation_index(pi)
        for b, g in enumerate((instance.g0, instance.g1)):
            t[family.index(apply_permutation(pi, g)), b, p, 2 * p + b] = 1 / sqrt(2 * n_f)
    return t.reshape(-1)


# -- classical engine --------------------------------------------------------

@dataclass(frozen=True)
class GITranscript:
    h: Graph
    a: int
    tau: Permutation
    accept: bool


def classical_round(instance: GIInstance, verifier_choice: Callable[[Graph], int], seed) -> GITranscript:
    """One honest-prover round against an arbitrary verifier bit choice."""
    rng = random.Random(seed)
    pi = rng.choice(enumerate_group(instance.n))
    return _round(instance, pi, verifier_choice)


def _round(instance: GIInstance, pi: Permutation, verifier_choice) -> GITranscript:
    h = apply_permutation(pi, instance.g0)
    a = int(verifier_choice(h))
    if a not in (0, 1):
        raise ValueError(f"verifier must send a bit, got {a}")
    tau = compose(pi, instance.sigma.power(a))
    accept = apply_permutation(tau, (instance.g0, instance.g1)[a]) == h
    return GITranscript(h, a, tau, accept)


def completeness(instance: GIInstance, verifier_choice: Callable[[Graph], int]) -> Fraction:
    """Exact acceptance probability over all prover randomness."""
    group = enumerate_group(instance.n)
    accepted = sum(_round(instance, pi, verifier_choice).accept for pi in group)
    return Fraction(accepted, len(group))


def optimal_cheating_value(instance: GIInstance) -> Fraction:
    """Best acceptance probability of any prover against the honest verifier.

    Maximizes ``([tau0(G0) = H] + [tau1(G1) = H]) / 2`` over every first
    message ``H`` and response pair; the two responses are chosen
    independently, so each indicator is maximized separately.
    """
    group = enumerate_group(instance.n)
    reach0 = {apply_permutation(t, instance.g0) for t in group}
    reach1 = {apply_permutation(t, instance.g1) for t in group}
    best = max((h in reach0) + (h in reach1) for h in all_graphs(instance.n))
    return Fraction(best, 2)
