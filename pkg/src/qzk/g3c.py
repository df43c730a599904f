"""Graph 3-coloring zero-knowledge protocol with commitments.

Classical engine (completeness, soundness, the guess-the-edge simulator) and
the quantum single-iteration interaction and rewinding simulator against a
verifier ``{V_y}`` indexed by the composite commitment message ``y``.

Registers: ``A`` holds the challenge edge index (dimension ``m``), ``Y`` the
commitment symbols of all vertices (mixed radix, vertex 1 most significant),
``Z`` the opened color pair ``(c_u, c_v)`` of edge ``u < v`` as
``3 (c_u - 1) + (c_v - 1)``.  The simulator adds ``B`` (guessed edge) and
``R`` (an index for each simulator outcome).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Callable, Sequence

import numpy as np

from . import rewind
from .channel import LabeledChannel
from .combinatorics import (
    ColorAssignment,
    Graph,
    Permutation,
    all_assignments,
    best_assignment,
    best_coloring_score,
    enumerate_group,
    find_coloring,
    is_valid_coloring,
    parse_graph_text,
)
from .commitment import (
    CommitmentScheme,
    UnsupportedOperation,
    binding_check,
    commit,
    distribution,
    verify_opening,
)
from .config import check_dim
from .linalg import ContractViolation, RegisterLayout, random_unitary

COLORS = (1, 2, 3)
Z_DIM = 9

EdgeChoice = Callable[[tuple[str, ...]], int]


def z_index(cu: int, cv: int) -> int:
    return 3 * (cu - 1) + (cv - 1)


def z_pair(index: int) -> tuple[int, int]:
    return index // 3 + 1, index % 3 + 1


@dataclass(frozen=True)
class G3CInstance:
    g: Graph
    phi: ColorAssignment
    colorable: bool

    def __post_init__(self):
        if self.phi.n != self.g.n:
            raise ContractViolation("witness length differs from vertex count")
        if self.colorable and not is_valid_coloring(self.g, self.phi):
            raise ContractViolation("instance marked colorable with an invalid witness")

    @classmethod
    def from_graph(cls, g: Graph, coloring: ColorAssignment | None = None) -> "G3CInstance":
        if coloring is not None and is_valid_coloring(g, coloring):
            return cls(g, coloring, True)
        found = find_coloring(g)
        if found is None:
            return cls(g, ColorAssignment((1,) * g.n), False)
        return cls(g, found, True)

    @classmethod
    def from_text(cls, text: str) -> "G3CInstance":
        g, colors = parse_graph_text(text)
        return cls.from_graph(g, colors)

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.g.edges

    @property
    def m(self) -> int:
        return self.g.m


def triangle() -> G3CInstance:
    return G3CInstance.from_graph(Graph.complete(3), ColorAssignment((1, 2, 3)))


def k4() -> G3CInstance:
    return G3CInstance.from_graph(Graph.complete(4))


def color_permutations() -> list[Permutation]:
    return enumerate_group(3)


# -- verifier family ---------------------------------------------------------

@dataclass(frozen=True)
class G3CVerifierFamily:
    """Unitaries ``V_y`` on ``(W, V, A)`` for every composite commitment message ``y``."""

    n: int
    m: int
    alphabet: tuple[str, ...]
    w_dim: int
    v_dim: int
    unitaries: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        u = np.asarray(self.unitaries, dtype=complex)
        d = self.w_dim * self.v_dim * self.m
        if u.shape != (self.y_dim, d, d):
            raise ContractViolation(f"unitaries shape {u.shape} != {(self.y_dim, d, d)}")
        u.setflags(write=False)
        object.__setattr__(self, "unitaries", u)

    @property
    def y_dim(self) -> int:
        return len(self.alphabet) ** self.n

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout.of(("W", self.w_dim), ("V", self.v_dim), ("A", self.m))

    @classmethod
    def random(cls, instance: G3CInstance, alphabet: Sequence[str], seed: int,
               w_dim: int = 2, v_dim: int = 2) -> "G3CVerifierFamily":
        alphabet = tuple(alphabet)
        d = w_dim * v_dim * instance.m
        dy = len(alphabet) ** instance.n
        check_dim(dy * d * d, "verifier family size")
        us = np.stack([random_unitary(d, [seed, y]) for y in range(dy)])
        return cls(instance.n, instance.m, alphabet, w_dim, v_dim, us, seed)

    def y_index(self, symbols: Sequence[str]) -> int:
        if len(symbols) != self.n:
            raise ValueError(f"expected {self.n} commitment symbols")
        k = len(self.alphabet)
        idx = 0
        for s in symbols:
            try:
                idx = idx * k + self.alphabet.index(s)
            except ValueError:
                raise KeyError(f"symbol {s!r} not in the verifier alphabet") from None
        return idx

    def y_symbols(self, index: int) -> tuple[str, ...]:
        k = len(self.alphabet)
        out = []
        for _ in range(self.n):
            index, r = divmod(index, k)
            out.append(self.alphabet[r])
        return tuple(reversed(out))


def message_operator(family: G3CVerifierFamily, y: int, e: int) -> np.ndarray:
    """``(I_{WV} (x) <e|_A) V_y (I_W (x) |0_{VA}>)``, shape ``(dW*dV, dW)``."""
    w, v, m = family.w_dim, family.v_dim, family.m
    cols = family.unitaries[y].reshape(w * v, m, w, v * m)[:, :, :, 0]
    return cols[:, e, :]


def commitment_law(family: G3CVerifierFamily, scheme: CommitmentScheme,
                   values: Sequence[int]) -> dict[int, Fraction]:
    """Law of the composite message ``y`` when vertex ``u`` commits ``values[u-1]``."""
    tables = [distribution(scheme, a).table for a in values]
    law: dict[int, Fraction] = {}
    for combo in itertools.product(*(t.items() for t in tables)):
        p = Fraction(1)
        for _, q in combo:
            p *= q
        y = family.y_index([s for s, _ in combo])
        law[y] = law.get(y, Fraction(0)) + p
    return law


def verifier_edge_distribution(family: G3CVerifierFamily, scheme: CommitmentScheme,
                               values: Sequence[int], rho: np.ndarray) -> np.ndarray:
    """Probability of each challenge edge when the prover commits ``values``."""
    probs = np.zeros(family.m)
    for y, p in commitment_law(family, scheme, values).items():
        for e in range(family.m):
            k = message_operator(family, y, e)
            probs[e] += float(p) * float(np.trace(k @ rho @ k.conj().T).real)
    return probs


def _quantum_layouts(family: G3CVerifierFamily):
    return (RegisterLayout.of(("W", family.w_dim)), family.layout,
            RegisterLayout.of(("Y", family.y_dim), ("Z", Z_DIM)))


def build_g3c_interaction(instance: G3CInstance, family: G3CVerifierFamily,
                          scheme: CommitmentScheme) -> LabeledChannel:
    """One iteration of the real protocol as a channel ``W -> (W, V, A, Y, Z)``.

    The prover's color permutation is mixed uniformly over all of ``S_3``.
    """
    if not instance.colorable:
        raise ContractViolation("the interaction is built for 3-colorable instances")
    if (family.n, family.m) != (instance.n, instance.m):
        raise ContractViolation("family does not match the instance")
    w, q, labels = _quantum_layouts(family)
    dWV, m = family.w_dim * family.v_dim, family.m
    perms = color_permutations()
    blocks: dict[tuple[int, int], list] = {}
    for pi in perms:
        values = [pi(instance.phi(u)) for u in range(1, instance.n + 1)]
        for y, p in commitment_law(family, scheme, values).items():
            if p == 0:
                continue
            weight = sqrt(float(p) / len(perms))
            for e, (u, v) in enumerate(instance.edges):
                k = np.zeros((dWV, m, family.w_dim), dtype=complex)
                k[:, e, :] = weight * message_operator(family, y, e)
                key = (y, z_index(values[u - 1], values[v - 1]))
                blocks.setdefault(key, []).append(k.reshape(-1, family.w_dim))
    return LabeledChannel(w, q, labels, {k: np.stack(v) for k, v in blocks.items()})


# -- simulator ---------------------------------------------------------------

def _guess_colorings(instance: G3CInstance, b: int) -> list[ColorAssignment]:
    u, v = instance.edges[b]
    return [c for c in all_assignments(instance.n) if c(u) != c(v)]


def simulator_law(instance: G3CInstance, family: G3CVerifierFamily,
                  scheme: CommitmentScheme) -> dict[tuple[int, int, int], Fraction]:
    """Exact law of ``(y, b, z)`` produced by the classical simulator.

    ``b`` is a uniform edge guess, the commitments encode a uniform coloring
    ``mu`` with ``mu(u_b) != mu(v_b)``, and ``z`` is the pair of colors on
    the guessed edge.
    """
    m = instance.m
    law: dict[tuple[int, int, int], Fraction] = {}
    for b, (u, v) in enumerate(instance.edges):
        mus = _guess_colorings(instance, b)
        w = Fraction(1, m * len(mus))
        for mu in mus:
            z = z_index(mu(u), mu(v))
            for y, p in commitment_law(family, scheme, mu.colors).items():
                key = (y, b, z)
                law[key] = law.get(key, Fraction(0)) + w * p
    return {k: p for k, p in sorted(law.items()) if p}


def assemble_g3c(instance: G3CInstance, family: G3CVerifierFamily,
                 scheme: CommitmentScheme) -> rewind.SimulatorAssembly:
    """Simulator assembly with ``T|0> = sum sqrt(p(y,b,z)) |y>|b>|z>|r(y,b,z)>``."""
    if (family.n, family.m) != (instance.n, instance.m):
        raise ContractViolation("family does not match the instance")
    law = simulator_law(instance, family, scheme)
    # r = 0 is kept for the all-zero ancilla state
    support = [((y, b, z, r + 1), sqrt(float(p))) for r, ((y, b, z), p) in enumerate(law.items())]
    dims = {"A": instance.m, "Y": family.y_dim, "B": instance.m, "Z": Z_DIM, "R": len(support) + 1}
    return rewind.build_assembly(family.w_dim, family.v_dim, family.unitaries, dims, support,
                                 ancilla="reachable")


@dataclass
class SimulatorDiagnostics:
    k: int
    q_eigenvalues: np.ndarray
    residual_failure: float
    success_probs: list[float]
    component_residuals: np.ndarray


def build_g3c_simulator(instance: G3CInstance, family: G3CVerifierFamily, scheme: CommitmentScheme,
                        k: int | None = None, rho: np.ndarray | None = None):
    """Iterated rewinding simulator; returns the success-conditioned channel and diagnostics."""
    asm = assemble_g3c(instance, family, scheme)
    res = rewind.simulate_iterated(asm, k, rho)
    diag = SimulatorDiagnostics(len(res.success_probs), res.q_eigenvalues, res.residual_failure,
                                res.success_probs, res.component_residuals)
    return res.conditional_channel, diag


def q_spectrum(instance: G3CInstance, family: G3CVerifierFamily, scheme: CommitmentScheme) -> np.ndarray:
    return np.linalg.eigvalsh(rewind.compress_q(assemble_g3c(instance, family, scheme)))


def q_spectrum_under_leak(instance: G3CInstance, family: G3CVerifierFamily, epsilon,
                          N: int = 0) -> np.ndarray:
    return q_spectrum(instance, family, CommitmentScheme.leaky(epsilon, N))


def spectrum_spread(eigenvalues, m: int) -> float:
    """Largest deviation of an eigenvalue from ``1/m``."""
    return float(np.max(np.abs(np.asarray(eigenvalues) - 1 / m)))


# -- classical engine --------------------------------------------------------

@dataclass(frozen=True)
class G3CTranscript:
    commitments: tuple[str, ...]
    edge: tuple[int, int]
    openings: tuple[tuple[int, str], tuple[int, str]]
    accept: bool


def _require_strings(scheme: CommitmentScheme) -> None:
    if not scheme.deterministic:
        raise UnsupportedOperation(f"{scheme.kind} commitments have no wire format")


def _bits(rng: random.Random, n: int) -> str:
    return "".join(rng.choice("01") for _ in range(n))


def classical_g3c_round(instance: G3CInstance, scheme: CommitmentScheme, verifier_edge_choice: EdgeChoice,
                        seed, assignment: ColorAssignment | None = None) -> G3CTranscript:
    """One round; ``assignment`` replaces the witness for a cheating prover.

    ``verifier_edge_choice`` maps the commitment strings to an edge index.
    """
    _require_strings(scheme)
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    colors = assignment or instance.phi
    pi = rng.choice(color_permutations())
    values = [pi(colors(u)) for u in range(1, instance.n + 1)]
    xs = [_bits(rng, scheme.N) for _ in values]
    coms = tuple(commit(scheme, a, x) for a, x in zip(values, xs))
    e = int(verifier_edge_choice(coms))
    if not 0 <= e < instance.m:
        raise ValueError(f"edge index {e} outside 0..{instance.m - 1}")
    u, v = instance.edges[e]
    (a, xa), (b, xb) = (values[u - 1], xs[u - 1]), (values[v - 1], xs[v - 1])
    accept = verify_opening(scheme, coms[u - 1], a, xa) and verify_opening(scheme, coms[v - 1], b, xb) and a != b
    return G3CTranscript(coms, (u, v), ((a, xa), (b, xb)), accept)


@dataclass(frozen=True)
class SoundnessResult:
    per_round: Fraction
    rounds: int
    bound: Fraction
    mc_rounds: int = 0
    mc_acceptance: float | None = None
    mc_standard_error: float | None = None


def classical_g3c_soundness(instance: G3CInstance, scheme: CommitmentScheme, rounds: int,
                            mc_rounds: int = 0, seed: int = 0) -> SoundnessResult:
    """Optimal cheating probability per round and over ``rounds`` sequential rounds.

    Binding pins the prover to one assignment per round, so the per-round
    optimum is the best fraction of bichromatic edges.  With ``mc_rounds``
    the best fixed assignment is also played against a uniform verifier.
    """
    _require_strings(scheme)
    if not binding_check(scheme).passed:
        raise ValueError("soundness needs a binding scheme")
    score = best_coloring_score(instance.g)
    result = SoundnessResult(score, rounds, score ** rounds)
    if mc_rounds <= 0:
        return result
    rng = random.Random(seed)
    cheat = best_assignment(instance.g)
    accepted = sum(
        classical_g3c_round(instance, scheme, lambda _c: rng.randrange(instance.m), rng, cheat).accept
        for _ in range(mc_rounds))
    rate = accepted / mc_rounds
    p = float(score)
    return SoundnessResult(score, rounds, result.bound, mc_rounds, rate, sqrt(p * (1 - p) / mc_rounds))


@dataclass(frozen=True)
class SimulatorRound:
    commitments: tuple[str, ...]
    guess: int
    edge: int
    revealed: tuple[int, int] | None
    success: bool


def _sample(rng: random.Random, table: dict[str, Fraction]) -> str:
    r = Fraction(rng.random())
    acc = Fraction(0)
    for s, p in table.items():
        acc += p
        if r < acc:
            return s
    return next(reversed(table))


def classical_g3c_simulator_round(instance: G3CInstance, scheme: CommitmentScheme,
                                  verifier_edge_choice: EdgeChoice, seed) -> SimulatorRound:
    """Guess an edge, commit to a coloring proper on it, and succeed if the guess is asked."""
    rng = random.Random(seed)
    b = rng.randrange(instance.m)
    mu = rng.choice(_guess_colorings(instance, b))
    if scheme.deterministic:
        coms = tuple(commit(scheme, mu(u), _bits(rng, scheme.N)) for u in range(1, instance.n + 1))
    else:
        coms = tuple(_sample(rng, distribution(scheme, mu(u)).table) for u in range(1, instance.n + 1))
    e = int(verifier_edge_choice(coms))
    u, v = instance.edges[b]
    ok = e == b
    return SimulatorRound(coms, b, e, (mu(u), mu(v)) if ok else None, ok)


def _simulator_outcomes(instance: G3CInstance, scheme: CommitmentScheme):
    for b, (u, v) in enumerate(instance.edges):
        mus = _guess_colorings(instance, b)
        w = Fraction(1, instance.m * len(mus))
        for mu in mus:
            tables = [distribution(scheme, mu(x)).table for x in range(1, instance.n + 1)]
            for combo in itertools.product(*(t.items() for t in tables)):
                p = w
                for _, q in combo:
                    p *= q
                yield b, (mu(u), mu(v)), tuple(s for s, _ in combo), p


def simulator_success_probability(instance: G3CInstance, scheme: CommitmentScheme,
                                  verifier_edge_choice: EdgeChoice) -> Fraction:
    """Exact success probability over all simulator randomness."""
    return sum((p for b, _, coms, p in _simulator_outcomes(instance, scheme)
                if verifier_edge_choice(coms) == b), Fraction(0))


def simulator_revealed_pairs(instance: G3CInstance, scheme: CommitmentScheme,
                             verifier_edge_choice: EdgeChoice) -> dict[tuple[int, int], Fraction]:
    """Law of the revealed color pair conditioned on success."""
    law: dict[tuple[int, int], Fraction] = {}
    for b, pair, coms, p in _simulator_outcomes(instance, scheme):
        if verifier_edge_choice(coms) == b:
            law[pair] = law.get(pair, Fraction(0)) + p
    total = sum(law.values())
    return {k: v / total for k, v in sorted(law.items())}
