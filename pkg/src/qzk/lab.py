"""Named experiment suites with deterministic, machine-readable reports."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import g3c, gi, rewind
from .channel import choi_trace_distance, state_trace_distance
from .combinatorics import (
    Graph,
    LimitExceeded,
    Permutation,
    all_graphs,
    apply_permutation,
    find_isomorphism,
    orbit,
    parse_graph_text,
)
from .commitment import CommitmentScheme, binding_check, concealing_tv
from .config import DimensionLimitError, check_dim
from .linalg import ContractViolation, random_state

SCHEMA_TAG = "qzk-report/1"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "qzk experiment report",
    "type": "object",
    "required": ["schema", "experiment", "config", "metrics", "assertions", "passed", "error"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "experiment": {"type": "string"},
        "config": {"type": "object"},
        "metrics": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["seed", "name", "value"],
                "additionalProperties": False,
                "properties": {
                    "seed": {"type": ["integer", "null"]},
                    "name": {"type": "string"},
                    "value": {"type": ["number", "string", "array"]},
                },
            },
        },
        "assertions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "seed", "measured", "tolerance", "passed"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "seed": {"type": ["integer", "null"]},
                    "measured": {"type": ["number", "string"]},
                    "tolerance": {"type": ["number", "string"]},
                    "passed": {"type": "boolean"},
                },
            },
        },
        "passed": {"type": "boolean"},
        "error": {"type": ["string", "null"]},
        "duration_seconds": {"type": "number"},
    },
}

DEFAULT_TOL = {
    "gi-equivalence": 1e-9,
    "gi-claim1": 1e-10,
    "lemma-check": 1e-10,
    "gi-classical": 0.0,
    "g3c-ideal": 1e-9,
    "g3c-leaky": 1e-10,
    "g3c-classical": 3.0,
    "commitment-audit": 1e-12,
}
CATALOG = tuple(DEFAULT_TOL)


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    graph_text: str | None = None
    graph_bits: tuple[int, ...] = ()
    n: int | None = None
    w_qubits: int = 1
    v_qubits: int = 1
    seeds: tuple[int, ...] = (1,)
    tol: float | None = None
    k: int | None = None
    eps: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2)
    mc_rounds: int = 100_000
    out: str | None = None
    fmt: str = "json"

    def __post_init__(self):
        if self.experiment not in CATALOG:
            raise ExperimentError(f"unknown experiment {self.experiment!r}; choose from {', '.join(CATALOG)}")
        if not self.seeds:
            raise ExperimentError("at least one seed is required")
        if self.tol is not None and not self.tol > 0:
            raise ExperimentError("tolerance must be positive")
        if self.w_qubits < 1 or self.v_qubits < 1:
            raise ExperimentError("W and V need at least one qubit each")
        if self.fmt not in ("json", "csv"):
            raise ExperimentError(f"unknown format {self.fmt!r}")
        if self.k is not None and self.k < 1:
            raise ExperimentError("k must be at least 1")
        check_dim(2 ** (self.w_qubits + self.v_qubits + 1), "verifier register dimension")

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOL[self.experiment]

    def echo(self) -> dict:
        d = asdict(self)
        d["graph_bits"] = list(self.graph_bits)
        d["seeds"] = list(self.seeds)
        d["eps"] = list(self.eps)
        d["tolerance"] = self.tolerance
        return d


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    metrics: list[dict] = field(default_factory=list)
    assertions: list[dict] = field(default_factory=list)
    error: str | None = None
    duration: float | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(a["passed"] for a in self.assertions)

    def metric(self, name: str, value, seed: int | None = None) -> None:
        self.metrics.append({"seed": seed, "name": name, "value": _plain(value)})

    def check(self, name: str, measured, tolerance, passed: bool, seed: int | None = None) -> bool:
        self.assertions.append({"name": name, "seed": seed, "measured": _plain(measured),
                                "tolerance": _plain(tolerance), "passed": bool(passed)})
        return bool(passed)

    def to_dict(self, timing: bool = False) -> dict:
        d = {"schema": SCHEMA_TAG, "experiment": self.experiment, "config": self.config,
             "metrics": self.metrics, "assertions": self.assertions, "passed": self.passed,
             "error": self.error}
        if timing and self.duration is not None:
            d["duration_seconds"] = self.duration
        return d


def _plain(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


# -- instances ---------------------------------------------------------------

def _graph_from_config(cfg: ExperimentConfig) -> list[Graph]:
    if cfg.graph_text is not None:
        g, _ = parse_graph_text(cfg.graph_text)
        return [g]
    if cfg.graph_bits:
        if cfg.n is None:
            raise ExperimentError("--graph-bits needs --n")
        return [Graph(cfg.n, b) for b in cfg.graph_bits]
    return []


def _shift(n: int) -> Permutation:
    return Permutation(tuple(range(2, n + 1)) + (1,))


def gi_instance(cfg: ExperimentConfig) -> gi.GIInstance:
    graphs = _graph_from_config(cfg)
    if not graphs:
        return gi.single_edge_instance()
    if len(graphs) == 1:
        # relabel the single graph to get a yes-instance
        return gi.GIInstance.from_graphs(graphs[0], apply_permutation(_shift(graphs[0].n), graphs[0]))
    if len(graphs) != 2:
        raise ExperimentError("graph isomorphism takes one or two graphs")
    return gi.GIInstance.from_graphs(graphs[0], graphs[1])


def g3c_instance(cfg: ExperimentConfig, default: Callable[[], g3c.G3CInstance]) -> g3c.G3CInstance:
    if cfg.graph_text is not None:
        return g3c.G3CInstance.from_text(cfg.graph_text)
    graphs = _graph_from_config(cfg)
    return g3c.G3CInstance.from_graph(graphs[0]) if graphs else default()


# -- suites ------------------------------------------------------------------

def _gi_family(cfg, inst, seed):
    return gi.VerifierFamily.random(inst.g0, seed, 2 ** cfg.w_qubits, 2 ** cfg.v_qubits)


def _run_gi_equivalence(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    inst = gi_instance(cfg)
    for seed in cfg.seeds:
        fam = _gi_family(cfg, inst, seed)
        asm = gi.assemble(inst, fam)
        d = choi_trace_distance(gi.build_phi_direct(inst, fam), rewind.simulate_gi(asm))
        rep.metric("choi_distance", d, seed)
        rep.check("real_vs_simulated_choi", d, cfg.tolerance, d <= cfg.tolerance, seed)


def _run_gi_claim1(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    inst = gi_instance(cfg)
    for seed in cfg.seeds:
        asm = gi.assemble(inst, _gi_family(cfg, inst, seed))
        eigs = np.linalg.eigvalsh(rewind.compress_q(asm))
        dev = float(np.max(np.abs(eigs - 0.5)))
        rep.metric("q_eigenvalues", eigs, seed)
        rep.check("q_eigenvalue_deviation", dev, cfg.tolerance, dev <= cfg.tolerance, seed)
        if asm.modeled_dim <= 4096:
            res = rewind.claim_operator_residual(asm, 0.5)
            rep.metric("operator_residual", res, seed)
            rep.check("operator_identity_frobenius", res, 10 * cfg.tolerance, res <= 10 * cfg.tolerance, seed)


def _run_lemma_check(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    for lam in (0.1, 0.25, 0.5, 0.75, 0.9):
        dec = rewind.lemma_decompose(*rewind.rotation_example(lam), np.array([1.0, 0.0]))
        rep.metric(f"rotation_{lam}_max_residual", dec.max_residual)
        rep.check(f"rotation_{lam}", dec.max_residual, cfg.tolerance, dec.max_residual <= cfg.tolerance)
    inst = gi_instance(cfg)
    for seed in cfg.seeds:
        asm = gi.assemble(inst, _gi_family(cfg, inst, seed), ancilla="reachable")
        g0 = asm.zero_state(random_state(asm.dW, seed)).reshape(-1)
        dec = rewind.lemma_decompose(asm.linear_operator("U"), asm.linear_operator("Pi0"),
                                     asm.linear_operator("Delta0"), g0)
        rep.metric("lambda", dec.lam, seed)
        rep.metric("residuals", [dec.residuals[k] for k in sorted(dec.residuals)], seed)
        rep.check("protocol_instance", dec.max_residual, cfg.tolerance, dec.max_residual <= cfg.tolerance, seed)


def _verifier_strategies():
    return {"always0": lambda h: 0, "always1": lambda h: 1, "edge_parity": lambda h: h.m % 2,
            "low_bit": lambda h: h.bits & 1}


def _run_gi_classical(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    sizes = (cfg.n,) if cfg.n is not None else (3, 4)
    for n in sizes:
        graphs = all_graphs(n)
        worst = Fraction(1)
        pairs = 0
        for g0 in graphs:
            for g1 in orbit(g0):
                inst = gi.GIInstance.from_graphs(g0, g1)
                for choice in _verifier_strategies().values():
                    worst = min(worst, gi.completeness(inst, choice))
                pairs += 1
        rep.metric(f"n{n}_isomorphic_pairs", pairs)
        rep.check(f"n{n}_completeness", worst, "exact", worst == 1)
        values = set()
        non_iso = 0
        for g0 in graphs:
            for g1 in graphs:
                if find_isomorphism(g0, g1) is None:
                    values.add(gi.optimal_cheating_value(gi.GIInstance.from_graphs(g0, g1)))
                    non_iso += 1
        rep.metric(f"n{n}_non_isomorphic_pairs", non_iso)
        rep.metric(f"n{n}_cheating_values", sorted(str(v) for v in values))
        rep.check(f"n{n}_cheating_value", ",".join(sorted(str(v) for v in values)), "exact",
                  values == {Fraction(1, 2)})


def _run_g3c_ideal(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    inst = g3c_instance(cfg, g3c.triangle)
    scheme = CommitmentScheme.ideal(1)
    m = inst.m
    k = cfg.k or 20
    for seed in cfg.seeds:
        fam = g3c.G3CVerifierFamily.random(inst, scheme.alphabet(), seed,
                                           2 ** cfg.w_qubits, 2 ** cfg.v_qubits)
        channel, diag = g3c.build_g3c_simulator(inst, fam, scheme, k=k)
        dev = g3c.spectrum_spread(diag.q_eigenvalues, m)
        closed = rewind.closed_form_residual(1 / m, k)
        rep.metric("q_eigenvalues", diag.q_eigenvalues, seed)
        rep.metric("residual_failure", diag.residual_failure, seed)
        rep.metric("closed_form_residual", closed, seed)
        rep.check("q_flat", dev, 1e-10, dev <= 1e-10, seed)
        err = abs(diag.residual_failure - closed)
        rep.check("residual_closed_form", err, cfg.tolerance, err <= cfg.tolerance, seed)
        if inst.colorable:
            d = choi_trace_distance(channel, g3c.build_g3c_interaction(inst, fam, scheme))
            rep.metric("choi_distance", d, seed)
            rep.check("conditional_vs_real_choi", d, 1e-8, d <= 1e-8, seed)


def _run_g3c_leaky(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    inst = g3c_instance(cfg, g3c.triangle)
    alphabet = CommitmentScheme.leaky(0).alphabet()
    tol = cfg.tolerance
    for seed in cfg.seeds:
        fam = g3c.G3CVerifierFamily.random(inst, alphabet, seed, 2 ** cfg.w_qubits, 2 ** cfg.v_qubits)
        spreads = []
        for eps in cfg.eps:
            eigs = g3c.q_spectrum_under_leak(inst, fam, eps)
            spreads.append(g3c.spectrum_spread(eigs, inst.m))
            out = max(0.0, -float(eigs.min()), float(eigs.max()) - 1)
            rep.check(f"eigenvalues_in_unit_interval_eps_{eps}", out, tol, out <= tol, seed)
        rep.metric("eps", list(cfg.eps), seed)
        rep.metric("spread", spreads, seed)
        if 0.0 in cfg.eps:
            s0 = spreads[list(cfg.eps).index(0.0)]
            rep.check("spread_at_zero", s0, tol, s0 <= tol, seed)
        order = np.argsort(cfg.eps)
        drops = [spreads[order[i]] - spreads[order[i + 1]] for i in range(len(order) - 1)]
        worst = max(drops, default=0.0)
        rep.check("spread_nondecreasing", worst, 1e-12, worst <= 1e-12, seed)


def _run_g3c_classical(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    inst = g3c_instance(cfg, g3c.k4)
    scheme = CommitmentScheme.transparent(1)
    for seed in cfg.seeds:
        res = g3c.classical_g3c_soundness(inst, scheme, inst.m ** 2, cfg.mc_rounds, seed)
        rep.metric("per_round", res.per_round, seed)
        rep.metric("bound", res.bound, seed)
        rep.metric("bound_float", float(res.bound), seed)
        if res.mc_rounds:
            z = abs(res.mc_acceptance - float(res.per_round)) / res.mc_standard_error if res.mc_standard_error else 0.0
            rep.metric("mc_acceptance", res.mc_acceptance, seed)
            rep.metric("mc_standard_error", res.mc_standard_error, seed)
            rep.check("mc_within_standard_errors", z, cfg.tolerance, z <= cfg.tolerance, seed)
        if inst.colorable:
            ok = all(g3c.classical_g3c_round(inst, scheme, lambda c, e=e: e, [seed, e]).accept
                     for e in range(inst.m))
            rep.check("honest_prover_accepted", int(ok), "exact", ok, seed)


def _run_commitment_audit(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    tol = cfg.tolerance
    for n in range(1, 7):
        b = binding_check(CommitmentScheme.transparent(n))
        rep.metric(f"binding_N{n}_pairs", b.pairs_checked)
        rep.check(f"binding_transparent_N{n}", int(b.passed), "exact", b.passed)
    for kind, scheme, want in (("transparent", CommitmentScheme.transparent(2), 1.0),
                               ("ideal", CommitmentScheme.ideal(2), 0.0)):
        tv = concealing_tv(scheme, 1, 2)
        rep.metric(f"tv_{kind}", tv)
        rep.check(f"tv_{kind}", abs(tv - want), tol, abs(tv - want) <= tol)
    for eps in cfg.eps:
        tv = concealing_tv(CommitmentScheme.leaky(eps, 2), 1, 3)
        rep.metric(f"tv_leaky_{eps}", tv)
        rep.check(f"tv_leaky_{eps}", abs(tv - eps), tol, abs(tv - eps) <= tol)


SUITES = {
    "gi-equivalence": _run_gi_equivalence,
    "gi-claim1": _run_gi_claim1,
    "lemma-check": _run_lemma_check,
    "gi-classical": _run_gi_classical,
    "g3c-ideal": _run_g3c_ideal,
    "g3c-leaky": _run_g3c_leaky,
    "g3c-classical": _run_g3c_classical,
    "commitment-audit": _run_commitment_audit,
}

_EXPECTED_ERRORS = (ContractViolation, gi.NotIsomorphicError, LimitExceeded, DimensionLimitError,
                    rewind.DegenerateEigenvalueError, rewind.PreconditionError, ExperimentError)


def run(config: ExperimentConfig) -> ExperimentReport:
    """Run a suite serially over the configured seeds."""
    rep = ExperimentReport(config.experiment, config.echo())
    start = time.perf_counter()
    try:
        SUITES[config.experiment](config, rep)
    except _EXPECTED_ERRORS as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    rep.duration = time.perf_counter() - start
    return rep


def to_json(report: ExperimentReport, timing: bool = False) -> str:
    return json.dumps(report.to_dict(timing), indent=2, sort_keys=True) + "\n"


def to_csv(report: ExperimentReport) -> str:
    """Metrics only: one ``seed,name,value`` row per metric."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "name", "value"])
    for m in report.metrics:
        v = m["value"]
        w.writerow(["" if m["seed"] is None else m["seed"], m["name"],
                    json.dumps(v) if isinstance(v, list) else v])
    return buf.getvalue()


def emit(report: ExperimentReport, fmt: str = "json", path=None, timing: bool = False) -> str:
    text = to_json(report, timing) if fmt == "json" else to_csv(report)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
