"""Command-line entry point: ``python -m qzk --experiment NAME ...``."""

from __future__ import annotations

import argparse
import sys

from . import lab


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qzk", description="Run a named rewinding experiment and emit a report.")
    p.add_argument("--experiment", required=True, choices=lab.CATALOG)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", metavar="FILE", help="graph text file (n, then 'u v' lines, optional 'colors:')")
    src.add_argument("--graph-bits", type=_ints, metavar="INT[,INT]", help="edge bitmask(s); needs --n")
    p.add_argument("--n", type=int, help="vertex count for --graph-bits, or the size swept by gi-classical")
    p.add_argument("--w-qubits", type=int, default=1)
    p.add_argument("--v-qubits", type=int, default=1)
    p.add_argument("--seed", type=_ints, default=(1,), metavar="INT[,INT...]")
    p.add_argument("--k", type=int, help="rewinding iterations")
    p.add_argument("--eps", type=_floats, default=(0.0, 0.05, 0.1, 0.2), metavar="LIST")
    p.add_argument("--mc-rounds", type=int, default=100_000)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timing", action="store_true", help="include wall-clock duration in JSON")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    text = None
    if args.graph:
        with open(args.graph, encoding="utf-8") as fh:
            text = fh.read()
    try:
        cfg = lab.ExperimentConfig(
            experiment=args.experiment, graph_text=text, graph_bits=args.graph_bits or (),
            n=args.n, w_qubits=args.w_qubits, v_qubits=args.v_qubits, seeds=args.seed,
            tol=args.tol, k=args.k, eps=args.eps, mc_rounds=args.mc_rounds, out=args.out,
            fmt=args.format)
    except (lab.ExperimentError, ValueError) as exc:
        print(f"qzk: {exc}", file=sys.stderr)
        return 2
    report = lab.run(cfg)
    out = lab.emit(report, cfg.fmt, cfg.out, timing=args.timing)
    if cfg.out is None:
        sys.stdout.write(out)
    status = "PASS" if report.passed else "FAIL"
    print(f"{cfg.experiment}: {status}" + (f" ({report.error})" if report.error else ""), file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
