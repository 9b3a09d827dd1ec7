"""Command-line front end.

    bqcnn params --n 4 --ansatz bqcnn
    bqcnn expressibility --n 8 --ansatz qcnn --seed 1 --out expr.json
    bqcnn gen-data --kind artificial --n 4 --seed 7 --out data.json
    bqcnn train --dataset data.json --both --out-dir runs/

Exit codes: 0 success, 2 bad arguments, 3 dataset/schema or file error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import datagen, expressibility, io, optimizer, physics
from .ansatz import BranchingCircuit, CircuitError, build_bqcnn, build_qcnn
from .core import QuantumStateError

EXIT_OK, EXIT_ARGS, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _circuit(n: int, ansatz: str, branch_limit: int | None) -> BranchingCircuit:
    try:
        if ansatz == "qcnn":
            return build_qcnn(n)
        return build_bqcnn(n, "full" if branch_limit is None else branch_limit)
    except CircuitError as exc:
        raise CliError(str(exc), EXIT_ARGS) from None


def cmd_params(args) -> dict:
    c = _circuit(args.n, args.ansatz, args.branch_limit)
    config = {"n": args.n, "ansatz": args.ansatz, "branch_limit": args.branch_limit}
    report = {
        "meta": io.make_meta("bqcnn.params/1", args.seed, config),
        "n_qubits": c.n_qubits,
        "ansatz": args.ansatz,
        "policy": c.policy,
        "branch_limit": c.branch_limit,
        "parameter_count": c.n_params,
        "stages": c.stage_breakdown(),
    }
    print(json.dumps(report, indent=1))
    return report


def cmd_expressibility(args) -> dict:
    if args.ansatz == "none":
        circuit = expressibility.empty_circuit(args.n)
    else:
        circuit = _circuit(args.n, args.ansatz, args.branch_limit)
    kl, hist = expressibility.estimate(circuit, args.pairs, args.bins, args.seed)
    config = {"n": args.n, "ansatz": args.ansatz, "branch_limit": args.branch_limit,
              "pairs": args.pairs, "bins": args.bins, "prior": "uniform[0,2pi)"}
    meta = io.make_meta(io.EXPRESSIBILITY_SCHEMA, args.seed, config)
    doc = {
        "meta": meta,
        "n_qubits": args.n,
        "ansatz": args.ansatz,
        "n_pairs": args.pairs,
        "n_bins": args.bins,
        "seed": args.seed,
        "kl": kl if np.isfinite(kl) else None,
        "histogram_counts": hist.counts.tolist(),
    }
    out = Path(args.out)
    csv_path = Path(args.csv) if args.csv else out.with_suffix(".csv")
    io.write_json(out, doc)
    io.write_histogram_csv(csv_path, hist, args.n, meta)
    print(f"{args.ansatz} n={args.n}: KL = {kl:.6g}  -> {out}, {csv_path}")
    return doc


def cmd_gen_data(args) -> physics.LabeledDataset:
    if args.kind == "spt":
        try:
            ds = physics.spt_dataset(args.points, n_sites=args.n or 4)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_ARGS) from None
    else:
        c = _circuit(args.n or 4, args.ansatz, args.branch_limit)
        params = datagen.random_parameters(c, args.seed)
        ds = datagen.artificial_dataset(c, params, args.seed)
    io.save_dataset(args.out, ds, args.seed)
    print(f"wrote {len(ds)} {args.kind} items -> {args.out}")
    return ds


def _ga_config(args) -> optimizer.GAConfig:
    try:
        return optimizer.GAConfig(
            population_size=args.population,
            elite_fraction=args.elite,
            mutation_rate=args.mutation,
            bits_per_angle=args.bits,
            generations=args.generations,
            seed=args.seed,
            cost_mode=args.cost_mode,
            shots=args.shots,
            workers=args.threads,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ARGS) from None


def _train_one(ansatz, ds, config, args, out_dir: Path, dataset_digest: str):
    circuit = _circuit(ds.n_qubits, ansatz, args.branch_limit if ansatz == "bqcnn" else None)
    params, history = optimizer.train(circuit, ds, config)
    run_config = {"ansatz": ansatz, "ga": config.to_dict(), "dataset": dataset_digest,
                  "branch_limit": circuit.branch_limit}
    meta = io.make_meta(io.CHECKPOINT_SCHEMA, config.seed, run_config)
    history.write_csv(out_dir / f"history_{ansatz}.csv", io.header_lines(meta))
    best = history.best_chromosome
    io.write_json(out_dir / f"checkpoint_{ansatz}.json", {
        "meta": meta,
        "ansatz": ansatz,
        "circuit": {"n_qubits": circuit.n_qubits, "policy": circuit.policy,
                    "branch_limit": circuit.branch_limit, "n_params": circuit.n_params},
        "config": config.to_dict(),
        "dataset_digest": dataset_digest,
        "best_chromosome_hex": best.hex(),
        "chromosome_length": len(best),
        "best_cost": float(history.best_costs.min()),
        "final_correctness": history.final_correctness,
    })
    print(f"{ansatz}: final correctness {history.final_correctness:.4f} after {config.generations} generations")
    return history


def cmd_train(args) -> dict:
    try:
        raw = Path(args.dataset).read_bytes()
        ds = io.dataset_from_dict(json.loads(raw))
    except OSError as exc:
        raise CliError(f"cannot read dataset {args.dataset}: {exc.strerror}", EXIT_DATA) from None
    except (json.JSONDecodeError, io.SchemaError) as exc:
        raise CliError(f"{args.dataset}: {exc}", EXIT_DATA) from None
    if args.n is not None and args.n != ds.n_qubits:
        raise CliError(f"dataset has {ds.n_qubits} qubits but --n {args.n} was given", EXIT_DATA)
    config = _ga_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256(raw).hexdigest()[:12]
    ansaetze = ["bqcnn", "qcnn"] if args.both else [args.ansatz]
    histories = {a: _train_one(a, ds, config, args, out_dir, digest) for a in ansaetze}
    if args.both:
        meta = io.make_meta("bqcnn.comparison/1", config.seed, {"ga": config.to_dict(), "dataset": digest})
        with open(out_dir / "comparison.csv", "w", newline="") as fh:
            for line in io.header_lines(meta):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generation", "bqcnn_best_correctness", "qcnn_best_correctness"])
            for rb, rq in zip(histories["bqcnn"].rows, histories["qcnn"].rows):
                w.writerow([rb["generation"], f"{rb['best_correctness']:.12g}", f"{rq['best_correctness']:.12g}"])
    return histories


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bqcnn", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, ansatz_choices=("qcnn", "bqcnn")):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
        if ansatz_choices:
            p.add_argument("--ansatz", choices=ansatz_choices, default="bqcnn")
            p.add_argument("--branch-limit", type=int, default=None,
                           help="cap on children per bQCNN node (default: all outcomes)")

    p = sub.add_parser("params", help="parameter count and per-stage breakdown")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("expressibility", help="KL divergence from the Haar fidelity law")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--pairs", type=int, default=4500)
    p.add_argument("--bins", type=int, default=500)
    p.add_argument("--out", default="expressibility.json")
    p.add_argument("--csv", default=None, help="histogram CSV path (default: --out with .csv)")
    common(p, ("qcnn", "bqcnn", "none"))
    p.set_defaults(func=cmd_expressibility)

    p = sub.add_parser("gen-data", help="write an artificial or SPT dataset")
    p.add_argument("--kind", choices=("artificial", "spt"), required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--points", type=int, default=16, help="grid points per SPT branch")
    p.add_argument("--out", default="dataset.json")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="genetic-algorithm training on a dataset file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n", type=int, default=None, help="expected width; checked against the dataset")
    p.add_argument("--both", action="store_true", help="train bQCNN and QCNN and write comparison.csv")
    p.add_argument("--generations", type=int, default=500)
    p.add_argument("--population", type=int, default=optimizer.GAConfig.population_size)
    p.add_argument("--elite", type=float, default=optimizer.GAConfig.elite_fraction)
    p.add_argument("--mutation", type=float, default=None, help="per-bit rate (default 1/length)")
    p.add_argument("--bits", type=int, default=8)
    p.add_argument("--cost-mode", choices=("exact", "shots"), default="exact")
    p.add_argument("--shots", type=int, default=512)
    p.add_argument("--out-dir", default="runs")
    common(p)
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_ARGS
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (QuantumStateError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
