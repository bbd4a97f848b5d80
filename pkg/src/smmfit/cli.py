"""Command-line entry points binding the library into reproducible runs.

Subcommands: fit, simulate, classify, metrics.  Every run resolves its
configuration up front, writes all outputs at the end (no partial files on
error), and drops a manifest.json echoing the resolved config, so any output
is re-derivable.  Outputs contain no timestamps: repeating a command with
the same seed produces byte-identical files.

Exit codes: 0 success, 1 numerical warning (some solve hit its iteration
cap), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .classify import ReferenceSet, run_classification_experiment
from .diagnostics import recovery_report
from .errors import SmmError
from .fasta import parse_fasta, read_token_lines
from .markov import (
    Alphabet,
    EncodedSequence,
    count_transitions_runs,
    empirical_transitions,
    encode_sequence,
    encode_valid_runs,
)
from .metrics import adjusted_rand_index, rand_index
from .selection import SMMModel, fit_smm
from .simulate import ExperimentConfig, run_recovery_experiment, replicates_csv, summary_csv
from .solver import SolverConfig
from .weights import WeightScheme

VERSION = "0.1.0"


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: SMMFIT_THREADS or 1)")
    p.add_argument("--out-dir", default=".", help="output directory (default: .)")
    p.add_argument("--verbose", action="store_true", help="progress and summary on stderr")


def _add_scheme(p: argparse.ArgumentParser):
    p.add_argument("--uniform", action="store_true", help="all-pairs unit weights")
    p.add_argument("--knn", type=int, default=3, help="neighbor count for the kNN graph (default 3)")
    p.add_argument("--distance", choices=["l2", "l1", "linf"], default="l2")
    p.add_argument("--kernel", choices=["gaussian", "exponential"], default="gaussian")
    p.add_argument("--phi", type=float, default=100.0, help="kernel decay rate (default 100)")


def _add_solver(p: argparse.ArgumentParser):
    p.add_argument("--nu", type=float, default=None, help="dual step size (default 1/p')")
    p.add_argument("--gap-tol", type=float, default=1e-6, help="relative duality gap tolerance")
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--fusion-tol", type=float, default=1e-4, help="cluster extraction tolerance")
    p.add_argument("--grid-size", type=int, default=100, help="lambda grid size (default 100)")


def _scheme(args) -> WeightScheme:
    if args.uniform:
        return WeightScheme(kind="uniform")
    return WeightScheme(kind="knn_kernel", distance=args.distance, kernel=args.kernel,
                        phi=args.phi, k=args.knn)


def _solver(args) -> SolverConfig:
    return SolverConfig(nu=args.nu, dual_gap_tol=args.gap_tol, max_iter=args.max_iter,
                        fusion_tol=args.fusion_tol)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SMMFIT_THREADS", "")
    return max(1, int(env)) if env.isdigit() else 1


def _config_dict(args) -> dict:
    skip = {"func", "verbose"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _emit(out_dir: str, files: dict, command: str, args) -> None:
    """Write all output files plus the manifest in one pass."""
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "tool_version": VERSION,
        "config": _config_dict(args),
        "outputs": sorted(files),
    }
    files = dict(files)
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    for name, text in files.items():
        (directory / name).write_text(text, encoding="utf-8")


def _note(args, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _alphabet_from_arg(spec: str) -> Alphabet:
    tokens = spec.split(",") if "," in spec else list(spec)
    return Alphabet.from_tokens(tokens)


def _load_input_tokens(path: Path, fmt: str):
    """Returns (kind, list of token sequences); kind is 'fasta' or 'tokens'."""
    if fmt == "auto":
        with open(path, "r", encoding="utf-8") as fh:
            head = ""
            for line in fh:
                if line.strip():
                    head = line.strip()
                    break
        fmt = "fasta" if head.startswith(">") else "tokens"
    if fmt == "fasta":
        return "fasta", [list(seq) for _, seq in parse_fasta(path)]
    return "tokens", read_token_lines(path)


def cmd_fit(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    kind, token_seqs = _load_input_tokens(path, args.format)
    if args.alphabet:
        alphabet = _alphabet_from_arg(args.alphabet)
    elif kind == "fasta":
        alphabet = Alphabet.dna()
    else:
        alphabet = Alphabet.from_tokens(sorted({tok for seq in token_seqs for tok in seq}))
    runs = []
    for seq in token_seqs:
        if kind == "fasta":
            runs.extend(encode_valid_runs(seq, alphabet))  # break at unknown symbols
        else:
            runs.append(encode_sequence(seq, alphabet))
    counts = count_transitions_runs(runs, args.m)
    scheme = _scheme(args)
    cfg = _solver(args)
    _note(args, f"fit: {counts.n} symbols, order {args.m}, "
                f"{int(np.count_nonzero(counts.context_total))}/{counts.p} contexts observed")
    fit = fit_smm(counts, alphabet, args.m, scheme, cfg, args.grid_size, args.alpha_smooth, args.seed)
    emp = empirical_transitions(counts)
    _, rows = emp.observed_rows()
    report = recovery_report(rows, fit.graph, fit.selected.partition,
                             group_vectors=fit.selected.R, scheme=scheme)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "k", "loglik", "bic", "converged", "iterations", "rel_gap", "selected"])
    for sol in fit.path:
        w.writerow([repr(sol.lam), sol.k, repr(sol.loglik), repr(sol.bic),
                    int(sol.converged), sol.iterations, repr(sol.rel_gap),
                    int(sol is fit.selected)])
    _emit(args.out_dir, {
        "model.json": fit.model.to_json() + "\n",
        "path.csv": buf.getvalue(),
        "diagnostics.json": json.dumps(report.to_json_dict(), indent=2) + "\n",
    }, "fit", args)
    bad = sum(1 for sol in fit.path if not sol.converged)
    _note(args, f"fit: selected k={fit.model.k} at lambda={fit.model.lam:.6g}, "
                f"BIC={fit.model.bic:.3f}, {bad} non-converged path points")
    return 1 if bad else 0


def cmd_simulate(args) -> int:
    if args.setup == "1":
        if args.m not in (2, 3):
            raise ValueError("setup 1 needs --m 2 or --m 3")
        setup, m = "setup1", args.m
    else:
        if args.m not in (None, 3):
            raise ValueError("setup 2 is an order-3 design")
        setup, m = "setup2", 3
    config = ExperimentConfig(
        setup=setup, m=m, n_values=tuple(args.n), replicates=args.reps,
        scheme=_scheme(args), solver=_solver(args), grid_size=args.grid_size,
        seed=args.seed, burn_in=args.burn_in,
    )
    summary = run_recovery_experiment(config, threads=_threads(args))
    _emit(args.out_dir, {
        "replicates.csv": replicates_csv(summary),
        "summary.csv": summary_csv(summary),
    }, "simulate", args)
    for row in summary.rows:
        _note(args, f"n={row.n}: RI {row.mean_ri:.3f} ({row.se_ri:.3f}), "
                    f"ARI {row.mean_ari:.3f} ({row.se_ari:.3f}), recovery {row.recovery_rate:.3f}")
    return 1 if any(rec.non_converged for rec in summary.records) else 0


def cmd_classify(args) -> int:
    refs_dir = Path(args.refs)
    if not refs_dir.is_dir():
        raise FileNotFoundError(f"reference directory not found: {refs_dir}")
    model_files = sorted(refs_dir.glob("*.json"))
    if len(model_files) < 2:
        raise ValueError(f"need at least 2 reference models in {refs_dir}")
    if not 0.0 < args.epsilon <= 1.0:
        raise ValueError("--epsilon must lie in (0, 1]")
    refs = ReferenceSet(
        names=tuple(f.stem for f in model_files),
        models=tuple(SMMModel.from_json(f.read_text(encoding="utf-8")) for f in model_files),
    )
    samples_path = Path(args.samples)
    if not samples_path.is_file():
        raise FileNotFoundError(f"samples file not found: {samples_path}")
    samples = []
    ids = []
    for rec_id, seq in parse_fasta(samples_path):
        truth = rec_id.split()[0]
        if truth not in refs.names:
            raise ValueError(f"sample {rec_id!r}: class {truth!r} has no reference model")
        runs = encode_valid_runs(list(seq), refs.alphabet)
        if not runs:
            raise ValueError(f"sample {rec_id!r} has no symbols from the model alphabet")
        longest = max(runs, key=lambda r: r.n)  # classify the longest clean stretch
        samples.append((truth, longest))
        ids.append(rec_id)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    cm = run_classification_experiment(refs, samples, args.epsilon, rng, alpha=args.alpha_smooth)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["observed"] + list(cm.names))
    for i, name in enumerate(cm.names):
        w.writerow([name] + [int(x) for x in cm.counts[i]])
    sbuf = io.StringIO()
    sw = csv.writer(sbuf, lineterminator="\n")
    sw.writerow(["index", "id", "truth", "predicted", "start", "length", "skipped"]
                + [f"score_{name}" for name in cm.names])
    for rec in cm.records:
        scores = [repr(s) for s in rec.scores] if rec.scores else [""] * refs.k
        sw.writerow([rec.index, ids[rec.index], rec.truth, rec.predicted or "",
                     rec.start, rec.length, int(rec.predicted is None)] + scores)
    _emit(args.out_dir, {"confusion.csv": buf.getvalue(), "scores.csv": sbuf.getvalue()},
          "classify", args)
    _note(args, f"classify: {cm.total} samples, misclassification "
                f"{cm.misclassification_rate:.3f}, {len(cm.skipped)} skipped")
    return 0


def _read_labels(path: Path) -> list:
    if not path.is_file():
        raise FileNotFoundError(f"label file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def cmd_metrics(args) -> int:
    a = _read_labels(Path(args.labels_a))
    b = _read_labels(Path(args.labels_b))
    result = {"ri": rand_index(a, b), "ari": adjusted_rand_index(a, b)}
    text = json.dumps(result, indent=2) + "\n"
    print(text, end="")
    _emit(args.out_dir, {"metrics.json": text}, "metrics", args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smmfit",
        description="Fit sparse Markov models by convex clustering of transition probabilities.",
    )
    parser.add_argument("--version", action="version", version=f"smmfit {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one sequence file and write model/path/diagnostics")
    p.add_argument("input", help="FASTA or token file")
    p.add_argument("--m", type=int, required=True, help="Markov order")
    p.add_argument("--format", choices=["auto", "fasta", "tokens"], default="auto")
    p.add_argument("--alphabet", default=None,
                   help="symbols, e.g. ACGT or comma-separated tokens (default: ACGT for FASTA, "
                        "observed tokens otherwise)")
    p.add_argument("--alpha-smooth", type=float, default=0.5,
                   help="additive smoothing stored with the model (default 0.5)")
    _add_scheme(p)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="run a recovery experiment and write CSV summaries")
    p.add_argument("--setup", choices=["1", "2"], required=True)
    p.add_argument("--m", type=int, default=None, help="order for setup 1 (2 or 3)")
    p.add_argument("--n", type=int, action="append", required=True,
                   help="sequence length (repeatable)")
    p.add_argument("--reps", type=int, default=50, help="replicates (default 50)")
    p.add_argument("--burn-in", type=int, default=1000)
    _add_scheme(p)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="classify FASTA samples against reference models")
    p.add_argument("samples", help="FASTA file; each header starts with the true class name")
    p.add_argument("--refs", required=True, help="directory of reference model .json files")
    p.add_argument("--epsilon", type=float, required=True, help="snippet length fraction in (0, 1]")
    p.add_argument("--alpha-smooth", type=float, default=None,
                   help="override the smoothing stored in the models")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("metrics", help="Rand index and adjusted Rand index of two label files")
    p.add_argument("labels_a", help="one label per line")
    p.add_argument("labels_b", help="one label per line")
    _add_common(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SmmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
