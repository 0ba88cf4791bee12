"""Command-line driver: fit, generate, impute, and the bundled benchmarks.

Every run writes a manifest (command line, config, seeds, wall clock, and a
sha256 per artifact) sufficient to reproduce it bit-identically.  Exit codes:
0 success, 2 CSV/schema parse error, 3 fit error, 4 model load failure,
5 schema mismatch, 6 benchmark stage failure.
"""

import argparse
import hashlib
import os
import sys
import time
from pathlib import Path

from . import bench, engine
from .dataset import ParseError, load_csv, load_schema, save_csv
from .engine import EngineConfig, SchemaMismatchError
from .modelfile import ModelFormatError

EXIT_PARSE = 2
EXIT_FIT = 3
EXIT_MODEL_LOAD = 4
EXIT_SCHEMA_MISMATCH = 5
EXIT_BENCH_STAGE = 6


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message


def _default_threads() -> int:
    env = os.environ.get("UMTR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(directory: Path, command: str, settings: dict,
                    outputs: list[Path], wall_clock: float) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "manifest.txt"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"command = {command}\n")
        for key, value in settings.items():
            fh.write(f"{key} = {value}\n")
        fh.write(f"wall_clock_sec = {wall_clock:.3f}\n")
        for out in outputs:
            fh.write(f"sha256 {out.name} = {_sha256(out)}\n")
    return path


def _config_from_args(args) -> EngineConfig:
    return EngineConfig(n_bins=args.bins, top_p=args.top_p, k_dup=args.kdup,
                        alpha=args.alpha, seed=args.seed)


def _config_settings(args, config: EngineConfig) -> dict:
    t = config.trees
    return {
        "bins": config.n_bins, "top_p": config.top_p, "kdup": config.k_dup,
        "alpha": config.alpha, "seed": config.seed, "threads": args.threads,
        "tree_rounds": t.rounds, "tree_learning_rate": t.learning_rate,
        "tree_max_depth": t.max_depth, "tree_min_child_weight": t.min_child_weight,
        "tree_lambda": t.reg_lambda, "tree_hist_bins": t.n_hist_bins,
    }


def cmd_fit(args) -> int:
    start = time.monotonic()
    try:
        hint = load_schema(args.schema) if args.schema else None
        data = load_csv(args.data, schema_hint=hint)
    except (ParseError, OSError) as exc:
        raise _CliError(EXIT_PARSE, f"cannot load {args.data}: {exc}") from exc
    config = _config_from_args(args)
    try:
        model = engine.fit(data, config, threads=args.threads)
    except Exception as exc:
        raise _CliError(EXIT_FIT, f"fit failed: {exc}") from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    settings = _config_settings(args, config)
    settings["data"] = args.data
    settings["schema"] = args.schema or ""
    _write_manifest(out.parent, "fit", settings, [out],
                    time.monotonic() - start)
    return 0


def _load_model_or_die(path) -> engine.UnmaskingModel:
    try:
        return engine.load_model(path)
    except (ModelFormatError, OSError) as exc:
        raise _CliError(EXIT_MODEL_LOAD,
                        f"cannot load model {path}: {exc}") from exc


def cmd_generate(args) -> int:
    start = time.monotonic()
    model = _load_model_or_die(args.model)
    data = engine.generate(model, args.n, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(data, out)
    _write_manifest(out.parent, "generate",
                    {"model": args.model, "n": args.n, "seed": args.seed},
                    [out], time.monotonic() - start)
    return 0


def cmd_impute(args) -> int:
    start = time.monotonic()
    model = _load_model_or_die(args.model)
    try:
        with open(args.data, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\r\n").split(",")
    except OSError as exc:
        raise _CliError(EXIT_PARSE, f"cannot read {args.data}: {exc}") from exc
    if header != [name for name, _ in model.schema]:
        raise _CliError(
            EXIT_SCHEMA_MISMATCH,
            f"columns {header} do not match the model schema "
            f"{[name for name, _ in model.schema]}",
        )
    try:
        data = load_csv(args.data, schema_hint=model.schema,
                        labels_hint=model.labels)
    except (ParseError, OSError) as exc:
        raise _CliError(EXIT_PARSE, f"cannot load {args.data}: {exc}") from exc
    try:
        completions = engine.impute(model, data, args.m, args.seed)
    except SchemaMismatchError as exc:
        raise _CliError(EXIT_SCHEMA_MISMATCH, str(exc)) from exc
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for i, completed in enumerate(completions):
        path = out_dir / f"imputed_{i:03d}.csv"
        save_csv(completed, path)
        outputs.append(path)
    _write_manifest(out_dir, "impute",
                    {"model": args.model, "data": args.data, "m": args.m,
                     "seed": args.seed},
                    outputs, time.monotonic() - start)
    return 0


def cmd_bench(args) -> int:
    start = time.monotonic()
    runners = {"moons": bench.run_moons, "iris": bench.run_iris}
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        result = runners[args.suite](args.seed, threads=args.threads)
        outputs = []

        def emit(name, dataset):
            path = out_dir / name
            save_csv(dataset, path)
            outputs.append(path)

        emit("truth.csv", result.truth)
        emit("masked.csv", result.masked)
        emit("generated.csv", result.generated)
        for i, imp in enumerate(result.imputations):
            emit(f"imputed_{i:03d}.csv", imp)
        report_txt = out_dir / "report.txt"
        report_txt.write_text(result.report.to_text(), encoding="utf-8")
        outputs.append(report_txt)
        report_csv = out_dir / "report.csv"
        report_csv.write_text(
            result.report.csv_header() + "\n" + result.report.to_csv_row() + "\n",
            encoding="utf-8",
        )
        outputs.append(report_csv)
    except bench.StageError as exc:
        raise _CliError(EXIT_BENCH_STAGE, str(exc)) from exc
    except Exception as exc:
        raise _CliError(EXIT_BENCH_STAGE,
                        f"stage 'write-outputs' failed: {exc}") from exc
    _write_manifest(out_dir, f"bench {args.suite}",
                    {"suite": args.suite, "seed": args.seed,
                     "threads": args.threads},
                    outputs, time.monotonic() - start)
    print(result.report.to_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="umtr",
        description="Tabular generation and imputation with unmasking-trained "
                    "gradient-boosted trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model on a CSV file")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--schema", default=None,
                       help="sidecar schema file overriding column inference")
    p_fit.add_argument("--out", required=True, help="model file to write")
    p_fit.add_argument("--bins", type=int, default=20)
    p_fit.add_argument("--top-p", dest="top_p", type=float, default=0.9)
    p_fit.add_argument("--kdup", type=int, default=50)
    p_fit.add_argument("--alpha", type=float, default=1.0)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--threads", type=int, default=_default_threads())
    p_fit.set_defaults(func=cmd_fit)

    p_gen = sub.add_parser("generate", help="sample new rows from a model")
    p_gen.add_argument("--model", required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_imp = sub.add_parser("impute", help="complete missing cells of a CSV")
    p_imp.add_argument("--model", required=True)
    p_imp.add_argument("--data", required=True)
    p_imp.add_argument("--m", type=int, default=10)
    p_imp.add_argument("--seed", type=int, default=0)
    p_imp.add_argument("--out-dir", dest="out_dir", required=True)
    p_imp.set_defaults(func=cmd_impute)

    p_bench = sub.add_parser("bench", help="run a bundled case study")
    p_bench.add_argument("--suite", choices=["moons", "iris"], required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--threads", type=int, default=_default_threads())
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"umtr {args.command}: {exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
