"""Command-line entry point.

Subcommands: synth, fetch, train, evaluate, search, optimize, serve.
Exit codes: 0 success, 1 validation/user error, 2 internal/runtime error.
All output files are written atomically; failed invocations leave nothing
behind, and no subcommand ever modifies its input files.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import OrtgLabError, StatusError, TransportError, WriteError
from .fetch import RetryPolicy, fetch_to_file
from .fileio import atomic_write_bytes
from .ingest import SyntheticSpec, generate_synthetic_dataset, parse_dataset_csv, serialize_dataset_csv
from .model import TrainConfig, load_model, save_model, search_mlp_architecture, train_predictor
from .evaluate import run_loocv, write_eval_report
from .optimize import derive_feasible_region, optimize_gameplan, write_gameplan
from . import service


class _Parser(argparse.ArgumentParser):
    """argparse reports usage errors with exit code 1, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad layer shape {text!r}; use e.g. 3 or 4,2")
    if not shape or any(s < 1 for s in shape):
        raise argparse.ArgumentTypeError(f"layer sizes must be positive, got {text!r}")
    return shape


def _parse_shapes(text: str) -> list[tuple[int, ...]]:
    return [_parse_shape(part) for part in text.split(";") if part]


def _parse_lock(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"locks look like key=value, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lock value for {name!r} is not numeric")


def build_parser() -> _Parser:
    parser = _Parser(prog="ortg-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset CSV")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("-n", type=int, required=True, help="number of team seasons")
    p.add_argument("-o", required=True, metavar="FILE", help="output CSV path")
    p.add_argument("--sigma", type=float, default=2.0,
                   help="target noise in ORTG points (default 2.0)")
    p.add_argument("--latent-dim", type=int, default=18,
                   help="affine rank of the sample matrix; 0 samples every "
                        "feature independently (default 18)")

    p = sub.add_parser("fetch", help="fetch one season of playtype stats to CSV")
    p.add_argument("--season", required=True, help="season label, e.g. 2022-23")
    p.add_argument("--endpoint", default="https://stats.nba.com",
                   help="stats API base URL")
    p.add_argument("-o", required=True, metavar="FILE", help="output CSV path")
    p.add_argument("--retries", type=int, default=3, help="retry count (default 3)")

    p = sub.add_parser("train", help="fit a predictor and write the model file")
    p.add_argument("--data", required=True, metavar="FILE", help="input dataset CSV")
    p.add_argument("--model", required=True, choices=("linear", "mlp"))
    p.add_argument("--shape", type=_parse_shape, default=(3,),
                   help="hidden layer sizes for --model mlp, e.g. 3 or 4,2")
    p.add_argument("--k", type=int, default=18, help="principal components (default 18)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", required=True, metavar="MODEL_FILE", help="output model path")

    p = sub.add_parser("evaluate", help="leave-one-out cross-validation report")
    p.add_argument("--data", required=True, metavar="FILE")
    p.add_argument("--model", choices=("linear", "mlp"), default=None)
    p.add_argument("--shape", type=_parse_shape, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fit-scope", choices=("global", "per-fold"), default="global",
                   help="fit normalizers/PCA once on all rows (default) or per fold")
    p.add_argument("--from-model", metavar="MODEL_FILE", default=None,
                   help="take kind/shape/k/seed from an existing model file")
    p.add_argument("--threads", type=int, default=None,
                   help="fold workers (default: machine parallelism)")
    p.add_argument("--out", required=True, metavar="REPORT", help="report JSON path")

    p = sub.add_parser("search", help="rank hidden-layer architectures by LOOCV RMSE")
    p.add_argument("--data", required=True, metavar="FILE")
    p.add_argument("--shapes", type=_parse_shapes, required=True,
                   help="semicolon-separated hidden shapes, e.g. 1;3;5;8;4,2")
    p.add_argument("--k", type=int, default=18)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fit-scope", choices=("global", "per-fold"), default="global")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, metavar="REPORT")

    p = sub.add_parser("optimize", help="search the feasible region for a gameplan")
    p.add_argument("--model", required=True, metavar="MODEL_FILE")
    p.add_argument("--data", required=True, metavar="FILE",
                   help="dataset defining the feasible region and warm starts")
    p.add_argument("--margin", type=float, default=0.0,
                   help="widen observed bounds by margin x range (default 0)")
    p.add_argument("--lock", type=_parse_lock, action="append", default=[],
                   metavar="KEY=VALUE", help="pin a feature (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--out", required=True, metavar="GAMEPLAN", help="output JSON path")
    p.add_argument("--sensitivity-out", metavar="FILE", default=None,
                   help="also write the feature sensitivity ranking "
                        "(.json and sibling .csv)")

    p = sub.add_parser("serve", help="serve the prediction API and web UI")
    p.add_argument("--model", required=True, metavar="MODEL_FILE")
    p.add_argument("--data", required=True, metavar="FILE")
    p.add_argument("--port", type=int, default=None,
                   help="TCP port (default: ORTG_LAB_PORT env var, else 8080)")
    p.add_argument("--allow-origin", default=None,
                   help="CORS origin to allow (default: same-origin only)")
    p.add_argument("--ui-dir", default=None,
                   help="directory of built UI assets to serve at /")

    return parser


def _load_dataset(path: str):
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, "rb") as fh:
        return parse_dataset_csv(fh)


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        sigma=args.sigma,
        latent_dim=None if args.latent_dim == 0 else args.latent_dim,
    )
    data, _truth = generate_synthetic_dataset(args.seed, args.n, spec)
    atomic_write_bytes(args.o, serialize_dataset_csv(data))
    print(f"wrote {len(data)} rows to {args.o}")
    return 0


def _cmd_fetch(args) -> int:
    policy = RetryPolicy(max_retries=args.retries)
    n = fetch_to_file(args.endpoint, args.season, args.o, policy)
    print(f"wrote {n} rows for {args.season} to {args.o}")
    return 0


def _cmd_train(args) -> int:
    data = _load_dataset(args.data)
    cfg = TrainConfig(seed=args.seed)
    predictor = train_predictor(data, args.model, k=args.k, cfg=cfg,
                                hidden_shape=args.shape)
    save_model(predictor, args.o)
    print(f"trained {args.model} (k={args.k}) on {len(data)} rows; "
          f"final loss {predictor.metadata['final_loss']:.3e}; wrote {args.o}")
    return 0


def _cmd_evaluate(args) -> int:
    data = _load_dataset(args.data)
    kind, shape, k, seed = args.model, args.shape, args.k, args.seed
    if args.from_model:
        predictor = load_model(args.from_model)
        kind = predictor.kind
        if kind == "mlp" and shape is None:
            shape = predictor.model.layer_sizes[1:-1]
        if k is None:
            k = predictor.pipeline.k
        if seed is None:
            seed = int(predictor.metadata.get("seed", 0))
    if kind is None:
        raise ValueError("pass --model linear|mlp (or --from-model)")
    report = run_loocv(
        data, kind,
        k=18 if k is None else k,
        cfg=TrainConfig(seed=0 if seed is None else seed),
        fit_scope=args.fit_scope.replace("-", "_"),
        hidden_shape=(3,) if shape is None else shape,
        threads=args.threads,
    )
    write_eval_report(report, args.out)
    print(f"{kind} LOOCV over {len(report.folds)} folds: "
          f"rmse_normalized={report.rmse_normalized:.4f} "
          f"rmse_ortg={report.rmse_ortg:.3f} r_squared={report.r_squared:.4f}")
    return 0


def _cmd_search(args) -> int:
    import json

    data = _load_dataset(args.data)
    cfg = TrainConfig(seed=args.seed)
    ranking = search_mlp_architecture(
        data, args.shapes, cfg, k=args.k,
        fit_scope=args.fit_scope.replace("-", "_"), threads=args.threads,
    )
    doc = {
        "k": args.k,
        "seed": args.seed,
        "fit_scope": args.fit_scope.replace("-", "_"),
        "ranking": [
            {"shape": list(shape), "rmse_ortg": rmse} for shape, rmse in ranking
        ],
    }
    atomic_write_bytes(args.out, (json.dumps(doc, indent=2) + "\n").encode())
    best_shape, best_rmse = ranking[0]
    print(f"best hidden shape {list(best_shape)} at rmse_ortg={best_rmse:.3f}; "
          f"wrote {args.out}")
    return 0


def _cmd_optimize(args) -> int:
    predictor = load_model(args.model)
    data = _load_dataset(args.data)
    region = derive_feasible_region(data, margin=args.margin)
    locked = dict(args.lock)
    candidate = optimize_gameplan(
        predictor, region, locked=locked, seed=args.seed,
        restarts=args.restarts, data=data,
    )
    write_gameplan(candidate, region, args.out)
    if args.sensitivity_out:
        from pathlib import Path

        from .optimize import sensitivity_rank, sensitivity_to_csv_bytes, sensitivity_to_json_bytes

        ranking = sensitivity_rank(predictor, data)
        out = Path(args.sensitivity_out)
        atomic_write_bytes(out, sensitivity_to_json_bytes(ranking))
        atomic_write_bytes(out.with_suffix(".csv"), sensitivity_to_csv_bytes(ranking))
    print(f"best gameplan predicts ORTG {candidate.predicted_ortg:.2f} "
          f"({len(candidate.active_constraints)} active constraints); wrote {args.out}")
    return 0


def resolve_port(flag_port: int | None) -> int:
    """--port wins; else the ORTG_LAB_PORT env var; else 8080."""
    if flag_port is not None:
        return flag_port
    env = os.environ.get("ORTG_LAB_PORT", "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"ORTG_LAB_PORT={env!r} is not an integer") from None
    return 8080


def _cmd_serve(args) -> int:
    port = resolve_port(args.port)
    predictor = load_model(args.model)
    data = _load_dataset(args.data)
    server = service.build_server(
        predictor, data, port=port,
        allow_origin=args.allow_origin, ui_dir=args.ui_dir,
    )
    print(f"serving on http://127.0.0.1:{server.server_address[1]}/ (Ctrl-C stops)",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "fetch": _cmd_fetch,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "search": _cmd_search,
    "optimize": _cmd_optimize,
    "serve": _cmd_serve,
}

def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (TransportError, StatusError, WriteError) as exc:
        print(f"ortg-lab {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, OrtgLabError) as exc:
        print(f"ortg-lab {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"ortg-lab {args.command}: internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
