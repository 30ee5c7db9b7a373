"""Command-line entry point.

Subcommands: train, predict, evaluate, explain, benchmark. All outputs
are written atomically; given identical inputs and seeds, every command
except benchmark (whose reports carry wall times) produces byte-identical
files. Exit codes: 0 success, 1 usage, 2 schema/shape, 3 data, 4
numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from ._util import atomic_write_text, dump_json
from .config import load_config
from .errors import ToolkitError, UsageError
from .explain import LimeConfig, render_bar_chart
from .model_io import load_model, save_model
from .pipeline import (
    build_dataset,
    evaluate_bundle,
    explain_lime,
    explain_pfi,
    predictions_csv,
    run_benchmark,
    train_from_config,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage through the exit-code taxonomy."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="windcast", description="Wind power forecasting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", parents=[], help="fit a model from a run config")
    p_train.add_argument("--config", required=True, help="run config JSON")
    p_train.add_argument("--out", default="model.json", help="model output path")
    p_train.add_argument("--trace-out", default=None,
                         help="training trace CSV (default: <out>.trace.csv)")
    p_train.add_argument("--seed", type=int, default=None, help="override training.seed")
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="write forecasts for every sample")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--config", required=True)
    p_predict.add_argument("--out", default="predictions.csv")
    p_predict.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", help="test-split metric report")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--out", default="evaluation.json")
    p_eval.add_argument("--probabilistic", action="store_true",
                        help="require interval metrics (quantile models only)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_explain = sub.add_parser("explain", help="feature importance or local surrogate")
    p_explain.add_argument("--model", required=True)
    p_explain.add_argument("--config", required=True)
    p_explain.add_argument("--mode", choices=("pfi", "lime"), default="pfi")
    p_explain.add_argument("--out", default="explanation.json")
    p_explain.add_argument("--svg-out", default=None, help="optional bar chart")
    p_explain.add_argument("--seed", type=int, default=0)
    p_explain.add_argument("--split", choices=("train", "test"), default="test",
                           help="rows used for pfi")
    p_explain.add_argument("--repeats", type=int, default=5, help="pfi shuffles per feature")
    p_explain.add_argument("--instance-index", type=int, default=0,
                           help="test-split row for lime")
    p_explain.add_argument("--lime-samples", type=int, default=1000)
    p_explain.add_argument("--perturb-scale", type=float, default=0.1)
    p_explain.add_argument("--kernel-width", type=float, default=None)
    p_explain.add_argument("--ridge-lambda", type=float, default=1e-6)
    p_explain.set_defaults(func=cmd_explain)

    p_bench = sub.add_parser("benchmark", help="paired strategies-on/off comparison")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--seeds", type=int, default=10, help="number of paired runs")
    p_bench.add_argument("--out", default="benchmark.json")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--seed", type=int, default=None, help="override base seed")
    p_bench.set_defaults(func=cmd_benchmark)

    return parser


def cmd_train(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.training.seed = args.seed
    bundle, trace, _ = train_from_config(config)
    save_model(args.out, bundle)
    trace_path = args.trace_out or os.path.splitext(args.out)[0] + ".trace.csv"
    atomic_write_text(trace_path, trace.to_csv())
    if trace.rows:
        _, _, train_loss, val_loss = trace.rows[-1]
        val = "n/a" if val_loss is None else repr(val_loss)
        print(f"trained {len(trace)} epochs: train_loss {train_loss!r} val_loss {val}")
    print(f"model written to {args.out}")
    print(f"trace written to {trace_path}")
    return 0


def cmd_predict(args) -> int:
    bundle = load_model(args.model)
    config = load_config(args.config)
    text = predictions_csv(bundle, build_dataset(config))
    atomic_write_text(args.out, text)
    print(f"{text.count(chr(10)) - 1} predictions written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_model(args.model)
    config = load_config(args.config)
    if args.probabilistic and bundle.kind != "quantile":
        raise UsageError("--probabilistic needs a quantile model")
    report = evaluate_bundle(bundle, build_dataset(config))
    atomic_write_text(args.out, dump_json(report))
    print(
        f"n {report['n']}  r2 {report['r2']:.4f}  "
        f"nmae {report['nmae']:.4f}  nrmse {report['nrmse']:.4f}"
    )
    print(f"report written to {args.out}")
    return 0


def cmd_explain(args) -> int:
    bundle = load_model(args.model)
    config = load_config(args.config)
    prepared = build_dataset(config)
    if args.mode == "pfi":
        report = explain_pfi(
            bundle, prepared, split=args.split, repeats=args.repeats, seed=args.seed
        )
        title = "permutation feature importance"
    else:
        lime_cfg = LimeConfig(
            n_samples=args.lime_samples,
            perturb_scale=args.perturb_scale,
            kernel_width=args.kernel_width,
            ridge_lambda=args.ridge_lambda,
            seed=args.seed,
        )
        report = explain_lime(
            bundle, prepared, instance_index=args.instance_index, lime=lime_cfg
        )
        title = f"contributions for test instance {args.instance_index}"
    atomic_write_text(args.out, dump_json(report))
    print(f"report written to {args.out}")
    if args.svg_out:
        svg = render_bar_chart(report["feature_names"], report["values"], title)
        atomic_write_text(args.svg_out, svg)
        print(f"chart written to {args.svg_out}")
    return 0


def cmd_benchmark(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.training.seed = args.seed
    report = run_benchmark(config, args.seeds, workers=args.workers)
    atomic_write_text(args.out, dump_json(report))
    on = report["medians"]["with_strategies"]
    off = report["medians"]["without_strategies"]
    print(
        f"median nrmse: with strategies {on['nrmse']}  without {off['nrmse']}"
    )
    for metric, delta in report["deltas_pct"].items():
        print(f"delta {metric}: {delta:+.2f}%")
    print(f"report written to {args.out}")
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ToolkitError as exc:
        print(f"windcast: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
