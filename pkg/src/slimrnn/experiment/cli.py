"""Command-line front end.

Exit statuses: 0 success, 1 check failed, 2 usage or config error,
3 numeric fault, 4 checkpoint/persistence error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import (CheckpointError, ConfigError, ContractViolation, NumericFault)
from ..gradcheck import DEFAULT_EPS, DEFAULT_THRESHOLD, LossSpec, gradient_check
from ..numerics import ActivationKind
from ..taxonomy import (DEFAULT_ALPHA, VARIANT_NAMES, canonical_name, describe,
                        param_count, reduction_vs_standard, standard_param_count,
                        variant_config)
from .config import ExperimentConfig
from .runs import COMPARE_HEADER, curve_text, run_compare, run_training

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERIC, EXIT_PERSISTENCE = 0, 1, 2, 3, 4

log = logging.getLogger("slimrnn")


class UsageError(Exception):
    pass


def _variants(names: list[str]) -> list[str]:
    try:
        return [canonical_name(v) for v in names] or list(VARIANT_NAMES)
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None


def param_table_rows(n: int, m: int, variants: list[str]) -> list[tuple[str, int, int, float]]:
    base = standard_param_count(n, m)
    rows = []
    for name in variants:
        cfg = variant_config(name)
        reduction = reduction_vs_standard(cfg, n, m)
        rows.append((name, param_count(cfg, n, m), reduction, 100.0 * reduction / base))
    return rows


def cmd_param_table(args) -> int:
    if args.n < 1 or args.m < 1:
        raise UsageError("n and m must be positive")
    rows = param_table_rows(args.n, args.m, _variants(args.variants))
    if args.format == "csv":
        print("variant,params,reduction,reduction_pct")
        for name, count, red, pct in rows:
            print(f"{name},{count},{red},{pct:.2f}")
    else:
        print(f"n={args.n} m={args.m} standard={standard_param_count(args.n, args.m)}")
        print(f"{'variant':<10} {'params':>10} {'reduction':>10} {'pct':>7}")
        for name, count, red, pct in rows:
            print(f"{name:<10} {count:>10} {red:>10} {pct:>6.2f}%")
    return EXIT_OK


def cmd_catalog(args) -> int:
    for name in _variants(args.variants):
        cfg = variant_config(name, args.alpha)
        gates = " ".join(f"{role}={gate}" for role, gate in cfg.gates.items())
        cell = cfg.cell_input
        print(f"{name}: gates {gates}; cell {cell.recurrent_mixing.value}"
              f"{'+bias' if cell.bias_present else ''}; "
              f"outer_nonlinearity={'yes' if cfg.outer_nonlinearity else 'no'}")
        for line in describe(cfg):
            print(f"    {line}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    try:
        cfg = variant_config(args.variant, args.alpha, args.activation)
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None
    corrupt = None
    if args.corrupt:
        corrupt = ("W_c", (0, 0))
    report = gradient_check(cfg, args.n, args.m, args.T, args.seed, args.eps, args.threshold,
                            LossSpec(args.loss), corrupt=corrupt)
    print(report.to_table())
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    for assignment in args.set or []:
        config.override(assignment)
    if getattr(args, "epochs", None) is not None:
        config.override(f"experiment.epochs={args.epochs}")
    if getattr(args, "output_dir", None):
        config.override(f"experiment.output_dir={args.output_dir}")
    return config


def _output_dir(config: ExperimentConfig) -> Path:
    out = Path(config.experiment.output_dir)
    return out if out.is_absolute() else Path.cwd() / out


def cmd_train(args) -> int:
    config = _load_config(args)
    result = run_training(config, _output_dir(config), args.resume)
    sys.stdout.write(curve_text(result.records))
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_config(args)
    rows = run_compare(config, _output_dir(config))
    print(COMPARE_HEADER)
    for row in rows:
        print(row.csv())
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slimrnn",
                                     description="Slim LSTM variant catalog and experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("param-table", help="trainable parameter counts per variant")
    p.add_argument("variants", nargs="*", help="variant names (default: all)")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_param_table)

    p = sub.add_parser("catalog", help="print the update equations of each variant")
    p.add_argument("variants", nargs="*")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("gradcheck", help="compare BPTT gradients with finite differences")
    p.add_argument("variant")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--T", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--activation", choices=[k.value for k in ActivationKind], default="tanh")
    p.add_argument("--loss", choices=[s.value for s in LossSpec], default="sum_squares")
    p.add_argument("--json", help="also write the report as JSON to this path")
    p.add_argument("--corrupt", action="store_true",
                   help="debug: add 0.1 to one analytic gradient entry")
    p.set_defaults(func=cmd_gradcheck)

    for name, func, text in (("train", cmd_train, "train one variant from a config file"),
                             ("compare", cmd_compare, "train several variants side by side")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="experiment config file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--epochs", type=int)
        p.add_argument("--output-dir")
        if name == "train":
            p.add_argument("--resume", help="continue from this checkpoint")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"slimrnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFault as exc:
        print(f"slimrnn: numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CheckpointError as exc:
        print(f"slimrnn: checkpoint error: {exc}", file=sys.stderr)
        return EXIT_PERSISTENCE
    except ContractViolation as exc:
        print(f"slimrnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
