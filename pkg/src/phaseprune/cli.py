"""Command-line entry point: ``train``, ``sweep``, ``bench-half``, ``plot``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 runtime failure.
"""

import argparse
import configparser
import logging
import sys
from pathlib import Path

from .data import DataError
from .harness import (
    ConfigError,
    ExperimentConfig,
    SweepFailure,
    benchmark_half,
    config_tag,
    emit_plot,
    final_accuracy,
    read_csv,
    run_sweep,
    train_and_evaluate,
    write_csv,
)
from .pruning import PruneVariant

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("phaseprune")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dims(text):
    try:
        dims = [int(p) for p in str(text).replace(" ", "").split(",") if p]
    except ValueError:
        raise ConfigError(f"hidden dims must be comma-separated integers, got {text!r}") from None
    return dims


def _variants(text):
    try:
        return [PruneVariant.parse(p) for p in str(text).split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _number(kind):
    def convert(text):
        try:
            return kind(text)
        except ValueError:
            raise ConfigError(f"expected {kind.__name__}, got {text!r}") from None

    return convert


# config key -> (ExperimentConfig field, converter)
FIELDS = {
    "net": ("net_kind", str),
    "hidden": ("hidden_dims", _dims),
    "lr": ("lr", _number(float)),
    "steps": ("steps", _number(int)),
    "batch": ("batch_size", _number(int)),
    "eval_every": ("eval_every", _number(int)),
    "eval_subset": ("eval_subset", _number(int)),
    "variants": ("variants", _variants),
    "seed": ("seed", _number(int)),
    "prune_mode": ("prune_mode", str),
    "half_scope": ("half_scope", str),
    "data_dir": ("data_dir", str),
    "out": ("out_dir", str),
}
SWEEP_KEYS = {"parallelism"}


def read_config_file(path):
    """Parse ``key = value`` lines (``#`` comments) into a dict of raw strings.

    Keys are case-insensitive and may use ``-`` or ``_``.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for key, value in parser.items("config"):
        key = key.strip().lower().replace("-", "_")
        if key not in FIELDS and key not in SWEEP_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _to_fields(raw):
    out = {}
    for key, value in raw.items():
        if key in FIELDS:
            name, convert = FIELDS[key]
            out[name] = convert(value)
    return out


def _cli_overrides(args):
    return {k: getattr(args, k) for k in FIELDS if getattr(args, k, None) is not None}


def build_config(args):
    raw = read_config_file(args.config) if args.config else {}
    raw.update(_cli_overrides(args))
    try:
        cfg = ExperimentConfig(**_to_fields(raw))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def build_sweep(args):
    """Expand a sweep file: ``hidden`` may list several ``;``-separated shapes."""
    raw = read_config_file(args.config)
    raw.update(_cli_overrides(args))
    parallelism = int(args.parallelism or raw.pop("parallelism", 1) or 1)
    raw.pop("parallelism", None)
    shapes = [s.strip() for s in raw.pop("hidden", "100").split(";") if s.strip()]
    base = _to_fields(raw)
    master_seed = base.pop("seed", 0)
    configs = []
    for shape in shapes:
        try:
            configs.append(ExperimentConfig(**base, hidden_dims=_dims(shape)).validate())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return configs, parallelism, master_seed


def _add_experiment_flags(p):
    p.add_argument("--config", help="key = value file; flags override its values")
    p.add_argument("--net", choices=["complex", "real"])
    p.add_argument("--hidden", help="hidden widths, e.g. 512,100")
    p.add_argument("--lr")
    p.add_argument("--steps")
    p.add_argument("--batch", help="mini-batch size (0 = full batch)")
    p.add_argument("--eval-every", dest="eval_every")
    p.add_argument("--eval-subset", dest="eval_subset", help="test columns to score (0 = all)")
    p.add_argument("--variants", help="comma list, e.g. phase,amplitude,real,imag,half,none")
    p.add_argument("--seed")
    p.add_argument("--prune-mode", dest="prune_mode", choices=["copy", "permanent"])
    p.add_argument("--half-scope", dest="half_scope", choices=["per-matrix", "global"])
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--out", help="output directory")


def make_parser():
    parser = _Parser(prog="phaseprune", description="Phase/amplitude pruning experiments on MNIST.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every evaluation step")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="train one network and record pruned-copy accuracy")
    _add_experiment_flags(train)

    sweep = sub.add_parser("sweep", help="run several hidden-layer shapes from a config file")
    _add_experiment_flags(sweep)
    sweep.add_argument("--parallelism", type=int)

    bench = sub.add_parser("bench-half", help="print the RandomHalf benchmark mean")
    _add_experiment_flags(bench)
    bench.add_argument("--window", type=int, default=10)

    plot = sub.add_parser("plot", help="draw accuracy curves from a records CSV")
    plot.add_argument("--in", dest="input", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--title")
    return parser


def _cmd_train(args):
    cfg = build_config(args)
    records = train_and_evaluate(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(records, out / "records.csv")
    for v in cfg.variants:
        print(f"{v}\t{final_accuracy(records, v):.4f}")
    print(f"wrote {out / 'records.csv'}")
    return EXIT_OK


def _cmd_sweep(args):
    if not args.config:
        raise UsageError("sweep needs --config")
    configs, parallelism, master_seed = build_sweep(args)
    out = Path(args.out or (configs[0].out_dir if configs else "runs"))
    results = run_sweep(configs, parallelism=parallelism, master_seed=master_seed, out_dir=out)
    failed = 0
    for i, (cfg, res) in enumerate(zip(configs, results)):
        if isinstance(res, SweepFailure):
            failed += 1
            print(f"{config_tag(i, cfg)}\tFAILED\t{res.error}")
        else:
            print(f"{config_tag(i, cfg)}\tok\t{len(res)} records")
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_bench(args):
    cfg = build_config(args)
    if PruneVariant.RANDOM_HALF not in cfg.variants:
        cfg.variants.append(PruneVariant.RANDOM_HALF)
    print(f"{benchmark_half(cfg, window=args.window):.6f}")
    return EXIT_OK


def _cmd_plot(args):
    try:
        records = read_csv(args.input)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if not records:
        raise DataError(f"{args.input} has no records")
    emit_plot(records, args.out, title=args.title)
    return EXIT_OK


COMMANDS = {"train": _cmd_train, "sweep": _cmd_sweep, "bench-half": _cmd_bench, "plot": _cmd_plot}


def main(argv=None):
    try:
        args = make_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
