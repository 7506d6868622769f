"""Command-line interface: grasspinch verify|identities|catalog|integrate."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .catalog import CatalogMiss
from .report import (
    COMMANDS,
    EXIT_CATALOG,
    EXIT_CONFIG,
    FORMATS,
    ConfigError,
    RunConfig,
    config_from_mapping,
    dumps,
    load_config,
    run,
)

PRIMARY_TABLE = {"verify": "hol", "integrate": "um", "identities": "identities", "catalog": "catalog"}


class _Parser(argparse.ArgumentParser):
    # usage errors are malformed configuration, not a verdict
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="grasspinch", description="Numerical verification of the pinching rigidity "
                "statement for holomorphic immersions into complex Grassmannians.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--immersion", help="catalog id with optional params (veronese:3, identity:p=2,n=4) "
                   "or path to a JSON immersion")
    p.add_argument("--config", help="JSON file with run settings; command-line flags override it")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--grid", type=int, help="min Hol search grid per axis")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="output path (text format: JSON report goes here)")
    p.add_argument("--density", type=int, help="chart grid for flatness and parallelism sampling")
    p.add_argument("--base-density", type=int, dest="base_density", help="unit sphere bundle base density")
    p.add_argument("--replicates", type=int)
    p.add_argument("--no-integrate", action="store_const", const=False, dest="integrate",
                   help="skip the sphere bundle integrals in verify")
    p.add_argument("--diff-mode", choices=("jet", "fd"), dest="diff_mode")
    p.add_argument("--n", type=int, help="identity battery ambient dimension")
    p.add_argument("--p", type=int, help="identity battery plane dimension")
    p.add_argument("--draws", type=int, help="identity battery random draws")
    p.add_argument("--hol-csv", dest="hol_csv", help="write min Hol samples as CSV")
    p.add_argument("--um-csv", dest="um_csv", help="write sphere bundle quadrature samples as CSV")
    return p


_FLAG_KEYS = ("immersion", "seed", "grid", "format", "out", "density", "base_density", "replicates",
              "integrate", "diff_mode", "n", "p", "draws", "hol_csv", "um_csv")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = load_config(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k) is not None}
    overrides["command"] = args.command
    return config_from_mapping(overrides, base)


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        result = run(config)
    except ConfigError as exc:
        print(f"grasspinch: malformed config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CatalogMiss as exc:
        print(f"grasspinch: catalog miss: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_CATALOG
    if config.format == "json":
        _emit(dumps(result.report), config.out)
    elif config.format == "csv":
        table = result.tables.get(PRIMARY_TABLE[config.command])
        if table is None:
            print("grasspinch: no sample table for this run", file=sys.stderr)
        else:
            _emit(table, config.out)
    else:
        sys.stdout.write("\n".join(result.summary) + "\n")
        if config.out:
            Path(config.out).write_text(dumps(result.report))
    if config.hol_csv and "hol" in result.tables:
        Path(config.hol_csv).write_text(result.tables["hol"])
    if config.um_csv and "um" in result.tables:
        Path(config.um_csv).write_text(result.tables["um"])
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
