"""Command-line entry point: ``dcids <experiment> [--config FILE] [--key value ...]``.

Exit status: 0 on success, 1 for configuration errors, 2 for runtime failures.
"""
import argparse
from dataclasses import fields
import logging
import sys

from .harness import RUNNERS, THREADS_ENV, ConfigError, ExperimentConfig, load_config, run, \
    rows_to_csv, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="dcids", description="Delayed-coding experiments over IDS channels. "
                     f"Set {THREADS_ENV} to use several detector threads.")
    sub = parser.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in RUNNERS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="flat 'key = value' configuration file")
        p.add_argument("-v", "--verbose", action="store_true")
        for f in fields(ExperimentConfig):
            if f.name == "kind":
                continue
            flag = "--" + f.name.replace("_", "-")
            if f.name == "timing":
                p.add_argument(flag, dest=f.name, action="store_const", const="true",
                               help="record wall-clock seconds per row")
            else:
                p.add_argument(flag, dest=f.name, metavar="VALUE",
                               help="comma-separated for list options" if isinstance(
                                   f.default, list) or f.default_factory is not None else None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)
                 if f.name != "kind"}
    try:
        cfg = load_config(args.config, overrides, kind=args.kind)
    except ConfigError as exc:
        print(f"dcids: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run(cfg)
        if cfg.output:
            write_csv(rows, cfg.output)
        else:
            sys.stdout.write(rows_to_csv(rows))
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        logging.getLogger("dcids").exception("run failed")
        print(f"dcids: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
