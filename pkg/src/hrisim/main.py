"""
Command-line entry point: ``hrisim <study> [options]``.
"""
from typing import List, Optional
import argparse
import logging
import sys

import numpy as np

from hrisim.config.config_parser import Config, ConfigError
from hrisim.config.verify import STUDIES, verify_input
from hrisim.estimation.estimators import NumericalError
from hrisim.experiments.spec import ExperimentSpec
from hrisim.experiments.studies import run_study
from hrisim.outputs import emit

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrisim",
        description="Channel estimation studies for hybrid reflecting and sensing surfaces.",
    )
    parser.add_argument("study", choices=STUDIES, help="Study to run")
    parser.add_argument(
        "--config",
        default=None,
        help="TOML file, a shipped configuration name or one saved with --save-config",
    )
    parser.add_argument("--out", default=None, help="Result file")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--seed", type=int, default=None, help="Root seed")
    parser.add_argument(
        "--trials", type=int, default=None, help="Trials per grid point, 0 for the study default"
    )
    parser.add_argument("--tau", type=int, default=None, help="Pilot length, 0 for the study default")
    parser.add_argument(
        "--parallelism", default=None, help="auto, strict or a number of processes"
    )
    parser.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any configuration value, e.g. --set noise.snr_offset_db=70",
    )
    parser.add_argument(
        "--print-effective-config",
        action="store_true",
        help="Print the merged configuration and exit",
    )
    parser.add_argument(
        "--no-timestamp",
        action="store_true",
        help="Leave the creation time out of the metadata sidecar",
    )
    parser.add_argument(
        "--save-config", default=None, metavar="NAME", help="Save the merged configuration"
    )
    return parser


def effective_config(args: argparse.Namespace) -> Config:
    """ Defaults, then the config file, then ``--set`` values, then dedicated flags """
    config = Config.from_path_or_name(args.config)
    config = config.set_values(args.assignments)
    flags = {"study": args.study}
    experiment, output = {}, {}
    if args.seed is not None:
        experiment["seed"] = args.seed
    if args.trials is not None:
        experiment["trials"] = args.trials
    if experiment:
        flags["experiment"] = experiment
    if args.tau is not None:
        flags["system"] = {"tau": args.tau}
    if args.out is not None:
        output["path"] = args.out
    if args.format is not None:
        output["format"] = args.format
    if args.parallelism is not None:
        output["parallelism"] = str(args.parallelism)
    if args.no_timestamp:
        output["timestamp"] = False
    if output:
        flags["output"] = output
    config = config.merge(flags)
    verify_input(config.config_data)
    return config


def run(args: argparse.Namespace):
    config = effective_config(args)
    if args.save_config:
        config.to_disk(args.save_config)
    if args.print_effective_config:
        print(config.dumps())
        return
    spec = ExperimentSpec.from_config(config.config_data)
    table = run_study(spec)
    emit(table, config.config_data)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stdout,
        format="%(levelname)s :: %(filename)s :: %(asctime)s :: %(message)s",
        level=logging.INFO,
    )
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(invalid="raise"):
            run(args)
    except (np.linalg.LinAlgError, FloatingPointError, NumericalError) as e:
        logging.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except ConfigError as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except ValueError as e:
        logging.error(f"Invalid study setup: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logging.error(f"I/O error: {e}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
