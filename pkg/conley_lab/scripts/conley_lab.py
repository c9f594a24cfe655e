#! /usr/bin/env python


"""Run a conley-lab scenario and write its artifacts."""


import argparse
import datetime
import logging
import os
import sys


import humanize
from tabulate import tabulate


from conley_lab import default_config_files_directory
from conley_lab.config import Config
from conley_lab.errors import NumericalError, ScenarioError, ValidationError
from conley_lab.scenarios import run, Scenario, tasks

app_name = os.path.splitext(os.path.basename(__file__))[0]
log = logging.getLogger(app_name)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64


def threads_from_environment(threads = None):
    if threads is not None:
        return threads
    value = os.environ.get('CONLEY_LAB_THREADS')
    if value is None:
        return 1
    try:
        threads = int(value)
    except ValueError:
        log.warning("Ignoring CONLEY_LAB_THREADS = {!r}, not an integer".format(value))
        return 1
    return max(threads, 1)


def outputs_table(writer):
    rows = [
        (name, humanize.naturalsize(entry['bytes'], gnu = True), entry['sha256'][:16])
        for name, entry in writer.outputs.items()
        ]
    return tabulate(rows, headers = ['file', 'size', 'sha256'])


def main(argv = None):
    parser = argparse.ArgumentParser(description = __doc__)
    parser.add_argument('task', help = "task to run: {}".format(', '.join(tasks.keys())))
    parser.add_argument('-s', '--scenario', help = "path to the YAML scenario file", required = True)
    parser.add_argument('-o', '--out', help = "output directory (default = the scenario's output or results/<name>)")
    parser.add_argument('--seed', type = int, help = "seed overriding the scenario's seed")
    parser.add_argument('-t', '--threads', type = int,
        help = "worker threads (default = CONLEY_LAB_THREADS or 1)")
    parser.add_argument('-p', '--path', help = 'path to the config files directory (default = {})'.format(
        default_config_files_directory))
    parser.add_argument('-v', '--verbose', action = 'store_true', default = False, help = "increase output verbosity")
    args = parser.parse_args(argv)
    logging.basicConfig(level = logging.DEBUG if args.verbose else logging.WARNING, stream = sys.stdout)

    if args.task not in tasks:
        log.error("Unknown task {} (available: {})".format(args.task, ', '.join(tasks.keys())))
        return EXIT_USAGE

    config_files_directory = args.path if args.path else default_config_files_directory
    start_time = datetime.datetime.now()

    try:
        scenario = Scenario.load(args.scenario, task = args.task)
        if args.seed is not None:
            if args.seed < 0:
                raise ScenarioError("seed must be a non-negative integer, got {}".format(args.seed), field = 'seed')
            scenario.seed = args.seed
        writer = run(
            scenario,
            out = args.out,
            threads = threads_from_environment(args.threads),
            config = Config(config_files_directory = config_files_directory),
            )
    except ValidationError as error:
        field = getattr(error, 'field', None)
        log.error("Invalid input{}: {}".format(" at {}".format(field) if field else "", error))
        return EXIT_VALIDATION
    except NumericalError as error:
        log.error("Numerical failure ({}): {}".format(type(error).__name__, error))
        return EXIT_NUMERICAL

    log.info("Outputs written to {}:\n{}".format(writer.directory, outputs_table(writer)))
    log.info("The program has been executed in {}".format(
        humanize.naturaldelta(datetime.datetime.now() - start_time)))

    return 0


if __name__ == "__main__":
    sys.exit(main())
