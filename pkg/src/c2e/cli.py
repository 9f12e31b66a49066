"""c2e - elastic cloud/edge training placement, autoscaling and simulation

Usage:
  c2e validate <file> [--override=<kv>]... [--debug]
  c2e run <file> -o <dir> [--override=<kv>]... [--template=<tpl>] [--debug]
  c2e sweep <file> -o <dir> --seeds=<list> [--override-set=<set>]... [--jobs=<n>] [--debug]
  c2e config <file> [--emit-app] [--template=<tpl>] [--debug]
  c2e (-h | --help)
  c2e --version

Arguments:
  <file>                  Scenario document (dataset descriptor for config); - reads standard input.

Options:
  -o <dir> --output=<dir>  Directory the CSV files are written to.
  --override=<kv>          Dotted-path scenario override, e.g. policy.theta_up=0.9 or node.n01.slots=3.
  --seeds=<list>           Comma separated seeds of a sweep, e.g. 1,2,3.
  --override-set=<set>     Semicolon separated overrides forming one sweep configuration, e.g.
                           "cluster.size=8;failures.limit=4". Repeat for more configurations.
  --jobs=<n>               Sweep runs executed in parallel [default: 1].
  --template=<tpl>         Template of the printed result: CANNED:<NAME> or FILE:<path> to a jinja2 file. run
                           renders it with name and summary, config with descriptor and suggestions.
  --emit-app               Print the scenario sections of the generated training application.
  --debug                  Log to standard error.
  -h --help                Show this screen.
  --version                Show the version.

Exit status is 0 on success, 1 when the scenario is invalid, infeasible or a sweep run failed, and 2 on usage, parse
or I/O errors.
"""

import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from docopt import docopt, DocoptExit

import c2e
from .configuration import ScenarioDocument, parse_descriptor, render_app
from .dnn_config import generate_training_dag, suggest_architectures
from .exceptions import (C2EError, ExportError, MalformedTemplateConfig, MissingPartitionsError,
                         NoCompatibleArchitectureError, OverrideError, RunInvariantError, ScenarioInvariantError,
                         ScenarioSyntaxError, TemplateNotFoundException, UnknownReferenceError,
                         UnsupportedDescriptorError)
from .simengine import export_metrics, simulate
from .simengine.metrics import format_value
from .templates import get_template, render

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

SUBCOMMANDS = ('validate', 'run', 'sweep', 'config')
AGGREGATE_FILE = 'aggregate.csv'
AGGREGATE_COLUMNS = ['seed', 'overrides', 'status', 'training_completion_time', 'target_reached', 'final_accuracy',
                     'epochs', 'total_migrations', 'peak_active_nodes', 'output', 'error']


@dataclass(frozen=True)
class RunRequest(object):
    """
    One command line invocation

    :ivar str subcommand: validate, run, sweep or config
    :ivar str scenario_path: Scenario (or descriptor) path, "-" for standard input
    :ivar str output_dir: Output directory of run and sweep
    :ivar tuple overrides: dotted-path overrides of validate and run
    :ivar tuple seeds: Seeds of a sweep
    :ivar tuple override_sets: Override tuples of a sweep, one per configuration
    :ivar int jobs: Parallel sweep runs
    :ivar bool emit_app: config prints the generated app instead of the suggestions
    :ivar str template: Template config string of the printed result, None for the canned one
    """
    subcommand: str
    scenario_path: str
    output_dir: str = None
    overrides: tuple = ()
    seeds: tuple = ()
    override_sets: tuple = ((),)
    jobs: int = 1
    emit_app: bool = False
    template: str = None


def _split_set(text):
    return tuple(item.strip() for item in text.split(';') if item.strip())


def request_from_arguments(arguments):
    """
    Builds the :class:`RunRequest` of parsed docopt arguments

    :raises DocoptExit: if seeds or jobs are malformed
    """
    subcommand = [name for name in SUBCOMMANDS if arguments.get(name)][0]
    seeds = ()
    if arguments.get('--seeds') is not None:
        try:
            seeds = tuple(int(s) for s in arguments['--seeds'].split(',') if s.strip())
        except ValueError:
            raise DocoptExit("--seeds must be comma separated integers")
        if not seeds or any(s < 0 for s in seeds):
            raise DocoptExit("--seeds needs at least one non-negative seed")
    try:
        jobs = int(arguments.get('--jobs') or 1)
    except ValueError:
        raise DocoptExit("--jobs must be an integer")
    if jobs < 1:
        raise DocoptExit("--jobs must be at least 1")
    sets = tuple(_split_set(s) for s in arguments.get('--override-set') or ()) or ((),)
    return RunRequest(subcommand=subcommand, scenario_path=arguments['<file>'], output_dir=arguments.get('--output'),
                      overrides=tuple(arguments.get('--override') or ()), seeds=seeds, override_sets=sets,
                      jobs=jobs, emit_app=bool(arguments.get('--emit-app')),
                      template=arguments.get('--template'))


def _read(path):
    if path == '-':
        return sys.stdin.read()
    with open(path, 'r') as f:
        return f.read()


def _error(message):
    print("error: {}".format(message), file=sys.stderr)


def _load(request):
    """
    Parses the scenario of a request.

    :return: (scenario, exit status); the scenario is None when the status is not 0
    """
    try:
        document = ScenarioDocument.from_text(_read(request.scenario_path))
        for item in request.overrides:
            document.override(item)
        return document.to_scenario(), EXIT_OK
    except OSError as e:
        _error("cannot read {}: {}".format(request.scenario_path, e.strerror or e))
        return None, EXIT_USAGE
    except (ScenarioSyntaxError, OverrideError) as e:
        _error(e)
        return None, EXIT_USAGE
    except UnknownReferenceError as e:
        _error(e)
        return None, EXIT_DOMAIN
    except ScenarioInvariantError as e:
        print(render('CANNED:VIOLATIONS', violations=e.violations).rstrip('\n'))
        return None, EXIT_DOMAIN


def cmd_validate(request):
    """
    Validates a scenario; prints one line per failed invariant

    :rtype: int
    """
    scenario, status = _load(request)
    if scenario is not None:
        print("{}: ok".format(request.scenario_path))
    return status


def _template(request, canned):
    """
    The template of the printed result, ``canned`` unless ``--template`` names another one

    :return: jinja2 Template, or None after reporting an unusable template config
    """
    try:
        return get_template(request.template or canned)
    except (MalformedTemplateConfig, TemplateNotFoundException) as e:
        _error(e)
        return None


def cmd_run(request):
    """
    Simulates a scenario, writes the CSV files and prints a summary line. An infeasible placement still writes the
    partial metrics and exits with 1, as does a run that loses tuples or records an invalid placement.

    :rtype: int
    """
    template = _template(request, 'CANNED:RUN_SUMMARY')
    if template is None:
        return EXIT_USAGE
    scenario, status = _load(request)
    if scenario is None:
        return status
    broken = None
    try:
        report = simulate(scenario)
    except RunInvariantError as e:
        report, broken = e.report, e.violations
    try:
        export_metrics(report, request.output_dir)
    except ExportError as e:
        _error(e)
        return EXIT_USAGE
    print(template.render(name=os.path.basename(request.scenario_path), summary=report.summary))
    if broken:
        print(render('CANNED:VIOLATIONS', violations=broken).rstrip('\n'))
        return EXIT_DOMAIN
    return EXIT_DOMAIN if report.aborted else EXIT_OK


def _sweep_run(task):
    """
    One sweep run; module level so that worker processes can unpickle it.

    :param tuple task: (scenario text, overrides, seed, output directory)
    :return: aggregate row dict
    """
    text, overrides, seed, output = task
    row = dict((column, None) for column in AGGREGATE_COLUMNS)
    row.update(seed=seed, overrides=';'.join(overrides), output=output)
    try:
        document = ScenarioDocument.from_text(text)
        for item in tuple(overrides) + ('seed={}'.format(seed),):
            document.override(item)
        try:
            report = simulate(document.to_scenario())
        except RunInvariantError as e:
            export_metrics(e.report, output)
            raise
        export_metrics(report, output)
    except C2EError as e:
        row.update(status='error', error=str(e))
        return row

    summary = report.summary
    for key in ('training_completion_time', 'target_reached', 'final_accuracy', 'epochs', 'total_migrations',
                'peak_active_nodes'):
        row[key] = summary[key]
    row['status'] = 'aborted' if report.aborted else 'ok'
    row['error'] = summary['abort_reason']
    return row


def cmd_sweep(request):
    """
    Runs every (override set, seed) pair, each into its own directory, and writes ``aggregate.csv`` with one row per
    run in (override set, seed) order. Failing runs are recorded and the sweep continues.

    :rtype: int
    """
    try:
        text = _read(request.scenario_path)
    except OSError as e:
        _error("cannot read {}: {}".format(request.scenario_path, e.strerror or e))
        return EXIT_USAGE

    tasks = []
    for index, overrides in enumerate(request.override_sets):
        for seed in request.seeds:
            if len(request.override_sets) == 1:
                output = os.path.join(request.output_dir, 'seed-{}'.format(seed))
            else:
                output = os.path.join(request.output_dir, 'set-{}'.format(index), 'seed-{}'.format(seed))
            tasks.append((text, overrides, seed, output))

    if request.jobs > 1:
        with ProcessPoolExecutor(max_workers=request.jobs) as pool:
            rows = list(pool.map(_sweep_run, tasks))
    else:
        rows = [_sweep_run(task) for task in tasks]

    try:
        if not os.path.isdir(request.output_dir):
            os.makedirs(request.output_dir)
        with open(os.path.join(request.output_dir, AGGREGATE_FILE), 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(AGGREGATE_COLUMNS)
            for row in rows:
                writer.writerow([format_value(row[c]) for c in AGGREGATE_COLUMNS])
    except OSError as e:
        _error("cannot write {}: {}".format(request.output_dir, e))
        return EXIT_USAGE

    print(render('CANNED:SWEEP_REPORT', rows=rows))
    return EXIT_OK if all(row['status'] == 'ok' for row in rows) else EXIT_DOMAIN


def cmd_config(request):
    """
    Prints the suggested architectures of a dataset descriptor, or with ``emit_app`` the scenario sections of the
    training application generated for the first suggestion.

    :rtype: int
    """
    template = _template(request, 'CANNED:SUGGESTIONS')
    if template is None:
        return EXIT_USAGE
    try:
        descriptor = parse_descriptor(_read(request.scenario_path))
    except OSError as e:
        _error("cannot read {}: {}".format(request.scenario_path, e.strerror or e))
        return EXIT_USAGE
    except ScenarioSyntaxError as e:
        _error(e)
        return EXIT_USAGE
    except ScenarioInvariantError as e:
        print(render('CANNED:VIOLATIONS', violations=e.violations).rstrip('\n'))
        return EXIT_DOMAIN

    try:
        suggestions = suggest_architectures(descriptor)
        if request.emit_app:
            print(render_app(generate_training_dag(suggestions[0], descriptor)).rstrip('\n'))
        else:
            print(template.render(descriptor=descriptor, suggestions=suggestions).rstrip('\n'))
    except (UnsupportedDescriptorError, NoCompatibleArchitectureError, MissingPartitionsError) as e:
        _error(e)
        return EXIT_DOMAIN
    return EXIT_OK


COMMANDS = {
    'validate': cmd_validate,
    'run': cmd_run,
    'sweep': cmd_sweep,
    'config': cmd_config,
}


def main(argv=None):
    """
    Entry point of the ``c2e`` script

    :param list argv: Arguments without the program name, ``sys.argv[1:]`` if None
    :return: exit status
    :rtype: int
    """
    try:
        arguments = docopt(__doc__, argv=argv, version='c2e {}'.format(c2e.__version__))
        request = request_from_arguments(arguments)
    except DocoptExit as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit:
        # --help and --version
        return EXIT_OK

    if arguments.get('--debug'):
        c2e.debug(1)
    logger.debug("%s %s", request.subcommand, request.scenario_path)
    return COMMANDS[request.subcommand](request)
