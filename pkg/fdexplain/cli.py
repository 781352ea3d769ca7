import argparse  # https://docs.python.org/3/library/argparse.html
import logging
import logging.config
import os
import sys
import fdexplain.config as config
import fdexplain.logs as logs
from fdexplain.explanation import (
    explain_from_trace,
    explanation_exists,
    export_dot,
    render_text,
)
from fdexplain.model import ConsistencyError, CspModel, InputError, enumerate_solutions
from fdexplain.parser import DiagnosticsError, load_model
from fdexplain.propagation import (
    Run,
    Status,
    fair_runs,
    format_trace,
    iterate,
    simultaneous_closure,
)
from fdexplain.rules import (
    Mode,
    check_correct,
    check_correct_wrt_constraint,
    rules_for_model,
)

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)


def app_name():
    return 'fdexplain'


def fair_run_count(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        k = 0
    if k < 2:
        raise argparse.ArgumentTypeError(f"need an integer of at least 2, not '{text}'")
    return k


class ArgumentParser(argparse.ArgumentParser):
    # usage errors are input errors (exit code 1); exit code 2 means an invariant was violated
    def error(self, message):
        raise InputError(f"F90001 {message}")


###
### command-line interface
###


def cli(argv, return_help_text=False):
    help_width = 78 if return_help_text else None  # consistent width for README
    formatter_class = lambda prog: argparse.HelpFormatter(
        prog,
        max_help_position=33,
        width=help_width,
    )
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=str,
        default='',
        help=f"Path for config file ('-' for built-in defaults; default: {config_display()})",
    )
    common.add_argument(
        "-q",
        "--quiet",
        action='append_const',
        const=-1,
        dest="verbose",  # see log_levels for mapping
        help="Silence warning messages",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action='append_const',
        const=1,
        help="Increase verbosity",
    )
    parser = ArgumentParser(
        prog=app_name(),
        formatter_class=formatter_class,
        description="Finite-domain constraint propagation with value withdrawal explanations.",
    )
    commands = parser.add_subparsers(dest='command', required=True)
    solve = commands.add_parser(
        'solve', parents=[common], formatter_class=formatter_class, help="Compute the closure"
    )
    explain = commands.add_parser(
        'explain', parents=[common], formatter_class=formatter_class, help="Explain a withdrawal"
    )
    check = commands.add_parser(
        'check', parents=[common], formatter_class=formatter_class, help="Check rules, confluence"
    )
    oracle = commands.add_parser(
        'oracle', parents=[common], formatter_class=formatter_class, help="Brute-force solutions"
    )
    for sub in (solve, explain, check, oracle):
        sub.add_argument("model", type=str, help="Model file")
    for sub in (solve, explain, check):
        sub.add_argument(
            "--mode",
            choices=[m.value for m in Mode],
            default=None,
            help="Consistency of rules for 'x = y + c' (default from config: full)",
        )
    for sub in (solve, explain):
        sub.add_argument(
            "--strategy",
            type=str,
            default=None,
            help="worklist, roundrobin, or random:SEED (default from config: worklist)",
        )
        sub.add_argument(
            "--script",
            type=str,
            default='',
            help="Comma-separated rule labels applied first, e.g. r5,r3,r1",
        )
    solve.add_argument(
        "--no-stop-on-failure",
        action='store_true',
        help="Run to the closure even after a domain becomes empty",
    )
    solve.add_argument(
        "--trace",
        type=str,
        default='',
        help="Write the withdrawal trace to TRACE",
    )
    explain.add_argument("--var", type=str, required=True, help="Variable whose value was removed")
    explain.add_argument(
        "--value",
        type=int,
        default=None,
        help="Removed value; default: every value of VAR",
    )
    explain.add_argument("--dot", type=str, default='', help="Write DOT graph to DOT ('-': stdout)")
    explain.add_argument(
        "--text",
        action='store_true',
        help="Print the tree as indented text (default unless --dot is given)",
    )
    check.add_argument(
        "--strategies",
        type=fair_run_count,
        default=None,
        help="Number of fair runs compared for confluence (default from config: 20)",
    )
    if return_help_text:  # used by README
        return parser.format_help()
    args = parser.parse_args(argv)
    log_index = 2 + (0 if args.verbose is None else sum(args.verbose))
    del args.verbose
    log_levels = [
        logging.CRITICAL,  # 0, -qq
        logging.ERROR,  # 1, -q
        logging.WARNING,  # 2, default
        logging.INFO,  # 3, -v
        logging.DEBUG,  # 4, -vv
    ]
    args.console_log_level = log_levels[min(max(log_index, 0), len(log_levels) - 1)]
    return args


def config_display():
    return config.config_pathname().replace(os.path.expanduser('~'), '~')


###
### subcommands
###


def prepare(args, settings: config.Config) -> tuple[CspModel, list]:
    model = load_model(args.model)
    mode = Mode(args.mode) if args.mode is not None else settings.mode
    rules = rules_for_model(model, mode)
    logger.info(
        f"{args.model}: {len(model.variables)} variables, {len(model.constraints)} constraints, "
        f"{len(rules)} rules ({mode})"
    )
    return model, rules


def chosen_run(args, settings: config.Config) -> Run:
    script = [label.strip() for label in args.script.split(',') if label.strip()]
    return Run.parse(args.strategy or settings.strategy, script)


def write_output(path: str, text: str) -> None:
    if path == '-':
        print(text, end='')
        return
    try:
        with open(path, 'w') as f:
            f.write(text)
    except OSError as e:
        raise InputError(f"F90010 cannot write {path}: {e.strerror}")


def solve_command(args, settings: config.Config) -> int:
    model, rules = prepare(args, settings)
    run = chosen_run(args, settings)
    stop_on_failure = settings.stop_on_failure and not args.no_stop_on_failure
    result = iterate(model, rules, run, stop_on_failure)
    print(f"status: {result}")
    print(result.closure)
    print(f"steps: {len(result.trace.applied)}")
    if args.trace != '':
        write_output(args.trace, format_trace(result.trace))
    return 0


def explain_command(args, settings: config.Config) -> int:
    model, rules = prepare(args, settings)
    run = chosen_run(args, settings)
    y = model.variable(args.var)
    values = [args.value] if args.value is not None else sorted(model.domain(y))
    result = iterate(model, rules, run, stop_on_failure=False)  # explanations need the closure
    graphs = []
    for e in values:
        if not explanation_exists(model, rules, e, y):
            print(f"({e}, {y}): no explanation; {e} remains in the closure")
            continue
        expl = explain_from_trace(result.trace, e, y)
        event = result.trace.event(e, y)
        nodes = expl.node_count()
        print(
            f"({e}, {y}): withdrawn at step {event.step} by {event.rule}; "
            f"explanation with {nodes} node{'' if nodes == 1 else 's'}"
        )
        if args.text or args.dot == '':
            print(render_text(expl), end='')
        graphs.append(export_dot(expl))
    if args.dot != '':
        write_output(args.dot, ''.join(graphs))
    return 0


def check_command(args, settings: config.Config) -> int:
    model, rules = prepare(args, settings)
    constraints = {c.id: c for c in model.constraints}
    problems = 0
    for rule in rules:
        wrt_constraint = check_correct_wrt_constraint(rule, constraints[rule.origin], model)
        correct = check_correct(rule, model)
        print(
            f"{rule.label} ({rule.description}): "
            f"correct w.r.t. {rule.origin}: {'yes' if wrt_constraint else 'NO'}; "
            f"correct: {'yes' if correct else 'NO'}"
        )
        if not (wrt_constraint and correct):
            problems += 1
    k = args.strategies if args.strategies is not None else settings.check_strategies
    closure = simultaneous_closure(model, rules)
    mismatches = 0
    for run in fair_runs(k):
        result = iterate(model, rules, run, stop_on_failure=False)
        if result.status is not Status.CLOSED or result.closure != closure:
            print(f"mismatch: run {run} ends at\n{result.closure}")
            mismatches += 1
    print(f"confluence: {k} fair runs, {mismatches} mismatches")
    outside = [t for t in enumerate_solutions(model, None) if not closure_contains(closure, t)]
    print(f"solutions outside the closure: {len(outside)}")
    problems += mismatches + len(outside)
    if problems:
        logger.error(f"F90020 {problems} check(s) failed")
        return 2
    return 0


def closure_contains(closure, t) -> bool:
    return all(e in closure[var] for var, e in zip(t.scope, t.values))


def oracle_command(args, settings: config.Config) -> int:
    model = load_model(args.model)
    solutions = enumerate_solutions(model)
    for t in solutions:
        print(t)
    print(f"{len(solutions)} solutions")
    return 0


commands = {
    'solve': solve_command,
    'explain': explain_command,
    'check': check_command,
    'oracle': oracle_command,
}


def cli_main(argv) -> int:
    """Run one subcommand; returns 0 on success, 1 for bad input, 2 for a violated invariant."""
    logging.config.dictConfig(logs.logging_config())  # until the config file is read
    try:
        args = cli(argv)
        logging.config.dictConfig(logs.logging_config(console_log_level=args.console_log_level))
        settings = config.load_config(args.config)
        logging.config.dictConfig(
            logs.logging_config(
                console_log_level=args.console_log_level,
                file_log_level=logging.getLevelName(settings.file_log_level),
                log_file=settings.log_file,
            )
        )
        return commands[args.command](args, settings)
    except DiagnosticsError as e:
        for d in e.diagnostics:
            print(d.format(e.source.provenance), file=sys.stderr)
        return 1
    except InputError as e:
        logger.error(e.message)
        return 1
    except ConsistencyError as e:
        logger.error(f"F90030 internal invariant violated: {e.message}")
        return 2
    except Exception as e:
        logger.exception(f"F90031 unexpected error: {e}")
        return 2


###
### Startup (called from pyproject.toml)
###


def entry_point():
    sys.exit(cli_main(sys.argv[1:]))
