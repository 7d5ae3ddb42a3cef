"""
satrules command line
Solve DIMACS problems with the rule systems, verify and check .satt traces,
brute-force small problems and export the worked example traces.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from satrules.config import SolverConfig, load_settings
from satrules.core import vars_of
from satrules.dimacs import DimacsProblem, format_answer, format_dimacs, read_dimacs
from satrules.engine import (
    DecideKind,
    DecideOrder,
    ForgetKind,
    ForgetPolicy,
    RestartKind,
    RestartPolicy,
    Strategy,
    StrategySystem,
    Verdict,
    solve,
)
from satrules.errors import BudgetExceededError, OracleBudgetError, SatRulesError
from satrules.oracle import brute_sat
from satrules.trace import (
    CYCLE_FORMULA,
    EXAMPLE_FORMULA,
    TRACE_EXTENSION,
    TraceWriter,
    fixtures,
    make_header,
    read_trace,
    verify_trace,
    write_trace,
)

logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BUDGET = 2
EXIT_SAT = 10
EXIT_UNSAT = 20


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_FAILURE instead of argparse's 2, which means budget here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_FAILURE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="satrules", description="Abstract DPLL/CDCL rule systems")
    parser.add_argument("--config", help="settings file (KEY=VALUE lines)")
    parser.add_argument("--verbose", "-v", action="store_true", help="log every rule application")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("solve", help="solve a DIMACS problem")
    p.add_argument("file")
    p.add_argument("--system", choices=[s.value for s in StrategySystem], default="cdcl")
    p.add_argument("--decide", choices=[d.value for d in DecideKind], default="ascending")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", choices=[r.value for r in RestartKind], default="none")
    p.add_argument("--forget", choices=[f.value for f in ForgetKind], default="none")
    p.add_argument("--restart-unit", type=int, help="luby: conflicts per sequence unit")
    p.add_argument("--restart-base", type=float, help="geometric: conflicts before the first restart")
    p.add_argument("--restart-factor", type=float, help="geometric: growth per restart")
    p.add_argument("--max-learnt", type=int, help="size-threshold: learnt clauses kept before forgetting")
    p.add_argument("--keep-recent", type=int, help="size-threshold: newest learnt clauses never forgotten")
    p.add_argument("--trace", help="write the rule applications to this .satt file")
    p.add_argument("--step-budget", type=int)

    p = commands.add_parser("verify", help="replay a trace and certify every step")
    p.add_argument("file")
    p.add_argument("--trace", required=True)

    p = commands.add_parser("check", help="verify traces with oracle-backed invariant checks")
    p.add_argument("file")
    p.add_argument("--trace", required=True, action="append", help="may be given several times")
    p.add_argument("--oracle", action="store_true", help="check impliedLits, equiv, Centailed, reasonClauses")
    p.add_argument("--oracle-budget", type=int)

    p = commands.add_parser("oracle", help="brute-force satisfiability")
    p.add_argument("file")

    p = commands.add_parser("fixtures", help="export the worked example formulas and traces")
    p.add_argument("--out", required=True)
    return parser


def _load_problem(path: str, settings) -> DimacsProblem:
    return read_dimacs(path, strict=settings.strict_dimacs)


def _given(**values) -> dict:
    return {name: value for name, value in values.items() if value is not None}


def strategy_from_args(args) -> Strategy:
    """
    The Strategy described by parsed solve arguments; policy parameters left
    out keep the policy defaults.

    Raises:
        ConfigError: If the system does not take the policies or a parameter is out of range
    """
    return Strategy(
        system=StrategySystem(args.system),
        decide_order=DecideOrder(DecideKind(args.decide), args.seed),
        restart_policy=RestartPolicy(RestartKind(args.restarts), **_given(
            unit=args.restart_unit, base=args.restart_base, factor=args.restart_factor)),
        forget_policy=ForgetPolicy(ForgetKind(args.forget), **_given(
            max_learnt=args.max_learnt, keep_recent=args.keep_recent)),
    )


def cmd_solve(args, settings) -> int:
    """
    Solve FILE and print s/v lines.

    Returns:
        EXIT_SAT or EXIT_UNSAT
    """
    problem = _load_problem(args.file, settings)
    overrides = {}
    if args.step_budget is not None:
        overrides["step_budget"] = args.step_budget
    config = SolverConfig.for_formula(problem.formula, problem.declared_vars, settings, **overrides)

    strategy = strategy_from_args(args)

    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as handle:
            writer = TraceWriter(handle, make_header(strategy.rule_system(), problem.formula, config))
            answer = solve(problem.formula, config, replace(strategy, trace_sink=writer))
        logger.info("wrote %d steps to %s", writer.count, args.trace)
    else:
        answer = solve(problem.formula, config, strategy)

    sys.stdout.write(format_answer(answer.verdict is Verdict.SAT, answer.model or ()))
    return EXIT_SAT if answer.verdict is Verdict.SAT else EXIT_UNSAT


def _verify_one(problem: DimacsProblem, trace_path: str, config: SolverConfig) -> bool:
    trace = read_trace(trace_path)
    result = verify_trace(problem.formula, config, trace)
    if not result.ok:
        where = "header" if result.step_index is None else f"step {result.step_index}"
        print(f"{trace_path}: FAILED at {where}: {result.reason}")
        return False

    skipped = sum(len(c.invariants.skipped) for c in result.certificates)
    note = f", {skipped} invariant checks skipped" if config.oracle_checks and skipped else ""
    print(f"{trace_path}: ok, {len(trace.steps)} steps, final state {result.outcome.value}{note}")
    return True


def cmd_verify(args, settings) -> int:
    problem = _load_problem(args.file, settings)
    config = SolverConfig.for_formula(problem.formula, problem.declared_vars, settings)
    return EXIT_OK if _verify_one(problem, args.trace, config) else EXIT_FAILURE


def cmd_check(args, settings) -> int:
    """Verify every --trace; with --oracle also run the oracle-backed invariants."""
    problem = _load_problem(args.file, settings)
    overrides = {"oracle_checks": args.oracle}
    if args.oracle_budget is not None:
        overrides["oracle_budget"] = args.oracle_budget
    config = SolverConfig.for_formula(problem.formula, problem.declared_vars, settings, **overrides)

    results = [_verify_one(problem, path, config) for path in args.trace]
    return EXIT_OK if all(results) else EXIT_FAILURE


def cmd_oracle(args, settings) -> int:
    problem = _load_problem(args.file, settings)
    variables = vars_of(problem.formula) | set(range(1, problem.declared_vars + 1))
    result = brute_sat(problem.formula, variables, settings.oracle_budget)
    sys.stdout.write(format_answer(result.satisfiable, result.model or ()))
    return EXIT_SAT if result.satisfiable else EXIT_UNSAT


def cmd_fixtures(args, settings) -> int:
    """Write example.cnf, cycle.cnf and one .satt file per worked example into --out."""
    os.makedirs(args.out, exist_ok=True)
    formulas = {"example.cnf": EXAMPLE_FORMULA, "cycle.cnf": CYCLE_FORMULA}
    for filename, formula in formulas.items():
        with open(os.path.join(args.out, filename), "w", encoding="utf-8") as handle:
            handle.write(format_dimacs(formula))

    for name, fixture in fixtures().items():
        write_trace(os.path.join(args.out, name + TRACE_EXTENSION), fixture.trace)
    print(f"wrote {len(formulas)} formulas and {len(fixtures())} traces to {args.out}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "check": cmd_check,
    "oracle": cmd_oracle,
    "fixtures": cmd_fixtures,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and dispatch.

    Returns:
        10 sat, 20 unsat, 0 verify/check ok, 1 usage or verification failure,
        2 budget exceeded
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_FAILURE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        settings = load_settings(args.config)
        return COMMANDS[args.command](args, settings)
    except (BudgetExceededError, OracleBudgetError) as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except SatRulesError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(run())
