"""Tests for the search engine: strategies, conflict analysis and oracle agreement."""

import random
import time
from dataclasses import replace

import pytest

from conftest import random_cnf
from satrules import oracle
from satrules.config import SolverConfig
from satrules.core import formula_true, make_trail, vars_of
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
    analyze_conflict,
    luby_sequence,
    minimal_backjump_level,
    propagate_exhaustively,
    solve,
)
from satrules.errors import BudgetExceededError, ConfigError, PreconditionError
from satrules.rules import (
    Outcome,
    StateC,
    StateD,
    System,
    apply,
    explain,
    initial_state,
    unit_propagate,
)
from satrules.trace import TraceRecorder, make_header, verify_trace

STRATEGIES = {
    "dpll": Strategy(StrategySystem.DPLL),
    "backjump": Strategy(StrategySystem.BACKJUMP),
    "learn": Strategy(StrategySystem.LEARN),
    "cdcl": Strategy(StrategySystem.CDCL),
    "cdcl-restarts": Strategy(StrategySystem.CDCL, restart_policy=RestartPolicy(RestartKind.EVERY_CONFLICT)),
    "cdcl-forget": Strategy(StrategySystem.CDCL,
                            forget_policy=ForgetPolicy(ForgetKind.SIZE_THRESHOLD, max_learnt=1, keep_recent=0)),
    "full": Strategy(StrategySystem.FULL, restart_policy=RestartPolicy(RestartKind.LUBY),
                     forget_policy=ForgetPolicy(ForgetKind.SIZE_THRESHOLD, max_learnt=4, keep_recent=2)),
    "random-decisions": Strategy(StrategySystem.CDCL, decide_order=DecideOrder(DecideKind.RANDOM, seed=7)),
}


def _solve_traced(f0, strategy, config):
    recorder = TraceRecorder()
    answer = solve(f0, config, replace(strategy, trace_sink=recorder))
    return answer, recorder.trace(make_header(strategy.rule_system(), f0, config))


# --- helpers ------------------------------------------------------------------------

def test_luby_sequence():
    assert [luby_sequence(i) for i in range(1, 16)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]
    with pytest.raises(PreconditionError):
        luby_sequence(0)


def test_restart_thresholds():
    assert RestartPolicy().threshold(0) is None
    assert RestartPolicy(RestartKind.EVERY_CONFLICT).threshold(5) == 1
    assert RestartPolicy(RestartKind.LUBY, unit=32).threshold(6) == 128
    assert RestartPolicy(RestartKind.GEOMETRIC, base=2, factor=2).threshold(3) == 16


def test_propagate_exhaustively(example_formula):
    state = StateD(make_trail([(1, True)]), example_formula)
    assert propagate_exhaustively(state, example_formula) == [
        unit_propagate([-1, 2], 2), unit_propagate([-2, 3], 3)]

    f = ((1,), (-1, 2))
    assert propagate_exhaustively(StateD((), f), f) == [unit_propagate([1], 1), unit_propagate([-1, 2], 2)]
    assert propagate_exhaustively(initial_state(System.DPLL, example_formula), example_formula) == []


def test_analyze_conflict_stops_at_uip(worked_examples, example_config):
    fixture = worked_examples["cdcl-example"]
    state = initial_state(System.CDCL, fixture.formula)
    for step in fixture.trace.steps[:8]:
        state = apply(System.CDCL, state, step, fixture.formula, example_config)
    steps = analyze_conflict(state, fixture.formula)
    assert steps == [explain(-7, [-2, -5, 7]), explain(-6, [-5, 6])]


def test_analyze_conflict_at_level_zero():
    f = ((1,), (-1,))
    state = StateC(make_trail([1]), f, (-1,), True)
    assert analyze_conflict(state, f) == [explain(-1, [1])]


def test_analyze_conflict_already_uip(example_formula):
    trail = make_trail([(1, True), 2, 3, (4, True), (5, True), 6, 7])
    state = StateC(trail, example_formula, (-2, -3, -5), True)
    assert analyze_conflict(state, example_formula) == []
    with pytest.raises(PreconditionError):
        analyze_conflict(StateC(trail, example_formula), example_formula)


def test_minimal_backjump_level():
    trail = make_trail([(1, True), 2, 3, (4, True), (5, True), 6, 7])
    assert minimal_backjump_level((-2, -3, -5), -5, trail) == 1
    assert minimal_backjump_level((-1,), -1, make_trail([(1, True), 2])) == 0
    with pytest.raises(PreconditionError):
        minimal_backjump_level((-6, -7), -7, trail)


# --- strategies --------------------------------------------------------------------

def test_policies_need_a_conflict_system():
    with pytest.raises(ConfigError):
        Strategy(StrategySystem.DPLL, restart_policy=RestartPolicy(RestartKind.LUBY))
    with pytest.raises(ConfigError):
        Strategy(StrategySystem.LEARN, forget_policy=ForgetPolicy(ForgetKind.SIZE_THRESHOLD))
    with pytest.raises(ConfigError):
        Strategy(StrategySystem.CDCL, restart_policy=RestartPolicy(RestartKind.GEOMETRIC, factor=0.5))


def test_rule_system_mapping():
    restarts = RestartPolicy(RestartKind.EVERY_CONFLICT)
    forgets = ForgetPolicy(ForgetKind.SIZE_THRESHOLD)
    assert Strategy("dpll").rule_system() is System.DPLL
    assert Strategy("cdcl").rule_system() is System.CDCL
    assert Strategy("cdcl", restart_policy=restarts).rule_system() is System.FORGETLESS
    assert Strategy("cdcl", forget_policy=forgets).rule_system() is System.RESTARTLESS
    assert Strategy("full").rule_system() is System.FORGETLESS
    assert Strategy("full", restart_policy=restarts, forget_policy=forgets).rule_system() is System.FULL


# --- solving -----------------------------------------------------------------------

def test_example_formula_dpll(example_formula):
    config = SolverConfig.for_formula(example_formula)
    answer = solve(example_formula, config, Strategy(StrategySystem.DPLL))
    assert answer.verdict is Verdict.SAT
    assert vars_of(answer.model) == set(range(1, 8))
    assert oracle.is_model(answer.model, example_formula)


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_trivial_contradictions(name):
    for f in (((1,), (-1,)), ((),)):
        answer = solve(f, SolverConfig.for_formula(f), STRATEGIES[name])
        assert answer.verdict is Verdict.UNSAT
        assert answer.model is None
        assert answer.stats.decisions == 0


def test_empty_formula_is_sat():
    answer = solve((), SolverConfig.for_formula(()))
    assert answer.verdict is Verdict.SAT and answer.model == ()


def test_declared_variables_are_decided():
    f = ((1,),)
    answer = solve(f, SolverConfig.for_formula(f, declared_vars=3))
    assert vars_of(answer.model) == {1, 2, 3}


def test_step_budget(example_formula):
    config = SolverConfig.for_formula(example_formula, step_budget=1)
    with pytest.raises(BudgetExceededError) as info:
        solve(example_formula, config)
    assert info.value.stats["steps"] == 1


def test_runs_are_deterministic(rng):
    f = random_cnf(rng, 8, 30)
    config = SolverConfig.for_formula(f)
    strategy = STRATEGIES["random-decisions"]
    _, first = _solve_traced(f, strategy, config)
    _, second = _solve_traced(f, strategy, config)
    assert first.steps == second.steps


def test_forget_policy_removes_learnt_clauses(rng):
    strategy = STRATEGIES["cdcl-forget"]
    forgotten = 0
    for _ in range(30):
        f = random_cnf(rng, 8, 40)
        forgotten += solve(f, SolverConfig.for_formula(f), strategy).stats.forgotten
    assert forgotten > 0


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_agrees_with_oracle_and_verifies(name, rng):
    strategy = STRATEGIES[name]
    for _ in range(25):
        n = rng.randint(3, 6)
        f = random_cnf(rng, n, rng.randint(1, 5 * n))
        config = SolverConfig.for_formula(f, oracle_checks=True)
        answer, trace = _solve_traced(f, strategy, config)

        expected = oracle.brute_sat(f, config.dec_vars).satisfiable
        assert (answer.verdict is Verdict.SAT) == expected
        if expected:
            assert oracle.is_model(answer.model, f)

        result = verify_trace(f, SolverConfig.for_formula(f, oracle_checks=True), trace)
        assert result.ok, (result.step_index, result.reason)
        assert result.outcome is (Outcome.ACCEPTING if expected else Outcome.REJECTING)


@pytest.mark.slow
def test_agreement_on_many_random_formulas(rng):
    for _ in range(500):
        n = rng.randint(3, 12)
        f = random_cnf(rng, n, rng.randint(1, min(60, 6 * n)))
        config = SolverConfig.for_formula(f)
        expected = oracle.brute_sat(f, config.dec_vars).satisfiable
        for name, strategy in sorted(STRATEGIES.items()):
            answer, trace = _solve_traced(f, strategy, config)
            assert (answer.verdict is Verdict.SAT) == expected, name
            if expected:
                assert oracle.is_model(answer.model, f), name
            result = verify_trace(f, config, trace)
            assert result.ok, (name, result.step_index, result.reason)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["cdcl", "cdcl-restarts"])
@pytest.mark.parametrize("seed", range(5))
def test_hundred_variable_threshold_instances(name, seed):
    f = random_cnf(random.Random(seed), 100, 426)
    config = SolverConfig.for_formula(f)
    started = time.perf_counter()
    answer, trace = _solve_traced(f, STRATEGIES[name], config)
    assert time.perf_counter() - started < 5.0
    if answer.verdict is Verdict.SAT:
        assert formula_true(f, answer.model)

    result = verify_trace(f, config, trace)
    assert result.ok, (result.step_index, result.reason)
    assert result.outcome is (Outcome.ACCEPTING if answer.verdict is Verdict.SAT else Outcome.REJECTING)
    assert len(result.states) == answer.stats.steps + 1
