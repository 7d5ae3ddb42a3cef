"""Tests for the .satt trace format, the trace verifier and the worked example fixtures."""

import io
from dataclasses import replace

import pytest

from satrules.config import SolverConfig
from satrules.core import make_trail
from satrules.errors import RejectedStepError, TraceParseError
from satrules.rules import (
    Outcome,
    Rule,
    StateR,
    System,
    apply,
    backjump,
    backjump_learn,
    backtrack,
    decide,
    forget,
    restart,
    unit_propagate,
)
from satrules.trace import (
    TraceFile,
    TraceWriter,
    dumps_trace,
    emit,
    formula_digest,
    loads_trace,
    make_header,
    parse,
    read_trace,
    verify_trace,
    write_trace,
)

STEP_COUNTS = {
    "dpll-example": 25,
    "backjump-example": 20,
    "learn-example": 17,
    "cdcl-example": 12,
    "restart-cycle": 27,
}


def _verify(fixture, steps=None, **overrides):
    trace = fixture.trace if steps is None else replace(fixture.trace, steps=tuple(steps))
    config = SolverConfig.for_formula(fixture.formula, oracle_checks=True, **overrides)
    return verify_trace(fixture.formula, config, trace)


# --- line format --------------------------------------------------------------------

def test_emit_schema():
    assert emit(unit_propagate([-1, 2], 2)) == '{"rule":"unitPropagate","clause":[-1,2],"lit":2}'
    assert emit(restart()) == '{"rule":"restart"}'
    assert emit(backjump(-5, 1, [-2, -3, -5])) == '{"rule":"backjump","clause":[-2,-3,-5],"lit":-5,"level":1}'


def test_parse_reads_emitted_records():
    for step in (decide(-3), backtrack(), backjump_learn(-2, 1, [-1, -2]),
                 forget(forgotten=((-1, -2), (-5, -6))), unit_propagate([4], 4)):
        assert parse(emit(step)) == step


@pytest.mark.parametrize("line", [
    '{"rule":"unitPropagate","clause":[-1,2]',
    '{"clause":[1]}',
    '{"rule":"jump"}',
    '{"rule":"decide","lit":"3"}',
    '{"rule":"decide","lit":3,"colour":1}',
    '{"rule":"decide"}',
    '[1, 2]',
])
def test_parse_rejects_malformed_lines(line):
    with pytest.raises(TraceParseError) as info:
        parse(line, 7)
    assert info.value.line_number == 7


def test_loads_reports_line_numbers(worked_examples):
    lines = dumps_trace(worked_examples["cdcl-example"].trace).splitlines()
    lines[4] = lines[4][:-5]
    with pytest.raises(TraceParseError) as info:
        loads_trace("\n".join(lines))
    assert info.value.line_number == 5

    with pytest.raises(TraceParseError) as info:
        loads_trace('{"format":"other"}\n')
    assert info.value.line_number == 1
    with pytest.raises(TraceParseError):
        loads_trace("")


def test_dumps_then_loads(worked_examples):
    for fixture in worked_examples.values():
        assert loads_trace(dumps_trace(fixture.trace)) == fixture.trace


def test_write_and_read(tmp_path, worked_examples):
    path = str(tmp_path / "cycle.satt")
    write_trace(path, worked_examples["restart-cycle"].trace)
    assert read_trace(path) == worked_examples["restart-cycle"].trace


def test_trace_writer_streams_lines(worked_examples):
    fixture = worked_examples["backjump-example"]
    stream = io.StringIO()
    writer = TraceWriter(stream, fixture.trace.header)
    for step in fixture.trace.steps:
        writer(step)
    assert writer.count == 20
    assert loads_trace(stream.getvalue()) == fixture.trace


def test_formula_digest_is_order_sensitive(example_formula):
    assert formula_digest(example_formula).startswith("sha256:")
    assert formula_digest(example_formula) != formula_digest(tuple(reversed(example_formula)))
    assert formula_digest(()) != formula_digest(((),))


# --- fixtures -------------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(STEP_COUNTS))
def test_fixtures_verify(name, worked_examples):
    fixture = worked_examples[name]
    assert len(fixture.trace.steps) == STEP_COUNTS[name]
    result = _verify(fixture)
    assert result.ok, (result.step_index, result.reason)
    assert result.final_state.trail == fixture.final_trail
    assert len(result.states) == STEP_COUNTS[name] + 1


@pytest.mark.parametrize("name", ["dpll-example", "backjump-example", "learn-example"])
def test_example_traces_end_accepting(name, worked_examples):
    assert _verify(worked_examples[name]).outcome is Outcome.ACCEPTING


def test_cdcl_example_learns_the_uip_clause(worked_examples):
    result = _verify(worked_examples["cdcl-example"])
    assert result.outcome is Outcome.INTERMEDIATE
    assert frozenset(result.final_state.formula[-1]) == {-2, -3, -5}


def test_restart_cycle_revisits_a_state(worked_examples):
    result = _verify(worked_examples["restart-cycle"])
    revisited = StateR((), ((-1, -2),))
    assert result.states[9] == revisited
    assert result.states[27] == revisited


def test_restart_cycle_needs_relaxed_forget(worked_examples):
    fixture = worked_examples["restart-cycle"]
    strict = replace(fixture.trace, header=replace(fixture.trace.header, strict_forget=True))
    result = verify_trace(fixture.formula, SolverConfig.for_formula(fixture.formula), strict)
    assert not result.ok
    assert result.step_index == 17
    assert "no c ∈ Fc is a reason" in result.reason


def test_digest_mismatch(worked_examples, cycle_formula):
    fixture = worked_examples["dpll-example"]
    result = verify_trace(cycle_formula, SolverConfig.for_formula(cycle_formula), fixture.trace)
    assert not result.ok and result.step_index is None
    assert "digest" in result.reason


# --- mutations -------------------------------------------------------------------------

def test_flipped_propagation_fails_at_that_step(worked_examples):
    fixture = worked_examples["dpll-example"]
    steps = list(fixture.trace.steps)
    steps[2] = unit_propagate([-2, 3], -3)
    result = _verify(fixture, steps)
    assert not result.ok and result.step_index == 2
    assert "isUnit" in result.reason


def test_redeciding_an_assigned_literal_fails(worked_examples):
    fixture = worked_examples["dpll-example"]
    steps = list(fixture.trace.steps)
    steps[3] = decide(2)
    result = _verify(fixture, steps)
    assert not result.ok and result.step_index == 3
    assert "l undefined in M" in result.reason


def test_raised_backjump_level_fails(worked_examples):
    fixture = worked_examples["cdcl-example"]
    steps = list(fixture.trace.steps)
    steps[-1] = backjump(-5, 3, [-2, -3, -5])
    result = _verify(fixture, steps)
    assert not result.ok and result.step_index == len(steps) - 1
    assert "isBackjumpLevel" in result.reason


def test_missing_step_fails(worked_examples):
    fixture = worked_examples["backjump-example"]
    steps = list(fixture.trace.steps)
    del steps[1]
    result = _verify(fixture, steps)
    assert not result.ok and result.step_index == 1


def test_every_literal_flip_in_the_dpll_trace_fails(worked_examples):
    fixture = worked_examples["dpll-example"]
    for index, step in enumerate(fixture.trace.steps):
        if step.rule is not Rule.UNIT_PROPAGATE:
            continue
        steps = list(fixture.trace.steps)
        steps[index] = replace(step, literal=-step.literal)
        result = _verify(fixture, steps)
        assert not result.ok and result.step_index == index, index


def test_truncated_trace_still_verifies_intermediate(worked_examples):
    fixture = worked_examples["dpll-example"]
    result = _verify(fixture, fixture.trace.steps[:7])
    assert result.ok
    assert result.outcome is Outcome.INTERMEDIATE
    assert result.final_state.trail == make_trail([(1, True), 2, 3, (4, True), (5, True), 6, 7])


def test_empty_trace_header_only(example_formula):
    config = SolverConfig.for_formula(example_formula)
    result = verify_trace(example_formula, config, TraceFile(make_header(System.DPLL, example_formula, config)))
    assert result.ok and result.outcome is Outcome.INTERMEDIATE


def _mutants(step, variables):
    """Single-field variants of a step: literal, level, clause, forgotten list or rule."""
    def shifted(l):
        v = abs(l) % variables + 1
        return v if l > 0 else -v

    candidates = []
    if step.literal is not None:
        candidates += [replace(step, literal=-step.literal), replace(step, literal=shifted(step.literal))]
        if step.rule is not Rule.DECIDE:
            candidates.append(decide(step.literal))
    if step.level is not None:
        candidates.append(replace(step, level=step.level + 1))
        if step.level > 0:
            candidates.append(replace(step, level=step.level - 1))
    if step.clause is not None:
        c = step.clause
        for i in range(len(c)):
            if len(c) > 1:
                candidates.append(replace(step, clause=c[:i] + c[i + 1:]))
            candidates.append(replace(step, clause=c[:i] + (-c[i],) + c[i + 1:]))
    if step.forgotten is not None:
        candidates.append(replace(step, forgotten=step.forgotten + ((1, 2, 3),)))
    if step.rule is Rule.BACKTRACK:
        candidates.append(restart())
    if step.rule is Rule.RESTART:
        candidates.append(backtrack())
    return list(dict.fromkeys(candidates))


@pytest.mark.parametrize("name", sorted(STEP_COUNTS))
def test_single_field_mutations_fail_at_their_step(name, worked_examples):
    fixture = worked_examples[name]
    header = fixture.trace.header
    config = SolverConfig.for_formula(fixture.formula, oracle_checks=True, strict_forget=header.strict_forget)
    states = _verify(fixture).states
    rejected = 0
    for index, step in enumerate(fixture.trace.steps):
        for mutant in _mutants(step, max(header.dec_vars)):
            try:
                apply(header.system, states[index], mutant, fixture.formula, config)
            except RejectedStepError:
                pass
            else:
                continue
            steps = list(fixture.trace.steps)
            steps[index] = mutant
            result = _verify(fixture, steps)
            assert not result.ok and result.step_index == index, (index, str(mutant))
            assert "guard" in result.reason
            rejected += 1
    assert rejected >= 20


@pytest.mark.parametrize("name", sorted(STEP_COUNTS))
def test_header_mutations_fail(name, worked_examples):
    fixture = worked_examples[name]
    header = fixture.trace.header

    result = _verify(replace(fixture, trace=replace(fixture.trace, header=replace(header, digest="sha256:00"))))
    assert not result.ok and result.step_index is None

    without_first = replace(header, dec_vars=header.dec_vars[1:])
    result = _verify(replace(fixture, trace=replace(fixture.trace, header=without_first)))
    assert not result.ok and result.step_index == 0
    assert "DecVars" in result.reason

    other = System.BACKJUMP if header.system is System.DPLL else System.DPLL
    result = _verify(replace(fixture, trace=replace(fixture.trace, header=replace(header, system=other))))
    assert not result.ok and result.step_index is not None


def test_header_with_a_zero_decision_variable(worked_examples):
    fixture = worked_examples["cdcl-example"]
    header = replace(fixture.trace.header, dec_vars=(0,) + fixture.trace.header.dec_vars)
    result = _verify(replace(fixture, trace=replace(fixture.trace, header=header)))
    assert not result.ok and result.step_index is None
    assert result.reason.startswith("bad header")
