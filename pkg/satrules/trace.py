"""
Rule-application traces: the .satt line format, trace sinks, the step-by-step
verifier and the worked example traces shipped as fixtures.

A .satt file is UTF-8 JSON lines. The first line is the header
    {"format":"satt","version":1,"system":"dpll","decVars":[1,2],"digest":"sha256:…","strictForget":true}
and every following line is one rule instance, e.g.
    {"rule":"unitPropagate","clause":[-1,2],"lit":2}
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

from satrules.config import SolverConfig
from satrules.core import Formula, Trail, make_formula, make_trail
from satrules.errors import ConfigError, PreconditionError, SatRulesError, TraceParseError
from satrules.index import ClauseIndex
from satrules.orderings import StepCertificate, certify_step
from satrules.rules import (
    Outcome,
    Rule,
    RuleInstance,
    State,
    System,
    backjump,
    backjump_learn,
    backtrack,
    classify,
    conflict,
    decide,
    explain,
    forget,
    initial_state,
    learn,
    formula_part,
    restart,
    state_formula,
    unit_propagate,
)

logger = logging.getLogger(__name__)

FORMAT_NAME = "satt"
FORMAT_VERSION = 1
TRACE_EXTENSION = ".satt"


@dataclass(frozen=True)
class TraceHeader:
    system: System
    dec_vars: Tuple[int, ...]
    digest: str
    version: int = FORMAT_VERSION
    strict_forget: bool = True


@dataclass(frozen=True)
class TraceFile:
    header: TraceHeader
    steps: Tuple[RuleInstance, ...] = ()


def formula_digest(f: Formula) -> str:
    """sha256 over the formula's DIMACS clause lines, in order."""
    text = "".join(" ".join(str(l) for l in c) + (" 0\n" if c else "0\n") for c in f)
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def make_header(system: System, f0: Formula, config: SolverConfig) -> TraceHeader:
    return TraceHeader(System(system), tuple(sorted(config.dec_vars)), formula_digest(f0),
                       strict_forget=config.strict_forget)


# ---------------------------------------------------------------------------
# Line format
# ---------------------------------------------------------------------------

def emit(step: RuleInstance) -> str:
    record = {"rule": step.rule.value}
    if step.clause is not None:
        record["clause"] = list(step.clause)
    if step.literal is not None:
        record["lit"] = step.literal
    if step.level is not None:
        record["level"] = step.level
    if step.forgotten is not None:
        record["forgotten"] = [list(c) for c in step.forgotten]
    return json.dumps(record, separators=(",", ":"))


def _int_list(value, name: str, line_number: int) -> Tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise TraceParseError(line_number, f"{name} must be a list of signed integers")
    return tuple(value)


def parse(line: str, line_number: int = 1) -> RuleInstance:
    """
    Parse one step record.

    Raises:
        TraceParseError: If the line is not a well-formed step record
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceParseError(line_number, f"malformed record: {e.msg}")
    if not isinstance(record, dict) or "rule" not in record:
        raise TraceParseError(line_number, "record without a rule field")
    unknown = set(record) - {"rule", "clause", "lit", "level", "forgotten"}
    if unknown:
        raise TraceParseError(line_number, f"unknown fields {sorted(unknown)}")
    try:
        rule = Rule(record["rule"])
    except ValueError:
        raise TraceParseError(line_number, f"unknown rule {record['rule']!r}")
    clause = _int_list(record["clause"], "clause", line_number) if "clause" in record else None
    forgotten = None
    if "forgotten" in record:
        if not isinstance(record["forgotten"], list):
            raise TraceParseError(line_number, "forgotten must be a list of clauses")
        forgotten = tuple(_int_list(c, "forgotten clause", line_number) for c in record["forgotten"])
    literal, lvl = record.get("lit"), record.get("level")
    for name, value in (("lit", literal), ("level", lvl)):
        if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
            raise TraceParseError(line_number, f"{name} must be an integer")
    try:
        return RuleInstance(rule, clause=clause, literal=literal, level=lvl, forgotten=forgotten)
    except PreconditionError as e:
        raise TraceParseError(line_number, str(e))


def emit_header(header: TraceHeader) -> str:
    return json.dumps({
        "format": FORMAT_NAME,
        "version": header.version,
        "system": header.system.value,
        "decVars": list(header.dec_vars),
        "digest": header.digest,
        "strictForget": header.strict_forget,
    }, separators=(",", ":"))


def parse_header(line: str) -> TraceHeader:
    """
    Raises:
        TraceParseError: If the header line is malformed (reported as line 1)
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceParseError(1, f"malformed header: {e.msg}")
    if not isinstance(record, dict) or record.get("format") != FORMAT_NAME:
        raise TraceParseError(1, "not a satt header")
    if record.get("version") != FORMAT_VERSION:
        raise TraceParseError(1, f"unsupported version {record.get('version')!r}")
    try:
        system = System(record["system"])
        dec_vars = _int_list(record["decVars"], "decVars", 1)
        digest = str(record["digest"])
    except (KeyError, ValueError) as e:
        raise TraceParseError(1, f"bad header field: {e}")
    return TraceHeader(system, dec_vars, digest, FORMAT_VERSION, bool(record.get("strictForget", True)))


def dumps_trace(trace: TraceFile) -> str:
    return "".join(line + "\n" for line in [emit_header(trace.header)] + [emit(s) for s in trace.steps])


def loads_trace(text: str) -> TraceFile:
    """
    Raises:
        TraceParseError: With the 1-based line number of the first bad line
    """
    lines = text.splitlines()
    if not lines:
        raise TraceParseError(1, "empty trace")
    header = parse_header(lines[0])
    steps = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        steps.append(parse(line, number))
    return TraceFile(header, tuple(steps))


def write_trace(path: str, trace: TraceFile) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_trace(trace))


def read_trace(path: str) -> TraceFile:
    with open(path, "r", encoding="utf-8") as handle:
        return loads_trace(handle.read())


class TraceRecorder:
    """In-memory trace sink."""

    def __init__(self):
        self.steps: List[RuleInstance] = []

    def __call__(self, step: RuleInstance) -> None:
        self.steps.append(step)

    def trace(self, header: TraceHeader) -> TraceFile:
        return TraceFile(header, tuple(self.steps))


class TraceWriter:
    """Trace sink writing one line per step to an open text stream."""

    def __init__(self, stream: TextIO, header: TraceHeader):
        self.stream = stream
        self.count = 0
        stream.write(emit_header(header) + "\n")

    def __call__(self, step: RuleInstance) -> None:
        self.stream.write(emit(step) + "\n")
        self.count += 1


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    step_index: Optional[int] = None
    reason: str = ""
    outcome: Optional[Outcome] = None
    states: Tuple[State, ...] = ()
    certificates: Tuple[StepCertificate, ...] = field(default=(), repr=False)

    @property
    def final_state(self) -> Optional[State]:
        return self.states[-1] if self.states else None


def _advance(mirror: ClauseIndex, before: State, after: State, f0: Formula) -> None:
    if formula_part(before) is not formula_part(after):
        mirror.sync_formula(state_formula(before, f0), state_formula(after, f0))
    if before.trail is not after.trail:
        mirror.sync_trail(before.trail, after.trail)


def verify_trace(f0: Formula, config: SolverConfig, trace: TraceFile) -> VerificationResult:
    """
    Replay a trace from the initial state, certifying every step.

    The header's decision variables and forget mode replace those in config.

    Args:
        f0: Formula the trace claims to start from
        config: Oracle budget, oracle checks and certified clauses
        trace: Parsed trace

    Returns:
        VerificationResult: ok with the final classification, or the index of
        the first failing step and the reason
    """
    f0 = tuple(tuple(c) for c in f0)
    header = trace.header
    if formula_digest(f0) != header.digest:
        return VerificationResult(False, None, "formula digest mismatch: trace recorded for another formula")
    try:
        config = replace(config, dec_vars=frozenset(header.dec_vars), strict_forget=header.strict_forget)
    except ConfigError as e:
        return VerificationResult(False, None, f"bad header: {e}")
    system = header.system
    state = initial_state(system, f0)
    mirror = ClauseIndex(state_formula(state, f0))
    states = [state]
    certificates = []
    for index, step in enumerate(trace.steps):
        try:
            certificate = certify_step(system, state, None, step, f0, config, mirror)
        except SatRulesError as e:
            logger.info("step %d (%s) rejected: %s", index, step, e)
            return VerificationResult(False, index, str(e), None, tuple(states), tuple(certificates))
        if not certificate.ok:
            logger.info("step %d (%s) failed: %s", index, step, certificate.reason)
            return VerificationResult(False, index, certificate.reason, None, tuple(states), tuple(certificates))
        certificates.append(certificate)
        _advance(mirror, state, certificate.state, f0)
        state = certificate.state
        states.append(state)
    outcome = classify(system, state, f0, config)
    logger.info("verified %d %s steps, final state %s", len(trace.steps), system.value, outcome.value)
    return VerificationResult(True, None, "", outcome, tuple(states), tuple(certificates))


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

EXAMPLE_FORMULA = make_formula([[-1, 2], [-1, -3, 5, 7], [-1, -2, 5, -7], [-2, 3],
                                [2, 4], [-2, -5, 7], [-3, -6, -7], [-5, 6]])
CYCLE_FORMULA = make_formula([[-1, -2, 3], [-1, -2, 4], [-1, -3, -4],
                              [-5, -6, 7], [-5, -6, 8], [-5, -7, -8]])


@dataclass(frozen=True)
class Fixture:
    name: str
    formula: Formula
    trace: TraceFile
    final_trail: Trail


def _fixture(name: str, system: System, formula: Formula, steps: Iterable[RuleInstance],
             final_trail: Trail, strict_forget: bool = True) -> Fixture:
    header = TraceHeader(system, tuple(sorted({abs(l) for c in formula for l in c})),
                         formula_digest(formula), strict_forget=strict_forget)
    return Fixture(name, formula, TraceFile(header, tuple(steps)), final_trail)


def _opening() -> List[RuleInstance]:
    return [decide(1), unit_propagate([-1, 2], 2), unit_propagate([-2, 3], 3), decide(4), decide(5),
            unit_propagate([-5, 6], 6), unit_propagate([-2, -5, 7], 7)]


def _cycle_half(first: int, second: int, third: int, fourth: int, level: int) -> List[RuleInstance]:
    # Two decisions, two propagations, a conflict explained back to [-first, -second].
    a, b = -first, -second
    return [
        decide(first), decide(second),
        unit_propagate([a, b, third], third), unit_propagate([a, b, fourth], fourth),
        conflict([a, -third, -fourth]),
        explain(-fourth, [a, b, fourth]), explain(-third, [a, b, third]),
        backjump_learn(b, level, [a, b]),
    ]


def fixtures() -> Dict[str, Fixture]:
    """The worked example traces, keyed by name."""
    dpll = _opening() + [
        backtrack(), unit_propagate([-1, -3, 5, 7], 7), backtrack(),
        decide(5), unit_propagate([-5, 6], 6), unit_propagate([-2, -5, 7], 7),
        backtrack(), unit_propagate([-1, -3, 5, 7], 7), backtrack(),
        decide(2), unit_propagate([-2, 3], 3), decide(4), decide(5),
        unit_propagate([-5, 6], 6), unit_propagate([-2, -5, 7], 7),
        backtrack(), decide(6), unit_propagate([-3, -6, -7], -7),
    ]
    jumps = _opening() + [
        backjump(-5, 1, [-2, -3, -5]), unit_propagate([-1, -3, 5, 7], 7), backjump(-1, 0, [-1]),
        decide(2), unit_propagate([-2, 3], 3), decide(4), decide(5),
        unit_propagate([-5, 6], 6), unit_propagate([-2, -5, 7], 7),
        backjump(-5, 1, [-2, -3, -5]), decide(4), decide(6), unit_propagate([-3, -6, -7], -7),
    ]
    learning = _opening() + [
        backjump(-5, 1, [-2, -3, -5]), learn([-2, -3, -5]),
        unit_propagate([-1, -3, 5, 7], 7), backjump(-1, 0, [-1]),
        decide(2), unit_propagate([-2, 3], 3), unit_propagate([-2, -3, -5], -5),
        decide(4), decide(6), unit_propagate([-3, -6, -7], -7),
    ]
    analysis = _opening() + [
        conflict([-3, -6, -7]), explain(-7, [-2, -5, 7]), explain(-6, [-5, 6]),
        learn([-2, -3, -5]), backjump(-5, 1, [-2, -3, -5]),
    ]
    cycle = (_cycle_half(1, 2, 3, 4, 1) + [restart()]
             + _cycle_half(5, 6, 7, 8, 1) + [forget(forgotten=((-1, -2), (-5, -6)))]
             + _cycle_half(1, 2, 3, 4, 2) + [restart()])

    late_trail = make_trail([-1, (2, True), 3, (4, True), -5, (6, True), -7])
    jump_trail = make_trail([-1, (2, True), 3, -5, (4, True), (6, True), -7])
    return {
        "dpll-example": _fixture("dpll-example", System.DPLL, EXAMPLE_FORMULA, dpll, late_trail),
        "backjump-example": _fixture("backjump-example", System.BACKJUMP, EXAMPLE_FORMULA, jumps, jump_trail),
        "learn-example": _fixture("learn-example", System.LEARN, EXAMPLE_FORMULA, learning, jump_trail),
        "cdcl-example": _fixture("cdcl-example", System.CDCL, EXAMPLE_FORMULA, analysis,
                                 make_trail([(1, True), 2, 3, -5])),
        "restart-cycle": _fixture("restart-cycle", System.FULL, CYCLE_FORMULA, cycle, (),
                                  strict_forget=False),
    }
