"""
Transition systems as data.

Seven rule systems share one vocabulary of rules:

    dpll         decide, unitPropagate, backtrack                  state (M, F)
    backjump     decide, unitPropagate, backjump                   state (M, F)
    learn        backjump + learn, forget                          state (M, F)
    cdcl         decide, unitPropagate, conflict, explain,
                 backjump, learn                                   state (M, F, C, cflct)
    restartless  decide, unitPropagate, conflict, explain,
                 backjumpLearn, forget                             state (M, Fl, C, cflct, lnt)
    forgetless   as restartless with restart instead of forget     state (M, Fl, C, cflct, lnt)
    full         all five-tuple rules                              state (M, Fl, C, cflct, lnt)

apply() checks a rule instance's guard and returns the successor state, or
raises RejectedStepError naming the conjunct that failed.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import FrozenSet, List, Optional, Set, Tuple, Union

from satrules import oracle
from satrules.config import SolverConfig
from satrules.core import (
    Clause,
    Formula,
    Literal,
    Trail,
    TrailEntry,
    clause_false,
    current_level,
    decisions,
    elements,
    format_trail,
    formula_contains_set,
    formula_false,
    is_reason,
    is_unit,
    last_asserted_literal,
    last_decision,
    levels,
    negate_clause,
    prefix_before_last_decision,
    prefix_to_level,
    remove_duplicates,
    remove_literal,
    resolvent,
    vars_of,
)
from satrules.errors import (
    OracleBudgetError,
    PreconditionError,
    RejectedStepError,
    UncertifiableEntailmentError,
)
from satrules.index import ClauseIndex

logger = logging.getLogger(__name__)


class System(str, Enum):
    DPLL = "dpll"
    BACKJUMP = "backjump"
    LEARN = "learn"
    CDCL = "cdcl"
    RESTARTLESS = "restartless"
    FORGETLESS = "forgetless"
    FULL = "full"


class Rule(str, Enum):
    DECIDE = "decide"
    UNIT_PROPAGATE = "unitPropagate"
    BACKTRACK = "backtrack"
    BACKJUMP = "backjump"
    LEARN = "learn"
    FORGET = "forget"
    CONFLICT = "conflict"
    EXPLAIN = "explain"
    BACKJUMP_LEARN = "backjumpLearn"
    RESTART = "restart"


class Outcome(str, Enum):
    ACCEPTING = "accepting"
    REJECTING = "rejecting"
    INTERMEDIATE = "intermediate"


PAIR_SYSTEMS = (System.DPLL, System.BACKJUMP, System.LEARN)
FIVE_TUPLE_SYSTEMS = (System.RESTARTLESS, System.FORGETLESS, System.FULL)

RULES_OF = {
    System.DPLL: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.BACKTRACK),
    System.BACKJUMP: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.BACKJUMP),
    System.LEARN: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.BACKJUMP, Rule.LEARN, Rule.FORGET),
    System.CDCL: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.CONFLICT, Rule.EXPLAIN,
                  Rule.BACKJUMP, Rule.LEARN),
    System.RESTARTLESS: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.CONFLICT, Rule.EXPLAIN,
                         Rule.BACKJUMP_LEARN, Rule.FORGET),
    System.FORGETLESS: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.CONFLICT, Rule.EXPLAIN,
                        Rule.BACKJUMP_LEARN, Rule.RESTART),
    System.FULL: (Rule.DECIDE, Rule.UNIT_PROPAGATE, Rule.CONFLICT, Rule.EXPLAIN,
                  Rule.BACKJUMP_LEARN, Rule.FORGET, Rule.RESTART),
}


@dataclass(frozen=True)
class StateD:
    trail: Trail
    formula: Formula

    def __str__(self):
        return f"({format_trail(self.trail)}, {len(self.formula)} clauses)"


@dataclass(frozen=True)
class StateC:
    trail: Trail
    formula: Formula
    conflict_clause: Clause = ()
    conflict: bool = False

    def __str__(self):
        return (f"({format_trail(self.trail)}, {len(self.formula)} clauses, "
                f"C={list(self.conflict_clause)}, cflct={self.conflict})")


@dataclass(frozen=True)
class StateR:
    trail: Trail
    learnt: Formula = ()
    conflict_clause: Clause = ()
    conflict: bool = False
    learnt_flag: bool = False

    def __str__(self):
        return (f"({format_trail(self.trail)}, Fl={[list(c) for c in self.learnt]}, "
                f"C={list(self.conflict_clause)}, cflct={self.conflict}, lnt={self.learnt_flag})")


State = Union[StateD, StateC, StateR]

# Which parameters each rule takes: (required, optional)
_ARITY = {
    Rule.DECIDE: ({"literal"}, set()),
    Rule.UNIT_PROPAGATE: ({"clause", "literal"}, set()),
    Rule.BACKTRACK: (set(), set()),
    Rule.BACKJUMP: ({"literal", "level"}, {"clause"}),
    Rule.LEARN: (set(), {"clause"}),
    Rule.FORGET: (set(), {"clause", "forgotten"}),
    Rule.CONFLICT: ({"clause"}, set()),
    Rule.EXPLAIN: ({"clause", "literal"}, set()),
    Rule.BACKJUMP_LEARN: ({"literal", "level"}, {"clause"}),
    Rule.RESTART: (set(), set()),
}


@dataclass(frozen=True)
class RuleInstance:
    """A rule together with the witnesses of its guard."""
    rule: Rule
    clause: Optional[Clause] = None
    literal: Optional[Literal] = None
    level: Optional[int] = None
    forgotten: Optional[Tuple[Clause, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.clause is not None:
            object.__setattr__(self, "clause", tuple(self.clause))
        if self.forgotten is not None:
            object.__setattr__(self, "forgotten", tuple(tuple(c) for c in self.forgotten))
        present = {name for name in ("clause", "literal", "level", "forgotten")
                   if getattr(self, name) is not None}
        required, optional = _ARITY[self.rule]
        if not required <= present or not present <= required | optional:
            raise PreconditionError(
                f"{self.rule.value} takes {sorted(required)} (optional {sorted(optional)}), "
                f"got {sorted(present)}")
        if self.rule is Rule.FORGET and len(present) != 1:
            raise PreconditionError("forget takes exactly one of clause or forgotten")
        if self.literal == 0:
            raise PreconditionError("literal with variable 0")
        if self.level is not None and self.level < 0:
            raise PreconditionError(f"negative level {self.level}")

    def __str__(self):
        parts = []
        if self.clause is not None:
            parts.append(f"c = {list(self.clause)}")
        if self.literal is not None:
            parts.append(f"l = {self.literal:+d}")
        if self.level is not None:
            parts.append(f"level = {self.level}")
        if self.forgotten is not None:
            parts.append(f"Fc = {[list(c) for c in self.forgotten]}")
        return f"{self.rule.value} ({', '.join(parts)})" if parts else self.rule.value


def decide(literal: Literal) -> RuleInstance:
    return RuleInstance(Rule.DECIDE, literal=literal)


def unit_propagate(clause: Clause, literal: Literal) -> RuleInstance:
    return RuleInstance(Rule.UNIT_PROPAGATE, clause=tuple(clause), literal=literal)


def backtrack() -> RuleInstance:
    return RuleInstance(Rule.BACKTRACK)


def backjump(literal: Literal, level: int, clause: Optional[Clause] = None) -> RuleInstance:
    return RuleInstance(Rule.BACKJUMP, clause=None if clause is None else tuple(clause),
                        literal=literal, level=level)


def learn(clause: Optional[Clause] = None) -> RuleInstance:
    return RuleInstance(Rule.LEARN, clause=None if clause is None else tuple(clause))


def forget(clause: Optional[Clause] = None, forgotten: Optional[Tuple[Clause, ...]] = None) -> RuleInstance:
    return RuleInstance(Rule.FORGET, clause=None if clause is None else tuple(clause),
                        forgotten=forgotten)


def conflict(clause: Clause) -> RuleInstance:
    return RuleInstance(Rule.CONFLICT, clause=tuple(clause))


def explain(literal: Literal, clause: Clause) -> RuleInstance:
    return RuleInstance(Rule.EXPLAIN, clause=tuple(clause), literal=literal)


def backjump_learn(literal: Literal, level: int, clause: Optional[Clause] = None) -> RuleInstance:
    return RuleInstance(Rule.BACKJUMP_LEARN, clause=None if clause is None else tuple(clause),
                        literal=literal, level=level)


def restart() -> RuleInstance:
    return RuleInstance(Rule.RESTART)


# ---------------------------------------------------------------------------
# Level predicates
# ---------------------------------------------------------------------------

def is_backjump_level(lvl: int, l: Literal, c: Clause, trail: Trail) -> bool:
    """
    c false in M, opposite(l) the last asserted of c's opposites, and lvl lies
    in [max level of the other literals' opposites, level(opposite l)).
    """
    if not c or l not in c:
        return False
    if not clause_false(c, elements(trail)):
        return False
    if last_asserted_literal(negate_clause(c), trail) != -l:
        return False
    table = levels(trail)
    if not 0 <= lvl < table[-l]:
        return False
    return all(table[-x] <= lvl for x in remove_literal(c, l))


def is_minimal_backjump_level(lvl: int, l: Literal, c: Clause, trail: Trail) -> bool:
    return is_backjump_level(lvl, l, c, trail) and not any(
        is_backjump_level(k, l, c, trail) for k in range(lvl))


def is_uip(l: Literal, c: Clause, trail: Trail) -> bool:
    """Exactly one literal of c is falsified at the highest level among c's literals."""
    if not c or l not in c:
        return False
    if not clause_false(c, elements(trail)):
        return False
    if last_asserted_literal(negate_clause(c), trail) != -l:
        return False
    table = levels(trail)
    top = table[-l]
    return all(table[-x] < top for x in remove_literal(c, l))


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def problem_vars(f0: Formula, dec_vars: FrozenSet[int]) -> FrozenSet[int]:
    """Vars = vars(F0) ∪ DecVars."""
    return frozenset(vars_of(f0)) | dec_vars


def initial_state(system: System, f0: Formula) -> State:
    system = System(system)
    f0 = tuple(tuple(c) for c in f0)
    if system in PAIR_SYSTEMS:
        return StateD((), f0)
    if system is System.CDCL:
        return StateC((), f0)
    return StateR(())


def state_formula(state: State, f0: Formula) -> Formula:
    """The clause list the guards range over: F, or F0 @ Fl for five-tuple states."""
    if isinstance(state, StateR):
        return tuple(f0) + state.learnt
    return state.formula


def formula_part(state: State) -> Formula:
    """The formula component a state stores: F, or Fl for five-tuple states."""
    return state.learnt if isinstance(state, StateR) else state.formula


def _state_matches(system: System, state: State) -> None:
    expected = StateD if system in PAIR_SYSTEMS else StateC if system is System.CDCL else StateR
    if not isinstance(state, expected):
        raise PreconditionError(f"{system.value} works on {expected.__name__}, got {type(state).__name__}")


def unit_literal(c: Clause, assigned: Set[Literal]) -> Optional[Literal]:
    """The literal l with isUnit(c, l, M), if any, given M's literal set."""
    candidate = None
    for x in c:
        if x in assigned:
            return None
        if -x in assigned:
            continue
        if candidate is not None and candidate != x:
            return None
        candidate = x
    return candidate


def has_unit_clause(formula: Formula, trail: Trail) -> bool:
    assigned = set(elements(trail))
    return any(unit_literal(c, assigned) is not None for c in formula)


def _member(c: Clause, formula: Optional[Formula], index: Optional[ClauseIndex]) -> bool:
    return index.contains(c) if index is not None else c in formula


def _require(condition: bool, rule: Rule, guard: str, message: str = "") -> None:
    if not condition:
        raise RejectedStepError(rule.value, guard, message)


def _require_entailed(rule: Rule, formula: Formula, c: Clause, config: SolverConfig) -> None:
    """F ⊨ c: member/subsumed, certified, or confirmed by the oracle."""
    if frozenset(c) in config.certified:
        return
    try:
        entailed = oracle.entails(formula, c, config.oracle_budget)
    except OracleBudgetError as e:
        raise UncertifiableEntailmentError(rule.value, f"clause {list(c)}: {e}")
    _require(entailed, rule, "F ⊨ c", f"clause {list(c)} is not entailed")


def _decide_guard(trail: Trail, r: RuleInstance, config: SolverConfig) -> None:
    l = r.literal
    _require(abs(l) in config.dec_vars, r.rule, "var l ∈ DecVars", f"{l:+d}")
    assigned = set(elements(trail))
    _require(l not in assigned and -l not in assigned, r.rule, "l undefined in M", f"{l:+d}")


def _extend(trail: Trail, l: Literal, decision: bool = False) -> Trail:
    return trail + (TrailEntry(l, decision),)


# ---------------------------------------------------------------------------
# Per-system application
# ---------------------------------------------------------------------------

def apply_d(state: StateD, r: RuleInstance, config: SolverConfig,
            index: Optional[ClauseIndex] = None) -> StateD:
    """
    decide, unitPropagate (c ∈ F) and backtrack.

    Raises:
        RejectedStepError: If the guard of r does not hold in state
    """
    M, F = state.trail, state.formula
    if r.rule is Rule.DECIDE:
        _decide_guard(M, r, config)
        return replace(state, trail=_extend(M, r.literal, True))
    if r.rule is Rule.UNIT_PROPAGATE:
        _require(_member(r.clause, F, index), r.rule, "c ∈ F", f"{list(r.clause)}")
        _require(is_unit(r.clause, r.literal, elements(M)), r.rule, "isUnit")
        return replace(state, trail=_extend(M, r.literal))
    if r.rule is Rule.BACKTRACK:
        _require(index.has_false() if index is not None else formula_false(F, elements(M)),
                 r.rule, "formulaFalse")
        _require(bool(decisions(M)), r.rule, "decisions ≠ []")
        trail = _extend(prefix_before_last_decision(M), -last_decision(M))
        return replace(state, trail=trail)
    raise RejectedStepError(r.rule.value, "rule of system", "not a dpll rule")


def _backjump_pair(state: StateD, f0: Formula, r: RuleInstance, config: SolverConfig) -> StateD:
    M, F = state.trail, state.formula
    _require(r.clause is not None, r.rule, "backjump clause given")
    _require(r.level < current_level(M), r.rule, "level < currentLevel",
             f"level {r.level}, current level {current_level(M)}")
    prefix = prefix_to_level(M, r.level)
    _require(is_unit(r.clause, r.literal, elements(prefix)), r.rule, "isUnit",
             f"{list(r.clause)} on prefix {format_trail(prefix)}")
    _require(abs(r.literal) in problem_vars(f0, config.dec_vars), r.rule, "var l ∈ Vars")
    _require_entailed(r.rule, F, r.clause, config)
    return replace(state, trail=_extend(prefix, r.literal))


def _relaxed_propagate(state: StateD, f0: Formula, r: RuleInstance, config: SolverConfig,
                       index: Optional[ClauseIndex] = None) -> StateD:
    M, F = state.trail, state.formula
    _require(is_unit(r.clause, r.literal, elements(M)), r.rule, "isUnit")
    _require(abs(r.literal) in problem_vars(f0, config.dec_vars), r.rule, "var l ∈ Vars")
    if not _member(r.clause, F, index):
        _require_entailed(r.rule, F, r.clause, config)
    return replace(state, trail=_extend(M, r.literal))


def apply_b(state: StateD, f0: Formula, r: RuleInstance, config: SolverConfig,
            index: Optional[ClauseIndex] = None) -> StateD:
    """
    decide, unitPropagate (F ⊨ c) and backjump.

    Raises:
        RejectedStepError: If the guard of r does not hold
        UncertifiableEntailmentError: If F ⊨ c can be neither confirmed nor refuted
    """
    if r.rule is Rule.DECIDE:
        return apply_d(state, r, config, index)
    if r.rule is Rule.UNIT_PROPAGATE:
        return _relaxed_propagate(state, f0, r, config, index)
    if r.rule is Rule.BACKJUMP:
        return _backjump_pair(state, f0, r, config)
    raise RejectedStepError(r.rule.value, "rule of system", "not a backjump-system rule")


def apply_l(state: StateD, f0: Formula, r: RuleInstance, config: SolverConfig,
            index: Optional[ClauseIndex] = None) -> StateD:
    """The backjump system plus unrestricted learn and forget."""
    F = state.formula
    if r.rule is Rule.LEARN:
        _require(r.clause is not None, r.rule, "learnt clause given")
        _require(vars_of(r.clause) <= problem_vars(f0, config.dec_vars), r.rule, "vars c ⊆ Vars")
        _require_entailed(r.rule, F, r.clause, config)
        return replace(state, formula=F + (r.clause,))
    if r.rule is Rule.FORGET:
        _require(r.clause is not None, r.rule, "forgotten clause given")
        _require(_member(r.clause, F, index), r.rule, "c ∈ F", f"{list(r.clause)}")
        at = F.index(r.clause)
        rest = F[:at] + F[at + 1:]
        try:
            entailed = oracle.entails(rest, r.clause, config.oracle_budget)
        except OracleBudgetError as e:
            raise UncertifiableEntailmentError(r.rule.value, str(e))
        _require(entailed, r.rule, "(F ∖ c) ⊨ c")
        return replace(state, formula=rest)
    return apply_b(state, f0, r, config, index)


def apply_c(state: StateC, f0: Formula, r: RuleInstance, config: SolverConfig,
            index: Optional[ClauseIndex] = None) -> StateC:
    """
    The four-tuple system: decide, unitPropagate, conflict, explain, backjump, learn.

    Raises:
        RejectedStepError: If the guard of r does not hold
        UncertifiableEntailmentError: If F ⊨ c can be neither confirmed nor refuted
    """
    M, F, C = state.trail, state.formula, state.conflict_clause
    if r.rule is Rule.DECIDE:
        _decide_guard(M, r, config)
        return replace(state, trail=_extend(M, r.literal, True))
    if r.rule is Rule.UNIT_PROPAGATE:
        pair = _relaxed_propagate(StateD(M, F), f0, r, config, index)
        return replace(state, trail=pair.trail)
    if r.rule is Rule.CONFLICT:
        _require(not state.conflict, r.rule, "cflct = ⊥")
        _require(clause_false(r.clause, elements(M)), r.rule, "M ⊨¬ c", f"{list(r.clause)}")
        if not _member(r.clause, F, index):
            _require_entailed(r.rule, F, r.clause, config)
        return replace(state, conflict_clause=r.clause, conflict=True)
    if r.rule is Rule.EXPLAIN:
        _require(state.conflict, r.rule, "cflct = ⊤")
        _require(r.literal in C, r.rule, "l ∈ C", f"{r.literal:+d} not in {list(C)}")
        _require(is_reason(r.clause, -r.literal, elements(M)), r.rule, "isReason",
                 f"{list(r.clause)} for {-r.literal:+d}")
        if not _member(r.clause, F, index):
            _require_entailed(r.rule, F, r.clause, config)
        return replace(state, conflict_clause=resolvent(C, r.clause, r.literal))
    if r.rule is Rule.BACKJUMP:
        _require(state.conflict, r.rule, "cflct = ⊤")
        if r.clause is not None:
            _require(frozenset(r.clause) == frozenset(C), r.rule, "c = C",
                     f"{list(r.clause)} differs from {list(C)}")
        _require(is_backjump_level(r.level, r.literal, C, M), r.rule, "isBackjumpLevel",
                 f"level {r.level} for {r.literal:+d} in {list(C)}")
        trail = _extend(prefix_to_level(M, r.level), r.literal)
        return replace(state, trail=trail, conflict_clause=(), conflict=False)
    if r.rule is Rule.LEARN:
        _require(state.conflict, r.rule, "cflct = ⊤")
        if r.clause is not None:
            _require(frozenset(r.clause) == frozenset(C), r.rule, "c = C",
                     f"{list(r.clause)} differs from {list(C)}")
        contained = index.contains_set(C) if index is not None else formula_contains_set(F, C)
        _require(not contained, r.rule, "C ∉ F", f"{list(C)}")
        return replace(state, formula=F + (C,))
    raise RejectedStepError(r.rule.value, "rule of system", "not a cdcl rule")


def apply_r(state: StateR, f0: Formula, r: RuleInstance, config: SolverConfig,
            system: System = System.FULL, index: Optional[ClauseIndex] = None) -> StateR:
    """
    The five-tuple systems. Clauses are drawn from F0 @ Fl by membership and
    propagation is eager: decide is blocked while a unit clause exists.

    Raises:
        RejectedStepError: If the guard of r does not hold or r is not a rule of system
    """
    system = System(system)
    _require(r.rule in RULES_OF[system], r.rule, "rule of system", f"not a {system.value} rule")
    M, Fl, C = state.trail, state.learnt, state.conflict_clause
    F = None if index is not None else tuple(f0) + Fl
    if r.rule is Rule.DECIDE:
        _decide_guard(M, r, config)
        unit = index.has_unit() if index is not None else has_unit_clause(F, M)
        _require(not unit, r.rule, "no unit clause")
        return replace(state, trail=_extend(M, r.literal, True))
    if r.rule is Rule.UNIT_PROPAGATE:
        _require(_member(r.clause, F, index), r.rule, "c ∈ F0 @ Fl", f"{list(r.clause)}")
        _require(is_unit(r.clause, r.literal, elements(M)), r.rule, "isUnit")
        return replace(state, trail=_extend(M, r.literal))
    if r.rule is Rule.CONFLICT:
        _require(not state.conflict, r.rule, "cflct = ⊥")
        _require(_member(r.clause, F, index), r.rule, "c ∈ F0 @ Fl", f"{list(r.clause)}")
        _require(clause_false(r.clause, elements(M)), r.rule, "M ⊨¬ c", f"{list(r.clause)}")
        return replace(state, conflict_clause=r.clause, conflict=True)
    if r.rule is Rule.EXPLAIN:
        _require(state.conflict, r.rule, "cflct = ⊤")
        _require(r.literal in C, r.rule, "l ∈ C", f"{r.literal:+d} not in {list(C)}")
        _require(_member(r.clause, F, index), r.rule, "c ∈ F0 @ Fl", f"{list(r.clause)}")
        _require(is_reason(r.clause, -r.literal, elements(M)), r.rule, "isReason",
                 f"{list(r.clause)} for {-r.literal:+d}")
        return replace(state, conflict_clause=resolvent(C, r.clause, r.literal))
    if r.rule is Rule.BACKJUMP_LEARN:
        _require(state.conflict, r.rule, "cflct = ⊤")
        if r.clause is not None:
            _require(frozenset(r.clause) == frozenset(C), r.rule, "c = C",
                     f"{list(r.clause)} differs from {list(C)}")
        _require(is_minimal_backjump_level(r.level, r.literal, C, M), r.rule,
                 "isMinimalBackjumpLevel", f"level {r.level} for {r.literal:+d} in {list(C)}")
        return StateR(_extend(prefix_to_level(M, r.level), r.literal), Fl + (C,), (), False, True)
    if r.rule is Rule.FORGET:
        _require(r.forgotten is not None, r.rule, "Fc given")
        _require(not state.conflict, r.rule, "cflct = ⊥")
        _require(state.learnt_flag, r.rule, "lnt = ⊤")
        remaining = list(Fl)
        for c in r.forgotten:
            _require(c in remaining, r.rule, "Fc ⊆ Fl", f"{list(c)} is not a learnt clause")
            remaining.remove(c)
        if config.strict_forget:
            values = elements(M)
            for c in r.forgotten:
                _require(not any(is_reason(c, l, values) for l in set(c)), r.rule,
                         "no c ∈ Fc is a reason", f"{list(c)} is the reason of a trail literal")
        return replace(state, learnt=tuple(remaining), learnt_flag=False)
    if r.rule is Rule.RESTART:
        _require(not state.conflict, r.rule, "cflct = ⊥")
        _require(state.learnt_flag, r.rule, "lnt = ⊤")
        return replace(state, trail=prefix_to_level(M, 0), learnt_flag=False)
    raise RejectedStepError(r.rule.value, "rule of system")


def apply(system: System, state: State, r: RuleInstance, f0: Formula, config: SolverConfig,
          index: Optional[ClauseIndex] = None) -> State:
    """
    Apply r in the given system.

    Args:
        system: Rule system
        state: Current state (StateD, StateC or StateR to match the system)
        r: Rule instance with its witnesses
        f0: Initial formula (fixes Vars and, for five-tuple states, F0)
        config: Decision variables, oracle budget, certified clauses
        index: Mirror of the state's formula and trail; when given, clause
            membership, unit and falsity questions are answered from it

    Returns:
        The successor state

    Raises:
        RejectedStepError: If the guard does not hold
        UncertifiableEntailmentError: If an entailment guard cannot be decided
    """
    system = System(system)
    _state_matches(system, state)
    _require(r.rule in RULES_OF[system], r.rule, "rule of system", f"not a {system.value} rule")
    if system is System.DPLL:
        successor = apply_d(state, r, config, index)
    elif system is System.BACKJUMP:
        successor = apply_b(state, f0, r, config, index)
    elif system is System.LEARN:
        successor = apply_l(state, f0, r, config, index)
    elif system is System.CDCL:
        successor = apply_c(state, f0, r, config, index)
    else:
        successor = apply_r(state, f0, r, config, system, index)
    logger.debug("%s: %s", system.value, r)
    return successor


# ---------------------------------------------------------------------------
# Enumeration and classification
# ---------------------------------------------------------------------------

def _clause_pool(system: System, state: State, f0: Formula, config: SolverConfig) -> List[Clause]:
    """Member clauses in index order, then certified ones for entailment-guarded systems."""
    pool = list(dict.fromkeys(state_formula(state, f0)))
    if system not in FIVE_TUPLE_SYSTEMS:
        members = {frozenset(c) for c in pool}
        extra = [tuple(sorted(c, key=lambda x: (abs(x), x < 0)))
                 for c in config.certified if c not in members]
        pool.extend(sorted(extra, key=lambda c: (len(c), [(abs(x), x < 0) for x in c])))
    return pool


def _candidates(system: System, state: State, f0: Formula, config: SolverConfig) -> List[RuleInstance]:
    M = state.trail
    top = current_level(M)
    pool = _clause_pool(system, state, f0, config)
    C = getattr(state, "conflict_clause", ())
    candidates: List[RuleInstance] = []
    for rule in RULES_OF[system]:
        if rule is Rule.DECIDE:
            for v in sorted(config.dec_vars):
                candidates.extend([decide(v), decide(-v)])
        elif rule is Rule.UNIT_PROPAGATE:
            candidates.extend(unit_propagate(c, l) for c in pool for l in remove_duplicates(c))
        elif rule is Rule.BACKTRACK:
            candidates.append(backtrack())
        elif rule is Rule.BACKJUMP and system is System.CDCL:
            candidates.extend(backjump(l, k) for l in remove_duplicates(C) for k in range(top))
        elif rule is Rule.BACKJUMP:
            candidates.extend(backjump(l, k, c) for c in pool
                              for l in remove_duplicates(c) for k in range(top))
        elif rule is Rule.LEARN and system is System.CDCL:
            candidates.append(learn())
        elif rule is Rule.LEARN:
            candidates.extend(learn(c) for c in pool)
        elif rule is Rule.FORGET and system is System.LEARN:
            candidates.extend(forget(clause=c) for c in dict.fromkeys(state.formula))
        elif rule is Rule.FORGET:
            # Every sub-list of Fl; exponential in |Fl|, meant for small states.
            if state.learnt_flag and not state.conflict:
                seen = set()
                for k in range(len(state.learnt) + 1):
                    for picked in combinations(range(len(state.learnt)), k):
                        fc = tuple(state.learnt[i] for i in picked)
                        if fc not in seen:
                            seen.add(fc)
                            candidates.append(forget(forgotten=fc))
        elif rule is Rule.CONFLICT:
            candidates.extend(conflict(c) for c in pool)
        elif rule is Rule.EXPLAIN:
            candidates.extend(explain(l, c) for l in remove_duplicates(C) for c in pool)
        elif rule is Rule.BACKJUMP_LEARN:
            candidates.extend(backjump_learn(l, k) for l in remove_duplicates(C) for k in range(top))
        elif rule is Rule.RESTART:
            candidates.append(restart())
    return candidates


def enumerate_applicable(system: System, state: State, f0: Formula,
                         config: SolverConfig) -> List[RuleInstance]:
    """
    Every rule instance whose guard holds in state, in deterministic order:
    by rule in system order, then clause index, literal order within the
    clause, and decision variables ascending with positive polarity first.

    Entailment-guarded clause parameters range over member clauses plus
    config.certified; instances whose entailment cannot be decided are left out.
    """
    system = System(system)
    _state_matches(system, state)
    applicable = []
    for candidate in _candidates(system, state, f0, config):
        try:
            apply(system, state, candidate, f0, config)
        except (RejectedStepError, UncertifiableEntailmentError):
            continue
        applicable.append(candidate)
    return applicable


def classify(system: System, state: State, f0: Formula, config: SolverConfig) -> Outcome:
    """
    accepting: no conflict, formula not false, every decision variable defined.
    rejecting: formula false without decisions (pair states) or cflct with C = [].
    """
    system = System(system)
    _state_matches(system, state)
    values = elements(state.trail)
    defined = {abs(l) for l in values}
    all_decided = config.dec_vars <= defined
    formula = state_formula(state, f0)
    if system in PAIR_SYSTEMS:
        if formula_false(formula, values):
            return Outcome.REJECTING if not decisions(state.trail) else Outcome.INTERMEDIATE
        return Outcome.ACCEPTING if all_decided else Outcome.INTERMEDIATE
    if state.conflict:
        return Outcome.REJECTING if not state.conflict_clause else Outcome.INTERMEDIATE
    if not formula_false(formula, values) and all_decided:
        return Outcome.ACCEPTING
    return Outcome.INTERMEDIATE
