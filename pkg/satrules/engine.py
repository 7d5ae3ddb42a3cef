"""
Deterministic strategies driving the rule systems to outcome states.

solve() applies rules with the priority
    conflict > explain > backjump(Learn) > unitPropagate > restart|forget > decide
and routes every step through rules.apply, so each emitted step is legal.
Clause status comes from a satrules.index.ClauseIndex kept in step with the
state, together with a record of the reason clause of each implied literal.
"""

import logging
import random
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional

from satrules.config import SolverConfig
from satrules.core import (
    Clause,
    Formula,
    Literal,
    Trail,
    Valuation,
    elements,
    formula_false,
    is_reason,
    level,
    levels,
    first_positions,
    remove_literal,
    resolvent,
    vars_of,
)
from satrules.errors import BudgetExceededError, ConfigError, InternalInvariantError, PreconditionError
from satrules.index import ClauseIndex
from satrules.rules import (
    FIVE_TUPLE_SYSTEMS,
    RuleInstance,
    State,
    StateC,
    System,
    apply,
    backjump,
    backjump_learn,
    backtrack,
    conflict,
    decide,
    explain,
    forget,
    initial_state,
    is_uip,
    learn,
    restart,
    state_formula,
    unit_literal,
    unit_propagate,
)

logger = logging.getLogger(__name__)


class StrategySystem(str, Enum):
    DPLL = "dpll"
    BACKJUMP = "backjump"
    LEARN = "learn"
    CDCL = "cdcl"
    FULL = "full"


class RestartKind(str, Enum):
    NONE = "none"
    EVERY_CONFLICT = "every-conflict"
    LUBY = "luby"
    GEOMETRIC = "geometric"


class ForgetKind(str, Enum):
    NONE = "none"
    SIZE_THRESHOLD = "size-threshold"


class DecideKind(str, Enum):
    ASCENDING = "ascending"
    RANDOM = "random"


@dataclass(frozen=True)
class DecideOrder:
    kind: DecideKind = DecideKind.ASCENDING
    seed: int = 0


@dataclass(frozen=True)
class RestartPolicy:
    kind: RestartKind = RestartKind.NONE
    unit: int = 1
    base: float = 100.0
    factor: float = 1.5

    def threshold(self, restarts_so_far: int) -> Optional[float]:
        """Conflicts required before the next restart, None when restarts are off."""
        if self.kind is RestartKind.NONE:
            return None
        if self.kind is RestartKind.EVERY_CONFLICT:
            return 1
        if self.kind is RestartKind.LUBY:
            return self.unit * luby_sequence(restarts_so_far + 1)
        return self.base * self.factor ** restarts_so_far


@dataclass(frozen=True)
class ForgetPolicy:
    kind: ForgetKind = ForgetKind.NONE
    max_learnt: int = 100
    keep_recent: int = 10


@dataclass(frozen=True)
class Strategy:
    system: StrategySystem = StrategySystem.CDCL
    decide_order: DecideOrder = field(default_factory=DecideOrder)
    restart_policy: RestartPolicy = field(default_factory=RestartPolicy)
    forget_policy: ForgetPolicy = field(default_factory=ForgetPolicy)
    trace_sink: Optional[Callable[[RuleInstance], None]] = None

    def __post_init__(self):
        object.__setattr__(self, "system", StrategySystem(self.system))
        uses_policies = (self.restart_policy.kind is not RestartKind.NONE
                         or self.forget_policy.kind is not ForgetKind.NONE)
        if uses_policies and self.system not in (StrategySystem.CDCL, StrategySystem.FULL):
            raise ConfigError(f"restart/forget policies need system cdcl or full, not {self.system.value}")
        if self.restart_policy.unit < 1 or self.restart_policy.base <= 0 or self.restart_policy.factor < 1:
            raise ConfigError(f"malformed restart policy {self.restart_policy}")
        if self.forget_policy.max_learnt < 0 or self.forget_policy.keep_recent < 0:
            raise ConfigError(f"malformed forget policy {self.forget_policy}")

    def rule_system(self) -> System:
        """The rule system this strategy drives."""
        if self.system is StrategySystem.DPLL:
            return System.DPLL
        if self.system is StrategySystem.BACKJUMP:
            return System.BACKJUMP
        if self.system is StrategySystem.LEARN:
            return System.LEARN
        restarts = self.restart_policy.kind is not RestartKind.NONE
        forgets = self.forget_policy.kind is not ForgetKind.NONE
        if restarts and forgets:
            return System.FULL
        if forgets:
            return System.RESTARTLESS
        if restarts or self.system is StrategySystem.FULL:
            return System.FORGETLESS
        return System.CDCL


class Verdict(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"


@dataclass
class SolverStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    learnt: int = 0
    restarts: int = 0
    forgotten: int = 0
    backjumps: int = 0
    steps: int = 0

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class Answer:
    verdict: Verdict
    model: Optional[Valuation]
    stats: SolverStats
    state: Optional[State] = None


def luby_sequence(i: int) -> int:
    """1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8, ..."""
    if i < 1:
        raise PreconditionError(f"luby sequence index must be positive, got {i}")
    x = i - 1
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return 1 << seq


def _first_reason(formula: Formula, literal: Literal, values: Valuation) -> Optional[Clause]:
    for c in formula:
        if is_reason(c, literal, values):
            return c
    return None


def analyze_conflict(state: State, f0: Formula,
                     reasons: Optional[Mapping[Literal, Clause]] = None) -> List[RuleInstance]:
    """
    1-UIP conflict analysis.

    Explains the literal of C falsified last, using its reason clause, until
    C is empty or satisfies the UIP condition at a level above 0.

    Args:
        state: A StateC or StateR with cflct set
        f0: Initial formula
        reasons: Reason clause of each implied trail literal; looked up in the
            state's formula when omitted

    Returns:
        The explain steps, in order

    Raises:
        PreconditionError: If the state has no conflict
        InternalInvariantError: If an implied literal has no reason clause
    """
    if not getattr(state, "conflict", False):
        raise PreconditionError("conflict analysis needs cflct = ⊤")
    trail = state.trail
    values = elements(trail)
    positions = first_positions(values)
    table = levels(trail)
    formula = state_formula(state, f0)
    clause = state.conflict_clause
    steps: List[RuleInstance] = []
    while clause:
        l = max(clause, key=lambda x: positions[-x])
        top = table[-l]
        if top > 0 and all(table[-x] < top for x in clause if x != l):
            break
        reason = reasons.get(-l) if reasons is not None else _first_reason(formula, -l, values)
        if reason is None:
            raise InternalInvariantError(f"no reason clause recorded for implied literal {-l:+d}")
        steps.append(explain(l, reason))
        clause = resolvent(clause, reason, l)
    return steps


def minimal_backjump_level(c: Clause, l: Literal, trail: Trail) -> int:
    """
    Highest level among the other literals' opposites, 0 for a unit clause.

    Raises:
        PreconditionError: If l is not a UIP of c above level 0
    """
    if not is_uip(l, c, trail) or level(-l, trail) == 0:
        raise PreconditionError(f"{l:+d} is not a unique implication point of {list(c)} above level 0")
    return max((level(-x, trail) for x in remove_literal(c, l)), default=0)


def propagate_exhaustively(state: State, f0: Formula) -> List[RuleInstance]:
    """
    Unit propagation in clause order until nothing is unit or a clause is false.

    Each returned step carries its reason clause.
    """
    formula = state_formula(state, f0)
    values = list(elements(state.trail))
    steps: List[RuleInstance] = []
    while not formula_false(formula, values):
        assigned = set(values)
        for c in formula:
            l = unit_literal(c, assigned)
            if l is not None:
                steps.append(unit_propagate(c, l))
                values.append(l)
                break
        else:
            break
    return steps


class _Driver:
    """Mutable search index mirrored alongside the immutable rule state."""

    def __init__(self, f0: Formula, config: SolverConfig, strategy: Strategy):
        self.f0 = tuple(tuple(c) for c in f0)
        self.config = config
        self.strategy = strategy
        self.system = strategy.rule_system()
        self.state = initial_state(self.system, self.f0)
        self.stats = SolverStats()
        self.rng = random.Random(strategy.decide_order.seed)
        self.dec_order = sorted(config.dec_vars)

        self.index = ClauseIndex(self.f0)
        self.learnt_ids: List[int] = []
        self.reasons: Dict[Literal, Clause] = {}
        self.conflicts_since_restart = 0

    # -- index -------------------------------------------------------------

    @property
    def value(self) -> Dict[int, Literal]:
        return self.index.value

    def _add_clause(self, c: Clause) -> int:
        cid = self.index.add(c)
        self.learnt_ids.append(cid)
        return cid

    def _remove_clause(self, cid: int) -> None:
        self.index.remove(cid)
        self.learnt_ids.remove(cid)

    # -- steps -------------------------------------------------------------

    def _step(self, r: RuleInstance) -> None:
        if self.stats.steps >= self.config.step_budget:
            raise BudgetExceededError(self.config.step_budget, self.stats.as_dict())
        old = self.state
        self.state = apply(self.system, old, r, self.f0, self.config, self.index)
        self.stats.steps += 1
        if self.strategy.trace_sink is not None:
            self.strategy.trace_sink(r)
        if old.trail is not self.state.trail:
            for l in self.index.sync_trail(old.trail, self.state.trail):
                self.reasons.pop(l, None)

    def _propagate(self, cid: int) -> None:
        c = self.index.clauses[cid]
        l = self.index.unit_of(cid)
        self._step(unit_propagate(c, l))
        self.reasons[l] = c
        self.stats.propagations += 1

    def _decide(self) -> bool:
        undefined = [v for v in self.dec_order if v not in self.value]
        if not undefined:
            return False
        if self.strategy.decide_order.kind is DecideKind.RANDOM:
            v = self.rng.choice(undefined)
            literal = v if self.rng.random() < 0.5 else -v
        else:
            literal = undefined[0]
        self._step(decide(literal))
        self.stats.decisions += 1
        return True

    def _derive_backjump_clause(self, cid: int) -> Clause:
        snapshot = StateC(self.state.trail, state_formula(self.state, self.f0), self.index.clauses[cid], True)
        clause = snapshot.conflict_clause
        for step in analyze_conflict(snapshot, self.f0, self.reasons):
            clause = resolvent(clause, step.clause, step.literal)
        if not clause:
            raise InternalInvariantError("conflict analysis reached the empty clause with decisions left")
        return clause

    def _uip_literal(self, clause: Clause) -> Literal:
        positions = first_positions(elements(self.state.trail))
        return max(clause, key=lambda x: positions[-x])

    def _handle_pair_conflict(self, cid: int) -> None:
        self.stats.conflicts += 1
        if self.system is System.DPLL:
            self._step(backtrack())
            return
        clause = self._derive_backjump_clause(cid)
        l = self._uip_literal(clause)
        lvl = minimal_backjump_level(clause, l, self.state.trail)
        self.config = self.config.with_certified([clause])
        if self.system is System.LEARN:
            self._step(learn(clause))
            self._add_clause(clause)
            self.stats.learnt += 1
        self._step(backjump(l, lvl, clause))
        self.reasons[l] = clause
        self.stats.backjumps += 1

    def _handle_conflict_state(self) -> None:
        for step in analyze_conflict(self.state, self.f0, self.reasons):
            self._step(step)
        clause = self.state.conflict_clause
        if not clause:
            return
        l = self._uip_literal(clause)
        lvl = minimal_backjump_level(clause, l, self.state.trail)
        if self.system is System.CDCL:
            existing = self.index.find_set(clause)
            if existing is None:
                self._step(learn(clause))
                self._add_clause(clause)
                self.stats.learnt += 1
                existing = clause
            self._step(backjump(l, lvl, clause))
            self.reasons[l] = existing
        else:
            self._step(backjump_learn(l, lvl, clause))
            self._add_clause(clause)
            self.reasons[l] = clause
            self.stats.learnt += 1
            self.conflicts_since_restart += 1
        self.stats.backjumps += 1

    def _is_reason_now(self, c: Clause) -> bool:
        values = elements(self.state.trail)
        return any(is_reason(c, x, values) for x in set(c) if self.value.get(abs(x)) == x)

    def _maybe_forget(self) -> bool:
        policy = self.strategy.forget_policy
        if policy.kind is ForgetKind.NONE or len(self.learnt_ids) <= policy.max_learnt:
            return False
        keep = set(self.learnt_ids[len(self.learnt_ids) - policy.keep_recent:]) if policy.keep_recent else set()
        victims = [cid for cid in self.learnt_ids
                   if cid not in keep and not self._is_reason_now(self.index.clauses[cid])]
        if not victims:
            return False
        self._step(forget(forgotten=tuple(self.index.clauses[cid] for cid in victims)))
        for cid in victims:
            self._remove_clause(cid)
        self.stats.forgotten += len(victims)
        logger.debug("forgot %d learnt clauses, %d kept", len(victims), len(self.learnt_ids))
        return True

    def _maybe_restart(self) -> bool:
        threshold = self.strategy.restart_policy.threshold(self.stats.restarts)
        if threshold is None or self.conflicts_since_restart < threshold:
            return False
        self._step(restart())
        self.stats.restarts += 1
        self.conflicts_since_restart = 0
        return True

    # -- main loop ---------------------------------------------------------

    def run(self) -> Answer:
        five_tuple = self.system in FIVE_TUPLE_SYSTEMS
        with_conflicts = self.system is System.CDCL or five_tuple
        while True:
            state = self.state
            if with_conflicts and state.conflict:
                if not state.conflict_clause:
                    return self._finish(Verdict.UNSAT)
                self._handle_conflict_state()
                continue
            if self.index.false_ids:
                cid = min(self.index.false_ids)
                if with_conflicts:
                    self._step(conflict(self.index.clauses[cid]))
                    self.stats.conflicts += 1
                    continue
                if not any(e.decision for e in state.trail):
                    return self._finish(Verdict.UNSAT)
                self._handle_pair_conflict(cid)
                continue
            if self.index.unit_ids:
                self._propagate(min(self.index.unit_ids))
                continue
            if five_tuple and state.learnt_flag:
                if self.system is not System.FORGETLESS and self._maybe_forget():
                    continue
                if self.system is not System.RESTARTLESS and self._maybe_restart():
                    continue
            if not self._decide():
                return self._finish(Verdict.SAT)

    def _finish(self, verdict: Verdict) -> Answer:
        model = elements(self.state.trail) if verdict is Verdict.SAT else None
        logger.info("%s: %s after %d steps (%d conflicts, %d decisions)", self.system.value,
                    verdict.value, self.stats.steps, self.stats.conflicts, self.stats.decisions)
        return Answer(verdict, model, self.stats, self.state)


def solve(f0: Formula, config: SolverConfig, strategy: Optional[Strategy] = None) -> Answer:
    """
    Drive the strategy's rule system from the initial state to an outcome state.

    Args:
        f0: Formula to solve
        config: Decision variables, step budget and oracle settings
        strategy: System, decision order and restart/forget policies

    Returns:
        Answer with verdict, model (trail literals) on sat, and counters

    Raises:
        BudgetExceededError: If the step budget runs out; carries partial stats
        ConfigError: If the strategy is malformed
    """
    strategy = strategy or Strategy()
    unknown = vars_of(tuple(tuple(c) for c in f0)) - config.dec_vars
    if unknown:
        logger.info("variables %s are not decision variables", sorted(unknown))
    return _Driver(f0, config, strategy).run()
