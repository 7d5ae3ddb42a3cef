"""
Termination orderings, invariant checks and step certification.

certify_step replays one rule instance, checks the system invariants on the
successor, and reports which slot of the system's lexicographic measure
strictly decreased.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Callable, FrozenSet, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from satrules import oracle
from satrules.config import SolverConfig
from satrules.core import (
    Clause,
    Formula,
    Trail,
    TrailEntry,
    clause_false,
    decisions_to,
    elements,
    first_positions,
    formula_contains_set,
    is_consistent,
    is_distinct,
    remove_duplicates,
    valuation_to_formula,
    vars_of,
)
from satrules.errors import CertificationError, OracleBudgetError, PreconditionError
from satrules.index import ClauseIndex
from satrules.rules import (
    PAIR_SYSTEMS,
    RuleInstance,
    State,
    System,
    apply,
    formula_part,
    problem_vars,
    state_formula,
)

logger = logging.getLogger(__name__)

NOT_WELL_FOUNDED = (System.LEARN, System.FULL)


# ---------------------------------------------------------------------------
# Base orderings
# ---------------------------------------------------------------------------

def succ_lit(a: TrailEntry, b: TrailEntry) -> bool:
    return a.decision and not b.decision


def succ_tr(m1: Trail, m2: Trail) -> bool:
    """
    m1 ≻ m2: m1 is a proper prefix of m2, or at the first differing entry
    m1's entry is a decision and m2's is not.
    """
    for a, b in zip(m1, m2):
        if a != b:
            return succ_lit(a, b)
    return len(m1) < len(m2)


def succ_tr_restricted(m1: Trail, m2: Trail, vbl: Iterable[int]) -> bool:
    vbl = vbl if isinstance(vbl, (set, frozenset)) else set(vbl)
    for m in (m1, m2):
        values = elements(m)
        if not is_distinct(values) or not {abs(l) for l in values} <= vbl:
            return False
    return succ_tr(m1, m2)


def multiset_greater(s1: Iterable[int], s2: Iterable[int]) -> bool:
    """
    Multiset extension of > on naturals: s1 ≠ s2 and every element that s2
    has more of is dominated by a larger element that s1 has more of.
    """
    c1, c2 = Counter(s1), Counter(s2)
    if c1 == c2:
        return False
    surplus1 = [y for y in c1 if c1[y] > c2[y]]
    return all(any(y > x for y in surplus1) for x in c2 if c2[x] > c1[x])


def _positions(c: Clause, trail: Trail) -> List[int]:
    positions = first_positions(elements(trail))
    result = []
    for l in remove_duplicates(c):
        if -l not in positions:
            raise PreconditionError(f"opposite of {l:+d} does not occur in trail")
        result.append(positions[-l])
    return result


def succ_c(c1: Clause, c2: Clause, trail: Trail) -> bool:
    """
    Compare conflict clauses by the trail positions of their literals' opposites.

    Raises:
        PreconditionError: If some literal of c1 or c2 is not false in the trail
    """
    return multiset_greater(_positions(c1, trail), _positions(c2, trail))


def succ_f(f1: Formula, f2: Formula, c: Clause) -> bool:
    return not formula_contains_set(f1, c) and formula_contains_set(f2, c)


def dedup_formula(f: Formula) -> FrozenSet[FrozenSet[int]]:
    return frozenset(frozenset(c) for c in f)


def formula_inclusion_greater(f1: Formula, f2: Formula, vbl: Iterable[int]) -> bool:
    """f1 ≻ f2 when both stay inside vbl and f2 strictly contains f1 after deduplication."""
    vbl = set(vbl)
    if not vars_of(f1) <= vbl or not vars_of(f2) <= vbl:
        return False
    return dedup_formula(f1) < dedup_formula(f2)


def bool_greater(b1: bool, b2: bool) -> bool:
    """⊥ ≻ ⊤."""
    return not b1 and b2


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureVerdict:
    decreased: bool
    component: str
    detail: str = ""
    well_founded: bool = True


Slot = Tuple[str, Callable[[State, State], bool], Callable[[State, State], bool]]


def _safe(relation: Callable[[], bool]) -> bool:
    try:
        return relation()
    except PreconditionError:
        return False


def _appended(a: State, b: State) -> Optional[Formula]:
    """The clauses b's formula appends to a's, or None when b's is not an extension of a's."""
    old, new = formula_part(a), formula_part(b)
    if old is new:
        return ()
    if len(new) >= len(old) and new[:len(old)] == old:
        return new[len(old):]
    return None


def _slots(system: System, f0: Formula, vbl: FrozenSet[int], index: Optional[ClauseIndex] = None) -> List[Slot]:
    # index mirrors the earlier state, so it answers set membership in its formula
    trail_slot = ("M", lambda a, b: succ_tr_restricted(a.trail, b.trail, vbl),
                  lambda a, b: a.trail == b.trail)
    conflict_slot = ("cflct", lambda a, b: bool_greater(a.conflict, b.conflict),
                     lambda a, b: a.conflict == b.conflict)
    clause_slot = ("C", lambda a, b: _safe(lambda: succ_c(a.conflict_clause, b.conflict_clause, a.trail)),
                   lambda a, b: a.conflict_clause == b.conflict_clause)
    learnt_slot = ("lnt", lambda a, b: a.learnt_flag and not b.learnt_flag,
                   lambda a, b: a.learnt_flag == b.learnt_flag)
    if system in (System.DPLL, System.BACKJUMP):
        return [trail_slot]
    if system is System.CDCL:
        def learnt_c(a: State, b: State) -> bool:
            fresh = _appended(a, b)
            if fresh is None or index is None:
                return succ_f(a.formula, b.formula, a.conflict_clause)
            target = frozenset(a.conflict_clause)
            return not index.contains_set(target) and any(frozenset(c) == target for c in fresh)

        formula_slot = ("F", learnt_c, lambda a, b: a.formula is b.formula or a.formula == b.formula)
        return [trail_slot, conflict_slot, clause_slot, formula_slot]
    if system is System.RESTARTLESS:
        return [trail_slot, conflict_slot, clause_slot, learnt_slot]

    def grew(a: State, b: State) -> bool:
        fresh = _appended(a, b)
        if fresh == ():
            return False
        if fresh is None or index is None:
            return formula_inclusion_greater(state_formula(a, f0), state_formula(b, f0), vbl)
        return vars_of(fresh) <= vbl and not all(index.contains_set(c) for c in fresh)

    def same(a: State, b: State) -> bool:
        fresh = _appended(a, b)
        if fresh == ():
            return True
        if fresh is None or index is None:
            return dedup_formula(state_formula(a, f0)) == dedup_formula(state_formula(b, f0))
        return all(index.contains_set(c) for c in fresh)

    return [("F", grew, same), learnt_slot, trail_slot, conflict_slot, clause_slot]


def measure_decreased(system: System, before: State, after: State, f0: Formula,
                      config: SolverConfig, index: Optional[ClauseIndex] = None) -> MeasureVerdict:
    """
    Compare two successive states under the system's lexicographic measure.

    dpll/backjump: restricted trail order. cdcl: (M, cflct, C, F).
    restartless: (M, cflct, C, lnt). forgetless: (F inclusion, lnt, M, cflct, C).
    learn and full have no well-founded measure and are reported as such.
    An index mirroring before speeds up the formula comparisons.
    """
    system = System(system)
    if system in NOT_WELL_FOUNDED:
        return MeasureVerdict(False, "n/a", f"not well-founded ({system.value} system)", well_founded=False)
    vbl = problem_vars(tuple(f0), config.dec_vars)
    for name, greater, equal in _slots(system, f0, vbl, index):
        if greater(before, after):
            return MeasureVerdict(True, name, f"{name} decreased")
        if not equal(before, after):
            return MeasureVerdict(False, name, f"{name} changed without decreasing")
    return MeasureVerdict(False, "", "all measure components unchanged")


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvariantReport:
    checked: Tuple[str, ...] = ()
    violations: Tuple[Tuple[str, str], ...] = ()
    skipped: Tuple[Tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _reason_clauses_hold(formula: Formula, trail: Trail, budget: int) -> Optional[str]:
    # A reason clause exists iff the weakest candidate, l plus the opposites
    # of everything before it, is entailed.
    values = elements(trail)
    for i, entry in enumerate(trail):
        if entry.decision:
            continue
        weakest = (entry.literal,) + tuple(-x for x in values[:i])
        if not oracle.entails(formula, weakest, budget):
            return f"no entailed reason clause for {entry.literal:+d}"
    return None


def check_invariants(system: System, state: State, f0: Formula, config: SolverConfig,
                     previous: Optional[State] = None) -> InvariantReport:
    """
    Evaluate the reachable-state invariants of the system on state.

    consistent, distinct, varsM, varsF and Cfalse are always evaluated;
    impliedLits, equiv, Centailed and reasonClauses need the oracle and run
    only when config.oracle_checks is set. Oracle refusals are reported in
    skipped, never dropped.

    When previous is the already checked predecessor of state, varsF is
    evaluated on the clauses state appends to it only.
    """
    system = System(system)
    f0 = tuple(f0)
    vbl = problem_vars(f0, config.dec_vars)
    trail = state.trail
    values = elements(trail)
    fresh = _appended(previous, state) if previous is not None else None
    has_conflict = system not in PAIR_SYSTEMS
    checked: List[str] = []
    violations: List[Tuple[str, str]] = []
    skipped: List[Tuple[str, str]] = []

    def record(name: str, holds: bool, detail: str) -> None:
        checked.append(name)
        if not holds:
            violations.append((name, detail))

    record("consistent", is_consistent(values), "trail contains a literal and its opposite")
    record("distinct", is_distinct(values), "trail repeats a literal")
    record("varsM", {abs(l) for l in values} <= vbl, "trail variable outside Vars")
    record("varsF", vars_of(state_formula(state, f0) if fresh is None else fresh) <= vbl,
           "formula variable outside Vars")
    if has_conflict:
        record("Cfalse", not state.conflict or clause_false(state.conflict_clause, values),
               f"C = {list(state.conflict_clause)} is not false in M")

    oracle_checks = ["impliedLits", "equiv"] + (["Centailed", "reasonClauses"] if has_conflict else [])
    if not config.oracle_checks:
        skipped.extend((name, "oracle checks disabled") for name in oracle_checks)
        return InvariantReport(tuple(checked), tuple(violations), tuple(skipped))

    budget = config.oracle_budget
    formula = state_formula(state, f0)
    for name in oracle_checks:
        try:
            if name == "impliedLits":
                bad = [e.literal for e in trail
                       if not oracle.entails(formula + valuation_to_formula(decisions_to(e.literal, trail)),
                                             (e.literal,), budget)]
                record(name, not bad, f"literals not implied by F and their decisions: {bad}")
            elif name == "equiv":
                record(name, oracle.equivalent(formula, f0, budget), "F is not equivalent to F0")
            elif name == "Centailed":
                record(name, not state.conflict or oracle.entails(formula, state.conflict_clause, budget),
                       f"C = {list(state.conflict_clause)} is not entailed")
            else:
                problem = _reason_clauses_hold(formula, trail, budget)
                record(name, problem is None, problem or "")
        except OracleBudgetError as e:
            skipped.append((name, str(e)))
    return InvariantReport(tuple(checked), tuple(violations), tuple(skipped))


# ---------------------------------------------------------------------------
# Step certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepCertificate:
    rule: RuleInstance
    state: State
    measure: MeasureVerdict
    invariants: InvariantReport = field(default_factory=InvariantReport)

    @property
    def ok(self) -> bool:
        return self.invariants.ok and (self.measure.decreased or not self.measure.well_founded)

    @property
    def reason(self) -> str:
        if self.invariants.violations:
            name, detail = self.invariants.violations[0]
            return f"invariant {name} violated: {detail}"
        if self.measure.well_founded and not self.measure.decreased:
            return f"measure did not decrease: {self.measure.detail}"
        return ""


def _compare_states(expected: State, actual: State) -> None:
    for name in ("trail", "formula", "learnt", "conflict_clause", "conflict", "learnt_flag"):
        if not hasattr(expected, name):
            continue
        want, got = getattr(expected, name), getattr(actual, name)
        if name == "conflict_clause":
            same = frozenset(want) == frozenset(got)
        else:
            same = want == got
        if not same:
            raise CertificationError(name, want, got)


def certify_step(system: System, before: State, after: Optional[State], r: RuleInstance,
                 f0: Formula, config: SolverConfig, index: Optional[ClauseIndex] = None) -> StepCertificate:
    """
    Certify one step.

    Args:
        system: Rule system
        before: State the step starts from
        after: Recorded successor, or None to take the rule's own result
        r: Rule instance
        f0: Initial formula
        config: Decision variables, oracle settings and certified clauses
        index: Mirror of before's formula and trail, left for the caller to advance;
            when given, before is taken to satisfy the invariants already

    Returns:
        StepCertificate with the measure verdict and invariant report

    Raises:
        RejectedStepError: If r's guard does not hold in before
        UncertifiableEntailmentError: If an entailment guard cannot be decided
        CertificationError: If after differs from the rule's result
    """
    produced = apply(system, before, r, f0, config, index)
    if after is not None:
        _compare_states(after, produced)
    verdict = measure_decreased(system, before, produced, f0, config, index)
    report = check_invariants(system, produced, f0, config, before if index is not None else None)
    return StepCertificate(r, produced, verdict, report)


# ---------------------------------------------------------------------------
# Bounded searches
# ---------------------------------------------------------------------------

def all_distinct_trails(variables: Sequence[int]) -> Iterator[Trail]:
    """Every trail over the given variables whose literal list has no repetition."""
    literals = [s * v for v in sorted(variables) for s in (1, -1)]
    for size in range(len(literals) + 1):
        for picked in permutations(literals, size):
            for flags in product((False, True), repeat=size):
                yield tuple(TrailEntry(l, d) for l, d in zip(picked, flags))


def descent_graph(items: Iterable[Hashable], greater: Callable[[Hashable, Hashable], bool]) -> nx.DiGraph:
    """Directed graph with an edge a → b whenever a ≻ b."""
    nodes = list(items)
    graph = nx.DiGraph()
    graph.add_nodes_from(nodes)
    graph.add_edges_from((a, b) for a in nodes for b in nodes if greater(a, b))
    return graph


def find_descending_cycle(items: Iterable[Hashable],
                          greater: Callable[[Hashable, Hashable], bool]) -> Optional[List[Hashable]]:
    """A cycle a1 ≻ a2 ≻ … ≻ a1 among items, or None when the relation is acyclic there."""
    try:
        edges = nx.find_cycle(descent_graph(items, greater))
    except nx.NetworkXNoCycle:
        return None
    return [a for a, _ in edges]


def longest_descending_chain(items: Iterable[Hashable],
                             greater: Callable[[Hashable, Hashable], bool]) -> List[Hashable]:
    """
    Raises:
        PreconditionError: If the relation has a cycle on items
    """
    graph = descent_graph(items, greater)
    if not nx.is_directed_acyclic_graph(graph):
        raise PreconditionError("relation is cyclic on the given items")
    return nx.dag_longest_path(graph)
