"""
CNF data model and trail/valuation semantics.

Literals are DIMACS signed integers, clauses and formulae are tuples that may
contain duplicates, and a trail is a tuple of (literal, decision) entries.
Everything here is a pure function over immutable values.
"""

from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Sequence, Set, Tuple, Union

from satrules.errors import PreconditionError

Literal = int
Clause = Tuple[Literal, ...]
Formula = Tuple[Clause, ...]
Valuation = Tuple[Literal, ...]


class TrailEntry(NamedTuple):
    literal: Literal
    decision: bool = False


Trail = Tuple[TrailEntry, ...]


def format_entry(entry: TrailEntry) -> str:
    """Render a trail entry the way the examples print it, e.g. "+4•"."""
    mark = "•" if entry.decision else ""
    return f"{entry.literal:+d}{mark}"


def format_trail(trail: Trail) -> str:
    return "[" + ", ".join(format_entry(e) for e in trail) + "]"


def make_clause(literals: Iterable[int]) -> Clause:
    """
    Build a clause from signed integers.

    Raises:
        PreconditionError: If a literal has variable 0
    """
    clause = tuple(int(l) for l in literals)
    if any(l == 0 for l in clause):
        raise PreconditionError(f"literal with variable 0 in clause {list(clause)}")
    return clause


def make_formula(clauses: Iterable[Iterable[int]]) -> Formula:
    return tuple(make_clause(c) for c in clauses)


def make_trail(literals: Iterable[Union[int, Tuple[int, bool]]]) -> Trail:
    """
    Build a trail from literals or (literal, decision) pairs.

    A bare int is a non-decision entry, so make_trail([1, (2, True)]) is [+1, +2•].
    """
    entries = []
    for item in literals:
        if isinstance(item, tuple):
            entries.append(TrailEntry(int(item[0]), bool(item[1])))
        else:
            entries.append(TrailEntry(int(item), False))
    return tuple(entries)


def opposite(l: Literal) -> Literal:
    return -l


def variable(l: Literal) -> int:
    return abs(l)


def elements(trail: Trail) -> Valuation:
    """The literal list underlying a trail."""
    return tuple(e.literal for e in trail)


def vars_of(x: Union[Clause, Formula, Valuation, Trail]) -> Set[int]:
    """Variables of a clause, formula, valuation or trail."""
    result: Set[int] = set()
    for item in x:
        if isinstance(item, TrailEntry):
            result.add(abs(item.literal))
        elif isinstance(item, tuple) or isinstance(item, list):
            result.update(abs(l) for l in item)
        else:
            result.add(abs(item))
    return result


def literal_true(l: Literal, v: Sequence[Literal]) -> bool:
    return l in v


def literal_false(l: Literal, v: Sequence[Literal]) -> bool:
    return -l in v


def clause_true(c: Clause, v: Sequence[Literal]) -> bool:
    s = set(v)
    return any(l in s for l in c)


def clause_false(c: Clause, v: Sequence[Literal]) -> bool:
    s = set(v)
    return all(-l in s for l in c)


def formula_true(f: Formula, v: Sequence[Literal]) -> bool:
    s = set(v)
    return all(any(l in s for l in c) for c in f)


def formula_false(f: Formula, v: Sequence[Literal]) -> bool:
    s = set(v)
    return any(all(-l in s for l in c) for c in f)


def is_consistent(v: Sequence[Literal]) -> bool:
    s = set(v)
    return not any(-l in s for l in s)


def is_distinct(v: Sequence[Literal]) -> bool:
    return len(set(v)) == len(v)


def is_total(v: Sequence[Literal], variables: Iterable[int]) -> bool:
    defined = {abs(l) for l in v}
    return all(x in defined for x in variables)


def remove_literal(c: Clause, l: Literal) -> Clause:
    """c ∖ l: every occurrence of l removed."""
    return tuple(x for x in c if x != l)


def negate_clause(c: Clause) -> Valuation:
    return tuple(-l for l in c)


def remove_duplicates(c: Sequence[Literal]) -> Clause:
    """Keep the first occurrence of each literal."""
    return tuple(dict.fromkeys(c))


def clause_set(c: Clause) -> FrozenSet[Literal]:
    return frozenset(c)


def formula_contains_set(f: Formula, c: Clause) -> bool:
    """Membership with clauses compared as literal sets."""
    target = frozenset(c)
    return any(frozenset(d) == target for d in f)


def is_unit(c: Clause, l: Literal, v: Sequence[Literal]) -> bool:
    """l ∈ c, l undefined in v and every other literal of c false in v."""
    if l not in c:
        return False
    s = set(v)
    if l in s or -l in s:
        return False
    return all(-x in s for x in c if x != l)


def first_positions(v: Sequence[Literal]) -> Dict[Literal, int]:
    positions: Dict[Literal, int] = {}
    for i, l in enumerate(v):
        positions.setdefault(l, i)
    return positions


def first_pos(l: Literal, v: Sequence[Literal]) -> int:
    """
    Index of the first occurrence of l in v.

    Raises:
        PreconditionError: If l does not occur in v
    """
    try:
        return list(v).index(l)
    except ValueError:
        raise PreconditionError(f"literal {l:+d} does not occur")


def precedes(l1: Literal, l2: Literal, v: Sequence[Literal]) -> bool:
    """Both occur and l1's first occurrence is strictly before l2's."""
    positions = first_positions(v)
    return l1 in positions and l2 in positions and positions[l1] < positions[l2]


def is_reason(c: Clause, l: Literal, v: Sequence[Literal]) -> bool:
    """l ∈ c is true in v and every other literal of c is false and asserted before l."""
    if l not in c:
        return False
    positions = first_positions(v)
    if l not in positions:
        return False
    at = positions[l]
    for x in c:
        if x == l:
            continue
        if -x not in positions or positions[-x] >= at:
            return False
    return True


def resolvent(c1: Clause, c2: Clause, l: Literal) -> Clause:
    """(c1 ∖ l) @ (c2 ∖ opposite l) with duplicate literals removed."""
    return remove_duplicates(remove_literal(c1, l) + remove_literal(c2, -l))


def clause_tautology(c: Clause) -> bool:
    s = set(c)
    return any(-l in s for l in s)


def decisions(trail: Trail) -> List[Literal]:
    return [e.literal for e in trail if e.decision]


def current_level(trail: Trail) -> int:
    return sum(1 for e in trail if e.decision)


def last_decision(trail: Trail) -> Literal:
    """
    Raises:
        PreconditionError: If the trail has no decision entry
    """
    for e in reversed(trail):
        if e.decision:
            return e.literal
    raise PreconditionError("lastDecision of a trail without decisions")


def decisions_to(l: Literal, trail: Trail) -> List[Literal]:
    """Decision literals up to and including the first occurrence of l."""
    result = []
    for e in trail:
        if e.decision:
            result.append(e.literal)
        if e.literal == l:
            return result
    raise PreconditionError(f"literal {l:+d} does not occur in trail")


def levels(trail: Trail) -> Dict[Literal, int]:
    """Decision level of the first occurrence of every trail literal."""
    result: Dict[Literal, int] = {}
    count = 0
    for e in trail:
        if e.decision:
            count += 1
        result.setdefault(e.literal, count)
    return result


def level(l: Literal, trail: Trail) -> int:
    """
    Raises:
        PreconditionError: If l does not occur in the trail
    """
    table = levels(trail)
    if l not in table:
        raise PreconditionError(f"level of {l:+d}: literal does not occur in trail")
    return table[l]


def prefix_to_level(trail: Trail, lvl: int) -> Trail:
    """Maximal prefix whose entries all have level ≤ lvl."""
    count = 0
    for i, e in enumerate(trail):
        if e.decision:
            count += 1
            if count > lvl:
                return trail[:i]
    return trail


def prefix_before_last_decision(trail: Trail) -> Trail:
    for i in range(len(trail) - 1, -1, -1):
        if trail[i].decision:
            return trail[:i]
    return trail


def last_asserted_literal(c: Clause, trail: Trail) -> Literal:
    """
    The literal of c whose first occurrence in the trail is latest.

    Raises:
        PreconditionError: If no literal of c occurs in the trail
    """
    positions = first_positions(elements(trail))
    present = [l for l in c if l in positions]
    if not present:
        raise PreconditionError(f"lastAssertedLiteral: no literal of {list(c)} occurs in trail")
    return max(present, key=lambda x: positions[x])


def max_level(c: Clause, trail: Trail) -> int:
    table = levels(trail)
    present = [table[l] for l in c if l in table]
    if not present:
        raise PreconditionError(f"maxLevel: no literal of {list(c)} occurs in trail")
    return max(present)


def valuation_to_formula(v: Sequence[Literal]) -> Formula:
    return tuple((l,) for l in v)
