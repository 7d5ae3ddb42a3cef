"""
Incremental clause status index.

ClauseIndex mirrors a formula (F, or F0 @ Fl) and a trail. Each clause keeps
the number of its distinct literals that are true and false, so assigning or
unassigning a literal only touches the clauses in that literal's occurrence
lists. The index answers the formula-wide guard questions (is some clause
unit, is some clause false, is c a member) without scanning the formula.
"""

from collections import Counter
from typing import Dict, FrozenSet, Iterable, List, Optional, Set

from satrules.core import Clause, Literal, Trail
from satrules.errors import InternalInvariantError

FALSE, UNIT, OPEN, TRUE = range(4)


class ClauseIndex:
    """Clause ids, occurrence lists and per-clause counters for one formula and one trail."""

    def __init__(self, formula: Iterable[Clause] = ()):
        self.clauses: Dict[int, Clause] = {}
        self.occurs: Dict[Literal, Set[int]] = {}
        self.value: Dict[int, Literal] = {}
        self.false_ids: Set[int] = set()
        self.unit_ids: Set[int] = set()
        self.members: Counter = Counter()
        self.by_set: Dict[FrozenSet[int], List[int]] = {}
        self._size: Dict[int, int] = {}
        self._true: Dict[int, int] = {}
        self._false: Dict[int, int] = {}
        self._next_id = 0
        for c in formula:
            self.add(c)

    def __len__(self) -> int:
        return len(self.clauses)

    # -- status ------------------------------------------------------------

    def status(self, cid: int) -> int:
        if self._true[cid]:
            return TRUE
        undefined = self._size[cid] - self._false[cid]
        if undefined == 0:
            return FALSE
        return UNIT if undefined == 1 else OPEN

    def _file(self, cid: int) -> None:
        status = self.status(cid)
        if status == FALSE:
            self.false_ids.add(cid)
        else:
            self.false_ids.discard(cid)
        if status == UNIT:
            self.unit_ids.add(cid)
        else:
            self.unit_ids.discard(cid)

    def has_unit(self) -> bool:
        return bool(self.unit_ids)

    def has_false(self) -> bool:
        return bool(self.false_ids)

    def contains(self, c: Clause) -> bool:
        """c ∈ F as a literal list."""
        return self.members[tuple(c)] > 0

    def contains_set(self, c: Clause) -> bool:
        """Some clause of F has the same literal set as c."""
        return bool(self.by_set.get(frozenset(c)))

    def find_set(self, c: Clause) -> Optional[Clause]:
        ids = self.by_set.get(frozenset(c))
        return self.clauses[ids[0]] if ids else None

    def unit_of(self, cid: int) -> Literal:
        """
        Raises:
            InternalInvariantError: If the clause has no undefined literal
        """
        for x in self.clauses[cid]:
            if abs(x) not in self.value:
                return x
        raise InternalInvariantError(f"clause {cid} is not unit")

    # -- formula -----------------------------------------------------------

    def add(self, c: Clause) -> int:
        c = tuple(c)
        cid = self._next_id
        self._next_id += 1
        self.clauses[cid] = c
        distinct = set(c)
        self._size[cid] = len(distinct)
        self._true[cid] = 0
        self._false[cid] = 0
        for x in distinct:
            self.occurs.setdefault(x, set()).add(cid)
            val = self.value.get(abs(x))
            if val == x:
                self._true[cid] += 1
            elif val is not None:
                self._false[cid] += 1
        self.members[c] += 1
        self.by_set.setdefault(frozenset(c), []).append(cid)
        self._file(cid)
        return cid

    def remove(self, cid: int) -> Clause:
        c = self.clauses.pop(cid)
        for x in set(c):
            self.occurs[x].discard(cid)
        for table in (self._size, self._true, self._false):
            del table[cid]
        self.false_ids.discard(cid)
        self.unit_ids.discard(cid)
        self.members[c] -= 1
        if not self.members[c]:
            del self.members[c]
        key = frozenset(c)
        self.by_set[key].remove(cid)
        if not self.by_set[key]:
            del self.by_set[key]
        return c

    def remove_clause(self, c: Clause) -> None:
        """Remove one occurrence of the literal list c, the most recently added."""
        c = tuple(c)
        for cid in reversed(self.by_set.get(frozenset(c), [])):
            if self.clauses[cid] == c:
                self.remove(cid)
                return
        raise InternalInvariantError(f"clause {list(c)} is not indexed")

    def sync_formula(self, old: Iterable[Clause], new: Iterable[Clause]) -> None:
        """Bring the indexed clause multiset from old to new."""
        old, new = tuple(old), tuple(new)
        if new[:len(old)] == old:
            for c in new[len(old):]:
                self.add(c)
            return
        delta = Counter(new)
        delta.subtract(Counter(old))
        for c, count in delta.items():
            for _ in range(-count):
                self.remove_clause(c)
            for _ in range(count):
                self.add(c)

    # -- trail -------------------------------------------------------------

    def assign(self, l: Literal) -> None:
        self.value[abs(l)] = l
        for cid in self.occurs.get(l, ()):
            self._true[cid] += 1
            self._file(cid)
        for cid in self.occurs.get(-l, ()):
            self._false[cid] += 1
            self._file(cid)

    def unassign(self, l: Literal) -> None:
        if self.value.get(abs(l)) != l:
            return
        del self.value[abs(l)]
        for cid in self.occurs.get(l, ()):
            self._true[cid] -= 1
            self._file(cid)
        for cid in self.occurs.get(-l, ()):
            self._false[cid] -= 1
            self._file(cid)

    def sync_trail(self, old: Trail, new: Trail) -> List[Literal]:
        """
        Unassign everything past the common prefix of old and new, then
        assign the rest of new.

        Returns:
            The unassigned literals, latest first
        """
        common = 0
        for a, b in zip(old, new):
            if a != b:
                break
            common += 1
        dropped = [entry.literal for entry in reversed(old[common:])]
        for l in dropped:
            self.unassign(l)
        for entry in new[common:]:
            if abs(entry.literal) not in self.value:
                self.assign(entry.literal)
        return dropped
