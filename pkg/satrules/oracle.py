"""
Brute-force truth-table semantics: satisfiability, entailment, equivalence.

Deliberately dumb. Every query enumerates all total valuations of the
variables involved, as a numpy bit table, so results can be trusted as
ground truth for the invariant checks.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

from satrules.config import ORACLE_BUDGET
from satrules.core import (
    Clause,
    Formula,
    Valuation,
    formula_true,
    is_consistent,
    vars_of,
)
from satrules.errors import OracleBudgetError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleResult:
    satisfiable: bool
    model: Optional[Valuation] = None


@lru_cache(maxsize=64)
def _columns(variables: Tuple[int, ...]) -> Tuple[np.ndarray, ...]:
    # Row a assigns variables[j] the bit (n-1-j) of a, so row 0 is all-false
    # and rows are ordered lexicographically with the smallest variable first.
    n = len(variables)
    rows = np.arange(1 << n, dtype=np.int64)
    columns = []
    for j in range(n):
        column = ((rows >> (n - 1 - j)) & 1).astype(bool)
        column.setflags(write=False)
        columns.append(column)
    return tuple(columns)


@lru_cache(maxsize=256)
def _satisfying_rows(f: Formula, variables: Tuple[int, ...]) -> np.ndarray:
    columns = _columns(variables)
    index = {v: j for j, v in enumerate(variables)}
    mask = np.ones(1 << len(variables), dtype=bool)
    for clause in f:
        satisfied = np.zeros_like(mask)
        for l in clause:
            column = columns[index[abs(l)]]
            satisfied |= column if l > 0 else ~column
        mask &= satisfied
        if not mask.any():
            break
    mask.setflags(write=False)
    return mask


def _check_budget(variables: Tuple[int, ...], budget: int) -> None:
    if len(variables) > budget:
        raise OracleBudgetError(len(variables), budget)


def _row_to_valuation(row: int, variables: Tuple[int, ...]) -> Valuation:
    n = len(variables)
    return tuple(v if (row >> (n - 1 - j)) & 1 else -v for j, v in enumerate(variables))


def models(f: Formula, variables: Iterable[int], budget: int = ORACLE_BUDGET) -> Iterator[Valuation]:
    """
    Yield every model of f over the given variables in enumeration order.

    Raises:
        OracleBudgetError: If there are more variables than the budget allows
    """
    ordered = tuple(sorted(set(variables)))
    _check_budget(ordered, budget)
    for row in np.flatnonzero(_satisfying_rows(tuple(f), ordered)):
        yield _row_to_valuation(int(row), ordered)


def brute_sat(f: Formula, variables: Optional[Iterable[int]] = None, budget: int = ORACLE_BUDGET) -> OracleResult:
    """
    Exhaustive satisfiability check.

    Args:
        f: Formula to test
        variables: Variables to enumerate over, defaults to vars_of(f)
        budget: Maximum number of variables

    Returns:
        OracleResult with the first model in enumeration order (variable 1 false first)

    Raises:
        PreconditionError: If the variables do not cover vars_of(f)
        OracleBudgetError: If the budget is exceeded
    """
    f = tuple(f)
    ordered = tuple(sorted(set(variables) if variables is not None else vars_of(f)))
    missing = vars_of(f) - set(ordered)
    if missing:
        raise PreconditionError(f"bruteSat: variables {sorted(missing)} of the formula are not enumerated")
    _check_budget(ordered, budget)
    logger.debug("bruteSat over %d variables, %d clauses", len(ordered), len(f))
    rows = np.flatnonzero(_satisfying_rows(f, ordered))
    if len(rows) == 0:
        return OracleResult(False, None)
    return OracleResult(True, _row_to_valuation(int(rows[0]), ordered))


def _trivially_entailed(f: Formula, c: Clause) -> bool:
    # c tautological, or some clause of f subsumes c
    literals = set(c)
    if any(-l in literals for l in literals):
        return True
    return any(set(d) <= literals for d in f)


def entails(f: Formula, c: Clause, budget: int = ORACLE_BUDGET) -> bool:
    """
    True iff c is true in every model of f over vars(f) ∪ vars(c).

    Raises:
        OracleBudgetError: If the combined variable count exceeds the budget
            and membership/subsumption does not settle the query
    """
    f, c = tuple(f), tuple(c)
    if _trivially_entailed(f, c):
        return True
    ordered = tuple(sorted(vars_of(f) | vars_of(c)))
    _check_budget(ordered, budget)
    violated = _satisfying_rows(f, ordered) & ~_satisfying_rows((c,), ordered)
    return not violated.any()


def entails_literal(f: Formula, l: int, budget: int = ORACLE_BUDGET) -> bool:
    return entails(f, (l,), budget)


def entails_valuation(f: Formula, v: Valuation, budget: int = ORACLE_BUDGET) -> bool:
    return all(entails(f, (l,), budget) for l in v)


def entails_formula(f: Formula, g: Formula, budget: int = ORACLE_BUDGET) -> bool:
    return all(entails(f, c, budget) for c in g)


def equivalent(f1: Formula, f2: Formula, budget: int = ORACLE_BUDGET) -> bool:
    """Mutual entailment, decided on one truth table over the union of variables."""
    f1, f2 = tuple(f1), tuple(f2)
    ordered = tuple(sorted(vars_of(f1) | vars_of(f2)))
    _check_budget(ordered, budget)
    return bool(np.array_equal(_satisfying_rows(f1, ordered), _satisfying_rows(f2, ordered)))


def is_model(v: Valuation, f: Formula) -> bool:
    return is_consistent(v) and formula_true(f, v)
