"""
DIMACS CNF reading and writing, plus the competition-style answer lines.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

from satrules.core import Formula, Valuation
from satrules.errors import DimacsError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DimacsProblem:
    declared_vars: int
    declared_clauses: int
    formula: Formula


def _parse_header(line: str, line_number: int) -> (int, int):
    parts = line.split()
    if len(parts) != 4 or parts[1] != "cnf":
        raise DimacsError(line_number, f"malformed problem line {line.strip()!r}")
    try:
        declared_vars, declared_clauses = int(parts[2]), int(parts[3])
    except ValueError:
        raise DimacsError(line_number, f"non-numeric problem line {line.strip()!r}")
    if declared_vars < 0 or declared_clauses < 0:
        raise DimacsError(line_number, "negative counts in problem line")
    return declared_vars, declared_clauses


def parse_dimacs(text: str, strict: bool = False) -> DimacsProblem:
    """
    Parse DIMACS CNF text.

    Comment lines start with 'c'. Clauses are zero-terminated and may span
    lines. Duplicate literals, duplicate clauses and tautologies are kept.

    Args:
        text: File contents
        strict: Reject variables above the declared count instead of warning

    Returns:
        DimacsProblem

    Raises:
        DimacsError: Missing header, bad token, undeclared variable in strict
            mode, or an unterminated final clause
    """
    header = None
    clauses: List[tuple] = []
    current: List[int] = []
    last_line = 0
    widest = 0

    for line_number, line in enumerate(text.splitlines(), start=1):
        last_line = line_number
        stripped = line.strip()
        if not stripped or stripped.startswith("c"):
            continue
        if stripped.startswith("p"):
            if header is not None:
                raise DimacsError(line_number, "second problem line")
            header = _parse_header(stripped, line_number)
            continue
        if stripped.startswith("%"):
            # Some benchmark sets end with "%\n0\n"
            break
        if header is None:
            raise DimacsError(line_number, "clause before the problem line")
        for token in stripped.split():
            try:
                literal = int(token)
            except ValueError:
                raise DimacsError(line_number, f"not a literal: {token!r}")
            if literal == 0:
                clauses.append(tuple(current))
                current = []
                continue
            if abs(literal) > header[0]:
                if strict:
                    raise DimacsError(line_number, f"variable {abs(literal)} exceeds declared {header[0]}")
                widest = max(widest, abs(literal))
            current.append(literal)

    if header is None:
        raise DimacsError(max(last_line, 1), "missing problem line 'p cnf V C'")
    if current:
        raise DimacsError(last_line, "unterminated final clause")

    declared_vars, declared_clauses = header
    if widest:
        logger.warning("variables up to %d used but only %d declared", widest, declared_vars)
    if len(clauses) != declared_clauses:
        logger.warning("header declares %d clauses, read %d", declared_clauses, len(clauses))
    return DimacsProblem(declared_vars, declared_clauses, tuple(clauses))


def read_dimacs(path: str, strict: bool = False) -> DimacsProblem:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_dimacs(handle.read(), strict)


def format_dimacs(f: Formula, declared_vars: Optional[int] = None, comment: str = "") -> str:
    variables = max((abs(l) for c in f for l in c), default=0)
    lines = [f"c {comment}"] if comment else []
    lines.append(f"p cnf {max(variables, declared_vars or 0)} {len(f)}")
    lines.extend(" ".join(str(l) for l in c) + (" 0" if c else "0") for c in f)
    return "\n".join(lines) + "\n"


def format_answer(satisfiable: bool, model: Sequence[int] = (), width: int = 10) -> str:
    """'s SATISFIABLE' plus 'v' lines ending in 0, or 's UNSATISFIABLE'."""
    if not satisfiable:
        return "s UNSATISFIABLE\n"
    literals: Valuation = tuple(sorted(model, key=abs))
    lines = ["s SATISFIABLE"]
    for start in range(0, len(literals), width):
        lines.append("v " + " ".join(str(l) for l in literals[start:start + width]))
    lines.append("v 0")
    return "\n".join(lines) + "\n"
