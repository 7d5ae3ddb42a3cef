"""
Exception hierarchy shared by every satrules module.
Command surface code maps these onto exit codes.
"""

from typing import Any, Dict, Optional


class SatRulesError(Exception):
    """Base class for all library errors."""


class PreconditionError(SatRulesError, ValueError):
    """An operation was called outside its documented precondition."""


class ConfigError(SatRulesError, ValueError):
    """Malformed solver configuration or strategy."""


class RejectedStepError(SatRulesError):
    """
    A rule instance whose guard does not hold in the given state.

    Args:
        rule: Name of the rule that was attempted
        guard: Name of the failed conjunct (e.g. "isUnit", "isBackjumpLevel")
        message: Optional extra detail
    """

    def __init__(self, rule: str, guard: str, message: str = ""):
        self.rule = rule
        self.guard = guard
        detail = f": {message}" if message else ""
        super().__init__(f"{rule} rejected, guard {guard} does not hold{detail}")


class UncertifiableEntailmentError(SatRulesError):
    """An entailment guard F ⊨ c could neither be certified nor refuted."""

    def __init__(self, rule: str, message: str):
        self.rule = rule
        self.guard = "uncertifiable entailment"
        super().__init__(f"{rule}: uncertifiable entailment: {message}")


class OracleBudgetError(SatRulesError):
    """The brute-force oracle refuses queries over too many variables."""

    def __init__(self, variables: int, budget: int):
        self.variables = variables
        self.budget = budget
        super().__init__(f"oracle refused: {variables} variables exceed budget {budget}")


class CertificationError(SatRulesError):
    """A recorded successor state differs from the one the rule produces."""

    def __init__(self, field: str, expected: Any, actual: Any):
        self.field = field
        super().__init__(f"successor mismatch in {field}: expected {expected!r}, got {actual!r}")


class InternalInvariantError(SatRulesError):
    """Solver bookkeeping broke an invariant (e.g. a missing reason clause)."""


class BudgetExceededError(SatRulesError):
    """The step budget ran out before an outcome state was reached."""

    def __init__(self, budget: int, stats: Optional[Dict[str, int]] = None):
        self.budget = budget
        self.stats = dict(stats or {})
        super().__init__(f"step budget of {budget} rule applications exceeded")


class TraceParseError(SatRulesError):
    """Malformed trace record."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"trace line {line_number}: {message}")


class DimacsError(SatRulesError):
    """Malformed DIMACS input."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"DIMACS line {line_number}: {message}")
