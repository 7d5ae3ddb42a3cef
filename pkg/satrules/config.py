"""
Solver configuration: module defaults, optional dotenv-format settings file,
and the SolverConfig value handed to rules, orderings and the engine.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Optional

from dotenv import dotenv_values

from satrules.errors import ConfigError

logger = logging.getLogger(__name__)

# Defaults
ORACLE_BUDGET = 20
STEP_BUDGET = 10 ** 7
STRICT_DIMACS = False
ORACLE_CHECKS = False
STRICT_FORGET = True

_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True,
               "0": False, "false": False, "no": False, "off": False}


@dataclass(frozen=True)
class Settings:
    """Values read from a settings file, falling back to the module defaults."""
    oracle_budget: int = ORACLE_BUDGET
    step_budget: int = STEP_BUDGET
    strict_dimacs: bool = STRICT_DIMACS
    oracle_checks: bool = ORACLE_CHECKS
    strict_forget: bool = STRICT_FORGET


def _parse_int(key: str, raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}")
    if value < 0:
        raise ConfigError(f"{key} must not be negative, got {value}")
    return value


def _parse_bool(key: str, raw: str) -> bool:
    word = raw.strip().lower()
    if word not in _BOOL_WORDS:
        raise ConfigError(f"{key} must be a boolean, got {raw!r}")
    return _BOOL_WORDS[word]


def load_settings(path: Optional[str] = None) -> Settings:
    """
    Read settings from a dotenv-format file.

    Only the file is consulted, never the process environment.

    Args:
        path: Settings file, or None for the defaults

    Returns:
        Settings instance

    Raises:
        ConfigError: If a value cannot be parsed or the key is unknown
    """
    if path is None:
        return Settings()

    values: Dict[str, Optional[str]] = dotenv_values(path)
    settings = Settings()
    readers = {
        "ORACLE_BUDGET": ("oracle_budget", _parse_int),
        "STEP_BUDGET": ("step_budget", _parse_int),
        "STRICT_DIMACS": ("strict_dimacs", _parse_bool),
        "ORACLE_CHECKS": ("oracle_checks", _parse_bool),
        "STRICT_FORGET": ("strict_forget", _parse_bool),
    }
    for key, raw in values.items():
        if key not in readers:
            raise ConfigError(f"unknown setting {key} in {path}")
        if raw is None:
            continue
        name, reader = readers[key]
        settings = replace(settings, **{name: reader(key, raw)})
    logger.info("loaded settings from %s", path)
    return settings


@dataclass(frozen=True)
class SolverConfig:
    """
    Parameters shared by rule application, certification and the engine.

    certified holds clauses (as literal sets) known to be entailed by the
    initial formula, e.g. resolution-derived ones; entailment guards accept
    them without consulting the oracle.
    """
    dec_vars: FrozenSet[int] = frozenset()
    oracle_budget: int = ORACLE_BUDGET
    oracle_checks: bool = ORACLE_CHECKS
    strict_forget: bool = STRICT_FORGET
    step_budget: int = STEP_BUDGET
    certified: FrozenSet[FrozenSet[int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if any(v < 1 for v in self.dec_vars):
            raise ConfigError(f"decision variables must be positive: {sorted(self.dec_vars)}")
        if self.oracle_budget < 0 or self.step_budget < 0:
            raise ConfigError("budgets must not be negative")

    @classmethod
    def for_formula(cls, formula: Iterable, declared_vars: int = 0,
                    settings: Optional[Settings] = None, **overrides) -> "SolverConfig":
        """decVars = variables of the formula plus every declared variable 1..declared_vars."""
        settings = settings or Settings()
        dec_vars = {abs(l) for clause in formula for l in clause}
        dec_vars.update(range(1, declared_vars + 1))
        values = dict(
            dec_vars=frozenset(dec_vars),
            oracle_budget=settings.oracle_budget,
            oracle_checks=settings.oracle_checks,
            strict_forget=settings.strict_forget,
            step_budget=settings.step_budget,
        )
        values.update(overrides)
        return cls(**values)

    def with_certified(self, clauses: Iterable) -> "SolverConfig":
        return replace(self, certified=self.certified | {frozenset(c) for c in clauses})
