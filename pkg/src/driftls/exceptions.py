"""Exception types shared across the package.

The split matters operationally: contract violations (bad arguments) are
``ValueError``s, querying state that is not established yet is ``NotReadyError``
(a ``NotFittedError``, so sklearn-aware tooling recognizes it), and genuine
numerical breakdowns get their own classes so callers can tell "you asked too
early" apart from "the arithmetic failed".
"""
from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


class NotReadyError(NotFittedError):
    """Raised when a solution is requested before the state can support one."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a factorization fails on input required to be SPD."""


class DegenerateUpdateError(ArithmeticError):
    """Raised when a rank-1 inverse update hits a vanishing denominator."""


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


class EventLogError(ValueError):
    """Malformed event-log line; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
