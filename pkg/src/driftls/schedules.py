"""Step-size and regularisation schedules.

Both are small frozen dataclasses evaluated by step index / sample count, and
both can render a whole block of values at once so the hot loops never call
back into Python per step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STEP_KINDS = ("theorem1", "generic", "constant")
REG_KINDS = ("power", "inverse", "constant", "zero")


@dataclass(frozen=True)
class StepSchedule:
    """gamma_n for the SGD trackers.

    kinds:
      theorem1  gamma_n = c / (4 (c + n)); always in (0, 1/4).
      generic   gamma_n = gamma0 / (c1 + n). Covers the table-style 1/(100+n)
                (gamma0=1, c1=100) and the legacy c/n (gamma0=c, c1=0). Early
                values may exceed 1 when gamma0 > c1 + 1; that mode is kept
                deliberately, so only positivity is validated here.
      constant  gamma_n = gamma0, validated to lie in (0, 1).
    """

    kind: str = "theorem1"
    c: float = 8.0
    c1: float = 0.0
    gamma0: float = 0.1

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValueError(f"unknown step schedule kind {self.kind!r}")
        if self.kind == "theorem1" and self.c <= 0:
            raise ValueError("theorem1 schedule needs c > 0")
        if self.kind == "generic" and (self.gamma0 <= 0 or self.c1 < 0):
            raise ValueError("generic schedule needs gamma0 > 0 and c1 >= 0")
        if self.kind == "constant" and not (0.0 < self.gamma0 < 1.0):
            raise ValueError("constant schedule needs gamma0 in (0, 1)")

    def __call__(self, n: int) -> float:
        if n < 1:
            raise ValueError("step index starts at 1")
        if self.kind == "theorem1":
            return self.c / (4.0 * (self.c + n))
        if self.kind == "generic":
            return self.gamma0 / (self.c1 + n)
        return self.gamma0

    def values(self, start: int, count: int) -> np.ndarray:
        """gamma for steps start+1 .. start+count (block evaluation)."""
        n = np.arange(start + 1, start + count + 1, dtype=np.float64)
        if self.kind == "theorem1":
            return self.c / (4.0 * (self.c + n))
        if self.kind == "generic":
            return self.gamma0 / (self.c1 + n)
        return np.full(count, self.gamma0)

    @classmethod
    def theorem1(cls, c: float) -> "StepSchedule":
        return cls(kind="theorem1", c=c)

    @classmethod
    def generic(cls, gamma0: float, c1: float) -> "StepSchedule":
        return cls(kind="generic", gamma0=gamma0, c1=c1)

    @classmethod
    def constant(cls, gamma0: float) -> "StepSchedule":
        return cls(kind="constant", gamma0=gamma0)


@dataclass(frozen=True)
class RegSchedule:
    """lambda_n, evaluated at the current buffer length.

    kinds:
      power     lambda_n = value * n^{-(1-alpha)}, alpha in (0, 1)
      inverse   lambda_n = value / n
      constant  lambda_n = value
      zero      lambda_n = 0
    """

    kind: str = "power"
    alpha: float = 0.6
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in REG_KINDS:
            raise ValueError(f"unknown regularisation kind {self.kind!r}")
        if self.kind == "power" and not (0.0 < self.alpha < 1.0):
            raise ValueError("power schedule needs alpha in (0, 1)")
        if self.kind != "zero" and self.value < 0:
            raise ValueError("regularisation weight must be >= 0")

    def __call__(self, n: int) -> float:
        if n < 1:
            raise ValueError("sample count starts at 1")
        if self.kind == "power":
            return self.value * float(n) ** (self.alpha - 1.0)
        if self.kind == "inverse":
            return self.value / n
        if self.kind == "constant":
            return self.value
        return 0.0

    def values(self, ns: np.ndarray) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.float64)
        if self.kind == "power":
            return self.value * ns ** (self.alpha - 1.0)
        if self.kind == "inverse":
            return self.value / ns
        if self.kind == "constant":
            return np.full(ns.shape, self.value)
        return np.zeros(ns.shape)

    @classmethod
    def power(cls, alpha: float, value: float = 1.0) -> "RegSchedule":
        return cls(kind="power", alpha=alpha, value=value)

    @classmethod
    def inverse(cls, value: float = 1.0) -> "RegSchedule":
        return cls(kind="inverse", value=value)

    @classmethod
    def constant(cls, value: float) -> "RegSchedule":
        return cls(kind="constant", value=value)

    @classmethod
    def zero(cls) -> "RegSchedule":
        return cls(kind="zero", value=0.0)
