"""Domain vocabulary: settings, bits, instruction cards, switching and delay policies."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


class Setting(enum.IntEnum):
    """Detector position. ``S1``/``S2`` map to array index 0/1 via :attr:`index`."""

    S1 = 1
    S2 = 2

    @property
    def index(self) -> int:
        return self.value - 1

    @classmethod
    def from_index(cls, i: int) -> Setting:
        return cls(int(i) + 1)

    def __str__(self) -> str:
        return self.name


SETTINGS = (Setting.S1, Setting.S2)


def other(s: Setting) -> Setting:
    """The setting that is not ``s``."""
    return Setting.S2 if s is Setting.S1 else Setting.S1


def check_bit(b: int) -> int:
    if b not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {b!r}")
    return int(b)


class CorrelationKind(enum.Enum):
    SAME = "same"
    ANTI = "anti"

    @classmethod
    def of(cls, out_a: int, out_b: int) -> CorrelationKind:
        return cls.ANTI if out_a != out_b else cls.SAME

    @property
    def bit(self) -> int:
        """1 for anti-correlation, matching ``out_a ^ out_b``."""
        return 1 if self is CorrelationKind.ANTI else 0


def desired_correlation(i: Setting, j: Setting) -> CorrelationKind:
    """Correlation that raises S in cell (i, j).

    The three plus-terms of S want anti-correlated outputs, the single
    minus-term (S2, S2) wants equal outputs.
    """
    if i is Setting.S2 and j is Setting.S2:
        return CorrelationKind.SAME
    return CorrelationKind.ANTI


@dataclass(frozen=True)
class TargetPair:
    target_a: Setting
    target_b: Setting

    def __str__(self) -> str:
        return f"{self.target_a.value}{self.target_b.value}"


TARGET_PAIRS = tuple(TargetPair(a, b) for a in SETTINGS for b in SETTINGS)


@dataclass(frozen=True)
class InstructionCard:
    """What a particle carries: its target setting and an output bit per setting."""

    target: Setting
    out_s1: int
    out_s2: int

    def __post_init__(self):
        check_bit(self.out_s1)
        check_bit(self.out_s2)

    def out(self, s: Setting) -> int:
        return self.out_s1 if s is Setting.S1 else self.out_s2

    @property
    def outs(self) -> tuple[int, int]:
        return (self.out_s1, self.out_s2)


@dataclass(frozen=True)
class PairProgram:
    card_a: InstructionCard
    card_b: InstructionCard

    @property
    def targets(self) -> TargetPair:
        return TargetPair(self.card_a.target, self.card_b.target)


@dataclass(frozen=True)
class SwitchModel:
    """Per-time-step probability ``p`` that a detector flips its setting."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"switch probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class NoDelay:
    """Output immediately at whatever setting is found."""

    def __str__(self) -> str:
        return "none"


@dataclass(frozen=True)
class FixedDelay:
    """Off-target particles wait exactly ``steps`` time steps, then output."""

    steps: int = 1

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"delay steps must be a positive integer, got {self.steps!r}")

    def __str__(self) -> str:
        return f"fixed:{self.steps}"


@dataclass(frozen=True)
class WaitUntilTarget:
    """Off-target particles re-inspect after every step, giving up after ``max_steps``."""

    max_steps: int = 1

    def __post_init__(self):
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps!r}")

    def __str__(self) -> str:
        return f"wait:{self.max_steps}"


DelayPolicy = Union[NoDelay, FixedDelay, WaitUntilTarget]


def parse_policy(text: str) -> DelayPolicy:
    """Parse ``none``, ``fixed:<D>`` or ``wait:<max>``."""
    text = text.strip().lower()
    if text == "none":
        return NoDelay()
    kind, sep, arg = text.partition(":")
    if not sep or kind not in ("fixed", "wait"):
        raise ValueError(f"unknown policy {text!r} (expected none, fixed:<D> or wait:<max>)")
    try:
        n = int(arg)
    except ValueError:
        raise ValueError(f"policy step count must be an integer, got {arg!r}") from None
    return FixedDelay(n) if kind == "fixed" else WaitUntilTarget(n)
