"""Instruction programs: the delay strategy's four instruction sets and static LHV tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chshdelay.core import (
    SETTINGS,
    TARGET_PAIRS,
    InstructionCard,
    PairProgram,
    Setting,
    TargetPair,
    check_bit,
)
from chshdelay.stats import s_from_fractions

# Outputs for x = 0, keyed by (target_a, target_b) indices:
# (out_a(S1), out_a(S2), out_b(S1), out_b(S2)). Every cell with at least one
# on-target particle gets its desired correlation; x is XORed onto all four.
_DELAY_TABLE = {
    (0, 0): (0, 0, 1, 1),
    (0, 1): (0, 1, 1, 1),
    (1, 0): (0, 0, 1, 0),
    (1, 1): (1, 0, 1, 0),
}


def delay_strategy_program(targets: TargetPair, x: int) -> PairProgram:
    x = check_bit(x)
    a1, a2, b1, b2 = (bit ^ x for bit in _DELAY_TABLE[targets.target_a.index, targets.target_b.index])
    return PairProgram(
        InstructionCard(targets.target_a, a1, a2),
        InstructionCard(targets.target_b, b1, b2),
    )


@dataclass(frozen=True)
class DelayStrategy:
    """The source picks uniform targets and a uniform bit x, then hands out the matching cards."""

    def program(self, targets: TargetPair, x: int) -> PairProgram:
        return delay_strategy_program(targets, x)

    def __str__(self) -> str:
        return "delay"


DELAY = DelayStrategy()


@dataclass(frozen=True)
class StaticTable:
    """Fixed outputs for settings A1, A2, B1, B2, independent of everything else."""

    a1: int
    a2: int
    b1: int
    b2: int

    def __post_init__(self):
        for b in (self.a1, self.a2, self.b1, self.b2):
            check_bit(b)

    @classmethod
    def parse(cls, text: str) -> StaticTable:
        """Parse a 4-character 0/1 string in order A1 A2 B1 B2, e.g. ``"1000"``."""
        if len(text) != 4 or any(ch not in "01" for ch in text):
            raise ValueError(f"static table must be 4 characters of 0/1, got {text!r}")
        return cls(*(int(ch) for ch in text))

    def __str__(self) -> str:
        return f"{self.a1}{self.a2}{self.b1}{self.b2}"

    def program(self, targets: TargetPair | None = None, x: int = 0) -> PairProgram:
        return static_program(self)


def static_program(table: StaticTable) -> PairProgram:
    # Targets are irrelevant without delay; S1 by convention.
    return PairProgram(
        InstructionCard(Setting.S1, table.a1, table.a2),
        InstructionCard(Setting.S1, table.b1, table.b2),
    )


def all_static_tables() -> list[StaticTable]:
    return [StaticTable((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1) for k in range(16)]


def static_s(table: StaticTable) -> float:
    """Exact S for a deterministic table: each cell is either always anti or never."""
    a = (table.a1, table.a2)
    b = (table.b1, table.b2)
    return s_from_fractions([[a[i] ^ b[j] for j in range(2)] for i in range(2)])


def enumerate_static() -> list[tuple[StaticTable, float]]:
    """All 16 deterministic tables with their S (fraction convention)."""
    return [(t, static_s(t)) for t in all_static_tables()]


def compile_strategy(strategy) -> tuple[np.ndarray, np.ndarray]:
    """Lookup arrays for vectorised use.

    Returns ``(card_targets, outs)`` where ``card_targets[ta, tb, x, side]`` is
    the card target index and ``outs[ta, tb, x, side, s]`` the output bit at
    setting index ``s``. ``strategy`` is anything with ``program(targets, x)``.
    """
    card_targets = np.zeros((2, 2, 2, 2), dtype=np.int8)
    outs = np.zeros((2, 2, 2, 2, 2), dtype=np.int8)
    for tp in TARGET_PAIRS:
        ta, tb = tp.target_a.index, tp.target_b.index
        for x in (0, 1):
            prog = strategy.program(tp, x)
            for side, card in enumerate((prog.card_a, prog.card_b)):
                card_targets[ta, tb, x, side] = card.target.index
                outs[ta, tb, x, side] = [card.out(s) for s in SETTINGS]
    return card_targets, outs


def parse_strategy(text: str):
    """``delay`` or ``static:<4 bits>``."""
    text = text.strip()
    if text == "delay":
        return DELAY
    kind, sep, arg = text.partition(":")
    if kind == "static" and sep:
        return StaticTable.parse(arg)
    raise ValueError(f"unknown strategy {text!r} (expected delay or static:<A1A2B1B2>)")
