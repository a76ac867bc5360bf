"""Exact per-trial probabilities by enumeration, and exhaustive instruction-table search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chshdelay.core import (
    SETTINGS,
    TARGET_PAIRS,
    CorrelationKind,
    DelayPolicy,
    FixedDelay,
    InstructionCard,
    NoDelay,
    PairProgram,
    Setting,
    TargetPair,
    WaitUntilTarget,
    check_bit,
    desired_correlation,
    other,
)
from chshdelay.stats import S_SIGNS, SReport, chsh_s_exact, net_flip_probability
from chshdelay.strategies import delay_strategy_program

TOTAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ExactTally:
    """``probs[i, j, k]``: probability of final settings (i, j) with same (k=0) / anti (k=1)."""

    probs: np.ndarray

    def cell(self, i: Setting, j: Setting) -> tuple[float, float]:
        same, anti = self.probs[i.index, j.index]
        return float(same), float(anti)

    def cell_probability(self, i: Setting, j: Setting) -> float:
        return sum(self.cell(i, j))

    def anti_fractions(self) -> tuple[float, float, float, float]:
        return self.report().e_frac

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def report(self) -> SReport:
        return chsh_s_exact(self.probs)


@dataclass(frozen=True)
class TableAssignment:
    """Outputs relative to x for each target pair.

    ``bits[k]`` for target pair index k = 2*ta + tb (order 11, 12, 21, 22) is
    ``(out_a(S1), out_a(S2), out_b(S1), out_b(S2))``. The actual outputs are
    these XOR the source's random bit x.
    """

    bits: tuple[tuple[int, int, int, int], ...]

    def __post_init__(self):
        if len(self.bits) != 4 or any(len(b) != 4 for b in self.bits):
            raise ValueError("a table assignment has four 4-bit entries")
        for row in self.bits:
            for b in row:
                check_bit(b)

    @classmethod
    def decode(cls, code: int) -> TableAssignment:
        """Inverse of :meth:`encode`; the first target pair occupies the top nibble."""
        if not 0 <= code < 1 << 16:
            raise ValueError(f"assignment code out of range: {code}")
        nibbles = [(code >> (12 - 4 * k)) & 0xF for k in range(4)]
        return cls(tuple(tuple((n >> (3 - b)) & 1 for b in range(4)) for n in nibbles))

    def encode(self) -> int:
        code = 0
        for row in self.bits:
            for b in row:
                code = (code << 1) | b
        return code

    def flipped(self) -> TableAssignment:
        return TableAssignment(tuple(tuple(1 - b for b in row) for row in self.bits))

    def program(self, targets: TargetPair, x: int) -> PairProgram:
        a1, a2, b1, b2 = (b ^ x for b in self.bits[2 * targets.target_a.index + targets.target_b.index])
        return PairProgram(
            InstructionCard(targets.target_a, a1, a2), InstructionCard(targets.target_b, b1, b2)
        )

    def __str__(self) -> str:
        return "/".join("".join(str(b) for b in row) for row in self.bits)


def delay_assignment() -> TableAssignment:
    """The delay strategy's instruction sets, at x = 0, as a table assignment."""
    rows = []
    for tp in TARGET_PAIRS:
        prog = delay_strategy_program(tp, 0)
        rows.append(prog.card_a.outs + prog.card_b.outs)
    return TableAssignment(tuple(rows))


def side_outcomes(card: InstructionCard, initial: Setting, policy: DelayPolicy, p: float):
    """(final setting, probability) pairs for one particle given its detector's initial setting."""
    if isinstance(policy, NoDelay) or initial == card.target:
        return [(initial, 1.0)]
    if isinstance(policy, FixedDelay):
        f = net_flip_probability(p, policy.steps)
        return [(other(initial), f), (initial, 1.0 - f)]
    if isinstance(policy, WaitUntilTarget):
        # Reached the target at step k with probability (1-p)**(k-1) * p; tail stays off-target.
        outcomes = [(card.target, (1.0 - p) ** (k - 1) * p) for k in range(1, policy.max_steps + 1)]
        outcomes.append((initial, (1.0 - p) ** policy.max_steps))
        return outcomes
    raise TypeError(f"unknown delay policy {policy!r}")


def exact_tally(strategy, policy: DelayPolicy, p: float) -> ExactTally:
    """Enumerate targets x bit x x initial settings x per-detector switching outcomes."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    probs = np.zeros((2, 2, 2))
    for tp in TARGET_PAIRS:
        for x in (0, 1):
            prog = strategy.program(tp, x)
            w_src = 0.25 * 0.5
            for sa in SETTINGS:
                for sb in SETTINGS:
                    w_init = w_src * 0.25
                    for fa, wa in side_outcomes(prog.card_a, sa, policy, p):
                        for fb, wb in side_outcomes(prog.card_b, sb, policy, p):
                            anti = prog.card_a.out(fa) ^ prog.card_b.out(fb)
                            probs[fa.index, fb.index, anti] += w_init * wa * wb
    return ExactTally(probs)


def exact_s(strategy, policy: DelayPolicy, p: float) -> float:
    return exact_tally(strategy, policy, p).report().s_paper


def _target_cell_weights(policy: DelayPolicy, p: float) -> np.ndarray:
    """``W[k, i, j]``: P(target pair k and final settings (i, j)); strategy-independent
    whenever each card's target is the drawn target."""
    w = np.zeros((4, 2, 2))
    for k, tp in enumerate(TARGET_PAIRS):
        # Output bits do not matter here, only where each side ends up.
        ca = InstructionCard(tp.target_a, 0, 0)
        cb = InstructionCard(tp.target_b, 0, 0)
        for sa in SETTINGS:
            for sb in SETTINGS:
                for fa, wa in side_outcomes(ca, sa, policy, p):
                    for fb, wb in side_outcomes(cb, sb, policy, p):
                        w[k, fa.index, fb.index] += 0.25 * 0.25 * wa * wb
    return w


def all_assignment_s(p: float, steps: int = 1) -> np.ndarray:
    """Exact S for every one of the 65536 assignments under a fixed delay, indexed by code."""
    w = _target_cell_weights(FixedDelay(steps), p)
    codes = np.arange(1 << 16)
    # bits[code, k, b]: bit b of nibble k, MSB first, matching TableAssignment.encode.
    nib = (codes[:, None] >> (12 - 4 * np.arange(4))[None, :]) & 0xF
    bits = (nib[:, :, None] >> (3 - np.arange(4))[None, None, :]) & 1
    out_a = bits[:, :, 0:2]
    out_b = bits[:, :, 2:4]
    anti = out_a[:, :, :, None] ^ out_b[:, :, None, :]  # [code, k, i, j]
    anti_prob = np.einsum("ckij,kij->cij", anti.astype(float), w)
    cell_prob = w.sum(axis=0)
    fracs = anti_prob / cell_prob
    return np.einsum("cij,ij->c", fracs, S_SIGNS)


@dataclass(frozen=True)
class BruteForceResult:
    best: TableAssignment
    s_max: float
    maximizers: tuple[int, ...]
    derived_s: float

    @property
    def derived_attains(self) -> bool:
        return abs(self.derived_s - self.s_max) <= 1e-12


def brute_force_tables(p: float, steps: int = 1, tol: float = 1e-12) -> BruteForceResult:
    """Best of all 65536 instruction-table assignments; ties go to the smallest code."""
    s = all_assignment_s(p, steps)
    s_max = float(s.max())
    maximizers = np.flatnonzero(s >= s_max - tol)
    derived = delay_assignment()
    return BruteForceResult(
        best=TableAssignment.decode(int(maximizers[0])),
        s_max=s_max,
        maximizers=tuple(int(c) for c in maximizers),
        derived_s=float(s[derived.encode()]),
    )


@dataclass(frozen=True)
class ObstructionReport:
    desired_xor: int
    max_satisfied: dict[str, int]
    derived_wrong_cells: dict[str, tuple[Setting, ...]]

    @property
    def holds(self) -> bool:
        """At most 3 of 4 cells satisfiable everywhere, and the derived table misses only the double-miss cell."""
        if self.desired_xor != 1 or any(v > 3 for v in self.max_satisfied.values()):
            return False
        for tp in TARGET_PAIRS:
            if self.derived_wrong_cells[str(tp)] != ((other(tp.target_a), other(tp.target_b)),):
                return False
        return True

    def rows(self) -> list[dict]:
        out = []
        for tp in TARGET_PAIRS:
            key = str(tp)
            wrong = self.derived_wrong_cells[key]
            out.append(
                {
                    "targets": key,
                    "max_satisfied": self.max_satisfied[key],
                    "derived_wrong_cells": ";".join(f"{i.value}{j.value}" for i, j in wrong),
                    "double_miss_cell": f"{other(tp.target_a).value}{other(tp.target_b).value}",
                    "desired_xor": self.desired_xor,
                }
            )
        return out


def _satisfied_cells(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[Setting, Setting]]:
    return [
        (i, j)
        for i in SETTINGS
        for j in SETTINGS
        if CorrelationKind.of(a[i.index], b[j.index]) is desired_correlation(i, j)
    ]


def parity_obstruction_check() -> ObstructionReport:
    """No 4 output bits satisfy all four desired correlations, since the desired anti-bits XOR to 1."""
    desired_xor = 0
    for i in SETTINGS:
        for j in SETTINGS:
            desired_xor ^= desired_correlation(i, j).bit
    max_satisfied = {}
    wrong = {}
    for tp in TARGET_PAIRS:
        best = 0
        for code in range(16):
            a = ((code >> 3) & 1, (code >> 2) & 1)
            b = ((code >> 1) & 1, code & 1)
            best = max(best, len(_satisfied_cells(a, b)))
        max_satisfied[str(tp)] = best
        prog = delay_strategy_program(tp, 0)
        ok = set(_satisfied_cells(prog.card_a.outs, prog.card_b.outs))
        wrong[str(tp)] = tuple((i, j) for i in SETTINGS for j in SETTINGS if (i, j) not in ok)
    return ObstructionReport(desired_xor, max_satisfied, wrong)
