"""Discrete-time simulation of emitted pairs meeting independently switching detectors.

Randomness layout (see :mod:`chshdelay.rng`): the source stream supplies
target A (draw 0), target B (draw 1) and the shared bit x (draw 2). Each
detector stream supplies the initial setting (draw 0) and the flip decision
for time step k (draw k). Side A's output therefore depends only on its card
and the side-A stream; nothing on side B can reach it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from chshdelay import rng
from chshdelay.core import (
    DelayPolicy,
    FixedDelay,
    InstructionCard,
    NoDelay,
    PairProgram,
    Setting,
    SwitchModel,
    TargetPair,
    WaitUntilTarget,
    other,
)
from chshdelay.stats import TallyTable
from chshdelay.strategies import compile_strategy

DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class DetectorProcess:
    current: Setting
    switch: SwitchModel


def step_detector(d: DetectorProcess, u: float) -> DetectorProcess:
    """Advance one time step; ``u`` is a uniform draw in [0, 1)."""
    if u < d.switch.p:
        return DetectorProcess(other(d.current), d.switch)
    return d


@dataclass(frozen=True)
class TrialRecord:
    final_setting_a: Setting
    final_setting_b: Setting
    out_a: int
    out_b: int
    waited_a: int
    waited_b: int

    @property
    def anti(self) -> bool:
        return self.out_a != self.out_b


@dataclass(frozen=True)
class TrialRandomness:
    """The two detector streams of one trial."""

    a: rng.SideStream
    b: rng.SideStream

    @classmethod
    def for_trial(cls, seed: int, trial: int) -> TrialRandomness:
        return cls(rng.SideStream(seed, trial, rng.SIDE_A), rng.SideStream(seed, trial, rng.SIDE_B))


def _run_side(
    card: InstructionCard, policy: DelayPolicy, model: SwitchModel, stream: rng.SideStream
) -> tuple[Setting, int, int]:
    det = DetectorProcess(Setting.S1 if stream.bit(0) == 0 else Setting.S2, model)
    waited = 0
    if isinstance(policy, NoDelay) or det.current == card.target:
        pass
    elif isinstance(policy, FixedDelay):
        # Inspect once on arrival, once more at output time.
        for k in range(1, policy.steps + 1):
            det = step_detector(det, stream.uniform(k))
        waited = policy.steps
    elif isinstance(policy, WaitUntilTarget):
        for k in range(1, policy.max_steps + 1):
            det = step_detector(det, stream.uniform(k))
            waited = k
            if det.current == card.target:
                break
    else:
        raise TypeError(f"unknown delay policy {policy!r}")
    return det.current, card.out(det.current), waited


def run_trial(
    program: PairProgram, policy: DelayPolicy, model: SwitchModel, randomness: TrialRandomness
) -> TrialRecord:
    """One pair, one step at a time. Reference implementation for the batched engine."""
    fa, oa, wa = _run_side(program.card_a, policy, model, randomness.a)
    fb, ob, wb = _run_side(program.card_b, policy, model, randomness.b)
    return TrialRecord(fa, fb, oa, ob, wa, wb)


def source_draw(seed: int, trial: int) -> tuple[TargetPair, int]:
    """Targets and x the source assigns in a given trial."""
    ta = rng.bits(seed, [trial], rng.SOURCE, 0)[0]
    tb = rng.bits(seed, [trial], rng.SOURCE, 1)[0]
    x = rng.bits(seed, [trial], rng.SOURCE, 2)[0]
    return TargetPair(Setting.from_index(ta), Setting.from_index(tb)), int(x)


@dataclass(frozen=True)
class TrialBatch:
    """Per-trial arrays for a contiguous range of trials. Settings are 0/1 indices."""

    trials: np.ndarray
    target_a: np.ndarray
    target_b: np.ndarray
    x: np.ndarray
    initial_a: np.ndarray
    initial_b: np.ndarray
    final_a: np.ndarray
    final_b: np.ndarray
    out_a: np.ndarray
    out_b: np.ndarray
    waited_a: np.ndarray
    waited_b: np.ndarray

    def __len__(self) -> int:
        return len(self.trials)

    def record(self, k: int) -> TrialRecord:
        return TrialRecord(
            Setting.from_index(self.final_a[k]),
            Setting.from_index(self.final_b[k]),
            int(self.out_a[k]),
            int(self.out_b[k]),
            int(self.waited_a[k]),
            int(self.waited_b[k]),
        )

    def tally(self) -> TallyTable:
        idx = (self.final_a.astype(np.int64) * 2 + self.final_b) * 2 + (self.out_a ^ self.out_b)
        return TallyTable(np.bincount(idx, minlength=8).reshape(2, 2, 2))


def _side_batch(seed, trials, stream, card_target, outs, policy, p):
    n = len(trials)
    initial = rng.bits(seed, trials, stream, 0)
    final = initial.copy()
    waited = np.zeros(n, dtype=np.int32)
    if not isinstance(policy, NoDelay):
        active = np.flatnonzero(initial != card_target)
        steps = policy.steps if isinstance(policy, FixedDelay) else policy.max_steps
        for k in range(1, steps + 1):
            if active.size == 0:
                break
            flip = rng.uniforms(seed, trials[active], stream, k) < p
            final[active] ^= flip.astype(np.int8)
            waited[active] = k
            if isinstance(policy, WaitUntilTarget):
                active = active[final[active] != card_target[active]]
    out = outs[np.arange(n), final]
    return initial, final, out, waited


def simulate_batch(
    strategy,
    policy: DelayPolicy,
    model: SwitchModel,
    seed: int,
    start: int,
    stop: int,
    streams: tuple[int, int] = (rng.SIDE_A, rng.SIDE_B),
    compiled: tuple[np.ndarray, np.ndarray] | None = None,
) -> TrialBatch:
    """Simulate trials ``start .. stop-1``. ``streams`` selects the detector stream ids."""
    if not isinstance(policy, (NoDelay, FixedDelay, WaitUntilTarget)):
        raise TypeError(f"unknown delay policy {policy!r}")
    card_targets, outs = compiled if compiled is not None else compile_strategy(strategy)
    trials = np.arange(start, stop, dtype=np.int64)
    ta = rng.bits(seed, trials, rng.SOURCE, 0)
    tb = rng.bits(seed, trials, rng.SOURCE, 1)
    x = rng.bits(seed, trials, rng.SOURCE, 2)
    sides = []
    for side, stream in enumerate(streams):
        sides.append(
            _side_batch(
                seed, trials, stream, card_targets[ta, tb, x, side], outs[ta, tb, x, side], policy, model.p
            )
        )
    (ia, fa, oa, wa), (ib, fb, ob, wb) = sides
    return TrialBatch(trials, ta, tb, x, ia, ib, fa, fb, oa, ob, wa, wb)


def run_experiment(
    strategy,
    policy: DelayPolicy,
    model: SwitchModel,
    n_trials: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> TallyTable:
    """Tally ``n_trials`` independent trials.

    The result depends only on (strategy, policy, model, n_trials, seed);
    ``workers`` and ``chunk_size`` change scheduling, never values.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    compiled = compile_strategy(strategy)
    bounds = [(s, min(s + chunk_size, n_trials)) for s in range(0, n_trials, chunk_size)]

    def chunk(b):
        return simulate_batch(strategy, policy, model, seed, *b, compiled=compiled).tally()

    if workers == 1:
        tallies = [chunk(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(chunk, bounds))
    total = TallyTable()
    for t in tallies:
        total = total + t
    if total.total != n_trials:
        raise AssertionError(f"event accounting broken: {total.total} tallied for {n_trials} trials")
    return total
