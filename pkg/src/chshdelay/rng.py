"""Counter-based uniforms: every draw is a pure function of (seed, trial, stream, draw index).

Built on the SplitMix64 finalizer, so any trial can be regenerated on its own
and trials can be split across workers without changing a single value.
"""

from __future__ import annotations

import numpy as np

SOURCE = 0
SIDE_A = 1
SIDE_B = 2

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, trials, stream: int, draw: int) -> np.ndarray:
    """Uniform floats in [0, 1), one per entry of ``trials``."""
    trials = np.asarray(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix(np.array([seed & _MASK64], dtype=np.uint64) + _GAMMA)
        h = _mix(key ^ (trials * _GAMMA))
        h = _mix(h ^ (np.uint64((stream << 32) | draw) * _GAMMA + _GAMMA))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def bits(seed: int, trials, stream: int, draw: int) -> np.ndarray:
    """Fair 0/1 draws as int8."""
    return (uniforms(seed, trials, stream, draw) < 0.5).astype(np.int8)


class SideStream:
    """Scalar view of one stream for a single trial, for the reference simulator."""

    def __init__(self, seed: int, trial: int, stream: int):
        self.seed = seed
        self.trial = trial
        self.stream = stream

    def uniform(self, draw: int) -> float:
        return float(uniforms(self.seed, [self.trial], self.stream, draw)[0])

    def bit(self, draw: int) -> int:
        return int(self.uniform(draw) < 0.5)
