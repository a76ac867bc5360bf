"""Tallies, CHSH S in the fraction and +/-1 conventions, analytic predictions, error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from chshdelay.core import SETTINGS, Setting

# Sign of each E term in S, indexed [i, j] with S1 -> 0.
S_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0]])

DEFAULT_Z = 1.96


class EmptyCellError(ValueError):
    """A setting pair received no trials, so its fraction is undefined."""

    def __init__(self, i: Setting, j: Setting):
        self.cell = (i, j)
        super().__init__(f"empty tally cell ({i}, {j})")


@dataclass(frozen=True, eq=False)
class TallyTable:
    """Same/anti counts per recorded setting pair.

    ``counts[i, j, k]`` with ``i``/``j`` the setting indices of detectors A/B
    and ``k`` = 0 for same, 1 for anti.
    """

    counts: np.ndarray = field(default_factory=lambda: np.zeros((2, 2, 2), dtype=np.int64))

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (2, 2, 2):
            raise ValueError(f"tally counts must have shape (2, 2, 2), got {c.shape}")
        if (c < 0).any():
            raise ValueError("tally counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_cells(cls, cells: dict[tuple[Setting, Setting], tuple[int, int]]) -> TallyTable:
        c = np.zeros((2, 2, 2), dtype=np.int64)
        for (i, j), (same, anti) in cells.items():
            c[i.index, j.index] = (same, anti)
        return cls(c)

    def cell(self, i: Setting, j: Setting) -> tuple[int, int]:
        same, anti = self.counts[i.index, j.index]
        return int(same), int(anti)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: TallyTable) -> TallyTable:
        return TallyTable(self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, TallyTable) and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash(self.counts.tobytes())


def anti_fraction(t: TallyTable, i: Setting, j: Setting) -> float:
    same, anti = t.cell(i, j)
    if same + anti == 0:
        raise EmptyCellError(i, j)
    return anti / (same + anti)


def s_from_fractions(fractions) -> float:
    """S = f11 + f12 + f21 - f22 for a 2x2 array (or flat 4-sequence) of E values."""
    f = np.asarray(fractions, dtype=float).reshape(2, 2)
    return float(f[0, 0] + f[0, 1] + f[1, 0] - f[1, 1])


@dataclass(frozen=True)
class SReport:
    """S in both conventions.

    ``e_frac`` is the anti-correlated fraction per cell (order 11, 12, 21, 22);
    ``e_std`` the usual P(same) - P(different) = 1 - 2 * e_frac.
    ``n`` is None for exact (oracle) tallies, which also carry zero half-width.
    """

    e_frac: tuple[float, float, float, float]
    s_paper: float
    e_std: tuple[float, float, float, float]
    s_std: float
    ci_halfwidth: float
    n: int | None


def _report(anti_fracs: np.ndarray, ci_halfwidth: float, n: int | None) -> SReport:
    e_frac = tuple(float(v) for v in anti_fracs.reshape(4))
    e_std = tuple(1.0 - 2.0 * v for v in e_frac)
    return SReport(
        e_frac=e_frac,
        s_paper=s_from_fractions(e_frac),
        e_std=e_std,
        s_std=s_from_fractions(e_std),
        ci_halfwidth=ci_halfwidth,
        n=n,
    )


def chsh_s(t: TallyTable, z: float = DEFAULT_Z) -> SReport:
    """S from a Monte Carlo tally.

    The half-width is the sum of the four per-cell Wilson half-widths, which
    bounds the S error conservatively (each E enters S with coefficient +/-1).
    """
    fracs = np.empty((2, 2))
    halfwidth = 0.0
    for i in SETTINGS:
        for j in SETTINGS:
            fracs[i.index, j.index] = anti_fraction(t, i, j)
            same, anti = t.cell(i, j)
            lo, hi = wilson_interval(anti, same + anti, z)
            halfwidth += (hi - lo) / 2
    return _report(fracs, halfwidth, t.total)


def chsh_s_exact(probs: np.ndarray) -> SReport:
    """S from exact cell probabilities ``probs[i, j, same/anti]`` (conditional per cell)."""
    probs = np.asarray(probs, dtype=float)
    fracs = np.empty((2, 2))
    for i in SETTINGS:
        for j in SETTINGS:
            same, anti = probs[i.index, j.index]
            if same + anti <= 0.0:
                raise EmptyCellError(i, j)
            fracs[i.index, j.index] = anti / (same + anti)
    return _report(fracs, 0.0, None)


def net_flip_probability(p: float, steps: int) -> float:
    """Probability a detector ends up switched after ``steps`` independent flip chances."""
    _check_p(p)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    return (1.0 - (1.0 - 2.0 * p) ** steps) / 2.0


def analytic_wrong_probability(p: float, steps: int = 1) -> float:
    """Chance a trial lands in the wrong cell: both particles off-target, neither detector net-switched.

    For one step this is (1 - p)**2 / 4.
    """
    if steps == 1:
        _check_p(p)
        return (1.0 - p) ** 2 / 4.0
    return (1.0 - net_flip_probability(p, steps)) ** 2 / 4.0


def analytic_s(p: float, steps: int = 1) -> float:
    """S = 3 - 4 * wrong probability; 3 - (1 - p)**2 for a one-step delay."""
    return 3.0 - 4.0 * analytic_wrong_probability(p, steps)


def analytic_s_wait(p: float, max_steps: int) -> float:
    """S for wait-until-target: a side stays off-target with probability (1 - p)**max_steps."""
    _check_p(p)
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    return 3.0 - (1.0 - p) ** (2 * max_steps)


def z_for_confidence(confidence: float) -> float:
    """Two-sided normal quantile, e.g. 0.9999 -> 3.89."""
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    return NormalDist().inv_cdf(0.5 + confidence / 2.0)


def wilson_interval(successes: int, n: int, z: float = DEFAULT_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("Wilson interval needs n >= 1")
    if not 0 <= successes <= n:
        raise ValueError(f"successes must lie in [0, n], got {successes} of {n}")
    if z <= 0:
        raise ValueError(f"z must be positive, got {z}")
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2 * n)) / denom
    margin = z / denom * math.sqrt(phat * (1.0 - phat) / n + z2 / (4 * n * n))
    # Exact endpoints at the boundaries; rounding would otherwise leave ~1e-19.
    lo = 0.0 if successes == 0 else max(0.0, center - margin)
    hi = 1.0 if successes == n else min(1.0, center + margin)
    return lo, hi


QUANTUM_MAX = 2.0 * math.sqrt(2.0)
QUANTUM_LABEL = "quantum maximum (Tsirelson bound, reference only; not simulated)"


def quantum_reference() -> float:
    """2*sqrt(2), the quantum-mechanical CHSH maximum. Reported for comparison only."""
    return QUANTUM_MAX


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
