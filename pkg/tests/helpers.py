"""Step-sequence enumeration: an oracle independent of the closed-form flip probability."""

import itertools

import numpy as np

from chshdelay.core import TARGET_PAIRS, FixedDelay, NoDelay, SwitchModel
from chshdelay.engine import TrialRandomness, run_trial

_NO_FLIP = float(np.nextafter(1.0, 0.0))


class ScriptedStream:
    """Initial setting bit at draw 0, then u=0 (flip unless p=0) or u just below 1 (no flip unless p=1)."""

    def __init__(self, initial_bit, flips):
        self.initial_bit = initial_bit
        self.flips = flips

    def bit(self, draw):
        assert draw == 0
        return self.initial_bit

    def uniform(self, draw):
        return 0.0 if self.flips[draw - 1] else _NO_FLIP


def _steps(policy):
    if isinstance(policy, NoDelay):
        return 0
    return policy.steps if isinstance(policy, FixedDelay) else policy.max_steps


def sequence_tally(strategy, policy, p):
    """Exact (2, 2, 2) cell probabilities by running the reference simulator on every flip sequence."""
    n = _steps(policy)
    model = SwitchModel(p)
    probs = np.zeros((2, 2, 2))
    for tp in TARGET_PAIRS:
        for x in (0, 1):
            prog = strategy.program(tp, x)
            for ia, ib in itertools.product((0, 1), repeat=2):
                for fa in itertools.product((0, 1), repeat=n):
                    for fb in itertools.product((0, 1), repeat=n):
                        k = sum(fa) + sum(fb)
                        w = p**k * (1 - p) ** (2 * n - k) / 32
                        if w == 0:
                            continue
                        rec = run_trial(prog, policy, model, TrialRandomness(ScriptedStream(ia, fa), ScriptedStream(ib, fb)))
                        probs[rec.final_setting_a.index, rec.final_setting_b.index, int(rec.anti)] += w
    return probs
