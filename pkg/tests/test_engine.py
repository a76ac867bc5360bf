import numpy as np
import pytest

from chshdelay import rng
from chshdelay.core import (
    FixedDelay,
    NoDelay,
    Setting,
    SwitchModel,
    TargetPair,
    WaitUntilTarget,
)
from chshdelay.engine import (
    DetectorProcess,
    TrialRandomness,
    run_experiment,
    run_trial,
    simulate_batch,
    source_draw,
    step_detector,
)
from chshdelay.stats import anti_fraction, wilson_interval, z_for_confidence
from chshdelay.strategies import DELAY, StaticTable, delay_strategy_program

from helpers import ScriptedStream

S1, S2 = Setting.S1, Setting.S2
Z4 = z_for_confidence(0.9999)


def test_step_detector():
    d = DetectorProcess(S1, SwitchModel(0.0))
    for u in np.linspace(0, 0.999, 50):
        d = step_detector(d, u)
        assert d.current is S1
    d = DetectorProcess(S1, SwitchModel(1.0))
    seen = []
    for u in np.linspace(0, 0.999, 6):
        d = step_detector(d, u)
        seen.append(d.current)
    assert seen == [S2, S1, S2, S1, S2, S1]


@pytest.mark.parametrize("start", [S1, S2])
def test_step_detector_half(start):
    stream = rng.uniforms(3, np.arange(200_000), rng.SIDE_A, 1)
    ends = [step_detector(DetectorProcess(start, SwitchModel(0.5)), u).current for u in stream[:20_000]]
    k = sum(e is S1 for e in ends)
    lo, hi = wilson_interval(k, len(ends), Z4)
    assert lo <= 0.5 <= hi


def _scripted(ia, ib, flips_a=(0,), flips_b=(0,)):
    return TrialRandomness(ScriptedStream(ia, flips_a), ScriptedStream(ib, flips_b))


def test_run_trial_examples():
    prog = delay_strategy_program(TargetPair(S1, S1), 0)
    rec = run_trial(prog, FixedDelay(1), SwitchModel(0.0), _scripted(0, 0))
    assert (rec.out_a, rec.out_b) == (0, 1)
    assert (rec.waited_a, rec.waited_b) == (0, 0)
    assert (rec.final_setting_a, rec.final_setting_b) == (S1, S1) and rec.anti

    rec = run_trial(prog, FixedDelay(1), SwitchModel(0.0), _scripted(1, 1))
    assert (rec.waited_a, rec.waited_b) == (1, 1)
    assert (rec.final_setting_a, rec.final_setting_b) == (S2, S2)
    assert (rec.out_a, rec.out_b) == (0, 1) and rec.anti  # wrong cell: Same was wanted

    rec = run_trial(prog, FixedDelay(1), SwitchModel(1.0), _scripted(1, 1, (1,), (1,)))
    assert (rec.final_setting_a, rec.final_setting_b) == (S1, S1)
    assert (rec.out_a, rec.out_b) == (0, 1) and rec.anti


def test_no_delay_outputs_at_initial_setting():
    prog = delay_strategy_program(TargetPair(S1, S1), 0)
    rec = run_trial(prog, NoDelay(), SwitchModel(1.0), _scripted(1, 0))
    assert (rec.final_setting_a, rec.final_setting_b) == (S2, S1)
    assert (rec.waited_a, rec.waited_b) == (0, 0)


def test_wait_until_target_stops_early():
    prog = delay_strategy_program(TargetPair(S1, S1), 0)
    rec = run_trial(prog, WaitUntilTarget(5), SwitchModel(0.5), _scripted(1, 1, (0, 0, 1, 0, 0), (0, 0, 0, 0, 0)))
    assert rec.waited_a == 3 and rec.final_setting_a is S1
    assert rec.waited_b == 5 and rec.final_setting_b is S2


POLICIES = [NoDelay(), FixedDelay(1), FixedDelay(3), WaitUntilTarget(4)]


@pytest.mark.parametrize("policy", POLICIES, ids=str)
@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_batch_matches_reference_trial_by_trial(policy, p):
    seed, n = 11, 400
    batch = simulate_batch(DELAY, policy, SwitchModel(p), seed, 1000, 1000 + n)
    for k in range(n):
        trial = 1000 + k
        tp, x = source_draw(seed, trial)
        assert (tp.target_a.index, tp.target_b.index, x) == (batch.target_a[k], batch.target_b[k], batch.x[k])
        rec = run_trial(delay_strategy_program(tp, x), policy, SwitchModel(p), TrialRandomness.for_trial(seed, trial))
        assert rec == batch.record(k)


@pytest.mark.parametrize("n", [1, 10, 65_537])
def test_event_conservation(n):
    t = run_experiment(DELAY, FixedDelay(1), SwitchModel(0.4), n, seed=5)
    assert t.total == n


def test_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_experiment(DELAY, FixedDelay(1), SwitchModel(0.4), 0, seed=5)


def test_determinism_and_scheduling_independence():
    args = (DELAY, WaitUntilTarget(3), SwitchModel(0.3), 200_000, 42)
    t1 = run_experiment(*args)
    assert t1 == run_experiment(*args)
    assert t1 == run_experiment(*args, workers=4)
    assert t1 == run_experiment(*args, chunk_size=7_919)
    assert t1 != run_experiment(DELAY, WaitUntilTarget(3), SwitchModel(0.3), 200_000, 43)


def test_waited_zero_iff_first_inspection_on_target():
    b = simulate_batch(DELAY, FixedDelay(2), SwitchModel(0.3), 1, 0, 50_000)
    np.testing.assert_array_equal(b.waited_a == 0, b.initial_a == b.target_a)
    np.testing.assert_array_equal(b.waited_b == 0, b.initial_b == b.target_b)
    assert set(np.unique(b.waited_a)) <= {0, 2}
    b = simulate_batch(DELAY, NoDelay(), SwitchModel(0.3), 1, 0, 10_000)
    assert not b.waited_a.any() and not b.waited_b.any()
    np.testing.assert_array_equal(b.final_a, b.initial_a)


@pytest.mark.parametrize("p", [0.0, 0.3, 0.7, 1.0])
def test_wrong_cell_iff_both_waited_and_no_flip(p):
    b = simulate_batch(DELAY, FixedDelay(1), SwitchModel(p), 9, 0, 100_000)
    desired_anti = ~((b.final_a == 1) & (b.final_b == 1))
    wrong = (b.out_a ^ b.out_b).astype(bool) != desired_anti
    both_stuck = (b.waited_a == 1) & (b.waited_b == 1) & (b.final_a == b.initial_a) & (b.final_b == b.initial_b)
    np.testing.assert_array_equal(wrong, both_stuck)
    # and the wrong cell is always the double-miss cell
    assert (b.final_a[wrong] != b.target_a[wrong]).all()
    assert (b.final_b[wrong] != b.target_b[wrong]).all()


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_final_setting_pairs_uniform(p):
    n = 400_000
    t = run_experiment(DELAY, FixedDelay(1), SwitchModel(p), n, seed=21)
    for i in (S1, S2):
        for j in (S1, S2):
            lo, hi = wilson_interval(sum(t.cell(i, j)), n, Z4)
            assert lo <= 0.25 <= hi


def test_locality_side_b_stream_swap():
    for policy in POLICIES:
        base = simulate_batch(DELAY, policy, SwitchModel(0.4), 17, 0, 10_000)
        swapped = simulate_batch(DELAY, policy, SwitchModel(0.4), 17, 0, 10_000, streams=(rng.SIDE_A, 99))
        for name in ("final_a", "out_a", "waited_a", "initial_a"):
            np.testing.assert_array_equal(getattr(base, name), getattr(swapped, name))
        assert not np.array_equal(base.initial_b, swapped.initial_b)


def test_locality_reference_trial():
    prog = delay_strategy_program(TargetPair(S2, S1), 1)
    for trial in range(200):
        r = TrialRandomness.for_trial(3, trial)
        other_b = TrialRandomness(r.a, rng.SideStream(1234, trial, rng.SIDE_B))
        x = run_trial(prog, WaitUntilTarget(3), SwitchModel(0.5), r)
        y = run_trial(prog, WaitUntilTarget(3), SwitchModel(0.5), other_b)
        assert (x.final_setting_a, x.out_a, x.waited_a) == (y.final_setting_a, y.out_a, y.waited_a)


def test_static_strategy_simulation():
    t = run_experiment(StaticTable.parse("1000"), NoDelay(), SwitchModel(0.5), 10_000, seed=1)
    assert [anti_fraction(t, i, j) for i in (S1, S2) for j in (S1, S2)] == [1.0, 1.0, 0.0, 0.0]


def test_rng_streams_are_pure_and_uniform():
    u = rng.uniforms(7, np.arange(1_000_000), rng.SIDE_A, 0)
    assert ((0 <= u) & (u < 1)).all()
    np.testing.assert_array_equal(u[500:600], rng.uniforms(7, np.arange(500, 600), rng.SIDE_A, 0))
    counts, _ = np.histogram(u, bins=16, range=(0, 1))
    expected = len(u) / 16
    chi2 = ((counts - expected) ** 2 / expected).sum()
    assert chi2 < 50  # 15 dof; p ~ 1e-5
    v = rng.uniforms(7, np.arange(1_000_000), rng.SIDE_A, 1)
    assert abs(np.corrcoef(u, v)[0, 1]) < 0.005
    assert rng.SideStream(7, 5, rng.SIDE_A).uniform(0) == u[5]
    assert rng.uniforms(-1, [0], 0, 0)[0] == rng.uniforms((1 << 64) - 1, [0], 0, 0)[0]
