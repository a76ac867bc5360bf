import pytest

from chshdelay.core import (
    SETTINGS,
    CorrelationKind,
    FixedDelay,
    InstructionCard,
    NoDelay,
    Setting,
    SwitchModel,
    WaitUntilTarget,
    desired_correlation,
    other,
    parse_policy,
)


def test_other():
    assert other(Setting.S1) is Setting.S2
    assert other(Setting.S2) is Setting.S1
    for s in SETTINGS:
        assert other(other(s)) is s


@pytest.mark.parametrize(
    "i, j, kind",
    [
        (Setting.S1, Setting.S1, CorrelationKind.ANTI),
        (Setting.S1, Setting.S2, CorrelationKind.ANTI),
        (Setting.S2, Setting.S1, CorrelationKind.ANTI),
        (Setting.S2, Setting.S2, CorrelationKind.SAME),
    ],
)
def test_desired_correlation(i, j, kind):
    assert desired_correlation(i, j) is kind


def test_desired_pattern_parity():
    kinds = [desired_correlation(i, j) for i in SETTINGS for j in SETTINGS]
    assert kinds.count(CorrelationKind.ANTI) == 3
    parity = 0
    for k in kinds:
        parity ^= k.bit
    assert parity == 1


def test_correlation_kind_of():
    assert CorrelationKind.of(0, 1) is CorrelationKind.ANTI
    assert CorrelationKind.of(1, 1) is CorrelationKind.SAME


def test_card_is_total():
    card = InstructionCard(Setting.S2, 1, 0)
    assert card.out(Setting.S1) == 1 and card.out(Setting.S2) == 0
    with pytest.raises(ValueError):
        InstructionCard(Setting.S1, 2, 0)


@pytest.mark.parametrize("p", [-0.1, 1.01])
def test_switch_model_range(p):
    with pytest.raises(ValueError):
        SwitchModel(p)


def test_policies():
    assert parse_policy("none") == NoDelay()
    assert parse_policy("fixed:3") == FixedDelay(3)
    assert parse_policy("WAIT:2") == WaitUntilTarget(2)
    for bad in ("fixed:0", "wait:-1", "fixed:x", "sometimes", "fixed"):
        with pytest.raises(ValueError):
            parse_policy(bad)
    with pytest.raises(ValueError):
        FixedDelay(0)
    assert str(FixedDelay(2)) == "fixed:2"
