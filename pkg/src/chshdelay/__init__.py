"""Classical CHSH protocols with setting-dependent measurement delay.

Monte Carlo engine, exact enumeration oracle and instruction-table search
for a local hidden-variable model in which a particle that meets a detector
in the "wrong" setting waits before producing its output.
"""

from chshdelay.core import (
    CorrelationKind,
    DelayPolicy,
    FixedDelay,
    InstructionCard,
    NoDelay,
    PairProgram,
    Setting,
    SwitchModel,
    TargetPair,
    WaitUntilTarget,
    desired_correlation,
    other,
    parse_policy,
)
from chshdelay.engine import TrialRecord, run_experiment, run_trial
from chshdelay.oracle import (
    ExactTally,
    TableAssignment,
    brute_force_tables,
    exact_s,
    exact_tally,
    parity_obstruction_check,
)
from chshdelay.stats import (
    SReport,
    TallyTable,
    analytic_s,
    analytic_wrong_probability,
    chsh_s,
    quantum_reference,
    wilson_interval,
)
from chshdelay.strategies import (
    DELAY,
    DelayStrategy,
    StaticTable,
    delay_strategy_program,
    enumerate_static,
    static_program,
)

__version__ = "0.1.0"
