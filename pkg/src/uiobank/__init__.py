"""Banks of unknown-input observers for attack-resilient estimation, isolation and control."""
from .attacks import IsolationPolicy, Isolator, isolate, reconstruct_actuator, reconstruct_sensor
from .control import (
    GainTable, LyapunovCertificate, design_static, design_switching_gains, max_qstar,
    search_certificate, supervisor_step, validate_certificate,
)
from .errors import (
    DesignInfeasible, InternalInconsistency, InvalidInput, NoConvergence, NotReady,
    SimulationDiverged, UioBankError, UnstabilizableConfiguration,
)
from .matrix_core import DEFAULT_TOL, Tolerances
from .multi_observer import ObserverBank, init_bank, select, step_bank
from .sim import (
    AttackSignal, InitialState, InputPolicy, Scenario, Signal, Trace, build, metrics,
    replay_check, simulate,
)
from .uio import (
    BankSpec, IndexSet, PlantModel, design_complete, design_partial, enumerate_bank, max_q,
    max_q1_q2,
)

__version__ = "0.1.0"
