"""Numerical laboratory for weak values of pre- and post-selected systems.

Exact dense simulation of von Neumann pointer couplings, analytic and
pointer-extracted weak values, weak-limit order diagnostics, and
single-particle optical networks including the nested Mach-Zehnder
interferometer with its primary/secondary presence classification.
"""

from .errors import (
    DarkDetectorError,
    NonHermitianOperatorError,
    OrthogonalSelectionError,
    ScheduleError,
    UnclassifiedOrderError,
)
from .interferometer import (
    ArmPresence,
    BeamSplitter,
    OpticalNetwork,
    PhaseShift,
    PresenceReport,
    TimeSlice,
    TwoStateVector,
    arm_weak_value,
    back_propagate,
    build_nested_mzi,
    classify_presence,
    detection_probabilities,
    network_overlap,
    propagate,
    slice_weak_values,
    two_state_vector,
    weak_trace,
    weak_trace_sweep,
)
from .limits import (
    LimitComparison,
    LimitPoint,
    SweepResult,
    classify_order,
    compare_limits,
    continuity_metric,
    default_g_decade,
    derail_metric,
    first_order_residual,
    fit_order,
    overlap_deficit,
    sweep_metric,
)
from .pointer import (
    PointerModel,
    gaussian_pointer,
    grid_coordinates,
    initial_state,
    moments,
    position_operator,
    qubit_pointer,
    translation_generator,
    variance,
)
from .qcore import (
    CouplingEvolution,
    JointState,
    LinearOperator,
    StateVector,
    basis_state,
    coupling_unitary,
    evolve,
    first_order_state,
    identity,
    inner,
    pauli_x,
    pauli_y,
    pauli_z,
    projector,
    spin_down_x,
    spin_down_z,
    spin_up_x,
    spin_up_z,
    tensor_product,
)
from .scenario import (
    ExperimentPlan,
    ParseDiagnostic,
    ScenarioDoc,
    ScenarioResult,
    load_corpus,
    load_corpus_text,
    parse,
    serialize,
    validate_semantics,
)
from .weakmeas import (
    PostSelectedPointer,
    PrePostSelection,
    WeakValueEstimate,
    analytic_estimate,
    default_g_schedule,
    estimate_weak_value,
    expectation,
    measure_once,
    pointer_ratio,
    time_reverse,
    weak_value,
)

__version__ = "0.1.0"
