"""Simulation and analysis toolkit for semi-classical blind/verified
delegated quantum computation with quantum emitters and weak coherent pulses."""

from .angles import ALL_ANGLES, Angle8, uniform_angle
from .emitter import EmitterModel, emit_photon, retire_spin, sample_emission_success, spin_hadamard
from .graphs import (
    Graph,
    MeasurementPattern,
    StabilizerTest,
    build_blind_graph_state,
    enumerate_tests,
    flow_update,
    run_mbqc,
)
from .physics import DriveParams, eta1_analytic, eta1_numeric, maximize_eta1, security_gap_sweep
from .protocols import (
    GadgetOutcome,
    GadgetParams,
    ServerBehavior,
    Transcript,
    protocol2_blind_rsp,
    protocol3_gadget,
    protocol5_postselected,
    resource_blind_extender,
    sdqc_run,
    ubqc_run,
)
from .pulses import LeakView, PulseRecord, multiphoton_prob, sample_pulse, server_view
from .qstate import (
    DensityOracle,
    PureState,
    apply_gate,
    discard_qubit,
    fidelity_up_to_phase,
    measure_qubit,
)
from .secbounds import (
    BoundReport,
    composed_bounds,
    gadget_bounds,
    hoeffding_tail,
    postselect_bounds,
    required_pulses,
)

__version__ = "0.1.0"
