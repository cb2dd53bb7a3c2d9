"""Simulation and certification tools for compression of identically
prepared bosonic and finite-dimensional quantum states."""

__version__ = "0.1.0"

from .fock import (
    CutoffError,
    FockOperator,
    ModeState,
    apply,
    beam_splitter_unitary,
    displacement_matrix,
    partial_trace,
    tensor,
    two_mode_squeezer,
)
from .channels import (
    Amplifier,
    HeterodyneSample,
    ModeParams,
    TruncationChannel,
    amplifier,
    heterodyne_pdf,
    heterodyne_sample,
    make_displaced_thermal,
    make_thermal,
    truncation_channel,
)
from .metrics import (
    DistanceReport,
    bures_distance,
    classical_memory_error_bound,
    closed_form_bures,
    closed_form_hellinger,
    distance_report,
    hellinger_distance,
    thermal_trace_distance,
    trace_distance,
)
from .thermal_codec import (
    IntervalScheme,
    PhotonTotalLaw,
    codec_memory_bits,
    exact_codec_error,
    interval_index,
    interval_scheme,
)
from .protocols import (
    MemoryLedger,
    ParamRanges,
    ProtocolConfig,
    RunResult,
    case_param_counts,
    error_budget,
    ledger_for,
    run_case,
)
from .qudit import (
    GaussianLaw,
    GaussianTarget,
    IdealQlanChannel,
    KappaParams,
    LatticeLaw,
    QuditParametrization,
    build_qudit_state,
    classical_amplify,
    classical_compress,
    classical_decode,
    kappa,
    kappa_certificate,
    pair_list,
    qlan_target,
    quantum_parameter_witness,
    spectrum_fisher_information,
    tomography_sim,
)
from .auditor import (
    AuditReport,
    MeshDistanceReport,
    MeshSpec,
    audit,
    discrimination_error_bound,
    fano_lower_bound,
    min_mesh_distance,
    n_enc_lower_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
