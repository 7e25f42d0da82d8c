"""debrisense: tensor-based space-debris detection for inter-satellite THz links.

The package simulates a THz massive MIMO-OFDM link between two LEO
satellites, assembles the received probing signal into a third-order
tensor, and detects debris between the satellites by estimating the CP
rank of that tensor with a regularized alternating-least-squares solver.
An energy-detection baseline and a Monte Carlo sweep harness are
included for benchmarking.

Layout
------
``tensor_ops``
    Dense complex third-order tensor algebra (unfoldings, Khatri-Rao,
    CP reconstruction, Frobenius norms, CT3 file I/O).
``cpd``
    Regularized ALS CP decomposition, GEVD initialization, and rank
    estimation by singular-value thresholding.
``channel``
    Geometric THz channel: steering vectors, LOS/NLOS gains, path sets,
    per-subcarrier channel matrices, noise temperature model.
``signal_model``
    Random probing matrices and received-tensor assembly.
``detect``
    Tensor-based detection (TBD) and energy-based detection (EBD).
``config``
    Line-based ``key = value`` configuration files and defaults.
``harness``
    Deterministic Monte Carlo sweep runner and CSV/JSON/SVG reports.
``cli``
    ``debrisense`` command line entry point.
"""

from .tensor_ops import (
    ComplexTensor3,
    FactorSet,
    cp_reconstruct,
    fold,
    frobenius_norm,
    khatri_rao,
    read_ct3,
    unfold,
    write_ct3,
)
from .cpd import (
    AlsConfig,
    DegradedInitError,
    NumericalFailureError,
    RankEstimate,
    als_cpd,
    best_cpd,
    estimate_paths,
    estimate_rank,
    gevd_init,
)
from .channel import (
    GeometryConfig,
    NoiseModel,
    Path,
    PathSet,
    build_path_set,
    channel_matrix,
    los_gain,
    nlos_gain,
    noise_temperature,
    noise_variance,
    steering_vector,
)
from .signal_model import (
    ProbeConfig,
    ProbeMatrices,
    build_received_tensor,
    build_received_tensor_slices,
    delay_signature,
    generate_probes,
)
from .detect import (
    CalibrationResult,
    DetectionOutcome,
    ebd_calibrate,
    ebd_detect,
    tbd_detect,
)
from .config import ConfigError, ScenarioConfig, SweepSpec, load_config
from .harness import SweepReport, TrialRecord, emit_report, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AlsConfig",
    "CalibrationResult",
    "ComplexTensor3",
    "ConfigError",
    "DegradedInitError",
    "DetectionOutcome",
    "FactorSet",
    "GeometryConfig",
    "NoiseModel",
    "NumericalFailureError",
    "Path",
    "PathSet",
    "ProbeConfig",
    "ProbeMatrices",
    "RankEstimate",
    "ScenarioConfig",
    "SweepReport",
    "SweepSpec",
    "TrialRecord",
    "als_cpd",
    "best_cpd",
    "build_path_set",
    "build_received_tensor",
    "build_received_tensor_slices",
    "channel_matrix",
    "cp_reconstruct",
    "delay_signature",
    "ebd_calibrate",
    "ebd_detect",
    "emit_report",
    "estimate_paths",
    "estimate_rank",
    "fold",
    "frobenius_norm",
    "generate_probes",
    "gevd_init",
    "khatri_rao",
    "load_config",
    "los_gain",
    "nlos_gain",
    "noise_temperature",
    "noise_variance",
    "read_ct3",
    "run_sweep",
    "steering_vector",
    "tbd_detect",
    "unfold",
    "write_ct3",
]
