"""Debris-detection decision rules.

Tensor-based detection (TBD) estimates the CP rank of the received
tensor and declares debris when more than one propagation path is
present — its threshold is the structural constant 1.5 ("L > 1"), so it
needs no calibration.  Energy-based detection (EBD) compares the
received energy against a threshold calibrated to a target false-alarm
probability on H0 (LOS-plus-noise) trials; the link always carries the
LOS path, so H0 is "no debris", not "no signal".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpd import AlsConfig, NumericalFailureError, estimate_paths
from .tensor_ops import frobenius_norm

__all__ = [
    "TBD_THRESHOLD",
    "CalibrationResult",
    "DetectionOutcome",
    "ebd_calibrate",
    "ebd_detect",
    "tbd_detect",
]

TBD_THRESHOLD = 1.5  # "estimated path count exceeds 1"


@dataclass(frozen=True)
class DetectionOutcome:
    """Decision of one detector on one tensor.

    ``detected`` always equals ``statistic > threshold`` (strict).  For
    TBD the statistic is the estimated path count; for EBD it is the
    received energy ``||Y||_F^2``.  ``failed`` marks trials where the
    solver broke down numerically — distinct from "no debris" and to be
    excluded from detection-rate estimates.
    """

    detected: bool
    statistic: float
    threshold: float
    failed: bool = False

    def __post_init__(self):
        if bool(self.detected) != bool(self.statistic > self.threshold):
            raise ValueError(
                "inconsistent outcome: detected must equal "
                "statistic > threshold"
            )


@dataclass(frozen=True)
class CalibrationResult:
    """EBD threshold calibrated on H0 energies.

    ``achieved_pfa`` is recomputed on the calibration set itself.
    """

    threshold: float
    target_pfa: float
    trials_used: int
    achieved_pfa: float

    def __post_init__(self):
        if not 0.0 < self.target_pfa < 1.0:
            raise ValueError(
                f"target_pfa must be in (0, 1), got {self.target_pfa}"
            )
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")


def tbd_detect(Y, cfg: AlsConfig, threshold_rel: float) -> DetectionOutcome:
    """Tensor-based detection: debris present iff estimated rank > 1.

    Runs `estimate_paths` and compares the path count against the
    structural threshold.  A solver numerical failure returns an
    outcome with ``failed=True`` and a NaN statistic instead of raising.
    """
    try:
        L = estimate_paths(Y, cfg, threshold_rel)
    except NumericalFailureError:
        return DetectionOutcome(
            detected=False, statistic=float("nan"),
            threshold=TBD_THRESHOLD, failed=True,
        )
    return DetectionOutcome(
        detected=L > TBD_THRESHOLD, statistic=float(L),
        threshold=TBD_THRESHOLD,
    )


def ebd_calibrate(h0_energies, target_pfa: float) -> CalibrationResult:
    """Calibrate the EBD threshold to a target false-alarm probability.

    The threshold is the empirical ``1 - target_pfa`` quantile (linear
    interpolation) of the H0 energies, so ``target_pfa = 0.5`` yields
    the median.

    Raises
    ------
    ValueError
        With fewer than 100 samples, non-finite energies, or a target
        outside (0, 1).
    """
    energies = np.asarray(h0_energies, dtype=np.float64).reshape(-1)
    if energies.size < 100:
        raise ValueError(
            f"need at least 100 H0 energy samples, got {energies.size}"
        )
    if not np.isfinite(energies).all():
        raise ValueError("H0 energies must be finite")
    if not 0.0 < target_pfa < 1.0:
        raise ValueError(f"target_pfa must be in (0, 1), got {target_pfa}")
    threshold = float(np.quantile(energies, 1.0 - target_pfa))
    achieved = float(np.mean(energies > threshold))
    return CalibrationResult(
        threshold=threshold, target_pfa=float(target_pfa),
        trials_used=int(energies.size), achieved_pfa=achieved,
    )


def ebd_detect(Y, cal: CalibrationResult) -> DetectionOutcome:
    """Energy-based detection: received energy above the threshold?

    The statistic is ``||Y||_F^2``; the comparison is strict, so a
    statistic exactly at the threshold is not a detection.
    """
    statistic = float(frobenius_norm(Y) ** 2)
    return DetectionOutcome(
        detected=statistic > cal.threshold, statistic=statistic,
        threshold=cal.threshold,
    )
