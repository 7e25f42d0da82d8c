"""Seeded Monte Carlo sweep harness and report emission.

Runs both detectors over a grid of (transmit power, ridge weight mu,
training subcarriers K), aggregates detection statistics, and writes
CSV/JSON/SVG artifacts.

Seed scheme
-----------
Each trial owns an independent generator::

    default_rng(SeedSequence([master_seed, bits(power_w), bits(mu),
                              k, hyp_code, trial_index]))

where ``bits(x)`` is the IEEE-754 bit pattern of ``float64(x)`` and
``hyp_code`` is 0 for H0 (direct path only) and 1 for H1 (debris
present).  Streams are keyed by the grid point's *values*, never by its
position, so editing the grid cannot perturb surviving points' trials;
reruns with the same configuration reproduce every draw exactly.

Per grid point
--------------
``trials_per_point`` H1 trials plus ``max(trials_per_point, 100)`` H0
trials (the energy detector is calibrated on at least 100 background
energies; the same H0 set doubles as the false-alarm audit for both
detectors).  Within one trial the generator is consumed in a fixed
order: debris placement, reflection coefficients, probe matrices,
noise, solver seed.

Aggregation excludes solver-failure trials from detection-rate
numerators and denominators but reports their count.  ``p_m`` is
defined as ``1 - p_d`` over the same valid-trial set.  When every trial
at a point fails, rates fall back to ``p_d = 0, p_m = 1``.

Rank-detector input normalization
---------------------------------
The ridge weight operates on absolute component magnitudes, so the
received tensor is rescaled before rank detection to a noise-referenced
level: ``scale = noise_ref_level / (sqrt(noise_var) * E(dims))`` where
``E`` is the largest unfolding edge ``sqrt(rows) + sqrt(cols)`` over
the three modes — an upper bound on the spectral norm of a unit-variance
noise unfolding.  After scaling, the best rank-1 fit attainable by pure
noise is below ``noise_ref_level``, which sits safely under the ridge
survival level for Table-range mu, while genuine paths scale with
transmit power.  Noiseless runs instead scale the tensor to Frobenius
norm ``noiseless_norm_target``.  The energy detector always sees the
raw physical tensor.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
import warnings
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import detect
from .channel import build_path_set, noise_variance
from .config import ConfigError, ScenarioConfig, SweepSpec, config_echo
from .detect import ebd_calibrate
from .signal_model import build_received_tensor, generate_probes
from .tensor_ops import as_array

__all__ = [
    "REPORT_CSV_HEADER",
    "ReportRow",
    "SweepReport",
    "TrialRecord",
    "emit_report",
    "max_unfolding_edge",
    "normalize_for_tbd",
    "parse_report_csv",
    "run_sweep",
    "simulate_trial",
    "trial_seed",
]

HYP_H0 = 0
HYP_H1 = 1

REPORT_CSV_HEADER = "power_w,mu,k,detector,p_d,p_m,p_fa,n_trials,n_failures"


@dataclass(frozen=True)
class TrialRecord:
    """One detector's outcome on one simulated trial.

    ``wall_time_ms`` is the detector's decision time (for the
    rank-based detector, the full solve); it is kept in memory for
    profiling and never serialized, so reports stay byte-reproducible.
    """

    trial_id: str
    hypothesis: str
    true_L: int
    detector: str
    detected: bool
    statistic: float
    threshold: float
    failed: bool
    wall_time_ms: float

    def __post_init__(self):
        if self.hypothesis not in ("h0", "h1"):
            raise ValueError(f"hypothesis must be 'h0' or 'h1', got {self.hypothesis!r}")
        if self.detector not in ("tbd", "ebd"):
            raise ValueError(f"detector must be 'tbd' or 'ebd', got {self.detector!r}")
        if self.hypothesis == "h0" and self.true_L != 1:
            raise ValueError("H0 trials carry exactly the direct path (true_L = 1)")
        if self.true_L < 1:
            raise ValueError("true_L must be >= 1")


@dataclass(frozen=True)
class ReportRow:
    """Aggregated rates for one detector at one grid point.

    ``n_trials``/``n_failures`` count H1 trials (the CSV columns);
    ``n_trials_h0``/``n_failures_h0`` describe the false-alarm audit
    set and appear in the JSON mirror only.
    """

    power_w: float
    mu: float
    k: int
    detector: str
    p_d: float
    p_m: float
    p_fa: float
    n_trials: int
    n_failures: int
    n_trials_h0: int = 0
    n_failures_h0: int = 0

    def __post_init__(self):
        for name in ("p_d", "p_m", "p_fa"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if abs(self.p_d + self.p_m - 1.0) > 1e-12:
            raise ValueError("p_d + p_m must equal 1")

    def csv_line(self) -> str:
        return (
            f"{self.power_w!r},{self.mu!r},{self.k},{self.detector},"
            f"{self.p_d!r},{self.p_m!r},{self.p_fa!r},"
            f"{self.n_trials},{self.n_failures}"
        )


@dataclass(frozen=True)
class SweepReport:
    """Full sweep result: aggregated rows plus the effective config.

    ``trials`` and the timing fields are in-memory diagnostics; only
    ``rows``, ``config_echo`` and ``format_version`` are serialized.
    """

    rows: tuple[ReportRow, ...]
    config_echo: dict[str, str]
    format_version: str = "1"
    trials: tuple[TrialRecord, ...] = ()
    solver_time_s: float = 0.0
    sim_time_s: float = 0.0
    total_time_s: float = 0.0


def _float_bits(x: float) -> int:
    """IEEE-754 bit pattern of float64(x), as a Python int."""
    return int(np.float64(x).view(np.uint64))


def trial_seed(master_seed: int, power_w: float, mu: float, k: int,
               hyp_code: int, trial_index: int) -> np.random.SeedSequence:
    """Value-keyed seed for one trial (see module docstring)."""
    return np.random.SeedSequence(
        [int(master_seed), _float_bits(power_w), _float_bits(mu),
         int(k), int(hyp_code), int(trial_index)]
    )


def max_unfolding_edge(dims) -> float:
    """max over modes of sqrt(rows) + sqrt(cols) of the unfolding."""
    i, j, k = (int(d) for d in dims)
    if min(i, j, k) < 1:
        raise ValueError("dims must be positive")
    total = i * j * k
    return max(math.sqrt(d) + math.sqrt(total // d) for d in (i, j, k))


def normalize_for_tbd(Y, scenario: ScenarioConfig, noise_var: float) -> np.ndarray:
    """Rescale a received tensor to the rank detector's reference level."""
    arr = as_array(Y)
    if noise_var > 0.0:
        scale = scenario.noise_ref_level / (
            math.sqrt(noise_var) * max_unfolding_edge(arr.shape)
        )
    else:
        nrm = float(np.linalg.norm(arr))
        scale = scenario.noiseless_norm_target / nrm if nrm > 0.0 else 1.0
    return arr * scale


_TrialResult = namedtuple(
    "_TrialResult",
    ["hyp_code", "trial_index", "true_L", "tbd_detected", "tbd_statistic",
     "tbd_threshold", "tbd_failed", "tbd_ms", "energy", "energy_ms", "sim_ms"],
)


def simulate_trial(scenario: ScenarioConfig, power_w: float, k: int,
                   hyp_code: int, rng, n_debris: int = 1):
    """Draw one trial's scene and received tensor.

    Under H1, debris positions come from ``scenario.geometry`` when set
    there explicitly, otherwise ``n_debris`` points are sampled
    uniformly from the scenario's debris box.  Consumes ``rng`` in the
    documented order (placement, reflections, probes, noise).

    Returns
    -------
    (PathSet, ComplexTensor3, float)
        The realized paths, the received tensor, and the per-entry
        noise variance used (0.0 for noiseless scenarios).
    """
    if hyp_code == HYP_H1:
        if scenario.geometry.debris_positions:
            debris = scenario.geometry.debris_positions
        else:
            lo, hi = scenario.debris_box
            debris = tuple(lo + rng.random(3) * (hi - lo) for _ in range(n_debris))
    else:
        debris = ()
    geom = dataclasses.replace(scenario.geometry, debris_positions=debris)
    paths = build_path_set(geom, rng)
    probe_cfg = dataclasses.replace(scenario.probe, P_T=power_w, K=k)
    probes = generate_probes(probe_cfg, rng)
    noise_var = (
        0.0 if scenario.noiseless
        else noise_variance(scenario.noise, probe_cfg.K_bar)
    )
    Y = build_received_tensor(paths, probes, probe_cfg, noise_var, rng)
    return paths, Y, noise_var


def _run_trial(args) -> _TrialResult:
    """Simulate one trial and run the rank detector (worker function)."""
    scenario, power_w, mu, k, hyp_code, trial_index, master_seed, n_debris = args
    rng = np.random.default_rng(
        trial_seed(master_seed, power_w, mu, k, hyp_code, trial_index)
    )

    t0 = time.perf_counter()
    paths, Y, noise_var = simulate_trial(
        scenario, power_w, k, hyp_code, rng, n_debris
    )
    sim_ms = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    energy = float(np.linalg.norm(as_array(Y)) ** 2)
    energy_ms = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    als_seed = int(rng.integers(0, 2**63))
    cfg = scenario.als_config(mu, seed=als_seed)
    Y_scaled = normalize_for_tbd(Y, scenario, noise_var)
    outcome = detect.tbd_detect(Y_scaled, cfg, scenario.threshold_rel)
    tbd_ms = (time.perf_counter() - t0) * 1e3

    return _TrialResult(
        hyp_code=hyp_code, trial_index=trial_index, true_L=paths.L,
        tbd_detected=outcome.detected, tbd_statistic=outcome.statistic,
        tbd_threshold=outcome.threshold, tbd_failed=outcome.failed,
        tbd_ms=tbd_ms, energy=energy, energy_ms=energy_ms, sim_ms=sim_ms,
    )


def _rate(count: int, valid: int) -> float:
    return count / valid if valid > 0 else 0.0


def _aggregate_point(power_w, mu, k, point_idx, h1, h0, scenario,
                     records: list) -> tuple[ReportRow, ReportRow]:
    """Build both detectors' rows for one grid point."""
    cal = ebd_calibrate([r.energy for r in h0], scenario.target_pfa)

    for hyp_name, results in (("h1", h1), ("h0", h0)):
        for r in results:
            tid = f"{point_idx:03d}-{hyp_name}-{r.trial_index:05d}"
            records.append(TrialRecord(
                trial_id=tid, hypothesis=hyp_name, true_L=r.true_L,
                detector="tbd", detected=r.tbd_detected,
                statistic=r.tbd_statistic, threshold=r.tbd_threshold,
                failed=r.tbd_failed, wall_time_ms=r.tbd_ms,
            ))
            records.append(TrialRecord(
                trial_id=tid, hypothesis=hyp_name, true_L=r.true_L,
                detector="ebd", detected=r.energy > cal.threshold,
                statistic=r.energy, threshold=cal.threshold,
                failed=False, wall_time_ms=r.energy_ms,
            ))

    tbd_fail_h1 = sum(r.tbd_failed for r in h1)
    tbd_fail_h0 = sum(r.tbd_failed for r in h0)
    tbd_det_h1 = sum(r.tbd_detected for r in h1 if not r.tbd_failed)
    tbd_det_h0 = sum(r.tbd_detected for r in h0 if not r.tbd_failed)
    tbd_pd = _rate(tbd_det_h1, len(h1) - tbd_fail_h1)
    tbd_row = ReportRow(
        power_w=power_w, mu=mu, k=k, detector="tbd",
        p_d=tbd_pd, p_m=1.0 - tbd_pd,
        p_fa=_rate(tbd_det_h0, len(h0) - tbd_fail_h0),
        n_trials=len(h1), n_failures=tbd_fail_h1,
        n_trials_h0=len(h0), n_failures_h0=tbd_fail_h0,
    )

    ebd_det_h1 = sum(r.energy > cal.threshold for r in h1)
    ebd_det_h0 = sum(r.energy > cal.threshold for r in h0)
    ebd_pd = _rate(ebd_det_h1, len(h1))
    ebd_row = ReportRow(
        power_w=power_w, mu=mu, k=k, detector="ebd",
        p_d=ebd_pd, p_m=1.0 - ebd_pd,
        p_fa=_rate(ebd_det_h0, len(h0)),
        n_trials=len(h1), n_failures=0,
        n_trials_h0=len(h0), n_failures_h0=0,
    )
    return tbd_row, ebd_row


def run_sweep(spec: SweepSpec, scenario: ScenarioConfig,
              threads: int = 1) -> SweepReport:
    """Run the full Monte Carlo sweep.

    Parameters
    ----------
    spec : SweepSpec
        Grid and trial counts.
    scenario : ScenarioConfig
        Physical scene and solver settings shared by all trials.
    threads : int
        Worker process count; results are reduced in deterministic
        trial order, so the value never changes report contents.

    Returns
    -------
    SweepReport
        Two rows (detectors ``tbd`` and ``ebd``) per grid point, in
        power-major, then mu, then k order.
    """
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    for k in spec.k_grid:
        for power_w in spec.power_grid:
            try:
                dataclasses.replace(scenario.probe, P_T=power_w, K=k)
            except ValueError as exc:
                raise ConfigError(f"invalid grid point (power={power_w}, k={k}): {exc}") from exc

    t_start = time.perf_counter()
    points = [
        (power_w, mu, k)
        for power_w in spec.power_grid
        for mu in spec.mu_grid
        for k in spec.k_grid
    ]
    n_h1 = spec.trials_per_point
    n_h0 = max(spec.trials_per_point, 100)
    tasks = []
    for power_w, mu, k in points:
        tasks.extend(
            (scenario, power_w, mu, k, HYP_H1, i, spec.master_seed,
             spec.debris_count_h1)
            for i in range(n_h1)
        )
        tasks.extend(
            (scenario, power_w, mu, k, HYP_H0, i, spec.master_seed,
             spec.debris_count_h1)
            for i in range(n_h0)
        )

    if threads == 1:
        results = [_run_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunksize = max(1, len(tasks) // (threads * 8))
            results = list(pool.map(_run_trial, tasks, chunksize=chunksize))

    rows: list[ReportRow] = []
    records: list[TrialRecord] = []
    offset = 0
    for point_idx, (power_w, mu, k) in enumerate(points):
        h1 = results[offset:offset + n_h1]
        h0 = results[offset + n_h1:offset + n_h1 + n_h0]
        offset += n_h1 + n_h0
        rows.extend(
            _aggregate_point(power_w, mu, k, point_idx, h1, h0, scenario, records)
        )

    return SweepReport(
        rows=tuple(rows),
        config_echo=config_echo(scenario, spec),
        trials=tuple(records),
        solver_time_s=sum(r.tbd_ms for r in results) / 1e3,
        sim_time_s=sum(r.sim_ms + r.energy_ms for r in results) / 1e3,
        total_time_s=time.perf_counter() - t_start,
    )


def _row_dict(row: ReportRow) -> dict:
    return {
        "power_w": row.power_w, "mu": row.mu, "k": row.k,
        "detector": row.detector, "p_d": row.p_d, "p_m": row.p_m,
        "p_fa": row.p_fa, "n_trials": row.n_trials,
        "n_failures": row.n_failures, "n_trials_h0": row.n_trials_h0,
        "n_failures_h0": row.n_failures_h0,
    }


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_plots(report: SweepReport, out_dir: Path) -> list[Path]:
    """Render P_D-vs-power curves grouped by mu and by K."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "debrisense"

    def ordered(values):
        return list(dict.fromkeys(values))

    rows = report.rows
    mu_order = ordered(r.mu for r in rows)
    k_order = ordered(r.k for r in rows)
    detectors = ("tbd", "ebd")

    def curve(detector, mu, k):
        pts = sorted(
            (r.power_w, r.p_d) for r in rows
            if r.detector == detector and r.mu == mu and r.k == k
        )
        x = [10.0 * math.log10(p) for p, _ in pts]
        y = [pd for _, pd in pts]
        return x, y

    written = []
    specs = [
        ("pd_vs_power_by_mu.svg",
         [(d, mu, k_order[0], f"{d.upper()} mu={mu:g}")
          for d in detectors for mu in mu_order]),
        ("pd_vs_power_by_k.svg",
         [(d, mu_order[0], k, f"{d.upper()} K={k}")
          for d in detectors for k in k_order]),
    ]
    for filename, lines in specs:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for detector, mu, k, label in lines:
            x, y = curve(detector, mu, k)
            if x:
                style = "-o" if detector == "tbd" else "--s"
                ax.plot(x, y, style, label=label)
        ax.set_xlabel("transmit power (dBW)")
        ax.set_ylabel("probability of detection")
        ax.set_ylim(-0.05, 1.05)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = out_dir / filename
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def emit_report(report: SweepReport, formats, out_dir=".") -> list[Path]:
    """Write the report in the requested formats.

    Parameters
    ----------
    report : SweepReport
    formats : iterable of {"csv", "json", "svg"}
        Empty → nothing written (a warning is issued).
    out_dir : path-like
        Created if absent.

    Returns
    -------
    list of Path
        Files written, in a fixed order (csv, json, svg plots).
    """
    fmts = {str(f).strip().lower() for f in formats if str(f).strip()}
    unknown = fmts - {"csv", "json", "svg"}
    if unknown:
        raise ConfigError(f"unknown output formats: {', '.join(sorted(unknown))}")
    if not fmts:
        warnings.warn("no output formats selected; nothing written", stacklevel=2)
        return []
    if not report.rows:
        raise ValueError("cannot emit an empty report")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in fmts:
        lines = [REPORT_CSV_HEADER]
        lines.extend(row.csv_line() for row in report.rows)
        path = out / "report.csv"
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)
    if "json" in fmts:
        payload = {
            "format_version": report.format_version,
            "config": dict(report.config_echo),
            "rows": [_row_dict(row) for row in report.rows],
        }
        path = out / "report.json"
        _write_text(path, json.dumps(payload, indent=2) + "\n")
        written.append(path)
    if "svg" in fmts:
        written.extend(_write_plots(report, out))
    return written


def parse_report_csv(path) -> tuple[ReportRow, ...]:
    """Re-parse an emitted CSV into rows (H0 audit columns default 0)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != REPORT_CSV_HEADER:
        raise ValueError(f"{path}: missing report header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 9:
            raise ValueError(f"{path}: malformed row {ln!r}")
        rows.append(ReportRow(
            power_w=float(parts[0]), mu=float(parts[1]), k=int(parts[2]),
            detector=parts[3], p_d=float(parts[4]), p_m=float(parts[5]),
            p_fa=float(parts[6]), n_trials=int(parts[7]),
            n_failures=int(parts[8]),
        ))
    return tuple(rows)
