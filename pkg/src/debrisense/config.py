"""Line-based ``key = value`` configuration files.

Format: one ``key = value`` pair per line, ``#`` starts a comment
(full-line or trailing), blank lines are skipped, duplicate or unknown
keys are errors.  All units are SI, except power values which also
accept explicit ``dBm``/``dBW`` suffixes (``20 dBm`` = 0.1 W,
``30 dBW`` = 1000 W).  3-vectors are comma-separated (``0,0,0``); lists
of vectors separate items with ``;``; scalar grids separate items with
``,``.

Keys and defaults
-----------------
Geometry:
  ``tx_position`` (0,0,0), ``rx_position`` (0.25,0,0),
  ``tx_array_axis`` / ``rx_array_axis`` (0,0,1),
  ``debris_positions`` (empty; when set, H1 trials use exactly these
  instead of sampling), ``debris_box_min`` (0.05,-0.1,0.6) /
  ``debris_box_max`` (0.2,0.1,0.8) — debris crossing above the link,
  so reflected paths are well separated from the direct path in angle
  and delay while staying much weaker in energy.
Carrier & arrays:
  ``f`` (100e9), ``f_s`` (2e9), ``k_bar`` (128), ``bandwidth`` (2e9),
  ``k_abs`` (0), ``eta`` (2.0), ``sigma_rough`` (1e-4),
  ``reflection_mode`` (uniform_random), ``t_b`` (6000), ``t_0`` (1000),
  ``n_tx`` (64), ``n_rx`` (32), ``k_tx`` (4), ``k_rx`` (1),
  ``t_frames`` (20), ``m_subframes`` (32), ``k_training`` (6).
Solver & detection:
  ``l_hat`` (6), ``threshold_rel`` (1e-3), ``restarts`` (3),
  ``t_max`` (200), ``rel_change_tol`` (1e-6), ``epsilon`` (1e-10),
  ``init`` (gevd), ``target_pfa`` (0.05), ``noise_ref_level`` (0.16),
  ``noiseless_norm_target`` (1e4), ``noiseless`` (false).
Sweep:
  ``power_grid`` (5 dBW, 11 dBW, 17 dBW, 24 dBW, 30 dBW),
  ``mu_grid`` (0.06, 0.08, 0.1), ``k_grid`` (6),
  ``trials_per_point`` (200), ``debris_count_h1`` (1),
  ``master_seed`` (1).

``t_frames`` and ``m_subframes`` are artifact choices (the probing
protocol needs them but no standard value exists); all Table-style
physical defaults follow the simulation setup they mirror.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import GeometryConfig, NoiseModel
from .cpd import AlsConfig
from .signal_model import ProbeConfig

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SweepSpec",
    "config_echo",
    "default_config_text",
    "load_config",
    "parse_kv_text",
    "parse_power",
]


class ConfigError(Exception):
    """Invalid configuration file or option (CLI exit code 2)."""


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into an ordered dict.

    Raises `ConfigError` on malformed lines or duplicate keys.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_power(text: str) -> float:
    """Parse a power value in watts, ``dBm`` or ``dBW``."""
    t = str(text).strip().lower()
    try:
        if t.endswith("dbm"):
            return 10.0 ** (float(t[:-3]) / 10.0) / 1000.0
        if t.endswith("dbw"):
            return 10.0 ** (float(t[:-3]) / 10.0)
        if t.endswith("w"):
            return float(t[:-1])
        return float(t)
    except ValueError as exc:
        raise ConfigError(f"bad power value {text!r}") from exc


def _parse_float(key, s):
    try:
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"{key}: bad float {s!r}") from exc


def _parse_int(key, s):
    try:
        return int(s)
    except ValueError as exc:
        raise ConfigError(f"{key}: bad integer {s!r}") from exc


def _parse_bool(key, s):
    t = s.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: bad boolean {s!r}")


def _parse_vec3(key, s):
    parts = [p for p in s.split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 3 comma-separated components, got {s!r}")
    return np.array([_parse_float(key, p) for p in parts], dtype=np.float64)


def _parse_vec3_list(key, s):
    items = [item for item in s.split(";") if item.strip()]
    return tuple(_parse_vec3(key, item) for item in items)


def _parse_list(key, s, item_parser):
    items = [item.strip() for item in s.split(",") if item.strip()]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return tuple(item_parser(item) for item in items)


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and algorithmic parameters of one scenario.

    Bundles the scene geometry, noise model, and probing dimensions with
    the solver/detection knobs shared by every trial.  ``probe.P_T``
    and ``probe.K`` are placeholders here: the sweep harness substitutes
    each grid point's power and training-subcarrier count.
    """

    geometry: GeometryConfig
    noise: NoiseModel
    probe: ProbeConfig
    debris_box: tuple[np.ndarray, np.ndarray]
    l_hat: int = 6
    threshold_rel: float = 1e-3
    restarts: int = 3
    t_max: int = 200
    rel_change_tol: float = 1e-6
    epsilon: float = 1e-10
    init: str = "gevd"
    target_pfa: float = 0.05
    noise_ref_level: float = 0.16
    noiseless_norm_target: float = 1e4
    noiseless: bool = False

    def __post_init__(self):
        lo, hi = self.debris_box
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("debris_box bounds must be 3-vectors")
        if not np.all(hi >= lo):
            raise ValueError("debris_box_max must dominate debris_box_min")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "debris_box", (lo, hi))
        if not 0.0 < self.threshold_rel < 1.0:
            raise ValueError("threshold_rel must be in (0, 1)")
        if not 0.0 < self.target_pfa < 1.0:
            raise ValueError("target_pfa must be in (0, 1)")
        if not self.noise_ref_level > 0:
            raise ValueError("noise_ref_level must be > 0")
        if not self.noiseless_norm_target > 0:
            raise ValueError("noiseless_norm_target must be > 0")

    def als_config(self, mu: float, seed=None) -> AlsConfig:
        """The solver configuration for one trial at ridge weight ``mu``."""
        return AlsConfig(
            L_hat=self.l_hat, mu=mu, epsilon=self.epsilon, T_max=self.t_max,
            rel_change_tol=self.rel_change_tol, init=self.init,
            restarts=self.restarts, seed=seed,
        )


@dataclass(frozen=True)
class SweepSpec:
    """Monte Carlo sweep grid: power x mu x training subcarriers."""

    power_grid: tuple[float, ...]
    mu_grid: tuple[float, ...]
    k_grid: tuple[int, ...]
    trials_per_point: int
    debris_count_h1: int = 1
    master_seed: int = 1

    def __post_init__(self):
        for name in ("power_grid", "mu_grid", "k_grid"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, grid)
        if any(not p > 0 for p in self.power_grid):
            raise ValueError("powers must be > 0")
        if any(not m > 0 for m in self.mu_grid):
            raise ValueError("mu values must be > 0")
        if any(k < 1 for k in self.k_grid):
            raise ValueError("k values must be >= 1")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if self.debris_count_h1 < 1:
            raise ValueError("debris_count_h1 must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")


_DEFAULTS: dict[str, str] = {
    "tx_position": "0,0,0",
    "rx_position": "0.25,0,0",
    "tx_array_axis": "0,0,1",
    "rx_array_axis": "0,0,1",
    "debris_positions": "",
    "debris_box_min": "0.05,-0.1,0.6",
    "debris_box_max": "0.2,0.1,0.8",
    "f": "100e9",
    "f_s": "2e9",
    "k_bar": "128",
    "bandwidth": "2e9",
    "k_abs": "0",
    "eta": "2.0",
    "sigma_rough": "1e-4",
    "reflection_mode": "uniform_random",
    "t_b": "6000",
    "t_0": "1000",
    "n_tx": "64",
    "n_rx": "32",
    "k_tx": "4",
    "k_rx": "1",
    "t_frames": "20",
    "m_subframes": "32",
    "k_training": "6",
    "l_hat": "6",
    "threshold_rel": "1e-3",
    "restarts": "3",
    "t_max": "200",
    "rel_change_tol": "1e-6",
    "epsilon": "1e-10",
    "init": "gevd",
    "target_pfa": "0.05",
    "noise_ref_level": "0.16",
    "noiseless_norm_target": "1e4",
    "noiseless": "false",
    "power_grid": "5 dBW, 11 dBW, 17 dBW, 24 dBW, 30 dBW",
    "mu_grid": "0.06, 0.08, 0.1",
    "k_grid": "6",
    "trials_per_point": "200",
    "debris_count_h1": "1",
    "master_seed": "1",
}


def default_config_text() -> str:
    """A complete, commented config file with every default value."""
    lines = ["# debrisense scenario + sweep configuration (all defaults)"]
    lines.extend(f"{key} = {value}" for key, value in _DEFAULTS.items())
    return "\n".join(lines) + "\n"


def load_config(path=None, overrides: dict[str, str] | None = None
                ) -> tuple[ScenarioConfig, SweepSpec]:
    """Load a scenario and sweep spec, applying defaults for absent keys.

    Parameters
    ----------
    path : str or Path, optional
        Config file; ``None`` uses pure defaults.
    overrides : dict, optional
        Key/value strings applied after the file (e.g. CLI flags).

    Raises
    ------
    ConfigError
        On unreadable files, unknown keys, malformed values, or values
        that violate the domain invariants.
    """
    values = dict(_DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        file_values = parse_kv_text(text)
        unknown = sorted(set(file_values) - set(_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(file_values)
    if overrides:
        unknown = sorted(set(overrides) - set(_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update({k: str(v) for k, v in overrides.items()})

    try:
        geometry = GeometryConfig(
            tx_position=_parse_vec3("tx_position", values["tx_position"]),
            rx_position=_parse_vec3("rx_position", values["rx_position"]),
            debris_positions=_parse_vec3_list(
                "debris_positions", values["debris_positions"]
            ),
            f=_parse_float("f", values["f"]),
            f_s=_parse_float("f_s", values["f_s"]),
            K_bar=_parse_int("k_bar", values["k_bar"]),
            k_abs=_parse_float("k_abs", values["k_abs"]),
            eta=_parse_float("eta", values["eta"]),
            sigma_rough=_parse_float("sigma_rough", values["sigma_rough"]),
            reflection_mode=values["reflection_mode"],
            tx_array_axis=_parse_vec3("tx_array_axis", values["tx_array_axis"]),
            rx_array_axis=_parse_vec3("rx_array_axis", values["rx_array_axis"]),
        )
        noise = NoiseModel(
            T_b=_parse_float("t_b", values["t_b"]),
            T_0=_parse_float("t_0", values["t_0"]),
            B=_parse_float("bandwidth", values["bandwidth"]),
        )
        probe = ProbeConfig(
            N_tx=_parse_int("n_tx", values["n_tx"]),
            N_rx=_parse_int("n_rx", values["n_rx"]),
            K_tx=_parse_int("k_tx", values["k_tx"]),
            K_rx=_parse_int("k_rx", values["k_rx"]),
            T=_parse_int("t_frames", values["t_frames"]),
            M=_parse_int("m_subframes", values["m_subframes"]),
            K=_parse_int("k_training", values["k_training"]),
            K_bar=_parse_int("k_bar", values["k_bar"]),
            f_s=_parse_float("f_s", values["f_s"]),
            P_T=1.0,
        )

        box = (
            _parse_vec3("debris_box_min", values["debris_box_min"]),
            _parse_vec3("debris_box_max", values["debris_box_max"]),
        )

        scenario = ScenarioConfig(
            geometry=geometry,
            noise=noise,
            probe=probe,
            debris_box=box,
            l_hat=_parse_int("l_hat", values["l_hat"]),
            threshold_rel=_parse_float("threshold_rel", values["threshold_rel"]),
            restarts=_parse_int("restarts", values["restarts"]),
            t_max=_parse_int("t_max", values["t_max"]),
            rel_change_tol=_parse_float(
                "rel_change_tol", values["rel_change_tol"]
            ),
            epsilon=_parse_float("epsilon", values["epsilon"]),
            init=values["init"],
            target_pfa=_parse_float("target_pfa", values["target_pfa"]),
            noise_ref_level=_parse_float(
                "noise_ref_level", values["noise_ref_level"]
            ),
            noiseless_norm_target=_parse_float(
                "noiseless_norm_target", values["noiseless_norm_target"]
            ),
            noiseless=_parse_bool("noiseless", values["noiseless"]),
        )
        spec = SweepSpec(
            power_grid=_parse_list("power_grid", values["power_grid"], parse_power),
            mu_grid=_parse_list(
                "mu_grid", values["mu_grid"], lambda s: _parse_float("mu_grid", s)
            ),
            k_grid=_parse_list(
                "k_grid", values["k_grid"], lambda s: _parse_int("k_grid", s)
            ),
            trials_per_point=_parse_int(
                "trials_per_point", values["trials_per_point"]
            ),
            debris_count_h1=_parse_int(
                "debris_count_h1", values["debris_count_h1"]
            ),
            master_seed=_parse_int("master_seed", values["master_seed"]),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return scenario, spec


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, np.ndarray):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def config_echo(scenario: ScenarioConfig, spec: SweepSpec) -> dict[str, str]:
    """Canonical key/value echo of the effective configuration.

    Values are rendered from the parsed objects (not the raw file), so
    the echo is identical however the inputs were spelled; used verbatim
    in emitted reports.
    """
    g, n, p = scenario.geometry, scenario.noise, scenario.probe
    echo = {
        "tx_position": _fmt(g.tx_position),
        "rx_position": _fmt(g.rx_position),
        "tx_array_axis": _fmt(g.tx_array_axis),
        "rx_array_axis": _fmt(g.rx_array_axis),
        "debris_positions": "; ".join(_fmt(d) for d in g.debris_positions),
        "debris_box_min": _fmt(scenario.debris_box[0]),
        "debris_box_max": _fmt(scenario.debris_box[1]),
        "f": _fmt(g.f),
        "f_s": _fmt(g.f_s),
        "k_bar": str(g.K_bar),
        "bandwidth": _fmt(n.B),
        "k_abs": _fmt(g.k_abs),
        "eta": _fmt(g.eta),
        "sigma_rough": _fmt(g.sigma_rough),
        "reflection_mode": g.reflection_mode,
        "t_b": _fmt(n.T_b),
        "t_0": _fmt(n.T_0),
        "n_tx": str(p.N_tx),
        "n_rx": str(p.N_rx),
        "k_tx": str(p.K_tx),
        "k_rx": str(p.K_rx),
        "t_frames": str(p.T),
        "m_subframes": str(p.M),
        "k_training": str(p.K),
        "l_hat": str(scenario.l_hat),
        "threshold_rel": _fmt(scenario.threshold_rel),
        "restarts": str(scenario.restarts),
        "t_max": str(scenario.t_max),
        "rel_change_tol": _fmt(scenario.rel_change_tol),
        "epsilon": _fmt(scenario.epsilon),
        "init": scenario.init,
        "target_pfa": _fmt(scenario.target_pfa),
        "noise_ref_level": _fmt(scenario.noise_ref_level),
        "noiseless_norm_target": _fmt(scenario.noiseless_norm_target),
        "noiseless": str(scenario.noiseless).lower(),
        "power_grid": ", ".join(repr(x) for x in spec.power_grid),
        "mu_grid": ", ".join(repr(x) for x in spec.mu_grid),
        "k_grid": ", ".join(str(x) for x in spec.k_grid),
        "trials_per_point": str(spec.trials_per_point),
        "debris_count_h1": str(spec.debris_count_h1),
        "master_seed": str(spec.master_seed),
    }
    return echo
