"""Geometric THz channel model for an inter-satellite link.

Builds propagation path sets from explicit 3-D geometry (one LOS path
between the satellites plus one reflected path per debris object),
evaluates the spherical-spreading/molecular-absorption gain of each
path, and assembles per-subcarrier frequency-domain channel matrices
from uniform-linear-array steering vectors.

Angle convention: each satellite carries a half-wavelength ULA whose
axis is a configured unit vector.  A path arriving or departing along
unit direction ``d`` sees the array at the angle ``asin(d . axis)``
measured from broadside, so the steering phase progression is
``pi * n * sin(angle) = pi * n * (d . axis)``.  Angles are stored
wrapped to ``[0, 2*pi)``.

Reflection off debris supports two modes: ``physical`` evaluates the
smooth-surface Fresnel coefficient with a Rayleigh roughness factor at
the specular incidence angle, while ``uniform_random`` (the default)
draws ``|R| ~ U(0,1)`` with phase ``U[0, 2*pi)``, modeling debris of
unknown material and attitude — highly reflective surfaces map to draws
near 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BOLTZMANN",
    "SPEED_OF_LIGHT",
    "GeometryConfig",
    "NoiseModel",
    "Path",
    "PathSet",
    "build_path_set",
    "channel_matrix",
    "los_gain",
    "nlos_gain",
    "noise_temperature",
    "noise_variance",
    "steering_vector",
]

SPEED_OF_LIGHT = 299_792_458.0  # m/s
BOLTZMANN = 1.380649e-23  # J/K

_REFLECTION_MODES = ("physical", "uniform_random")


def _unit3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    n = float(np.linalg.norm(arr))
    if n == 0.0:
        raise ValueError(f"{name} must be nonzero")
    return arr / n


def _point3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class GeometryConfig:
    """Scene geometry and propagation constants.

    Attributes
    ----------
    tx_position, rx_position : ndarray
        Satellite positions in meters.
    debris_positions : tuple of ndarray
        Zero or more debris positions in meters.
    f : float
        Carrier frequency in Hz.
    f_s : float
        OFDM sampling rate in Hz.
    K_bar : int
        Total number of OFDM subcarriers.
    k_abs : float
        Molecular absorption coefficient in 1/m (0 for a vacuum link).
    eta : float
        Refractive index of the debris surface (``physical`` mode only,
        must exceed 1 there).
    sigma_rough : float
        Surface height standard deviation in meters.
    reflection_mode : {"physical", "uniform_random"}
    tx_array_axis, rx_array_axis : ndarray
        Unit vectors along each ULA; normalized on construction.
    """

    tx_position: np.ndarray
    rx_position: np.ndarray
    debris_positions: tuple = ()
    f: float = 100e9
    f_s: float = 2e9
    K_bar: int = 128
    k_abs: float = 0.0
    eta: float = 2.0
    sigma_rough: float = 1e-4
    reflection_mode: str = "uniform_random"
    tx_array_axis: np.ndarray = (0.0, 0.0, 1.0)
    rx_array_axis: np.ndarray = (0.0, 0.0, 1.0)

    def __post_init__(self):
        tx = _point3(self.tx_position, "tx_position")
        rx = _point3(self.rx_position, "rx_position")
        if np.array_equal(tx, rx):
            raise ValueError("tx_position and rx_position must differ")
        debris = tuple(
            _point3(d, f"debris_positions[{i}]")
            for i, d in enumerate(self.debris_positions)
        )
        if not self.f > 0:
            raise ValueError(f"f must be > 0, got {self.f}")
        if not self.f_s > 0:
            raise ValueError(f"f_s must be > 0, got {self.f_s}")
        if self.K_bar < 1:
            raise ValueError(f"K_bar must be >= 1, got {self.K_bar}")
        if self.k_abs < 0:
            raise ValueError(f"k_abs must be >= 0, got {self.k_abs}")
        if self.sigma_rough < 0:
            raise ValueError(f"sigma_rough must be >= 0, got {self.sigma_rough}")
        if self.reflection_mode not in _REFLECTION_MODES:
            raise ValueError(
                f"reflection_mode must be one of {_REFLECTION_MODES}, "
                f"got {self.reflection_mode!r}"
            )
        for name, val in (
            ("tx_position", tx),
            ("rx_position", rx),
            ("debris_positions", debris),
            ("tx_array_axis", _unit3(self.tx_array_axis, "tx_array_axis")),
            ("rx_array_axis", _unit3(self.rx_array_axis, "rx_array_axis")),
        ):
            if isinstance(val, np.ndarray):
                val = val.copy()
                val.setflags(write=False)
            object.__setattr__(self, name, val)


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise temperatures and bandwidth.

    ``T_b`` is the solar brightness temperature, ``T_0`` the ambient
    noise temperature (both Kelvin, >= 0), ``B`` the bandwidth in Hz.
    """

    T_b: float = 6000.0
    T_0: float = 1000.0
    B: float = 2e9

    def __post_init__(self):
        if self.T_b < 0 or self.T_0 < 0:
            raise ValueError("temperatures must be >= 0")
        if not self.B > 0:
            raise ValueError(f"B must be > 0, got {self.B}")


@dataclass(frozen=True)
class Path:
    """One propagation path: complex gain, angles, delay, LOS flag."""

    alpha: complex
    theta: float  # AoA at the receive array, radians in [0, 2*pi)
    phi: float  # AoD at the transmit array, radians in [0, 2*pi)
    tau: float  # delay in seconds, >= 0
    is_los: bool

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        object.__setattr__(self, "theta", float(self.theta) % (2 * np.pi))
        object.__setattr__(self, "phi", float(self.phi) % (2 * np.pi))
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class PathSet:
    """The paths of one live link: exactly one LOS plus reflections."""

    paths: tuple

    def __post_init__(self):
        paths = tuple(self.paths)
        if len(paths) < 1:
            raise ValueError("a live link needs at least one path")
        n_los = sum(1 for p in paths if p.is_los)
        if n_los != 1:
            raise ValueError(f"expected exactly one LOS path, got {n_los}")
        object.__setattr__(self, "paths", paths)

    @property
    def L(self) -> int:
        """Number of paths."""
        return len(self.paths)


def steering_vector(angle: float, N: int) -> np.ndarray:
    """Half-wavelength ULA response vector.

    Entry ``n`` (1-based) equals ``exp(j*pi*(n-1)*sin(angle)) / sqrt(N)``,
    so the vector has unit Euclidean norm.  Angles whose sines agree
    alias to the same vector; that is a property of the array, not a
    defect.

    Parameters
    ----------
    angle : float
        Angle from array broadside in radians.
    N : int
        Number of antenna elements, >= 1.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    n = np.arange(N)
    return np.exp(1j * np.pi * n * np.sin(angle)) / np.sqrt(N)


def los_gain(geom: GeometryConfig) -> complex:
    """Complex gain of the direct satellite-to-satellite path.

    Evaluates ``c/(4*pi*f*r) * exp(-k_abs*r/2) * exp(-j*2*pi*f*tau)``
    with ``tau = r/c``: spherical spreading, molecular absorption over
    the path, and the carrier phase accumulated over the delay.
    """
    r = float(np.linalg.norm(geom.rx_position - geom.tx_position))
    if r <= 0:
        raise ValueError("satellite separation must be positive")
    tau = r / SPEED_OF_LIGHT
    amp = SPEED_OF_LIGHT / (4 * np.pi * geom.f * r) * np.exp(-geom.k_abs * r / 2)
    return complex(amp * np.exp(-2j * np.pi * geom.f * tau))


def incidence_angle(tx, debris, rx) -> float:
    """Specular incidence angle at a reflector.

    For a mirror-like bounce the surface normal bisects the directions
    back toward the transmitter and on toward the receiver, so the
    incidence angle is half the angle between ``tx - debris`` and
    ``rx - debris``.  Returns a value in ``[0, pi/2]``.
    """
    u = _unit3(np.asarray(tx, float) - np.asarray(debris, float), "tx - debris")
    v = _unit3(np.asarray(rx, float) - np.asarray(debris, float), "rx - debris")
    return 0.5 * float(np.arccos(np.clip(np.dot(u, v), -1.0, 1.0)))


def reflection_coefficient(geom: GeometryConfig, psi: float, rng=None) -> complex:
    """Reflection coefficient ``R`` for an incidence angle ``psi``.

    ``physical`` mode: ``R = gamma * rho`` with the smooth-surface
    Fresnel coefficient ``gamma = -exp(-2*cos(psi)/sqrt(eta^2 - 1))``
    and the Rayleigh roughness factor
    ``rho = exp(-8*pi^2*f^2*sigma^2*cos(psi)^2 / c^2)``.

    ``uniform_random`` mode: ``|R| ~ U(0, 1)``, phase ``U[0, 2*pi)``,
    drawn from ``rng``.
    """
    if geom.reflection_mode == "physical":
        if geom.eta <= 1.0:
            raise ValueError(
                f"physical reflection needs eta > 1, got {geom.eta}"
            )
        gamma = -np.exp(-2.0 * np.cos(psi) / np.sqrt(geom.eta**2 - 1.0))
        rho = np.exp(
            -8.0 * np.pi**2 * geom.f**2 * geom.sigma_rough**2
            * np.cos(psi) ** 2 / SPEED_OF_LIGHT**2
        )
        return complex(gamma * rho)
    rng = np.random.default_rng(rng)
    magnitude = rng.uniform(0.0, 1.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    return complex(magnitude * np.exp(1j * phase))


def nlos_gain(geom: GeometryConfig, debris_index: int, rng=None) -> complex:
    """Complex gain of the path reflected off one debris object.

    Spherical spreading and absorption act over the full detour
    ``r1 + r2`` (transmitter->debris plus debris->receiver), multiplied
    by the reflection coefficient at the specular incidence angle and
    the carrier phase over ``tau = (r1 + r2)/c``.

    Parameters
    ----------
    geom : GeometryConfig
    debris_index : int
        Index into ``geom.debris_positions``.
    rng : numpy Generator or seed, optional
        Required stream for ``uniform_random`` reflections.
    """
    debris = geom.debris_positions[debris_index]
    r1 = float(np.linalg.norm(debris - geom.tx_position))
    r2 = float(np.linalg.norm(geom.rx_position - debris))
    if r1 <= 0 or r2 <= 0:
        raise ValueError("debris must not be collocated with a satellite")
    psi = incidence_angle(geom.tx_position, debris, geom.rx_position)
    R = reflection_coefficient(geom, psi, rng=rng)
    detour = r1 + r2
    tau = detour / SPEED_OF_LIGHT
    amp = SPEED_OF_LIGHT / (4 * np.pi * geom.f * detour) \
        * np.exp(-geom.k_abs * detour / 2)
    return complex(amp * R * np.exp(-2j * np.pi * geom.f * tau))


def _broadside_angle(direction: np.ndarray, axis: np.ndarray) -> float:
    """Angle from array broadside for a propagation direction."""
    d = direction / np.linalg.norm(direction)
    return float(np.arcsin(np.clip(np.dot(d, axis), -1.0, 1.0)))


def build_path_set(geom: GeometryConfig, rng=None) -> PathSet:
    """Construct the link's paths from the scene geometry.

    One LOS path (angles from the direct TX->RX direction projected on
    each array axis) plus one reflected path per debris position.
    Deterministic given ``(geom, rng)``; ``rng`` feeds only the
    ``uniform_random`` reflection draws, consumed in debris order.

    Raises
    ------
    ValueError
        If any debris is collocated with a satellite.
    """
    rng = np.random.default_rng(rng)
    tx, rx = geom.tx_position, geom.rx_position
    d_los = rx - tx
    r = float(np.linalg.norm(d_los))
    los = Path(
        alpha=los_gain(geom),
        theta=_broadside_angle(d_los, geom.rx_array_axis),
        phi=_broadside_angle(d_los, geom.tx_array_axis),
        tau=r / SPEED_OF_LIGHT,
        is_los=True,
    )
    paths = [los]
    for idx, debris in enumerate(geom.debris_positions):
        r1 = float(np.linalg.norm(debris - tx))
        r2 = float(np.linalg.norm(rx - debris))
        if r1 <= 0 or r2 <= 0:
            raise ValueError(
                f"debris_positions[{idx}] is collocated with a satellite"
            )
        paths.append(
            Path(
                alpha=nlos_gain(geom, idx, rng=rng),
                theta=_broadside_angle(rx - debris, geom.rx_array_axis),
                phi=_broadside_angle(debris - tx, geom.tx_array_axis),
                tau=(r1 + r2) / SPEED_OF_LIGHT,
                is_los=False,
            )
        )
    return PathSet(tuple(paths))


def channel_matrix(ps: PathSet, k: int, geom: GeometryConfig,
                   N_rx: int, N_tx: int) -> np.ndarray:
    """Frequency-domain channel matrix at training subcarrier ``k``.

    ``H_k = sum_l alpha_l * exp(-j*2*pi*tau_l*f_s*k/K_bar)
    * a_rx(theta_l) a_tx(phi_l)^T`` over the path set, a matrix of rank
    at most ``L``.  ``k`` is 1-based over the training subcarriers.
    """
    if k < 1:
        raise ValueError(f"subcarrier index must be >= 1, got {k}")
    H = np.zeros((N_rx, N_tx), dtype=np.complex128)
    for p in ps.paths:
        shift = np.exp(-2j * np.pi * p.tau * geom.f_s * k / geom.K_bar)
        H += p.alpha * shift * np.outer(
            steering_vector(p.theta, N_rx), steering_vector(p.phi, N_tx)
        )
    return H


def noise_temperature(nm: NoiseModel) -> float:
    """System noise temperature ``T_N = T_b + T_0`` in Kelvin."""
    return nm.T_b + nm.T_0


def noise_variance(nm: NoiseModel, K_bar: int) -> float:
    """Per-entry complex AWGN variance over one subcarrier.

    The thermal floor over a subcarrier's share of the bandwidth:
    ``k_B * (T_b + T_0) * B / K_bar`` watts.
    """
    if K_bar < 1:
        raise ValueError(f"K_bar must be >= 1, got {K_bar}")
    return BOLTZMANN * noise_temperature(nm) * nm.B / K_bar
