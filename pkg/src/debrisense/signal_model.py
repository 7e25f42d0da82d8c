"""Received-tensor assembly for the random probing protocol.

The transmitter sends an all-ones pilot through one effective
frequency-flat beamforming vector per time frame (matrix ``P``), and the
receiver applies one combining vector per sub-frame (matrix ``Q``).
Stacking sub-frames x frames x training subcarriers gives the received
third-order tensor

    Y = sum_l (Q^T a_rx(theta_l)) o (P^T a_tx(phi_l)) o (alpha_l g(tau_l)) + W

whose CP rank equals the number of propagation paths whenever the three
per-path vector families are linearly independent.  Slice ``k`` of the
same tensor equals ``Q^T H_k P + W_k``; both constructions are provided
and must agree entrywise, which pins the whole channel/probing pipeline.

Power bookkeeping: the transmit power splits evenly over all ``K_bar``
subcarriers, so each column of ``P`` carries power ``P_T / K_bar`` and
each of its entries has amplitude ``sqrt(P_T / K_bar) / sqrt(N_tx)``.
``Q`` keeps raw unit-modulus entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PathSet, channel_matrix, steering_vector
from .tensor_ops import ComplexTensor3

__all__ = [
    "ProbeConfig",
    "ProbeMatrices",
    "build_received_tensor",
    "build_received_tensor_slices",
    "delay_signature",
    "generate_probes",
]


@dataclass(frozen=True)
class ProbeConfig:
    """Probing protocol dimensions and transmit power.

    Attributes
    ----------
    N_tx, N_rx : int
        Antenna counts at the transmit and receive satellites.
    K_tx, K_rx : int
        RF-chain counts.  Descriptive only: the receive satellite has a
        single RF chain, which is why combining vectors are applied one
        sub-frame at a time.
    T : int
        Time frames (one beamforming vector each).
    M : int
        Sub-frames per frame (one combining vector each).
    K : int
        Training subcarriers, ``K <= K_bar``.
    K_bar : int
        Total subcarriers.
    f_s : float
        OFDM sampling rate in Hz (sets the per-subcarrier delay phase).
    P_T : float
        Total transmit power in watts, > 0.
    seed : int, SeedSequence or None
        Default stream for `generate_probes`.
    """

    N_tx: int = 64
    N_rx: int = 32
    K_tx: int = 4
    K_rx: int = 1
    T: int = 20
    M: int = 32
    K: int = 6
    K_bar: int = 128
    f_s: float = 2e9
    P_T: float = 1.0
    seed: int | np.random.SeedSequence | None = None

    def __post_init__(self):
        for name in ("N_tx", "N_rx", "K_tx", "K_rx", "T", "M", "K", "K_bar"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.K > self.K_bar:
            raise ValueError(f"K={self.K} exceeds K_bar={self.K_bar}")
        if not self.f_s > 0:
            raise ValueError(f"f_s must be > 0, got {self.f_s}")
        if not self.P_T > 0:
            raise ValueError(f"P_T must be > 0, got {self.P_T}")


@dataclass(frozen=True)
class ProbeMatrices:
    """Effective beamforming matrix ``P`` and combining matrix ``Q``.

    ``P`` is ``N_tx x T`` with constant-modulus entries (unit circle
    draws scaled for power); ``Q`` is ``N_rx x M`` with unit-modulus
    entries.
    """

    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.complex128)
        Q = np.asarray(self.Q, dtype=np.complex128)
        if P.ndim != 2 or Q.ndim != 2:
            raise ValueError("P and Q must be matrices")
        mags_p = np.abs(P)
        if mags_p.size and not np.allclose(mags_p, mags_p.flat[0], rtol=1e-9):
            raise ValueError("P entries must share one modulus")
        if not np.allclose(np.abs(Q), 1.0, rtol=1e-9, atol=1e-9):
            raise ValueError("Q entries must have unit modulus")
        for name, mat in (("P", P), ("Q", Q)):
            mat = mat.copy()
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)


def generate_probes(cfg: ProbeConfig, rng=None) -> ProbeMatrices:
    """Draw the random probing matrices.

    Every entry starts as ``exp(j*phi)`` with ``phi ~ U[0, 2*pi)``; the
    beamforming matrix is then scaled so each column carries power
    ``P_T / K_bar`` per training subcarrier.  Deterministic given the
    seed (``rng`` overrides ``cfg.seed``).
    """
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    phases_p = rng.uniform(0.0, 2 * np.pi, size=(cfg.N_tx, cfg.T))
    phases_q = rng.uniform(0.0, 2 * np.pi, size=(cfg.N_rx, cfg.M))
    amp = np.sqrt(cfg.P_T / cfg.K_bar) / np.sqrt(cfg.N_tx)
    P = amp * np.exp(1j * phases_p)
    Q = np.exp(1j * phases_q)
    return ProbeMatrices(P=P, Q=Q)


def delay_signature(tau: float, f_s: float, K: int, K_bar: int) -> np.ndarray:
    """Per-subcarrier phase signature of a path delay.

    Entry ``k`` (1-based, ``k = 1..K``) is ``exp(-j*2*pi*tau*f_s*k/K_bar)``;
    all entries lie on the unit circle.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > K_bar:
        raise ValueError(f"K={K} exceeds K_bar={K_bar}")
    k = np.arange(1, K + 1)
    return np.exp(-2j * np.pi * tau * f_s * k / K_bar)


def _check_probe_dims(ps: PathSet, pm: ProbeMatrices, cfg: ProbeConfig) -> None:
    if pm.Q.shape != (cfg.N_rx, cfg.M):
        raise ValueError(
            f"Q has shape {pm.Q.shape}, expected {(cfg.N_rx, cfg.M)}"
        )
    if pm.P.shape != (cfg.N_tx, cfg.T):
        raise ValueError(
            f"P has shape {pm.P.shape}, expected {(cfg.N_tx, cfg.T)}"
        )


def _noise(shape, noise_var: float, rng) -> np.ndarray:
    """Circular complex AWGN with per-entry variance ``noise_var``."""
    scale = np.sqrt(noise_var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def build_received_tensor(ps: PathSet, pm: ProbeMatrices, cfg: ProbeConfig,
                          noise_var: float, rng=None) -> ComplexTensor3:
    """Assemble the ``M x T x K`` received tensor, CP-style.

    Sums one rank-1 term per path,
    ``(Q^T a_rx(theta_l)) o (P^T a_tx(phi_l)) o (alpha_l g(tau_l))``,
    then adds i.i.d. circular complex Gaussian noise with per-entry
    variance ``noise_var``.  With ``noise_var == 0`` no random draws are
    consumed.

    Raises
    ------
    ValueError
        On probe/config dimension mismatch or negative ``noise_var``.
    """
    _check_probe_dims(ps, pm, cfg)
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    rng = np.random.default_rng(rng)
    Y = np.zeros((cfg.M, cfg.T, cfg.K), dtype=np.complex128)
    for p in ps.paths:
        a_rx = pm.Q.T @ steering_vector(p.theta, cfg.N_rx)
        a_tx = pm.P.T @ steering_vector(p.phi, cfg.N_tx)
        g = p.alpha * delay_signature(p.tau, cfg.f_s, cfg.K, cfg.K_bar)
        Y += a_rx[:, None, None] * a_tx[None, :, None] * g[None, None, :]
    if noise_var > 0:
        Y += _noise(Y.shape, noise_var, rng)
    return ComplexTensor3(Y)


def build_received_tensor_slices(ps: PathSet, pm: ProbeMatrices,
                                 cfg: ProbeConfig, geom, noise_var: float,
                                 rng=None) -> ComplexTensor3:
    """Assemble the received tensor slice-by-slice: ``Y[:,:,k] = Q^T H_k P``.

    Independent construction route used to cross-check
    `build_received_tensor`: the two must agree entrywise when fed the
    same paths, probes, and noise stream (the noise tensor is drawn in
    one block at the end, exactly as the CP route draws it).  ``geom``
    supplies ``f_s``/``K_bar`` for `channel_matrix` and must match the
    probe config.
    """
    _check_probe_dims(ps, pm, cfg)
    if noise_var < 0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    if (geom.f_s, geom.K_bar) != (cfg.f_s, cfg.K_bar):
        raise ValueError("geometry and probe config disagree on f_s/K_bar")
    rng = np.random.default_rng(rng)
    Y = np.empty((cfg.M, cfg.T, cfg.K), dtype=np.complex128)
    for k in range(1, cfg.K + 1):
        H_k = channel_matrix(ps, k, geom, cfg.N_rx, cfg.N_tx)
        Y[:, :, k - 1] = pm.Q.T @ H_k @ pm.P
    if noise_var > 0:
        Y += _noise(Y.shape, noise_var, rng)
    return ComplexTensor3(Y)
