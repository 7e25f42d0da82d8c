"""Regularized ALS CP decomposition and tensor-rank estimation.

The solver minimizes the ridge-penalized trilinear objective

    || Y - [[A, B, C]] ||_F^2 + mu * (||A||_F^2 + ||B||_F^2 + ||C||_F^2)

by alternating exact block updates: with ``Z = C (.) B`` (Khatri-Rao),
the A-step solves ``A^T <- (Z^H Z + mu I)^-1 Z^H Y1^T`` against the
mode-1 unfolding ``Y1``, and the B/C steps are the cyclic analogues.
The Gram matrix ``Z^H Z`` is formed via the Hadamard identity
``(C^H C) * (B^H B)`` rather than from ``Z`` itself.

The ridge does double duty: it guarantees nonsingular block systems and
it actively collapses surplus CP components.  A lone rank-1 component of
strength ``s`` admits a nonzero balanced stationary point only when
``s >= 4 * (mu/3)^(3/4)``; weaker components contract to zero, which is
what makes the column-count of the converged factors an estimator of
the tensor rank (`estimate_rank`, `estimate_paths`).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .tensor_ops import FactorSet, as_array, cp_array, khatri_rao, unfold

__all__ = [
    "AlsConfig",
    "DegradedInitError",
    "NumericalFailureError",
    "RankEstimate",
    "als_cpd",
    "best_cpd",
    "estimate_paths",
    "estimate_rank",
    "gevd_init",
    "regularized_objective",
    "ridge_update",
]

_TINY = np.finfo(np.float64).tiny


class DegradedInitError(Exception):
    """The GEVD slice pencil is too ill-conditioned to trust.

    Raised when the generalized eigenvalues are non-finite or two of
    them (relatively) coincide to within 1e-10; callers fall back to a
    random initialization.
    """


class NumericalFailureError(Exception):
    """ALS produced a non-finite objective.

    Attributes
    ----------
    iteration : int
        Sweep index at which the failure was detected (0 = at init).
    """

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"non-finite ALS objective at sweep {iteration}")


@dataclass(frozen=True)
class AlsConfig:
    """Solver knobs for `als_cpd` and `estimate_paths`.

    Attributes
    ----------
    L_hat : int
        Overestimated CP rank (column count of the factors), >= 1.
    mu : float
        Ridge weight, > 0.
    epsilon : float
        Absolute residual-norm tolerance: stop once
        ``||[[A,B,C]] - Y||_F < epsilon``.  Effectively fires only on
        (near-)noiseless data; `rel_change_tol` handles the noisy case.
    T_max : int
        Maximum number of full ALS sweeps, >= 1.
    rel_change_tol : float
        Stop when the relative change of the regularized objective over
        one sweep drops below this, > 0.
    init : {"gevd", "random"}
        Initialization strategy.  "gevd" falls back to random when the
        slice pencil is degenerate or its preconditions fail.
    restarts : int
        Number of independent solves `estimate_paths` performs, >= 1.
    seed : int, SeedSequence or None
        Seeds the random draws (random inits, GEVD slice mixtures).
    """

    L_hat: int
    mu: float
    epsilon: float = 1e-10
    T_max: int = 200
    rel_change_tol: float = 1e-6
    init: str = "gevd"
    restarts: int = 3
    seed: int | np.random.SeedSequence | None = None

    def __post_init__(self):
        if self.L_hat < 1:
            raise ValueError(f"L_hat must be >= 1, got {self.L_hat}")
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.T_max < 1:
            raise ValueError(f"T_max must be >= 1, got {self.T_max}")
        if not self.rel_change_tol > 0:
            raise ValueError(
                f"rel_change_tol must be > 0, got {self.rel_change_tol}"
            )
        if self.init not in ("gevd", "random"):
            raise ValueError(f"init must be 'gevd' or 'random', got {self.init!r}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass(frozen=True)
class RankEstimate:
    """Per-factor and combined effective ranks of a `FactorSet`.

    Attributes
    ----------
    per_factor_ranks : tuple of int
        Count of singular values above ``threshold_rel * sigma_1`` for
        each of A, B, C (0 when ``sigma_1 == 0``).
    combined_rank : int
        Median of the three per-factor ranks (upper median, i.e. ties
        break toward the larger value).
    singular_values : tuple of ndarray
        The three descending singular-value lists.
    threshold_rel : float
        Relative threshold used, in (0, 1).
    """

    per_factor_ranks: tuple[int, int, int]
    combined_rank: int
    singular_values: tuple[np.ndarray, np.ndarray, np.ndarray]
    threshold_rel: float


def regularized_objective(Y, A, B, C, mu: float) -> float:
    """Evaluate ``||Y - [[A,B,C]]||_F^2 + mu*(||A||^2+||B||^2+||C||^2)``."""
    arr = as_array(Y)
    fit = np.linalg.norm(arr - cp_array(A, B, C)) ** 2
    penalty = (
        np.linalg.norm(A) ** 2 + np.linalg.norm(B) ** 2 + np.linalg.norm(C) ** 2
    )
    return float(fit + mu * penalty)


def ridge_update(Y_mode: np.ndarray, Z: np.ndarray, mu: float,
                 gram: np.ndarray | None = None) -> np.ndarray:
    """Exact solution of one ALS block.

    Returns ``argmin_F ||Y_mode - Z @ F.T||_F^2 + mu * ||F||_F^2``, i.e.
    ``F.T = (Z^H Z + mu I)^-1 Z^H Y_mode.T``.

    Parameters
    ----------
    Y_mode : ndarray, shape (d, n)
        A mode unfolding of the data tensor.
    Z : ndarray, shape (n, F)
        Khatri-Rao product of the two fixed factors.
    mu : float
        Ridge weight, > 0.
    gram : ndarray, optional
        Precomputed ``Z^H Z`` (e.g. via the Hadamard identity).
    """
    if gram is None:
        gram = Z.conj().T @ Z
    F = Z.shape[1]
    lhs = gram + mu * np.eye(F)
    rhs = Z.conj().T @ Y_mode.T
    return scipy.linalg.solve(lhs, rhs, assume_a="pos").T


def _random_factors(dims, L, rng):
    I, J, K = dims
    def draw(d):
        return (rng.standard_normal((d, L)) + 1j * rng.standard_normal((d, L))) \
            / np.sqrt(2.0)
    return draw(I), draw(J), draw(K)


def als_cpd(Y, cfg: AlsConfig, *, init_factors: FactorSet | None = None,
            rng=None, objective_trace: list | None = None) -> FactorSet:
    """Regularized alternating least squares CP decomposition.

    Runs exact ridge block updates in the cyclic order A, B, C until the
    residual norm drops below ``cfg.epsilon``, the relative objective
    change over a sweep drops below ``cfg.rel_change_tol``, or
    ``cfg.T_max`` sweeps have run.  The regularized objective is
    non-increasing across every block update because each update is the
    block minimizer.

    Parameters
    ----------
    Y : ComplexTensor3 or array_like
        Data tensor, finite, shape ``(I, J, K)``.
    cfg : AlsConfig
    init_factors : FactorSet, optional
        Start from these factors instead of ``cfg.init``.
    rng : numpy Generator or seed, optional
        Overrides ``cfg.seed`` for the random draws.
    objective_trace : list, optional
        If given, the regularized objective is appended after the
        initialization and after every single block update.

    Returns
    -------
    FactorSet

    Raises
    ------
    ValueError
        If the tensor is not finite or ``L_hat`` exceeds the largest
        identifiable rank ``min(I*J, J*K, I*K)``.
    NumericalFailureError
        If the objective turns non-finite, reporting the sweep index.
    """
    arr = as_array(Y)
    if not np.isfinite(arr).all():
        raise ValueError("tensor entries must be finite")
    I, J, K = arr.shape
    L = cfg.L_hat
    if L > min(I * J, J * K, I * K):
        raise ValueError(
            f"L_hat={L} exceeds min over modes of the complementary dim "
            f"products ({min(I * J, J * K, I * K)})"
        )
    rng = np.random.default_rng(cfg.seed if rng is None else rng)

    if init_factors is not None:
        A = np.array(init_factors.A, dtype=np.complex128)
        B = np.array(init_factors.B, dtype=np.complex128)
        C = np.array(init_factors.C, dtype=np.complex128)
        if (A.shape, B.shape, C.shape) != ((I, L), (J, L), (K, L)):
            raise ValueError("init_factors dims do not match tensor/config")
    else:
        A = B = C = None
        if cfg.init == "gevd" and K >= 2 and min(I, J) >= L:
            try:
                fs0 = gevd_init(arr, L, rng=rng)
                A, B, C = fs0.A.copy(), fs0.B.copy(), fs0.C.copy()
            except DegradedInitError:
                pass
        if A is None:
            A, B, C = _random_factors((I, J, K), L, rng)

    Y1 = unfold(arr, 1)
    Y2 = unfold(arr, 2)
    Y3 = unfold(arr, 3)
    mu = cfg.mu

    def objective(a, b, c):
        return regularized_objective(arr, a, b, c, mu)

    residual = float(np.linalg.norm(arr - cp_array(A, B, C)))
    obj = objective(A, B, C)
    if not np.isfinite(obj):
        raise NumericalFailureError(0)
    if objective_trace is not None:
        objective_trace.append(obj)

    it = 0
    while residual >= cfg.epsilon and it < cfg.T_max:
        gram_c = C.conj().T @ C
        gram_b = B.conj().T @ B
        A = ridge_update(Y1, khatri_rao(C, B), mu, gram=gram_c * gram_b)
        if objective_trace is not None:
            objective_trace.append(objective(A, B, C))
        gram_a = A.conj().T @ A
        B = ridge_update(Y2, khatri_rao(C, A), mu, gram=gram_c * gram_a)
        if objective_trace is not None:
            objective_trace.append(objective(A, B, C))
        gram_b = B.conj().T @ B
        C = ridge_update(Y3, khatri_rao(B, A), mu, gram=gram_b * gram_a)
        it += 1

        residual = float(np.linalg.norm(arr - cp_array(A, B, C)))
        penalty = (
            np.linalg.norm(A) ** 2
            + np.linalg.norm(B) ** 2
            + np.linalg.norm(C) ** 2
        )
        new_obj = residual**2 + mu * penalty
        if objective_trace is not None:
            objective_trace.append(new_obj)
        if not np.isfinite(new_obj):
            raise NumericalFailureError(it)
        rel_change = abs(obj - new_obj) / max(obj, _TINY)
        obj = new_obj
        if rel_change < cfg.rel_change_tol:
            break

    return FactorSet(A, B, C, F=L, mu=mu, iterations_used=it,
                     final_residual=residual)


def gevd_init(Y, L_hat: int, rng=None) -> FactorSet:
    """Initialize CP factors from a generalized eigendecomposition.

    Two random linear mixtures of the frontal slices are compressed to
    ``L_hat x L_hat`` via truncated SVD bases of the mode-1 and mode-2
    unfoldings; the generalized eigenvectors of the compressed pencil
    recover the first factor, and the remaining two come from rank-1
    SVDs of the back-projected rows.  For an exact noiseless CP tensor
    with distinct pencil eigenvalues this reproduces the true factors up
    to column scaling and permutation.

    Parameters
    ----------
    Y : ComplexTensor3 or array_like
    L_hat : int
        Number of components; requires ``K >= 2`` and ``min(I, J) >= L_hat``.
    rng : numpy Generator or seed, optional
        Drives the random slice mixtures.

    Raises
    ------
    ValueError
        If the preconditions on the dims fail.
    DegradedInitError
        If the pencil eigenvalues are non-finite, all zero, or two of
        them agree to within a relative gap of 1e-10.
    """
    arr = as_array(Y)
    I, J, K = arr.shape
    if K < 2:
        raise ValueError(f"gevd_init requires K >= 2, got K={K}")
    if min(I, J) < L_hat:
        raise ValueError(
            f"gevd_init requires min(I, J) >= L_hat, got {min(I, J)} < {L_hat}"
        )
    rng = np.random.default_rng(rng)

    w = (rng.standard_normal((2, K)) + 1j * rng.standard_normal((2, K))) \
        / np.sqrt(2.0)
    S1 = np.tensordot(arr, w[0], axes=([2], [0]))
    S2 = np.tensordot(arr, w[1], axes=([2], [0]))

    U = np.linalg.svd(unfold(arr, 1), full_matrices=False)[0][:, :L_hat]
    V = np.linalg.svd(unfold(arr, 2), full_matrices=False)[0][:, :L_hat]
    T1 = U.conj().T @ S1 @ V.conj()
    T2 = U.conj().T @ S2 @ V.conj()

    lam, E = scipy.linalg.eig(T1, T2)
    if not np.isfinite(lam).all():
        raise DegradedInitError("non-finite generalized eigenvalues")
    scale = float(np.max(np.abs(lam)))
    if scale == 0.0:
        raise DegradedInitError("all-zero generalized eigenvalues")
    if L_hat >= 2:
        diffs = np.abs(lam[:, None] - lam[None, :])
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() / scale < 1e-10:
            raise DegradedInitError(
                f"generalized eigenvalue gap {diffs.min() / scale:.3e} < 1e-10"
            )

    A = U @ (T2 @ E)
    G = np.linalg.pinv(A) @ unfold(arr, 1)
    B = np.empty((J, L_hat), dtype=np.complex128)
    C = np.empty((K, L_hat), dtype=np.complex128)
    for f in range(L_hat):
        Mf = G[f].reshape(K, J)
        u, s, vh = np.linalg.svd(Mf)
        root = np.sqrt(s[0])
        C[:, f] = u[:, 0] * root
        B[:, f] = vh[0] * root

    residual = float(np.linalg.norm(arr - cp_array(A, B, C)))
    return FactorSet(A, B, C, F=L_hat, mu=0.0, iterations_used=0,
                     final_residual=residual)


def estimate_rank(fs: FactorSet, threshold_rel: float) -> RankEstimate:
    """Effective rank of converged factors by singular-value thresholding.

    Each factor's rank is the number of its singular values exceeding
    ``threshold_rel`` times its largest one (0 if the factor is zero);
    the combined rank is the upper median of the three counts.

    Parameters
    ----------
    fs : FactorSet
        Factors with finite entries.
    threshold_rel : float
        Relative threshold in (0, 1).
    """
    if not 0.0 < threshold_rel < 1.0:
        raise ValueError(f"threshold_rel must be in (0, 1), got {threshold_rel}")
    ranks: list[int] = []
    svals: list[np.ndarray] = []
    for name in ("A", "B", "C"):
        mat = getattr(fs, name)
        if not np.isfinite(mat).all():
            raise ValueError(f"factor {name} has non-finite entries")
        s = np.linalg.svd(mat, compute_uv=False)
        svals.append(s)
        if s.size == 0 or s[0] == 0.0:
            ranks.append(0)
        else:
            ranks.append(int(np.count_nonzero(s > threshold_rel * s[0])))
    combined = sorted(ranks)[len(ranks) // 2]
    return RankEstimate(
        per_factor_ranks=tuple(ranks),
        combined_rank=combined,
        singular_values=tuple(svals),
        threshold_rel=threshold_rel,
    )


def best_cpd(Y, cfg: AlsConfig) -> FactorSet:
    """Best-of-restarts regularized CP decomposition.

    Runs ``cfg.restarts`` independent ALS solves — a GEVD-initialized
    one first (unless ``cfg.init == "random"``), then random restarts —
    and keeps the factor set with the lowest regularized objective.

    Raises
    ------
    NumericalFailureError
        Propagated from any failing solve.
    """
    arr = as_array(Y)
    seed = cfg.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    children = ss.spawn(cfg.restarts)

    best: FactorSet | None = None
    best_obj = np.inf
    for r, child in enumerate(children):
        init = cfg.init if r == 0 else "random"
        sub = dataclasses.replace(cfg, init=init)
        fs = als_cpd(arr, sub, rng=np.random.default_rng(child))
        obj = regularized_objective(arr, fs.A, fs.B, fs.C, cfg.mu)
        if obj < best_obj:
            best, best_obj = fs, obj
    assert best is not None
    return best


def estimate_paths(Y, cfg: AlsConfig, threshold_rel: float) -> int:
    """Estimate the number of propagation paths as the tensor's CP rank.

    The combined effective rank of the `best_cpd` factor set.

    Raises
    ------
    NumericalFailureError
        Propagated from any failing solve.
    """
    return estimate_rank(best_cpd(Y, cfg), threshold_rel).combined_rank
