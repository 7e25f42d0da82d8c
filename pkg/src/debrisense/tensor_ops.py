"""Dense complex third-order tensor algebra.

Everything the CP machinery needs: mode unfoldings and their inverses,
the Khatri-Rao product, CP reconstruction from factor matrices,
Frobenius norms, and a plain-text tensor file format ("CT3").

The unfolding convention is fixed once and asserted everywhere.  For an
``I x J x K`` tensor ``X`` (0-based indices here; the docstrings of the
public functions restate the 1-based form), the mode-1 unfolding is the
``I x JK`` matrix

    X1[i, j + k*J] = X[i, j, k]

i.e. the column index runs over ``j`` fastest.  Modes 2 and 3 follow
cyclically with column indices ``i + k*I`` and ``i + j*I``.  Under this
convention a CP tensor with factors ``(A, B, C)`` satisfies

    unfold(X, 1) == A @ khatri_rao(C, B).T
    unfold(X, 2) == B @ khatri_rao(C, A).T
    unfold(X, 3) == C @ khatri_rao(B, A).T

which makes the three alternating-least-squares block updates read
identically up to a cyclic relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ComplexTensor3",
    "FactorSet",
    "as_array",
    "cp_array",
    "cp_reconstruct",
    "fold",
    "frobenius_norm",
    "khatri_rao",
    "read_ct3",
    "unfold",
    "write_ct3",
]


@dataclass(frozen=True)
class ComplexTensor3:
    """Immutable dense complex tensor of order three.

    Parameters
    ----------
    data : array_like
        Entries with shape ``(I, J, K)``.  Copied and cast to
        ``complex128``; every entry must be finite.

    Raises
    ------
    ValueError
        If ``data`` is not a third-order array with positive dims, or
        contains NaN/Inf entries.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 3:
            raise ValueError(f"expected a third-order array, got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ValueError(f"tensor dims must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("tensor entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        """Tensor dimensions ``(I, J, K)``."""
        return self.data.shape


@dataclass(frozen=True)
class FactorSet:
    """CP factor matrices plus solver metadata.

    Attributes
    ----------
    A, B, C : ndarray
        Factor matrices of shapes ``(I, F)``, ``(J, F)``, ``(K, F)``.
        Stored as read-only ``complex128`` copies.
    F : int
        Declared CP rank: the common column count of ``A``, ``B``, ``C``
        (the rank overestimate while solving).
    mu : float
        Ridge weight the factors were computed under; 0 for raw
        initializations.
    iterations_used : int
        Full ALS sweeps performed (0 for initializations).
    final_residual : float
        Frobenius norm of the fit residual at exit, ``>= 0``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: int
    mu: float = 0.0
    iterations_used: int = 0
    final_residual: float = 0.0

    def __post_init__(self):
        if self.F < 1:
            raise ValueError(f"F must be >= 1, got {self.F}")
        for name in ("A", "B", "C"):
            mat = np.asarray(getattr(self, name), dtype=np.complex128)
            if mat.ndim != 2:
                raise ValueError(f"factor {name} must be a matrix")
            if mat.shape[1] != self.F:
                raise ValueError(
                    f"factor {name} has {mat.shape[1]} columns, expected F={self.F}"
                )
            mat = mat.copy()
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.iterations_used < 0:
            raise ValueError("iterations_used must be >= 0")
        if not self.final_residual >= 0:
            raise ValueError("final_residual must be >= 0")

    @property
    def dims(self) -> tuple[int, int, int]:
        """Dimensions ``(I, J, K)`` of the reconstructed tensor."""
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])


def as_array(X) -> np.ndarray:
    """Return the underlying ``(I, J, K)`` complex ndarray of a tensor.

    Accepts a `ComplexTensor3` or anything ``np.asarray`` can turn into
    a third-order complex array.  No copy is made for an already-built
    `ComplexTensor3` (its buffer is read-only).
    """
    if isinstance(X, ComplexTensor3):
        return X.data
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim != 3:
        raise ValueError(f"expected a third-order array, got ndim={arr.ndim}")
    return arr


def unfold(X, mode: int) -> np.ndarray:
    """Matricize a third-order tensor along one mode.

    Parameters
    ----------
    X : ComplexTensor3 or array_like
        Tensor of shape ``(I, J, K)``.
    mode : {1, 2, 3}
        Mode to keep as rows.

    Returns
    -------
    ndarray
        The mode-``n`` unfolding, with 1-based layout

        - mode 1: ``I x JK``,  ``X1(i, j + (k-1)J) = X(i, j, k)``
        - mode 2: ``J x IK``,  ``X2(j, i + (k-1)I) = X(i, j, k)``
        - mode 3: ``K x IJ``,  ``X3(k, i + (j-1)I) = X(i, j, k)``

    Raises
    ------
    ValueError
        If ``mode`` is not 1, 2 or 3.
    """
    arr = as_array(X)
    I, J, K = arr.shape
    if mode == 1:
        return arr.transpose(0, 2, 1).reshape(I, K * J)
    if mode == 2:
        return arr.transpose(1, 2, 0).reshape(J, K * I)
    if mode == 3:
        return arr.transpose(2, 1, 0).reshape(K, J * I)
    raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def fold(M, mode: int, dims: tuple[int, int, int]) -> ComplexTensor3:
    """Inverse of `unfold`: rebuild the tensor from a mode-``n`` matrix.

    ``fold(unfold(X, m), m, X.dims)`` reproduces ``X`` exactly for every
    mode.

    Parameters
    ----------
    M : array_like
        Matrix laid out according to `unfold`'s convention for ``mode``.
    mode : {1, 2, 3}
    dims : tuple of int
        Target dimensions ``(I, J, K)``.

    Raises
    ------
    ValueError
        If ``mode`` is invalid or ``M``'s shape does not match ``dims``.
    """
    I, J, K = (int(d) for d in dims)
    if min(I, J, K) < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    arr = np.asarray(M, dtype=np.complex128)
    expected = {1: (I, J * K), 2: (J, I * K), 3: (K, I * J)}
    if mode not in expected:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    if arr.shape != expected[mode]:
        raise ValueError(
            f"mode-{mode} matrix for dims {(I, J, K)} must have shape "
            f"{expected[mode]}, got {arr.shape}"
        )
    if mode == 1:
        out = arr.reshape(I, K, J).transpose(0, 2, 1)
    elif mode == 2:
        out = arr.reshape(J, K, I).transpose(2, 0, 1)
    else:
        out = arr.reshape(K, J, I).transpose(2, 1, 0)
    return ComplexTensor3(out)


def khatri_rao(P, Q) -> np.ndarray:
    """Columnwise Kronecker (Khatri-Rao) product.

    Column ``f`` of the result is ``kron(P[:, f], Q[:, f])``, so the
    output of ``khatri_rao(C, B)`` indexes its rows as ``(k, j)`` with
    ``j`` fastest, matching the mode-1 unfolding convention.

    Parameters
    ----------
    P : array_like, shape (m, F)
    Q : array_like, shape (n, F)

    Returns
    -------
    ndarray, shape (m*n, F)

    Raises
    ------
    ValueError
        If ``P`` and ``Q`` are not matrices with equal column counts.
    """
    P = np.asarray(P)
    Q = np.asarray(Q)
    if P.ndim != 2 or Q.ndim != 2:
        raise ValueError("khatri_rao expects two matrices")
    if P.shape[1] != Q.shape[1]:
        raise ValueError(
            f"column counts differ: {P.shape[1]} vs {Q.shape[1]}"
        )
    m, F = P.shape
    n = Q.shape[0]
    return (P[:, None, :] * Q[None, :, :]).reshape(m * n, F)


def cp_array(A, B, C) -> np.ndarray:
    """Dense array of the CP tensor ``sum_f A[:,f] o B[:,f] o C[:,f]``."""
    return np.einsum("if,jf,kf->ijk", A, B, C)


def cp_reconstruct(fs: FactorSet) -> ComplexTensor3:
    """Reconstruct the dense tensor from a `FactorSet`.

    Entry ``(i, j, k)`` equals ``sum_f A(i,f) B(j,f) C(k,f)``; the result
    also equals ``fold(A @ khatri_rao(C, B).T, 1, fs.dims)``.
    """
    return ComplexTensor3(cp_array(fs.A, fs.B, fs.C))


def frobenius_norm(X) -> float:
    """Frobenius norm: sqrt of the sum of squared entry magnitudes."""
    return float(np.linalg.norm(as_array(X)))


def write_ct3(X, path) -> None:
    """Write a tensor to ``path`` in the CT3 text format.

    Line 1 is ``CT3 I J K``; the next ``I*J*K`` lines hold ``re im``
    pairs ordered with ``i`` fastest, then ``j``, then ``k`` (the entry
    ``(i, j, k)``, 1-based, sits on data line ``(k-1)*I*J + (j-1)*I + i``).
    Values are written with ``repr`` so the round trip is bit-exact.
    """
    arr = as_array(X)
    I, J, K = arr.shape
    flat = arr.ravel(order="F")
    lines = [f"CT3 {I} {J} {K}"]
    lines.extend(f"{float(z.real)!r} {float(z.imag)!r}" for z in flat)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_ct3(path) -> ComplexTensor3:
    """Read a tensor written by `write_ct3`.

    Raises
    ------
    ValueError
        On a malformed header, malformed entry lines, truncated data, or
        trailing non-blank content.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "CT3":
            raise ValueError("not a CT3 file: header must be 'CT3 I J K'")
        try:
            I, J, K = (int(tok) for tok in header[1:])
        except ValueError as exc:
            raise ValueError(f"bad CT3 dims in header: {header[1:]}") from exc
        if min(I, J, K) < 1:
            raise ValueError(f"CT3 dims must be positive, got {(I, J, K)}")
        n = I * J * K
        flat = np.empty(n, dtype=np.complex128)
        for idx in range(n):
            line = fh.readline()
            if not line:
                raise ValueError(f"CT3 file truncated at entry {idx + 1} of {n}")
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"bad CT3 entry on data line {idx + 1}: {line!r}")
            flat[idx] = complex(float(parts[0]), float(parts[1]))
        tail = fh.read().strip()
        if tail:
            raise ValueError("trailing data after final CT3 entry")
    return ComplexTensor3(flat.reshape((I, J, K), order="F"))
