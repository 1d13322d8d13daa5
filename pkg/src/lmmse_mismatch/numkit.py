"""Dense linear-algebra helpers, Gaussian sampling and seedable random streams.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Covariance
matrices are validated on entry with :func:`as_covariance`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

Array = NDArray[np.float64]

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


class InvalidInputError(ValueError):
    """Raised for non-finite entries, bad shapes or out-of-range arguments."""


class InvalidCovarianceError(InvalidInputError):
    """Raised when a matrix is not a symmetric positive semidefinite covariance."""


def as_matrix(M: ArrayLike, name: str = "matrix") -> Array:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def as_covariance(K: ArrayLike, name: str = "covariance") -> Array:
    """Validate ``K`` as a covariance matrix and return it as a float array.

    Symmetry is checked to ``1e-12`` relative to the largest entry and
    semidefiniteness to ``lambda_min >= -1e-10 * lambda_max``.
    """
    K = as_matrix(K, name)
    if K.shape[0] != K.shape[1]:
        raise InvalidCovarianceError(f"{name} must be square, got shape {K.shape}")
    if K.size == 0:
        return K
    scale = max(1.0, float(np.max(np.abs(K))))
    if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * scale:
        raise InvalidCovarianceError(f"{name} is not symmetric")
    eig = np.linalg.eigvalsh(K)
    if eig[0] < -PSD_TOL * max(eig[-1], 0.0):
        raise InvalidCovarianceError(
            f"{name} is indefinite (smallest eigenvalue {eig[0]:.3e})"
        )
    return K


def pseudoinverse(M: ArrayLike, rcond: float | None = None) -> Array:
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values at or below ``rcond * sigma_max`` are treated as zero.

    Parameters
    ----------
    M : array_like, shape (m, n)
        Finite real matrix.
    rcond : float, optional
        Relative cutoff. Defaults to ``max(m, n) * eps``.

    Returns
    -------
    ndarray, shape (n, m)
    """
    M = as_matrix(M)
    m, n = M.shape
    if rcond is None:
        rcond = max(m, n) * np.finfo(np.float64).eps
    if rcond < 0:
        raise InvalidInputError("rcond must be nonnegative")
    if M.size == 0:
        return np.zeros((n, m))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = rcond * s[0] if s.size else 0.0
    keep = s > cutoff
    if not np.any(keep):
        return np.zeros((n, m))
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def gaussian_factor(K: ArrayLike) -> Array:
    """Return ``L`` with ``L @ L.T == K``.

    Cholesky is tried first; semidefinite ``K`` falls back to a symmetric
    eigendecomposition; eigenvalues below ``1e-10 * lambda_max`` (round-off,
    including small negatives) are set to zero.
    """
    K = as_covariance(K)
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(K)
        w = np.where(w > PSD_TOL * max(w[-1], 0.0), w, 0.0)
        return V * np.sqrt(w)


class RandomStream:
    """Seedable source of standard normal variates.

    A thin wrapper around :class:`numpy.random.Generator` (PCG64) seeded
    through :class:`numpy.random.SeedSequence`. Sub-streams for a tuple of
    integer labels are derived with :meth:`derive`; distinct label tuples give
    independent streams and identical tuples give identical draws.

    A stream is single-owner: do not share one instance across threads.
    """

    def __init__(self, seed: int | np.random.SeedSequence) -> None:
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @classmethod
    def derive(cls, master: int, labels: Sequence[int]) -> "RandomStream":
        return cls(np.random.SeedSequence(int(master), spawn_key=tuple(int(x) for x in labels)))

    @staticmethod
    def derive_seed(master: int, labels: Sequence[int]) -> int:
        """64-bit integer seed for the sub-stream ``(master, *labels)``."""
        seq = np.random.SeedSequence(int(master), spawn_key=tuple(int(x) for x in labels))
        return int(seq.generate_state(1, np.uint64)[0])

    def normal(self, size: int | tuple[int, ...]) -> Array:
        return self._gen.standard_normal(size)


def sample_gaussian_vector(
    K: ArrayLike, rng: RandomStream, factor: Array | None = None
) -> Array:
    """Draw one vector from ``N(0, K)``.

    ``factor`` may carry a precomputed :func:`gaussian_factor` of ``K`` to
    skip validation in hot loops.
    """
    L = gaussian_factor(K) if factor is None else factor
    return L @ rng.normal(L.shape[1])


def sample_gaussian_matrix(rows: int, cols: int, rng: RandomStream) -> Array:
    """Matrix of i.i.d. standard normal entries; rows are regressor vectors."""
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"bad matrix size ({rows}, {cols})")
    return rng.normal((rows, cols))
