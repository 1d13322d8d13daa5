"""Linear estimators and their exact MSE given a fixed regressor matrix.

Three weight constructions are provided:

* :func:`full_lmmse_weights` -- the LMMSE estimator of the whole ``x`` using the
  true model.
* :func:`partial_lmmse_weights` -- the mismatched estimator of ``x_S`` built
  from the assumed partial model.
* :func:`oracle_partial_weights` -- the best linear estimator of ``x_S`` under
  the true model.

All MSE values are trace formulas, so they are deterministic given ``A``.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from .model import AssumedModelSpec, PartitionedCovariance
from .numkit import (
    Array,
    InvalidInputError,
    as_covariance,
    as_matrix,
    gaussian_factor,
    pseudoinverse,
)


def _check_cols(M: Array, cols: int, name: str) -> None:
    if M.shape[1] != cols:
        raise InvalidInputError(f"{name} has {M.shape[1]} columns, expected {cols}")


def _lmmse(
    A: Array,
    K: Array,
    noise_variance: float,
    rcond: float | None,
    factor: Array | None = None,
) -> Array:
    # K A^T (A K A^T + s I)^+ ; for s == 0 this equals L (A L)^+ with K = L L^T,
    # which avoids squaring the condition number of A.
    if noise_variance == 0.0:
        L = gaussian_factor(K) if factor is None else factor
        return L @ pseudoinverse(A @ L, rcond)
    n = A.shape[0]
    Ky = A @ K @ A.T + noise_variance * np.eye(n)
    return K @ A.T @ pseudoinverse(Ky, rcond)


def full_lmmse_weights(
    A: ArrayLike, K_x: ArrayLike, noise_variance: float, rcond: float | None = None
) -> Array:
    """``W_O = K_x A^T (A K_x A^T + sigma_v^2 I)^+``, shape ``(p, n)``."""
    A = as_matrix(A, "A")
    K_x = as_covariance(K_x, "K_x")
    _check_cols(A, K_x.shape[0], "A")
    if noise_variance < 0:
        raise InvalidInputError("noise variance must be >= 0")
    return _lmmse(A, K_x, float(noise_variance), rcond)


def partial_lmmse_weights(
    A_S: ArrayLike,
    assumed: AssumedModelSpec,
    rcond: float | None = None,
    method: Literal["pinv", "solve"] = "pinv",
) -> Array:
    """Mismatched estimator ``W_S = K^_S A_S^T (A_S K^_S A_S^T + s^ I)^+``.

    Parameters
    ----------
    A_S : array_like, shape (n, p_S)
        Regressors of the kept unknowns.
    assumed : AssumedModelSpec
        The estimator's beliefs about ``x_S`` and the noise.
    rcond : float, optional
        Pseudoinverse cutoff.
    method : {"pinv", "solve"}
        ``"solve"`` replaces the pseudoinverse by a symmetric solve; only
        allowed when the assumed noise variance is positive.

    Returns
    -------
    ndarray, shape (p_S, n)
    """
    A_S = as_matrix(A_S, "A_S")
    _check_cols(A_S, assumed.p_S, "A_S")
    K = assumed.K_xS_hat
    s = float(assumed.noise_variance_hat)
    if method == "solve":
        if s <= 0.0:
            raise InvalidInputError("method='solve' needs a positive assumed noise variance")
        Ky = A_S @ K @ A_S.T + s * np.eye(A_S.shape[0])
        return np.linalg.solve(Ky, A_S @ K).T
    if method != "pinv":
        raise InvalidInputError(f"unknown method {method!r}")
    factor = assumed.factor if s == 0.0 else None
    return _lmmse(A_S, K, s, rcond, factor)


def oracle_partial_weights(
    A: ArrayLike,
    part: PartitionedCovariance,
    noise_variance: float,
    mode: Literal["literal", "general"] = "literal",
    rcond: float | None = None,
) -> Array:
    """Estimator of ``x_S`` that knows the true model.

    ``mode="literal"`` uses ``K_xS A_S^T (A K_x A^T + s I)^+``, dropping the
    cross-covariance term; ``mode="general"`` adds ``K_xS_xC A_C^T`` inside
    the left factor, which is the true LMMSE weight for ``x_S`` when ``K_x``
    is not block diagonal. The two coincide when the cross block is zero.
    """
    A = as_matrix(A, "A")
    _check_cols(A, part.p, "A")
    if noise_variance < 0:
        raise InvalidInputError("noise variance must be >= 0")
    A_S, A_C = part.split(A)
    K_x = part.assemble()
    Ky = A @ K_x @ A.T + noise_variance * np.eye(A.shape[0])
    left = part.K_xS @ A_S.T
    if mode == "general":
        left = left + part.K_xC_xS.T @ A_C.T
    elif mode != "literal":
        raise InvalidInputError(f"unknown mode {mode!r}")
    return left @ pseudoinverse(Ky, rcond)


def mse_full(
    W: ArrayLike, A: ArrayLike, K_x: ArrayLike, noise_variance: float
) -> float:
    """``tr((I - W A) K_x (I - W A)^T) + sigma_v^2 tr(W W^T)``."""
    W = as_matrix(W, "W")
    A = as_matrix(A, "A")
    K_x = as_covariance(K_x, "K_x")
    p = K_x.shape[0]
    _check_cols(A, p, "A")
    if W.shape != (p, A.shape[0]):
        raise InvalidInputError(f"W must have shape {(p, A.shape[0])}, got {W.shape}")
    E = np.eye(p) - W @ A
    return float(np.sum((E @ K_x) * E) + noise_variance * np.sum(W * W))


def mse_partial_conditional(
    W_S: ArrayLike,
    A_S: ArrayLike,
    A_C: ArrayLike,
    part: PartitionedCovariance,
    noise_variance: float,
) -> float:
    """Exact MSE of ``x_S`` for weights ``W_S`` when data follow the full model.

    Expands ``E||(I - W_S A_S) x_S - W_S A_C x_C - W_S v||^2`` over ``x`` and
    ``v``, including the cross term from ``K_xC_xS``.
    """
    W_S = as_matrix(W_S, "W_S")
    A_S = np.asarray(A_S, dtype=np.float64)
    A_C = np.asarray(A_C, dtype=np.float64).reshape(A_S.shape[0], -1)
    if A_S.shape[1] != part.p_S or A_C.shape[1] != part.p_C:
        raise InvalidInputError("A_S / A_C widths do not match the partition")
    if W_S.shape != (part.p_S, A_S.shape[0]):
        raise InvalidInputError(f"W_S must have shape {(part.p_S, A_S.shape[0])}")
    E = np.eye(part.p_S) - W_S @ A_S
    B = W_S @ A_C
    J = (
        np.sum((E @ part.K_xS) * E)
        + np.sum((B @ part.K_xC) * B)
        + noise_variance * np.sum(W_S * W_S)
        - 2.0 * np.sum((B @ part.K_xC_xS) * E)
    )
    return float(J)


def mse_partial_pinv_form(
    A_S: ArrayLike,
    A_C: ArrayLike,
    part: PartitionedCovariance,
    noise_variance: float,
    rcond: float | None = None,
) -> float:
    """Simplified trace form of the MSE of ``W_S = A_S^+``.

    ``tr(K_xS) - tr(A_S^+ A_S K_xS) + tr(A_C^T G A_C K_xC) + sigma_v^2 tr(G)``
    with ``G = (A_S A_S^T)^+``. The cross-covariance term vanishes because
    ``(I - A_S^+ A_S) A_S^+ = 0``.
    """
    A_S = as_matrix(A_S, "A_S")
    A_C = np.asarray(A_C, dtype=np.float64).reshape(A_S.shape[0], -1)
    if A_S.shape[1] != part.p_S or A_C.shape[1] != part.p_C:
        raise InvalidInputError("A_S / A_C widths do not match the partition")
    P = pseudoinverse(A_S, rcond) @ A_S
    G = pseudoinverse(A_S @ A_S.T, rcond)
    return float(
        np.trace(part.K_xS)
        - np.sum(P * part.K_xS.T)
        + np.sum((A_C.T @ G @ A_C) * part.K_xC.T)
        + noise_variance * np.trace(G)
    )


def mse_whole_vector(J_S: float, part: PartitionedCovariance) -> float:
    """Add the power of the discarded unknowns: ``J_S + tr(K_xC)``."""
    if J_S < 0:
        raise InvalidInputError(f"J_S must be >= 0, got {J_S}")
    return J_S + part.tr_K_xC
