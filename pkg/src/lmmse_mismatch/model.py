"""The underlying linear system ``y = A x + v`` and the assumed partial model.

The estimator only sees a subset ``S`` of the unknowns (by default the
leading ``p_S`` indices); the rest, ``C``, are silently folded into the
observations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .numkit import (
    Array,
    InvalidInputError,
    RandomStream,
    as_covariance,
    gaussian_factor,
    sample_gaussian_matrix,
)


@dataclass(frozen=True)
class SystemSpec:
    """True data-generating model.

    Regressor rows are ``N(0, I_p)`` and the noise is ``N(0, noise_variance * I_n)``.
    """

    K_x: Array
    noise_variance: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "K_x", as_covariance(self.K_x, "K_x"))
        if self.K_x.shape[0] < 1:
            raise InvalidInputError("K_x must be at least 1x1")
        if not self.noise_variance >= 0:
            raise InvalidInputError("noise_variance must be >= 0")

    @classmethod
    def identity(cls, p: int, noise_variance: float, signal_variance: float = 1.0) -> "SystemSpec":
        return cls(signal_variance * np.eye(p), noise_variance)

    @property
    def p(self) -> int:
        return self.K_x.shape[0]

    @cached_property
    def x_factor(self) -> Array:
        return gaussian_factor(self.K_x)


@dataclass(frozen=True)
class PartitionedCovariance:
    """Blocks of ``K_x`` for the kept indices ``S`` and discarded indices ``C``."""

    indices_S: tuple[int, ...]
    indices_C: tuple[int, ...]
    K_xS: Array
    K_xC: Array
    K_xC_xS: Array

    @property
    def p_S(self) -> int:
        return len(self.indices_S)

    @property
    def p_C(self) -> int:
        return len(self.indices_C)

    @property
    def p(self) -> int:
        return self.p_S + self.p_C

    @property
    def tr_K_xS(self) -> float:
        return float(np.trace(self.K_xS))

    @property
    def tr_K_xC(self) -> float:
        return float(np.trace(self.K_xC))

    def assemble(self) -> Array:
        """Rebuild the full ``K_x`` in the original index order."""
        K = np.empty((self.p, self.p))
        S, C = np.array(self.indices_S, int), np.array(self.indices_C, int)
        K[np.ix_(S, S)] = self.K_xS
        K[np.ix_(C, C)] = self.K_xC
        K[np.ix_(C, S)] = self.K_xC_xS
        K[np.ix_(S, C)] = self.K_xC_xS.T
        return K

    def split(self, A: ArrayLike) -> tuple[Array, Array]:
        """Column split of a regressor matrix into ``(A_S, A_C)``."""
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[1] != self.p:
            raise InvalidInputError(f"A must have {self.p} columns, got shape {A.shape}")
        return A[:, list(self.indices_S)], A[:, list(self.indices_C)]


@dataclass(frozen=True)
class AssumedModelSpec:
    """What the mismatched estimator believes: ``y = A_S x_S + z``."""

    K_xS_hat: Array
    noise_variance_hat: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "K_xS_hat", as_covariance(self.K_xS_hat, "assumed K_xS"))
        if not self.noise_variance_hat >= 0:
            raise InvalidInputError("assumed noise variance must be >= 0")

    @classmethod
    def identity(cls, p_S: int, noise_variance_hat: float = 0.0) -> "AssumedModelSpec":
        return cls(np.eye(p_S), noise_variance_hat)

    @property
    def p_S(self) -> int:
        return self.K_xS_hat.shape[0]

    @cached_property
    def factor(self) -> Array:
        return gaussian_factor(self.K_xS_hat)


@dataclass(frozen=True)
class SystemDraw:
    A: Array
    x: Array
    v: Array
    y: Array = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", self.A @ self.x + self.v)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def partition(
    spec: SystemSpec, p_S: int, indices: Sequence[int] | None = None
) -> PartitionedCovariance:
    """Split ``K_x`` into kept/discarded blocks.

    By default the kept set is the first ``p_S`` indices. ``indices`` selects
    an arbitrary kept set instead (its length must equal ``p_S``).
    """
    p = spec.p
    if not 1 <= p_S <= p:
        raise InvalidInputError(f"p_S must lie in [1, {p}], got {p_S}")
    if indices is None:
        S = tuple(range(p_S))
    else:
        S = tuple(int(i) for i in indices)
        if len(S) != p_S or len(set(S)) != p_S or not all(0 <= i < p for i in S):
            raise InvalidInputError("indices must be p_S distinct values in [0, p)")
    C = tuple(i for i in range(p) if i not in set(S))
    K = spec.K_x
    return PartitionedCovariance(
        indices_S=S,
        indices_C=C,
        K_xS=K[np.ix_(S, S)],
        K_xC=K[np.ix_(C, C)],
        K_xC_xS=K[np.ix_(C, S)],
    )


def draw_system(spec: SystemSpec, n: int, rng: RandomStream) -> SystemDraw:
    """Sample ``(A, x, v)`` and form ``y = A x + v``.

    Draw order is fixed (A, then x, then v) so a given stream always yields
    the same regressors regardless of how the draw is used downstream.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    A = sample_gaussian_matrix(n, spec.p, rng)
    L = spec.x_factor
    x = L @ rng.normal(L.shape[1])
    v = np.sqrt(spec.noise_variance) * rng.normal(n)
    return SystemDraw(A, x, v)
