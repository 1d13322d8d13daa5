"""Closed-form expected MSE of the mismatched estimator over Gaussian regressors.

Valid when the regressor rows are ``N(0, I_p)``, the estimator assumes
``K^_S = I`` and zero noise, so that it reduces to ``W_S = A_S^+``. Checking
those conditions is the caller's job.

Infinite values are IEEE ``inf`` and propagate through every function here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numkit import InvalidInputError


def gamma(p_S: int, n: int) -> float:
    """Inverse-Wishart trace factor.

    ``p_S / (n - p_S - 1)`` when ``p_S < n - 1``, ``n / (p_S - n - 1)`` when
    ``p_S > n + 1`` and ``inf`` when the two differ by at most one. Note that
    ``E[(A_S A_S^T)^+] = gamma / n * I_n``.
    """
    if p_S < 1 or n < 1:
        raise InvalidInputError(f"p_S and n must be >= 1, got ({p_S}, {n})")
    if p_S < n - 1:
        return p_S / (n - p_S - 1)
    if p_S > n + 1:
        return n / (p_S - n - 1)
    return math.inf


@dataclass(frozen=True)
class TheoryInputs:
    p_S: int
    n: int
    tr_K_xS: float
    tr_K_xC: float
    tr_K_v: float

    def __post_init__(self) -> None:
        if self.p_S < 1 or self.n < 1:
            raise InvalidInputError("p_S and n must be >= 1")
        if min(self.tr_K_xS, self.tr_K_xC, self.tr_K_v) < 0:
            raise InvalidInputError("traces must be nonnegative")


def expected_mse_theorem1(inp: TheoryInputs) -> float:
    """Expected MSE of ``x_S`` for the pseudoinverse estimator.

    ``tr(K_xS) (1 - min(p_S, n) / p_S) + gamma * (tr(K_xC) + tr(K_v) / n)``.
    When the bracket is exactly zero the ``gamma`` term is dropped even if
    ``gamma`` is infinite.
    """
    first = inp.tr_K_xS * (1.0 - min(inp.p_S, inp.n) / inp.p_S)
    leak = inp.tr_K_xC + inp.tr_K_v / inp.n
    if leak == 0.0:
        return first
    return first + gamma(inp.p_S, inp.n) * leak


def expected_mse_corollary1(
    p_S: int, p_C: int, n: int, sigma_x2: float, sigma_v2: float
) -> float:
    """Expected MSE of ``x_S`` when signal power is ``sigma_x2`` per unknown and
    noise power ``sigma_v2`` per sample."""
    if p_C < 0 or sigma_x2 < 0 or sigma_v2 < 0:
        raise InvalidInputError("p_C, sigma_x2 and sigma_v2 must be >= 0")
    first = sigma_x2 * (p_S - min(p_S, n))
    leak = sigma_x2 * p_C + sigma_v2
    if leak == 0.0:
        return float(first)
    return first + gamma(p_S, n) * leak


def whole_vector_expected_mse(eps_S: float, tr_K_xC: float) -> float:
    if eps_S < 0:
        raise InvalidInputError("eps_S must be >= 0")
    return eps_S + tr_K_xC


def monotonicity_threshold(p: int, sigma_x2: float, sigma_v2: float) -> float:
    """Sample size ``p + sigma_v2 / sigma_x2 + 1`` separating the two regimes.

    For ``n`` above it (and ``n > p + 1``) the whole-vector expected MSE falls
    strictly as ``p_S`` grows from 1 to ``p``; for ``p + 1 < n`` below it, it
    rises.
    """
    if sigma_x2 <= 0:
        raise InvalidInputError("sigma_x2 must be positive")
    return p + sigma_v2 / sigma_x2 + 1


def snr_db(tr_K_x: float, sigma_v2: float) -> float:
    if tr_K_x <= 0 or sigma_v2 <= 0:
        raise InvalidInputError("SNR needs positive signal and noise power")
    return 10.0 * math.log10(tr_K_x / sigma_v2)
