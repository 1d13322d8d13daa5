"""Monte Carlo sweeps of the mismatched estimator over ``(p_S, n)`` grids.

Every replicate owns a random stream derived only from
``(master seed, scenario, p_S, n, replicate)``, so a sweep produces the same
numbers whatever the number of worker threads or the order cells finish in.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import analytic
from .estimator import (
    full_lmmse_weights,
    mse_full,
    mse_partial_conditional,
    partial_lmmse_weights,
)
from .model import AssumedModelSpec, SystemSpec, draw_system, partition
from .numkit import (
    Array,
    InvalidInputError,
    RandomStream,
    as_covariance,
    pseudoinverse,
    sample_gaussian_matrix,
)

log = logging.getLogger(__name__)

DEFAULT_SEED = 20200601
DEFAULT_NS = tuple(range(2, 91, 2))
DEFAULT_PS = (10, 20, 30)

SCENARIO_INDEX = {"custom": 0, "s1": 1, "s2": 2, "s3": 3, "s4": 4}
# Reserved p_S label for streams that do not belong to a (p_S, n) cell.
_SHARED_LABEL = 0

FLAG_NEAR = "near-interpolation"
FLAG_DEGENERATE = "degenerate-stderr"
FLAG_BASELINE = "baseline"
FLAG_ERROR = "error"


class CellError(RuntimeError):
    """A replicate failed; the message names ``(p_S, n, j)``."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce a sweep.

    ``covariance`` selects how ``K_x`` is built: ``"identity"`` gives
    ``sigma_x2 * I_p``, ``"randomized"`` gives ``C^T C`` for a Gaussian ``C``
    rescaled to trace ``sigma_x2 * p`` and ``"explicit"`` uses ``K_x``.
    The estimator always assumes ``K^_S = I`` and noise variance ``sigma_z2``.
    """

    scenario: str = "custom"
    p: int = 30
    sigma_x2: float = 1.0
    sigma_v2: float = 0.25
    sigma_z2: float = 0.0
    covariance: Literal["identity", "randomized", "explicit"] = "identity"
    K_x: Array | None = field(default=None, compare=False, repr=False)
    ps: tuple[int, ...] = DEFAULT_PS
    ns: tuple[int, ...] = DEFAULT_NS
    replicates: int = 100
    seed: int = DEFAULT_SEED
    mode: Literal["draw", "conditional"] = "conditional"
    rcond: float | None = None
    common_random_numbers: bool = False

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIO_INDEX:
            raise InvalidInputError(f"unknown scenario {self.scenario!r}")
        if self.p < 1:
            raise InvalidInputError("p must be >= 1")
        if min(self.sigma_x2, self.sigma_v2, self.sigma_z2) < 0:
            raise InvalidInputError("variances must be >= 0")
        if self.replicates < 1:
            raise InvalidInputError("replicates must be >= 1")
        if not self.ps or not self.ns:
            raise InvalidInputError("p_S and n grids must be nonempty")
        if any(not 1 <= k <= self.p for k in self.ps):
            raise InvalidInputError(f"every p_S must lie in [1, {self.p}]")
        if any(k < 1 for k in self.ns):
            raise InvalidInputError("every n must be >= 1")
        if self.mode not in ("draw", "conditional"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.covariance not in ("identity", "randomized", "explicit"):
            raise InvalidInputError(f"unknown covariance rule {self.covariance!r}")
        if self.covariance == "explicit":
            if self.K_x is None:
                raise InvalidInputError("explicit covariance rule needs K_x")
            K = as_covariance(self.K_x, "K_x")
            if K.shape != (self.p, self.p):
                raise InvalidInputError("K_x shape does not match p")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "ps", tuple(sorted(set(int(k) for k in self.ps))))
        object.__setattr__(self, "ns", tuple(sorted(set(int(k) for k in self.ns))))

    @property
    def theory_applicable(self) -> bool:
        return self.sigma_z2 == 0.0

    @property
    def scenario_index(self) -> int:
        return SCENARIO_INDEX[self.scenario]


def scenario_config(name: str, **overrides) -> ScenarioConfig:
    """Preset for the four reference scenarios, with field overrides.

    ========  ===========  ==========  ===========
    scenario  K_x          sigma_v^2   sigma_z^2
    ========  ===========  ==========  ===========
    s1        I            0.25        0
    s2        I            p           0
    s3        randomized   0.25        0
    s4        I            0.25        0.25
    ========  ===========  ==========  ===========
    """
    name = name.lower()
    p = overrides.get("p", 30)
    presets = {
        "s1": dict(sigma_v2=0.25, sigma_z2=0.0, covariance="identity"),
        "s2": dict(sigma_v2=float(p), sigma_z2=0.0, covariance="identity"),
        "s3": dict(sigma_v2=0.25, sigma_z2=0.0, covariance="randomized"),
        "s4": dict(sigma_v2=0.25, sigma_z2=0.25, covariance="identity"),
        "custom": {},
    }
    if name not in presets:
        raise InvalidInputError(f"unknown scenario {name!r}")
    return ScenarioConfig(scenario=name, **{**presets[name], **overrides})


@dataclass(frozen=True)
class SweepRecord:
    """One grid cell. Baseline rows (full LMMSE estimator) carry ``p_S = 0``."""

    scenario: str
    p: int
    p_S: int
    n: int
    M: int
    mode: str
    empirical_mse: float
    stderr: float
    analytic_mse: float | None
    baseline_mse: float | None
    gamma: float | None
    flags: tuple[str, ...]
    seed: int

    @property
    def is_baseline(self) -> bool:
        return FLAG_BASELINE in self.flags

    @property
    def failed(self) -> bool:
        return any(f.startswith(FLAG_ERROR) for f in self.flags)


def build_scenario_covariance(cfg: ScenarioConfig, rng: RandomStream | None = None) -> Array:
    """``K_x`` for a config.

    The randomized rule draws ``C`` from ``rng`` or, by default, from a
    dedicated sub-stream of the master seed so it is shared by every cell and
    replicate of a sweep.
    """
    if cfg.covariance == "identity":
        return cfg.sigma_x2 * np.eye(cfg.p)
    if cfg.covariance == "explicit":
        return as_covariance(cfg.K_x, "K_x").copy()
    if rng is None:
        rng = RandomStream.derive(cfg.seed, (cfg.scenario_index, _SHARED_LABEL, 0))
    C = sample_gaussian_matrix(cfg.p, cfg.p, rng)
    G = C.T @ C
    G = 0.5 * (G + G.T)
    return (cfg.sigma_x2 * cfg.p / np.trace(G)) * G


def cell_seed(cfg: ScenarioConfig, p_S: int, n: int) -> int:
    """64-bit seed from which every replicate stream of the cell is derived."""
    label = _SHARED_LABEL if cfg.common_random_numbers else p_S
    return RandomStream.derive_seed(cfg.seed, (cfg.scenario_index, label, n))


def baseline_seed(cfg: ScenarioConfig, n: int) -> int:
    return RandomStream.derive_seed(cfg.seed, (cfg.scenario_index, _SHARED_LABEL, n))


def _mean_stderr(values: Array) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def replicate_mse(
    cfg: ScenarioConfig, p_S: int, n: int, K_x: Array | None = None
) -> Array:
    """Per-replicate whole-vector errors ``J^(j)`` for one cell."""
    if K_x is None:
        K_x = build_scenario_covariance(cfg)
    spec = SystemSpec(K_x, cfg.sigma_v2)
    part = partition(spec, p_S)
    assumed = AssumedModelSpec.identity(p_S, cfg.sigma_z2)
    tr_C = part.tr_K_xC
    seed = cell_seed(cfg, p_S, n)
    out = np.empty(cfg.replicates)
    for j in range(cfg.replicates):
        rng = RandomStream.derive(seed, (j,))
        try:
            if cfg.mode == "draw":
                d = draw_system(spec, n, rng)
                A_S, _ = part.split(d.A)
                W_S = partial_lmmse_weights(A_S, assumed, cfg.rcond)
                err = d.x[list(part.indices_S)] - W_S @ d.y
                J = float(err @ err) + tr_C
            else:
                A = sample_gaussian_matrix(n, cfg.p, rng)
                A_S, A_C = part.split(A)
                W_S = partial_lmmse_weights(A_S, assumed, cfg.rcond)
                J = mse_partial_conditional(W_S, A_S, A_C, part, cfg.sigma_v2) + tr_C
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            raise CellError(f"cell p_S={p_S}, n={n}, replicate j={j}: {exc}") from exc
        if not math.isfinite(J):
            raise CellError(f"cell p_S={p_S}, n={n}, replicate j={j}: non-finite MSE")
        out[j] = J
    return out


def run_cell(
    cfg: ScenarioConfig, p_S: int, n: int, K_x: Array | None = None
) -> SweepRecord:
    """Empirical average MSE of the mismatched estimator at one ``(p_S, n)``.

    ``baseline_mse`` is left empty; :func:`run_sweep` fills it in.
    """
    if K_x is None:
        K_x = build_scenario_covariance(cfg)
    values = replicate_mse(cfg, p_S, n, K_x)
    mean, se = _mean_stderr(values)
    g = analytic.gamma(p_S, n)
    flags = []
    if abs(n - p_S) <= 1:
        flags.append(FLAG_NEAR)
    if cfg.replicates < 2:
        flags.append(FLAG_DEGENERATE)
    theory = None
    if cfg.theory_applicable:
        tr_S = float(np.trace(K_x[:p_S, :p_S]))
        tr_C = float(np.trace(K_x)) - tr_S
        eps_S = analytic.expected_mse_theorem1(
            analytic.TheoryInputs(p_S, n, tr_S, max(tr_C, 0.0), n * cfg.sigma_v2)
        )
        theory = analytic.whole_vector_expected_mse(eps_S, max(tr_C, 0.0))
    return SweepRecord(
        scenario=cfg.scenario,
        p=cfg.p,
        p_S=p_S,
        n=n,
        M=cfg.replicates,
        mode=cfg.mode,
        empirical_mse=mean,
        stderr=se,
        analytic_mse=theory,
        baseline_mse=None,
        gamma=g,
        flags=tuple(flags),
        seed=cell_seed(cfg, p_S, n),
    )


def baseline_mse_samples(cfg: ScenarioConfig, n: int, K_x: Array | None = None) -> Array:
    """Conditional MSE of the full LMMSE estimator for ``M`` regressor draws."""
    if K_x is None:
        K_x = build_scenario_covariance(cfg)
    seed = baseline_seed(cfg, n)
    out = np.empty(cfg.replicates)
    for j in range(cfg.replicates):
        A = sample_gaussian_matrix(n, cfg.p, RandomStream.derive(seed, (j,)))
        try:
            W = full_lmmse_weights(A, K_x, cfg.sigma_v2, cfg.rcond)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise CellError(f"baseline n={n}, replicate j={j}: {exc}") from exc
        out[j] = mse_full(W, A, K_x, cfg.sigma_v2)
    return out


def run_baseline_cell(cfg: ScenarioConfig, n: int, K_x: Array | None = None) -> float:
    return float(np.mean(baseline_mse_samples(cfg, n, K_x)))


def _baseline_record(cfg: ScenarioConfig, n: int, K_x: Array) -> SweepRecord:
    mean, se = _mean_stderr(baseline_mse_samples(cfg, n, K_x))
    flags = [FLAG_BASELINE]
    if cfg.replicates < 2:
        flags.append(FLAG_DEGENERATE)
    return SweepRecord(
        scenario=cfg.scenario,
        p=cfg.p,
        p_S=0,
        n=n,
        M=cfg.replicates,
        mode="conditional",
        empirical_mse=mean,
        stderr=se,
        analytic_mse=None,
        baseline_mse=mean,
        gamma=None,
        flags=tuple(flags),
        seed=baseline_seed(cfg, n),
    )


def _failed_record(cfg: ScenarioConfig, p_S: int, n: int, exc: Exception) -> SweepRecord:
    baseline = p_S == 0
    msg = " ".join(str(exc).split()).replace(",", ";")
    return SweepRecord(
        scenario=cfg.scenario,
        p=cfg.p,
        p_S=p_S,
        n=n,
        M=cfg.replicates,
        mode="conditional" if baseline else cfg.mode,
        empirical_mse=math.nan,
        stderr=math.nan,
        analytic_mse=None,
        baseline_mse=None,
        gamma=None if baseline else analytic.gamma(p_S, n),
        flags=((FLAG_BASELINE,) if baseline else ()) + (f"{FLAG_ERROR}: {msg}",),
        seed=baseline_seed(cfg, n) if baseline else cell_seed(cfg, p_S, n),
    )


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``LMMSE_THREADS``, else CPU count."""
    if threads is None:
        raw = os.environ.get("LMMSE_THREADS", "").strip()
        threads = int(raw) if raw else 0
    if threads < 0:
        raise InvalidInputError("thread count must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def run_sweep(cfg: ScenarioConfig, threads: int | None = None) -> list[SweepRecord]:
    """Run every ``(p_S, n)`` cell plus one full-estimator baseline per ``n``.

    Output order is canonical: sorted by ``(p_S, n)``, so baseline rows
    (``p_S = 0``) come first. A failing cell is recorded with an ``error``
    flag and NaN values; the other cells still run.
    """
    K_x = build_scenario_covariance(cfg)
    tasks = [(0, n) for n in cfg.ns] + [(k, n) for k in cfg.ps for n in cfg.ns]

    def work(task: tuple[int, int]) -> SweepRecord:
        p_S, n = task
        try:
            if p_S == 0:
                return _baseline_record(cfg, n, K_x)
            return run_cell(cfg, p_S, n, K_x)
        except CellError as exc:
            log.warning("%s", exc)
            return _failed_record(cfg, p_S, n, exc)

    workers = resolve_threads(threads)
    if workers == 1:
        records = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(work, tasks))

    baseline = {r.n: r.empirical_mse for r in records if r.p_S == 0 and not r.failed}
    records = [
        r if r.p_S == 0 else replace(r, baseline_mse=baseline.get(r.n)) for r in records
    ]
    records.sort(key=lambda r: (r.p_S, r.n))
    return records


def estimate_projection_mean(p_S: int, n: int, M: int, rng: RandomStream) -> Array:
    """Monte Carlo mean of ``A_S^+ A_S``; expected ``min(p_S, n) / p_S * I``."""
    acc = np.zeros((p_S, p_S))
    for _ in range(M):
        A_S = sample_gaussian_matrix(n, p_S, rng)
        acc += pseudoinverse(A_S) @ A_S
    return acc / M


def estimate_gram_pinv_mean(p_S: int, n: int, M: int, rng: RandomStream) -> Array:
    """Monte Carlo mean of ``(A_S A_S^T)^+``; expected ``gamma / n * I_n``.

    Uses ``(A^+)^T A^+ = (A A^T)^+`` to avoid pseudo-inverting the Gram matrix.
    """
    acc = np.zeros((n, n))
    for _ in range(M):
        P = pseudoinverse(sample_gaussian_matrix(n, p_S, rng))
        acc += P.T @ P
    return acc / M


def estimate_cross_gram_mean(p_C: int, n: int, M: int, rng: RandomStream) -> Array:
    """Monte Carlo mean of ``A_C^T A_C``; expected ``n * I``."""
    acc = np.zeros((p_C, p_C))
    for _ in range(M):
        A_C = sample_gaussian_matrix(n, p_C, rng)
        acc += A_C.T @ A_C
    return acc / M
