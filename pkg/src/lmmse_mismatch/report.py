"""Serialization of sweep results: CSV table, JSON manifest and SVG figure."""

from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .experiment import FLAG_BASELINE, ScenarioConfig, SweepRecord

CSV_HEADER = (
    "scenario",
    "p",
    "p_S",
    "n",
    "M",
    "mode",
    "empirical_mse",
    "stderr",
    "analytic_mse",
    "baseline_mse",
    "gamma",
    "flags",
    "seed",
)

# Values above this are drawn at the clip line with an upward marker.
Y_CLIP = 1e4


def format_float(x: float | None) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def write_csv(records: Sequence[SweepRecord], path: str | os.PathLike) -> None:
    """Write records as UTF-8 CSV with LF line endings.

    Floats carry 17 significant digits so the file round-trips exactly;
    ``inf`` is spelled ``inf`` and a missing value is an empty field.
    """
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(
                [
                    r.scenario,
                    r.p,
                    r.p_S,
                    r.n,
                    r.M,
                    r.mode,
                    format_float(r.empirical_mse),
                    format_float(r.stderr),
                    format_float(r.analytic_mse),
                    format_float(r.baseline_mse),
                    format_float(r.gamma),
                    ";".join(r.flags),
                    r.seed,
                ]
            )


def read_csv(path: str | os.PathLike) -> list[SweepRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        SweepRecord(
            scenario=row["scenario"],
            p=int(row["p"]),
            p_S=int(row["p_S"]),
            n=int(row["n"]),
            M=int(row["M"]),
            mode=row["mode"],
            empirical_mse=float(row["empirical_mse"]),
            stderr=float(row["stderr"]),
            analytic_mse=parse_float(row["analytic_mse"]),
            baseline_mse=parse_float(row["baseline_mse"]),
            gamma=parse_float(row["gamma"]),
            flags=tuple(row["flags"].split(";")) if row["flags"] else (),
            seed=int(row["seed"]),
        )
        for row in rows
    ]


def write_manifest(
    cfg: ScenarioConfig,
    records: Iterable[SweepRecord],
    path: str | os.PathLike,
    argv: Sequence[str] | None = None,
) -> None:
    """JSON sidecar with the resolved config and every per-cell seed."""
    config = {
        "scenario": cfg.scenario,
        "p": cfg.p,
        "sigma_x2": cfg.sigma_x2,
        "sigma_v2": cfg.sigma_v2,
        "sigma_z2": cfg.sigma_z2,
        "covariance": cfg.covariance,
        "ps": list(cfg.ps),
        "ns": list(cfg.ns),
        "replicates": cfg.replicates,
        "mode": cfg.mode,
        "rcond": cfg.rcond,
        "common_random_numbers": cfg.common_random_numbers,
    }
    if cfg.covariance == "explicit":
        config["K_x"] = np.asarray(cfg.K_x).tolist()
    doc = {
        "tool": "lmmse-mismatch",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "master_seed": cfg.seed,
        "argv": list(argv) if argv is not None else None,
        "config": config,
        "cells": [
            {"p_S": r.p_S, "n": r.n, "seed": r.seed, "baseline": r.is_baseline}
            for r in records
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def series(records: Sequence[SweepRecord]) -> dict[int, list[SweepRecord]]:
    """Group non-baseline records by ``p_S``, each sorted by ``n``."""
    out: dict[int, list[SweepRecord]] = {}
    for r in sorted(records, key=lambda r: (r.p_S, r.n)):
        if not r.is_baseline:
            out.setdefault(r.p_S, []).append(r)
    return out


def _clip(values: Sequence[float | None]) -> tuple[np.ndarray, np.ndarray]:
    y = np.array([np.nan if v is None else v for v in values], dtype=float)
    over = np.isfinite(y) & (y > Y_CLIP) | np.isposinf(y)
    return np.where(over, Y_CLIP, y), over


def render_svg(
    records: Sequence[SweepRecord], path: str | os.PathLike, title: str | None = None
) -> None:
    """Plot empirical (lines), analytic (markers) and baseline MSE against n.

    The y axis is log10 and values above ``Y_CLIP`` (including ``inf``) are
    pinned to the clip line and marked with a triangle.
    """
    if not records:
        raise ValueError("no records to plot")
    import matplotlib
    from matplotlib.figure import Figure
    from matplotlib.lines import Line2D

    groups = series(records)
    base = sorted((r for r in records if FLAG_BASELINE in r.flags), key=lambda r: r.n)
    colors = matplotlib.colormaps["tab10"]

    with matplotlib.rc_context({"svg.hashsalt": "lmmse-mismatch", "svg.fonttype": "none"}):
        fig = Figure(figsize=(7.0, 4.5))
        ax = fig.add_subplot()
        handles = []
        for i, (p_S, rows) in enumerate(groups.items()):
            c = colors(i % 10)
            n = np.array([r.n for r in rows])
            y, over = _clip([r.empirical_mse for r in rows])
            (h,) = ax.plot(n, y, "-", color=c, lw=1.4, marker="." if len(n) == 1 else None,
                           label=f"p_S = {p_S}")
            handles.append(h)
            if over.any():
                ax.plot(n[over], y[over], "^", color=c, ms=7, mfc="none")
            ya, over_a = _clip([r.analytic_mse for r in rows])
            if np.isfinite(ya).any():
                ax.plot(n, ya, "o", color=c, ms=4, mfc="none")
                if over_a.any():
                    ax.plot(n[over_a], ya[over_a], "^", color=c, ms=7)
        if base:
            yb, _ = _clip([r.empirical_mse for r in base])
            (h,) = ax.plot(
                [r.n for r in base], yb, "k--", lw=1.2,
                marker="s", markevery=max(1, len(base) // 8), ms=4,
                label="full LMMSE",
            )
            handles.append(h)
        handles.append(Line2D([], [], ls="none", marker="o", mfc="none", color="0.3",
                              label="analytic"))
        handles.append(Line2D([], [], ls="none", marker="^", mfc="none", color="0.3",
                              label=f"> {Y_CLIP:g} (clipped)"))
        ax.axhline(Y_CLIP, color="0.6", lw=0.6, ls=":")
        ax.set_yscale("log")
        ax.set_xlabel("number of samples n")
        ax.set_ylabel("MSE")
        if title:
            ax.set_title(title)
        ax.grid(True, which="major", lw=0.3, alpha=0.6)
        ax.legend(handles=handles, fontsize=8, loc="upper right")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
