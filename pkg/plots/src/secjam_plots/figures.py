"""Figure construction from sweep CSVs.

Each renderer returns the numeric data it drew so callers (and tests) can
verify the figure contents without parsing image files. Rendering is
read-only with respect to the CSV and fully deterministic: fixed style,
fixed per-algorithm colors, no randomness.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CSV_COLUMNS = (
    "algorithm", "seed", "episode", "mean_reward", "mean_sr_sum",
    "mean_see_sum", "expert_0", "expert_1", "expert_2",
)

# Stable color per algorithm so reruns produce identical figures.
_COLORS = {"moe_gdm": "#d62728", "gdm": "#1f77b4", "ddpg": "#2ca02c"}
_FALLBACK_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


class SchemaError(ValueError):
    """The input CSV does not match the documented sweep schema."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    out_path: str
    kind: str  # "curves" | "scatter"
    window: int = 20

    def __post_init__(self) -> None:
        if self.kind not in ("curves", "scatter"):
            raise ValueError(f"kind must be 'curves' or 'scatter', got {self.kind!r}")
        if self.window < 1:
            raise ValueError("smoothing window must be >= 1")


def load_rows(path: str) -> list[dict]:
    """Read and validate a sweep CSV; raises SchemaError on mismatch."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                raise SchemaError(f"{path}: empty CSV")
            for col in CSV_COLUMNS:
                if col not in reader.fieldnames:
                    raise SchemaError(f"{path}: missing column {col!r}")
            rows = list(reader)
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average, truncated at the edges; window 1 is the
    identity."""
    if window < 1:
        raise ValueError("window must be >= 1")
    v = np.asarray(values, dtype=float)
    if window == 1:
        return v.copy()
    left, right = (window - 1) // 2, window // 2
    out = np.empty_like(v)
    for i in range(len(v)):
        out[i] = v[max(0, i - left) : i + right + 1].mean()
    return out


def least_squares(x: np.ndarray, y: np.ndarray) -> tuple[float, float] | None:
    """Closed-form fit of y = slope*x + intercept; None when underdetermined
    (fewer than two points or no spread in x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return None
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        return None
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    return slope, float(ym - slope * xm)


def _color(algo: str, index: int) -> str:
    return _COLORS.get(algo, _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])


def _image_paths(out_path: str) -> tuple[str, str]:
    base, _ = os.path.splitext(out_path)
    return base + ".png", base + ".svg"


def _save(fig, out_path: str) -> tuple[str, str]:
    png, svg = _image_paths(out_path)
    fig.savefig(png, dpi=150)
    fig.savefig(svg)
    plt.close(fig)
    return png, svg


def curves_data(rows: list[dict], window: int) -> dict[str, dict]:
    """Per-algorithm (episodes, mean, lo, hi) arrays: each seed's reward
    series is smoothed, then aggregated across seeds per episode."""
    series: dict[str, dict[int, list[tuple[int, float]]]] = {}
    for row in rows:
        series.setdefault(row["algorithm"], {}).setdefault(
            int(row["seed"]), []
        ).append((int(row["episode"]), float(row["mean_reward"])))
    out = {}
    for algo, seeds in series.items():
        smoothed: dict[int, dict[int, float]] = {}
        for seed, pairs in seeds.items():
            pairs.sort()
            vals = moving_average(np.array([v for _, v in pairs]), window)
            smoothed[seed] = {ep: v for (ep, _), v in zip(pairs, vals)}
        episodes = sorted({ep for d in smoothed.values() for ep in d})
        mat = np.full((len(smoothed), len(episodes)), np.nan)
        for i, d in enumerate(smoothed.values()):
            for j, ep in enumerate(episodes):
                if ep in d:
                    mat[i, j] = d[ep]
        out[algo] = {
            "episodes": np.array(episodes),
            "mean": np.nanmean(mat, axis=0),
            "lo": np.nanmin(mat, axis=0),
            "hi": np.nanmax(mat, axis=0),
        }
    return out


def render_curves(spec: FigureSpec) -> dict:
    """Learning curves: per-algorithm mean over seeds with a min-max band.

    Returns {"paths": (png, svg), "data": curves_data(...)}.
    """
    rows = load_rows(spec.csv_path)
    data = curves_data(rows, spec.window)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, algo in enumerate(sorted(data)):
        d = data[algo]
        c = _color(algo, i)
        ax.plot(d["episodes"], d["mean"], color=c, label=algo, linewidth=1.5)
        ax.fill_between(d["episodes"], d["lo"], d["hi"], color=c, alpha=0.2,
                        linewidth=0)
    ax.set_xlabel("episode")
    ax.set_ylabel(f"mean episode reward (window {spec.window})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    paths = _save(fig, spec.out_path)
    return {"paths": paths, "data": data}


def scatter_data(rows: list[dict]) -> dict[str, dict]:
    """Per-algorithm scatter points (x = mean_see_sum, y = mean_sr_sum) and
    the trend-line fit (None when underdetermined)."""
    pts: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        pts.setdefault(row["algorithm"], []).append(
            (float(row["mean_see_sum"]), float(row["mean_sr_sum"]))
        )
    out = {}
    for algo, p in pts.items():
        x = np.array([a for a, _ in p])
        y = np.array([b for _, b in p])
        out[algo] = {"x": x, "y": y, "fit": least_squares(x, y)}
    return out


def render_scatter(spec: FigureSpec) -> dict:
    """Secrecy-rate versus secure-EE scatter with per-algorithm least-squares
    trend lines (omitted when the fit is underdetermined).

    Returns {"paths": (png, svg), "data": scatter_data(...)}.
    """
    rows = load_rows(spec.csv_path)
    data = scatter_data(rows)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for i, algo in enumerate(sorted(data)):
        d = data[algo]
        c = _color(algo, i)
        ax.scatter(d["x"], d["y"], s=8, color=c, alpha=0.4, label=algo,
                   edgecolors="none")
        if d["fit"] is not None:
            slope, intercept = d["fit"]
            xs = np.array([d["x"].min(), d["x"].max()])
            ax.plot(xs, slope * xs + intercept, color=c, linewidth=1.5)
    ax.set_xlabel("mean secure energy efficiency sum")
    ax.set_ylabel("mean secrecy rate sum")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    paths = _save(fig, spec.out_path)
    return {"paths": paths, "data": data}
