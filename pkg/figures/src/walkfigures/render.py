"""Render walk figures from a run's CSV series directory.

Strict layering: this package consumes the CSV/JSON outputs of a completed
run and never recomputes physics (and never imports the simulator). Five
figure kinds are supported:

``density``
    Bar charts of the vertex densities at selected steps.
``g2``
    Second-order correlation heatmaps at selected steps, on a color scale
    fixed per job so panels are comparable.
``counting``
    Vertex-aggregated counting-statistics histograms at selected steps.
``phase_space``
    Scatter of per-mode (x, p) trajectories over all recorded steps,
    colored by the mode energy.
``effective_dimension``
    Effective-dimension time series with the regime-change marker from
    ``regime.json``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

__all__ = ["FigureJob", "RenderResult", "MissingStepError", "SchemaError",
           "render", "FIGURE_KINDS"]

FIGURE_KINDS = ("density", "g2", "counting", "phase_space", "effective_dimension")

DPI = 150


class MissingStepError(ValueError):
    """A requested step has no row in the series file."""


class SchemaError(ValueError):
    """A series file does not carry the expected columns."""


@dataclass
class FigureJob:
    """One figure to render.

    ``steps`` selects the panels for the stepwise kinds (density, g2,
    counting); the trajectory kinds (phase_space, effective_dimension) use
    every recorded step. ``bounds`` fixes the color scale of heatmap-like
    kinds, e.g. ``{"vmin": 0.0, "vmax": 2.0}``.
    """

    series_dir: Path
    kind: str
    steps: tuple[int, ...] = ()
    out_dir: Path = Path(".")
    bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        self.series_dir = Path(self.series_dir)
        self.out_dir = Path(self.out_dir)
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )


@dataclass
class RenderResult:
    path: Path
    kind: str
    steps: tuple[int, ...]
    marker_step: int | None = None


def _load(job: FigureJob, name: str, required_pattern: str | None = None) -> pd.DataFrame:
    path = job.series_dir / name
    if not path.exists():
        raise SchemaError(f"{name} not found in {job.series_dir}")
    frame = pd.read_csv(path)
    if "step" not in frame.columns:
        raise SchemaError(f"{name}: missing column 'step'")
    if required_pattern is not None:
        pattern = re.compile(required_pattern)
        if not any(pattern.fullmatch(c) for c in frame.columns):
            raise SchemaError(f"{name}: no column matching '{required_pattern}'")
    return frame.set_index("step")


def _rows_at(frame: pd.DataFrame, steps, name: str) -> pd.DataFrame:
    missing = [s for s in steps if s not in frame.index]
    if missing:
        raise MissingStepError(f"{name}: missing step {missing[0]}")
    return frame.loc[list(steps)]


def _panel_grid(count: int):
    cols = min(count, 4)
    rows = math.ceil(count / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.8 * rows), squeeze=False)
    return fig, [ax for row in axes for ax in row]


def render(job: FigureJob) -> RenderResult:
    """Render one figure; returns the written path and marker metadata."""
    job.out_dir.mkdir(parents=True, exist_ok=True)
    out_path = job.out_dir / f"{job.kind}.png"
    marker = None

    if job.kind == "density":
        frame = _load(job, "densities.csv", r"v\d+")
        rows = _rows_at(frame, job.steps, "densities.csv")
        vertices = [int(c[1:]) for c in frame.columns]
        fig, axes = _panel_grid(len(job.steps))
        top = float(rows.values.max()) * 1.05
        for ax, step in zip(axes, job.steps):
            ax.bar(vertices, rows.loc[step].values, color="#336699")
            ax.set_title(f"step {step}")
            ax.set_ylim(0.0, top)
            ax.set_xlabel("vertex")
            ax.set_ylabel("mean occupation")
        for ax in axes[len(job.steps):]:
            ax.axis("off")

    elif job.kind == "g2":
        frame = _load(job, "g2.csv", r"g2_\d+_\d+")
        rows = _rows_at(frame, job.steps, "g2.csv")
        m = int(math.isqrt(len(frame.columns)))
        vmin = job.bounds.get("vmin", 0.0)
        vmax = job.bounds.get("vmax", 2.0)
        fig, axes = _panel_grid(len(job.steps))
        image = None
        for ax, step in zip(axes, job.steps):
            matrix = rows.loc[step].values.reshape(m, m)
            image = ax.imshow(
                matrix, vmin=vmin, vmax=vmax, origin="lower",
                extent=(0.5, m + 0.5, 0.5, m + 0.5), cmap="viridis",
            )
            ax.set_title(f"step {step}")
            ax.set_xlabel("vertex")
            ax.set_ylabel("vertex")
        for ax in axes[len(job.steps):]:
            ax.axis("off")
        fig.colorbar(image, ax=axes[: len(job.steps)], shrink=0.85, label="g2")

    elif job.kind == "counting":
        frame = _load(job, "counting_hist.csv", r"agg_n\d+")
        rows = _rows_at(frame, job.steps, "counting_hist.csv")
        agg_cols = [c for c in frame.columns if c.startswith("agg_n")]
        occupancies = [int(c[5:]) for c in agg_cols]
        fig, axes = _panel_grid(len(job.steps))
        for ax, step in zip(axes, job.steps):
            ax.bar(occupancies, rows.loc[step, agg_cols].values, color="#993344")
            ax.set_title(f"step {step}")
            ax.set_yscale("log")
            ax.set_xlabel("bosons on a vertex")
            ax.set_ylabel("probability")
        for ax in axes[len(job.steps):]:
            ax.axis("off")

    elif job.kind == "phase_space":
        frame = _load(job, "phase_space.csv", r"x_m\d+")
        modes = sorted(
            int(c[3:]) for c in frame.columns if c.startswith("x_m")
        )
        fig, ax = plt.subplots(figsize=(6.5, 5.5))
        scatter = None
        for mode in modes:
            missing = [c for c in (f"x_m{mode}", f"p_m{mode}", f"E_m{mode}")
                       if c not in frame.columns]
            if missing:
                raise SchemaError(f"phase_space.csv: missing column '{missing[0]}'")
            scatter = ax.scatter(
                frame[f"x_m{mode}"], frame[f"p_m{mode}"],
                c=frame[f"E_m{mode}"], s=6, cmap="plasma",
                vmin=job.bounds.get("vmin"), vmax=job.bounds.get("vmax"),
            )
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        ax.set_title(f"phase-space walk, {len(modes)} modes, all steps")
        fig.colorbar(scatter, ax=ax, label="E")

    else:  # effective_dimension
        frame = _load(job, "effective_dimension.csv", r"dim")
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        ax.plot(frame.index, frame["dim"], lw=1.2, color="#225522")
        ax.set_xlabel("step")
        ax.set_ylabel("effective dimension")
        regime_path = job.series_dir / "regime.json"
        if regime_path.exists():
            regime = json.loads(regime_path.read_text())
            marker = regime.get("change_step")
            if marker is not None:
                ax.axvline(marker, color="#aa2222", ls="--", lw=1.0)
                ax.annotate(
                    f"regime change: step {marker}",
                    xy=(marker, float(frame["dim"].max())),
                    xytext=(5, -12), textcoords="offset points",
                    color="#aa2222", fontsize=9,
                )
            for value in regime.get("terminal_values", []):
                ax.axhline(value, color="#888888", ls=":", lw=0.8)
        ax.set_title("effective configuration-space dimension")

    if job.kind != "g2":  # the g2 colorbar manages its own spacing
        fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return RenderResult(path=out_path, kind=job.kind, steps=tuple(job.steps),
                        marker_step=marker)
