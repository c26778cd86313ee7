"""Render publication-style figures from exsurf CSV tables.

Strictly a consumer: every number comes from the input CSV; nothing is
recomputed here.  Rendering is deterministic (fixed style, Agg backend,
no timestamps), so re-running a figure reproduces it byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

plt.rcParams.update(
    {
        "figure.dpi": 130,
        "savefig.dpi": 130,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "exsurf-figures",
    }
)

BAND_COLORS = ("#d62728", "#2ca02c", "#1f77b4")
TWO_PI = 2 * np.pi


class SchemaError(ValueError):
    """Input table does not match the documented dataset schema."""


@dataclass(frozen=True)
class FigureSpec:
    input: Path
    figure: str
    output: Path


def load_table(path: Path, required: tuple[str, ...]) -> pd.DataFrame:
    if not Path(path).exists():
        raise SchemaError(f"input file not found: {path}")
    df = pd.read_csv(path, comment="#")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}; found {list(df.columns)}")
    if len(df) == 0:
        raise SchemaError(f"{path}: table is empty")
    return df


def _finish(fig, output: Path) -> Path:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, metadata=_clean_metadata(output.suffix))
    plt.close(fig)
    return output


def _clean_metadata(suffix: str):
    # keep raster and vector outputs free of creation timestamps
    if suffix == ".png":
        return {"Software": "exsurf-figures"}
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".pdf":
        return {"CreationDate": None}
    return None


def fig_surface_sheets(df: pd.DataFrame, output: Path) -> Path:
    """Eigenvalue sheets over the (q1, q3) plane, real and imaginary parts."""
    fig = plt.figure(figsize=(8.6, 3.6))
    for panel, column in enumerate(("reE", "imE")):
        ax = fig.add_subplot(1, 2, panel + 1, projection="3d")
        for band, sub in df.groupby("band"):
            ax.scatter(
                sub["q1"], sub["q3"], sub[column],
                s=2.0, color=BAND_COLORS[int(band) % 3], linewidths=0,
            )
        ax.set_xlabel("q1")
        ax.set_ylabel("q3")
        ax.set_zlabel(f"{'Re' if column == 'reE' else 'Im'} E")
        ax.view_init(elev=18, azim=-60)
    fig.suptitle("eigenvalue sheets on the q2 = q4 = 0 slice")
    fig.tight_layout()
    return _finish(fig, output)


def fig_flux_vs_ratio(df: pd.DataFrame, output: Path) -> Path:
    """Quantized-flux curve against the sphere-to-surface radius ratio."""
    df = df.sort_values("ratio")
    ok = df[df["status"] == "ok"]
    bad = df[df["status"] != "ok"]
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.axhline(0.0, color="0.6", ls="--", lw=1)
    ax.axhline(1.0, color="0.6", ls="--", lw=1)
    ax.plot(ok["ratio"], ok["dd"], "o-", color="#1f77b4", label="metric route")
    if len(bad):
        for ratio in bad["ratio"]:
            ax.axvline(ratio, color="#d62728", alpha=0.25, lw=6)
        ax.plot([], [], color="#d62728", alpha=0.4, lw=6, label="ill-defined")
    ax.set_xlabel("R / r0")
    ax.set_ylabel("flux invariant")
    ax.set_xscale("log")
    ax.legend(loc="center right")
    fig.tight_layout()
    return _finish(fig, output)


def fig_tracks(df: pd.DataFrame, output: Path, title: str) -> Path:
    """Continued eigenvalue sheets along the multi-loop control path."""
    fig, axes = plt.subplots(1, 2, figsize=(8.2, 3.0), sharex=True)
    for band, sub in df.groupby("band"):
        sub = sub.sort_values("theta")
        color = BAND_COLORS[int(band) % 3]
        axes[0].plot(sub["theta"] / TWO_PI, sub["reE"], color=color, lw=1.2)
        axes[1].plot(sub["theta"] / TWO_PI, sub["imE"], color=color, lw=1.2)
    axes[0].set_ylabel("Re E")
    axes[1].set_ylabel("Im E")
    for ax in axes:
        ax.set_xlabel("loops")
        loops = int(round(df["theta"].max() / TWO_PI + 0.5))
        for edge in range(1, loops):
            ax.axvline(edge, color="0.8", lw=0.8)
    fig.suptitle(title)
    fig.tight_layout()
    return _finish(fig, output)


def fig_phase_transition(df: pd.DataFrame, output: Path, title: str) -> Path:
    """Accumulated loop phase against the nesting ratio."""
    df = df.sort_values("nesting_ratio")
    ok = df[df["status"] == "ok"]
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.axhline(1.0, color="0.6", ls="--", lw=1)
    ax.axhline(0.0, color="0.6", ls="--", lw=1)
    ax.axvline(1.0, color="0.7", ls=":", lw=1)
    ax.plot(ok["nesting_ratio"], ok["phase"] / TWO_PI, "o-", color="#9467bd")
    flagged = df[df["status"] != "ok"]
    if len(flagged):
        ax.plot(
            flagged["nesting_ratio"], np.zeros(len(flagged)), "x",
            color="#d62728", label="flagged",
        )
        ax.legend()
    ax.set_xlabel("(delta - R) / ring radius")
    ax.set_ylabel("phase / 2 pi")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    return _finish(fig, output)


def fig_chains(df: pd.DataFrame, output: Path) -> Path:
    """Trimer-chain panels: complex spectra and the sweep against t1."""
    one = df[df["model"] == "one"]
    two = df[df["model"] == "two"]
    if len(one) == 0 or len(two) == 0:
        raise SchemaError("chain table must contain rows for both models")
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 5.6))
    for col, bc in enumerate(("pbc", "obc")):
        sub = one[one["bc"] == bc]
        t1 = sub["t1"].iloc[0] if len(sub) else None
        sub = sub[sub["t1"] == t1]
        axes[0, col].scatter(
            sub["reE"], sub["imE"], s=12, c="#1f77b4", linewidths=0
        )
        axes[0, col].set_title(f"first model, {bc}")
        axes[0, col].set_xlabel("Re E")
        axes[0, col].set_ylabel("Im E")
    for col, bc in enumerate(("pbc", "obc")):
        sub = two[two["bc"] == bc]
        for band, bsub in sub.groupby("band"):
            bsub = bsub.sort_values("t1")
            axes[1, col].plot(
                bsub["t1"], bsub["reE"], ".", ms=2.5,
                color=BAND_COLORS[int(band) % 3],
            )
        axes[1, col].set_title(f"second model, {bc}")
        axes[1, col].set_xlabel("t1")
        axes[1, col].set_ylabel("Re E")
    fig.tight_layout()
    return _finish(fig, output)


def fig_populations(df: pd.DataFrame, output: Path) -> Path:
    """No-jump populations: full drive, effective model, fitted model."""
    styles = {"lab": "-", "effective": "--", "fitted": ":"}
    pops = ("p_e00", "p_g10", "p_g01")
    inits = sorted(df["init"].unique())
    fig, axes = plt.subplots(1, len(inits), figsize=(8.6, 2.9), sharey=True)
    axes = np.atleast_1d(axes)
    for ax, init in zip(axes, inits):
        sub = df[df["init"] == init]
        for source, ssub in sub.groupby("source"):
            if source not in styles:
                raise SchemaError(f"unknown trajectory source {source!r}")
            ssub = ssub.sort_values("t")
            for pop, color in zip(pops, BAND_COLORS):
                ax.plot(
                    ssub["t"], ssub[pop], styles[source], color=color, lw=1.1,
                )
        ax.set_title(f"start {init}")
        ax.set_xlabel("t (us)")
    axes[0].set_ylabel("population")
    fig.suptitle("solid: full drive, dashed: effective, dotted: fitted")
    fig.tight_layout()
    return _finish(fig, output)


def render(spec: FigureSpec) -> Path:
    """Render one figure id from its documented input table."""
    if spec.figure not in FIGURES:
        raise SchemaError(
            f"unknown figure {spec.figure!r}; choose from {sorted(FIGURES)}"
        )
    columns, renderer = FIGURES[spec.figure]
    df = load_table(spec.input, columns)
    return renderer(df, spec.output)


FIGURES = {
    "fig1": (
        ("q1", "q3", "band", "reE", "imE", "class"),
        fig_surface_sheets,
    ),
    "fig3": (("ratio", "dd", "status"), fig_flux_vs_ratio),
    "fig4": (
        ("theta", "band", "reE", "imE"),
        lambda df, out: fig_tracks(df, out, "eigenvalue braid along the control loop"),
    ),
    "fig5": (
        ("nesting_ratio", "phase", "status"),
        lambda df, out: fig_phase_transition(df, out, "loop phase transition"),
    ),
    "fig6": (
        ("model", "bc", "t1", "band", "reE", "imE"),
        fig_chains,
    ),
    "figS4": (
        ("source", "init", "t", "p_e00", "p_g10", "p_g01"),
        fig_populations,
    ),
    "figS5": (
        ("theta", "band", "reE", "imE"),
        lambda df, out: fig_tracks(df, out, "fitted eigenenergies along the loop"),
    ),
    "figS6": (
        ("nesting_ratio", "phase", "status"),
        lambda df, out: fig_phase_transition(
            df, out, "loop phase transition, measurement pipeline"
        ),
    ),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="exsurf-fig",
        description="Render a figure from an exsurf CSV table (read-only).",
    )
    parser.add_argument("--input", required=True, help="CSV produced by exsurf")
    parser.add_argument("--figure", required=True, choices=sorted(FIGURES))
    parser.add_argument("--output", required=True, help="image path (.png/.svg/.pdf)")
    args = parser.parse_args(argv)
    spec = FigureSpec(Path(args.input), args.figure, Path(args.output))
    try:
        path = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
