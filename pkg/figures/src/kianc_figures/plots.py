"""Figure rendering for the four result-CSV schemas.

Each plot function takes a CSV path, validates the header against the
documented schema, and returns a matplotlib Figure; `out_path` saves it.
All functions are pure readers of their inputs.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMAS = {
    "convergence": ["iteration", "method", "p_red_db"],
    "sweep": ["frequency_hz", "method", "p_red_db"],
    "perturb": ["frequency_hz", "method", "mean_p_red_db", "std_p_red_db", "trials"],
    "field-heatmap": ["x", "y", "z", "re_up", "im_up", "re_ue", "im_ue"],
}


class SchemaError(Exception):
    """CSV header or contents do not match the expected schema."""


def read_csv(path, kind):
    """Rows of a result CSV as a list of dicts, schema-checked.

    Raises SchemaError when the header differs from the documented schema
    for `kind` or the file holds no data rows.
    """
    expected = SCHEMAS[kind]
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"input CSV not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {expected}") from None
        if header != expected:
            raise SchemaError(f"{path}: header {header} does not match {kind} schema {expected}")
        rows = [dict(zip(expected, row)) for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _methods_in_order(rows):
    seen = {}
    for row in rows:
        seen.setdefault(row["method"], None)
    return list(seen)


def _finish(fig, out_path, dpi):
    if out_path is not None:
        fig.savefig(out_path, dpi=dpi, bbox_inches="tight")
    return fig


def plot_convergence(csv_path, out_path=None, title=None, dpi=150):
    """Reduction vs. iteration, one line per method."""
    rows = read_csv(csv_path, "convergence")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for method in _methods_in_order(rows):
        pts = [(int(r["iteration"]), float(r["p_red_db"])) for r in rows if r["method"] == method]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=method, linewidth=1.4)
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Regional power reduction (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, out_path, dpi)


def plot_sweep(csv_path, out_path=None, title=None, dpi=150):
    """Final reduction vs. frequency, one line per method."""
    rows = read_csv(csv_path, "sweep")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for method in _methods_in_order(rows):
        pts = [(float(r["frequency_hz"]), float(r["p_red_db"])) for r in rows if r["method"] == method]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=method, marker=".", linewidth=1.2)
    ax.set_xlabel("Frequency (Hz)")
    ax.set_ylabel("Regional power reduction (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, out_path, dpi)


def plot_perturb(csv_path, out_path=None, title=None, dpi=150):
    """Mean reduction vs. frequency with the trial spread as error bars."""
    rows = read_csv(csv_path, "perturb")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for method in _methods_in_order(rows):
        pts = [
            (float(r["frequency_hz"]), float(r["mean_p_red_db"]), float(r["std_p_red_db"]))
            for r in rows
            if r["method"] == method
        ]
        pts.sort()
        ax.errorbar(
            [p[0] for p in pts],
            [p[1] for p in pts],
            yerr=[p[2] for p in pts],
            label=method,
            marker=".",
            linewidth=1.2,
            capsize=2.5,
        )
    ax.set_xlabel("Frequency (Hz)")
    ax.set_ylabel("Mean regional power reduction (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    return _finish(fig, out_path, dpi)


def plot_field_heatmap(csv_path, out_path=None, title=None, dpi=150):
    """|field| maps on the grid slice nearest z = 0, before and after control.

    Values are shown in dB relative to the peak of the uncontrolled field,
    on a common color scale.
    """
    rows = read_csv(csv_path, "field-heatmap")
    data = np.array([[float(r[c]) for c in SCHEMAS["field-heatmap"]] for r in rows])
    z_values = np.unique(data[:, 2])
    z_mid = z_values[np.argmin(np.abs(z_values))]
    sl = data[data[:, 2] == z_mid]
    xs, ys = np.unique(sl[:, 0]), np.unique(sl[:, 1])
    if len(sl) != len(xs) * len(ys):
        raise SchemaError("field slice is not a regular grid")
    up = np.abs(sl[:, 3] + 1j * sl[:, 4]).reshape(len(xs), len(ys))
    ue = np.abs(sl[:, 5] + 1j * sl[:, 6]).reshape(len(xs), len(ys))
    ref = up.max()
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0), sharey=True)
    for ax, mag, label in ((axes[0], up, "uncontrolled"), (axes[1], ue, "controlled")):
        level_db = 20 * np.log10(np.maximum(mag, 1e-12 * ref) / ref)
        im = ax.pcolormesh(xs, ys, level_db.T, vmin=-40.0, vmax=0.0, shading="nearest")
        ax.set_xlabel("x (m)")
        ax.set_title(f"{label}, z = {z_mid:g} m")
        ax.set_aspect("equal")
    axes[0].set_ylabel("y (m)")
    fig.colorbar(im, ax=axes, label="level (dB re peak)")
    if title:
        fig.suptitle(title)
    return _finish(fig, out_path, dpi)


_PLOTTERS = {
    "convergence": plot_convergence,
    "sweep": plot_sweep,
    "perturb": plot_perturb,
    "field-heatmap": plot_field_heatmap,
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure job: input CSV, figure kind, output path, styling."""

    csv_path: Path
    kind: str
    out_path: Path
    title: str = None
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in _PLOTTERS:
            raise ValueError(f"unknown figure kind {self.kind!r}, expected one of {sorted(_PLOTTERS)}")


def render(spec):
    """Render one FigureSpec to its output path and return that path."""
    fig = _PLOTTERS[spec.kind](spec.csv_path, out_path=spec.out_path, title=spec.title, dpi=spec.dpi)
    plt.close(fig)
    return Path(spec.out_path)
