"""Figure rendering: solver sweeps, spectra and eigenvector modulus fields.

Conventions follow the experiment harness's figure style: the shift axis
eta_min is logarithmic, one line per gauge configuration shaded light to dark
with increasing configuration id, solid lines for residuals and dashed for
errors.  Rendering is deterministic: the Agg backend, no embedded dates, and
a fixed SVG hash salt.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "wilsonmg"

import matplotlib.pyplot as plt
import numpy as np

from .spec import PlotSpec

REQUIRED = {
    "iterations": {"config_id", "eta_min", "iterations"},
    "rho": {"config_id", "eta_min", "rho"},
    "resid-error": {"config_id", "eta_min", "rel_residual", "rel_error"},
    "spectrum": {"config_id", "row_type", "k", "sigma"},
}


@dataclass
class RenderReport:
    out: Path
    series: int


def _read_rows(spec: PlotSpec) -> list[dict]:
    with open(spec.input, newline="") as f:
        reader = csv.DictReader(f)
        columns = set(reader.fieldnames or ())
        missing = REQUIRED[spec.kind] - columns
        if missing:
            raise ValueError(f"{spec.input}: missing columns {sorted(missing)} for kind {spec.kind}")
        rows = list(reader)
    for key, want in spec.filters.items():
        if key not in columns:
            raise ValueError(f"{spec.input}: cannot filter on unknown column {key!r}")
        rows = [r for r in rows if _matches(r[key], want)]
    if not rows:
        raise ValueError(f"{spec.input}: no rows left after filters {spec.filters}")
    return rows


def _matches(raw: str, want) -> bool:
    if isinstance(want, str):
        return raw == want
    try:
        return float(raw) == float(want)
    except ValueError:
        return False


def _by_config(rows: list[dict]) -> dict[int, list[dict]]:
    out: dict[int, list[dict]] = {}
    for r in rows:
        out.setdefault(int(r["config_id"]), []).append(r)
    return dict(sorted(out.items()))


def _shades(count: int):
    # light to dark with increasing configuration number
    return plt.cm.Blues(np.linspace(0.35, 0.95, max(count, 2)))


def _save(fig, spec: PlotSpec) -> Path:
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out.suffix.lower() == ".svg" else None
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return out


def _float(r, key):
    return float(r[key])


def _line_figure(spec: PlotSpec, rows, ykey, ylabel, logy):
    groups = _by_config(rows)
    colors = _shades(len(groups))
    fig, ax = plt.subplots(figsize=(5.0, 3.6), constrained_layout=True)
    for color, (cid, rs) in zip(colors, groups.items()):
        rs = sorted(rs, key=lambda r: _float(r, "eta_min"))
        x = [_float(r, "eta_min") for r in rs]
        y = [_float(r, ykey) for r in rs]
        ax.plot(x, y, "o-", color=color, label=str(cid), markersize=3)
    ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("eta_min")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=5, ncol=3, title="configuration", title_fontsize=6)
    return fig, len(groups)


def _resid_error_figure(spec: PlotSpec, rows):
    groups = _by_config(rows)
    colors = _shades(len(groups))
    fig, ax = plt.subplots(figsize=(5.0, 3.6), constrained_layout=True)
    for color, (cid, rs) in zip(colors, groups.items()):
        rs = sorted(rs, key=lambda r: _float(r, "eta_min"))
        x = [_float(r, "eta_min") for r in rs]
        ax.plot(x, [_float(r, "rel_residual") for r in rs], "-", color=color, label=str(cid))
        ax.plot(x, [_float(r, "rel_error") for r in rs], "--", color=color)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("eta_min")
    ax.set_ylabel("relative residual (solid), relative error (dashed)")
    ax.legend(fontsize=5, ncol=3, title="configuration", title_fontsize=6)
    return fig, len(groups)


def _spectrum_figure(spec: PlotSpec, rows):
    have_plane = any(r["row_type"] == "eigenvalue" and r.get("re") for r in rows)
    fig, ax = plt.subplots(figsize=(4.2, 3.6), constrained_layout=True)
    if have_plane:
        rows = [r for r in rows if r["row_type"] == "eigenvalue"]
        groups = _by_config(rows)
        colors = _shades(len(groups))
        for color, (cid, rs) in zip(colors, groups.items()):
            ax.plot(
                [_float(r, "re") for r in rs],
                [_float(r, "im") for r in rs],
                ".",
                color=color,
                markersize=2,
                label=str(cid),
            )
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
    else:
        rows = [r for r in rows if r["row_type"] == "sigma"]
        groups = _by_config(rows)
        colors = _shades(len(groups))
        for color, (cid, rs) in zip(colors, groups.items()):
            rs = sorted(rs, key=lambda r: int(r["k"]))
            ax.semilogy(
                [int(r["k"]) for r in rs], [_float(r, "sigma") for r in rs],
                "o-", color=color, markersize=3, label=str(cid),
            )
        ax.set_xlabel("mode index")
        ax.set_ylabel("singular value")
    ax.legend(fontsize=5, ncol=3, title="configuration", title_fontsize=6)
    return fig, len(groups)


def _modefield_figure(spec: PlotSpec):
    grid = np.loadtxt(spec.input)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ValueError(f"{spec.input}: expected a square text grid")
    n = grid.shape[0]
    dpi = 100
    side = n * spec.scale / dpi
    fig = plt.figure(figsize=(side, side), dpi=dpi)
    ax = fig.add_axes([0, 0, 1, 1])
    ax.imshow(grid, cmap="viridis", origin="lower", interpolation="nearest")
    ax.set_axis_off()
    return fig, 1


def render(spec: PlotSpec) -> RenderReport:
    """Render one figure; returns the output path and number of line series."""
    if spec.kind == "modefield":
        fig, series = _modefield_figure(spec)
    else:
        rows = _read_rows(spec)
        if spec.kind == "iterations":
            fig, series = _line_figure(spec, rows, "iterations", "iterations", logy=True)
        elif spec.kind == "rho":
            fig, series = _line_figure(spec, rows, "rho", "convergence rate", logy=False)
        elif spec.kind == "resid-error":
            fig, series = _resid_error_figure(spec, rows)
        else:
            fig, series = _spectrum_figure(spec, rows)
    out = _save(fig, spec)
    return RenderReport(out, series)
