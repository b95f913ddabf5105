"""Static figure rendering from scan CSV output.

Reads only the public CSV/JSON contract of the spectral engine (columns
model, g, cutoffs, level_index, re, im, rel_change, residual[, is_complex])
and never imports it.  Rendering is deterministic: fixed backend, fixed
fonts, pinned metadata, so the same inputs give identical image bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("real-vs-g", "imag-vs-g", "frontier", "convergence")

REQUIRED_COLUMNS = ("model", "g", "cutoffs", "level_index", "re", "im")

# determinism: pin everything the renderer depends on
_RC = {
    "figure.figsize": (7.0, 5.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.linewidth": 0.3,
    "grid.alpha": 0.4,
    "svg.hashsalt": "ptplot",
}

_PNG_METADATA = {"Software": "ptplot"}


class SchemaError(ValueError):
    """Input CSV does not follow the scan schema."""


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    kind: str
    out_path: str
    window: float | None = None
    fit_json: str | None = None
    imag_threshold: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


@dataclass
class LevelRow:
    model: str
    g: float
    cutoffs: str
    level_index: int
    re: float
    im: float
    is_complex: bool


def load_rows(path: str, imag_threshold: float = 1e-6) -> list[LevelRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing required columns {missing}; found {header}"
            )
        rows = []
        for rec in reader:
            im = float(rec["im"])
            if "is_complex" in rec and rec["is_complex"] != "":
                cplx = rec["is_complex"] == "1"
            else:
                cplx = abs(im) > imag_threshold
            rows.append(
                LevelRow(
                    model=rec["model"],
                    g=float(rec["g"]),
                    cutoffs=rec["cutoffs"],
                    level_index=int(rec["level_index"]),
                    re=float(rec["re"]),
                    im=im,
                    is_complex=cplx,
                )
            )
    return rows


def _cutoff_size(label: str) -> int:
    """Total basis dimension encoded in a cutoffs label like '80' or '50x50'."""
    label = label.split("[")[0].split("+")[0]
    size = 1
    for tok in label.split("x"):
        size *= int(tok)
    return size


def _apply_window(rows: list[LevelRow], window: float | None) -> list[LevelRow]:
    if window is None:
        return rows
    return [r for r in rows if r.re <= window]


def _save(fig, out_path: str) -> None:
    fig.savefig(out_path, metadata=_PNG_METADATA)
    plt.close(fig)


def render(spec: PlotSpec) -> str:
    """Render one panel and return the output path."""
    rows = _apply_window(load_rows(spec.csv_path, spec.imag_threshold), spec.window)
    with plt.rc_context(_RC):
        if spec.kind == "real-vs-g":
            fig = _panel_real_vs_g(rows, spec)
        elif spec.kind == "imag-vs-g":
            fig = _panel_imag_vs_g(rows, spec)
        elif spec.kind == "frontier":
            fig = _panel_frontier(rows, spec)
        else:
            fig = _panel_convergence(rows, spec)
        _save(fig, spec.out_path)
    return spec.out_path


def _model_name(rows: list[LevelRow]) -> str:
    return rows[0].model if rows else "spectrum"


def _panel_real_vs_g(rows, spec):
    fig, ax = plt.subplots()
    g = np.array([r.g for r in rows])
    re = np.array([r.re for r in rows])
    ax.plot(g, re, ".", markersize=2.0, color="#1f3d7a", rasterized=False)
    ax.set_xlabel("coupling g")
    ax.set_ylabel("Re(E)")
    title = f"{_model_name(rows)}: real parts of converged levels"
    if spec.window is not None:
        title += f" (Re <= {spec.window:g})"
    ax.set_title(title)
    return fig


def _panel_imag_vs_g(rows, spec):
    fig, ax = plt.subplots()
    g = np.array([r.g for r in rows])
    im = np.array([r.im for r in rows])
    ax.plot(g, im, ".", markersize=2.5, color="#8a1f1f")
    ax.axhline(0.0, color="black", linewidth=0.5)
    ax.set_xlabel("coupling g")
    ax.set_ylabel("Im(E)")
    ax.set_title(f"{_model_name(rows)}: imaginary parts of converged levels")
    return fig


def _frontier_points(rows):
    best: dict[float, float] = {}
    for r in rows:
        if not r.is_complex:
            continue
        if r.g not in best or r.re < best[r.g]:
            best[r.g] = r.re
    return sorted(best.items())


def _panel_frontier(rows, spec):
    fig, ax = plt.subplots()
    pts = _frontier_points(rows)
    if not pts:
        ax.text(
            0.5,
            0.5,
            "no complex levels",
            transform=ax.transAxes,
            ha="center",
            va="center",
            fontsize=14,
            color="#666666",
        )
    else:
        g = np.array([p[0] for p in pts])
        f = np.array([p[1] for p in pts])
        ax.plot(g, f, "o", markersize=4, color="#1f6e3d", label="left edge of complex levels")
        if spec.fit_json:
            curve = json.loads(Path(spec.fit_json).read_text())
            form = curve["form"]
            params = curve["params"]
            gg = np.linspace(g.min(), g.max(), 400)
            if form == "power":
                a, b, c = params
                ff = a * (gg - b) ** c
                label = f"fit a(g-b)^c, b={b:.4g}"
            elif form == "log":
                a, b, d = params
                ff = a * (-np.log(gg - b)) ** d
                label = f"fit a(-log(g-b))^d, b={b:.4g}"
            else:
                raise SchemaError(f"{spec.fit_json}: unknown fit form {form!r}")
            ax.plot(gg, ff, "-", linewidth=1.2, color="#b3541e", label=label)
        ax.legend(loc="best")
    ax.set_xlabel("coupling g")
    ax.set_ylabel("min Re(E) among complex levels")
    ax.set_title(f"{_model_name(rows)}: complex-level frontier")
    return fig


def _panel_convergence(rows, spec):
    fig, ax = plt.subplots()
    by_level: dict[int, list[tuple[int, float]]] = {}
    for r in rows:
        by_level.setdefault(r.level_index, []).append((_cutoff_size(r.cutoffs), r.re))
    for idx in sorted(by_level):
        pts = sorted(by_level[idx])
        n = [p[0] for p in pts]
        re = [p[1] for p in pts]
        ax.plot(n, re, "-", linewidth=0.8, color="#1f3d7a", alpha=0.8)
        ax.plot(n, re, ".", markersize=3, color="#1f3d7a")
    ax.set_xlabel("matrix dimension N")
    ax.set_ylabel("Re(E)")
    ax.set_title(f"{_model_name(rows)}: eigenvalue settling with matrix size")
    return fig
