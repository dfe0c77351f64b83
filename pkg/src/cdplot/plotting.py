"""Render quench-report CSVs into publication-style figures.

Three figure kinds are supported:

* ``fig1`` - excitation probability versus momentum, one panel per filter,
  one curve per range cutoff, with an inset showing the same data against
  the rescaled momentum k*M;
* ``fig2`` - excitation density versus quench rate on log-log axes, one
  curve per cutoff;
* ``lz``   - two-level fidelity traces versus time.

Data points are plotted exactly as read (no smoothing), and rendering the
same CSV twice produces identical output files: date metadata is stripped
from vector formats.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class PlotDataError(ValueError):
    """Input CSV missing, empty, or not matching the figure kind."""


@dataclass(frozen=True)
class PlotSpec:
    inputs: tuple
    kind: str                      # fig1 | fig2 | lz
    out: str
    raster: bool = False
    rescale: bool = True           # draw the k*M inset on fig1 panels

    def __post_init__(self):
        if self.kind not in ("fig1", "fig2", "lz"):
            raise PlotDataError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise PlotDataError("at least one input CSV is required")


@dataclass
class PanelReport:
    title: str
    n_curves: int
    xscale: str
    yscale: str


@dataclass
class RenderReport:
    path: Path
    panels: list = field(default_factory=list)


def read_table(path) -> dict:
    """Parse a report CSV (comment lines start with '#') into columns."""
    path = Path(path)
    if not path.exists():
        raise PlotDataError(f"no such file: {path}")
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(
            line for line in fh if not line.startswith("#")) if r]
    if len(rows) < 2:
        raise PlotDataError(f"{path}: no data rows")
    header, data = rows[0], rows[1:]
    table = {}
    for i, name in enumerate(header):
        column = [row[i] for row in data]
        try:
            table[name] = [float(x) for x in column]
        except ValueError:
            table[name] = column
    return table


def _require(table, columns, path):
    missing = [c for c in columns if c not in table]
    if missing:
        raise PlotDataError(f"{path}: missing columns {missing}")


def _group_by_cutoff(table):
    groups = {}
    for i, m in enumerate(table["cutoff_m"]):
        groups.setdefault(int(m), []).append(i)
    return dict(sorted(groups.items()))


def _save(fig, spec: PlotSpec) -> Path:
    out = Path(spec.out)
    if out.suffix == "":
        out = out.with_suffix(".png" if spec.raster else ".pdf")
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = None
    if out.suffix == ".pdf":
        metadata = {"CreationDate": None}
    elif out.suffix == ".svg":
        metadata = {"Date": None}
    fig.savefig(out, metadata=metadata, dpi=200 if spec.raster else None)
    plt.close(fig)
    return out


def _render_fig1(spec: PlotSpec) -> RenderReport:
    tables = [(Path(p), read_table(p)) for p in spec.inputs]
    for path, table in tables:
        _require(table, ("k", "cutoff_m", "filter_kind", "p_k", "k_times_m"),
                 path)
    panels = []
    for path, table in tables:
        for kind in sorted(set(table["filter_kind"])):
            idx = [i for i, f in enumerate(table["filter_kind"]) if f == kind]
            sub = {c: [table[c][i] for i in idx] for c in
                   ("k", "cutoff_m", "p_k", "k_times_m")}
            panels.append((kind, sub))
    fig, axes = plt.subplots(1, len(panels), figsize=(5.2 * len(panels), 4.0),
                             squeeze=False)
    report = RenderReport(path=None)
    for ax, (kind, sub) in zip(axes[0], panels):
        groups = _group_by_cutoff(sub)
        for m, idx in groups.items():
            ks = [sub["k"][i] for i in idx]
            ps = [sub["p_k"][i] for i in idx]
            ax.plot(ks, ps, lw=1.0, label=f"M={m}")
        ax.set_yscale("log")
        ax.set_xlabel("k")
        ax.set_ylabel(r"$p_k$")
        ax.set_title(kind)
        ax.legend(fontsize=7, loc="upper right")
        if spec.rescale:
            inset = ax.inset_axes([0.52, 0.14, 0.44, 0.42])
            for m, idx in groups.items():
                if m == 0:
                    continue
                km = [sub["k_times_m"][i] for i in idx]
                ps = [sub["p_k"][i] for i in idx]
                inset.plot(km, ps, lw=0.8)
            inset.set_xscale("log")
            inset.set_yscale("log")
            inset.set_xlabel("kM", fontsize=7)
            inset.tick_params(labelsize=6)
        report.panels.append(PanelReport(
            title=kind, n_curves=len(groups), xscale=ax.get_xscale(),
            yscale=ax.get_yscale()))
    fig.tight_layout()
    report.path = _save(fig, spec)
    return report


def _render_fig2(spec: PlotSpec) -> RenderReport:
    path = Path(spec.inputs[0])
    table = read_table(path)
    _require(table, ("rate", "cutoff_m", "n_ex"), path)
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    groups = _group_by_cutoff(table)
    for m, idx in groups.items():
        pairs = sorted((table["rate"][i], table["n_ex"][i]) for i in idx)
        ax.plot([r for r, _ in pairs], [n for _, n in pairs],
                marker="o", ms=3, lw=1.0, label=f"M={m}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("quench rate")
    ax.set_ylabel(r"$n_{\mathrm{ex}}$")
    ax.legend(fontsize=7)
    fig.tight_layout()
    report = RenderReport(path=None, panels=[PanelReport(
        title="fig2", n_curves=len(groups), xscale=ax.get_xscale(),
        yscale=ax.get_yscale())])
    report.path = _save(fig, spec)
    return report


def _render_lz(spec: PlotSpec) -> RenderReport:
    path = Path(spec.inputs[0])
    table = read_table(path)
    _require(table, ("t", "lam", "fidelity_bare", "fidelity_assisted"), path)
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.plot(table["t"], table["fidelity_bare"], lw=1.2, label="bare")
    ax.plot(table["t"], table["fidelity_assisted"], lw=1.2, ls="--",
            label="assisted")
    ax.set_xlabel("t")
    ax.set_ylabel("ground-state fidelity")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    report = RenderReport(path=None, panels=[PanelReport(
        title="lz", n_curves=2, xscale=ax.get_xscale(),
        yscale=ax.get_yscale())])
    report.path = _save(fig, spec)
    return report


def render(spec: PlotSpec) -> RenderReport:
    """Render the figure described by ``spec``; returns a report with the
    output path and per-panel curve counts and axis scales.

    Raises PlotDataError (and writes nothing) when inputs are empty or do
    not match the figure kind's schema.
    """
    if spec.kind == "fig1":
        return _render_fig1(spec)
    if spec.kind == "fig2":
        return _render_fig2(spec)
    return _render_lz(spec)
