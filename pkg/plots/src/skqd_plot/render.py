"""Render skqd benchmark CSVs into static figures.

Three figure kinds, matching the CSV schemas written by `skqd run`:

- error-vs-n: absolute energy error against chain size; noisy-Krylov
  baselines as dashed medians, sampled-subspace results as marker series,
  one per shot budget.
- error-vs-D: relative energy error against subspace dimension, one series
  per interaction strength.
- correlations: staggered spin and density correlation functions against
  bath distance, with the exact-diagonalization reference overlaid.

Rendering never mutates its inputs, and with timestamps disabled (the
default) repeated renders of the same CSV are byte-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("error-vs-n", "error-vs-D", "correlations")

REQUIRED_COLUMNS = {
    "error-vs-n": ("n", "method", "M", "abs_error"),
    "error-vs-D": ("U", "method", "D", "rel_error"),
    "correlations": ("U", "j", "spin", "density", "spin_ref", "density_ref"),
}


class SchemaError(ValueError):
    """CSV header does not carry the columns a figure kind needs."""


class EmptyDataError(ValueError):
    """CSV has no data rows."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSV, figure kind, output image."""

    source: str
    kind: str
    out: str
    log_y: bool = True
    timestamps: bool = False
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")


def read_rows(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing columns {missing}; this figure kind needs "
                f"{list(required)}")
        rows = list(reader)
    if not rows:
        raise EmptyDataError(f"{path}: no data rows")
    return rows


def _floats(rows, col):
    return [float(r[col]) for r in rows]


def _render_error_vs_n(rows, ax):
    methods = sorted({r["method"] for r in rows})
    noisy = [m for m in methods if m.startswith("kqd-noisy")]
    for method in noisy:
        sub = [r for r in rows if r["method"] == method]
        sizes = sorted({int(r["n"]) for r in sub})
        medians = []
        for n in sizes:
            errs = sorted(float(r["abs_error"]) for r in sub if int(r["n"]) == n)
            medians.append(errs[len(errs) // 2] if len(errs) % 2 else
                           0.5 * (errs[len(errs) // 2 - 1] + errs[len(errs) // 2]))
        ax.plot(sizes, medians, "--", label=f"{method} (median)")
    skqd = [r for r in rows if r["method"] == "skqd"]
    budgets = sorted({int(r["M"]) for r in skqd if r["M"] != ""})
    markers = "osd^v*"
    for i, m in enumerate(budgets):
        sub = [r for r in skqd if int(r["M"]) == m]
        sizes = sorted({int(r["n"]) for r in sub})
        best = [min(float(r["abs_error"]) for r in sub if int(r["n"]) == n)
                for n in sizes]
        ax.plot(sizes, best, markers[i % len(markers)], linestyle="none",
                label=f"skqd, M={m}")
    ax.set_xlabel("chain size n")
    ax.set_ylabel("energy error")
    ax.legend(fontsize=8)


def _render_error_vs_d(rows, ax):
    sub = [r for r in rows if r["method"] == "skqd"]
    if "basis" in rows[0]:
        natural = [r for r in sub if r["basis"] == "natural"]
        sub = natural or sub
    u_values = sorted({float(r["U"]) for r in sub})
    for u in u_values:
        per_u = [r for r in sub if float(r["U"]) == u]
        dims = sorted({int(r["D"]) for r in per_u})
        best = [min(float(r["rel_error"]) for r in per_u if int(r["D"]) == d)
                for d in dims]
        ax.plot(dims, best, "o-", label=f"U={u:g}")
    ax.set_xlabel("subspace dimension D")
    ax.set_ylabel("relative energy error")
    ax.set_xscale("log")
    ax.legend(fontsize=8)


def _render_correlations(rows, axes):
    ax_spin, ax_dens = axes
    u_values = sorted({float(r["U"]) for r in rows})
    for u in u_values:
        per_u = sorted((r for r in rows if float(r["U"]) == u),
                       key=lambda r: int(r["j"]))
        js = [int(r["j"]) for r in per_u]
        ax_spin.plot(js, _floats(per_u, "spin_ref"), "-", color="0.6",
                     label=f"reference, U={u:g}")
        ax_spin.plot(js, _floats(per_u, "spin"), "o", linestyle="none",
                     label=f"sampled, U={u:g}")
        ax_dens.plot(js, _floats(per_u, "density_ref"), "-", color="0.6",
                     label=f"reference, U={u:g}")
        ax_dens.plot(js, _floats(per_u, "density"), "o", linestyle="none",
                     label=f"sampled, U={u:g}")
    ax_spin.set_ylabel("staggered spin correlation")
    ax_dens.set_ylabel("staggered density correlation")
    ax_dens.set_xlabel("bath distance j")
    ax_spin.legend(fontsize=7)


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the written path.

    Raises SchemaError when required columns are absent and EmptyDataError
    when the CSV has a header but no rows (no file is written then).
    """
    rows = read_rows(spec.source, REQUIRED_COLUMNS[spec.kind])
    if spec.kind == "correlations":
        fig, axes = plt.subplots(2, 1, figsize=(6.0, 6.4), sharex=True)
        _render_correlations(rows, axes)
        log_axes = ()
    else:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        if spec.kind == "error-vs-n":
            _render_error_vs_n(rows, ax)
        else:
            _render_error_vs_d(rows, ax)
        log_axes = (ax,) if spec.log_y else ()
    for ax in log_axes:
        ax.set_yscale("log")
    fig.tight_layout()
    out = Path(spec.out)
    metadata = None
    rc = {}
    suffix = out.suffix.lower()
    if not spec.timestamps:
        if suffix == ".png":
            metadata = {"Software": None}
        elif suffix == ".svg":
            # drop the date and pin the element-id salt for byte-stable output
            metadata = {"Date": None}
            rc["svg.hashsalt"] = "skqd-plot"
    with matplotlib.rc_context(rc):
        fig.savefig(out, dpi=spec.dpi, metadata=metadata)
    plt.close(fig)
    return out
