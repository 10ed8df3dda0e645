"""Command-line runner.

    skqd run <config.json> [--out DIR] [--threads N] [--seed-override S]
    skqd verify-bounds [--grid small|full] [--out DIR]

Each run writes <kind>.csv plus a <kind>.manifest.json carrying the fully
resolved configuration, so any result file can be regenerated from its
manifest alone. Floats are printed with 17 significant digits; rerunning an
identical config reproduces the CSV byte for byte apart from the timing
column.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ConfigurationError, SkqdError
from .experiments import (
    COLUMNS,
    CORRELATION_COLUMNS,
    VerifyBoundsConfig,
    load_config,
    run_bench_tfim,
    run_kqd,
    run_siam,
    run_skqd,
    run_sparsity,
    run_verify_bounds,
)

RUNNERS = {
    "bench-tfim": run_bench_tfim,
    "kqd": run_kqd,
    "skqd": run_skqd,
    "siam": run_siam,
    "verify-bounds": run_verify_bounds,
    "sparsity-e": run_sparsity,
}


def _format_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col, "")) for col in columns])


def write_manifest(path: Path, cfg, wall_clock: float, outputs, derived=None) -> None:
    payload = {
        "kind": cfg.KIND,
        "config": dataclasses.asdict(cfg),
        "version": __version__,
        "wall_clock_s": wall_clock,
        "outputs": [str(o) for o in outputs],
    }
    if derived:
        payload["derived"] = derived
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=list)
        fh.write("\n")


def _derived_info(rows) -> dict:
    """Resolved per-row quantities worth echoing, e.g. auto-chosen time steps."""
    dts = sorted({row["dt"] for row in rows if row.get("dt", "") != ""})
    return {"dt_values": dts} if dts else {}


def resolve_threads(explicit) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("SKQD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError(f"SKQD_THREADS={env!r} is not an integer") from exc
    return 1


def execute(cfg, out_dir: Path, threads: int) -> list:
    """Run one experiment and write its outputs; returns the written paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outputs = []
    derived = None
    if cfg.KIND == "verify-bounds":
        report = run_verify_bounds(cfg, threads)
        path = out_dir / "verify-bounds.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(path)
        if report["violations"]:
            raise SkqdError(f"{report['violations']} bound violations recorded "
                            f"in {path}")
    elif cfg.KIND == "siam":
        rows, corr = run_siam(cfg, threads)
        csv_path = out_dir / "siam.csv"
        write_csv(csv_path, COLUMNS["siam"], rows)
        outputs.append(csv_path)
        if cfg.emit_correlations:
            corr_path = out_dir / "siam.correlations.csv"
            write_csv(corr_path, CORRELATION_COLUMNS, corr)
            outputs.append(corr_path)
        derived = _derived_info(rows)
    else:
        rows = RUNNERS[cfg.KIND](cfg, threads)
        csv_path = out_dir / f"{cfg.KIND}.csv"
        write_csv(csv_path, COLUMNS[cfg.KIND], rows)
        outputs.append(csv_path)
        derived = _derived_info(rows)
    manifest = out_dir / f"{cfg.KIND}.manifest.json"
    write_manifest(manifest, cfg, time.perf_counter() - started, outputs, derived)
    outputs.append(manifest)
    return outputs


def emit_correlations(problem, out_path, h_position=None) -> Path:
    """Correlation-function table for a solved impurity subspace problem.

    Needs the accumulated rotation back to the position basis on the
    problem. When the position-basis Hamiltonian is supplied, reference
    columns come from an exact sector diagonalization.
    """
    import scipy.sparse.linalg as sla

    from .fermion import (
        RankOneInteraction,
        sector_matrix,
        staggered_density_correlation,
        staggered_spin_correlation,
    )
    from .states import StateVector

    if problem.sector is None or problem.rotation is None:
        raise ConfigurationError(
            "correlations need a sector and rotation chain on the problem")
    sec = problem.sector
    length = sec.n_modes - 1
    state = problem.state()
    gs_pos = None
    u_value = ""
    if h_position is not None:
        vals, vecs = sla.eigsh(sector_matrix(h_position, sec), k=1, which="SA")
        gs_pos = StateVector(vecs[:, 0].astype(complex), sec)
        if isinstance(h_position.interaction, RankOneInteraction):
            u_value = h_position.interaction.strength
    rows = []
    for j in range(length):
        rows.append({
            "U": u_value,
            "j": j,
            "spin": staggered_spin_correlation(sec, state, j, problem.rotation),
            "density": staggered_density_correlation(sec, state, j, problem.rotation),
            "spin_ref": (staggered_spin_correlation(sec, gs_pos, j)
                         if gs_pos is not None else ""),
            "density_ref": (staggered_density_correlation(sec, gs_pos, j)
                            if gs_pos is not None else ""),
        })
    out_path = Path(out_path)
    write_csv(out_path, CORRELATION_COLUMNS, rows)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skqd", description="Sampled-Krylov diagonalization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--out", default=".", help="output directory")
    run_p.add_argument("--threads", type=int, default=None)
    run_p.add_argument("--seed-override", type=int, default=None)

    vb_p = sub.add_parser("verify-bounds", help="run the bound verification suite")
    vb_p.add_argument("--grid", choices=("small", "full"), default="small")
    vb_p.add_argument("--out", default=".", help="output directory")
    vb_p.add_argument("--threads", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        threads = resolve_threads(args.threads)
        if args.command == "verify-bounds":
            cfg = VerifyBoundsConfig(grid=args.grid)
            execute(cfg, Path(args.out), threads)
            return 0
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        cfg = load_config(data)
        if args.seed_override is not None:
            if "base_seed" not in {f.name for f in dataclasses.fields(cfg)}:
                raise ConfigurationError(
                    f"experiment kind {cfg.KIND!r} takes no seed override")
            cfg = dataclasses.replace(cfg, base_seed=args.seed_override)
        out_dir = Path(cfg.output) if cfg.output else Path(args.out)
        execute(cfg, out_dir, threads)
        return 0
    except FileNotFoundError as exc:
        print(f"error (missing-file): {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error (config-parse): {exc}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"error (configuration): {exc}", file=sys.stderr)
        return 2
    except SkqdError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
