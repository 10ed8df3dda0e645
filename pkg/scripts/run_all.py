#!/usr/bin/env python3
"""Run the full benchmark battery into results/.

Equivalent to calling `skqd run` on every config in scripts/configs plus the
full bound-verification grid. Takes a few minutes on a laptop; pass --quick
to shrink the sweeps for a smoke run.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from skqd.cli import main as skqd_main

HERE = Path(__file__).parent
CONFIGS = ["bench_tfim.json", "kqd_convergence.json", "siam_l7.json",
           "sparsity_scan.json"]

QUICK_OVERRIDES = {
    "bench_tfim.json": {"n": [6, 8], "n_seeds": 10},
    "siam_l7.json": {"U": [1.0, 10.0], "m_list": [100, 1000],
                     "compare_m": 1000, "d_caps": [256, 0]},
    "sparsity_scan.json": {"n": [8, 10]},
}


def run(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="results")
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for name in CONFIGS:
        cfg = json.loads((HERE / "configs" / name).read_text())
        if args.quick and name in QUICK_OVERRIDES:
            cfg.update(QUICK_OVERRIDES[name])
        path = out / f"_{name}"
        path.write_text(json.dumps(cfg, indent=2))
        print(f"== {cfg['kind']} ({name})")
        t0 = time.time()
        rc = skqd_main(["run", str(path), "--out", str(out),
                        "--threads", str(args.threads)])
        print(f"   done in {time.time() - t0:.1f}s (exit {rc})")
        if rc != 0:
            return rc

    print("== verify-bounds")
    grid = "small" if args.quick else "full"
    rc = skqd_main(["verify-bounds", "--grid", grid, "--out", str(out)])
    print(f"   exit {rc}")
    return rc


if __name__ == "__main__":
    sys.exit(run())
