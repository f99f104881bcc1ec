#!/usr/bin/env python3
"""Run the four bundled budget sweeps and write their CSVs.

Each sweep varies the area budget under a different fixed resource limit;
plotting winner_amat and the frac_l* columns against budget reproduces the
regime-change structure described in the README.
"""
import argparse
import time
from pathlib import Path

from cachehier.cli import run_sweep
from cachehier.config import load_config

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ["reference", "sweep_power", "sweep_offchip_bw", "sweep_noc"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in SCENARIOS:
        cfg = load_config(ROOT / "configs" / f"{name}.toml")
        t0 = time.time()
        text = run_sweep(cfg, seed=args.seed, jobs=args.jobs)
        path = out_dir / (cfg.output_csv or f"{name}.csv")
        path.write_text(text, encoding="utf-8")
        rows = [r for r in text.splitlines() if r and not r.startswith("#")][1:]
        winners = "".join(r.split(",")[1] for r in rows)
        print(f"{name}: {len(rows)} steps in {time.time() - t0:.1f}s -> {path}")
        print(f"  winner depths: {winners}")


if __name__ == "__main__":
    main()
