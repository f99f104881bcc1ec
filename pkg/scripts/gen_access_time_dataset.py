#!/usr/bin/env python3
"""Regenerate the bundled synthetic SRAM access-time dataset.

Sizes span 4 KB to 16 MB in powers of two. Latencies follow the power law
t = tau * (size/alpha)**beta with a deterministic +/-2% multiplicative
perturbation standing in for circuit-simulator irregularity, so the
bundled calibration example has something non-trivial to fit.
"""
import argparse
from pathlib import Path

import numpy as np

TAU = 0.62       # ns at the 4 KB anchor
ALPHA = 4096.0   # bytes
BETA = 0.45
NOISE = 0.02
SEED = 20140114


def generate() -> str:
    rng = np.random.default_rng(SEED)
    sizes = ALPHA * 2.0 ** np.arange(0, 13)  # 4 KB .. 16 MB
    clean = TAU * (sizes / ALPHA) ** BETA
    noisy = clean * (1.0 + NOISE * rng.uniform(-1.0, 1.0, size=len(sizes)))
    lines = ["size_bytes,latency_ns"]
    lines += [f"{int(s)},{float(lat)!r}" for s, lat in zip(sizes, noisy)]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent
                                         / "data" / "cacti_like_access_times.csv"))
    args = ap.parse_args()
    Path(args.out).write_text(generate(), encoding="utf-8")
    print(f"wrote {args.out}")
