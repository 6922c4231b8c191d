"""Run the five simulation presets and write their outputs under out/.

    python3 scripts/run_simulations.py [--out out] [--presets 1 2 3 4 5]
"""
import argparse
import subprocess
import sys
from pathlib import Path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--presets", type=int, nargs="*", default=[1, 2, 3, 4, 5])
    args = ap.parse_args()
    variants = {1: [["--sigma", "1.5,0.2,1.5,0.2"]], 2: [["--sigma", "0.2,0.2"]], 5: [["--sigma", "2,2"]]}
    status = 0
    for k in args.presets:
        for extra in [[]] + variants.get(k, []):
            tag = f"sim{k}" + ("" if not extra else "_" + extra[1].replace(",", "-"))
            cmd = [sys.executable, "-m", "ncmap.cli", "simulate", "--preset", str(k),
                   "--out", str(args.out / tag), *extra]
            print(f"== {tag}", flush=True)
            status |= subprocess.call(cmd)
    sys.exit(status)


if __name__ == "__main__":
    main()
