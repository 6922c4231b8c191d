"""Interlacing scan of consecutive C(m); the default gate is m <= 200, this
script allows the extended range.

    python3 scripts/interlacing_scan.py --m-max 2000
"""
import argparse
import time

from ncmap.sequence import check_interlacing


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m-max", type=int, default=1000)
    args = ap.parse_args()
    t0 = time.perf_counter()
    rep = check_interlacing(args.m_max)
    print(f"m <= {args.m_max}: {len(rep.violations)} violations, min margin {rep.min_margin:.3e}, "
          f"{time.perf_counter() - t0:.1f}s (numerical evidence, not a proof)")
    for v in rep.violations[:20]:
        print("  violation m=%d k=%d upper=%.6g value=%.6g lower=%.6g" % v)


if __name__ == "__main__":
    main()
