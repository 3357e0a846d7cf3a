"""Write CSV and SVG for all four figures into one directory.

    python3 scripts/reproduce_figures.py [OUTDIR] [--route both]
"""

import argparse
import sys
import time
from pathlib import Path

from zenospin.cli import main as cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="figures")
    ap.add_argument("--route", default="quadrature", choices=["quadrature", "ensemble", "both"])
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for fig in (1, 2, 3, 4):
        start = time.perf_counter()
        rc = cli([
            "figure", str(fig), "--route", args.route,
            "--out", str(out / f"figure{fig}.csv"), "--svg", str(out / f"figure{fig}.svg"),
        ])
        print(f"figure {fig}: exit {rc}, {time.perf_counter() - start:.1f} s")
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
