"""Where the quantile ensemble and quadrature disagree on the fixed-time grid.

The modulation integrand has narrow peaks near omega = (2k + 1) pi / tau.  In
the tails of the density a midpoint-quantile ensemble places too few spins
across them, and the relative error barely moves with K until K resolves the
peak.  This script prints the worst points and the error at three sizes of K.

    python3 scripts/route_agreement.py [--rtol 1e-4]
"""

import argparse

from zenospin.protocols import Protocol, expectation
from zenospin.spectral import normalize, quantile_sample

PANELS = [(k, wm) for k in ("gaussian", "lorentzian", "exponential") for wm in (0.0, 2.0)]
G = 1e-3


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rtol", type=float, default=1e-4)
    ap.add_argument("--t", type=float, default=10.0)
    args = ap.parse_args()
    worst = []
    for kind, wm in PANELS:
        d = normalize(kind, wm)
        ens = quantile_sample(d, 100_000)
        for n in range(4, 51, 2):
            for method in ("mod", "mix", "meas", "free"):
                p = Protocol(method, args.t / n, n)
                q = expectation(p, d, G)[0]
                e = expectation(p, ens, G)[0]
                rel = abs(e - q) / q
                if rel > args.rtol:
                    worst.append((rel, kind, wm, method, n, q, e))
    worst.sort(reverse=True)
    print(f"{len(worst)} value(s) beyond {args.rtol:g}")
    for rel, kind, wm, method, n, q, e in worst[:15]:
        print(f"  {kind:<11} omega_m={wm:<3g} {method:<4} N={n:<3d} quad={q:.10e} ens={e:.10e} rel={rel:.2e}")
    if worst:
        _, kind, wm, method, n, q, _ = worst[0]
        d = normalize(kind, wm)
        p = Protocol(method, args.t / n, n)
        print(f"K scaling at the worst point ({kind}, omega_m={wm:g}, {method}, N={n}):")
        for k in (10_000, 100_000, 1_000_000):
            e = expectation(p, quantile_sample(d, k), G)[0]
            print(f"  K={k:>9d} rel={abs(e - q) / q:.2e}")


if __name__ == "__main__":
    main()
