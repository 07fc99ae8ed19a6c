"""Thin-part volume of the Bolza surface against the collar bound."""
import argparse

import numpy as np

from selberg_lab import bsdiag as bs
from selberg_lab import fuchsian as fu


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--Lmin", type=float, default=1.45)
    ap.add_argument("--Lmax", type=float, default=2.0)
    ap.add_argument("--n", type=int, default=12)
    args = ap.parse_args()
    G = fu.bolza_group()
    print(f"systole {G.systole:.6f}, InjRad {G.systole / 2:.6f}, volume {G.volume:.6f}")
    print(f"{'L':>6} {'vol(thin)':>10} {'sigma':>8} {'bound':>10}")
    for L in np.linspace(args.Lmin, args.Lmax, args.n):
        est = bs.thin_part_volume(G, L, args.samples, args.seed)
        bound = bs.bs_volume_bound(G, L)["bound"]
        tag = " certified" if est.certified_zero else ""
        print(f"{L:6.3f} {est.volume:10.5f} {est.sigma:8.5f} {bound:10.3f}{tag}")


if __name__ == "__main__":
    main()
