"""Local decay exponent d log|K(t, rho)| / d log t, showing when the t^(-3/2) rate sets in.

Usage: python3 scripts/kernel_local_slope.py [--rho 1.0]
"""

import argparse

import numpy as np

from hypsmap.kernel import contour_kernel, free_kernel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--t-min", type=float, default=0.5)
    ap.add_argument("--t-max", type=float, default=1000.0)
    ap.add_argument("--points", type=int, default=23)
    args = ap.parse_args()
    ts = np.geomspace(args.t_min, args.t_max, args.points)
    mags = np.array([abs(free_kernel(t, args.rho).value) for t in ts])
    check = np.array([abs(contour_kernel(t, args.rho)) for t in ts])
    slopes = np.gradient(np.log(mags), np.log(ts))
    print("t,abs_K,abs_K_contour,t32_abs_K,local_slope")
    for t, m, c, s in zip(ts, mags, check, slopes):
        print(f"{t:.6g},{m:.10e},{c:.10e},{m * t**1.5:.8f},{s:.5f}")


if __name__ == "__main__":
    main()
