"""Fit the envelope sup_t |d/dt T_m h_k(t)| <= C1 k^{(N+2)/2} + C2 over k <= k_max.

Reports the fitted constants, the free log-log exponent, both Lipschitz
constants for W and a spot check of the first-order derivative error.
"""
import argparse

import numpy as np

from wickito import ProcessModel, parse_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="quartic")
    ap.add_argument("--k-max", type=int, default=50)
    ap.add_argument("--t", type=float, default=1.0)
    args = ap.parse_args()
    model = ProcessModel(parse_preset(args.preset), args.k_max)
    fit = model.lipschitz_fit(args.k_max, np.linspace(-3, 3, 241))
    print(f"preset={args.preset} N={fit.N} C1={fit.C1:.6g} C2={fit.C2:.6g} free exponent={fit.exponent:.3f}")
    print(f"C_N (weights (2k)^-(N+3))      = {fit.C_N:.6g}")
    print(f"C_N l2 (weights (2k)^-(N+3)/2) = {fit.C_N_l2(model.modes):.6g}")
    for h in (0.08, 0.04, 0.02, 0.01, 0.005):
        err = model.derivative_check(args.t, h)
        print(f"h={h:<6} error={err:.4e}  C_N h/2={fit.C_N * h / 2:.4e}  C_N_l2 h/2={fit.C_N_l2(model.modes) * h / 2:.4e}")


if __name__ == "__main__":
    main()
