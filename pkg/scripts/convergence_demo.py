"""Wick-Riemann sums of int X <> dX on [0,1] against the reference integral.

Prints the error in the dual norm for doubling partitions, the fitted
log-log slope, and the a priori modulus-of-continuity bound.
"""
import argparse

from wickito import ProcessModel, parse_preset
from wickito.integrator import IntegrandFn, convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="white")
    ap.add_argument("--modes", type=int, default=100)
    ap.add_argument("--n", default="8,16,32,64,128,256,512,1024")
    args = ap.parse_args()
    model = ProcessModel(parse_preset(args.preset), args.modes)
    ns = [int(x) for x in args.n.split(",")]
    rep = convergence_study(IntegrandFn.process(model), model, 0.0, 1.0, ns, p=model.N + 5)
    print(f"preset={args.preset} K={args.modes} p={rep.p}")
    print(f"{'n':>6} {'error':>12} {'bound':>12}")
    for n, e, b in zip(rep.partitions, rep.errors, rep.bounds):
        print(f"{n:6d} {e:12.4e} {b:12.4e}")
    print(f"slope {rep.slope:.4f}")


if __name__ == "__main__":
    main()
