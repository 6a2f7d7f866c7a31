"""Compare the quartic-density variance from quadrature with two closed forms.

Prints, for a few t, the quadrature value of r(t) = Var X(t), the directly
derived closed form, the closed form as commonly printed, and the
Levy-Khintchine half-variance r/2. Exit status is 0 either way: the
mismatch of the printed form is reported, not asserted.
"""
import argparse

from wickito.spectral import preset, quartic_r_printed, quartic_variance, r_levy, r_of_t, r_prime


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--times", default="0.25,0.5,1,2,4")
    args = ap.parse_args()
    m = preset("quartic")
    print(f"{'t':>6} {'quadrature':>14} {'derived':>14} {'printed':>14} {'half (LK)':>14} {'fd r-prime err':>15}")
    for t in map(float, args.times.split(",")):
        h = 1e-4
        fd = (r_of_t(t + h, m) - r_of_t(t - h, m)) / (2 * h)
        print(f"{t:6.2f} {r_of_t(t, m):14.10f} {quartic_variance(t):14.10f} {quartic_r_printed(t):14.10f} "
              f"{r_levy(t, m):14.10f} {abs(fd - r_prime(t, m)):15.3e}")


if __name__ == "__main__":
    main()
