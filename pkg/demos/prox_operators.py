"""Narrative tour of the three thresholding operators.

Prints the soft (l1), hard (l0), and transformed-l1 prox maps side by side on
a grid, shows where each one's dead zone ends, and cross-checks a few points
against the brute-force grid minimizer.
"""

import numpy as np

from rvscgd import PenaltySpec, brute_force_prox, prox_scalar, tl1_threshold

TAU = 0.1
SPECS = [PenaltySpec("l1"), PenaltySpec("l0"), PenaltySpec("tl1", a=1.0)]


def main():
    print(f"prox maps at tau = {TAU}\n")
    print(f"{'x':>8} " + " ".join(f"{s.kind:>10}" for s in SPECS))
    for x in np.linspace(0.0, 1.0, 11):
        row = " ".join(f"{prox_scalar(s, TAU, x):10.4f}" for s in SPECS)
        print(f"{x:8.2f} {row}")

    print("\ndead-zone edges (largest |x| mapped to zero):")
    print(f"  l1 : {TAU}")
    print(f"  l0 : {np.sqrt(2 * TAU):.6f}")
    print(f"  tl1: {tl1_threshold(1.0, TAU):.6f}  (a = 1)")

    print("\nbrute-force cross-check at x = 0.6:")
    for s in SPECS:
        closed = prox_scalar(s, TAU, 0.6)
        brute = brute_force_prox(s, TAU, 0.6, -1.0, 1.0, 1e-4)
        print(f"  {s.kind:>3}: closed form {closed:.6f}, grid argmin {brute:.6f}")


if __name__ == "__main__":
    main()
