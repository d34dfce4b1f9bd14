"""Watch the angle to the teacher shrink along one RVSCGD run.

Uses a step size large enough to converge in a few hundred iterations, then
prints the decreasing angle/objective trace and the limit-point diagnostics.
The slow-step sweep matching the summary tables lives in sparsity_sweep.py.
"""

import numpy as np

from rvscgd import HyperParams, PenaltySpec, build_teacher, run


def main():
    wstar = build_teacher(d=50, s=4)
    hp = HyperParams(k=20, d=50, eta=0.25, beta=1e-3, lam=1e-4,
                     penalty=PenaltySpec("l0"), prox_param="raw", seed=0)
    res = run(hp, wstar)

    print("iter    theta       lagrangian  ||u||_0")
    for r in res.trace[:: max(1, len(res.trace) // 15)]:
        print(f"{r.t:5d}  {r.theta:.3e}  {r.lagrangian:.3e}  {r.u_sparsity:5d}")

    d = res.diagnostics
    print(f"\nstopped after {res.iterations} iterations ({res.stop_reason})")
    print(f"theta(w, w*)          = {d.theta_bar:.3e}")
    print(f"support of u          = {np.count_nonzero(res.final.u)} (teacher: 4)")
    print(f"collinearity residual = {d.collinearity_residual:.3e}")
    print(f"C estimate            = {d.C_estimate:.12f}")
    print(f"sine residual         = {d.sine_residual:.3e}")


if __name__ == "__main__":
    main()
