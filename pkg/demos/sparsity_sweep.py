"""Small sparsity sweep producing the full artifact set.

Runs the harness over a few sparsity levels and seeds with a fast step size
and writes trace CSVs, summary tables, a JSON report, and angle plots into
./sweep_out.  Equivalent CLI:

    rvscgd --eta 0.25 --s-list 2,4,6 --seed-list 0,1,2 \
        --out sweep_out --emit-plot
"""

from pathlib import Path

from rvscgd import ExperimentConfig, HyperParams, PenaltySpec, run_experiment


def main():
    hp = HyperParams(k=20, d=50, eta=0.25, beta=1e-3, lam=1e-4,
                     penalty=PenaltySpec("l0"), prox_param="raw")
    cfg = ExperimentConfig(hyper=hp, s_values=(2, 4, 6), seeds=(0, 1, 2),
                           out_dir=Path("sweep_out"), emit_plot=True)
    results = run_experiment(cfg)

    print("s  seed  iters  theta(u, w*)  ||u||_0")
    for r in results:
        print(f"{r.s}  {r.seed:4d}  {r.iterations:5d}  {r.theta_u_wstar:12.3e}  {r.u_l0:7d}")
    print("\nartifacts written to", cfg.out_dir)
    print((Path(cfg.out_dir) / "summary.csv").read_text())


if __name__ == "__main__":
    main()
