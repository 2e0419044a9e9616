"""Rate robustness: influence-function estimator vs plug-in.

Nuisances are never fitted here.  The true functions are perturbed by
noise fields with designed L2 error of order n^-r, so the nuisance
convergence rate is controlled exactly.  The influence-function
estimator's error shrinks like the product of nuisance errors, the
plug-in's like the errors themselves, so the gap widens as r falls.
"""

from rrtransport.simulate import RateExperiment, rate_alpha_truth, run_rate_experiment

truth = rate_alpha_truth()
print(f"true counterfactual mean under treatment in the target: {truth:.4f}\n")

experiment = RateExperiment.grid(
    n_values=(1000,), r_values=(0.10, 0.20, 0.30, 0.40, 0.50), h=2.2
)
table = run_rate_experiment(experiment, reps=300, base_seed=5, workers=2)

print(f"{'r':>5} {'rmse(if)':>10} {'rmse(plugin)':>13}")
rows = table.rows()
for r in (0.10, 0.20, 0.30, 0.40, 0.50):
    cfg = f"h=2.2,r={r:g}"
    rmse = {
        row["estimator"]: row["sqrt_n_rmse"]
        for row in rows
        if row["config"] == cfg
    }
    print(f"{r:5.2f} {rmse['if']:10.3f} {rmse['plugin']:13.3f}")

print(
    "\nreading: at slow nuisance rates (small r) the influence-function"
    "\nestimator dominates; the plug-in only catches up once the nuisance"
    "\nerror is nearly parametric (r close to 0.5)."
)
