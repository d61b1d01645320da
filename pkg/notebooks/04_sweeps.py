"""
CRLB versus noise and LSR
=========================

Noise-variance and LSR sweeps for the no-IRS, single-IRS and three-IRS
scenes. The same runs are available from the command line:

    irs-crlb sweep --axis sigma2 --grid 1e-3:1e1:log:25 --out sigma.csv
    irs-crlb sweep --axis gamma --grid 1e-2:1e2:log:25 --out gamma.csv

The LSR sweep re-optimizes the phases at every point and takes a few minutes.
"""

import numpy as np

from irs_crlb import emit_csv, preset, run_gamma_sweep, run_sigma_sweep

cfg = preset("paper-3irs")

sigma_grid = np.logspace(-3, 1, 25)
sigma = run_sigma_sweep(cfg, sigma_grid)
emit_csv(sigma, "sigma_sweep.csv")
for res in sigma:
    slope = np.polyfit(np.log10(sigma_grid), np.log10(res.trace_crlb), 1)[0]
    print(f"{res.scenario:7s} trace at sigma2=0.1: {res.trace_crlb[12]:.3e}  log-log slope {slope:.6f}")

gamma_grid = np.logspace(-2, 2, 9)
gamma = run_gamma_sweep(cfg, gamma_grid, sigma2=0.1)
emit_csv(gamma, "gamma_sweep.csv")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for res in sigma:
        axes[0].loglog(sigma_grid, res.trace_crlb, label=res.scenario)
    for res in gamma:
        axes[1].loglog(gamma_grid, res.trace_crlb, marker="o", label=res.scenario)
    axes[0].set_xlabel("noise variance")
    axes[1].set_xlabel("LSR")
    for ax in axes:
        ax.set_ylabel("trace CRLB")
        ax.legend()
    fig.tight_layout()
    fig.savefig("sweeps.png", dpi=120)
    print("saved sweeps.png")
