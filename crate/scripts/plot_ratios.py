"""Plot mean ALG/OPT ratio against n from a `jrp experiment --summary` CSV.

    python scripts/plot_ratios.py summary.csv ratios.png
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

summary = pd.read_csv(sys.argv[1])
fig, ax = plt.subplots(figsize=(6, 4))
for (kind, param, k), cell in summary.groupby(["kind", "p_or_beta", "K"], dropna=False):
    cell = cell.sort_values("n")
    label = f"{kind} {param} K={k}" if pd.notna(param) else f"{kind} K={k}"
    ax.plot(cell["n"], cell["mean_ratio"], marker="o", label=label)
ax.axhline(2**0.5, color="grey", linestyle="--", linewidth=1)
ax.set_xscale("log")
ax.set_xlabel("n")
ax.set_ylabel("mean ALG/OPT")
ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else "ratios.png", dpi=150)
