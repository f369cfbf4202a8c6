#!/usr/bin/env python3
"""Plot CSVs written by `coopucb simulate`.

    plot_results.py trajectory <out-dir>/trajectory.csv [-o regret.png]
    plot_results.py certainty  <out-dir>/summary.csv    [-o certainty.png]
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def trajectory(path, out):
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for agent, g in df.groupby("agent"):
        ax.plot(g["t"], g["mean_regret"], label=f"agent {agent}")
        ax.fill_between(g["t"], g["mean_regret"] - 2 * g["stderr"], g["mean_regret"] + 2 * g["stderr"], alpha=0.2)
    ax.set_xlabel("t")
    ax.set_ylabel("expected cumulative regret")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def certainty(path, out):
    df = pd.read_csv(path)
    df = df[df["varsigma"] != float("inf")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(df["varsigma"], df["final_regret"], s=8)
    ax.set_xscale("log")
    ax.set_xlabel("node certainty (1 / eps_c)")
    ax.set_ylabel("final cumulative regret")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("kind", choices=["trajectory", "certainty"])
    p.add_argument("csv")
    p.add_argument("-o", "--output", default=None)
    a = p.parse_args()
    {"trajectory": trajectory, "certainty": certainty}[a.kind](a.csv, a.output or f"{a.kind}.png")
