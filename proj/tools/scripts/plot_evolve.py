#!/usr/bin/env python3
"""Plot the histograms written by `hold evolve`.

usage: plot_evolve.py OUT_DIR [--save evolve.png]
"""
import argparse
import csv
from pathlib import Path

import matplotlib.pyplot as plt


def read_table(path):
    with open(path) as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    header, body = rows[0], [[float(v) for v in r] for r in rows[1:]]
    return header, body


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--save", type=Path)
    args = ap.parse_args()

    _, index = read_table(args.out_dir / "evolve_index.csv")
    blocks = ["q", "p", "s"]
    fig, axes = plt.subplots(3, len(index), figsize=(2.2 * len(index), 5.5), sharex=True, squeeze=False)
    for col, (k, frac, t) in enumerate(index):
        for row, b in enumerate(blocks):
            header, body = read_table(args.out_dir / f"evolve_{int(k)}_{b}.csv")
            x = [r[0] for r in body]
            ax = axes[row][col]
            for c in range(1, len(header)):
                ax.plot(x, [r[c] for r in body], lw=0.8)
            if row == 0:
                ax.set_title(f"{frac:.2f}  t={t:.3g}", fontsize=8)
            if col == 0:
                ax.set_ylabel(b)
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
