"""Plot the columns of a ``diagnostics.csv`` written by ``axbl simulate``.

Usage: python demos/plot_diagnostics.py RUN_DIR [--log] [--out FILE.png]

Needs matplotlib, which is not a dependency of the package.
"""

import argparse
import csv
from pathlib import Path

import numpy as np


def read_series(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return header, body


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--log", action="store_true", help="log-log axes (decay exponents)")
    ap.add_argument("--out", type=Path, help="image path (default RUN_DIR/diagnostics.png)")
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = read_series(args.run_dir / "diagnostics.csv")
    t = data[:, 0]
    # columns that are identically zero (e.g. velocity in heat mode) are skipped
    live = [i for i in range(1, len(header)) if np.any(data[:, i] != 0)]
    cols = [header[i] for i in live]
    fig, axes = plt.subplots(len(cols), 1, figsize=(6, 2.2 * len(cols)), sharex=True, squeeze=False)
    for ax, name, y in zip(axes[:, 0], cols, data[:, live].T):
        keep = (t > 0) & (y > 0) if args.log else np.isfinite(y)
        ax.plot(t[keep], y[keep], ".-")
        if args.log and keep.any():
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_ylabel(name)
    axes[-1, 0].set_xlabel(header[0])
    fig.tight_layout()
    out = args.out or args.run_dir / "diagnostics.png"
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
