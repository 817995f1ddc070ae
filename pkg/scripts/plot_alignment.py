"""Plot alignment trajectories written by run_alignment.py (needs matplotlib)."""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--indir", default="results")
    ap.add_argument("--out", default="results/alignment.png")
    args = ap.parse_args(argv)
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in sorted(Path(args.indir).glob("alignment_seed*.csv")):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        ax.plot([int(r["iteration"]) for r in rows], [float(r["mle"]) for r in rows],
                marker="o", label=path.stem.removeprefix("alignment_"))
    ax.set_xlabel("iteration")
    ax.set_ylabel("MLE ideal point")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
