"""
Grafico del CSV di benchmark prodotto da `fastmm multiply --csv`.

Traccia mults / n^3 in funzione di n (scala log2) per ogni algoritmo.
matplotlib e' opzionale: senza, lo script stampa la tabella aggregata.

Uso:
    python scripts/plot_bench.py bench.csv --out bench.png
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

from loguru import logger

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.models.schemas import BENCH_CSV_HEADER
from app.utils.logging import setup_logging

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover
    plt = None


def read_series(path: Path) -> dict:
    """{alg: [(n, ratio), ...]} ordinato per n; per righe ripetute vale l'ultima."""
    series = defaultdict(dict)
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != list(BENCH_CSV_HEADER):
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            series[row["alg"]][int(row["n"])] = float(row["ratio"])
    return {alg: sorted(points.items()) for alg, points in series.items()}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Plot mults/n^3 from a fastmm benchmark CSV")
    parser.add_argument("csv", type=Path)
    parser.add_argument("--out", type=Path, default=Path("bench.png"))
    args = parser.parse_args(argv)

    setup_logging()
    series = read_series(args.csv)

    if plt is None:
        logger.warning("matplotlib non installato, stampo la tabella")
        for alg, points in series.items():
            for n, ratio in points:
                print(f"{alg},{n},{ratio:.9f}")
        return 0

    fig, ax = plt.subplots(figsize=(8, 5))
    for alg, points in series.items():
        ax.plot([n for n, _ in points], [r for _, r in points], marker="o", label=alg)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n")
    ax.set_ylabel("mults / n^3")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(args.out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Grafico salvato in {args.out}")
    print(f"written {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
