"""
Comando multiply.

Moltiplica due matrici casuali n x n con naive / strassen / winograd,
confronta il risultato con l'oracolo e (opzionalmente) aggiunge una riga
BenchRecord al CSV.

    python main.py multiply --alg strassen --n 64 --cutoff 1 --csv bench.csv
"""

import argparse

from loguru import logger

from app.cli import EXIT_FAILURE, EXIT_OK
from app.config import settings
from app.models.schemas import BENCH_CSV_HEADER, AlgorithmName, RingName
from app.services.benchmark import benchmark_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("multiply", help="multiply random matrices and count operations")
    parser.add_argument("--alg", choices=[a.value for a in AlgorithmName], default=AlgorithmName.STRASSEN.value)
    parser.add_argument("--n", type=int, required=True, help="matrix size")
    parser.add_argument("--cutoff", type=int, default=None,
                        help="naive below this block size (default: FASTMM_CUTOFF_COUNT, FASTMM_CUTOFF_FLOAT for f64)")
    parser.add_argument("--ring", choices=[r.value for r in RingName], default=RingName.INT.value)
    parser.add_argument("--seed", type=int, default=None, help="default: FASTMM_SEED")
    parser.add_argument("--csv", metavar="PATH", default=None, help="append a BenchRecord row")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    ring = RingName(args.ring)
    if args.n < 1:
        raise ValueError(f"--n must be positive, got {args.n}")
    if args.cutoff is not None and args.cutoff < 1:
        raise ValueError(f"--cutoff must be positive, got {args.cutoff}")
    cutoff = args.cutoff
    if cutoff is None:
        cutoff = settings.CUTOFF_FLOAT if ring == RingName.F64 else settings.CUTOFF_COUNT
    seed = settings.SEED if args.seed is None else args.seed

    record, check = benchmark_service.run(AlgorithmName(args.alg), args.n, cutoff, ring, seed)

    print(",".join(BENCH_CSV_HEADER))
    print(",".join(str(value) for value in record.csv_row()))
    if args.csv:
        benchmark_service.append_csv(record, args.csv)

    if not check.ok:
        i, j = check.position
        logger.error(f"{record.alg.value} n={record.n}: mismatch at ({i}, {j})")
        print(f"MISMATCH at ({i}, {j}): expected {check.expected}, got {check.actual}")
        return EXIT_FAILURE
    return EXIT_OK
