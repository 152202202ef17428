"""
Comando aggregate.

Genera (e verifica) le decomposizioni per aggregazione trilineare:
- two:   Disjoint MM di due problemi, rango mkn + mk + kn + nm
- three: tre problemi MM(n), rango n^3 + c(n)
- apa:   decomposizione APA di bordo mkn + mk + kn e costante C dell'errore numerico

    python main.py aggregate --mode two --m 2 --k 2 --n 2 --out two.txt
"""

import argparse
import random

from app.cli import EXIT_OK
from app.config import settings
from app.models.schemas import AggregateMode
from app.services import matrix_core as mc
from app.services import serialization
from app.services.aggregation import aggregate_three, aggregate_two, correction_count
from app.services.apa import APAAlgorithm, apa_aggregate, apa_numeric_error


NUMERIC_LAMBDAS = [2.0 ** -t for t in (5, 10, 15, 20)]


def register(subparsers) -> None:
    parser = subparsers.add_parser("aggregate", help="generate a verified aggregation decomposition")
    parser.add_argument("--mode", choices=[m.value for m in AggregateMode], required=True)
    parser.add_argument("--m", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--out", metavar="FILE", help="write the decomposition in text format")
    parser.set_defaults(handler=run)


def _numeric_constant(alg: APAAlgorithm) -> float:
    """Empirical C in error <= C * lambda on a seeded integer instance."""
    rng = random.Random(settings.SEED)
    operands = []
    for problem in alg.target.problems:
        m, k, n = problem.shape
        operands.append((mc.random_matrix(m, k, mc.INTEGERS, rng), mc.random_matrix(k, n, mc.INTEGERS, rng)))
    return apa_numeric_error(alg, operands, NUMERIC_LAMBDAS)[-1].constant


def run(args: argparse.Namespace) -> int:
    mode = AggregateMode(args.mode)
    n = args.n

    if mode == AggregateMode.THREE:
        for flag in ("m", "k"):
            value = getattr(args, flag)
            if value is not None and value != n:
                raise ValueError(f"--mode three multiplies square MM(n); got --{flag} {value} with --n {n}")
        obj = aggregate_three(n)
        print(f"rank {obj.rank} = {n ** 3} + c({n}), c({n}) = {correction_count(obj, n)}")
    else:
        m = args.m if args.m is not None else n
        k = args.k if args.k is not None else n
        if mode == AggregateMode.TWO:
            obj = aggregate_two(m, k, n)
            print(f"rank {obj.rank}")
        else:
            obj = apa_aggregate(m, k, n)
            print(f"border rank {obj.border_rank} (scale {obj.scale}, degree {obj.degree})")
            print(f"numeric error constant C = {_numeric_constant(obj):.6g} at lambda 2^-20")

    if args.out:
        serialization.save(obj, args.out)
        print(f"written {args.out}")
    return EXIT_OK
