"""
Comando verify.

Controlla esattamente un algoritmo (file di testo o builtin del catalogo)
contro il suo tensore target. Stampa PASS oppure la tripla di indici violata.
Per un file APA esegue anche il lift esatto su un'istanza razionale casuale,
con i nodi di FASTMM_APA_INTERPOLATION_NODES (default 1..d+1).

    python main.py verify --builtin strassen
    python main.py verify --file strassen_flipped.txt
"""

import argparse
import random

from loguru import logger

from app.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE
from app.config import settings
from app.services import matrix_core as mc
from app.services import serialization
from app.services.apa import APAAlgorithm, apa_lift_exact, interpolation_nodes, verify_border
from app.services.bilinear_engine import BilinearAlgorithm, transpose_duals, verified, verify_target
from app.services.catalog import catalog


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="verify an algorithm against its target tensor")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--file", metavar="ALG_FILE", help="bilinear, trilinear or apa text file")
    source.add_argument("--builtin", metavar="NAME", help=f"one of: {', '.join(catalog.builtin_names())}")
    parser.add_argument("--duals", action="store_true", help="also verify the six transpose duals (bilinear only)")
    parser.set_defaults(handler=run)


def _lift_check(alg: APAAlgorithm) -> bool:
    """Exact lift on a seeded rational instance against mm_naive."""
    rng = random.Random(settings.SEED)
    operands = []
    for problem in alg.target.problems:
        m, k, n = problem.shape
        operands.append((mc.random_matrix(m, k, mc.RATIONALS, rng), mc.random_matrix(k, n, mc.RATIONALS, rng)))

    nodes = interpolation_nodes(alg.degree)
    products = apa_lift_exact(alg, operands, nodes=nodes)
    ok = all(P == mc.mm_naive(A, B) for P, (A, B) in zip(products, operands))
    print(f"  lift at nodes {' '.join(str(x) for x in nodes)}: {'PASS' if ok else 'FAIL'}")
    return ok


def run(args: argparse.Namespace) -> int:
    if args.builtin:
        try:
            obj = catalog.get(args.builtin)
        except KeyError as e:
            print(f"error: {e.args[0]}")
            return EXIT_USAGE
    else:
        # ParseError (con numero di riga) gestito dal dispatcher
        obj = serialization.load(args.file)

    if isinstance(obj, APAAlgorithm):
        result = verify_border(obj)
    else:
        result = verify_target(obj)

    print(f"{obj.name}: {result.describe(obj.target)}")
    if not result.ok:
        logger.warning(f"{obj.name} failed verification at {result.triple}")
        return EXIT_FAILURE

    if isinstance(obj, APAAlgorithm) and obj.target.problems:
        if not _lift_check(obj):
            logger.warning(f"{obj.name}: exact lift differs from mm_naive")
            return EXIT_FAILURE

    if args.duals:
        if not isinstance(obj, BilinearAlgorithm) or obj.shape is None:
            print("error: --duals needs a bilinear MM algorithm")
            return EXIT_USAGE
        for dual in transpose_duals(verified(obj)):
            m, k, n = dual.shape
            print(f"  dual {dual.name} MM({m},{k},{n}) rank {dual.rank}: PASS")
    return EXIT_OK
