"""
Comando binseg.

Prodotto scalare, somma e convoluzione con una sola moltiplicazione lunga
(binary segmentation), con cross-check contro l'oracolo a ciclo.

Input:
- --vectors "1,2,3;4,5,6"   vettori separati da ';'
- --file VECTORS            un vettore per riga (virgole o spazi)
- --random n g h --seed S   u in [0, 2^g), v in [0, 2^h)

Vettori con entries negative passano per lo shift (inner e sum).
"""

import argparse
import random
from pathlib import Path
from typing import List

from app.cli import EXIT_FAILURE, EXIT_OK
from app.config import settings
from app.services import binseg
from app.services.matrix_core import OpCounter


OPS = ("inner", "sum", "conv")


def register(subparsers) -> None:
    parser = subparsers.add_parser("binseg", help="one-multiplication inner product, sum and convolution")
    parser.add_argument("--op", choices=OPS, required=True)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--vectors", help="inline vectors, e.g. '1,2,3;4,5,6'")
    source.add_argument("--file", metavar="VECTORS", help="one vector per line")
    source.add_argument("--random", nargs=3, type=int, metavar=("N", "G", "H"), help="random vectors")
    parser.add_argument("--seed", type=int, default=None, help="default: FASTMM_SEED")
    parser.add_argument("--g", type=int, help="bit bound of u (inner)")
    parser.add_argument("--h", type=int, help="bit bound of v (inner, sum)")
    parser.add_argument("--bound", type=int, help="coefficient bit bound (conv)")
    parser.set_defaults(handler=run)


# ============================================================================
# INPUT
# ============================================================================

def parse_vectors(text: str, separator: str = ";") -> List[List[int]]:
    vectors = []
    for chunk in text.split(separator):
        tokens = chunk.replace(",", " ").split()
        if tokens:
            vectors.append([int(t) for t in tokens])
    return vectors


def _random_vectors(op: str, n: int, g: int, h: int, seed: int) -> List[List[int]]:
    if n < 1 or g < 0 or h < 0:
        raise ValueError(f"--random needs n >= 1 and g, h >= 0, got {n} {g} {h}")
    rng = random.Random(seed)
    v = [rng.randrange(1 << h) for _ in range(n)]
    if op == "sum":
        return [v]
    u = [rng.randrange(1 << g) for _ in range(n)]
    return [u, v]


def _bits(v: List[int]) -> int:
    return max(max(abs(x) for x in v).bit_length(), 1)


def _render(value) -> str:
    if isinstance(value, list):
        return ",".join(str(x) for x in value)
    return str(value)


# ============================================================================
# ORACLES
# ============================================================================

def loop_inner(u: List[int], v: List[int]) -> int:
    total = 0
    for a, b in zip(u, v):
        total += a * b
    return total


def schoolbook_conv(p: List[int], q: List[int]) -> List[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


# ============================================================================
# COMMAND
# ============================================================================

def run(args: argparse.Namespace) -> int:
    if args.random:
        n, g, h = args.random
        seed = settings.SEED if args.seed is None else args.seed
        vectors = _random_vectors(args.op, n, g, h, seed)
        g_bits, h_bits = (args.g if args.g is not None else g), (args.h if args.h is not None else h)
    else:
        if args.file:
            vectors = parse_vectors(Path(args.file).read_text(encoding="utf-8"), separator="\n")
        else:
            vectors = parse_vectors(args.vectors)
        g_bits, h_bits = args.g, args.h

    needed = 1 if args.op == "sum" else 2
    if len(vectors) != needed:
        raise ValueError(f"--op {args.op} needs {needed} vector(s), got {len(vectors)}")

    ctr = OpCounter()
    if args.op == "sum":
        (v,) = vectors
        oracle = sum(v)
        if min(v) < 0:
            result, info = binseg.signed_sum_report(v, ctr)
        else:
            h = h_bits if h_bits is not None else _bits(v)
            result, info = binseg.segmented_sum_report(v, h, ctr)
    elif args.op == "inner":
        u, v = vectors
        oracle = loop_inner(u, v)
        if min(u) < 0 or min(v) < 0:
            result, info = binseg.signed_inner_product_report(u, v, ctr)
        else:
            g = g_bits if g_bits is not None else _bits(u)
            h = h_bits if h_bits is not None else _bits(v)
            result, info = binseg.inner_product_report(u, v, g, h, ctr)
    else:
        p, q = vectors
        oracle = schoolbook_conv(p, q)
        bound = args.bound
        if bound is None:
            bound = max(g_bits or 0, h_bits or 0, _bits(p), _bits(q))
        result, info = binseg.poly_mult_report(p, q, bound, ctr)

    print(f"result {_render(result)}")
    print(f"oracle {_render(oracle)}")
    print(
        f"long multiplication: k={info.radix_bits} operands {info.left_bits}/{info.right_bits} bits, "
        f"product {info.product_bits} bits, mults={ctr.multiplications}"
    )
    if result != oracle:
        print("MISMATCH")
        return EXIT_FAILURE
    print("match")
    return EXIT_OK
