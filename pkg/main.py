"""
FastMM - Command Line Entry Point

Laboratorio per la moltiplicazione veloce di matrici: algoritmi bilineari
ricorsivi, aggregazione trilineare, APA, calcolo degli esponenti e
binary segmentation.

Run:
    python main.py multiply --alg strassen --n 64 --cutoff 1
    python main.py verify --builtin strassen
    python main.py exponent --m 2 --k 2 --n 2 --rank 7
    python main.py aggregate --mode two --m 2 --k 2 --n 2 --out two.txt
    python main.py binseg --op inner --vectors "1,2,3;4,5,6"
"""

import argparse
import sys
from typing import List, Optional

from loguru import logger

from app.cli import COMMANDS, EXIT_FAILURE, EXIT_USAGE
from app.models.errors import FastMMError, ParseError, VerificationError
from app.utils.logging import is_configured, setup_logging


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastmm",
        description="Fast matrix multiplication laboratory",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging on stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


# ============================================================================
# DISPATCH
# ============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exit 2 su flag non validi

    # un solo setup per processo, -v lo forza sempre
    if args.verbose or not is_configured():
        setup_logging("DEBUG" if args.verbose else None)
    logger.debug("=" * 80)
    logger.debug(f"FASTMM - {args.command}")
    logger.debug("=" * 80)

    try:
        return args.handler(args)

    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        print(f"FAIL: {e}")
        return EXIT_FAILURE

    except ParseError as e:
        logger.error(f"Parse error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    except (FastMMError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
