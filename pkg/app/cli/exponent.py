"""
Comando exponent.

Calcolatori dell'esponente MM:
- --rank R con --m --k --n: 3 log_{mkn}(R) (log_n R per forme quadrate)
- --apa con --m --k --n: 3 log_{mkn}(0.5 (mkn + mk + kn))
- --formula {odd-even,p78} con --n: log_n del rango delle costruzioni non eseguite
- --profile con --m --k --n: convergenza dell'APA per quadrature successive
- --history [--table]: dataset storico come CSV

Tutti i valori sono stampati con 7 decimali.
"""

import argparse
from fractions import Fraction

from app.cli import EXIT_OK
from app.models.schemas import HistoryTable
from app.services.aggregation import rank_formula_exponent
from app.services.apa import apa_exponent, apa_recursion_profile
from app.services.bilinear_engine import exponent_from_rank
from app.services.history import history_service


def register(subparsers) -> None:
    parser = subparsers.add_parser("exponent", help="exponent calculators and history dataset")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--rank", type=Fraction, help="rank of an MM(m,k,n) algorithm")
    mode.add_argument("--apa", action="store_true", help="APA bound for MM(m,k,n)")
    mode.add_argument("--formula", choices=["odd-even", "p78"], help="rank formula for MM(n)")
    mode.add_argument("--profile", action="store_true", help="APA exponent after repeated squaring")
    mode.add_argument("--history", action="store_true", help="dump the exponent history as CSV")
    parser.add_argument("--m", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--levels", type=int, default=6, help="squarings for --profile")
    parser.add_argument("--table", choices=[t.value for t in HistoryTable], help="filter for --history")
    parser.set_defaults(handler=run)


def _dims(args: argparse.Namespace):
    missing = [flag for flag in ("m", "k", "n") if getattr(args, flag) is None]
    if missing:
        raise ValueError(f"missing --{', --'.join(missing)}")
    return args.m, args.k, args.n


def run(args: argparse.Namespace) -> int:
    if args.history:
        table = HistoryTable(args.table) if args.table else None
        print(history_service.to_csv(table), end="")
        return EXIT_OK

    if args.formula:
        if args.n is None:
            raise ValueError("--formula needs --n")
        print(f"{rank_formula_exponent(args.formula, args.n):.7f}")
        return EXIT_OK

    m, k, n = _dims(args)
    if args.rank is not None:
        print(f"{exponent_from_rank(m, k, n, float(args.rank)):.7f}")
    elif args.apa:
        print(f"{apa_exponent(m, k, n):.7f}")
    else:
        print("level,size,border_rank,degree,exponent")
        for row in apa_recursion_profile(m, k, n, args.levels):
            print(f"{row.level},{row.size},{row.border_rank},{row.degree},{row.exponent:.7f}")
    return EXIT_OK
