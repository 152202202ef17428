"""
Comandi CLI di FastMM.

Ogni modulo espone:
- register(subparsers): aggiunge il sottocomando e i suoi flag
- run(args) -> int: esegue il comando e ritorna l'exit code

Exit code: 0 successo/PASS, 1 verifica o cross-check fallito, 2 errore d'uso o di parsing.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

from app.cli import aggregate, binseg, exponent, multiply, verify  # noqa: E402

COMMANDS = [multiply, verify, exponent, aggregate, binseg]

__all__ = ["EXIT_OK", "EXIT_FAILURE", "EXIT_USAGE", "COMMANDS"]
