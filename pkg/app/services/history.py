"""
Dataset storico degli esponenti MM.

Legge app/data/exponent_history.csv (tabelle 1, 1a e 2) e lo restituisce
come righe validate (ExponentHistoryRow) o come CSV per replot.
"""

import csv
import io
from pathlib import Path
from typing import List, Optional

from loguru import logger

from app.models.schemas import ExponentHistoryRow, HistoryTable


DATA_PATH = Path(__file__).resolve().parent.parent / "data" / "exponent_history.csv"
CSV_FIELDS = ["exponent", "citation", "year", "table", "scope"]


class HistoryService:
    """Accesso in sola lettura al dataset (caricato una volta)."""

    def __init__(self, path: Path = DATA_PATH):
        self.path = path
        self._rows: Optional[List[ExponentHistoryRow]] = None

    def rows(self, table: Optional[HistoryTable] = None) -> List[ExponentHistoryRow]:
        """
        Righe del dataset, opzionalmente filtrate per tabella.

        Args:
            table: HistoryTable o il suo valore ("1", "1a", "2")
        """
        if self._rows is None:
            with self.path.open(newline="", encoding="utf-8") as f:
                self._rows = [ExponentHistoryRow(**record) for record in csv.DictReader(f)]
            logger.debug(f"Loaded {len(self._rows)} history rows from {self.path}")
        if table is None:
            return list(self._rows)
        table = HistoryTable(table)
        return [row for row in self._rows if row.table == table]

    def to_csv(self, table: Optional[HistoryTable] = None) -> str:
        """CSV text with the dataset's own header; exponents verbatim."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in self.rows(table):
            writer.writerow([str(row.exponent), row.citation, row.year, row.table.value, row.scope or ""])
        return buffer.getvalue()


# Singleton instance
history_service = HistoryService()
