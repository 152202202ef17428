"""
Test per il dataset storico degli esponenti - FastMM

Esegui con: pytest test_history.py  (oppure python test_history.py)
"""

import csv
import io
import sys
from decimal import Decimal
from pathlib import Path

import pytest
from pydantic import ValidationError

# Aggiungi path del progetto
sys.path.insert(0, str(Path(__file__).parent))

from app.models.schemas import ExponentHistoryRow, HistoryTable
from app.services.history import HistoryService, history_service


def test_tables_sizes():
    assert len(history_service.rows()) == 21
    assert len(history_service.rows(HistoryTable.UNRESTRICTED)) == 12
    assert len(history_service.rows("1a")) == 4
    assert len(history_service.rows(HistoryTable.BOUNDED)) == 5


def test_first_and_last_records():
    rows = history_service.rows(HistoryTable.UNRESTRICTED)
    assert rows[0].exponent == Decimal("2.8074")
    assert rows[0].citation == "S69"
    assert rows[-1].exponent == Decimal("2.373")
    digits = history_service.rows(HistoryTable.UNRESTRICTED_DIGITS)
    assert str(digits[0].exponent) == "2.3754770"


def test_bounded_table_scope():
    rows = history_service.rows(HistoryTable.BOUNDED)
    assert {row.scope for row in rows} == {"n<=1e6"}
    assert [row.year for row in rows] == sorted(row.year for row in rows)


def test_exponents_never_increase_within_a_table():
    for table in HistoryTable:
        values = [row.exponent for row in history_service.rows(table)]
        assert all(x >= y for x, y in zip(values, values[1:])), table


def test_csv_export_round_trip():
    text = history_service.to_csv()
    reader = list(csv.DictReader(io.StringIO(text)))
    assert list(reader[0]) == ["exponent", "citation", "year", "table", "scope"]
    assert len(reader) == 21
    assert reader[3]["citation"] == "BCLR79, B80"
    filtered = history_service.to_csv(HistoryTable.BOUNDED)
    assert filtered.count("\n") == 6


def test_row_validation():
    with pytest.raises(ValidationError):
        ExponentHistoryRow(exponent=Decimal("3.5"), citation="X", year=2000, table="1")
    with pytest.raises(ValidationError):
        ExponentHistoryRow(exponent=Decimal("2.5"), citation="X", year=2000, table="3")


def test_custom_path(tmp_path):
    path = tmp_path / "history.csv"
    path.write_text("exponent,citation,year,table,scope\n2.9,T1,2001,2,n<=1e6\n", encoding="utf-8")
    rows = HistoryService(path).rows()
    assert len(rows) == 1 and rows[0].table == HistoryTable.BOUNDED


if __name__ == "__main__":
    print("=" * 80)
    print("FASTMM - TEST HISTORY")
    print("=" * 80)
    sys.exit(pytest.main([__file__, "-v"]))
