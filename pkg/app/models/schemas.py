"""
Pydantic models per FastMM.

Definisce:
- Enum condivisi (anelli, ruoli, modalita' di aggregazione, algoritmi CLI)
- BenchRecord: una riga del CSV di benchmark
- ExponentHistoryRow: una riga del dataset storico degli esponenti
"""

from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Optional

from pydantic import BaseModel, Field, field_validator


# ============================================================================
# ENUMS
# ============================================================================

class RingName(str, Enum):
    """Anelli supportati per le entries"""
    INT = "int"
    RAT = "rat"
    F64 = "f64"


class Role(str, Enum):
    """Gruppo di variabili i cui coefficienti diventano le uscite"""
    A = "A"
    B = "B"
    D = "D"


class AggregateMode(str, Enum):
    """Generatori di decomposizioni"""
    TWO = "two"
    THREE = "three"
    APA = "apa"


class AlgorithmName(str, Enum):
    """Algoritmi eseguibili dal comando multiply"""
    NAIVE = "naive"
    STRASSEN = "strassen"
    WINOGRAD = "winograd"


class HistoryTable(str, Enum):
    """Tabelle del dataset storico"""
    UNRESTRICTED = "1"
    UNRESTRICTED_DIGITS = "1a"
    BOUNDED = "2"


# ============================================================================
# BENCHMARK
# ============================================================================

BENCH_CSV_HEADER = ("alg", "n", "cutoff", "mults", "adds", "wall_ns", "ratio")


class BenchRecord(BaseModel):
    """
    Una run del comando multiply.

    `ratio` e' mults / n^3, esatto: per Strassen con cutoff 1 e n = 2^p
    vale (7/8)^p.
    """
    alg: AlgorithmName = Field(..., description="Algoritmo eseguito")
    n: int = Field(..., ge=1, description="Dimensione delle matrici")
    cutoff: int = Field(..., ge=1, description="Soglia sotto cui gira mm_naive")
    mults: int = Field(..., ge=0, description="Moltiplicazioni contate")
    adds: int = Field(..., ge=0, description="Addizioni e sottrazioni contate")
    wall_ns: int = Field(..., ge=0, description="Tempo di esecuzione (non contrattuale)")

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.mults, self.n ** 3)

    def csv_row(self) -> list:
        return [self.alg.value, self.n, self.cutoff, self.mults, self.adds, self.wall_ns, f"{float(self.ratio):.9f}"]

    class Config:
        json_schema_extra = {
            "example": {
                "alg": "strassen",
                "n": 64,
                "cutoff": 1,
                "mults": 117649,
                "adds": 0,
                "wall_ns": 0
            }
        }


# ============================================================================
# EXPONENT HISTORY
# ============================================================================

class ExponentHistoryRow(BaseModel):
    """
    Una riga delle tabelle storiche degli esponenti MM.

    L'esponente resta un Decimal per riprodurre le cifre verbatim.
    """
    exponent: Decimal = Field(..., description="Esponente come stampato in tabella")
    citation: str = Field(..., min_length=1, description="Chiave/i bibliografiche")
    year: int = Field(..., ge=1900, le=2100, description="Anno")
    table: HistoryTable = Field(..., description="Tabella di provenienza")
    scope: Optional[str] = Field(None, description="unrestricted | n<=1e6")

    @field_validator("exponent")
    @classmethod
    def exponent_range(cls, v: Decimal) -> Decimal:
        if not Decimal(2) <= v <= Decimal(3):
            raise ValueError(f"exponent {v} outside [2, 3]")
        return v
