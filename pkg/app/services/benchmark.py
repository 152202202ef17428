"""
Benchmark Service per FastMM.

Gestisce:
- Generazione deterministica di operandi casuali (seed)
- Esecuzione di naive / strassen / winograd con conteggio operazioni
- Cross-check contro mm_naive (anelli esatti) o numpy.allclose (f64)
- Append delle righe BenchRecord al CSV (header stabile)
"""

import csv
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger

from app.config import settings
from app.models.schemas import BENCH_CSV_HEADER, AlgorithmName, BenchRecord, RingName
from app.services import matrix_core as mc
from app.services.bilinear_engine import multiply
from app.services.catalog import catalog
from app.services.matrix_core import Matrix, OpCounter


@dataclass(frozen=True)
class CrossCheck:
    """Esito del confronto con l'oracolo; `position` e' la prima entry diversa."""

    ok: bool
    position: Optional[Tuple[int, int]] = None
    expected: object = None
    actual: object = None


class BenchmarkService:
    """Runner per il comando multiply."""

    def __init__(self):
        self.default_seed = settings.SEED
        logger.info("BenchmarkService inizializzato")

    def operands(self, n: int, ring: RingName, seed: Optional[int] = None, bound: int = 9) -> Tuple[Matrix, Matrix]:
        rng = random.Random(self.default_seed if seed is None else seed)
        r = mc.get_ring(RingName(ring).value)
        return mc.random_matrix(n, n, r, rng, bound), mc.random_matrix(n, n, r, rng, bound)

    def run(
        self,
        alg: AlgorithmName,
        n: int,
        cutoff: int,
        ring: RingName = RingName.INT,
        seed: Optional[int] = None
    ) -> Tuple[BenchRecord, CrossCheck]:
        """
        Multiply two random n x n matrices and cross-check the result.

        Returns:
            (BenchRecord, CrossCheck)
        """
        alg = AlgorithmName(alg)
        ring = RingName(ring)
        A, B = self.operands(n, ring, seed)
        ctr = OpCounter()

        start = time.perf_counter_ns()
        if alg == AlgorithmName.NAIVE:
            C = mc.mm_naive(A, B, ctr)
        else:
            algorithm = catalog.strassen() if alg == AlgorithmName.STRASSEN else catalog.winograd_mm2()
            C = multiply(algorithm, A, B, cutoff, ctr)
        wall_ns = time.perf_counter_ns() - start

        record = BenchRecord(
            alg=alg, n=n, cutoff=cutoff,
            mults=ctr.multiplications, adds=ctr.additions, wall_ns=wall_ns,
        )
        check = self.cross_check(A, B, C, ring)
        logger.info(f"{alg.value} n={n} cutoff={cutoff}: mults={record.mults} adds={record.adds} ok={check.ok}")
        return record, check

    def cross_check(self, A: Matrix, B: Matrix, C: Matrix, ring: RingName) -> CrossCheck:
        if RingName(ring) == RingName.F64:
            expected = np.array(A.to_rows(), dtype=np.float64) @ np.array(B.to_rows(), dtype=np.float64)
            actual = np.array(C.to_rows(), dtype=np.float64)
            if np.allclose(actual, expected):
                return CrossCheck(True)
            i, j = np.unravel_index(np.argmax(np.abs(actual - expected)), actual.shape)
            return CrossCheck(False, (int(i), int(j)), float(expected[i, j]), float(actual[i, j]))

        oracle = mc.mm_naive(A, B)
        position = mc.first_difference(oracle, C)
        if position is None:
            return CrossCheck(True)
        return CrossCheck(False, position, oracle[position], C[position])

    def append_csv(self, record: BenchRecord, path: Union[str, Path]) -> Path:
        """Append one row; the header is written only to a new or empty file."""
        path = Path(path)
        new_file = not path.exists() or path.stat().st_size == 0
        with path.open("a", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            if new_file:
                writer.writerow(BENCH_CSV_HEADER)
            writer.writerow(record.csv_row())
        logger.debug(f"Appended {record.alg.value} row to {path}")
        return path


# Singleton instance
benchmark_service = BenchmarkService()
