"""
Algorithm Catalog per FastMM.

Gestisce:
- strassen(): rango 7 per MM(2), 18 addizioni
- winograd_mm2(): rango 7 per MM(2), 15 addizioni (schedule esplicito)
- complex_mult(): rango 3 per il prodotto di numeri complessi
- straightforward(m,k,n): rango mkn
- strassen_power(p): Strassen ricorsivo appiattito per MM(2^p)

Ogni costruttore verifica il risultato prima di restituirlo; le istanze
sono immutabili e messe in cache.
"""

from typing import Callable, Dict, List, Tuple

from loguru import logger

from app.services.bilinear_engine import (
    BilinearAlgorithm,
    Schedule,
    TargetTensor,
    kronecker,
    step,
    verified,
)


class AlgorithmCatalog:
    """
    Costruttori delle istanze fissate dalla letteratura.

    Le entry sono calcolate alla prima richiesta e poi riusate.
    """

    def __init__(self):
        self._cache: Dict[Tuple, BilinearAlgorithm] = {}
        self._builtins: Dict[str, Callable[[], BilinearAlgorithm]] = {
            "strassen": self.strassen,
            "winograd": self.winograd_mm2,
            "complex_mult": self.complex_mult,
            "naive2": lambda: self.straightforward(2, 2, 2),
        }
        logger.info("AlgorithmCatalog inizializzato")

    def _cached(self, key: Tuple, build: Callable[[], BilinearAlgorithm]) -> BilinearAlgorithm:
        if key not in self._cache:
            self._cache[key] = verified(build())
            logger.debug(f"Catalog entry {key} built, rank {self._cache[key].rank}")
        return self._cache[key]

    # ========================================================================
    # ENTRIES
    # ========================================================================

    def strassen(self) -> BilinearAlgorithm:
        """
        Strassen's rank-7 MM(2):

            p1=(a11+a22)(b11+b22)  p2=(a21+a22)b11  p3=a11(b12-b22)
            p4=(a21-a11)(b11+b12)  p5=(a11+a12)b22  p6=a22(b21-b11)
            p7=(a12-a22)(b21+b22)
            c11=p1+p6+p7-p5  c12=p3+p5  c21=p2+p6  c22=p1+p3+p4-p2
        """
        def build():
            U = [
                [1, 0, 0, 1],
                [0, 0, 1, 1],
                [1, 0, 0, 0],
                [-1, 0, 1, 0],
                [1, 1, 0, 0],
                [0, 0, 0, 1],
                [0, 1, 0, -1],
            ]
            V = [
                [1, 0, 0, 1],
                [1, 0, 0, 0],
                [0, 1, 0, -1],
                [1, 1, 0, 0],
                [0, 0, 0, 1],
                [-1, 0, 1, 0],
                [0, 0, 1, 1],
            ]
            W = [
                [1, 0, 0, 0, -1, 1, 1],
                [0, 0, 1, 0, 1, 0, 0],
                [0, 1, 0, 0, 0, 1, 0],
                [1, -1, 1, 1, 0, 0, 0],
            ]
            return BilinearAlgorithm.from_coefficients("strassen", TargetTensor.mm(2, 2, 2), U, V, W)

        return self._cached(("strassen",), build)

    def winograd_mm2(self) -> BilinearAlgorithm:
        """
        Winograd's variant: 7 products, 15 additions with subexpression reuse
        (4 on A, 4 on B, 7 after the products).
        """
        def build():
            a0, a1, a2, a3 = "a_0_0", "a_0_1", "a_1_0", "a_1_1"
            b0, b1, b2, b3 = "b_0_0", "b_0_1", "b_1_0", "b_1_1"
            schedule = Schedule(
                pre_a=(
                    step("s1", (a2, 1), (a3, 1)),
                    step("s2", ("s1", 1), (a0, -1)),
                    step("s3", (a0, 1), (a2, -1)),
                    step("s4", (a1, 1), ("s2", -1)),
                ),
                pre_b=(
                    step("t1", (b1, 1), (b0, -1)),
                    step("t2", (b3, 1), ("t1", -1)),
                    step("t3", (b3, 1), (b1, -1)),
                    step("t4", ("t2", 1), (b2, -1)),
                ),
                products=(
                    ("p0", a0, b0),
                    ("p1", a1, b2),
                    ("p2", "s4", b3),
                    ("p3", a3, "t4"),
                    ("p4", "s1", "t1"),
                    ("p5", "s2", "t2"),
                    ("p6", "s3", "t3"),
                ),
                post=(
                    step("u1", ("p0", 1), ("p1", 1)),
                    step("u2", ("p0", 1), ("p5", 1)),
                    step("u3", ("u2", 1), ("p6", 1)),
                    step("u4", ("u2", 1), ("p4", 1)),
                    step("u5", ("u4", 1), ("p2", 1)),
                    step("u6", ("u3", 1), ("p3", -1)),
                    step("u7", ("u3", 1), ("p4", 1)),
                ),
                outputs=("u1", "u5", "u6", "u7"),
            )
            return BilinearAlgorithm.from_schedule("winograd", TargetTensor.mm(2, 2, 2), schedule)

        return self._cached(("winograd",), build)

    def complex_mult(self) -> BilinearAlgorithm:
        """
        p1 = a1 b1, p2 = a2 b2, p3 = (a1+a2)(b1+b2);
        real part p1 - p2, imaginary part p3 - p1 - p2.
        """
        def build():
            U = [[1, 0], [0, 1], [1, 1]]
            V = [[1, 0], [0, 1], [1, 1]]
            W = [[1, -1, 0], [-1, -1, 1]]
            return BilinearAlgorithm.from_coefficients("complex_mult", TargetTensor.complex_mult(), U, V, W)

        return self._cached(("complex_mult",), build)

    def straightforward(self, m: int, k: int, n: int) -> BilinearAlgorithm:
        """Rank m*k*n: one product a_ij b_jh per index triple."""
        def build():
            target = TargetTensor.mm(m, k, n)
            U, V = [], []
            W = [[0] * (m * k * n) for _ in range(m * n)]
            q = 0
            for i in range(m):
                for j in range(k):
                    for h in range(n):
                        U.append([1 if x == i * k + j else 0 for x in range(m * k)])
                        V.append([1 if x == j * n + h else 0 for x in range(k * n)])
                        W[i * n + h][q] = 1
                        q += 1
            return BilinearAlgorithm.from_coefficients(f"straightforward{m}x{k}x{n}", target, U, V, W)

        return self._cached(("straightforward", m, k, n), build)

    def strassen_power(self, p: int) -> BilinearAlgorithm:
        """Strassen applied p times, flattened: MM(2^p) of rank 7^p."""
        if p < 1:
            raise ValueError(f"p must be >= 1, got {p}")
        if p == 1:
            return self.strassen()
        return self._cached(("strassen_power", p), lambda: kronecker(self.strassen(), self.strassen_power(p - 1)))

    # ========================================================================
    # LOOKUP
    # ========================================================================

    def builtin_names(self) -> List[str]:
        return sorted(self._builtins)

    def get(self, name: str) -> BilinearAlgorithm:
        """
        Builtin by name.

        Raises:
            KeyError: unknown name
        """
        if name not in self._builtins:
            raise KeyError(f"unknown builtin '{name}' (available: {', '.join(self.builtin_names())})")
        return self._builtins[name]()


# Singleton instance
catalog = AlgorithmCatalog()
