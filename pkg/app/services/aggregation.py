"""
Trilinear Aggregation per FastMM.

Gestisce:
- DisjointMMTarget: somma di forme traccia indipendenti
- aggregate_two(m,k,n): trace(ABD + UVW) con mkn aggregati + (mk+kn+nm) correzioni
- aggregate_three(n): trace(ABD + UVW + XYZ) con n^3 aggregati + c(n) correzioni
- Aritmetica dei ranghi per l'estensione a MM(n) (solo esponenti)

Convenzioni: i < m, j < k, h < n per il primo problema.
Il secondo problema UVW ha U k x n (u_jh), V n x m (v_hi), W m x k (w_ij);
il terzo XYZ ha X n x m (x_hi), Y m x k (y_ij), Z k x n (z_jh).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple
import math

from loguru import logger

from app.models.errors import DimensionError, VerificationError
from app.services.bilinear_engine import (
    MMProblem,
    TargetTensor,
    TrilinearDecomposition,
    exponent_from_rank,
    sparse,
    trilinear_from_bilinear,
    verify_target,
)
from app.services.catalog import catalog


ONE = Fraction(1)


# ============================================================================
# TARGET
# ============================================================================

@dataclass(frozen=True)
class DisjointMMTarget:
    """Ordered list of independent trace forms trace(ABD) + trace(UVW) + ..."""

    problems: Tuple[MMProblem, ...]

    def __post_init__(self):
        if not self.problems:
            raise DimensionError("a disjoint target needs at least one problem")

    @property
    def variable_count(self) -> int:
        return sum(sum(p.sizes) for p in self.problems)

    def tensor(self) -> TargetTensor:
        return TargetTensor.disjoint(list(self.problems), trace=True)


def two_problem_target(m: int, k: int, n: int) -> DisjointMMTarget:
    return DisjointMMTarget((
        MMProblem(m, k, n, ("a", "b", "d")),
        MMProblem(k, n, m, ("u", "v", "w")),
    ))


def three_problem_target(n: int) -> DisjointMMTarget:
    return DisjointMMTarget((
        MMProblem(n, n, n, ("a", "b", "d")),
        MMProblem(n, n, n, ("u", "v", "w")),
        MMProblem(n, n, n, ("x", "y", "z")),
    ))


def _check_dims(*dims: int) -> None:
    if min(dims) < 1:
        raise DimensionError(f"dimensions must be positive, got {dims}")


# ============================================================================
# TWO DISJOINT PRODUCTS
# ============================================================================

def aggregate_two(m: int, k: int, n: int) -> TrilinearDecomposition:
    """
    Decomposition of trace(ABD + UVW) of rank mkn + mk + kn + nm.

    S  = sum_{i,j,h} (a_ij + u_jh)(b_jh + v_hi)(d_hi + w_ij)
    T1 = sum_{i,j} a_ij q_ij w_ij,   q_ij = sum_h (b_jh + v_hi)
    T2 = sum_{j,h} u_jh b_jh r_jh,   r_jh = sum_i (d_hi + w_ij)
    T3 = sum_{i,h} p_ih v_hi d_hi,   p_ih = sum_j (a_ij + u_jh)

    trace(ABD + UVW) = S - T1 - T2 - T3.

    Raises:
        DimensionError: non-positive dimension
        VerificationError: the generated decomposition does not verify
    """
    _check_dims(m, k, n)
    target = two_problem_target(m, k, n).tensor()

    # indici nei tre gruppi (A-side, B-side, D-side)
    a = lambda i, j: i * k + j
    u = lambda j, h: m * k + j * n + h
    b = lambda j, h: j * n + h
    v = lambda h, i: k * n + h * m + i
    d = lambda h, i: h * m + i
    w = lambda i, j: m * n + i * k + j

    terms = []
    for i in range(m):
        for j in range(k):
            for h in range(n):
                terms.append((
                    sparse({a(i, j): ONE, u(j, h): ONE}),
                    sparse({b(j, h): ONE, v(h, i): ONE}),
                    sparse({d(h, i): ONE, w(i, j): ONE}),
                ))

    for i in range(m):
        for j in range(k):
            q = {}
            for h in range(n):
                q[b(j, h)] = ONE
                q[v(h, i)] = ONE
            terms.append((sparse({a(i, j): -ONE}), sparse(q), sparse({w(i, j): ONE})))

    for j in range(k):
        for h in range(n):
            r = {}
            for i in range(m):
                r[d(h, i)] = ONE
                r[w(i, j)] = ONE
            terms.append((sparse({u(j, h): -ONE}), sparse({b(j, h): ONE}), sparse(r)))

    for i in range(m):
        for h in range(n):
            p = {}
            for j in range(k):
                p[a(i, j)] = ONE
                p[u(j, h)] = ONE
            terms.append((sparse(p), sparse({v(h, i): -ONE}), sparse({d(h, i): ONE})))

    decomposition = TrilinearDecomposition(f"aggregate_two_{m}x{k}x{n}", target, tuple(terms))
    return _checked(decomposition)


def _checked(decomposition: TrilinearDecomposition) -> TrilinearDecomposition:
    result = verify_target(decomposition)
    if not result.ok:
        logger.error(f"{decomposition.name}: {result.describe(decomposition.target)}")
        raise VerificationError(
            f"{decomposition.name} failed verification: {result.describe(decomposition.target)}",
            result.triple,
        )
    logger.info(f"{decomposition.name}: rank {decomposition.rank}, verified")
    return TrilinearDecomposition(decomposition.name, decomposition.target, decomposition.term_list, True)


# ============================================================================
# THREE DISJOINT PRODUCTS
# ============================================================================

# Tipo di coppia di indici di ogni variabile, per colonna della tabella:
#   colonna 0: a(ij) u(jh) x(hi)
#   colonna 1: y(ij) b(jh) v(hi)
#   colonna 2: w(ij) z(jh) d(hi)
PAIR_TYPES = ("ij", "jh", "hi")

# coppie di colonne; le triple dello stesso tipo cadono nella prima (0, 2)
COLUMN_PAIRS = ((0, 2), (0, 1), (1, 2))


def _three_problem_index(n: int) -> Callable[[int, str, int, int, int], int]:
    """var(column, pair_type, i, j, h) -> index inside the column's group."""
    nn = n * n
    table = {
        (0, "ij"): lambda i, j, h: i * n + j,             # a_ij
        (0, "jh"): lambda i, j, h: nn + j * n + h,        # u_jh
        (0, "hi"): lambda i, j, h: 2 * nn + h * n + i,    # x_hi
        (1, "jh"): lambda i, j, h: j * n + h,             # b_jh
        (1, "hi"): lambda i, j, h: nn + h * n + i,        # v_hi
        (1, "ij"): lambda i, j, h: 2 * nn + i * n + j,    # y_ij
        (2, "hi"): lambda i, j, h: h * n + i,             # d_hi
        (2, "ij"): lambda i, j, h: nn + i * n + j,        # w_ij
        (2, "jh"): lambda i, j, h: 2 * nn + j * n + h,    # z_jh
    }
    return lambda column, pair, i, j, h: table[(column, pair)](i, j, h)


def _assign(pair: str, first: int, second: int, free: int) -> Tuple[int, int, int]:
    """(i, j, h) from the values of the pair's two indices and the free one."""
    values = {pair[0]: first, pair[1]: second}
    free_name = ({"i", "j", "h"} - set(pair)).pop()
    values[free_name] = free
    return values["i"], values["j"], values["h"]


# Forme "anti-cicliche" sum X Y Z con X da colonna 0, Y da colonna 1, Z da
# colonna 2, scritte come trace(X Y Z) con X_pq, Y_qr, Z_rp.
# Ogni voce: tipi per colonna e mappa (p, q, r) -> (i, j, h).
ANTI_CYCLIC = (
    (("ij", "hi", "jh"), lambda p, q, r: (q, p, r)),   # a_ij v_hi z_jh
    (("jh", "ij", "hi"), lambda p, q, r: (r, q, p)),   # u_jh y_ij d_hi
    (("hi", "jh", "ij"), lambda p, q, r: (p, r, q)),   # x_hi b_jh w_ij
)


def mm_trace_decomposition(n: int) -> TrilinearDecomposition:
    """Verified trace(ABD) decomposition of MM(n): recursive Strassen for n = 2^p, else straightforward."""
    if n >= 2 and n & (n - 1) == 0:
        alg = catalog.strassen_power(n.bit_length() - 1)
    else:
        alg = catalog.straightforward(n, n, n)
    return trilinear_from_bilinear(alg)


def aggregate_three(n: int) -> TrilinearDecomposition:
    """
    Decomposition of trace(ABD + UVW + XYZ) from the n^3 aggregates
    (a_ij + u_jh + x_hi)(b_jh + v_hi + y_ij)(d_hi + w_ij + z_jh).

    Besides the three targets the aggregates expand to two kinds of
    unwanted monomials:
    - those where two factors share an index pair; 9 groups of n^2
      rank-one terms cancel them, one group per (column pair, index pair);
    - three anti-cyclic forms, trace(A Z V), trace(U Y D) and trace(X B W).
      Each is a full MM(n) trace on variables disjoint from the others,
      so it is cancelled with a whole MM(n) decomposition (recursive
      Strassen for n = 2^p, straightforward otherwise).

    Hence c(n) = 9 n^2 + 3 rank(MM(n)): 12, 57, 162 for n = 1, 2, 3. The
    second part is not O(n^2) and for odd n the total 4 n^3 + 9 n^2 exceeds
    the straightforward 3 n^3. The anti-cyclic part is itself three
    disjoint MM(n) problems, so no correction set for these aggregates can
    be O(n^2) without MM(n) having rank O(n^2).

    Raises:
        VerificationError: the generated decomposition does not verify
    """
    _check_dims(n)
    target = three_problem_target(n).tensor()
    var = _three_problem_index(n)

    terms = []
    for i in range(n):
        for j in range(n):
            for h in range(n):
                terms.append(tuple(
                    sparse({var(column, pair, i, j, h): ONE for pair in PAIR_TYPES})
                    for column in range(3)
                ))

    # coppie: le due colonne condividono il tipo, la terza raccoglie la somma sull'indice libero
    for cs, ct in COLUMN_PAIRS:
        other = ({0, 1, 2} - {cs, ct}).pop()
        for pair in PAIR_TYPES:
            for first in range(n):
                for second in range(n):
                    middle: Dict[int, Fraction] = {}
                    for free in range(n):
                        i, j, h = _assign(pair, first, second, free)
                        for other_pair in PAIR_TYPES:
                            if other_pair == pair and (cs, ct) != COLUMN_PAIRS[0]:
                                continue
                            index = var(other, other_pair, i, j, h)
                            middle[index] = middle.get(index, Fraction(0)) + ONE
                    i, j, h = _assign(pair, first, second, 0)
                    forms = [None, None, None]
                    forms[cs] = sparse({var(cs, pair, i, j, h): -ONE})
                    forms[ct] = sparse({var(ct, pair, i, j, h): ONE})
                    forms[other] = sparse(middle)
                    terms.append(tuple(forms))

    # forme anti-cicliche tramite una decomposizione verificata di MM(n)
    mm = mm_trace_decomposition(n)
    for pairs, to_ijh in ANTI_CYCLIC:
        for f1, f2, f3 in mm.term_list:
            x_form = {}
            for idx, coef in f1:
                p, q = divmod(idx, n)
                x_form[var(0, pairs[0], *to_ijh(p, q, 0))] = -coef
            y_form = {}
            for idx, coef in f2:
                q, r = divmod(idx, n)
                y_form[var(1, pairs[1], *to_ijh(0, q, r))] = coef
            z_form = {}
            for idx, coef in f3:
                r, p = divmod(idx, n)
                z_form[var(2, pairs[2], *to_ijh(p, 0, r))] = coef
            terms.append((sparse(x_form), sparse(y_form), sparse(z_form)))

    decomposition = TrilinearDecomposition(f"aggregate_three_{n}", target, tuple(terms))
    checked = _checked(decomposition)
    logger.info(f"aggregate_three({n}): c(n) = {correction_count(checked, n)} ({mm.rank} per anti-cyclic form)")
    return checked


def correction_count(decomposition: TrilinearDecomposition, n: int) -> int:
    """c(n) = rank - n^3."""
    return decomposition.rank - n ** 3


# ============================================================================
# RANK ARITHMETIC FOR MM(n)
# ============================================================================

def odd_even_rank(n: int) -> Fraction:
    """Rank 0.5 n^3 + 3 n^2 of the odd/even subscript extension (n even)."""
    if n < 2 or n % 2:
        raise DimensionError(f"odd/even extension needs even n >= 2, got {n}")
    return Fraction(n ** 3, 2) + 3 * n ** 2


def refined_rank(n: int) -> Fraction:
    """Rank (n^3 - 4n)/3 + 6n^2 of the refined construction (n = 2p)."""
    if n < 2 or n % 2:
        raise DimensionError(f"refined construction needs even n >= 2, got {n}")
    return Fraction(n ** 3 - 4 * n, 3) + 6 * n ** 2


def rank_formula_exponent(formula: str, n: int) -> float:
    """log_n(rank) for formula in {"odd-even", "p78"}."""
    formulas = {"odd-even": odd_even_rank, "p78": refined_rank}
    if formula not in formulas:
        raise ValueError(f"unknown formula '{formula}' (expected one of {sorted(formulas)})")
    return exponent_from_rank(n, n, n, float(formulas[formula](n)))
