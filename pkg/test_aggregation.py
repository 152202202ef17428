"""
Test per Trilinear Aggregation - FastMM

Testa:
1. aggregate_two: rango mkn + mk + kn + nm, verifica esatta
2. Split del target disgiunto e moltiplicazione con il ruolo D
3. aggregate_three: rango n^3 + c(n) e verifica
4. Aritmetica dei ranghi per MM(n) e relativi esponenti

Esegui con: pytest test_aggregation.py  (oppure python test_aggregation.py)
"""

import random
from itertools import product
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Aggiungi path del progetto
sys.path.insert(0, str(Path(__file__).parent))

from app.models.errors import DimensionError
from app.models.schemas import Role
from app.services import matrix_core as mc
from app.services.aggregation import (
    aggregate_three,
    aggregate_two,
    correction_count,
    mm_trace_decomposition,
    odd_even_rank,
    rank_formula_exponent,
    refined_rank,
    three_problem_target,
    two_problem_target,
)
from app.services.bilinear_engine import (
    apply_scalar,
    bilinear_from_disjoint,
    bilinear_from_trilinear,
    expand_terms,
    split_disjoint,
    verify_target,
)


# ============================================================================
# DUE PROBLEMI
# ============================================================================

@pytest.mark.parametrize("m,k,n", list(product(range(1, 5), repeat=3)))
def test_aggregate_two_rank_and_verification(m, k, n):
    T = aggregate_two(m, k, n)
    assert T.rank == m * k * n + m * k + k * n + n * m
    assert T.verified
    assert verify_target(T).ok


def test_aggregate_two_example_rank_20():
    assert aggregate_two(2, 2, 2).rank == 20


def test_two_problem_target_layout():
    target = two_problem_target(2, 3, 4)
    assert [p.families for p in target.problems] == [("a", "b", "d"), ("u", "v", "w")]
    assert [p.shape for p in target.problems] == [(2, 3, 4), (3, 4, 2)]
    assert target.variable_count == 2 * (6 + 12 + 8)
    assert len(target.tensor().coefficients) == 2 * 24


def test_disjoint_split_multiplies_both_problems():
    m, k, n = 2, 3, 2
    T = aggregate_two(m, k, n)
    parts = split_disjoint(T)
    assert len(parts) == 2
    algorithms = bilinear_from_disjoint(T, Role.D)
    assert [alg.shape for alg in algorithms] == [(m, k, n), (k, n, m)]

    rng = random.Random(31)
    for alg in algorithms:
        assert alg.verified
        p, q, r = alg.shape
        A = mc.random_matrix(p, q, mc.INTEGERS, rng)
        B = mc.random_matrix(q, r, mc.INTEGERS, rng)
        assert apply_scalar(alg, A, B) == mc.mm_naive(A, B)


def test_disjoint_target_rejects_single_conversion():
    with pytest.raises(DimensionError):
        bilinear_from_trilinear(aggregate_two(1, 1, 1))


def test_aggregate_two_rejects_bad_dims():
    with pytest.raises(DimensionError):
        aggregate_two(0, 2, 2)


# ============================================================================
# TRE PROBLEMI
# ============================================================================

@pytest.mark.parametrize("n,c", [(1, 12), (2, 57), (3, 162)])
def test_aggregate_three_rank(n, c):
    T = aggregate_three(n)
    assert T.verified
    assert verify_target(T).ok
    assert correction_count(T, n) == c
    assert T.rank == n ** 3 + c


def test_aggregate_three_corrections_are_pairs_plus_three_mm():
    for n in (1, 2, 3):
        T = aggregate_three(n)
        mm = mm_trace_decomposition(n)
        assert correction_count(T, n) == 9 * n ** 2 + 3 * mm.rank


@pytest.mark.parametrize("n", [1, 2, 3])
def test_aggregates_leave_three_full_anti_cyclic_traces(n):
    T = aggregate_three(n)
    nn = n * n
    pairs_end = n ** 3 + 9 * nn
    aggregates = expand_terms(T.term_list[:n ** 3])
    mm_part = expand_terms(T.term_list[pairs_end:])
    # a_ij v_hi z_jh, u_jh y_ij d_hi, x_hi b_jh w_ij
    anti_cyclic = set()
    for i, j, h in product(range(n), repeat=3):
        anti_cyclic.add((i * n + j, nn + h * n + i, 2 * nn + j * n + h))
        anti_cyclic.add((nn + j * n + h, 2 * nn + i * n + j, h * n + i))
        anti_cyclic.add((2 * nn + h * n + i, j * n + h, nn + i * n + j))
    assert len(anti_cyclic) == 3 * n ** 3
    assert all(aggregates[key] == 1 for key in anti_cyclic)
    # l'ultimo blocco e' esattamente meno le tre forme
    assert {key for key, c in mm_part.items() if c != 0} == anti_cyclic
    assert all(mm_part[key] == -1 for key in anti_cyclic)


def test_three_problem_target_layout():
    target = three_problem_target(2)
    assert [p.families for p in target.problems] == [("a", "b", "d"), ("u", "v", "w"), ("x", "y", "z")]
    assert target.tensor().dims == (12, 12, 12)


def test_mm_trace_decomposition_choice():
    assert mm_trace_decomposition(4).rank == 49
    assert mm_trace_decomposition(3).rank == 27
    assert verify_target(mm_trace_decomposition(2)).ok


# ============================================================================
# ARITMETICA DEI RANGHI
# ============================================================================

def test_rank_formulas():
    assert odd_even_rank(34) == 23120
    assert refined_rank(70) == 143640
    assert refined_rank(2) == Fraction(8 - 8, 3) + 24


def test_rank_formula_exponents():
    assert rank_formula_exponent("odd-even", 34) < 2.85
    assert rank_formula_exponent("p78", 70) < 2.7962
    assert abs(rank_formula_exponent("p78", 70) - 2.79512) < 1e-4


def test_rank_formulas_need_even_n():
    with pytest.raises(DimensionError):
        odd_even_rank(33)
    with pytest.raises(DimensionError):
        refined_rank(5)
    with pytest.raises(ValueError):
        rank_formula_exponent("laser", 34)


if __name__ == "__main__":
    print("=" * 80)
    print("FASTMM - TEST AGGREGATION")
    print("=" * 80)
    sys.exit(pytest.main([__file__, "-v"]))
