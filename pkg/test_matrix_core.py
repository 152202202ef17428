"""
Test per Matrix Core - FastMM

Testa:
1. Prodotto classico e conteggio operazioni (2n^3 - n^2)
2. Anelli (int, rat, f64) e coercizione dei coefficienti
3. Partizione a blocchi, padding e cropping
4. Operazioni elementari e contatore

Esegui con: pytest test_matrix_core.py  (oppure python test_matrix_core.py)
"""

import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Aggiungi path del progetto
sys.path.insert(0, str(Path(__file__).parent))

from app.models.errors import DimensionError, RingError
from app.services import matrix_core as mc
from app.services.matrix_core import Matrix, OpCounter


# ============================================================================
# PRODOTTO CLASSICO
# ============================================================================

def test_mm_naive_small_product():
    A = Matrix.from_rows([[1, 2, 3], [4, 5, 6]])
    B = Matrix.from_rows([[7, 8], [9, 10], [11, 12]])
    C = mc.mm_naive(A, B)
    assert C.to_rows() == [[58, 64], [139, 154]]


def test_mm_naive_counts_2n3_minus_n2():
    rng = random.Random(1)
    for n in (1, 2, 3, 8):
        A = mc.random_matrix(n, n, mc.INTEGERS, rng)
        B = mc.random_matrix(n, n, mc.INTEGERS, rng)
        ctr = OpCounter()
        mc.mm_naive(A, B, ctr)
        assert ctr.multiplications == n ** 3
        assert ctr.additions == n ** 3 - n ** 2
        assert ctr.total == 2 * n ** 3 - n ** 2


@pytest.mark.parametrize("n", range(1, 17))
def test_mm_naive_counts_up_to_16(n):
    ctr = OpCounter()
    mc.mm_naive(Matrix.zeros(n, n), Matrix.zeros(n, n), ctr)
    assert ctr.multiplications == n ** 3
    assert ctr.additions == n ** 2 * (n - 1)


@pytest.mark.parametrize("ring", [mc.INTEGERS, mc.RATIONALS])
def test_mm_naive_is_associative(ring):
    rng = random.Random(12)
    for _ in range(20):
        m, k, n, p = (rng.randint(1, 5) for _ in range(4))
        A = mc.random_matrix(m, k, ring, rng)
        B = mc.random_matrix(k, n, ring, rng)
        C = mc.random_matrix(n, p, ring, rng)
        assert mc.mm_naive(mc.mm_naive(A, B), C) == mc.mm_naive(A, mc.mm_naive(B, C))


def test_mm_naive_float_associativity_within_tolerance():
    rng = random.Random(13)
    A, B, C = (mc.random_matrix(4, 4, mc.FLOATS, rng) for _ in range(3))
    left = mc.mm_naive(mc.mm_naive(A, B), C)
    right = mc.mm_naive(A, mc.mm_naive(B, C))
    assert list(left.entries) == pytest.approx(list(right.entries), rel=1e-9, abs=1e-9)


def test_mm_naive_rectangular_counts():
    ctr = OpCounter()
    mc.mm_naive(Matrix.zeros(2, 3), Matrix.zeros(3, 4), ctr)
    assert (ctr.multiplications, ctr.additions) == (24, 16)


def test_mm_naive_dimension_mismatch():
    with pytest.raises(DimensionError):
        mc.mm_naive(Matrix.zeros(2, 3), Matrix.zeros(2, 3))


def test_identity_is_neutral():
    rng = random.Random(2)
    A = mc.random_matrix(4, 4, mc.RATIONALS, rng)
    I = Matrix.identity(4, Fraction(0), Fraction(1))
    assert mc.mm_naive(A, I) == A
    assert mc.mm_naive(I, A) == A


# ============================================================================
# ANELLI
# ============================================================================

def test_integer_ring_rejects_fractions():
    assert mc.INTEGERS.coerce(Fraction(6, 3)) == 2
    with pytest.raises(RingError):
        mc.INTEGERS.coerce(Fraction(1, 2))


def test_rings_by_name():
    assert mc.get_ring("int") is mc.INTEGERS
    assert mc.get_ring("rat") is mc.RATIONALS
    assert mc.get_ring("f64") is mc.FLOATS
    assert not mc.FLOATS.exact
    with pytest.raises(ValueError):
        mc.get_ring("gf2")


def test_ring_inference():
    ints = Matrix.from_rows([[1, 2]])
    rats = Matrix.from_rows([[Fraction(1, 2), 2]])
    floats = Matrix.from_rows([[0.5, 2]])
    assert mc.ring_of(ints) is mc.INTEGERS
    assert mc.ring_of(rats) is mc.RATIONALS
    assert mc.common_ring(ints, rats) is mc.RATIONALS
    assert mc.common_ring(rats, floats) is mc.FLOATS


@pytest.mark.parametrize("ring", [mc.INTEGERS, mc.RATIONALS, mc.FLOATS])
def test_ring_axioms_on_seeded_triples(ring):
    rng = random.Random(21)
    same = (lambda x, y: x == y) if ring.exact else (lambda x, y: x == pytest.approx(y, rel=1e-12, abs=1e-12))
    for _ in range(50):
        x, y, z = (ring.random_element(rng, 9) for _ in range(3))
        assert same((x + y) + z, x + (y + z))
        assert same((x * y) * z, x * (y * z))
        assert same(x * (y + z), x * y + x * z)
        assert x + y == y + x
        assert x * y == y * x
        assert x + ring.zero == x
        assert x * ring.one == x
        assert x - x == ring.zero


def test_random_matrix_is_seeded():
    A = mc.random_matrix(3, 3, mc.INTEGERS, random.Random(7))
    B = mc.random_matrix(3, 3, mc.INTEGERS, random.Random(7))
    assert A == B
    assert all(-9 <= x <= 9 for x in A.entries)


# ============================================================================
# BLOCCHI E PADDING
# ============================================================================

def test_block_split_and_join():
    A = Matrix(4, 6, tuple(range(24)))
    grid = mc.block_split(A, 2, 3)
    assert len(grid) == 2 and len(grid[0]) == 3
    assert grid[1][2].to_rows() == [[16, 17], [22, 23]]
    assert mc.block_join(grid) == A


def test_block_split_requires_divisibility():
    with pytest.raises(DimensionError):
        mc.block_split(Matrix.zeros(3, 3), 2, 2)


def test_pad_to_block_power_sizes():
    for n in range(1, 40):
        padded = mc.pad_to_block_power(Matrix.zeros(n, n))
        s = padded.rows
        assert s & (s - 1) == 0
        assert n <= s < 2 * n or n == s == 1
    assert mc.block_power_size(10, 3) == 27


def test_pad_then_crop_is_identity():
    A = Matrix.from_rows([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    padded = mc.pad_to_block_power(A)
    assert padded.shape == (4, 4)
    assert padded.row(3) == (0, 0, 0, 0)
    assert padded.crop(3, 3) == A


@pytest.mark.parametrize("m,k,n", [(3, 3, 3), (5, 2, 7), (6, 6, 6), (1, 9, 3), (7, 5, 5)])
def test_pad_multiply_crop_matches_naive(m, k, n):
    rng = random.Random(m * 100 + k * 10 + n)
    A = mc.random_matrix(m, k, mc.INTEGERS, rng)
    B = mc.random_matrix(k, n, mc.INTEGERS, rng)
    size = mc.block_power_size(max(m, k, n), 2)
    padded = mc.mm_naive(mc.pad_to(A, size, size), mc.pad_to(B, size, size))
    assert padded.shape == (size, size)
    assert padded.crop(m, n) == mc.mm_naive(A, B)


def test_pad_keeps_entry_type():
    A = Matrix.from_rows([[Fraction(1, 3)]])
    padded = mc.pad_to(A, 2, 2)
    assert isinstance(padded[1, 1], Fraction)


# ============================================================================
# OPERAZIONI ELEMENTARI
# ============================================================================

def test_add_sub_scale_counts():
    A = Matrix.from_rows([[1, 2], [3, 4]])
    B = Matrix.from_rows([[5, 6], [7, 8]])
    ctr = OpCounter()
    assert mc.add(A, B, ctr).to_rows() == [[6, 8], [10, 12]]
    assert mc.sub(B, A, ctr).to_rows() == [[4, 4], [4, 4]]
    assert mc.negate(A).to_rows() == [[-1, -2], [-3, -4]]
    assert (ctr.multiplications, ctr.additions) == (0, 8)
    assert mc.scale(A, 3, ctr).to_rows() == [[3, 6], [9, 12]]
    assert ctr.multiplications == 4


def test_counter_merge():
    a = OpCounter(3, 4)
    b = OpCounter(1, 1)
    assert (a + b) == OpCounter(4, 5)
    a.merge(b)
    assert a == OpCounter(4, 5)


def test_first_difference():
    A = Matrix.from_rows([[1, 2], [3, 4]])
    assert mc.first_difference(A, A) is None
    assert mc.first_difference(A, Matrix.from_rows([[1, 2], [3, 5]])) == (1, 1)


if __name__ == "__main__":
    print("=" * 80)
    print("FASTMM - TEST MATRIX CORE")
    print("=" * 80)
    sys.exit(pytest.main([__file__, "-v"]))
