"""
Test per Algorithm Catalog - FastMM

Testa le istanze fissate: Strassen, Winograd, moltiplicazione complessa,
algoritmo diretto e Strassen ricorsivo appiattito.

Esegui con: pytest test_catalog.py  (oppure python test_catalog.py)
"""

import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Aggiungi path del progetto
sys.path.insert(0, str(Path(__file__).parent))

from app.services.bilinear_engine import verify_target
from app.services.catalog import AlgorithmCatalog, catalog


def test_strassen_entry():
    alg = catalog.strassen()
    assert alg.name == "strassen"
    assert alg.rank == 7
    assert alg.shape == (2, 2, 2)
    assert alg.verified


def test_winograd_coefficients_come_from_schedule():
    alg = catalog.winograd_mm2()
    assert alg.rank == 7
    assert alg.schedule is not None
    assert alg.plan is alg.schedule
    assert len(alg.schedule.pre_a) == 4 and len(alg.schedule.pre_b) == 4
    assert len(alg.schedule.post) == 7
    assert verify_target(alg).ok
    # p0 = a_0_0 b_0_0
    assert alg.U[0] == (Fraction(1), 0, 0, 0)


def test_complex_mult_entry():
    alg = catalog.complex_mult()
    assert alg.rank == 3
    assert alg.shape is None
    assert alg.target.dims == (2, 2, 2)
    assert alg.verified


@pytest.mark.parametrize("m,k,n", [(1, 1, 1), (2, 2, 2), (2, 3, 4), (3, 1, 2)])
def test_straightforward_rank(m, k, n):
    alg = catalog.straightforward(m, k, n)
    assert alg.rank == m * k * n
    assert alg.shape == (m, k, n)
    assert verify_target(alg).ok


@pytest.mark.parametrize("p", [1, 2, 3])
def test_strassen_power(p):
    alg = catalog.strassen_power(p)
    assert alg.rank == 7 ** p
    assert alg.shape == (2 ** p,) * 3
    assert alg.verified


def test_strassen_power_rejects_zero():
    with pytest.raises(ValueError):
        catalog.strassen_power(0)


def test_entries_are_cached():
    assert catalog.strassen() is catalog.strassen()
    assert catalog.straightforward(2, 3, 4) is catalog.straightforward(2, 3, 4)


def test_builtin_lookup():
    assert catalog.builtin_names() == ["complex_mult", "naive2", "strassen", "winograd"]
    assert catalog.get("winograd") is catalog.winograd_mm2()
    with pytest.raises(KeyError):
        catalog.get("laderman")


def test_fresh_catalog_builds_same_algorithms():
    other = AlgorithmCatalog()
    assert other.strassen() == catalog.strassen()


if __name__ == "__main__":
    print("=" * 80)
    print("FASTMM - TEST CATALOG")
    print("=" * 80)
    sys.exit(pytest.main([__file__, "-v"]))
