"""
Test per la CLI - FastMM

Esegue i comandi multiply, verify, exponent, aggregate e binseg tramite
main(argv) e controlla output ed exit code (0 ok, 1 fallimento, 2 uso).

Esegui con: pytest test_cli.py  (oppure python test_cli.py)
"""

import sys
from pathlib import Path

import pytest

# Aggiungi path del progetto
sys.path.insert(0, str(Path(__file__).parent))

from main import main
from app.config import settings
from app.models.schemas import BENCH_CSV_HEADER
from app.services import serialization
from app.services.catalog import catalog


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _bench_row(out):
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(BENCH_CSV_HEADER)
    return dict(zip(BENCH_CSV_HEADER, lines[1].split(",")))


# ============================================================================
# MULTIPLY
# ============================================================================

def test_multiply_naive_counts(capsys):
    code, out, _ = _run(capsys, "multiply", "--alg", "naive", "--n", "8", "--cutoff", "1")
    row = _bench_row(out)
    assert code == 0
    assert (row["mults"], row["adds"]) == ("512", "448")


def test_multiply_strassen_ratio(capsys):
    code, out, _ = _run(capsys, "multiply", "--alg", "strassen", "--n", "16", "--cutoff", "1", "--seed", "3")
    row = _bench_row(out)
    assert code == 0
    assert row["mults"] == str(7 ** 4)
    assert row["ratio"] == "0.586181641"


def test_multiply_cutoff_disables_recursion(capsys):
    code, out, _ = _run(capsys, "multiply", "--alg", "strassen", "--n", "8", "--cutoff", "8")
    row = _bench_row(out)
    assert code == 0
    assert (row["mults"], row["adds"]) == ("512", "448")


def test_multiply_rational_and_float_rings(capsys):
    for ring in ("rat", "f64"):
        code, _, _ = _run(capsys, "multiply", "--alg", "winograd", "--n", "5", "--cutoff", "1", "--ring", ring)
        assert code == 0


def test_multiply_appends_csv(capsys, tmp_path):
    path = tmp_path / "bench.csv"
    for alg in ("naive", "strassen"):
        code, _, _ = _run(capsys, "multiply", "--alg", alg, "--n", "4", "--cutoff", "1", "--csv", str(path))
        assert code == 0
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "alg,n,cutoff,mults,adds,wall_ns,ratio"
    assert len(lines) == 3
    assert lines[2].startswith("strassen,4,1,49,")


def test_multiply_is_deterministic_given_seed(capsys):
    outputs = []
    for _ in range(2):
        _, out, _ = _run(capsys, "multiply", "--alg", "strassen", "--n", "6", "--cutoff", "1", "--seed", "9")
        row = _bench_row(out)
        outputs.append((row["mults"], row["adds"]))
    assert outputs[0] == outputs[1]


def test_multiply_bad_flags():
    with pytest.raises(SystemExit) as excinfo:
        main(["multiply", "--alg", "laderman", "--n", "4"])
    assert excinfo.value.code == 2


def test_multiply_bad_size(capsys):
    code, _, _ = _run(capsys, "multiply", "--alg", "naive", "--n", "0")
    assert code == 2


# ============================================================================
# VERIFY
# ============================================================================

@pytest.mark.parametrize("name", ["strassen", "winograd", "complex_mult"])
def test_verify_builtin_pass(capsys, name):
    code, out, _ = _run(capsys, "verify", "--builtin", name)
    assert code == 0
    assert "PASS" in out


def test_verify_flipped_sign_fails(capsys, tmp_path):
    text = serialization.dump(catalog.strassen()).replace("W 4 0 -1/1", "W 4 0 1/1")
    path = tmp_path / "flipped.txt"
    path.write_text(text, encoding="utf-8")
    code, out, _ = _run(capsys, "verify", "--file", str(path))
    assert code == 1
    assert "FAIL at (" in out


def test_verify_parse_error_reports_line(capsys, tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("# fastmm bilinear v1\nname s\nshape 2 2 2\nrank 7\nU 0 0 ?\n", encoding="utf-8")
    code, _, err = _run(capsys, "verify", "--file", str(path))
    assert code == 2
    assert "line 5" in err


def test_verify_unknown_builtin(capsys):
    code, out, _ = _run(capsys, "verify", "--builtin", "laderman")
    assert code == 2
    assert "unknown builtin" in out


def test_verify_duals(capsys):
    code, out, _ = _run(capsys, "verify", "--builtin", "strassen", "--duals")
    assert code == 0
    assert out.count("dual ") == 6


def test_verify_trilinear_and_apa_files(capsys, tmp_path):
    for mode in ("two", "apa"):
        path = tmp_path / f"{mode}.txt"
        code, _, _ = _run(capsys, "aggregate", "--mode", mode, "--m", "2", "--k", "1", "--n", "2", "--out", str(path))
        assert code == 0
        code, out, _ = _run(capsys, "verify", "--file", str(path))
        assert code == 0
        assert "PASS" in out


def test_verify_apa_file_lifts_with_configured_nodes(capsys, tmp_path, monkeypatch):
    path = tmp_path / "apa.txt"
    code, _, _ = _run(capsys, "aggregate", "--mode", "apa", "--m", "2", "--k", "2", "--n", "1", "--out", str(path))
    assert code == 0
    code, out, _ = _run(capsys, "verify", "--file", str(path))
    assert code == 0
    assert "lift at nodes 1 2 3: PASS" in out

    monkeypatch.setattr(settings, "APA_INTERPOLATION_NODES", ["1/2", "1/3", "1/5"])
    code, out, _ = _run(capsys, "verify", "--file", str(path))
    assert code == 0
    assert "lift at nodes 1/2 1/3 1/5: PASS" in out

    monkeypatch.setattr(settings, "APA_INTERPOLATION_NODES", ["1", "1", "1"])
    code, _, err = _run(capsys, "verify", "--file", str(path))
    assert code == 2
    assert "interpolation nodes" in err


# ============================================================================
# EXPONENT
# ============================================================================

def test_exponent_strassen(capsys):
    code, out, _ = _run(capsys, "exponent", "--m", "2", "--k", "2", "--n", "2", "--rank", "7")
    assert code == 0
    assert out.strip() == "2.8073549"


def test_exponent_apa_7_1_7(capsys):
    code, out, _ = _run(capsys, "exponent", "--apa", "--m", "7", "--k", "1", "--n", "7")
    assert code == 0
    assert float(out) < 2.66


def test_exponent_rank_23120(capsys):
    code, out, _ = _run(capsys, "exponent", "--m", "34", "--k", "34", "--n", "34", "--rank", "23120")
    assert code == 0
    assert float(out) < 2.85


def test_exponent_formula(capsys):
    code, out, _ = _run(capsys, "exponent", "--formula", "p78", "--n", "70")
    assert code == 0
    assert float(out) < 2.7962


def test_exponent_profile(capsys):
    code, out, _ = _run(capsys, "exponent", "--profile", "--m", "7", "--k", "1", "--n", "7", "--levels", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "level,size,border_rank,degree,exponent"
    assert len(lines) == 5


def test_exponent_history(capsys):
    code, out, _ = _run(capsys, "exponent", "--history")
    assert code == 0
    assert len(out.strip().splitlines()) == 22
    code, out, _ = _run(capsys, "exponent", "--history", "--table", "1a")
    assert len(out.strip().splitlines()) == 5


def test_exponent_errors(capsys):
    code, _, _ = _run(capsys, "exponent", "--rank", "7")
    assert code == 2
    code, _, err = _run(capsys, "exponent", "--m", "1", "--k", "1", "--n", "1", "--rank", "1")
    assert code == 2
    assert "undefined" in err


# ============================================================================
# AGGREGATE
# ============================================================================

def test_aggregate_two_writes_file(capsys, tmp_path):
    path = tmp_path / "two.txt"
    code, out, _ = _run(capsys, "aggregate", "--mode", "two", "--m", "2", "--k", "2", "--n", "2", "--out", str(path))
    assert code == 0
    assert out.startswith("rank 20")
    assert serialization.load(path).rank == 20


def test_aggregate_apa_border_rank(capsys):
    code, out, _ = _run(capsys, "aggregate", "--mode", "apa", "--m", "7", "--k", "1", "--n", "7")
    assert code == 0
    assert out.startswith("border rank 63")
    constant = float(out.splitlines()[1].split("C = ")[1].split()[0])
    assert constant >= 0


def test_aggregate_three(capsys):
    code, out, _ = _run(capsys, "aggregate", "--mode", "three", "--m", "2", "--k", "2", "--n", "2")
    assert code == 0
    assert out.startswith("rank 65 = 8 + c(2), c(2) = 57")


def test_aggregate_three_needs_square(capsys):
    code, _, _ = _run(capsys, "aggregate", "--mode", "three", "--m", "2", "--k", "3", "--n", "2")
    assert code == 2


# ============================================================================
# BINSEG
# ============================================================================

def test_binseg_inner(capsys):
    code, out, _ = _run(capsys, "binseg", "--op", "inner", "--vectors", "1,2,3;4,5,6")
    assert code == 0
    assert "result 32" in out
    assert "match" in out
    assert "mults=1" in out


def test_binseg_sum_random(capsys):
    code, out, _ = _run(capsys, "binseg", "--op", "sum", "--random", "1024", "0", "16", "--seed", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].replace("result", "oracle") == lines[1]


def test_binseg_conv(capsys):
    code, out, _ = _run(capsys, "binseg", "--op", "conv", "--vectors", "1,1;1,1")
    assert code == 0
    assert "result 1,2,1" in out


def test_binseg_signed_inner(capsys):
    code, out, _ = _run(capsys, "binseg", "--op", "inner", "--vectors=-1,2;3,-4")
    assert code == 0
    assert "result -11" in out


def test_binseg_file_input(capsys, tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("1 2 3\n4 5 6\n", encoding="utf-8")
    code, out, _ = _run(capsys, "binseg", "--op", "inner", "--file", str(path))
    assert code == 0
    assert "result 32" in out


def test_binseg_range_violation(capsys):
    code, _, err = _run(capsys, "binseg", "--op", "inner", "--vectors", "1,9,2,8;1,1,1,1", "--g", "3", "--h", "1")
    assert code == 2
    assert "[1, 3]" in err


def test_binseg_wrong_vector_count(capsys):
    code, _, _ = _run(capsys, "binseg", "--op", "inner", "--vectors", "1,2,3")
    assert code == 2


# ============================================================================
# LOGGING
# ============================================================================

def test_logging_is_configured_once_per_process(capsys, monkeypatch):
    import main as entry

    calls = []
    monkeypatch.setattr(entry, "setup_logging", lambda level=None: calls.append(level))
    monkeypatch.setattr(entry, "is_configured", lambda: True)
    argv = ("exponent", "--m", "2", "--k", "2", "--n", "2", "--rank", "7")
    assert _run(capsys, *argv)[0] == 0
    assert calls == []
    assert _run(capsys, "-v", *argv)[0] == 0
    assert calls == ["DEBUG"]

    monkeypatch.setattr(entry, "is_configured", lambda: False)
    assert _run(capsys, *argv)[0] == 0
    assert calls == ["DEBUG", None]


if __name__ == "__main__":
    print("=" * 80)
    print("FASTMM - TEST CLI")
    print("=" * 80)
    sys.exit(pytest.main([__file__, "-v"]))
