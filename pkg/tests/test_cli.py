import csv
import io
import json
import subprocess
import sys

import pytest
from gmpy2 import mpfr

from qzeta.cli import CSV_COLUMNS, EXIT_OK, EXIT_RESIDUAL, EXIT_USAGE, EXIT_VERIFY, RunConfig, main
from qzeta import DomainError, EpsSeries


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


class TestCompute:
    def test_nonpositive_value(self):
        code, text = run("compute", "--s", "-1")
        assert code == EXIT_OK
        rec = json.loads(text)
        assert rec["s"] == [-1] and rec["f"] == [0]
        assert abs(float(rec["value"]["T_coeffs"][0]) + 0.109362) < 1e-6
        assert rec["meta"]["precision"] == 256
        assert rec["meta"]["route"] == "first"

    def test_zeta_one_is_linear_in_t(self):
        rec = json.loads(run("compute", "--s", "1")[1])
        t0, t1 = (mpfr(x, 256) for x in rec["value"]["T_coeffs"])
        assert abs(t1 - mpfr("0.7213475204444817036799623405009460687133", 256)) < mpfr("1e-38")
        assert abs(t0 + mpfr("0.3630255124307876934315579981085954773409", 256)) < mpfr("1e-38")

    def test_shift(self):
        rec = json.loads(run("compute", "--s", "1", "--f", "1")[1])
        assert rec["f"] == [1]

    def test_series_round_trip(self):
        rec = json.loads(run("compute", "--s", "0", "-1", "--series",
                             "--eps-order", "1", "--delta-order", "1")[1])
        plus = EpsSeries.from_json(rec["plus_part"])
        assert plus.hi == 1
        value = plus.coeff(0).coeff(0).coeff(0)
        assert value.precision == 256
        assert value == mpfr(rec["value"]["T_coeffs"][0], 256)

    def test_output_is_deterministic(self):
        argv = ("compute", "--s", "-1", "0", "--prec-bits", "128")
        assert run(*argv)[1] == run(*argv)[1]

    def test_csv_columns(self):
        code, text = run("compute", "--s", "1", "--format", "csv")
        rows = list(csv.reader(io.StringIO(text)))
        assert code == EXIT_OK
        assert rows[0] == CSV_COLUMNS
        assert [r[3] for r in rows[1:]] == ["0", "1"]


class TestTable:
    def test_grid(self):
        code, text = run("table", "--entries", "0", "-1", "--depth", "2", "--prec-bits", "128")
        recs = json.loads(text)
        assert code == EXIT_OK
        assert [r["s"] for r in recs] == [[0, 0], [0, -1], [-1, 0], [-1, -1]]

    def test_empty_range(self):
        code, text = run("table", "--entries", "--depth", "2")
        assert code == EXIT_OK and json.loads(text) == []

    def test_csv(self):
        text = run("table", "--entries", "0", "-1", "--format", "csv", "--prec-bits", "128")[1]
        rows = list(csv.DictReader(io.StringIO(text)))
        assert [r["s"] for r in rows] == ["0", "-1"]


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ("compute", "--s", "1", "-1"),
        ("compute", "--s", "-1", "--f", "1", "1"),
        ("compute", "--s", "0", "--f", "1"),
        ("compute", "--s", "-1", "--q", "1.5"),
        ("compute", "--s", "-1", "--prec-bits", "16"),
        ("compute", "--s", "-1", "--tol", "-1"),
        ("table", "--depth", "0"),
        ("bogus",),
    ])
    def test_usage(self, argv, capsys):
        assert run(*argv)[0] == EXIT_USAGE
        assert capsys.readouterr().err

    def test_help(self, capsys):
        assert run("--help")[0] == EXIT_OK

    def test_residual_pole(self, capsys):
        code, _ = run("compute", "--s", "0", "-1", "--prec-bits", "128", "--tol", "1e-60")
        assert code == EXIT_RESIDUAL
        assert "residual pole" in capsys.readouterr().err

    def test_verify_failure(self):
        code, text = run("verify", "--suite", "stuffle", "--prec-bits", "128")
        assert code == EXIT_VERIFY
        assert text.splitlines()[-1].startswith("stuffle: ")

    def test_verify_pass_with_loose_tolerance(self):
        code, text = run("verify", "--suite", "stuffle", "--prec-bits", "128", "--tol", "1e-3",
                         "--format", "csv")
        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(text)))
        assert rows and all(r["status"] == "PASS" for r in rows)


def test_precision_from_environment(monkeypatch):
    monkeypatch.setenv("QZETA_PRECISION_BITS", "96")
    rec = json.loads(run("compute", "--s", "-1")[1])
    assert rec["meta"]["precision"] == 96
    monkeypatch.setenv("QZETA_PRECISION_BITS", "lots")
    assert run("compute", "--s", "-1")[0] == EXIT_USAGE


def test_config_validation():
    with pytest.raises(DomainError):
        RunConfig(format="xml")
    with pytest.raises(DomainError):
        RunConfig(eps_order=-1)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qzeta", "compute", "--s", "-2", "--prec-bits", "64"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["s"] == [-2]
