"""Command-line interface: exit codes, output formats, determinism."""

import csv
import io
import json

import pytest

from magspec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_rows(text):
    return list(csv.reader(io.StringIO(text)))


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestOracle:
    def test_default_field_tables(self, capsys):
        code, out, _ = run(capsys, "oracle")
        assert code == 0
        rows = csv_rows(out)
        assert rows[0] == ["table", "i", "k", "value"]
        table = {(r[0], r[1], r[2]): r[3] for r in rows[1:]}
        assert float(table[("well", "b0", "")]) == 1.0
        assert float(table[("well", "R0", "")]) == 0.0
        assert float(table[("mu_jk2", "0", "0")]) == pytest.approx(2.0)
        assert float(table[("mu_jk2", "0", "1")]) == pytest.approx(8.0)
        assert float(table[("c_k", "0", "")]) == pytest.approx(2.0)
        assert any(r[0] == "flat_model" for r in rows[1:])
        assert any(r[0] == "p_flat" for r in rows[1:])

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "oracle", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        mu00 = [d for d in doc if d["table"] == "mu_jk2"
                and d["i"] == 0 and d["k"] == 0]
        assert mu00[0]["value"] == pytest.approx(2.0)


class TestErrorHandling:
    def test_missing_config_exits_2(self, capsys):
        code, _, err = run(capsys, "oracle", "--config", "/nonexistent/x.json")
        assert code == 2
        assert "error:" in err and "not found" in err

    def test_malformed_json_exits_2(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code, _, err = run(capsys, "oracle", "--config", str(path))
        assert code == 2
        assert "invalid JSON" in err

    def test_non_object_config_exits_2(self, capsys, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2]")
        code, _, err = run(capsys, "oracle", "--config", str(path))
        assert code == 2

    def test_unparseable_field_exits_2(self, capsys, tmp_path):
        cfg = write_config(tmp_path, {"field": {"b": "1 + (x"}})
        code, _, err = run(capsys, "oracle", "--config", cfg)
        assert code == 2

    @pytest.mark.filterwarnings("ignore:minimum not unique")
    def test_degenerate_field_exits_1(self, capsys, tmp_path):
        cfg = write_config(tmp_path, {"field": {"b": "1 + x^2"}})
        code, _, err = run(capsys, "oracle", "--config", cfg)
        assert code == 1
        assert "error:" in err


class TestSolve:
    def test_rows_and_matrix_dump(self, capsys, tmp_path):
        cfg = write_config(tmp_path, {"solve": {"h": 0.1, "n": 40, "m": 3}})
        mtx = tmp_path / "H.mtx"
        code, out, _ = run(capsys, "solve", "--config", cfg,
                           "--dump-matrix", str(mtx))
        assert code == 0
        rows = csv_rows(out)
        assert rows[0] == ["j", "lambda", "lambda_predicted", "residual",
                           "converged"]
        assert len(rows) == 4
        lam0 = float(rows[1][1])
        assert 0.1 < lam0 < float(rows[1][2])
        assert mtx.exists()
        assert mtx.read_text().startswith("%%MatrixMarket")

    def test_out_file(self, capsys, tmp_path):
        cfg = write_config(tmp_path, {"solve": {"h": 0.1, "n": 40, "m": 2}})
        dest = tmp_path / "eig.csv"
        code, out, _ = run(capsys, "solve", "--config", cfg, "--out", str(dest))
        assert code == 0 and out == ""
        assert csv_rows(dest.read_text())[0][0] == "j"


class TestSweep:
    CFG = {"field": {"b": "1 + x^2 + y^2", "domain": [-2, 2, -2, 2]},
           "sweep": {"h": [0.1, 0.08], "m": 2, "quasimode": False,
                     "grid": {"n": 32}}}

    def test_reruns_byte_identical(self, capsys, tmp_path):
        cfg = write_config(tmp_path, self.CFG)
        outs = []
        for name in ("a.csv", "b.csv"):
            dest = tmp_path / name
            code, _, _ = run(capsys, "sweep", "--config", cfg, "--out", str(dest))
            assert code == 0
            outs.append(dest.read_bytes())
        assert outs[0] == outs[1]

    def test_ground_level_increases_with_h(self, capsys, tmp_path):
        cfg = write_config(tmp_path, self.CFG)
        code, out, err = run(capsys, "sweep", "--config", cfg)
        assert code == 0
        rows = csv_rows(out)
        lam = {float(r[0]): float(r[2]) for r in rows[1:] if r[1] == "0"}
        assert lam[0.08] < lam[0.1]
        assert "fit j=0" in err  # fit diagnostics go to stderr, not stdout

    def test_json_output(self, capsys, tmp_path):
        cfg = write_config(tmp_path, self.CFG)
        dest = tmp_path / "r.json"
        code, _, _ = run(capsys, "sweep", "--config", cfg,
                         "--format", "json", "--out", str(dest))
        assert code == 0
        doc = json.loads(dest.read_text())
        assert {d["j"] for d in doc} == {0, 1}


class TestQuasimode:
    def test_field_dump(self, capsys, tmp_path):
        cfg = write_config(tmp_path, {"quasimode": {"h": 0.1, "n": 40}})
        code, out, err = run(capsys, "quasimode", "--config", cfg)
        assert code == 0
        rows = csv_rows(out)
        assert rows[0] == ["x", "y", "re", "im"]
        assert len(rows) == 1 + 40 * 40
        assert "residual" in err


def test_check_identities(capsys):
    code, out, _ = run(capsys, "check-identities")
    assert code == 0
    rows = csv_rows(out)
    assert rows[0] == ["check", "status"]
    assert all(r[1] == "ok" for r in rows[1:])
