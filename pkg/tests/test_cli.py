"""Tests for the `rcint` command-line interface."""

import csv
import io
import json

import pytest

from rcint.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, SUITES, main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestListSuites:
    def test_all_suites_listed_with_anchors(self, capsys):
        code, out, _ = _run(capsys, "list-suites")
        assert code == EXIT_OK
        for name in SUITES:
            assert name in out
        # spec'd anchor lines
        assert "gbc" in out and "Cor. 1.8" in out
        assert "cgb" in out and "Eq. (1.1)" in out
        assert "ambient-ricci" in out and "Lemma 3.1" in out


class TestRvol:
    def test_h4(self, capsys):
        code, out, _ = _run(capsys, "rvol", "--n", "4")
        assert code == EXIT_OK
        assert "V(H^4) = 4/3 * pi^2 = 13.15947253" in out

    def test_h6(self, capsys):
        code, out, _ = _run(capsys, "rvol", "--n", "6")
        assert code == EXIT_OK
        assert "-8/15 * pi^3" in out

    def test_odd_n_is_config_error(self, capsys):
        code, _, err = _run(capsys, "rvol", "--n", "5")
        assert code == EXIT_CONFIG


class TestVerify:
    def test_kronecker_passes(self, capsys):
        code, out, _ = _run(capsys, "verify", "kronecker")
        assert code == EXIT_OK
        assert "1/1 checks passed" in out

    def test_cgb_restricted_manifold(self, capsys):
        code, out, _ = _run(capsys, "verify", "cgb", "--manifold", "S2xS2")
        assert code == EXIT_OK
        assert "PASS" in out

    def test_impossible_tolerance_fails_numerically(self, capsys):
        code, out, err = _run(capsys, "verify", "cgb", "--manifold", "S2xS2",
                              "--tol", "1e-30")
        assert code == EXIT_NUMERICAL
        assert "FAIL" in out
        assert "numerical failure in:" in err

    def test_json_output_is_json_lines(self, capsys):
        code, out, _ = _run(capsys, "verify", "rvol", "--format", "json")
        assert code == EXIT_OK
        lines = [l for l in out.splitlines() if l.startswith("{")]
        assert lines
        for line in lines:
            doc = json.loads(line)
            assert doc["passed"] is True

    def test_json_output_depends_only_on_seed(self, capsys):
        _, out1, _ = _run(capsys, "verify", "pfaffian-identities", "--n", "4",
                          "--samples", "20", "--seed", "5", "--format", "json")
        _, out2, _ = _run(capsys, "verify", "pfaffian-identities", "--n", "4",
                          "--samples", "20", "--seed", "5", "--format", "json")
        json1 = [l for l in out1.splitlines() if l.startswith("{")]
        json2 = [l for l in out2.splitlines() if l.startswith("{")]
        assert json1 == json2

    def test_csv_output(self, capsys):
        code, out, _ = _run(capsys, "verify", "rvol", "--format", "csv")
        assert code == EXIT_OK
        header_on = out[:out.index("\n== summary ==")]
        rows = list(csv.DictReader(io.StringIO(header_on)))
        assert rows and all(r["passed"] == "True" for r in rows)

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "reports.jsonl"
        code, out, _ = _run(capsys, "verify", "kronecker", "--format", "json",
                            "--out", str(path))
        assert code == EXIT_OK
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["check_id"] == "kronecker-recursion"
        # summary still goes to stdout
        assert "checks passed" in out


class TestConfigErrors:
    def test_unknown_suite(self, capsys):
        code, _, err = _run(capsys, "verify", "nonsense")
        assert code == EXIT_CONFIG

    def test_unknown_manifold(self, capsys):
        code, _, _ = _run(capsys, "verify", "cgb", "--manifold", "K3")
        assert code == EXIT_CONFIG

    def test_bad_tol(self, capsys):
        code, _, _ = _run(capsys, "verify", "kronecker", "--tol", "-1")
        assert code == EXIT_CONFIG

    def test_bad_n(self, capsys):
        code, _, _ = _run(capsys, "verify", "pfaffian-identities", "--n", "7")
        assert code == EXIT_CONFIG

    def test_bad_jet_order(self, capsys):
        code, _, _ = _run(capsys, "verify", "kronecker", "--jet-order", "1")
        assert code == EXIT_CONFIG

    def test_no_suites(self, capsys):
        code, _, _ = _run(capsys, "verify")
        assert code == EXIT_CONFIG


class TestConfigFile:
    def test_config_file_supplies_suites(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"suites": ["kronecker"], "tol": 1e-12}))
        code, out, _ = _run(capsys, "verify", "--config", str(cfg))
        assert code == EXIT_OK
        assert "kronecker-recursion" in out

    def test_flags_win_over_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"suites": ["rvol"], "manifold": "K3"}))
        # explicit positional suite overrides config suites; the bad
        # manifold from the config still triggers validation
        code, _, _ = _run(capsys, "verify", "kronecker", "--config", str(cfg))
        assert code == EXIT_CONFIG

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code, _, _ = _run(capsys, "verify", "kronecker", "--config", str(cfg))
        assert code == EXIT_CONFIG

    def test_malformed_json_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        code, _, _ = _run(capsys, "verify", "kronecker", "--config", str(cfg))
        assert code == EXIT_CONFIG
