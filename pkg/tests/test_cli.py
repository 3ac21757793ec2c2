import json
import os

import numpy as np
import pytest

from hierevo import netmodel as nm
from hierevo.cli import dispatch, parse_config_file


def run_cli(*args):
    return dispatch(list(args))


class TestConfigParsing:
    def test_key_value_with_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\npop_size = 20\n\nproblem = and-xor-and\n")
        assert parse_config_file(str(path)) == {
            "pop_size": "20",
            "problem": "and-xor-and",
        }

    def test_missing_file_is_error(self, capsys):
        assert run_cli("evolve", "--config", "/no/such/file.cfg") == 2
        assert "invalid config" in capsys.readouterr().err

    def test_malformed_line(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("pop_size 20\n")
        assert run_cli("evolve", "--config", str(path)) == 2
        assert "expected 'key = value'" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("popsize = 20\n")
        assert run_cli("evolve", "--config", str(path)) == 2
        assert "invalid config key: popsize" in capsys.readouterr().err


class TestValidation:
    def test_negative_pop_size_names_key(self, tmp_path, capsys):
        code = run_cli(
            "evolve", "--pop-size", "-5", "--out-dir", str(tmp_path / "o"),
            "--trials", "1", "--generations", "1",
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "pop_size" in err

    def test_unknown_problem_named(self, tmp_path, capsys):
        code = run_cli(
            "evolve", "--problem", "foo", "--out-dir", str(tmp_path / "o"),
            "--trials", "1", "--generations", "1", "--pop-size", "10",
        )
        assert code == 2
        assert "unknown problem" in capsys.readouterr().err

    def test_missing_out_dir(self, capsys):
        code = run_cli("evolve", "--trials", "1", "--generations", "1", "--pop-size", "10")
        assert code == 2
        assert "out_dir" in capsys.readouterr().err

    def test_bad_integer_flag(self, tmp_path, capsys):
        code = run_cli(
            "evolve", "--pop-size", "ten", "--out-dir", str(tmp_path / "o"),
        )
        assert code == 2
        assert "pop_size" in capsys.readouterr().err


class TestEvolveCommand:
    def test_outputs_and_manifest(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "evolve", "--treatment", "pa", "--pop-size", "10", "--generations", "5",
            "--trials", "2", "--init-conn-min", "11", "--init-conn-max", "20",
            "--seed", "3", "--out-dir", str(out),
        )
        assert code == 0
        lines = (out / "generations.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 5
        assert (out / "trial0_best.json").exists()
        assert (out / "trial1_best.json").exists()
        nm.load_genome(out / "trial0_best.json")  # parses and validates
        manifest = (out / "manifest.txt").read_text()
        assert manifest.startswith("# hierevo")
        assert "pop_size = 10" in manifest
        assert "seed = 3" in manifest

    def test_manifest_reproduces_run(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = [
            "evolve", "--treatment", "pcc", "--pop-size", "10", "--generations", "4",
            "--trials", "1", "--init-conn-min", "11", "--init-conn-max", "20",
            "--seed", "11",
        ]
        assert run_cli(*args, "--out-dir", str(out1)) == 0
        # rerun purely from the manifest, overriding only the output directory
        assert run_cli(
            "evolve", "--config", str(out1 / "manifest.txt"), "--out-dir", str(out2)
        ) == 0
        assert (out1 / "generations.csv").read_bytes() == (out2 / "generations.csv").read_bytes()
        assert (out1 / "trial0_best.json").read_bytes() == (out2 / "trial0_best.json").read_bytes()

    def test_workers_do_not_change_output(self, tmp_path):
        outs = []
        for name, workers in (("w1", "1"), ("w2", "2")):
            out = tmp_path / name
            assert run_cli(
                "evolve", "--pop-size", "10", "--generations", "4", "--trials", "2",
                "--init-conn-min", "11", "--init-conn-max", "20",
                "--workers", workers, "--seed", "5", "--out-dir", str(out),
            ) == 0
            outs.append((out / "generations.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_workers_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HIEREVO_WORKERS", "2")
        out = tmp_path / "env"
        assert run_cli(
            "evolve", "--pop-size", "10", "--generations", "2", "--trials", "1",
            "--init-conn-min", "11", "--init-conn-max", "20", "--out-dir", str(out),
        ) == 0
        assert "workers = 2" in (out / "manifest.txt").read_text()


class TestMetricsCommand:
    def test_single_csv_line(self, tmp_path, capsys, perfect_and_xor_and):
        net = tmp_path / "net.json"
        nm.save_genome(perfect_and_xor_and, net)
        assert run_cli("metrics", "--network", str(net), "--problem", "and-xor-and") == 0
        line = capsys.readouterr().out.strip()
        fields = line.split(",")
        assert len(fields) == 5
        hierarchy, modularity, cost, solved, fraction = fields
        assert 0.0 <= float(hierarchy) <= 1.0
        assert float(cost) > 0
        assert int(solved) >= 4
        assert float(fraction) == int(solved) / 6

    def test_missing_network_file(self, capsys):
        assert run_cli("metrics", "--network", "/nope.json", "--problem", "and-xor-and") == 2
        assert "invalid network" in capsys.readouterr().err

    def test_invalid_document(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"shape": [8, 4, 4, 2, 1], "connections": [[0, 12, 1]],
                                   "biases": {str(n): 0 for n in range(8, 19)}}))
        assert run_cli("metrics", "--network", str(bad), "--problem", "and-xor-and") == 2
        assert "non-consecutive" in capsys.readouterr().err


class TestSampleCommand:
    def test_outputs(self, tmp_path):
        out = tmp_path / "s"
        assert run_cli(
            "sample", "--per-count", "2", "--count-min", "11", "--count-max", "13",
            "--seed", "4", "--out-dir", str(out),
        ) == 0
        lines = (out / "samples.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 3
        assert "per_count = 2" in (out / "manifest.txt").read_text()

    def test_range_validated(self, tmp_path, capsys):
        assert run_cli(
            "sample", "--count-min", "5", "--out-dir", str(tmp_path / "x"),
        ) == 2
        assert "count_min" in capsys.readouterr().err


class TestMapElitesCommand:
    def test_outputs(self, tmp_path):
        out = tmp_path / "me"
        assert run_cli(
            "map-elites", "--budget", "300", "--initial-batch", "200",
            "--init-conn-min", "11", "--init-conn-max", "25",
            "--seed", "2", "--out-dir", str(out),
        ) == 0
        lines = (out / "elites.csv").read_text().splitlines()
        assert lines[0] == "row,col,modularity,hierarchy,performance"
        assert len(lines) > 2
        elite_files = list(out.glob("elite_*.json"))
        assert len(elite_files) == len(lines) - 1

    def test_budget_validation(self, tmp_path, capsys):
        assert run_cli(
            "map-elites", "--budget", "10", "--initial-batch", "100",
            "--out-dir", str(tmp_path / "x"),
        ) == 2
        assert "budget" in capsys.readouterr().err


class TestStatsCommand:
    def test_ranksum(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        a.write_text("value\n1\n2\n3\n")
        b.write_text("value\n4\n5\n6\n")
        assert run_cli("stats", "ranksum", str(a), str(b), "--column", "value") == 0
        out = capsys.readouterr().out
        assert "U=0.0" in out
        assert "p=0.1" in out

    def test_summary_with_smoothing(self, tmp_path, capsys):
        f = tmp_path / "s.csv"
        f.write_text("x\n" + "\n".join(str(v) for v in [1, 9, 2, 8, 3]) + "\n")
        assert run_cli(
            "stats", "summary", str(f), "--column", "x", "--smooth", "3",
            "--resamples", "200", "--seed", "1",
        ) == 0
        out = capsys.readouterr().out
        assert out.startswith("median=3.0")

    def test_missing_column(self, tmp_path, capsys):
        f = tmp_path / "s.csv"
        f.write_text("x\n1\n")
        assert run_cli("stats", "summary", str(f), "--column", "y") == 2
        assert "invalid column" in capsys.readouterr().err


class TestEvolvabilityCommand:
    def test_tiny_run_with_injected_cap(self, tmp_path, capsys):
        # impossible phase 1 surfaces the shortfall as a one-line error
        code = run_cli(
            "evolvability", "--pop-size", "10", "--seeds-wanted", "1",
            "--runs-per-seed", "1", "--generation-cap", "2", "--trial-cap", "2",
            "--init-conn-min", "11", "--init-conn-max", "20",
            "--out-dir", str(tmp_path / "ev"),
        )
        assert code == 1
        assert "collected only" in capsys.readouterr().err
