import csv
import hashlib
import json
import subprocess
import sys

import pytest

from membranesim.cli import main


def run_cli(args):
    return main(args)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSimulate:
    def test_uniform_run(self, tmp_path, capsys):
        out = tmp_path / "est.csv"
        code = run_cli(
            [
                "simulate",
                "--state",
                "0.2,0.3,0.5",
                "--density",
                "uniform",
                "--samples",
                "200000",
                "--seed",
                "7",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3 and lines[0].startswith("outcome 1:")
        rows = read_csv(out)
        assert [r["outcome_index"] for r in rows] == ["1", "2", "3"]
        estimates = [float(r["p_hat"]) for r in rows]
        assert estimates == pytest.approx([0.2, 0.3, 0.5], abs=0.01)
        counts = [int(r["count"]) for r in rows]
        assert sum(counts) == 200000

    def test_byte_identical_reruns(self, tmp_path):
        digests = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            args = [
                "simulate",
                "--state",
                "0.7,0.3",
                "--samples",
                "100000",
                "--seed",
                "3",
                "--out",
                str(out),
            ]
            assert run_cli(args) == 0
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_json_format_and_schema(self, tmp_path):
        out = tmp_path / "est.json"
        code = run_cli(
            [
                "simulate",
                "--state",
                "0.5,0.5",
                "--samples",
                "65536",
                "--seed",
                "1",
                "--format",
                "json",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        payload = read_json(out)
        assert payload["schema_version"] == 1
        assert payload["command"] == "simulate"
        assert sum(o["count"] for o in payload["outcomes"]) == 65536

    def test_density_shorthand(self, tmp_path):
        out = tmp_path / "c.csv"
        code = run_cli(
            [
                "simulate",
                "--state",
                "0.5,0.5",
                "--density",
                "cellular1d:bu",
                "--samples",
                "20000",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out)
        assert float(rows[0]["p_hat"]) == 1.0

    def test_density_inline_json(self, tmp_path):
        out = tmp_path / "d.csv"
        spec = json.dumps({"type": "dirac", "points": [[0.6, 0.1, 0.3]]})
        code = run_cli(
            [
                "simulate",
                "--state",
                "0.33,0.33,0.34",
                "--density",
                spec,
                "--samples",
                "1000",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out)
        assert [r["count"] for r in rows] == ["0", "1000", "0"]

    def test_missing_seed_is_a_validation_error(self, capsys):
        code = run_cli(["simulate", "--state", "0.5,0.5"])
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_bad_state_is_a_validation_error(self, capsys):
        code = run_cli(
            ["simulate", "--state", "0.5,0.6", "--seed", "1", "--samples", "10"]
        )
        assert code == 2


class TestUniversalExact:
    def test_single_query(self, tmp_path, capsys):
        out = tmp_path / "u.json"
        code = run_cli(
            ["universal-exact", "--cells", "10", "--position", "7", "--out", str(out)]
        )
        assert code == 0
        payload = read_json(out)
        assert payload["average"] == "3/10"
        assert payload["uniform"] == "3/10"
        assert payload["equal"] is True
        assert "equal=true" in capsys.readouterr().out

    def test_table(self, tmp_path):
        out = tmp_path / "table.json"
        code = run_cli(
            ["universal-exact", "--cells", "8", "--table", "--out", str(out)]
        )
        assert code == 0
        payload = read_json(out)
        assert all(row["equal"] for row in payload["rows"])

    def test_position_required_without_table(self, capsys):
        assert run_cli(["universal-exact", "--cells", "6"]) == 2


class TestIdentities:
    def test_table_all_pass(self, tmp_path, capsys):
        out = tmp_path / "ids.json"
        code = run_cli(["identities", "--n-max", "40", "--out", str(out)])
        assert code == 0
        payload = read_json(out)
        assert len(payload["rows"]) == 41
        assert all(r["equal_a"] and r["equal_b"] for r in payload["rows"])
        assert "yes" in capsys.readouterr().out

    def test_csv_format(self, tmp_path):
        out = tmp_path / "ids.csv"
        assert run_cli(
            ["identities", "--n-max", "5", "--format", "csv", "--out", str(out)]
        ) == 0
        rows = read_csv(out)
        assert rows[3]["lhs_a"] == "17/4"
        assert rows[3]["equal_a"] == "true"


class TestApproximate:
    def test_ramp_report(self, tmp_path):
        out = tmp_path / "a.json"
        code = run_cli(
            [
                "approximate",
                "--target",
                "ramp",
                "--m",
                "64",
                "--ell",
                "64",
                "--position",
                "0.5",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        payload = read_json(out)
        assert payload["p_exact"] == pytest.approx(0.25)
        assert payload["abs_error"] < 0.02

    def test_unknown_target(self, capsys):
        # argparse rejects the choice itself, with the same exit status
        with pytest.raises(SystemExit) as exc:
            run_cli(["approximate", "--target", "ramp2"])
        assert exc.value.code == 2


class TestRobustnessCommand:
    def test_analytic_csv(self, tmp_path):
        out = tmp_path / "rob.csv"
        code = run_cli(
            [
                "robustness",
                "--state",
                "0.495,0.505",
                "--delta",
                "0.01,-0.01",
                "--epsilon-grid",
                "0.05,0.1,0.5,1.0",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 4
        for row in rows:
            assert float(row["ratio"]) == pytest.approx(1.0, abs=1e-9)

    def test_mc_needs_seed(self, capsys):
        code = run_cli(
            [
                "robustness",
                "--state",
                "0.495,0.505",
                "--delta",
                "0.01,-0.01",
                "--epsilon-grid",
                "0.5",
                "--method",
                "mc",
            ]
        )
        assert code == 2


class TestDiracLimitCommand:
    def test_run(self, tmp_path):
        out = tmp_path / "dl.json"
        code = run_cli(
            [
                "dirac-limit",
                "--state",
                "0.333,0.333,0.334",
                "--points",
                "0.5,0.3,0.2;0.2,0.5,0.3",
                "--epsilons",
                "0.1,0.02",
                "--samples",
                "20000",
                "--seed",
                "5",
                "--format",
                "json",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        payload = read_json(out)
        assert payload["target_distribution"] == [0.5, 0.0, 0.5]
        assert payload["results"][-1]["tv_distance"] < 0.05

    def test_overlapping_balls_fail_validation(self, capsys):
        code = run_cli(
            [
                "dirac-limit",
                "--state",
                "0.333,0.333,0.334",
                "--points",
                "0.34,0.33,0.33;0.33,0.34,0.33",
                "--epsilons",
                "0.5",
                "--samples",
                "100",
                "--seed",
                "5",
            ]
        )
        assert code == 2


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {"state": "0.7,0.3", "samples": 50000, "seed": 9, "format": "json"}
            )
        )
        out = tmp_path / "out.json"
        code = run_cli(
            ["simulate", "--config", str(cfg), "--out", str(out)]
        )
        assert code == 0
        payload = read_json(out)
        assert payload["n_samples"] == 50000

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"state": "0.7,0.3", "samples": 50000, "seed": 9}))
        out = tmp_path / "out.json"
        code = run_cli(
            [
                "simulate",
                "--config",
                str(cfg),
                "--samples",
                "10000",
                "--format",
                "json",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert read_json(out)["n_samples"] == 10000

    def test_missing_config_file(self, capsys):
        code = run_cli(
            ["simulate", "--state", "0.5,0.5", "--seed", "1", "--config", "/nope.json"]
        )
        assert code == 2


class TestJsonRoundTrip:
    @pytest.mark.parametrize(
        "args",
        [
            ["universal-exact", "--cells", "6", "--position", "2"],
            ["identities", "--n-max", "8"],
            ["approximate", "--m", "8", "--ell", "8"],
        ],
    )
    def test_reports_reparse(self, tmp_path, args):
        out = tmp_path / "r.json"
        assert run_cli(args + ["--format", "json", "--out", str(out)]) == 0
        payload = read_json(out)
        assert payload["schema_version"] == 1
        assert json.loads(json.dumps(payload, sort_keys=True)) == payload


def test_thread_env_var_sets_the_default(monkeypatch):
    from membranesim.cli import _default_threads

    monkeypatch.setenv("MEMBRANESIM_THREADS", "2")
    assert _default_threads() == 2
    monkeypatch.delenv("MEMBRANESIM_THREADS")
    assert _default_threads() >= 1


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "e.json"
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "membranesim.cli",
            "universal-exact",
            "--cells",
            "5",
            "--position",
            "2",
            "--out",
            str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert read_json(out)["average"] == "3/5"
