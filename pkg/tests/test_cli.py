import json
import math

import pytest

from ips.errors import ConfigurationError
from ips.orchestrator import PositioningOrchestrator, run_cli
from ips.simulation.simulator import GRAVITY


@pytest.fixture
def cli(tmp_path):
    config = str(tmp_path / "missing_config.json")

    def run(*argv):
        return run_cli(["--config", config, *argv])

    return run


def write_trace(path, headings, rate=100, n=50):
    rows = ["t,ax,ay,az,heading"]
    samples = [(GRAVITY, headings[0])] * 10
    for heading in headings:
        samples += [(GRAVITY + 3.0 * math.sin(math.pi * k / n) ** 2, heading) for k in range(n)]
    samples += [(GRAVITY, headings[-1])] * 10
    rows += [f"{i / rate!r},0,0,{z!r},{h!r}" for i, (z, h) in enumerate(samples)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


class TestCommands:
    def test_build_map(self, cli, field_path, capsys):
        assert cli("build-map", str(field_path)) == 0
        assert capsys.readouterr().out.strip() == "9 reference points, 5 APs"

    def test_locate_exact_fingerprint(self, cli, field_path, capsys):
        assert cli("locate", str(field_path), "--rss", "-46", "-41", "-55", "-68", "-67", "--algorithm", "nn") == 0
        assert capsys.readouterr().out == "0,0\n"

    def test_locate_accepts_comma_separated_rss(self, cli, field_path, capsys):
        assert cli("locate", str(field_path), "--rss=-37,-42,-42,-65,-82", "--algorithm", "knn", "--k", "1") == 0
        assert capsys.readouterr().out == "2,1\n"

    def test_locate_wknn_default(self, cli, field_path, capsys):
        assert cli("locate", str(field_path), "--rss", "-50", "-45", "-60", "-60", "-70") == 0
        x, y = (float(v) for v in capsys.readouterr().out.strip().split(","))
        assert 0.0 <= x <= 4.0 and 0.0 <= y <= 3.0

    def test_track(self, cli, field_path, tmp_path, capsys):
        trace = write_trace(tmp_path / "trace.csv", [0.0, math.pi / 2])
        assert cli("track", str(field_path), "--rss=-46,-41,-55,-68,-67", "--trace", str(trace), "--k", "1") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,x,y"
        assert len(lines) == 4
        assert lines[1] == "0.0,0.0,0.0"

    def test_simulate_is_deterministic(self, cli, tmp_path, capsys):
        first, second = tmp_path / "run1", tmp_path / "run2"
        for out in (first, second):
            assert cli("simulate", "--seed", "42", "--test-samples", "100", "--out", str(out)) == 0
        names = sorted(p.name for p in first.iterdir())
        assert "summary.csv" in names
        assert {"cdf_nn.csv", "cdf_knn_k5.csv", "cdf_wknn_k5.csv", "trajectory_wknn_k5.csv"} <= set(names)
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes()
        assert capsys.readouterr().out.startswith("algorithm,k,count,mean,median,p90\n")

    def test_sweep_k(self, cli, capsys):
        assert cli("sweep-k", "--preset", "field-b8", "--k-values", "1", "3", "--folds", "3") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k,score"
        assert [line.split(",")[0] for line in lines[1:]] == ["1", "3"]

    def test_sweep_data(self, cli, tmp_path):
        out = tmp_path / "volume.csv"
        assert cli("sweep-data", "--preset", "field-b8", "--samples-per-point", "1", "2", "--folds", "3", "--out", str(out)) == 0
        assert out.read_text(encoding="utf-8").splitlines()[0] == "samples_per_point,score"

    def test_create_config(self, tmp_path):
        path = tmp_path / "conf" / "ips.json"
        assert run_cli(["--config", str(path), "create-config"]) == 0
        config = json.loads(path.read_text(encoding="utf-8"))
        assert config["locate"] == {"algorithm": "wknn", "k": 5, "epsilon": 1e-6}


class TestFailures:
    def test_unknown_flag(self, cli, field_path):
        assert cli("locate", str(field_path), "--rss", "-40", "--bogus") == 2

    def test_missing_file(self, cli, tmp_path, capsys):
        assert cli("build-map", str(tmp_path / "absent.csv")) == 1
        assert capsys.readouterr().err.startswith("error: ")

    def test_malformed_csv(self, cli, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("X,Y,AP1\n0,0,\n", encoding="utf-8")
        assert cli("build-map", str(bad)) == 1
        assert "must not be empty" in capsys.readouterr().err

    def test_rss_width_mismatch(self, cli, field_path, capsys):
        assert cli("locate", str(field_path), "--rss", "-40", "-50") == 1
        assert capsys.readouterr().out == ""

    def test_non_numeric_rss(self, cli, field_path):
        assert cli("locate", str(field_path), "--rss", "loud") == 1

    def test_invalid_config_section(self, tmp_path, field_path):
        path = tmp_path / "ips.json"
        path.write_text(json.dumps({"locate": {"k": 0}}), encoding="utf-8")
        assert run_cli(["--config", str(path), "locate", str(field_path), "--rss=-40,-41,-55,-68,-67"]) == 1


class TestOrchestratorConfig:
    def test_missing_file_falls_back_to_defaults(self, tmp_path):
        orchestrator = PositioningOrchestrator(str(tmp_path / "none.json"))
        assert orchestrator.locate_config.k == 5
        assert orchestrator.evaluation["folds"] == 10

    def test_simulation_overrides(self, tmp_path):
        path = tmp_path / "ips.json"
        path.write_text(json.dumps({"simulation": {"preset": "field-b8", "noise_sigma": 1.5}}), encoding="utf-8")
        config = PositioningOrchestrator(str(path)).sim_config(seed=3)
        assert (config.area, config.noise_sigma, config.seed) == ((17.0, 9.0), 1.5, 3)

    def test_invalid_simulation_section(self, tmp_path):
        path = tmp_path / "ips.json"
        path.write_text(json.dumps({"simulation": {"samples_per_point": 0}}), encoding="utf-8")
        with pytest.raises(ConfigurationError):
            PositioningOrchestrator(str(path)).sim_config()
