"""Command-line interface tests, mostly through the real subprocess entry."""

import filecmp
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from gbsdense.cli import main
from gbsdense.distributions import distribution_to_csv, enumerate_distribution
from gbsdense.experiments import DeviceSection, LossSection, build_device_state
from gbsdense.graphs import WeightedGraph
from gbsdense.search import SearchCurve


DEVICE_CONFIG = """
experiment = "device-reproduction"

[run]
master_seed = 3

[device]
num_bins = 6
occupied_bins = 3
transmissivity = 0.5

[device.loss]
switching = 0.8
detection = 0.6
in_loop = ["switching"]

[source]
tanh_values = [0.25, 0.35]
reference_tanh = 0.25
pump_phase = 3.141592653589793

[analysis]
photon_counts = [2]
subgraph_sizes = [2]
node_window = 4
max_budget = 15
budget_grid = "dense"
repeats = 10
density_budget = 5
bootstrap_resamples = 20
"""

SWEEP_CONFIG = """
experiment = "loss-sweep"

[run]
master_seed = 5

[graph]
instances = 1
small_nodes = 4
small_edge_prob = 0.9
large_nodes = 5
large_edge_prob = 0.3
attach_count = 3

[sweep]
transmissions = [1.0, 0.6]
mean_photons_per_mode = [0.1]
photons = 4

[analysis]
subgraph_size = 4
repeats = 20
max_budget = 40
budget_grid = "geometric"
budget_points = 10
threshold_fraction = 0.75
"""


def run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "gbsdense", *args], capture_output=True, text=True
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture()
def triangle(tmp_path):
    adjacency = np.array([[0.0, 1.0, 0.5], [1.0, 0.0, 0.8], [0.5, 0.8, 0.0]])
    path = tmp_path / "triangle.json"
    path.write_text(WeightedGraph.from_adjacency(adjacency).to_json())
    return path


class TestHafnian:
    def test_all_ones_prints_three(self, tmp_path):
        path = tmp_path / "ones4.json"
        path.write_text(json.dumps({"matrix": [[1, 1, 1, 1]] * 4}))
        code, out, err = run_cli("hafnian", "--matrix", str(path))
        assert (code, out, err) == (0, "3\n", "")

    def test_json_format(self, tmp_path):
        path = tmp_path / "pair.json"
        path.write_text(json.dumps([[0, 2], [2, 0]]))
        code, out, _ = run_cli("hafnian", "--matrix", str(path), "--format", "json")
        assert code == 0
        assert json.loads(out) == {"hafnian": {"im": 0.0, "re": 2.0}}

    def test_complex_entries(self, tmp_path):
        path = tmp_path / "cplx.json"
        path.write_text(json.dumps({"matrix": [[0, [0, 1]], [[0, 1], 0]]}))
        code, out, _ = run_cli("hafnian", "--matrix", str(path), "--format", "json")
        assert code == 0
        assert json.loads(out)["hafnian"] == {"im": 1.0, "re": 0.0}

    def test_nonsquare_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"matrix": [[1, 2, 3]]}))
        assert run_cli("hafnian", "--matrix", str(path))[0] == 2

    def test_odd_dimension_gives_zero(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps([[0.0]]))
        assert run_cli("hafnian", "--matrix", str(path)) == (0, "0\n", "")

    def test_oversize_matrix_hits_guard(self, tmp_path):
        path = tmp_path / "big.json"
        path.write_text(json.dumps({"matrix": [[0.0] * 32 for _ in range(32)]}))
        code, _, err = run_cli("hafnian", "--matrix", str(path))
        assert code == 3
        assert "numerical guard" in err

    def test_missing_file(self, tmp_path):
        assert run_cli("hafnian", "--matrix", str(tmp_path / "none.json"))[0] == 2


class TestArgumentHandling:
    def test_unknown_flag_rejected(self, tmp_path):
        path = tmp_path / "ones4.json"
        path.write_text(json.dumps({"matrix": [[1, 1], [1, 1]]}))
        code, _, err = run_cli("hafnian", "--matrix", str(path), "--bogus")
        assert code == 2
        assert "usage" in err.lower()

    def test_unknown_command_rejected(self):
        assert run_cli("frobnicate")[0] == 2

    def test_no_command_rejected(self):
        assert run_cli()[0] == 2

    def test_version_flag(self):
        code, out, _ = run_cli("--version")
        assert code == 0
        assert out.startswith("gbsdense ")

    def test_help_exits_cleanly(self):
        assert run_cli("--help")[0] == 0

    def test_negative_seed_rejected(self, triangle, tmp_path):
        pool = tmp_path / "pool.txt"
        pool.write_text("0-1\n")
        code = run_cli(
            "search", "--graph", str(triangle), "--pool", str(pool), "--k", "2", "--seed", "-4"
        )[0]
        assert code == 2

    def test_main_callable_in_process(self, tmp_path, capsys):
        path = tmp_path / "ones.json"
        path.write_text(json.dumps({"matrix": [[1, 1], [1, 1]]}))
        assert main(["hafnian", "--matrix", str(path)]) == 0
        assert capsys.readouterr().out == "1\n"


class TestEncode:
    def test_mean_photon_target(self, triangle):
        code, out, _ = run_cli("encode", "--graph", str(triangle), "--mean-photons", "0.6")
        assert code == 0
        payload = json.loads(out)
        assert 0.0 < payload["scale"] < 1.0
        assert payload["mean_photons"] == pytest.approx(0.6)
        assert len(payload["squeezers"]) == 3
        assert len(payload["transfer"]["re"]) == 3
        assert payload["schedule"]["m"] == 3

    def test_scale_flag(self, triangle):
        code, out, _ = run_cli("encode", "--graph", str(triangle), "--scale", "0.3")
        assert code == 0
        assert json.loads(out)["scale"] == pytest.approx(0.3)

    def test_flag_conflicts(self, triangle):
        assert run_cli("encode", "--graph", str(triangle))[0] == 2
        assert (
            run_cli("encode", "--graph", str(triangle), "--scale", "0.3", "--mean-photons", "1")[0]
            == 2
        )

    def test_unreachable_target_hits_guard(self, triangle):
        code, _, err = run_cli("encode", "--graph", str(triangle), "--mean-photons", "1e15")
        assert code == 3
        assert "numerical guard" in err

    def test_output_file(self, triangle, tmp_path):
        out_path = tmp_path / "encoded.json"
        code, out, _ = run_cli(
            "encode", "--graph", str(triangle), "--scale", "0.3", "--out", str(out_path)
        )
        assert code == 0 and out == ""
        assert json.loads(out_path.read_text())["scale"] == pytest.approx(0.3)


class TestSearch:
    def test_pool_search_round_trip(self, triangle, tmp_path):
        pool = tmp_path / "pool.txt"
        pool.write_text("0-1\n0-2\n1-2\n")
        code, out, _ = run_cli(
            "search",
            "--graph",
            str(triangle),
            "--pool",
            str(pool),
            "--k",
            "2",
            "--max-budget",
            "5",
            "--repeats",
            "10",
            "--format",
            "json",
        )
        assert code == 0
        curve = SearchCurve.from_json(out)
        assert list(curve.budgets) == [1, 2, 3, 4, 5]
        assert curve.metadata["seed_source"] == "file"

    def test_seeded_determinism(self, triangle, tmp_path):
        pool = tmp_path / "pool.txt"
        pool.write_text("0-1\n0-2\n")
        args = (
            "search",
            "--graph",
            str(triangle),
            "--pool",
            str(pool),
            "--k",
            "2",
            "--max-budget",
            "8",
            "--repeats",
            "12",
            "--seed",
            "9",
        )
        assert run_cli(*args) == run_cli(*args)

    def test_pattern_size_mismatch(self, triangle, tmp_path):
        pool = tmp_path / "pool.txt"
        pool.write_text("0-1-2\n")
        assert run_cli("search", "--graph", str(triangle), "--pool", str(pool), "--k", "2")[0] == 2


class TestBundleCommands:
    def test_device_repro_byte_identical(self, tmp_path):
        cfg = tmp_path / "device.toml"
        cfg.write_text(DEVICE_CONFIG)
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert run_cli("device-repro", "--config", str(cfg), "--out", str(first))[0] == 0
        assert run_cli("device-repro", "--config", str(cfg), "--out", str(second))[0] == 0
        names = sorted(os.listdir(first))
        assert names == sorted(os.listdir(second))
        for name in names:
            assert filecmp.cmp(first / name, second / name, shallow=False), name

    def test_loss_sweep_bundle(self, tmp_path):
        cfg = tmp_path / "sweep.toml"
        cfg.write_text(SWEEP_CONFIG)
        out = tmp_path / "sweep"
        code, stdout, _ = run_cli("loss-sweep", "--config", str(cfg), "--out", str(out))
        assert code == 0
        assert str(out) in stdout
        assert {"fig7a.csv", "fig7b.csv", "fig7c.csv"} <= set(os.listdir(out))

    def test_config_kind_mismatch(self, tmp_path):
        cfg = tmp_path / "sweep.toml"
        cfg.write_text(SWEEP_CONFIG)
        assert run_cli("device-repro", "--config", str(cfg), "--out", str(tmp_path / "x"))[0] == 2

    def test_malformed_config(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(DEVICE_CONFIG + "\nmystery = 1\n")
        assert run_cli("device-repro", "--config", str(cfg), "--out", str(tmp_path / "x"))[0] == 2

    def test_missing_config_file(self, tmp_path):
        assert (
            run_cli("device-repro", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path / "x"))[0]
            == 2
        )

    def test_bad_threads(self, tmp_path):
        cfg = tmp_path / "device.toml"
        cfg.write_text(DEVICE_CONFIG)
        code = run_cli(
            "device-repro", "--config", str(cfg), "--out", str(tmp_path / "x"), "--threads", "0"
        )[0]
        assert code == 2


class TestSqueezingFitCommand:
    def test_recovers_squeezing(self, tmp_path):
        cfg_path = tmp_path / "device.toml"
        cfg_path.write_text(DEVICE_CONFIG)
        device = DeviceSection(6, 3, 0.5, 0.0, LossSection(1.0, 0.8, 1.0, 0.6, ("switching",)))
        observed = enumerate_distribution(
            build_device_state(device, 0.25, np.pi), 2, collision_free=False
        )
        observed_path = tmp_path / "observed.csv"
        observed_path.write_text(distribution_to_csv(observed))
        code, out, _ = run_cli(
            "fit-squeezing",
            "--config",
            str(cfg_path),
            "--observed",
            str(observed_path),
            "--grid",
            "0.15:0.35:5",
        )
        assert code == 0
        assert out.splitlines()[0] == "# best_tanh=0.25"

    def test_json_format(self, tmp_path):
        cfg_path = tmp_path / "device.toml"
        cfg_path.write_text(DEVICE_CONFIG)
        device = DeviceSection(6, 3, 0.5, 0.0, LossSection(1.0, 0.8, 1.0, 0.6, ("switching",)))
        observed = enumerate_distribution(
            build_device_state(device, 0.3, np.pi), 2, collision_free=False
        )
        observed_path = tmp_path / "observed.csv"
        observed_path.write_text(distribution_to_csv(observed))
        code, out, _ = run_cli(
            "fit-squeezing",
            "--config",
            str(cfg_path),
            "--observed",
            str(observed_path),
            "--grid",
            "0.2:0.4:3",
            "--format",
            "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["best_tanh"] == pytest.approx(0.3)
        assert len(payload["scan"]) == 3

    def test_bad_grid(self, tmp_path):
        cfg_path = tmp_path / "device.toml"
        cfg_path.write_text(DEVICE_CONFIG)
        observed_path = tmp_path / "observed.csv"
        device = DeviceSection(6, 3, 0.5, 0.0, LossSection(1.0, 0.8, 1.0, 0.6, ("switching",)))
        observed = enumerate_distribution(
            build_device_state(device, 0.3, np.pi), 2, collision_free=False
        )
        observed_path.write_text(distribution_to_csv(observed))
        code = run_cli(
            "fit-squeezing", "--config", str(cfg_path), "--observed", str(observed_path), "--grid", "oops"
        )[0]
        assert code == 2
