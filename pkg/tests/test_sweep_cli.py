"""Config validation, suite orchestration, and the command-line surface."""

import json
from pathlib import Path

import pytest

from gpudissect import cli, report, sweep
from gpudissect.errors import ConfigInvalid, ResultsUnreadable
from gpudissect.kernels.types import Workload

from importlib import resources

CONFIG_DIR = Path(str(resources.files("gpudissect").joinpath("data", "configs")))


def _minimal_config(**overrides):
    data = {
        "suite": {"name": "t", "family": "int32_mad"},
        "axes": {"chain_len": [1, 2]},
        "policy": {"repetitions": 5, "warmup_discards": 1, "seed": 1},
    }
    data.update(overrides)
    return data


class TestConfigParsing:
    def test_round_trip_is_fixed_point(self):
        for path in sorted(CONFIG_DIR.glob("*.toml")):
            config = sweep.load_config(path)
            again = sweep.parse_config(config.to_dict())
            assert again == config, path.name

    def test_empty_axes_named(self):
        with pytest.raises(ConfigInvalid) as err:
            sweep.parse_config(_minimal_config(axes={}))
        assert err.value.field == "axes"

    def test_inapplicable_axis_named(self):
        with pytest.raises(ConfigInvalid) as err:
            sweep.parse_config(_minimal_config(axes={"stride": [1, 4]}))
        assert err.value.field == "axes.stride"

    def test_unknown_family(self):
        bad = _minimal_config()
        bad["suite"]["family"] = "warp_drive"
        with pytest.raises(ConfigInvalid) as err:
            sweep.parse_config(bad)
        assert err.value.field == "suite.family"

    def test_unknown_output_format(self):
        with pytest.raises(ConfigInvalid) as err:
            sweep.parse_config(_minimal_config(output={"formats": ["xlsx"]}))
        assert err.value.field == "output.formats"

    def test_bad_policy(self):
        with pytest.raises(ConfigInvalid) as err:
            sweep.parse_config(_minimal_config(
                policy={"repetitions": 1, "warmup_discards": 1}))
        assert err.value.field == "policy"

    def test_json_config_accepted(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(_minimal_config()))
        config = sweep.load_config(path)
        assert config.family is Workload.INT32_MAD


class TestExpansion:
    def test_config_order_product(self):
        config = sweep.parse_config({
            "suite": {"name": "t", "family": "shared_stride"},
            "axes": {"stride": [1, 4], "warps": [1, 2]},
            "params": {"accesses": 32, "working_set_bytes": 16384},
            "policy": {"repetitions": 3, "warmup_discards": 1},
        })
        points = [(s.stride, s.warps) for s in sweep.expand(config)]
        assert points == [(1, 1), (1, 2), (4, 1), (4, 2)]

    def test_iterations_derived_from_total(self):
        config = sweep.parse_config(_minimal_config(
            axes={"chain_len": [1, 3, 64]},
            params={"total_instructions": 98304},
        ))
        specs = sweep.expand(config)
        assert [s.iterations for s in specs] == [98304, 32768, 1536]


class TestSuiteExecution:
    def test_artifacts_and_manifest(self, gb203, tmp_path):
        config = sweep.load_config(CONFIG_DIR / "pointer_chase.toml")
        paths = sweep.execute_suite(config, gb203, tmp_path)
        names = {p.name for p in paths}
        assert {"results.csv", "results.json", "hierarchy.json",
                "manifest.json"} <= names
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        for name in manifest["artifacts"]:
            assert (tmp_path / name).exists()

    def test_csv_columns_stable(self, gb203, tmp_path):
        config = sweep.load_config(CONFIG_DIR / "clock_overhead.toml")
        sweep.execute_suite(config, gb203, tmp_path)
        header = (tmp_path / "results.csv").read_text().splitlines()[0]
        from gpudissect.metrics import RESULT_COLUMNS
        assert header == ",".join(RESULT_COLUMNS)

    def test_power_column_na_when_unrecorded(self, gh100, tmp_path):
        config = sweep.load_config(CONFIG_DIR / "mma_power.toml")
        sweep.execute_suite(config, gh100, tmp_path)
        rows = json.loads((tmp_path / "results.json").read_text())["rows"]
        by_format = {r["mma_format"]: r["avg_power_w"] for r in rows}
        assert by_format["e4m3"] == 55.823
        assert by_format["e2m1"] is None

    def test_run_suite_error_is_machine_readable(self, gb203, tmp_path,
                                                 capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[suite]\nname='x'\nfamily='int32_mad'\n[axes]\n")
        rc = sweep.run_suite(bad, gb203, tmp_path / "out")
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "ConfigInvalid"
        assert err["field"] == "axes"


class TestCli:
    def test_run_and_analyze_verbs(self, tmp_path):
        out = tmp_path / "out"
        rc = cli.main(["run", str(CONFIG_DIR / "l2_warps.toml"),
                       "--fixture", "gb203", "--out", str(out)])
        assert rc == 0
        rc = cli.main(["analyze", "--kind", "saturation",
                       str(out / "results.json")])
        assert rc == 0

    def test_crossover_verb(self, tmp_path, capsys):
        for dev in ("gb203", "gh100"):
            rc = cli.main(["run", str(CONFIG_DIR / "l2_warps.toml"),
                           "--fixture", dev, "--out", str(tmp_path / dev)])
            assert rc == 0
        capsys.readouterr()
        rc = cli.main(["analyze", "--kind", "crossover",
                       str(tmp_path / "gb203" / "results.json"),
                       str(tmp_path / "gh100" / "results.json")])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert 18 <= out["crossover_x"] <= 22

    def test_gen_verb_writes_files(self, tmp_path, capsys):
        spec = {"workload": "pointer_chase", "working_set_bytes": 8192,
                "accesses": 64}
        rc = cli.main(["gen", "--spec", json.dumps(spec),
                       "--out", str(tmp_path)])
        assert rc == 0
        printed = capsys.readouterr().out.splitlines()
        assert Path(printed[0]).suffix == ".ptx"
        assert Path(printed[1]).suffix == ".json"

    def test_probe_and_bandwidth_verbs(self, capsys):
        assert cli.main(["probe", "--fixture", "gh100"]) == 0
        assert capsys.readouterr().out.strip() == str(227 * 1024)
        assert cli.main(["bandwidth", "--fixture", "gh100",
                         "--bytes", str(2 * 1024**3)]) == 0
        assert float(capsys.readouterr().out.strip()) == 15.8e12

    def test_verify_sass_verb(self, tmp_path, capsys):
        spec = {"workload": "int32_mad", "chain_len": 4, "iterations": 256}
        cli.main(["gen", "--spec", json.dumps(spec), "--out", str(tmp_path)])
        meta = capsys.readouterr().out.splitlines()[1]
        listing = Path(__file__).parent / "data" / "sass" / "int32_chain_sm120a.sass"
        rc = cli.main(["verify-sass", "--kernel-meta", meta,
                       "--listing", str(listing)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["integrity"]["passed"] is True

    def test_error_exit_nonzero(self, tmp_path, capsys):
        rc = cli.main(["run", str(tmp_path / "missing.toml"),
                       "--out", str(tmp_path)])
        assert rc != 0


class TestReports:
    def test_table_renders_pairs(self, gb203, tmp_path):
        config = sweep.load_config(CONFIG_DIR / "chain_fp64.toml")
        sweep.execute_suite(config, gb203, tmp_path / "res")
        paths = report.render_table([tmp_path / "res" / "results.json"],
                                    tmp_path / "rep")
        text = paths[0].read_text()
        assert "true/completion" in text
        assert "63.57" in text

    def test_plotdata_series_per_device(self, gb203, gh100, tmp_path):
        config = sweep.load_config(CONFIG_DIR / "pointer_chase.toml")
        results = []
        for name, backend in (("gb", gb203), ("gh", gh100)):
            sweep.execute_suite(config, backend, tmp_path / name)
            results.append(tmp_path / name / "results.json")
        paths = report.render_plotdata(results, tmp_path / "plot")
        dat = paths[0].read_text()
        assert dat.count("# series:") == len(results)

    def test_rendering_deterministic(self, gb203, tmp_path):
        config = sweep.load_config(CONFIG_DIR / "chain_int32.toml")
        sweep.execute_suite(config, gb203, tmp_path / "res")
        a = report.render_table([tmp_path / "res" / "results.json"],
                                tmp_path / "rep1")
        b = report.render_table([tmp_path / "res" / "results.json"],
                                tmp_path / "rep2")
        assert a[0].read_bytes() == b[0].read_bytes()

    def test_unreadable_results(self, tmp_path):
        bad = tmp_path / "nope.json"
        with pytest.raises(ResultsUnreadable):
            sweep.load_results(bad)
        bad.write_text("{}")
        with pytest.raises(ResultsUnreadable):
            sweep.load_results(bad)
