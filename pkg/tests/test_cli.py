import os
import json
import numpy as np
import pytest
from lqg_mc.cli import main
from lqg_mc.config import OUTPUT_DIR_ENV, RunConfig, load_config
from lqg_mc.data_io import (
    get_file_path,
    load_csv_schema,
    read_csv,
    read_json,
    schema_columns,
    write_csv,
)
from lqg_mc.errors import ConfigError


def _read_bytes(path):
    with open(path, "rb") as fid:
        return fid.read()


def test_config_layers(tmp_path):
    config = RunConfig()
    assert config.seed == 0 and config.truncation("sphere")["min_max"] is None
    config_file = os.path.join(str(tmp_path), "config.json")
    values = {"seed": 7, "n_steps": 128, "truncations": {"disk": {"boundary_window": [1, 2]}}}
    with open(config_file, "w") as fid:
        json.dump(values, fid)
    config = load_config(config_file, {"seed": 9, "n_samples": None}, ["sphere.min_max=2.5"])
    # flags beat the file, the file beats the defaults
    assert config.seed == 9 and config.n_steps == 128 and config.n_samples == 1000
    assert config.truncation("disk")["boundary_window"] == [1, 2]
    assert config.truncation("sphere")["min_max"] == 2.5
    config.set_truncation_flag("levy.materialize=none")
    assert config.truncation("levy")["materialize"] == "none"


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig({"bogus": 1})
    with pytest.raises(ConfigError):
        RunConfig().set_truncation_flag("sphere.min_max")
    with pytest.raises(ConfigError):
        RunConfig().set_truncation_flag("nowhere.min_max=1")
    with pytest.raises(ConfigError):
        RunConfig().set_truncation_flag("sphere.bogus=1")
    with pytest.raises(ConfigError):
        load_config(overrides={"n_samples": 0})
    with pytest.raises(ConfigError):
        load_config(overrides={"gamma": 2.5})
    with pytest.raises(ConfigError):
        load_config(overrides={"seed": -1})
    bad_file = os.path.join(str(tmp_path), "bad.json")
    with open(bad_file, "w") as fid:
        fid.write("{not json")
    with pytest.raises(ConfigError):
        RunConfig.from_json(bad_file)


def test_resolved(monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/lqg_mc_env")
    resolved = load_config().resolved()
    assert resolved["output_dir"] == "/tmp/lqg_mc_env"
    # -cos(pi gamma^2 / 4) at gamma = sqrt(8/3)
    assert np.isclose(resolved["alpha"], 0.5)
    assert np.isclose(resolved["epsilon_reg"], 4.0 * 2.0 * np.pi / 64)
    assert abs(resolved["c0"] - 0.5984) < 1e-4
    assert np.isclose(resolved["truncations"]["bottleneck"]["r"], -8.0 / np.sqrt(8.0 / 3.0))
    # the sphere truncation follows the lower edge of the area window
    assert np.isclose(resolved["truncations"]["sphere"]["min_max"], 0.05)
    # the stored config keeps the derived keys unset
    assert load_config().to_dict()["alpha"] is None
    wide = load_config(truncation_flags=["sphere.area_window=[4, 400]"]).resolved()
    assert np.isclose(wide["truncations"]["sphere"]["min_max"], 0.1)


def test_csv_schema(tmp_path):
    schema = load_csv_schema()
    for name, entry in schema.items():
        assert entry["columns"] and entry["description"]
    assert schema_columns("loops") == ["sample", "t", "x", "y"]
    with pytest.raises(ConfigError):
        schema_columns("nothing")
    assert get_file_path("out", "loops") == os.path.join("out", "loops.csv")
    assert get_file_path("out", "field") % ("sphere_bessel", 3) == os.path.join(
        "out", "fields", "sphere_bessel_0003.h5"
    )
    table = np.array([[0.1, 1.0 / 3.0], [np.pi, -2e-300]])
    output_file = os.path.join(str(tmp_path), "sub", "table.csv")
    write_csv(output_file, table, ["a", "b"])
    columns, loaded = read_csv(output_file)
    assert columns == ["a", "b"]
    assert np.array_equal(loaded, table)


def test_verify_scaling(tmp_path):
    out1 = os.path.join(str(tmp_path), "run1")
    out2 = os.path.join(str(tmp_path), "run2")
    assert main(["verify", "scaling", "--output-dir", out1]) == 0
    assert main(["verify", "scaling", "--output-dir", out2]) == 0
    report = read_json(get_file_path(out1, "report"))
    assert report["passed"] and report["suite"] == "scaling"
    manifest = read_json(get_file_path(out1, "manifest"))
    assert "report.json" in manifest["hashes"]
    assert manifest["seed"] == 0 and "verify" in manifest["timings"]
    # same seed, same bytes
    assert _read_bytes(get_file_path(out1, "report")) == _read_bytes(
        get_file_path(out2, "report")
    )


def test_loop_command(tmp_path, n_samples=20, n_steps=64):
    args = ["loop", "--alpha", "0.5", "--n-samples", str(n_samples), "--n-steps", str(n_steps)]
    out1 = os.path.join(str(tmp_path), "serial")
    out2 = os.path.join(str(tmp_path), "parallel")
    assert main(args + ["--output-dir", out1]) == 0
    assert main(args + ["--output-dir", out2, "--threads", "2"]) == 0
    columns, table = read_csv(get_file_path(out1, "loops"))
    assert columns == ["sample", "t", "x", "y"]
    assert table.shape == (n_samples * (n_steps + 1), 4)
    assert table[:, 2:].min() >= -0.1
    columns, hist = read_csv(get_file_path(out1, "loop_midpoint_hist"))
    assert hist[:, 2].sum() == n_samples and hist[:, 3].sum() == n_samples
    manifest = read_json(get_file_path(out1, "manifest"))
    assert manifest["results"]["n_loops"] == n_samples
    assert set(manifest["hashes"]) == {"loops.csv", "loop_midpoint_hist.csv"}
    # thread count does not change the output
    assert _read_bytes(get_file_path(out1, "loops")) == _read_bytes(get_file_path(out2, "loops"))


def test_exit_codes(tmp_path):
    config_file = os.path.join(str(tmp_path), "config.json")
    with open(config_file, "w") as fid:
        json.dump({"bogus": 1}, fid)
    out = os.path.join(str(tmp_path), "out")
    assert main(["verify", "scaling", "-c", config_file, "--output-dir", out]) == 2
    assert main(["loop", "--n-samples", "0", "--output-dir", out]) == 2
    assert main(["verify", "nonsense", "--output-dir", out]) == 1
    blocker = os.path.join(str(tmp_path), "blocker")
    with open(blocker, "w") as fid:
        fid.write("not a folder")
    assert main(["verify", "scaling", "--output-dir", os.path.join(blocker, "sub")]) == 1
    with pytest.raises(SystemExit):
        main(["teleport"])
