import numpy as np
import pytest

from regenlasso.cli import EXIT_CONFIG, EXIT_OK, EXIT_REGEN, main
from regenlasso.config import (
    OUTPUT_DIR_ENV,
    ConfigError,
    RunConfig,
    load_config,
    parse_alpha_grid,
    validate_config,
)

from conftest import CONFIGS


def errors(cfg, **kw):
    return [m for level, m in validate_config(cfg, **kw) if level == "error"]


def test_bundled_configs_are_clean():
    for name in ("diabetes.cfg", "boston.cfg", "diabetes_eb.cfg"):
        assert validate_config(load_config(CONFIGS / name)) == []


def test_validation_errors():
    base = load_config(CONFIGS / "diabetes.cfg")
    assert any("epsilon" in m for m in errors(load_config(CONFIGS / "diabetes.cfg", ["epsilon=0"])))
    assert any("minimum" in m for m in errors(load_config(CONFIGS / "diabetes.cfg", ["t=50"])))
    assert errors(load_config(CONFIGS / "diabetes.cfg", ["data=/no/such.csv"]))
    assert errors(load_config(CONFIGS / "diabetes.cfg", ["lam=none"]))
    assert errors(load_config(CONFIGS / "diabetes.cfg", ["alpha_grid=0.1,0.7"]))
    assert errors(load_config(CONFIGS / "diabetes.cfg", ["standardize=zscore"]))
    assert errors(load_config(CONFIGS / "diabetes.cfg", ["hyper_source=magic"]))
    assert not errors(base)


def test_low_regeneration_warning():
    cfg = load_config(CONFIGS / "diabetes.cfg")
    found = validate_config(cfg, mean_psi=1e-4)
    assert [level for level, _ in found] == ["warning"]
    assert "lambda=0.00431" in found[0][1]
    assert validate_config(cfg, mean_psi=0.5) == []


def test_overrides_and_types(tmp_path):
    cfg = load_config(CONFIGS / "boston.cfg", ["seed=7", "alpha=0.05", "output-dir=/tmp/x"])
    assert cfg.seed == 7 and cfg.alpha == 0.05 and cfg.output_dir == "/tmp/x"
    assert cfg.response == "medv"
    with pytest.raises(ConfigError, match="unknown"):
        load_config(None, ["nonsense=1"])
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(None, ["t=many"])
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        load_config(None, ["novalue"])


def test_relative_data_path_resolves_against_config(tmp_path):
    (tmp_path / "d.csv").write_text("a,y\n1,2\n")
    path = tmp_path / "c.cfg"
    path.write_text("data = d.csv  # comment\n")
    assert load_config(path).data == str((tmp_path / "d.csv").resolve())


def test_alpha_grid_forms():
    np.testing.assert_allclose(parse_alpha_grid("geom:0.001:0.3:30"), np.geomspace(0.001, 0.3, 30))
    np.testing.assert_allclose(parse_alpha_grid("lin:0.1:0.2:3"), [0.1, 0.15, 0.2])
    np.testing.assert_allclose(parse_alpha_grid("0.01, 0.04"), [0.01, 0.04])


def test_output_dir_resolution(monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/env/out")
    assert RunConfig().resolved().output_dir == "/env/out"
    assert RunConfig(output_dir="/x").resolved().output_dir == "/x"
    monkeypatch.delenv(OUTPUT_DIR_ENV)
    assert RunConfig().resolved().output_dir == "regenlasso-out"


def test_cli_validate(capsys):
    assert main(["validate", str(CONFIGS / "diabetes.cfg")]) == EXIT_OK
    assert "config ok" in capsys.readouterr().out
    assert main(["validate", str(CONFIGS / "diabetes.cfg"), "--set", "epsilon=0"]) == EXIT_CONFIG
    assert main(["validate", str(CONFIGS / "missing.cfg")]) == EXIT_CONFIG
    assert main(["validate", str(CONFIGS / "diabetes.cfg"), "--set", "bogus=1"]) == EXIT_CONFIG


def test_cli_bad_data_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,2\nz,3\n" + "1,2\n" * 20)
    code = main(
        ["run", str(CONFIGS / "diabetes.cfg"), "--set", f"data={bad}", "--set", "response=y",
         "--output-dir", str(tmp_path / "o")]
    )
    assert code == EXIT_CONFIG
    assert "load_csv" in capsys.readouterr().err


def test_cli_insufficient_regenerations(tmp_path, capsys):
    code = main(
        ["run", str(CONFIGS / "diabetes.cfg"), "--set", "t=100", "--set", "pilot_length=200",
         "--output-dir", str(tmp_path / "o")]
    )
    assert code == EXIT_REGEN
    assert "two regenerations" in capsys.readouterr().err


def test_cli_run_synthetic(synthetic_cfg, tmp_path, capsys):
    out = tmp_path / "cli"
    assert main(["run", str(synthetic_cfg), "--output-dir", str(out), "--seed", "3"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "regenerations" in text and "alpha*" in text
    for name in ("report.md", "report.csv", "alpha_profile.csv", "bounds_curve.csv", "trace.csv",
                 "config_resolved.txt", "hyperparams.txt"):
        assert (out / name).is_file()
    assert "seed = 3" in (out / "config_resolved.txt").read_text()


def test_cli_tune_and_eb_stop_early(synthetic_cfg, tmp_path):
    out = tmp_path / "tune"
    assert main(["tune", str(synthetic_cfg), "--output-dir", str(out)]) == EXIT_OK
    assert (out / "alpha_profile.csv").is_file() and not (out / "trace.csv").exists()
    out = tmp_path / "eb"
    code = main(
        ["eb", str(synthetic_cfg), "--output-dir", str(out), "--set", "hyper_source=empirical_bayes",
         "--set", "eb_samples=200", "--set", "eb_burn=20", "--set", "eb_iters=5"]
    )
    assert code == EXIT_OK
    assert (out / "hyperparams.txt").is_file() and not (out / "alpha_profile.csv").exists()
