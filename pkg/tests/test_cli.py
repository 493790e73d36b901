import csv
import io
import json
import math

import numpy as np
import pytest

from fockops.cli import RunConfig, load_config, main, svg_plot

SEED = "20240601"


def read_rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def write_config(tmp_path, **cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_validate_default(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "orthonormality" in out and "all identities pass" in out


def test_validate_under_resolved_grid(tmp_path, capsys):
    assert main(["validate", "--config", write_config(tmp_path, angular_count=4)]) == 1
    assert "validation failed: orthonormality" in capsys.readouterr().out


@pytest.mark.parametrize("cfg", [{"alpha": 0}, {"alpha": -1.0}, {"bogus": 1}, {"degree": 0}, {"seed": -1}])
def test_bad_config_rejected(tmp_path, cfg, capsys):
    assert main(["validate", "--config", write_config(tmp_path, **cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_alpha_flag_rejected_before_work(capsys):
    assert main(["validate", "--alpha", "0"]) == 2


def test_unreadable_config(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "lem38", "--out", str(out)]) == 0
    rows = read_rows(out / "lem38" / "rows.csv")
    errs = [float(r["error_normalized"]) for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    manifest = json.loads((out / "lem38" / "manifest.json").read_text())
    assert manifest["trust_radius"] == pytest.approx(math.sqrt(40))
    assert "fixture_version" in manifest and manifest["passed"]
    assert all("tolerance" in a for a in manifest["assertions"])
    svg = (out / "lem38" / "profile.svg").read_text()
    assert svg.startswith("<svg") and "</svg>" in svg


def test_run_dichotomy_table(tmp_path):
    assert main(["run", "thm11", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "thm11" / "rows.csv")
    assert len(rows) == 6
    assert all(r["verdict"] == r["expected"] for r in rows)


def test_rerun_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "lem41", "--seed", SEED, "--out", str(tmp_path / d)]) == 0
        assert main(["run", "carleson-audit", "--out", str(tmp_path / d)]) == 0
    for name in ("lem41", "carleson-audit"):
        assert (tmp_path / "a" / name / "rows.csv").read_bytes() == (tmp_path / "b" / name / "rows.csv").read_bytes()


def test_config_overrides(tmp_path):
    cfg = write_config(tmp_path, betas=[10, 100], degree=20, tolerance=0.05, out=str(tmp_path / "from_cfg"))
    assert main(["run", "lem38", "--config", cfg]) == 0
    assert len(read_rows(tmp_path / "from_cfg" / "lem38" / "rows.csv")) == 2
    # --out beats the config entry
    assert main(["run", "lem38", "--config", cfg, "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "lem38" / "rows.csv").exists()


def test_env_overrides_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FOCKOPS_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", "sec7"]) == 0
    assert (tmp_path / "env" / "sec7" / "rows.csv").exists()


def test_unknown_experiment(tmp_path, capsys):
    assert main(["run", "thm99", "--out", str(tmp_path)]) == 2
    assert "unknown experiment" in capsys.readouterr().err


@pytest.mark.parametrize("name", ["lem41", "lem12"])
def test_randomized_needs_seed(tmp_path, name, capsys):
    assert main(["run", name, "--out", str(tmp_path)]) == 2
    assert "seed" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "sec7", "--out", str(blocker)]) == 3


def test_failing_assertion_exit_code(tmp_path):
    cfg = write_config(tmp_path, betas=[1, 10], tolerance=1e-9)
    assert main(["run", "lem38", "--config", cfg, "--out", str(tmp_path)]) == 1


def berezin_profile(tmp_path, flag, descriptor):
    assert main(["berezin", flag, json.dumps(descriptor), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "berezin" / "berezin.csv")
    z = np.array([complex(float(r["z_re"]), float(r["z_im"])) for r in rows])
    b = np.array([complex(float(r["B_re"]), float(r["B_im"])) for r in rows])
    assert (tmp_path / "berezin" / "profile.svg").exists()
    return z, b


def test_berezin_point_mass(tmp_path):
    z, b = berezin_profile(tmp_path, "--measure", {"type": "point_masses", "atoms": [{"location": 0, "weight": 1}]})
    np.testing.assert_allclose(b, np.exp(-np.abs(z) ** 2), atol=1e-12)


def test_berezin_constant_symbol(tmp_path):
    _, b = berezin_profile(tmp_path, "--symbol", {"type": "generalized_gaussian", "amp": 1})
    np.testing.assert_allclose(b, 1, atol=1e-12)


def test_berezin_shift_symbol(tmp_path):
    _, b = berezin_profile(tmp_path, "--symbol", {"type": "shift_symbol", "w": 1})
    np.testing.assert_allclose(np.abs(b), math.exp(-0.5), atol=1e-9)


@pytest.mark.parametrize("args", [
    ["--symbol", "{not json"],
    ["--symbol", '{"type": "nope"}'],
    ["--symbol", '{"type": "ball_indicator", "radius": 1, "colour": 2}'],
    [],
    ["--symbol", '{"type": "q_beta", "beta": 1}', "--measure", '{"type": "lattice", "epsilon": 1, "cutoff_radius": 14}'],
])
def test_berezin_schema_violations(tmp_path, args):
    assert main(["berezin", *args, "--out", str(tmp_path)]) == 2


def test_load_config_precedence(tmp_path):
    cfg = load_config(write_config(tmp_path, alpha=2.0, seed=5), {"seed": 9, "degree": None})
    assert cfg.alpha == 2.0 and cfg.seed == 9 and cfg.degree == 40
    with pytest.raises(ValueError):
        RunConfig.from_dict({"seed": 2 ** 64})


def test_svg_plot_handles_nonpositive_values():
    svg = svg_plot([("a", [0, 1, 2], [1.0, 0.0, 1e-3])], "t", "x")
    assert svg.startswith("<svg") and "nan" not in svg
