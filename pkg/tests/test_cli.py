import json
import subprocess
import sys

import pytest

from rfl import __version__
from rfl.cli import main
from rfl.errors import ConfigInvalid
from rfl.experiments import (
    PRESETS,
    ExperimentConfig,
    load_trajectory,
    parse_config_text,
    preset,
    run_experiment,
    validate,
    verify_all,
)


def payload_files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "timing.json"}


# -- config parsing -----------------------------------------------------------------

def test_parse_config_text():
    text = "# comment\nnx = 32\n dt = 1e-4  # trailing\nu0_expr = bump2\n\n"
    assert parse_config_text(text) == {"nx": 32, "dt": 1e-4, "u0_expr": "bump2"}


@pytest.mark.parametrize("text,key", [("nx 32", None), ("nx = 1\nnx = 2", "nx"), (" = 3", None)])
def test_parse_config_errors(text, key):
    with pytest.raises(ConfigInvalid) as exc:
        parse_config_text(text)
    assert exc.value.key == key


@pytest.mark.parametrize("module,params,key", [
    ("flow", {"nx": 4}, "nx"),
    ("flow", {"cfl_limit": 2.0}, "cfl_limit"),
    ("flow", {"bogus": 1}, "bogus"),
    ("flow", {"u0_expr": "saddle"}, "u0_expr"),
    ("flow", {"dt": 0.1}, "dt"),
    ("flow", {"geometry": "sphere", "t_end": 0.5}, "t_end"),
    ("quantum", {"case": "hydrogen"}, "case"),
    ("weyl", {"n": "big"}, "n"),
])
def test_validation_names_the_offending_key(module, params, key):
    with pytest.raises(ConfigInvalid) as exc:
        validate(ExperimentConfig("x", module, params))
    assert exc.value.key == key


def test_config_requires_name_and_module():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig("", "flow")
    with pytest.raises(ConfigInvalid):
        ExperimentConfig("x", "plot")


def test_cfl_violation_is_rejected_before_stepping(tmp_path):
    cfg = ExperimentConfig("bad", "entropy", {"dt": 0.1}, tmp_path / "bad")
    with pytest.raises(ConfigInvalid) as exc:
        run_experiment(cfg)
    assert exc.value.key == "dt"
    assert not (tmp_path / "bad").exists()


def test_config_hash_is_stable_and_sensitive():
    a = ExperimentConfig("x", "weyl", {"n": 32, "density": "bump1"})
    b = ExperimentConfig("x", "weyl", {"density": "bump1", "n": 32})
    c = ExperimentConfig("x", "weyl", {"density": "bump1", "n": 64})
    assert a.config_hash() == b.config_hash() != c.config_hash()


# -- experiments --------------------------------------------------------------------

def test_weyl_uniform_preset_is_exact(tmp_path):
    s = run_experiment(preset("weyl-uniform").with_output(tmp_path))
    assert s.passed
    for key in ("rw_discrepancy", "decomposition", "divergence_vs_fisher", "lap_rho_integral"):
        assert next(a for a in s.assertions if a.name == key).measured == 0.0


def test_entropy_sphere_preset(tmp_path):
    s = run_experiment(preset("entropy-sphere").with_output(tmp_path))
    assert s.passed
    assert s.residuals["res_N"] <= 1e-6 and s.residuals["res_F"] <= 1e-6
    header = (tmp_path / "functionals.csv").read_text().splitlines()[0]
    assert header == "t,F,N,mass,RHS13,dNdt,dFdt,res_N,res_F"


def test_report_embeds_hash_and_version(tmp_path):
    cfg = preset("quantum-gaussian").with_output(tmp_path)
    run_experiment(cfg)
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["config_hash"] == cfg.config_hash()
    assert data["version"] == __version__
    for a in data["assertions"]:
        assert {"name", "measured", "tolerance", "passed"} <= set(a)
    report = json.loads((tmp_path / "quantum_report.json").read_text())
    assert len(report["residuals"]["fisher_triple"]) == 3


def test_runs_are_byte_identical(tmp_path):
    for name in ("flow-bump2", "weyl-bump1"):
        run_experiment(preset(name).with_output(tmp_path / "a" / name))
        run_experiment(preset(name).with_output(tmp_path / "b" / name))
    assert payload_files(tmp_path / "a") == payload_files(tmp_path / "b")


def test_flow_then_entropy_from_stored_trajectory(tmp_path):
    params = {"nx": 16, "ny": 16, "t_end": 0.1, "u0_expr": "bump1"}
    run_experiment(ExperimentConfig("f", "flow", params, tmp_path / "f"))
    traj = load_trajectory(tmp_path / "f")
    assert len(traj) == len(list((tmp_path / "f" / "trajectory").glob("*.csv")))
    s = run_experiment(ExperimentConfig("e", "entropy", {"trajectory": str(tmp_path / "f")}, tmp_path / "e"))
    inline = run_experiment(ExperimentConfig("e", "entropy", params, tmp_path / "e2"))
    assert s.residuals == inline.residuals


def test_verify_all_empty_and_tampered(tmp_path):
    assert verify_all([], tmp_path) == []
    tampered = ExperimentConfig("t", "quantum", {"case": "gaussian", "tol_fisher": 1e-30})
    (s,) = verify_all([tampered], tmp_path)
    assert not s.passed


def test_preset_table_is_complete():
    modules = {m for m, _ in PRESETS.values()}
    assert modules == {"flow", "entropy", "quantum", "weyl"}
    with pytest.raises(ConfigInvalid):
        preset("nope")


# -- command line ------------------------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    assert main(["verify-all", "--out", str(tmp_path), "--presets", "weyl-uniform"]) == 0
    assert main(["verify-all", "--out", str(tmp_path), "--presets", ""]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("dt = 0.5\n")
    assert main(["flow", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "dt" in capsys.readouterr().err
    bad.write_text("oops\n")
    assert main(["entropy", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["entropy", "--trajectory", str(tmp_path / "missing")]) == 2


def test_cli_assertion_failure_exits_one(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nx = 16\nny = 16\nt_end = 0.1\ntol_N = 1e-12\n")
    assert main(["entropy", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert main(["report", str(tmp_path)]) == 1


def test_cli_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RFL_OUTPUT_DIR", str(tmp_path))
    assert main(["weyl", "--density", "bump1", "--n", "32"]) == 1  # 32^2 misses the 1e-3 gap
    assert (tmp_path / "weyl-bump1" / "weyl_report.json").exists()
    assert main(["quantum", "--case", "ho-ground", "--n", "512"]) == 0
    assert (tmp_path / "quantum-ho-ground" / "quantum_report.json").exists()


def test_cli_report_paths(tmp_path):
    target = tmp_path / "q" / "out.json"
    assert main(["quantum", "--case", "gaussian", "--report", str(target)]) == 0
    assert json.loads(target.read_text())["case"] == "gaussian"
    assert main(["weyl", "--density", "random-smooth", "--seed", "3",
                 "--report", str(tmp_path / "w")]) == 0
    assert (tmp_path / "w" / "weyl_report.json").exists()


def test_cli_flow_sphere_and_report(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("r0 = 1.0\ndt = 1e-3\nt_end = 0.1\n")
    assert main(["flow", "--geometry", "sphere", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "flow-sphere" / "times.csv").exists()
    assert main(["report", str(tmp_path)]) == 0
    assert "PASS flow-sphere" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "rfl", "verify-all", "--presets", "quantum-mass", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "PASS quantum-mass" in proc.stdout
