import json
import subprocess
import sys

import pytest

from wavecov.cli import RunManifest, main, parse_config, SCHEMAS, UsageError


def run(args, capsys=None):
    code = main([str(a) for a in args])
    return code


def manifest_of(path):
    return json.loads(path.read_text())["manifest"]


def test_derive_galilean(tmp_path):
    assert run(["derive", "galilean", 2, "--out", tmp_path]) == 0
    text = (tmp_path / "derive-galilean-2.txt").read_text().splitlines()
    assert text[-2] == "iħ∂_tΨ = −(ħ²/2m)∇²Ψ + VΨ"
    assert text[-1].startswith("# manifest: ")
    doc = json.loads((tmp_path / "derive-galilean-2.json").read_text())
    assert doc["reproduced"] and doc["verdict"] == "schrodinger"
    m = doc["manifest"]
    assert m["command"] == "derive" and m["parameters"]["symmetry"] == "galilean"
    assert m["outputs"] == ["derive-galilean-2.json", "derive-galilean-2.txt"]
    assert not list(tmp_path.glob(".*tmp"))


def test_derive_order3_verdict(tmp_path):
    assert run(["derive", "galilean", 3, "--out", tmp_path]) == 0
    assert json.loads((tmp_path / "derive-galilean-3.json").read_text())["verdict"] == "collapses to order 2"


def test_derive_lorentz_two_branches(tmp_path):
    assert run(["derive", "lorentz", 2, "--out", tmp_path]) == 0
    kg = json.loads((tmp_path / "derive-lorentz-2-kg.json").read_text())
    lcse = json.loads((tmp_path / "derive-lorentz-2-lcse.json").read_text())
    assert kg["verdict"] == "klein-gordon" and lcse["verdict"] == "lcse"


def test_derive_rotation(tmp_path):
    assert run(["derive", "rotation", 2, "--out", tmp_path]) == 0


def test_unsupported_combination(tmp_path, capsys):
    assert run(["derive", "lorentz", 4, "--out", tmp_path]) == 2
    assert "order 2 only" in capsys.readouterr().err


def test_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["derive", "galilean", "7"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["verify", "nonsense"])
    assert e.value.code == 2
    assert main([]) == 2


def test_derive_byte_identical(tmp_path):
    run(["derive", "galilean", 3, "--out", tmp_path / "a"])
    run(["derive", "galilean", 3, "--out", tmp_path / "b"])
    for name in ("derive-galilean-3.json", "derive-galilean-3.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# config -------------------------------------------------------------------------------

def test_parse_config():
    cfg = parse_config("# comment\neq = schrodinger\nk = 1..3, 5  # trailing\n", SCHEMAS["dispersion"])
    assert cfg["eq"] == ["schrodinger"] and cfg["k"] == [1, 2, 3, 5]
    assert cfg["tolerance"] == 1e-8


@pytest.mark.parametrize("text,line", [("eq = lcse\nbogus = 1\n", 2), ("\n\nk 1\n", 3), ("k = x\n", 1),
                                       ("k = 1\nk = 2\n", 2), ("c = inf\n", 1)])
def test_config_errors_carry_line(text, line):
    with pytest.raises(UsageError, match=f"line {line}"):
        parse_config(text, SCHEMAS["dispersion"])


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("eq = schrodinger\nwhat = 3\n")
    assert run(["verify", "dispersion", cfg, "--out", tmp_path]) == 2
    assert "line 2" in capsys.readouterr().err
    assert run(["verify", "dispersion", tmp_path / "missing.cfg", "--out", tmp_path]) == 2


def test_verify_dispersion_schrodinger(tmp_path):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("eq = schrodinger\nk = 1..8\n")
    assert run(["verify", "dispersion", cfg, "--out", tmp_path]) == 0
    lines = (tmp_path / "verify-dispersion.csv").read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    assert lines[1] == "eq,branch,k,omega_measured,omega_analytic,error,pass"
    assert len(lines) == 2 + 8
    m = manifest_of(tmp_path / "verify-dispersion.json")
    assert list(m["input_hashes"]) == ["d.cfg"]


def test_verify_failure_exit_1(tmp_path, capsys):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("eq = schrodinger\nk = 1\n")
    assert run(["verify", "dispersion", cfg, "--out", tmp_path, "--tolerance", "1e-30"]) == 1
    err = capsys.readouterr().err
    assert "FAIL eq=schrodinger" in err and "k=1.0" in err
    assert json.loads((tmp_path / "verify-dispersion.json").read_text())["passed"] is False


def test_verify_non_lattice_is_usage_error(tmp_path):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("k = 0.3\n")
    assert run(["verify", "dispersion", cfg, "--out", tmp_path]) == 2


@pytest.mark.parametrize("check", ["boost", "nr-limit", "squared-op"])
def test_verify_defaults_pass(tmp_path, check):
    assert run(["verify", check, "--out", tmp_path]) == 0


def test_verify_lorentz_boost(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("eq = lcse, klein_gordon\nv = 0, 3\n")
    assert run(["verify", "boost", cfg, "--out", tmp_path]) == 0


def test_nr_limit_needs_increasing_c(tmp_path):
    cfg = tmp_path / "n.cfg"
    cfg.write_text("c = 40, 20\n")
    assert run(["verify", "nr-limit", cfg, "--out", tmp_path]) == 2


def test_simulate(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("eq = lcse\npoints = 64\nlength = 40\nsnapshots = 2\n")
    assert run(["simulate", cfg, "--out", tmp_path]) == 0
    lines = (tmp_path / "simulate-lcse.csv").read_text().splitlines()
    assert lines[1] == "t,x,re,im" and len(lines) == 2 + 128
    assert run(["simulate", cfg, "--out", tmp_path, "--tolerance", "1"]) == 2


# replay -------------------------------------------------------------------------------

def test_replay_derive(tmp_path, capsys):
    run(["derive", "galilean", 3, "--out", tmp_path])
    capsys.readouterr()
    assert run(["replay", tmp_path / "derive-galilean-3.json"]) == 0
    out = capsys.readouterr().out
    assert "derive-galilean-3.json: identical" in out and "derive-galilean-3.txt: identical" in out


def test_replay_verify_from_csv(tmp_path, capsys):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("eq = lcse\nk = 0, 1\n")
    run(["verify", "dispersion", cfg, "--out", tmp_path])
    cfg.unlink()  # the manifest carries the resolved configuration
    capsys.readouterr()
    assert main(["--replay", str(tmp_path / "verify-dispersion.csv")]) == 0
    assert "verify-dispersion.csv: identical" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path):
    run(["derive", "rotation", 2, "--out", tmp_path])
    p = tmp_path / "derive-rotation-2.txt"
    p.write_text(p.read_text().replace("rotation", "rotatoin", 1))
    assert run(["replay", tmp_path / "derive-rotation-2.json"]) == 1


def test_replay_without_manifest(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{}")
    assert run(["replay", p]) == 2


def test_manifest_line_is_canonical():
    m = RunManifest("derive", {"b": 1, "a": 2})
    assert m.line().index('"a"') < m.line().index('"b"')


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "wavecov", "derive", "lorentz", "3"], capture_output=True,
                       text=True, cwd=tmp_path)
    assert r.returncode == 2
