import hashlib
import json

import pytest

from zktorus.cli import main
from zktorus.config import DEFAULTS, ConfigError, load_config, parse_grid, parse_list
from zktorus.resonance import resonance

SMALL = {
    "solve": "[solve]\ngrid = 32x32\nT = 0.05\nm = 8\nobserver_stride = 10\n",
    "resonance": "[resonance]\nB = 6\nbrute_force_max = 6\n",
    "residual-scan": "[residual-scan]\ns = 2.0\nm = 8, 16, 32\nn_times = 3\n",
    "kernel": ("[kernel]\nN = 4\nn_t = 3\nn_grid = 32\ncompare_points = 1\n"
               "profile_N = 4\nprofile_n_t = 3\n"),
    "strichartz": ("[strichartz]\nN = 2, 4\ncount = 2\nn_time = 9\noversample = 2\n"
                   "s_prime = 0.75\nglobal_bands = 2, 4\nglobal_count = 2\nglobal_n_time = 17\n"
                   "commutator_bands = 4\ncommutator_s = 1.0\ncommutator_count = 5\n"),
    "illposed": ("[illposed]\ngrid = 64x64\nT = 0.02\nm = 8, 16\nobserver_stride = 10\n"
                 "t_fit_min = 0.01\n"),
}


def write_cfg(tmp_path, command, out):
    path = tmp_path / f"{command}.ini"
    path.write_text(f"[run]\nout = {out}\nseed = 11\n\n" + SMALL[command])
    return path


def run(tmp_path, command, name="a", extra=()):
    out = tmp_path / name
    code = main([command, "--config", str(write_cfg(tmp_path, command, out)), *extra])
    return code, out


# -- config parsing ----------------------------------------------------------

def test_parse_helpers():
    assert parse_grid("256x128") == (256, 128)
    assert parse_grid(" 64 X 64 ") == (64, 64)
    with pytest.raises(ValueError):
        parse_grid("64*64")
    assert parse_list("1, 2,3", int) == (1, 2, 3)
    with pytest.raises(ValueError):
        parse_list(" , ", float)


def test_defaults_without_file():
    cfg = load_config("illposed")
    assert cfg.params == DEFAULTS["illposed"]
    assert cfg.seed == DEFAULTS["run"]["seed"] and cfg.source is None


def test_file_values_are_typed(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nseed = 5\n[solve]\ngrid = 64x32\ndt = 1e-3\nm = 8, 16\ninit = random\n"
                    "[kernel]\nN = 4\n")
    cfg = load_config("solve", path)
    assert cfg.params["grid"] == (64, 32) and cfg.params["dt"] == 1e-3
    assert cfg.params["m"] == (8, 16) and cfg.params["init"] == "random"
    assert cfg.seed == 5
    assert cfg.source_sha256 == hashlib.sha256(path.read_bytes()).hexdigest()


def test_overrides_win(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[solve]\ndt = 1e-3\n")
    cfg = load_config("solve", path, {"dt": 2e-4, "grid": "16x16", "m": "4", "seed": 3})
    assert cfg.params["dt"] == 2e-4 and cfg.params["grid"] == (16, 16)
    assert cfg.params["m"] == (4,) and cfg.seed == 3
    assert set(cfg.overrides) == {"dt", "grid", "m", "seed"}


def test_unknown_key_names_key_and_line(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nseed = 1\n\n[solve]\ndt = 1e-3\ntimestep = 2\n")
    with pytest.raises(ConfigError, match=r"c\.ini:6: unknown key 'timestep' in section \[solve\]"):
        load_config("solve", path)


def test_unknown_section_names_line(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[solve]\ndt = 1e-3\n[solver]\ndt = 1\n")
    with pytest.raises(ConfigError, match=r":3: unknown section \[solver\]"):
        load_config("solve", path)


def test_bad_value_names_key(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[solve]\ngrid = big\n")
    with pytest.raises(ConfigError, match=r":2: bad value for 'grid'"):
        load_config("solve", path)


def test_keys_are_case_sensitive(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[solve]\nt = 1\n")
    with pytest.raises(ConfigError, match="unknown key 't'"):
        load_config("solve", path)


def test_inapplicable_flag_rejected():
    with pytest.raises(ConfigError, match="--dt does not apply to command 'resonance'"):
        load_config("resonance", overrides={"dt": 1e-3})


def test_cli_exit_code_on_config_error(tmp_path, capsys):
    assert main(["resonance", "--dt", "0.1", "--out", str(tmp_path)]) == 2
    assert "does not apply" in capsys.readouterr().err
    assert main(["solve", "--seed", "-1", "--out", str(tmp_path)]) == 2


# -- runs and manifests ------------------------------------------------------

def check_manifest(out, command):
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == command
    for key in ("code_version", "python", "numpy", "config", "input_hashes", "outputs",
                "timings_s", "criteria", "all_passed"):
        assert key in man
    assert man["outputs"]
    for entry in man["outputs"]:
        path = out / entry["file"]
        assert path.exists()
        assert hashlib.sha256(path.read_bytes()).hexdigest() == entry["sha256"]
    assert man["input_hashes"]["config_file"]
    return man


@pytest.mark.parametrize("command", ["solve", "resonance", "residual-scan"])
def test_runs_are_byte_identical(tmp_path, command):
    code_a, out_a = run(tmp_path, command, "a")
    code_b, out_b = run(tmp_path, command, "b")
    assert code_a == code_b == 0
    man = check_manifest(out_a, command)
    assert man["all_passed"] is True
    csvs = sorted(p.name for p in out_a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_resonance_csv_content(tmp_path):
    _, out = run(tmp_path, "resonance")
    lines = (out / "resonances.csv").read_text().splitlines()
    assert lines[0] == "m,m1,n,n1,value"
    rows = [tuple(int(v) for v in line.split(",")) for line in lines[1:]]
    assert rows and all(resonance(m, m1, n, n1) == 0 and v == 0 for m, m1, n, n1, v in rows)
    assert len(set(rows)) == len(rows)


def test_illposed_rejects_short_horizon(tmp_path, capsys):
    path = tmp_path / "c.ini"
    path.write_text("[illposed]\ngrid = 64x64\nT = 0.02\nm = 8, 16\n")
    assert main(["illposed", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "t_fit_min" in capsys.readouterr().err


@pytest.mark.parametrize("command", ["kernel", "strichartz", "illposed"])
def test_other_runs_write_manifest(tmp_path, command):
    code, out = run(tmp_path, command)
    assert code in (0, 1)
    man = check_manifest(out, command)
    assert (code == 0) == man["all_passed"]


def test_flag_overrides_recorded(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["resonance", "--out", str(out), "--seed", "9"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["seed"] == 9
    assert man["cli_overrides"]["seed"] == 9
    text = capsys.readouterr().out
    assert "PASS" in text and "manifest:" in text
