import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finitebath import cli
from finitebath.config import KEYS, parse_config, parse_lines
from finitebath.errors import IoError, ParseError, ValidationError
from finitebath.experiments import PRESETS, SWEEP_PRESETS
from finitebath.io import format_value, parse_value, read_csv, read_kv, write_csv, write_kv


# -- config -------------------------------------------------------------------

def test_parse_preset():
    cfg = parse_config("command=scenario\npreset=M02100")
    assert cfg.command == "scenario" and cfg.preset == "M02100"
    assert cfg.bath_spec() == PRESETS["M02100"].spec


def test_parse_odd_n():
    with pytest.raises(ValidationError) as err:
        parse_config("command=solve\nspec=equally_spaced\nN=101")
    assert err.value.key == "N"
    assert str(err.value).startswith("N:")


def test_parse_tol_override():
    assert parse_config("command=solve\ntol=1e-13").tol == 1e-13
    assert parse_config("command=solve\ntol = 1e-9  # looser").tol == 1e-9


def test_parse_comments_and_blanks():
    cfg = parse_config("# header\n\ncommand = fit   # trailing\n  g = 0.8\n")
    assert cfg.command == "fit" and cfg.g == 0.8


def test_parse_errors_carry_line():
    with pytest.raises(ParseError) as err:
        parse_config("command=fit\nnot a pair\n")
    assert err.value.line == 2
    with pytest.raises(ParseError) as err:
        parse_config("command=fit\n\nbogus=1\n")
    assert err.value.line == 3 and "bogus" in str(err.value)
    with pytest.raises(ParseError):
        parse_config("=3")


def test_missing_required_keys():
    with pytest.raises(ValidationError) as err:
        parse_config("N=102")
    assert err.value.key == "command"
    with pytest.raises(ValidationError) as err:
        parse_config("command=solve\nspec=explicit\nbath_freqs=1.0")
    assert err.value.key == "couplings"


def test_parse_value_errors():
    with pytest.raises(ValidationError) as err:
        parse_config("command=solve\nN=abc")
    assert err.value.key == "N"
    for text, key in [("command=nope", "command"), ("command=solve\nspec=foo", "spec"),
                      ("command=solve\nsolver=lapack", "solver"),
                      ("command=solve\np=2.5", "p"), ("command=solve\ng=-1", "g"),
                      ("command=solve\nspec=random\nlo=2", "hi"),
                      ("command=solve\nspec=random\nseed=-3", "seed"),
                      ("command=ensemble\nseeds=1", "seeds"),
                      ("command=sweep\ng_grid=0.2,0.1", "g_grid"),
                      ("command=scenario\npreset=M02100\nN=50", "N"),
                      ("command=scenario\npreset=XX", "preset")]:
        with pytest.raises(ValidationError) as err:
            parse_config(text)
        assert err.value.key == key, text


def test_lists_and_ranges():
    cfg = parse_config("command=ensemble\nseeds=0..3,7\nN_values=12, 22")
    assert cfg.seeds == (0, 1, 2, 3, 7) and cfg.N_values == (12, 22)
    cfg = parse_config("command=solve\nspec=explicit\nv1=1.2\nbath_freqs=0.9,1.1\n"
                       "couplings=0.1,0.2")
    assert cfg.bath_spec().build().size == 3


def test_sweep_preset():
    cfg = parse_config("command=sweep\npreset=Mvar100")
    assert SWEEP_PRESETS[cfg.preset] == (102, 1.0)


# -- io -----------------------------------------------------------------------

def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1 / 3)) == repr(1 / 3)
    assert format_value(np.int64(4)) == "4"
    assert format_value(True) == "true" and format_value(None) == ""


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=True))
def test_float_round_trip(x):
    assert parse_value(format_value(x)) == x or (x == 0 and parse_value(format_value(x)) == 0)
    assert float(format_value(x)) == x


def test_csv_header_only(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b"], [])
    assert p.read_bytes() == b"a,b\n"


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    rows = [(i, float(x), float(y)) for i, (x, y) in enumerate(rng.normal(size=(50, 2)))]
    p = tmp_path / "t.csv"
    write_csv(p, ["k", "x", "y"], rows)
    header, back = read_csv(p)
    assert header == ["k", "x", "y"]
    assert [tuple(r) for r in back] == rows
    assert b"\r" not in p.read_bytes()


def test_csv_deterministic(tmp_path):
    rows = [(1, 0.1 + 0.2), (2, 1e-300)]
    write_csv(tmp_path / "a.csv", ["k", "v"], rows)
    write_csv(tmp_path / "b.csv", ["k", "v"], rows)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_io_errors(tmp_path):
    with pytest.raises(IoError):
        write_csv(tmp_path / "missing" / "x.csv", ["a"], [])
    with pytest.raises(IoError):
        read_csv(tmp_path / "nope.csv")
    with pytest.raises(IoError):
        write_kv(tmp_path / "missing" / "x.txt", [])


def test_kv_round_trip(tmp_path):
    items = [("b.x", 0.30000000000000004), ("a.flag", False), ("c.none", None), ("d", 3)]
    write_kv(tmp_path / "f.txt", items)
    assert list(read_kv(tmp_path / "f.txt").items()) == items


# -- cli ----------------------------------------------------------------------

def run(argv, env=None):
    return cli.main(argv) if env is None else _with_env(argv, env)


def _with_env(argv, env):
    old = {k: os.environ.get(k) for k in env}
    os.environ.update(env)
    try:
        return cli.main(argv)
    finally:
        for k, v in old.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


def test_help_lists_presets_and_keys(capsys):
    with pytest.raises(SystemExit) as ex:
        cli.main(["--help"])
    assert ex.value.code == 0
    out = capsys.readouterr().out
    for name in list(PRESETS) + list(SWEEP_PRESETS):
        assert name in out
    for key in KEYS:
        assert f"  {key} " in out
    assert "FINITEBATH_OUT" in out


def test_build_and_solve(tmp_path):
    assert run(["build", "--N", "4", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "hamiltonian.csv")
    assert header == ["index", "frequency", "coupling"] and len(rows) == 4
    assert run(["solve", "--N", "4", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "spectrum.csv")
    assert header == ["k", "omega_k", "weight_k"]
    assert sum(r[2] for r in rows) == pytest.approx(1, abs=1e-12)


def test_evolve_outputs(tmp_path):
    assert run(["evolve", "--N", "4", "--steps", "5", "--t_end", "2",
                "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "trace.csv")
    assert header == ["t", "re_sigma", "im_sigma", "E1"] and len(rows) == 5
    assert rows[0][3] == pytest.approx(1, abs=1e-12)
    assert not (tmp_path / "amplitudes.csv").exists()
    assert run(["evolve", "--N", "4", "--steps", "3", "--solver", "dense",
                "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "amplitudes.csv")
    assert len(rows) == 12


def test_fit_output(tmp_path):
    assert run(["fit", "--out", str(tmp_path)]) == 0
    kv = read_kv(tmp_path / "fits.txt")
    assert kv["decay.tau_d"] == pytest.approx(3.232, rel=0.05)
    assert kv["lorentzian.converged"] is True


def test_scenario_outputs_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = scenario\npreset = M02100\nout = ignored\n")
    assert run(["--config", str(cfg), "--out", str(a)]) == 0
    assert run(["--config", str(cfg), "--out", str(b)]) == 0
    names = ["spectrum.csv", "weights.csv", "trace_short.csv", "trace_long.csv", "fits.txt"]
    for n in names:
        assert (a / "M02100" / n).read_bytes() == (b / "M02100" / n).read_bytes()
    man = read_kv(a / "M02100" / "manifest.txt")
    assert man["config.preset"] == "M02100" and "finitebath.version" in man
    assert "scenario.seed" in man


def test_output_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"command=build\nN=4\nout={tmp_path / 'from_config'}\n")
    monkeypatch.chdir(tmp_path)
    assert cli.main(["--config", str(cfg)]) == 0
    assert (tmp_path / "from_config" / "hamiltonian.csv").exists()
    monkeypatch.setenv("FINITEBATH_OUT", str(tmp_path / "from_env"))
    assert cli.main(["--config", str(cfg)]) == 0
    assert (tmp_path / "from_env" / "hamiltonian.csv").exists()
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "hamiltonian.csv").exists()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("command=build\nN=4\n")
    assert run(["--config", str(cfg), "--N", "6", "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "hamiltonian.csv")
    assert len(rows) == 6


def test_sweep_and_ensemble(tmp_path):
    assert run(["sweep", "--N", "10", "--g_grid", "0.1,0.5", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header == ["g", "k", "weight"] and len(rows) == 20
    assert run(["ensemble", "--N_values", "10,20", "--seeds", "0..2", "--window_end", "60",
                "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "ensemble.csv")
    assert len(rows) == 6
    _, summary = read_csv(tmp_path / "ensemble_summary.csv")
    assert [r[0] for r in summary] == [10, 20]


def test_failures_exit_nonzero(tmp_path, capsys):
    assert run(["solve", "--N", "101", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "N:" in err
    assert run(["--config", str(tmp_path / "missing.cfg")]) == 1
    assert len(capsys.readouterr().err.splitlines()) == 1
    with pytest.raises(SystemExit) as ex:
        cli.main(["bogus"])
    assert ex.value.code == 2
    assert len(capsys.readouterr().err.splitlines()) == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["build", "--N", "4", "--out", str(blocker / "sub")]) == 1


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "finitebath.cli", "build", "--N", "4",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "hamiltonian.csv").read_text().startswith("index,frequency,coupling\n")


def test_parse_lines_later_wins():
    raw = parse_lines("N=4\nN=6\n")
    assert raw["N"] == ("6", 2)
