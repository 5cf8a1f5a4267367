import json

import pytest

from lehardy.cli import main
from lehardy.config import load_config
from lehardy.errors import ConfigError
from lehardy.grid import ShapeSpec


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--quiet"])


def test_constants_one_dimension(tmp_path, capsys):
    assert run(tmp_path, "constants", "--N", "1") == 0
    assert "17.8885" in capsys.readouterr().out
    assert json.loads((tmp_path / "constants.json").read_text())["N"] == 1


def test_certify_exit_codes(tmp_path, capsys):
    assert run(tmp_path / "a", "certify", "--shape", "disk", "--h", "0.0625") == 0
    assert capsys.readouterr().out.strip() == "PASS"
    assert (tmp_path / "a" / "certificate.json").exists()
    assert (tmp_path / "a" / "limit_potential.csv").exists()
    assert run(tmp_path / "b", "certify", "--h", "0.0625", "--potential", "scale:3") == 1
    assert "FAIL(ADMISSIBILITY)" in capsys.readouterr().out
    assert run(tmp_path / "c", "certify", "--q", "3") == 2
    assert "q:" in capsys.readouterr().err


def test_certificate_is_deterministic(tmp_path):
    for sub in ("x", "y"):
        assert run(tmp_path / sub, "certify", "--h", "0.0625", "--seed", "7") == 0
    a = json.loads((tmp_path / "x" / "certificate.json").read_text())
    b = json.loads((tmp_path / "y" / "certificate.json").read_text())
    for c in (a, b):
        c.pop("timings", None)
        c.pop("elapsed", None)
    assert a == b


def test_solve_and_eigen(tmp_path, capsys):
    assert run(tmp_path, "solve", "--shape", "interval", "--h", "0.03125") == 0
    assert "sup norm 0.5" in capsys.readouterr().out
    assert (tmp_path / "density.csv").exists()
    assert run(tmp_path, "eigen", "--shape", "square", "--h", "0.0625") == 0
    assert "lambda_1 19.6" in capsys.readouterr().out


def test_config_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[shape]\nkind = ball\ncenter = 0, 0\nradius = 2\n\n"
                   "[common]\nh = 0.125\nseed = 0x10\n\n[certify]\ndeltas = 1, 2\n")
    cfg = load_config(ini, "certify")
    assert cfg.shape == ShapeSpec.ball((0.0, 0.0), 2.0) and cfg.h == 0.125 and cfg.seed == 16
    assert cfg.deltas == (1.0, 2.0)
    assert load_config(ini, "solve").deltas == (0.5, 1.0, 2.0, 4.0)


def test_config_errors_name_the_line(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[common]\nh = 0.125\nbogus = 1\n")
    with pytest.raises(ConfigError, match=r"bad.ini:3: common.bogus"):
        load_config(ini, "solve")
    assert main(["solve", "--config", str(ini)]) == 2
    assert "bogus" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini", "solve")


def test_verify_suite_single_criterion(tmp_path):
    assert run(tmp_path, "verify-suite", "--criteria", "9") == 0
    assert json.loads((tmp_path / "suite.json").read_text())[0]["passed"]
    assert run(tmp_path, "verify-suite", "--criteria", "99") == 2
