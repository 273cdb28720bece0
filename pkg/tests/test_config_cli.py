import json
import math

import pytest

from bornfield.cli import EXIT_AUDIT_INVALID, EXIT_BLOWUP, EXIT_CONFIG, main
from bornfield.config import ConfigError, RunConfig, parse_config
from bornfield.maxwell_fdtd import GridConfig
from bornfield.reporting import run_command

FULL_AUDIT = """\
command = "audit"
scenario = "power-0.1"
n_samples = 50000
seed = 7
hbar_omega = 1.0

[alpha]
re = 2.0
im = 0.0

[rule]
kind = "power_deformed"
epsilon = 0.1

[grid]
cells = 400
duration = 2.5
boundary = "reflecting"

[grid.absorber]
start = 0.75
sigma_max = 5.0

[grid.pulse]
center = 0.3
wavelength = 0.1

[tolerances]
closure = 1e-3
threshold = 3.0
"""


def test_empty_config_gives_defaults():
    cfg = parse_config("", command="coherent")
    assert cfg == RunConfig(command="coherent")
    assert cfg.grid == GridConfig()


def test_epsilon_below_minus_one_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config('[rule]\nkind = "power_deformed"\nepsilon = -2\n')
    assert exc.value.key == "rule.epsilon"
    assert exc.value.line == 3
    assert "-1" in str(exc.value)


@pytest.mark.parametrize("text, key, line", [
    ("foo = 1\n", "foo", 1),
    ("[grid]\ncells = 64\ncels = 3\n", "grid.cels", 3),
    ('[grid.pulse]\nwidht = 0.1\n', "grid.pulse.widht", 2),
    ("[grid]\ncourant = 1.5\n", "grid.courant", 2),
    ("[grid]\ncells = 8\n", "grid.cells", 2),
    ('[alpha]\nre = "x"\n', "alpha.re", 2),
    ("[region]\nstart = 0.6\nstop = 0.2\n", "region", 1),
])
def test_bad_keys_named(text, key, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key
    assert exc.value.line == line


def test_malformed_toml_names_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("seed = 1\n[grid\n")
    assert exc.value.line == 2


def test_echo_roundtrip():
    cfg = parse_config(FULL_AUDIT)
    echo = cfg.echo()
    assert parse_config(echo).echo() == echo
    assert parse_config(echo) == cfg


def test_disabled_subtables():
    cfg = parse_config("[grid.absorber]\nenabled = false\n[grid.source]\nposition = 0.2\n")
    assert cfg.grid.absorber is None and cfg.grid.source is not None
    assert parse_config(cfg.echo()) == cfg


def test_seed_flag_overrides():
    assert parse_config("seed = 3\n", seed=9).seed == 9


def _run(tmp_path, text, *args):
    cfg_path = tmp_path / "run.toml"
    cfg_path.write_text(text)
    return main(["--config", str(cfg_path), *args])


def test_full_audit_echo_in_artifact(tmp_path):
    out = tmp_path / "out"
    assert _run(tmp_path, FULL_AUDIT, "--out", str(out)) == 0
    doc = json.loads((out / "audit.json").read_text())
    assert json.dumps(doc["config"], indent=2, sort_keys=True) + "\n" == parse_config(FULL_AUDIT).echo()
    assert doc["result"]["status"] == "violated"
    # the artifact regenerates from its own header
    again = tmp_path / "again"
    (tmp_path / "echo.json").write_text(json.dumps(doc["config"]))
    assert main(["--config", str(tmp_path / "echo.json"), "--out", str(again)]) == 0
    assert (again / "audit.json").read_bytes() == (out / "audit.json").read_bytes()


def test_coherent_report(tmp_path):
    assert _run(tmp_path, "[alpha]\nre = 1.0\nim = 1.0\n", "coherent", "--out", str(tmp_path)) == 0
    res = json.loads((tmp_path / "coherent.json").read_text())["result"]
    assert math.isclose(res["mean_x"], 2.0, abs_tol=1e-12)
    assert math.isclose(res["mean_n"], 2.0, abs_tol=1e-12)
    assert res["truncation_ok"]
    assert (tmp_path / "coherent.csv").read_text().startswith("n,re,im,prob\n")


def test_detect_bytes_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["detect", "--seed", "5", "--out", str(a)]) == 0
    assert main(["detect", "--seed", "5", "--out", str(b)]) == 0
    assert (a / "detect.csv").read_bytes() == (b / "detect.csv").read_bytes()
    assert (a / "detect.json").read_bytes() == (b / "detect.json").read_bytes()
    lines = (a / "detect.csv").read_text().splitlines()
    assert lines[0] == "count" and len(lines) == 100_001
    summary = json.loads((a / "detect.json").read_text())["result"]
    assert {"seed", "n_samples", "mean", "stderr"} <= set(summary)


def test_command_order_independent(tmp_path):
    seq = {}
    for order in (("coherent", "detect"), ("detect", "coherent")):
        d = tmp_path / "-".join(order)
        for cmd in order:
            run_command(parse_config("n_samples = 2000\n", command=cmd), d)
        seq[order] = {p.name: p.read_bytes() for p in d.iterdir()}
    assert seq[("coherent", "detect")] == seq[("detect", "coherent")]


def test_audit_born(tmp_path):
    assert main(["audit", "--out", str(tmp_path), "--format", "json"]) == 0
    res = json.loads((tmp_path / "audit.json").read_text())["result"]
    assert res["violation_significance"] < 3
    assert not (tmp_path / "audit.csv").exists()


def test_format_csv_only(tmp_path):
    assert main(["fdtd", "--out", str(tmp_path), "--format", "csv"]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["fdtd_fields.csv", "fdtd_ledger.csv"]


def test_sweep_command(tmp_path):
    text = '[rule]\nkind = "power_deformed"\n[sweep]\nvalues = [0.0, 0.1]\n'
    assert _run(tmp_path, text, "sweep", "--out", str(tmp_path)) == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "parameter,kappa,kappa_mc,violation,significance,status"
    assert len(rows) == 3


def test_exit_codes(tmp_path, capsys):
    assert _run(tmp_path, '[rule]\nkind = "power_deformed"\nepsilon = -2\n', "coherent") == EXIT_CONFIG
    diag = json.loads(capsys.readouterr().err)
    assert diag["key"] == "rule.epsilon" and diag["exit_code"] == EXIT_CONFIG

    assert _run(tmp_path, "[grid]\ncells = 64\n[grid.pulse]\namplitude = 1e308\n", "fdtd",
                "--out", str(tmp_path)) == EXIT_BLOWUP
    assert json.loads(capsys.readouterr().err)["step"] == 1

    assert _run(tmp_path, "[grid]\ncells = 200\n[tolerances]\nclosure = 1e-9\n", "audit",
                "--out", str(tmp_path)) == EXIT_AUDIT_INVALID
    assert json.loads(capsys.readouterr().err)["exit_code"] == EXIT_AUDIT_INVALID

    # sweep errors report the offending parameter
    text = '[rule]\nkind = "power_deformed"\n[sweep]\nvalues = [0.1, -3.0]\n[grid]\ncells = 400\n'
    assert _run(tmp_path, text, "sweep", "--out", str(tmp_path)) == EXIT_CONFIG
    assert json.loads(capsys.readouterr().err)["parameter"] == -3.0

    assert main(["coherent", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG
    assert _run(tmp_path, "", "sweep", "--out", str(tmp_path)) == EXIT_CONFIG
