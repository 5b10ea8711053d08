import json

import pytest

from llgbdf3 import cli, study
from llgbdf3.config import RunConfig, dump_config, emit_reproduction_suite, parse_config
from llgbdf3.errors import DegenerateMagnitude, ParseError, ValidationError

MINIMAL = """\
[run]
mode = single
dim = 1
alpha = 0.01
T = 0.1

[grid]
n = 64
nt = 100
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file(tmp_path):
    cfg = parse_config(write(tmp_path, MINIMAL))
    assert (cfg.mode, cfg.dim, cfg.n, cfg.nt, cfg.alpha, cfg.T) == (
        "single", 1, (64,), (100,), 0.01, 0.1)
    assert cfg.solution == "mms1d"


def test_flag_overrides_file(tmp_path):
    cfg = parse_config(write(tmp_path, MINIMAL), {"run.alpha": "0.8"})
    assert cfg.alpha == 0.8


def test_step_sizes_must_divide_T(tmp_path):
    text = MINIMAL.replace("mode = single", "mode = study-temporal").replace(
        "nt = 100", "k = 0.1/8, 0.03")
    with pytest.raises(ValidationError, match="case 1"):
        parse_config(write(tmp_path, text))


def test_step_sizes_as_fractions(tmp_path):
    text = MINIMAL.replace("mode = single", "mode = study-coupled").replace(
        "n = 64", "n = 6, 8").replace("nt = 100", "k = 1/10, 1/15").replace("T = 0.1", "T = 1")
    cfg = parse_config(write(tmp_path, text))
    assert cfg.nt == (10, 15)


def test_unknown_key_reports_line(tmp_path):
    with pytest.raises(ParseError) as info:
        parse_config(write(tmp_path, MINIMAL + "colour = blue\n"))
    assert info.value.lineno == 10


def test_malformed_line(tmp_path):
    with pytest.raises(ParseError) as info:
        parse_config(write(tmp_path, "[run]\nmode single\n"))
    assert info.value.lineno == 2


def test_missing_section(tmp_path):
    with pytest.raises(ParseError):
        parse_config(write(tmp_path, "mode = single\n"))


@pytest.mark.parametrize("override,key", [
    ({"run.T": "-1"}, "run.T"),
    ({"run.dim": "2"}, "run.dim"),
    ({"grid.nt": "2"}, "grid.nt"),
    ({"run.mode": "study-spatial"}, "grid.n"),
    ({"solver.tol": "2"}, "solver.tol"),
])
def test_validation_names_key(tmp_path, override, key):
    with pytest.raises(ValidationError) as info:
        parse_config(write(tmp_path, MINIMAL), override)
    assert info.value.key == key


def test_suite_round_trip(tmp_path):
    for p in emit_reproduction_suite(tmp_path):
        cfg = parse_config(p)
        assert parse_config(text=dump_config(cfg)) == cfg


def test_suite_contents(tmp_path):
    emit_reproduction_suite(tmp_path)
    t1 = parse_config(tmp_path / "table1.cfg")
    assert t1.n == (16, 32, 64, 128, 256) and t1.alpha == 0.01 and t1.T == 0.1
    assert "N_t = 1e5" in (tmp_path / "table1.cfg").read_text()
    t4 = parse_config(tmp_path / "table4.cfg")
    pairs = [(1 / n, t4.T / nt) for n, nt in t4.cases()]
    expected = [(1 / 6, 1 / 10), (1 / 8, 1 / 15), (1 / 10, 1 / 21), (1 / 12, 1 / 27),
                (1 / 16, 1 / 40)]
    assert pairs == pytest.approx(expected)


def test_probe_config_round_trip():
    cfg = parse_config(overrides={"run.mode": "probe", "grid.n": "8", "probe.trials": "3"})
    assert cfg.probe_alpha == (0.01,)
    assert parse_config(text=dump_config(cfg)) == cfg


def test_threads_env_default(monkeypatch):
    monkeypatch.setenv("LLG_THREADS", "3")
    assert RunConfig().threads == 3


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_single_run(tmp_path, capsys):
    code, out, err = run_cli(["--mode", "single", "--n", "16", "--nt", "20", "--T", "0.1",
                              "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "|e|_inf" in out
    assert "sqrt(2)/2" in err
    assert (tmp_path / "report.csv").exists()


def test_no_alpha_note_for_large_damping(tmp_path, capsys):
    code, _, err = run_cli(["--mode", "single", "--n", "8", "--nt", "5", "--alpha", "0.8",
                            "--out", str(tmp_path)], capsys)
    assert code == 0 and "sqrt(2)/2" not in err


def test_study_csv_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL.replace("mode = single", "mode = study-spatial").replace(
        "n = 64", "n = 8, 16").replace("nt = 100", "nt = 50") + "[output]\ntiming = false\n")
    outputs = []
    for i in range(2):
        code, _, _ = run_cli(["--config", str(cfg), "--out", str(tmp_path / f"o{i}")], capsys)
        assert code == 0
        outputs.append((tmp_path / f"o{i}" / "report.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_exit_code_solver_diverged(tmp_path, capsys):
    emit_reproduction_suite(tmp_path)
    code, _, err = run_cli(["--config", str(tmp_path / "table4.cfg"), "--maxit", "1",
                            "--out", str(tmp_path / "o")], capsys)
    assert code == 2
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "SolverDiverged" and payload["case"] == 0


def test_exit_code_degenerate(tmp_path, capsys, monkeypatch):
    def collapse(*args, **kwargs):
        raise DegenerateMagnitude("forced", min_norm=0.0, step_index=4)

    monkeypatch.setattr(study, "run_case", collapse)
    code, _, err = run_cli(["--mode", "single", "--n", "8", "--nt", "5",
                            "--out", str(tmp_path)], capsys)
    assert code == 3
    assert json.loads(err.strip().splitlines()[-1])["error"] == "DegenerateMagnitude"


def test_exit_code_config_error(tmp_path, capsys):
    code, _, err = run_cli(["--config", str(tmp_path / "missing.cfg")], capsys)
    assert code == 4 and json.loads(err)["error"] == "ParseError"
    code, _, err = run_cli(["--mode", "single", "--n", "8", "--nt", "5", "--T", "abc"], capsys)
    assert code == 4 and json.loads(err)["error"] == "ValidationError"


def test_probe_mode(tmp_path, capsys):
    code, out, _ = run_cli(["--mode", "probe", "--n", "32", "--trials", "5",
                            "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "min singular value > 0" in out
    assert (tmp_path / "probe.csv").read_text().count("\n") == 4


def test_emit_suite(tmp_path, capsys):
    code, out, _ = run_cli(["--emit-suite", str(tmp_path)], capsys)
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [f"table{i}.cfg" for i in range(1, 5)]


def test_stability_warning(tmp_path, capsys):
    _, _, err = run_cli(["--mode", "single", "--n", "64", "--nt", "10", "--T", "0.0001",
                         "--out", str(tmp_path)], capsys)
    assert "exceeds the BDF3 stability bound" not in err
    _, _, err = run_cli(["--mode", "single", "--n", "64", "--nt", "10", "--T", "0.01",
                         "--out", str(tmp_path)], capsys)
    assert "exceeds the BDF3 stability bound" in err and "N_t >= " in err
