import textwrap

import pytest

from adernet.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main

GOOD = """
[run]
order = 2
t_end = 0.2
output_times = [0.2]
[edge.E1]
length = 10.0
cells = 20
initial = { type = "constant", h = 2.0, q = QVAL }
[edge.E2]
length = 10.0
cells = 20
initial = { type = "constant", h = 2.5 }
[vertex.V1]
endpoints = ["E1:right", "E2:left"]
"""


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("ADERNET_OUTPUT_DIR", str(d))
    return d


def config(tmp_path, text, q="0.0"):
    p = tmp_path / "case.toml"
    p.write_text(textwrap.dedent(text).replace("QVAL", q))
    return str(p)


def test_list_cases(capsys):
    assert main(["list-cases"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "split_circle" in out and "diamond" in out


def test_validate_and_run(tmp_path, outdir, capsys):
    cfg = config(tmp_path, GOOD)
    assert main(["validate", cfg]) == EXIT_OK
    assert "2 edges, 1 vertices" in capsys.readouterr().out
    assert main(["run", cfg]) == EXIT_OK
    assert (outdir / "case_E1_t0.csv").exists() and (outdir / "case_E2_t0.csv").exists()


def test_run_builtin_case_with_overrides(outdir):
    assert main(["run", "split_circle", "--cells", "20", "--order", "3", "--solver", "heoc", "--t-end", "0.1"]) == EXIT_OK
    data = (outdir / "split_circle_E1_t0.csv").read_text().splitlines()
    assert len(data) == 21
    assert main(["validate", "split_circle"]) == EXIT_OK


def test_config_errors_exit_2(tmp_path, outdir, capsys):
    bad = config(tmp_path, GOOD + "\nfoo = 1\n")
    assert main(["validate", bad]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.toml")]) == EXIT_CONFIG
    neg = config(tmp_path, GOOD.replace("h = 2.5", "h = -1.0"))
    assert main(["validate", neg]) == EXIT_CONFIG


def test_solver_failure_exits_3(tmp_path, outdir, capsys):
    fast = config(tmp_path, GOOD, q="12.0")  # supercritical inflow at the junction
    assert main(["run", fast]) == EXIT_SOLVER
    assert "solver failure" in capsys.readouterr().err


def test_convergence_verb(tmp_path, outdir, capsys):
    code = main(["convergence", "split_circle", "--orders", "2", "--grids", "10,20", "--ref-order", "2", "--ref-cells", "40"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "k=2 N=   20" in out
    assert (outdir / "convergence_split_circle_tt.csv").exists()


def test_validate_rejects_lumped_edge_with_external_end(tmp_path, capsys):
    path = config(tmp_path, GOOD + '[lump]\nedges = ["E2"]\n')
    assert main(["validate", path]) == EXIT_CONFIG
    assert "external end" in capsys.readouterr().err


def test_run_t_end_override_before_output_time(tmp_path, outdir):
    path = config(tmp_path, GOOD)
    assert main(["run", path, "--t-end", "0.1"]) == EXIT_OK
    assert sorted(p.name for p in outdir.iterdir()) == ["case_E1_t0.csv", "case_E2_t0.csv"]
