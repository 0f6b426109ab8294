import pytest

from treetrace.cli import load_spec_file, main
from treetrace.harness import CSV_HEADER
from treetrace.trees import parse_tree


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_gen_path(capsys):
    code, out = run(capsys, "gen", "--family", "path", "--n", "3")
    assert code == 0
    assert out.strip() == "0(0(0(0)))"


def test_gen_is_seed_deterministic(capsys):
    _, a = run(capsys, "gen", "--family", "random", "--n", "9", "--seed", "4")
    _, b = run(capsys, "gen", "--family", "random", "--n", "9", "--seed", "4")
    _, c = run(capsys, "gen", "--family", "random", "--n", "9", "--seed", "5")
    assert a == b
    assert a != c


def test_trace_and_recon_roundtrip(tmp_path, capsys):
    traces = tmp_path / "traces.txt"
    code, _ = run(capsys, "trace", "--family", "random", "--model", "ted",
                  "--n", "8", "--q", "0.1", "--traces", "64", "--seed", "3",
                  "--out", str(traces))
    assert code == 0
    lines = traces.read_text().splitlines()
    assert len(lines) == 64
    parse_tree(lines[0])
    code, out = run(capsys, "recon", "--family", "random", "--model", "ted",
                    "--n", "8", "--q", "0.1", "--seed", "3", str(traces))
    assert code == 0
    parse_tree(out.strip())


def test_enumerate_lp(capsys):
    code, out = run(capsys, "enumerate", "--model", "lp", "--family", "path",
                    "--n", "6", "--traces", "2")
    assert code == 0
    assert out.strip() == "0(0(0(0(0))))"


def test_enumerate_ted_distribution(capsys):
    code, out = run(capsys, "enumerate", "--model", "ted", "--family", "path",
                    "--n", "2", "--q", "0.5")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3  # traces of the 3-node path: A_2, A_1, root only
    total = sum(float(ln.split("\t")[0]) for ln in lines)
    assert abs(total - 1.0) < 1e-9


def test_experiment_csv(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    code, _ = run(capsys, "experiment", "--family", "random", "--model", "ted",
                  "--n", "6", "--q", "0.1", "--traces", "1,2,4", "--trials", "5",
                  "--seed", "7", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4


def test_experiment_spec_file(tmp_path, capsys):
    spec = tmp_path / "exp.spec"
    spec.write_text(
        "family=random\nmodel=ted\nn=6\nq=0.1\ntraces=1,2\ntrials=4\nseed=2\n"
    )
    code, out = run(capsys, "experiment", str(spec))
    assert code == 0
    assert out.splitlines()[0] == CSV_HEADER
    assert len(out.strip().splitlines()) == 3


def test_load_spec_file_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.spec"
    bad.write_text("this is not key value\n")
    with pytest.raises(ValueError):
        load_spec_file(str(bad))


def test_search_q0(capsys):
    code, out = run(capsys, "search", "--family", "random", "--model", "ted",
                    "--n", "6", "--q", "0.0", "--trials", "4", "--delta", "0.05")
    assert code == 0
    assert out.strip() == "1"


def test_verify_quick_exit_code(capsys):
    code, out = run(capsys, "verify", "--level", "quick")
    assert code == 0
    assert "overall" in out and "FAIL" not in out
