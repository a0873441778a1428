import argparse
import io
import subprocess
import sys

import pytest

from svdrefine.bench.generators import gen_cauchy, gen_random
from svdrefine.cli import main, parse_mode, parse_orders
from svdrefine.mmio import read_triplet, write_mtx
from svdrefine.refiner import CSV_HEADER


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


@pytest.fixture
def random_input(tmp_path):
    path = tmp_path / "m.mtx"
    write_mtx(path, gen_random(5, 5, 64, seed=7))
    return str(path)


def test_parse_orders():
    assert parse_orders("3") == (3,)
    assert parse_orders("1-4") == (1, 2, 3, 4)
    assert parse_orders("1,3,5") == (1, 3, 5)
    with pytest.raises(argparse.ArgumentTypeError):
        parse_orders("0")


def test_parse_mode():
    assert parse_mode("regular") is None
    assert parse_mode("cluster:2,1") == (2, 1)
    for bad in ("cluster:", "cluster:0", "blocks"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_mode(bad)


def test_certify_passes(random_input):
    code, text = run("certify", "--input", random_input, "--order", "1-3")
    assert code == 0
    assert text.count("yes") == 3


def test_certify_failure_exit_code(tmp_path):
    path = tmp_path / "c.mtx"
    write_mtx(path, gen_cauchy(10, 64))
    code, text = run("certify", "--input", str(path), "--format", "csv")
    assert code == 2
    assert text.splitlines()[1].endswith(",no")


def test_refine_writes_csv_and_triplet(random_input, tmp_path):
    target = tmp_path / "out"
    code, text = run("refine", "--input", random_input, "--order", "2", "--iters", "2",
                     "--format", "csv", "--output", str(target))
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER) == "iteration,order,e_i,epsilon_i,bits,mults"
    assert len(lines) == 4
    assert [line.split(",")[4] for line in lines[1:]] == ["64", "192", "576"]
    assert read_triplet(target).precision == 576


def test_refine_divergence_exit_code(random_input):
    code, text = run("refine", "--input", random_input, "--order", "2", "--fixed",
                     "--iters", "6", "--format", "csv")
    assert code == 3
    assert len(text.splitlines()) >= 3


def test_deflate_lists_one_based_indices(random_input, tmp_path):
    code, text = run("deflate", "--input", random_input, "--format", "csv",
                     "--output", str(tmp_path / "d"))
    assert code == 0
    assert text.splitlines()[1].split(",")[3] == "1 2 3 4 5"


def test_experiment_table(capsys):
    code, text = run("experiment", "--family", "random", "--size", "4", "--order", "1,2",
                     "--iters", "1", "--no-deflate")
    assert code == 0
    assert "p=1" in text and "p=2" in text


def test_experiment_stage_failure(capsys):
    code, _ = run("experiment", "--family", "cauchy", "--size", "10", "--iters", "1",
                  "--no-deflate")
    assert code == 2
    assert "[refine]" in capsys.readouterr().err


def test_missing_input_is_an_error(tmp_path, capsys):
    code, _ = run("certify", "--input", str(tmp_path / "absent.mtx"))
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_module_entry_point(random_input):
    done = subprocess.run([sys.executable, "-m", "svdrefine", "certify", "--input", random_input],
                          capture_output=True, text=True, timeout=120)
    assert done.returncode == 0
    assert "passed" in done.stdout
