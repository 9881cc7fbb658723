import csv
import json
import subprocess
import sys
import warnings

import numpy as np
import pytest

from momentstab import cli
from momentstab.core_model import LinearSDESystem, dump_system


@pytest.fixture
def spec(tmp_path):
    path = tmp_path / "scalar.json"
    dump_system(LinearSDESystem.scalar(1.0, 0.5), path)
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_moments_outputs(spec, tmp_path, capsys):
    out = tmp_path / "m"
    assert cli.main(["moments", "--spec", str(spec), "--degree", "4", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "lambda_4 = abscissa / 4 = -0.625" in text
    op = (out / "operator_m4.txt").read_text().splitlines()
    assert op[2] == "# 0: 0 0 0 0"
    assert float(op[-1]) == -2.5
    rows = read_rows(out / "spectrum_m4.csv")
    assert rows[0] == ["index", "re", "im", "residual"]
    assert float(rows[1][1]) == -2.5


def test_simulate_summary_marks_odd_degrees(spec, tmp_path):
    out = tmp_path / "s"
    code = cli.main(["simulate", "--spec", str(spec), "--degree", "2,7", "--paths", "500",
                     "--dt", "0.01", "--horizon", "1", "--out", str(out)])
    assert code == 0
    rows = read_rows(out / "summary.csv")
    assert rows[0] == ["p", "mc_rate", "mc_stderr", "operator_rate"]
    assert float(rows[1][3]) == -1.75
    assert rows[2][3] == "n/a"
    trace = read_rows(out / "trace.csv")
    assert trace[0] == ["t", "p", "estimate", "stderr"]
    assert len(trace) == 1 + 2 * 101


def test_floats_use_17_digits(spec, tmp_path):
    out = tmp_path / "s"
    cli.main(["simulate", "--spec", str(spec), "--paths", "50", "--dt", "0.01",
              "--horizon", "1", "--out", str(out)])
    rows = read_rows(out / "trace.csv")
    for row in rows[1:]:
        assert all(v == f"{float(v):.17g}" for v in row)


def test_manifest_round_trip(spec, tmp_path):
    out = tmp_path / "m"
    cli.main(["moments", "--spec", str(spec), "--degree", "2", "--out", str(out)])
    text = (out / "manifest.json").read_text()
    man = cli.RunManifest.from_json(text)
    assert man.to_json() == text
    assert man.command == "moments" and man.config["degree"] == 2
    assert man.config["spec"]["drift"] == [[-1.0]]
    assert man.version and man.duration_s >= 0


@pytest.mark.parametrize("argv", [
    ["moments", "--degree", "3"],
    ["simulate", "--degree", "2,3", "--paths", "300", "--dt", "0.01", "--horizon", "1",
     "--seed", "5"],
])
def test_rerun_is_byte_identical(spec, tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(argv + ["--spec", str(spec), "--out", str(a)]) == 0
    spec.write_text("{}")  # the manifest inlines the system instead of its path
    assert cli.main(["rerun", "--manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in json.loads((a / "manifest.json").read_text())["outputs"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_langmuir_map_headers(tmp_path):
    out = tmp_path / "l"
    assert cli.main(["langmuir", "whitenoise", "--grid", "k=0.5:1:2", "sigma2=1:10:3",
                     "--out", str(out)]) == 0
    lines = (out / "whitenoise_map.csv").read_text().splitlines()
    assert lines[0].startswith("# dimensionless units")
    rows = read_rows(out / "whitenoise_map.csv")
    assert rows[0] == ["k", "sigma2", "max_real_lambda", "verdict"]
    assert len(rows) == 1 + 6
    assert {r[3] for r in rows[1:]} <= {"stable", "marginal", "unstable"}


def test_boundstate_diagnostics(tmp_path):
    out = tmp_path / "b"
    assert cli.main(["langmuir", "boundstate", "--points", "1024", "--out", str(out)]) == 0
    text = (out / "boundstate.csv").read_text()
    assert "1D" in text.split("lambda,")[0]
    rows = read_rows(out / "boundstate.csv")
    assert rows[0] == ["lambda", "E_lambda", "matching_residual"]
    assert abs(float(rows[-1][2])) <= 1e-8


def test_appendix_and_dispersion(tmp_path, capsys):
    assert cli.main(["langmuir", "appendix", "--eps1", "1", "--eps2", "2",
                     "--out", str(tmp_path)]) == 0
    assert cli.main(["langmuir", "dispersion", "--k1", "0", "--k2", "0", "--sigma2", "0.01",
                     "--out", str(tmp_path)]) == 0
    assert "unstable" in capsys.readouterr().out


def test_exit_code_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 1, "drift": [[1]]')
    assert cli.main(["moments", "--spec", str(bad), "--degree", "2"]) == 2
    assert "line 1" in capsys.readouterr().err
    missing = tmp_path / "nope.json"
    assert cli.main(["moments", "--spec", str(missing), "--degree", "2"]) == 2
    assert cli.main(["langmuir", "whitenoise", "--sigma2", "-1", "--out", str(tmp_path)]) == 2
    assert cli.main(["langmuir", "threshold", "--out", str(tmp_path)]) == 2
    assert cli.main(["langmuir", "dispersion", "--grid", "k=0:1", "sigma2=0:1:2"]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["moments"])
    assert info.value.code == 2


def test_exit_code_basis_too_large(tmp_path):
    path = tmp_path / "big.json"
    dump_system(LinearSDESystem(np.zeros((12, 12)), np.zeros((12, 12, 0))), path)
    assert cli.main(["moments", "--spec", str(path), "--degree", "8", "--out", str(tmp_path)]) == 3


def test_exit_code_overflow_keeps_partial_output(tmp_path):
    path = tmp_path / "boom.json"
    dump_system(LinearSDESystem.scalar(-400.0, 3.0), path)
    out = tmp_path / "o"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        code = cli.main(["simulate", "--spec", str(path), "--degree", "8", "--paths", "20",
                         "--dt", "0.001", "--horizon", "5", "--out", str(out)])
    assert code == 4
    assert len(read_rows(out / "trace.csv")) > 1
    assert (out / "manifest.json").exists()


def test_exit_code_solver_failure(tmp_path):
    assert cli.main(["langmuir", "boundstate", "--amplitude", "0", "--out", str(tmp_path)]) == 5


def test_module_entry_point(spec, tmp_path):
    res = subprocess.run([sys.executable, "-m", "momentstab", "moments", "--spec", str(spec),
                          "--degree", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
    assert "-1.75" in res.stdout
