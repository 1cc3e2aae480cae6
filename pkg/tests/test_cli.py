import csv
import io
import json
import math

import pytest

from p1poles.cli import (EXIT_INPUT, EXIT_OK, EXIT_VERIFY, InputError, SWEEP_HEADER, eval_expr, main,
                         parse_args)
from p1poles.predictor import compute_C0


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_coeffs_example(capsys):
    code, out, _ = run(capsys, "coeffs", "--order", "8")
    assert code == EXIT_OK
    assert "-141196832/390625" in out
    json.loads(out)


def test_gm_example(capsys):
    code, out, _ = run(capsys, "gm", "--max", "1")
    assert code == EXIT_OK
    data = json.loads(out)
    g1 = next(d for d in data if d["m"] == 1)
    assert g1["num_int"] == [-2, 30, 175, 15]


def test_gm_latex(capsys):
    code, out, _ = run(capsys, "gm", "--max", "1", "--format", "latex")
    assert code == EXIT_OK and out.startswith("G_{0}(s)")


def test_table_example(capsys):
    code, out, _ = run(capsys, "table", "--K", "3", "--M", "0")
    assert code == EXIT_OK and '"1/48"' in out


def test_json_round_trip(capsys):
    code, out, _ = run(capsys, "table", "--K", "2", "--M", "3")
    data = json.loads(out)
    assert json.loads(json.dumps(data, indent=2)) == data
    from p1poles.series import TransseriesTable

    assert TransseriesTable.from_json(data).to_json() == data


def test_predict_complex_array(capsys):
    code, out, _ = run(capsys, "predict", "--C", "1e6", "--complex", "--karray", "2", "--no-grids")
    assert code == EXIT_OK
    arr = json.loads(out)["array"]
    assert [a["k"] for a in arr] == [-2, -1, 0, 1, 2]
    ims = [a["x"][1] for a in arr]
    for a, b in zip(ims[:-1], ims[1:]):
        assert abs((b - a) - 2 * math.pi) < 0.3


def test_verify_constructed_C(capsys):
    code, out, _ = run(capsys, "verify", "--C-expr", "12*exp(10)*sqrt(10)", "--no-grids")
    rep = json.loads(out)
    assert rep["prediction"]["x_hi"] == pytest.approx(10.0, abs=1e-12)
    assert rep["pole"]["order"] == 2
    assert code == (EXIT_OK if rep["pass"] else EXIT_VERIFY)
    assert rep["pass"]


def test_verify_failure_exit_code(capsys):
    # below C0 no pole is met before A, so the bracket cannot be confirmed
    code, out, _ = run(capsys, "verify", "--C", "100", "--no-grids")
    rep = json.loads(out)
    assert code == EXIT_VERIFY and rep["pass"] is False
    assert rep["pole"]["kind"] == "no_pole"


def test_find_two_C0(capsys):
    C = 2 * compute_C0()
    code, out, _ = run(capsys, "find", "--C", repr(C))
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["order"] == 2


@pytest.mark.parametrize("argv", [
    ["predict", "--C", "abc"],
    ["predict", "--C-expr", "import os"],
    ["predict", "--C-expr", "exp(1"],
    ["find", "--C", "-5"],
    ["coeffs", "--order", "2"],
    ["table", "--K", "0"],
    ["predict"],
    ["nonsense"],
])
def test_invalid_input_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_INPUT


def test_eval_expr():
    v = eval_expr("12*exp(10)*sqrt(10)", 40)
    assert abs(float(v) - 12 * math.exp(10) * math.sqrt(10)) < 1e-6
    assert float(eval_expr("2^10 - ln(e) + pi/pi", 30)) == 1024
    with pytest.raises(InputError):
        eval_expr("__import__('os')")


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\ndigits = 40\nx-seed = 32  # inline comment\nno_grids = true\n")
    a = parse_args(["predict", "--C", "1e6", "--config", str(cfg)])
    assert a.digits == 40 and a.x_seed == 32.0 and a.no_grids is True
    b = parse_args(["predict", "--C", "1e6", "--config", str(cfg), "--digits", "50"])
    assert b.digits == 50 and b.x_seed == 32.0
    c = parse_args(["predict", "--C", "1e6"])
    assert c.digits == 34 and c.x_seed == 30.0 and c.no_grids is False


def test_bad_config_is_input_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no equals sign here\n")
    code, _, _ = run(capsys, "coeffs", "--config", str(cfg))
    assert code == EXIT_INPUT


def test_output_file(tmp_path, capsys):
    out = tmp_path / "t.json"
    code, text, _ = run(capsys, "table", "--K", "3", "--M", "0", "-o", str(out))
    assert code == EXIT_OK and text == ""
    assert "1/48" in out.read_text()


def test_sweep_empty_range(capsys):
    code, out, _ = run(capsys, "sweep", "--Cmin", "10", "--Cmax", "1", "--no-grids")
    assert code == EXIT_OK
    assert list(csv.reader(io.StringIO(out))) == [SWEEP_HEADER]


def test_sweep_rows_monotone_and_bracketed(capsys):
    C0 = compute_C0()
    code, out, _ = run(capsys, "sweep", "--Cmin", repr(2 * C0), "--Cmax", repr(20 * C0), "--steps", "3",
                       "--no-grids", "--workers", "2")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    xs = [float(r["x_found"]) for r in rows]
    assert xs == sorted(xs)
    for r in rows:
        assert float(r["x_lo"]) - 1e-8 <= float(r["x_found"]) <= float(r["x_hi"]) + 1e-8


def test_deterministic(capsys):
    _, a, _ = run(capsys, "predict", "--C", "5e5", "--no-grids")
    _, b, _ = run(capsys, "predict", "--C", "5e5", "--no-grids")
    assert a == b
