import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from relzeta import cli

SOFT = "soft:b=1.5,gamma=1.2"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    return json.loads(err.strip().splitlines()[-1])


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["eval", "--kernel", SOFT],
    ["eval", "--p", "1,2", "--kernel", SOFT],
    ["eval", "--p", "0,0,3", "--kernel", "hard:a=5,gamma=0.5"],
    ["eval", "--p", "0,0,3", "--kernel", SOFT, "--rel-tol", "-1"],
    ["scan", "--p0", "LOG:10:1:3", "--kernel", SOFT],
    ["scan", "--p0", "3,2", "--kernel", SOFT],
    ["demo-divergence", "--p", "0,0,2", "--kernel", SOFT, "--cutoffs", "10,100"],
    ["oracle", "--p", "0,0,2", "--kernel", "hard:a=1,gamma=1.5"],
    ["eval", "--p", "0,0,3", "--kernel", SOFT, "--threads", "0"],
])
def test_usage_errors_exit_2_with_json(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert error_of(err)["error"] == "usage"
    assert out == ""


def test_missing_file_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--in", str(tmp_path / "nope.csv"), "--quantity", "zeta")
    assert code == 2
    assert error_of(err)["error"] == "FileNotFoundError"


def test_config_precedence(tmp_path):
    conf = tmp_path / "relzeta.conf"
    conf.write_text("# numerics\nrel-tol = 1e-3\nseed = 9\nkernel = soft:b=1.5,gamma=1.2\n")
    parser = cli.build_parser()
    types = cli._option_types(parser, "eval")
    args = cli._merge(parser.parse_args(["eval", "--p", "0,0,3", "--config", str(conf),
                                         "--rel-tol", "1e-5"]), types)
    assert args.rel_tol == 1e-5       # flag beats config
    assert args.seed == 9             # config beats default, cast to int
    assert args.kernel == SOFT
    assert args.tail_log == cli.DEFAULTS["tail_log"]
    conf.write_text("seed = nine\n")
    with pytest.raises(cli.UsageError):
        cli._merge(parser.parse_args(["eval", "--config", str(conf)]), types)
    conf.write_text("just words\n")
    with pytest.raises(cli.UsageError):
        cli._merge(parser.parse_args(["eval", "--config", str(conf)]), types)


def test_eval_json_and_text(capsys):
    code, out, _ = run(capsys, "eval", "--p", "0,0,0.5", "--kernel", SOFT, "--rel-tol", "1e-5",
                       "--out", "json")
    assert code == 0
    d = json.loads(out)
    assert d["zeta"]["value"] > 0 and d["rep"] == "rep1" and d["m"] == 48
    assert d["closureWithinErrors"] is True
    code, out2, _ = run(capsys, "eval", "--p", "0,0,0.5", "--kernel", SOFT, "--rel-tol", "1e-5",
                        "--calibration", "0.5")
    assert code == 0
    line = next(l for l in out2.splitlines() if l.startswith("zeta "))
    assert float(line.split()[1]) == pytest.approx(0.5 * d["zeta"]["value"], rel=1e-15)


@pytest.fixture(scope="module")
def scan_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("scan") / "soft.csv"
    code = cli.main(["scan", "--p0", "3", "--kernel", SOFT, "--rel-tol", "1e-4", "--out", str(path)])
    assert code == 0
    return path


def test_scan_csv_format_and_determinism(capsys, scan_csv):
    text = scan_csv.read_text()
    assert text.splitlines()[0] == ",".join(cli.CSV_FIELDS)
    row = next(csv.DictReader(io.StringIO(text)))
    assert row["kernel"] == SOFT and row["m"] == "48" and row["p0"] == "3"
    assert float(row["zeta"]) == float(repr(float(row["zeta"])))
    code, out, _ = run(capsys, "scan", "--p0", "3", "--kernel", SOFT, "--rel-tol", "1e-4")
    assert code == 0
    assert out == text


def test_plot_data(capsys, scan_csv, tmp_path):
    prefix = tmp_path / "plot"
    code, out, _ = run(capsys, "plot-data", "--in", str(scan_csv), "--out", str(prefix))
    assert code == 0
    written = json.loads(out)["written"]
    assert len(written) == len(cli.PLOT_QUANTITIES)
    lines = (tmp_path / "plot_zeta.dat").read_text().splitlines()
    assert lines[0] == "# p0 zeta" and lines[1].split()[0] == "3"


def _synthetic_csv(path, zeta_slope, kernel=SOFT, n=10):
    rows = []
    for p0 in np.geomspace(10, 1000, n):
        vals = {"p0": p0, "zeta": 2 * p0 ** zeta_slope, "zeta_err": 0, "zetaK": -p0 ** -0.9,
                "zetaK_err": 0, "zeta0": 1, "zetaL": -p0 ** -0.8, "tildeZeta": 1, "tildeZeta0m": 1,
                "tildeZetaLm": 1, "tildeZeta1": np.exp(-2 * p0 ** (1 / 48)), "m": 48}
        row = {k: cli._fmt(v) for k, v in vals.items()}
        row["kernel"] = kernel
        rows.append(row)
    with open(path, "w", newline="") as fh:
        cli.write_csv(rows, fh)


@pytest.mark.parametrize("quantity,slope,code", [
    ("zeta", -0.15, 0), ("zeta", 0.2, 1), ("zetaK", None, 0), ("zetaL", None, 0), ("tildeZeta1", None, 0),
])
def test_fit(capsys, tmp_path, quantity, slope, code):
    path = tmp_path / "s.csv"
    _synthetic_csv(path, -0.15 if slope is None else slope)
    rc, out, _ = run(capsys, "fit", "--in", str(path), "--quantity", quantity)
    assert rc == code
    d = json.loads(out)
    assert d["passed"] is (code == 0) and d["n"] == 10


def test_fit_insufficient_data(capsys, tmp_path):
    path = tmp_path / "s.csv"
    _synthetic_csv(path, -0.15, n=2)
    rc, _, err = run(capsys, "fit", "--in", str(path), "--quantity", "zeta")
    assert rc == 1 and error_of(err)["error"] == "InsufficientData"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "relzeta", "eval", "--p", "0,0,1", "--kernel", "bogus"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 2
    assert json.loads(res.stderr)["error"] == "usage"
