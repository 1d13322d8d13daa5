import math
import xml.etree.ElementTree as ET

import pytest

from lmmse_mismatch.cli import main, parse_config, parse_int_list, UsageError
from lmmse_mismatch.experiment import SweepRecord, run_sweep, scenario_config
from lmmse_mismatch.report import CSV_HEADER, read_csv, render_svg, write_csv

SVG_NS = "{http://www.w3.org/2000/svg}"


def _record(**kw):
    base = dict(
        scenario="s1", p=30, p_S=10, n=10, M=100, mode="conditional",
        empirical_mse=123.456, stderr=7.5, analytic_mse=math.inf,
        baseline_mse=0.3, gamma=math.inf, flags=("near-interpolation",), seed=2**64 - 1,
    )
    base.update(kw)
    return SweepRecord(**base)


# config parsing -----------------------------------------------------------------

def test_s1_defaults():
    cfg, _ = parse_config(["--scenario", "s1", "--out-csv", "x.csv"])
    assert (cfg.p, cfg.sigma_v2, cfg.sigma_z2, cfg.covariance, cfg.replicates) == (30, 0.25, 0.0, "identity", 100)


def test_s2_noise():
    cfg, _ = parse_config(["--scenario", "s2", "--out-csv", "x.csv"])
    assert cfg.sigma_v2 == 30.0


def test_flags_override_presets():
    cfg, _ = parse_config(["--scenario", "s1", "--sigma-v2", "2", "--p", "12", "--ps", "3,4", "--out-csv", "x"])
    assert cfg.sigma_v2 == 2.0 and cfg.p == 12 and cfg.ps == (3, 4)


def test_grid_expansion():
    cfg, _ = parse_config(["--scenario", "s1", "--ps", "5,10,30", "--n", "2:2:90", "--out-csv", "x"])
    assert cfg.ps == (5, 10, 30)
    assert len(cfg.ns) == 45 and cfg.ns[0] == 2 and cfg.ns[-1] == 90


def test_int_list():
    assert parse_int_list("1:3,7,10:5:20") == (1, 2, 3, 7, 10, 15, 20)
    for bad in ["1:x", "5:1", "1:0:4", "1,,2", "1:2:3:4"]:
        with pytest.raises(UsageError):
            parse_int_list(bad)


@pytest.mark.parametrize(
    "argv",
    [
        ["--scenario", "s1", "--out-csv", "x", "--bogus"],
        ["--scenario", "s1", "--out-csv", "x", "--n", "2:a"],
        ["--scenario", "s1", "--out-csv", "x", "--ps", "31"],
        ["--scenario", "s3", "--out-csv", "x", "--kx", "identity"],
        ["--scenario", "s9", "--out-csv", "x"],
        ["--scenario", "s1"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_no_args_prints_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


# CSV --------------------------------------------------------------------------

def test_csv_infinity_and_header(tmp_path):
    path = tmp_path / "o.csv"
    write_csv([_record()], path)
    lines = path.read_bytes().decode("utf-8").split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    row = dict(zip(CSV_HEADER, lines[1].split(",")))
    assert row["gamma"] == "inf" and row["analytic_mse"] == "inf"
    assert b"\r" not in path.read_bytes()


def test_csv_not_applicable_is_empty(tmp_path):
    path = tmp_path / "o.csv"
    write_csv(run_sweep(scenario_config("s4", ps=(10,), ns=(20,), replicates=3)), path)
    rows = path.read_text().splitlines()[1:]
    for line in rows:
        assert dict(zip(CSV_HEADER, line.split(",")))["analytic_mse"] == ""


def test_csv_round_trip(tmp_path):
    recs = run_sweep(scenario_config("s1", ps=(5, 10), ns=(4, 10, 11, 30), replicates=7))
    recs.append(_record(p_S=29, n=3, empirical_mse=0.1 + 0.2, analytic_mse=None, flags=()))
    path = tmp_path / "o.csv"
    write_csv(recs, path)
    assert read_csv(path) == recs


def test_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "o.csv")


# SVG ---------------------------------------------------------------------------

def _svg_root(path):
    root = ET.parse(path).getroot()
    assert root.tag == SVG_NS + "svg"
    return root


def test_svg_single_point(tmp_path):
    path = tmp_path / "one.svg"
    render_svg([_record(empirical_mse=2.0, analytic_mse=1.5, gamma=3.0)], path)
    _svg_root(path)


def test_svg_full_chart_with_clipping(tmp_path):
    recs = run_sweep(scenario_config("s1", ps=(10, 20), ns=tuple(range(2, 41, 2)), replicates=10))
    path = tmp_path / "fig.svg"
    render_svg(recs, path)
    root = _svg_root(path)
    text = " ".join("".join(t.itertext()) for t in root.iter(SVG_NS + "text"))
    assert "= 10" in text and "= 20" in text
    assert "full LMMSE" in text and "clipped" in text


def test_svg_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        render_svg([], tmp_path / "e.svg")


# end to end ---------------------------------------------------------------------

def test_main_writes_outputs(tmp_path):
    csv_path, svg_path = tmp_path / "out.csv", tmp_path / "fig.svg"
    rc = main(["--scenario", "s4", "--ps", "10,30", "--n", "5:5:40", "-M", "10",
               "--out-csv", str(csv_path), "--out-svg", str(svg_path)])
    assert rc == 0
    recs = read_csv(csv_path)
    assert len(recs) == 8 * 3
    assert all(r.analytic_mse is None for r in recs)
    assert (tmp_path / "out.csv.manifest").exists()
    _svg_root(svg_path)


def test_manifest_contents(tmp_path):
    import json

    csv_path = tmp_path / "out.csv"
    assert main(["--scenario", "s3", "--ps", "5", "--n", "10,20", "-M", "3", "--seed", "7",
                 "--out-csv", str(csv_path)]) == 0
    doc = json.loads((tmp_path / "out.csv.manifest").read_text())
    assert doc["master_seed"] == 7
    assert doc["config"]["covariance"] == "randomized"
    seeds = {(c["p_S"], c["n"]): c["seed"] for c in doc["cells"]}
    assert {(r.p_S, r.n): r.seed for r in read_csv(csv_path)} == seeds


def test_main_runtime_error_exit_2(tmp_path):
    rc = main(["--scenario", "s1", "--ps", "5", "--n", "10", "-M", "2",
               "--out-csv", str(tmp_path / "missing" / "out.csv")])
    assert rc == 2


def test_repeat_runs_byte_identical(tmp_path):
    args = ["--scenario", "s1", "--ps", "5,20", "--n", "4:4:40", "-M", "20"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out-csv", str(a), "--threads", "1"]) == 0
    assert main(args + ["--out-csv", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_values_match_svg_series(tmp_path):
    from lmmse_mismatch.report import series

    recs = run_sweep(scenario_config("s1", ps=(10,), ns=(4, 20), replicates=5))
    grouped = series(recs)
    assert list(grouped) == [10]
    assert [r.empirical_mse for r in grouped[10]] == [r.empirical_mse for r in recs if r.p_S == 10]
