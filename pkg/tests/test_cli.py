"""Command line tests: exit codes, deterministic output, table formats."""
import json
import math

import numpy as np
import pytest

from ginibre_lab import cli
from ginibre_lab.probabilities import void_prob_disk


def _strip_timestamp(text: str) -> str:
    return "\n".join(
        line for line in text.splitlines()
        if "timestamp" not in line
    )


def test_format_float_round_trip():
    values = [math.pi, 1.0 / 3.0, 5e-324, 1.7976931348623157e308,
              -0.1, 123456789.123456789, 2.0 ** -52]
    for v in values:
        assert float(cli.format_float(v)) == v
    assert cli.format_float(float("nan")) == "\"nan\""
    assert cli.format_float(float("inf")) == "\"inf\""


@pytest.mark.parametrize("model,m,expected", [
    ("ginibre", 16, 16),
    ("palm", 16, 15),
    ("matrix", 8, 8),
    ("thinned", 16, None),
    ("poisson", 16, None),
])
def test_sample_models(tmp_path, model, m, expected):
    out = tmp_path / "pts.json"
    rc = cli.main(["sample", "--model", model, "-M", str(m),
                   "--seed", "3", "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert body["model"] == model
    assert body["count"] == len(body["points"])
    if expected is not None:
        assert body["count"] == expected
    for x, y in body["points"]:
        assert math.isfinite(x) and math.isfinite(y)


def test_sample_kostlan_radii(tmp_path):
    out = tmp_path / "radii.json"
    rc = cli.main(["sample", "--model", "kostlan", "-M", "8",
                   "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert body["count"] == 8 and len(body["radii"]) == 8
    assert all(r > 0 for r in body["radii"])


def test_sample_deterministic_except_timestamp(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["sample", "--model", "ginibre", "-M", "12", "--seed", "9"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert _strip_timestamp(a.read_text()) == _strip_timestamp(b.read_text())
    assert _strip_timestamp(a.read_text())  # non-empty remainder


def test_table_void_prob_csv(tmp_path):
    out = tmp_path / "void.csv"
    rc = cli.main(["table", "--quantity", "void_prob", "--format", "csv",
                   "--grid", "0.25:3.0:12", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    config_lines = [ln for ln in lines if ln.startswith("# ")]
    assert any(ln.startswith("# command=table") for ln in config_lines)
    assert any(ln.startswith("# quantity=void_prob") for ln in config_lines)
    header_at = len(config_lines)
    assert lines[header_at] == "r,value,stderr,seed"
    data = lines[header_at + 1:]
    assert len(data) == 12
    first = data[0].split(",")
    assert float(first[0]) == 0.25
    # 17 significant digits reproduce the double exactly
    assert float(first[1]) == void_prob_disk(0.25)
    assert first[2] == "" and first[3] == ""


def test_table_moment_json(tmp_path):
    out = tmp_path / "moment.json"
    rc = cli.main(["table", "--quantity", "moment", "--model",
                   "poisson_formula", "--region", "plane", "--k", "1",
                   "--budget", "4000", "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    row = body["rows"][0]
    assert row["model"] == "poisson_formula"
    assert row["value"] == pytest.approx(math.pi, abs=1e-10)


def test_table_w_constant_csv(tmp_path):
    out = tmp_path / "w.csv"
    rc = cli.main(["table", "--quantity", "w_constant", "--k", "1",
                   "--budget", "20000", "--format", "csv", "--out", str(out)])
    assert rc == 0
    lines = [ln for ln in out.read_text().splitlines()
             if not ln.startswith("#")]
    k, value, stderr, seed = lines[1].split(",")
    assert k == "1" and seed == "0"
    assert abs(float(value) - 0.5) < 0.02
    assert float(stderr) > 0


def test_table_gap_density_grid(tmp_path):
    out = tmp_path / "gap.json"
    rc = cli.main(["table", "--quantity", "gap_density", "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert len(body["rows"]) == 40
    assert all(row["value"] >= 0.0 for row in body["rows"])


def test_verify_analytic_passes(tmp_path):
    out = tmp_path / "verify.json"
    rc = cli.main(["verify", "--suite", "analytic", "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert body["all_ok"] is True
    assert len(body["checks"]) == 6
    assert all(c["ok"] for c in body["checks"])


def test_verify_discrete_passes(tmp_path):
    out = tmp_path / "verify.json"
    rc = cli.main(["verify", "--suite", "discrete", "--seed", "2",
                   "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert body["all_ok"] is True
    names = [c["name"] for c in body["checks"]]
    assert "loewner_domination_campaign" in names


def test_verify_montecarlo_passes(tmp_path):
    out = tmp_path / "verify.json"
    rc = cli.main(["verify", "--suite", "montecarlo", "--seed", "1",
                   "--budget", "20000", "--out", str(out)])
    assert rc == 0
    body = json.loads(out.read_text())
    assert body["all_ok"] is True


def test_verify_failure_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli.probabilities, "ev_typical_cell", lambda: 3.0)
    out = tmp_path / "verify.json"
    rc = cli.main(["verify", "--suite", "analytic", "--out", str(out)])
    assert rc == 1
    body = json.loads(out.read_text())
    assert body["all_ok"] is False
    failed = [c for c in body["checks"] if not c["ok"]]
    assert [c["name"] for c in failed] == ["typical_cell_mean_area"]
    assert "check failed" in capsys.readouterr().err


def test_verify_check_exception_is_reported(tmp_path, monkeypatch):
    def boom():
        raise RuntimeError("synthetic breakage")

    monkeypatch.setattr(cli.probabilities, "ev_typical_cell", boom)
    out = tmp_path / "verify.json"
    rc = cli.main(["verify", "--suite", "analytic", "--out", str(out)])
    assert rc == 1
    body = json.loads(out.read_text())
    bad = next(c for c in body["checks"]
               if c["name"] == "typical_cell_mean_area")
    assert "synthetic breakage" in bad["details"]["error"]


def test_config_errors_exit_two(tmp_path, capsys):
    assert cli.main(["table", "--quantity", "moment",
                     "--region", "torus:1"]) == 2
    assert cli.main(["sample", "--model", "ginibre", "-M", "0"]) == 2
    assert cli.main(["table", "--quantity", "void_prob",
                     "--grid", "1:2"]) == 2
    err = capsys.readouterr().err
    assert "ginibre-lab:" in err


def test_argparse_rejects_unknown_choices():
    with pytest.raises(SystemExit):
        cli.main(["sample", "--model", "grid"])
    with pytest.raises(SystemExit):
        cli.main(["verify", "--suite", "everything"])
    with pytest.raises(SystemExit):
        cli.main([])


def test_stdout_default_sink(capsys):
    rc = cli.main(["table", "--quantity", "void_prob", "--grid",
                   "0.5:1.0:2", "--format", "csv"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "r,value,stderr,seed" in out
