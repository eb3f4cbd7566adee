import json

import pytest

from rectspec import cli_report
from rectspec.circle_sets import KempermanVerdict
from rectspec.cli_report import (
    EXIT_BOUND,
    EXIT_INVALID,
    EXIT_NOT_DISJOINT,
    EXIT_OK,
    EXIT_UNWITNESSED,
    main,
)


@pytest.fixture(autouse=True)
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("RECTSPEC_OUTPUT_DIR", str(tmp_path / "output"))
    return tmp_path / "output"


def last_json(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def test_rects_circle_square(capsys):
    assert main(["rects", "builtin:circle", "--ratio", "1", "--quiet"]) == EXIT_OK
    assert "✅ witness 0" in capsys.readouterr().out


def test_rects_writes_witnesses(tmp_path):
    out = tmp_path / "rects.json"
    assert main(["rects", "builtin:ellipse-2-1", "--r", "0.5", "--out", str(out), "--quiet"]) == EXIT_OK
    dumped = json.loads(out.read_text())
    assert dumped and all(len(w["vertices"]) == 4 for w in dumped)


def test_rects_rejects_ratio_above_one():
    assert main(["rects", "builtin:circle", "--ratio", "1.5"]) == EXIT_INVALID


def test_rects_unwitnessed(monkeypatch, capsys):
    monkeypatch.setattr(cli_report, "solve_at_theta", lambda curve, theta, config: [])
    assert main(["rects", "builtin:circle", "--ratio", "0.3", "--quiet"]) == EXIT_UNWITNESSED
    assert "not proven absent" in capsys.readouterr().out


def test_unknown_builtin_is_invalid():
    assert main(["rects", "builtin:no-such-curve", "--ratio", "1"]) == EXIT_INVALID


def test_order_domes(capsys):
    assert main(["order", "builtin:dome-1", "builtin:dome-2-rot-half"]) == EXIT_OK
    result = last_json(capsys)
    assert result["relation"] == "A ≺ B"
    assert result["a_precedes_b"] and not result["b_precedes_a"]


def test_order_reversed(capsys):
    assert main(["order", "builtin:dome-2-rot-half", "builtin:dome-1"]) == EXIT_OK
    assert last_json(capsys)["relation"] == "B ≺ A"


def test_order_same_strip_not_disjoint():
    assert main(["order", "builtin:dome-1", "builtin:dome-1"]) == EXIT_NOT_DISJOINT


def test_kemperman(capsys):
    assert main(["kemperman", "--a", "0:0.3", "--b", "0.1:0.5"]) == EXIT_OK
    result = last_json(capsys)
    assert result["holds"]
    assert result["product"] == [[pytest.approx(0.1), pytest.approx(0.8)]]


def test_kemperman_bad_intervals():
    assert main(["kemperman", "--a", "0.3-0.1", "--b", "0:0.5"]) == EXIT_INVALID


def test_kemperman_violation_exit(monkeypatch):
    broken = KempermanVerdict(lhs=0.1, rhs=0.5, holds=False, measure_a=0.3, measure_b=0.4)
    monkeypatch.setattr(cli_report.cs, "kemperman_check", lambda A, B: broken)
    assert main(["kemperman", "--a", "0:0.3", "--b", "0.1:0.5"]) == EXIT_BOUND


def test_unknown_suite():
    assert main(["verify", "no-such-suite"]) == EXIT_INVALID


def test_missing_command():
    assert main([]) == EXIT_INVALID


def test_bad_config_is_invalid():
    assert main(["kemperman", "--a", "0:0.3", "--b", "0.1:0.5", "--grid", "8"]) == EXIT_INVALID


def test_verify_kemperman(capsys):
    assert main(["verify", "kemperman", "--seed", "7"]) == EXIT_OK
    summary = last_json(capsys)
    assert summary["suite"] == "kemperman"
    assert summary["failures"] == 0
    assert summary["cases"] >= 1000


def test_verify_cycles(capsys):
    assert main(["verify", "cycles", "--seed", "42"]) == EXIT_OK
    summary = last_json(capsys)
    assert summary["suite"] == "cycles"
    assert summary["seed"] == 42
    assert summary["cases"] == 51
    assert summary["failures"] == 0
    assert summary["first_failure"] is None


def test_verify_triples(capsys):
    assert main(["verify", "triples", "--seed", "0"]) == EXIT_OK
    summary = last_json(capsys)
    assert summary["suite"] == "triples"
    assert summary["passed"]
    assert summary["cases"] == 2 + 200 + 1


def test_verify_failure_exit_code(monkeypatch, capsys):
    real = cli_report.cycle_suite

    def scrambled(strips, **kwargs):
        report = real(strips, **kwargs)
        return report.model_copy(update={"order": list(reversed(report.order))})

    monkeypatch.setattr(cli_report, "cycle_suite", scrambled)
    assert main(["verify", "cycles", "--seed", "42"]) == EXIT_UNWITNESSED
    assert last_json(capsys)["failures"] > 0


def test_spectrum_invalid_curve(tmp_path):
    bad = tmp_path / "figure8.json"
    bad.write_text(json.dumps({"type": "fourier", "K": 2, "coeffs": [[0, 0], [0, 0], [0, 0], [0, 0], [1, 0]]}))
    assert main(["spectrum", str(bad), "--quiet"]) == EXIT_INVALID


def test_spectrum_missing_file(tmp_path):
    assert main(["spectrum", str(tmp_path / "missing.json"), "--quiet"]) == EXIT_INVALID


def test_spectrum_circle(output_dir, capsys):
    assert main(["spectrum", "builtin:circle", "--grid", "32", "--dtheta", "0.05", "--quiet"]) == EXIT_OK
    result = last_json(capsys)
    assert result["verdict"]
    assert result["measure"] >= 0.9
    assert (output_dir / "circle-spectrum.json").exists()
    assert (output_dir / "circle-spectrum.csv").exists()


def test_spectrum_bound_exit(monkeypatch):
    class Failing:
        passed = False

    monkeypatch.setattr(cli_report, "corollary_check", lambda report: Failing())
    assert main(["spectrum", "builtin:circle", "--grid", "32", "--dtheta", "0.05", "--quiet"]) == EXIT_BOUND
