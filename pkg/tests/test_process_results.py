import json
import os
import sys
from fractions import Fraction

import mpmath
import pytest

import config
import gcs_utils
import launch_all_experiments
import process_results
from cli import ReportRow, emit


def write_table(path, brackets, holds=True, scale=1):
    rows = [ReportRow(n=n, bracket_n=mpmath.mpf(b), r=Fraction(3, 5), lhs=scale * mpmath.mpf(b) ** -0.5,
                      rhs=mpmath.mpf(1), normalized_error=scale * mpmath.mpf(b) ** -0.5, holds=holds,
                      precision_ok=True)
            for n, b in brackets]
    path.write_text(emit(rows, "csv"))
    return path


def test_summarize_results(tmp_path):
    write_table(tmp_path / "thm1_q1.csv", [(16, 16), (64, 64), (256, 256)])
    write_table(tmp_path / "vor_i.csv", [(64, 64), (128, 128)], holds=False)
    summaries = process_results.summarize_results(str(tmp_path))

    assert summaries["thm1_q1"]["rows"] == 3
    assert summaries["thm1_q1"]["all_holds"]
    assert summaries["thm1_q1"]["loglog_slope"] == pytest.approx(-0.5, abs=1e-9)
    assert summaries["thm1_q1"]["max_normalized_error"] == pytest.approx(0.25)
    assert not summaries["vor_i"]["all_holds"]

    index = json.loads((tmp_path / "index.json").read_text())
    assert index["tables"] == ["thm1_q1.csv", "vor_i.csv"]
    assert index["failing"] == ["vor_i"]
    assert json.loads((tmp_path / "summary.json").read_text()) == summaries


def test_summarize_empty_folder(tmp_path):
    assert process_results.summarize_results(str(tmp_path / "empty")) == {}


def test_load_table_rejects_foreign_csv(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("time,price\n1,2\n")
    with pytest.raises(ValueError, match="missing columns"):
        process_results.load_table(str(path))


def test_compare_to_baseline(tmp_path):
    current = write_table(tmp_path / "current.csv", [(16, 16), (64, 64)])
    same = write_table(tmp_path / "same.csv", [(16, 16), (64, 64)])
    assert process_results.compare_to_baseline(str(current), str(same)) == []

    shifted = write_table(tmp_path / "shifted.csv", [(16, 16), (64, 64)], scale=1 + 1e-12)
    columns = {d["column"] for d in process_results.compare_to_baseline(str(current), str(shifted))}
    assert columns == {"lhs", "normalized_error"}
    assert process_results.compare_to_baseline(str(current), str(shifted), rtol=1e-6) == []

    longer = write_table(tmp_path / "longer.csv", [(16, 16), (64, 64), (256, 256)])
    drifts = process_results.compare_to_baseline(str(current), str(longer))
    assert drifts == [{"n": 256, "column": "n", "current": None, "baseline": None, "detail": "only in baseline"}]


def test_compare_main_exit_codes(tmp_path, capsys):
    current = write_table(tmp_path / "current.csv", [(16, 16), (64, 64)])
    failing = write_table(tmp_path / "failing.csv", [(16, 16), (64, 64)], holds=False)
    assert process_results.main(["--compare", str(current), str(current)]) == 0
    assert process_results.main(["--compare", str(current), str(failing)]) == 1
    assert "holds" in capsys.readouterr().out
    assert process_results.main(["--compare", str(current)]) == 2


def test_gcs_is_off_without_bucket(tmp_path):
    assert not gcs_utils.is_gcs_enabled()
    assert not process_results.fetch_baseline("thm1_q1", str(tmp_path / "thm1_q1.csv"))
    assert gcs_utils.archive_folder(str(tmp_path)) == []
    assert not gcs_utils.upload_file(str(tmp_path / "missing.csv"))
    assert not gcs_utils.download_if_exists("qbs-results/baselines/thm1_q1.csv", str(tmp_path / "x.csv"))
    with pytest.raises(RuntimeError):
        gcs_utils.get_bucket()


def test_blob_names_and_content_types():
    path = os.path.join("results", "thm1_q1.csv")
    assert gcs_utils.blob_name_for(path, "qbs-results/") == "qbs-results/results/thm1_q1.csv"
    assert gcs_utils.blob_name_for(path, "") == "results/thm1_q1.csv"
    assert gcs_utils.guess_content_type("summary.json") == "application/json"
    assert gcs_utils.guess_content_type("thm1_q1.csv") == "text/csv"


def test_launcher_command(tmp_path):
    launcher = launch_all_experiments.ExperimentLauncher(str(tmp_path))
    command = launcher.command_for("vor_iii")
    assert command[0] == sys.executable
    assert command[1].endswith("cli.py")
    assert command[-2:] == ["--out", os.path.join(str(tmp_path), "vor_iii.csv")]
    assert command[2:-2] == config.preset_to_argv("vor_iii")
    assert "--variant" in command


def test_select_presets(capsys):
    assert launch_all_experiments.select_presets([]) is None
    assert launch_all_experiments.select_presets(["rate_q1"]) == ["rate_q1"]
    with pytest.raises(SystemExit) as excinfo:
        launch_all_experiments.select_presets(["rate_q1", "btc"])
    assert excinfo.value.code == 2
    assert "btc" in capsys.readouterr().out


def test_presets():
    assert "thm1_q1" in config.get_available_presets()
    assert config.preset_to_argv("identity")[:2] == ["--mode", "identity"]
    preset = config.get_preset("rate_q15")
    preset["n"] = "1"
    assert config.get_preset("rate_q15")["n"] == "11:22"
    with pytest.raises(KeyError, match="unknown preset"):
        config.get_preset("eth")
