# -*- coding: utf-8 -*-
import json
import logging

import pytest

from backend.app.api.cli import effective_config, build_parser, int_list, main, read_config_file
from backend.app.connectors.storage.report_writer import read_output_config, read_table
from backend.app.core.errors import ExitCode, PreconditionError


def last_error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


# ==================== CONFIGURACIÓN EFECTIVA ====================


def test_int_list_parsing():
    assert int_list("1, 2,3") == [1, 2, 3]
    assert int_list("") == []
    with pytest.raises(PreconditionError):
        int_list("1,a")


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# corrida\nbeta = 2.0\nL = 0\nwindow=1\n", encoding="utf-8")
    args = build_parser().parse_args(["enumerate", "--config", str(path), "--beta", "1.5"])
    config = effective_config(args)
    assert config.parameters["beta"] == 1.5
    assert config.parameters["L"] == "0"
    assert config.parameters["window"] == 1
    assert config.parameters["config_file"] == str(path)
    assert "beta" not in config.defaults_applied
    assert "window" not in config.defaults_applied
    assert "method" in config.defaults_applied


def test_config_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour=blue\n", encoding="utf-8")
    assert read_config_file(str(path)) == {"colour": "blue"}
    args = build_parser().parse_args(["enumerate", "--config", str(path)])
    with pytest.raises(PreconditionError):
        effective_config(args)


# ==================== SUBCOMANDOS ====================


def test_enumerate_single_site_zero_window(tmp_path):
    out = tmp_path / "z.json"
    code = main(["enumerate", "--L", "0", "--window", "0", "--out", str(out)])
    assert code == ExitCode.OK
    payload = json.loads(out.read_text())
    assert payload["result"]["log_z"] == 0.0
    assert payload["config"]["parameters"]["window"] == 0
    assert "beta" in payload["config"]["defaults_applied"]


def test_enumerate_staircase(tmp_path):
    out = tmp_path / "stairs.json"
    code = main(["enumerate", "--bc", "staircase", "--a", "0", "--b", "0", "--L", "1", "--M", "1",
                 "--window", "1", "--out", str(out)])
    assert code == ExitCode.OK
    assert json.loads(out.read_text())["result"]["method"] == "transfer"


def test_invalid_staircase_exit_code(capsys):
    code = main(["enumerate", "--bc", "staircase", "--a", "0,1", "--b", "0", "--L", "1", "--M", "1"])
    assert code == ExitCode.PRECONDITION
    assert last_error(capsys)["error"] == "INVALID_STAIRCASE"


def test_invalid_beta_exit_code(capsys):
    assert main(["enumerate", "--L", "0", "--beta", "-1"]) == ExitCode.PRECONDITION
    assert last_error(capsys)["exit_code"] == 2


def test_verify_fkg_csv(tmp_path):
    out = tmp_path / "fkg.csv"
    code = main(["verify-fkg", "--shape", "3x1", "--window", "2", "--format", "csv", "--out", str(out)])
    assert code == ExitCode.OK
    frame = read_table(out)
    assert frame["violations"].iloc[0] == 0
    assert read_output_config(out)["command"] == "verify-fkg"


def test_verify_fkg_even_box_shape(tmp_path):
    out = tmp_path / "fkg.json"
    assert main(["verify-fkg", "--shape", "2x2", "--window", "2", "--out", str(out)]) == ExitCode.OK
    result = json.loads(out.read_text())["result"]
    assert result["n_sites"] == 4
    assert result["violations"] == []
    assert result["violation_count"] == 0


def test_verify_fkg_L_box_is_a_side_length(tmp_path, caplog):
    out = tmp_path / "box.json"
    with caplog.at_level(logging.INFO, logger="SOS.RUNNER"):
        code = main(["verify-fkg", "--L-box", "2", "--beta", "1", "--window", "2", "--out", str(out)])
    assert code == ExitCode.OK
    assert "violations: 0" in caplog.text
    result = json.loads(out.read_text())["result"]
    assert result["n_sites"] == 4
    assert result["pairs_checked"] == 625 * 624 // 2


def test_verify_fkg_rejects_empty_box(capsys):
    assert main(["verify-fkg", "--L-box", "0"]) == ExitCode.PRECONDITION
    assert last_error(capsys)["error"] == "INVALID_REGION"


def test_guard_exit_code(monkeypatch, capsys):
    monkeypatch.setenv("SOS_FKG_PAIR_LIMIT", "10")
    assert main(["verify-fkg", "--shape", "3x1", "--window", "2"]) == ExitCode.GUARD
    error = last_error(capsys)
    assert error["error"] == "FKG_GUARD"
    assert error["exit_code"] == 3


def test_potentials_table(tmp_path):
    out = tmp_path / "phi.csv"
    assert main(["potentials", "--max-sites", "2", "--box-side", "2", "--window", "1", "--out", str(out)]) == 0
    frame = read_table(out)
    assert set(frame["size"]) == {1, 2}


def test_monotonicity_table(tmp_path):
    out = tmp_path / "mono.csv"
    code = main(["monotonicity", "--a", "0", "--b", "0", "--M-list", "1,2", "--L", "1", "--window", "1",
                 "--out", str(out)])
    assert code == ExitCode.OK
    frame = read_table(out)
    assert list(frame["M"]) == [1, 2]
    assert (frame["gap"] == 0).all()


def test_tau0_exact(tmp_path):
    out = tmp_path / "tau.json"
    assert main(["tau0", "--L", "1", "--window", "1", "--out", str(out)]) == ExitCode.OK
    result = json.loads(out.read_text())["result"]
    assert result["tau_hat"] > 0
    assert result["normalization"] == "interface"


def test_tau0_flags_give_exit_code_4(monkeypatch, tmp_path):
    monkeypatch.setenv("SOS_MIN_EFFECTIVE_SAMPLE_SIZE", "1000000")
    out = tmp_path / "tau_mc.json"
    code = main(["tau0", "--mc", "--L", "0", "--sweeps", "20", "--burnin", "2", "--out", str(out)])
    assert code == ExitCode.NUMERICAL_FLAG
    assert json.loads(out.read_text())["result"]["log_ratio"]["flags"]


def test_positivity_exact_rows(tmp_path):
    out = tmp_path / "pos.csv"
    code = main(["positivity", "--exact", "--L", "1", "--window", "2", "--granularity", "row",
                 "--format", "csv", "--out", str(out)])
    assert code == ExitCode.OK
    frame = read_table(out)
    assert len(frame) == 3
    assert frame["log_p"].iloc[0] == pytest.approx(frame["log_value"].sum())


def test_sample_with_snapshot(tmp_path):
    out = tmp_path / "chain.csv"
    snapshot = tmp_path / "last.txt"
    code = main(["sample", "--L", "1", "--sweeps", "10", "--burnin", "2", "--level-lines",
                 "--snapshot", str(snapshot), "--out", str(out)])
    assert code == ExitCode.OK
    frame = read_table(out)
    assert len(frame) == 10
    assert {"sweep", "mean_height", "center_height", "H_of_L"} <= set(frame.columns)
    assert snapshot.read_text().splitlines()[0] == "3 3 0"


@pytest.mark.parametrize("argv", [
    ["sample", "--L", "1", "--sweeps", "20", "--burnin", "2", "--seed", "5"],
    ["positivity", "--L", "1", "--sweeps", "20", "--burnin", "2", "--seed", "5", "--granularity", "row"],
])
def test_same_seed_gives_identical_output(tmp_path, argv):
    out = tmp_path / "run.csv"
    assert main(argv + ["--out", str(out)]) in (ExitCode.OK, ExitCode.NUMERICAL_FLAG)
    first = out.read_bytes()
    assert main(argv + ["--out", str(out)]) in (ExitCode.OK, ExitCode.NUMERICAL_FLAG)
    assert out.read_bytes() == first


def test_contours_from_file(tmp_path):
    field = tmp_path / "spike.txt"
    field.write_text("3 3 0\n0 0 0\n0 1 0\n0 0 0\n", encoding="utf-8")
    out = tmp_path / "contours.csv"
    assert main(["contours", "--input", str(field), "--format", "csv", "--out", str(out)]) == ExitCode.OK
    frame = read_table(out)
    assert frame.to_dict("records") == [{"level": 1, "count": 1, "total_length": 4, "max_length": 4}]


def test_contours_needs_input(capsys):
    assert main(["contours"]) == ExitCode.PRECONDITION
    assert last_error(capsys)["error"] == "INVALID_PARAMETER"


def test_scaling_rejects_small_L(capsys):
    assert main(["scaling", "--L", "1,2"]) == ExitCode.PRECONDITION
