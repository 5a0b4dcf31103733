import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from qbm import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def schema(name):
    return cli._schema(name)


def test_fig1_final_row(capsys):
    code, out, _ = run(capsys, "coefficients", "--panel", "fig1", "--no-meta")
    assert code == 0
    rows = table(out)
    assert list(rows[0]) == ["panel", "t", "delta_omega_sq", "gamma", "d_normal", "f_anom"]
    assert {r["panel"] for r in rows} == set("abcdef")
    last = rows[-1]
    assert float(last["t"]) == 200.0
    assert abs(float(last["d_normal"]) - 0.049995) < 2 / 200
    assert abs(float(last["delta_omega_sq"]) + 9.999) < 1e-3


def test_single_point_at_zero(capsys):
    code, out, _ = run(capsys, "coefficients", "--grid", "1", "--t-end", "0", "--no-meta")
    rows = table(out)
    assert code == 0 and len(rows) == 1
    assert all(float(v) == 0.0 for v in rows[0].values())


def test_oracle_columns(capsys):
    code, out, _ = run(capsys, "coefficients", "--t-start", "0.5", "--t-end", "5", "--grid", "4",
                       "--oracle", "--no-meta")
    rows = table(out)
    assert code == 0
    assert {"oracle_gamma", "oracle_d_normal", "max_abs_diff"} <= set(rows[0])
    assert max(float(r["max_abs_diff"]) for r in rows) < 1e-7


def test_meta_line(capsys):
    _, out, _ = run(capsys, "coefficients", "--grid", "2", "--t-end", "1")
    assert out.startswith("# tool=qbm")
    _, out, _ = run(capsys, "coefficients", "--grid", "2", "--t-end", "1", "--no-meta")
    assert out.startswith("t,delta_omega_sq,gamma,d_normal,f_anom\n")


def test_json_coefficients_validates(capsys):
    code, out, _ = run(capsys, "coefficients", "--grid", "3", "--t-end", "2", "--format", "json")
    doc = json.loads(out)
    jsonschema.validate(doc, schema("table.schema.json"))
    assert doc["columns"][0] == "t" and len(doc["rows"]) == 3 and "meta" in doc


def test_oracle_single_audits(capsys):
    code, out, _ = run(capsys, "oracle", "--kind", "dissipation", "--time", "1", "--no-meta")
    doc = json.loads(out)
    jsonschema.validate(doc, schema("oracle.schema.json"))
    assert code == 0 and abs(doc["audits"][0]["diff"]) <= 1e-7
    code, out, _ = run(capsys, "oracle", "--kind", "normal_diff", "--time", "0", "--no-meta")
    audit = json.loads(out)["audits"][0]
    assert audit["closed"] == 0.0 and audit["oracle"] == 0.0


def test_oracle_random_audit(capsys):
    code, out, _ = run(capsys, "oracle", "--samples", "100", "--seed", "3", "--no-meta")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["count"] == 100
    assert doc["summary"]["max_rel_diff"] <= 1e-6 and doc["summary"]["all_within"]


def test_decoherence_regimes(capsys):
    code, out, _ = run(capsys, "decoherence-time", "--panel", "regimes", "--no-meta")
    doc = json.loads(out)
    jsonschema.validate(doc, schema("decoherence.schema.json"))
    recs = {r["label"]: r for r in doc["records"]}
    hf = recs["high_freq"]
    assert abs(hf["t_d"] / 0.1 - 1) < 0.3 and hf["regime_estimates"]["high_freq"]["value"] == 0.1
    assert hf["regime_tag"] == "high_freq"
    under = [r for r in doc["records"] if r["label"].startswith("underdamped")]
    assert len(under) == 3
    for r in under:
        assert r["t_d"] <= 1.05 * r["regime_estimates"]["underdamped_bound"]["value"]
    assert abs(recs["macroscopic"]["t_d"] / 0.396 - 1) < 0.3


def test_decoherence_zero_coupling(capsys):
    code, out, _ = run(capsys, "decoherence-time", "--gamma0", "0", "--t-end", "5", "--no-meta")
    rec = json.loads(out)["records"][0]
    assert code == 0 and rec["t_d"] is None and rec["no_decoherence"]["horizon"] == 5.0
    assert "no_decoherence" in rec["validity_tags"]


def test_decoherence_csv(capsys):
    code, out, _ = run(capsys, "decoherence-time", "--gamma0", "0.05,0.1", "--omega", "100",
                       "--format", "csv", "--no-meta")
    rows = table(out)
    assert code == 0 and [float(r["gamma0"]) for r in rows] == [0.05, 0.1]
    assert list(rows[0]) == list(cli.DECOHERENCE_COLUMNS)


def test_jobs_keep_order(capsys):
    args = ["decoherence-time", "--gamma0", "0.01,0.02,0.05,0.1", "--omega", "100", "--no-meta"]
    _, serial, _ = run(capsys, *args, "--jobs", "1")
    _, pooled, _ = run(capsys, *args, "--jobs", "2")
    assert serial == pooled


def test_evolve_inverted_zero_horizon(capsys):
    code, out, _ = run(capsys, "evolve-inverted", "--panel", "fig3", "--t-end", "0", "--no-meta")
    rows = table(out)
    assert code == 0 and len(rows) == 1
    assert list(rows[0]) == list(cli.EVOLVE_COLUMNS) and float(rows[0]["width_2a_minus_c"]) == 1.0


def test_evolve_inverted_zero_coupling_does_not_settle(capsys):
    code, out, _ = run(capsys, "evolve-inverted", "--panel", "fig3", "--gamma0", "0", "--format", "json",
                       "--no-meta")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["final_width"] < 1e-20 and doc["summary"]["min_width"] > 0


def test_printed_system_exit_code(capsys, caplog):
    code, _, _ = run(capsys, "evolve-inverted", "--panel", "fig3", "--ansatz", "printed")
    assert code == cli.EXIT_INTEGRATOR and "t = 7.45" in caplog.text


def test_wigner_output(capsys):
    code, out, _ = run(capsys, "wigner", "--grid", "5", "--format", "json", "--no-meta")
    doc = json.loads(out)
    assert code == 0 and doc["columns"] == list(cli.WIGNER_COLUMNS) and len(doc["rows"]) == 25
    assert abs(doc["summary"]["a_int_from_peaks"]) < 1e-6


@pytest.mark.parametrize("argv", [
    ["coefficients", "--mass", "0"],
    ["coefficients", "--panel", "fig3"],
    ["coefficients", "--panel", "nope"],
    ["evolve-inverted", "--mass", "2"],
    ["coefficients", "--bogus"],
    ["coefficients", "--spacing", "log", "--t-start", "0"],
])
def test_config_errors(capsys, argv):
    assert run(capsys, *argv)[0] == cli.EXIT_CONFIG


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("bath:\n  gamma0: 0.05\n  colour: blue\n")
    assert run(capsys, "coefficients", "--config", str(path))[0] == cli.EXIT_CONFIG
    assert run(capsys, "coefficients", "--config", str(tmp_path / "missing.yaml"))[0] != 0


def test_unwritable_output(tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir.csv"
    assert run(capsys, "coefficients", "--grid", "2", "--out", str(target))[0] == cli.EXIT_IO


def test_config_precedence(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("bath:\n  gamma0: 0.02\nsystem:\n  omega: 2.0\n")
    _, out, _ = run(capsys, "oracle", "--panel", "fig1", "--config", str(path), "--omega", "3",
                    "--no-meta")
    params = json.loads(out)["params"]
    # preset < file < flags
    assert params["bath"]["gamma0"] == 0.02
    assert params["system"]["omega"] == 3.0
    assert params["bath"]["lambda_cut"] == 100.0


def test_output_file_line_endings(tmp_path, capsys):
    path = tmp_path / "out.csv"
    assert run(capsys, "coefficients", "--grid", "5", "--t-end", "1", "--out", str(path))[0] == 0
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_numbers_have_twelve_digits():
    assert cli.fmt_number(1 / 3) == "0.333333333333"
    assert cli.fmt_number(-0.0) == "0"
    assert cli._json_value(float("nan")) is None


def test_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "qbm", "coefficients", "--grid", "2", "--no-meta"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("t,")
