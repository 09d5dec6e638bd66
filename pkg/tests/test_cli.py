import json
import math
import os

import numpy as np
import pytest

from covertq.cli import main
from covertq.errors import ParseError
from covertq.specio import load_spec

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "src", "covertq", "fixtures")
QUBIT = os.path.join(FIXTURES, "qubit_cnot.json")
DIAG = os.path.join(FIXTURES, "diag_states.json")
CLASSICAL = os.path.join(FIXTURES, "classical_full_csi.json")
FAULTY = os.path.join(FIXTURES, "faulty_channel.json")


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_divergence_identical_states(capsys):
    code, out, _ = run_cli(capsys, "divergence", "--spec", DIAG,
                           "--measure", "trace", "--a", "pure0", "--b", "pure0")
    assert code == 0
    assert json.loads(out)["results"]["value"] == pytest.approx(0.0, abs=1e-12)


def test_divergence_matches_classical_oracle(capsys):
    code, out, _ = run_cli(capsys, "divergence", "--spec", DIAG,
                           "--measure", "sandwiched", "--order", "1.25",
                           "--a", "rho", "--b", "sigma")
    assert code == 0
    got = json.loads(out)["results"]["value"]
    p = np.array([0.3, 0.7])
    q = np.array([0.6, 0.4])
    alpha = 0.25
    oracle = math.log2(float(np.sum(p ** (1 + alpha) * q ** (-alpha)))) / alpha
    assert got == pytest.approx(oracle, abs=1e-9)


def test_divergence_support_violation_flag(capsys):
    code, out, _ = run_cli(capsys, "divergence", "--spec", DIAG,
                           "--measure", "relent", "--a", "mix", "--b", "pure0")
    assert code == 0
    res = json.loads(out)["results"]
    assert res["value"] == "inf" and res["support_violation"]


def test_malformed_spec_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json }")
    code, _, err = run_cli(capsys, "divergence", "--spec", str(bad),
                           "--measure", "trace")
    assert code == 2
    assert "line" in err


def test_missing_field_diagnostic(tmp_path):
    bad = tmp_path / "bad2.json"
    bad.write_text(json.dumps({"version": "1", "kind": "quantum",
                               "channel": {"kraus": []}}))
    with pytest.raises(ParseError) as exc:
        load_spec(str(bad))
    assert "factors" in str(exc.value)


def test_bound_report_and_optimize(capsys):
    code, out, _ = run_cli(capsys, "bound", "--spec", QUBIT, "--which", "thm1")
    assert code == 0
    res = json.loads(out)["results"]
    assert set(res["eigencounts"]) == {"v_B", "v_E", "v_S"}
    default_total = res["pe_bound"] + res["covert_bound"]

    code2, out2, _ = run_cli(capsys, "bound", "--spec", QUBIT, "--which", "thm1",
                             "--optimize")
    assert code2 == 0
    opt = json.loads(out2)["results"]["optimized"]
    assert opt["value"] <= default_total + 1e-9


def test_bound_thm5_ratio(capsys):
    code, out, _ = run_cli(capsys, "bound", "--spec", QUBIT, "--which", "thm5")
    assert code == 0
    res = json.loads(out)["results"]
    rates = res["rates"]
    ratio = res["secure_covert_bound"] / res["covert_bound"]
    expected = 2.0 ** (rates["alpha"] * rates["R"] / 2.0) / math.sqrt(2.0)
    assert ratio == pytest.approx(expected, rel=1e-9)


def test_bound_lemma_commands(capsys):
    code, out, _ = run_cli(capsys, "bound", "--spec", QUBIT, "--which", "lemma1")
    assert code == 0
    assert json.loads(out)["results"]["bound"] > 0
    code2, out2, _ = run_cli(capsys, "bound", "--spec", QUBIT, "--which", "lemma2")
    assert code2 == 0
    res = json.loads(out2)["results"]
    assert res["miss_bound"] > 0 and res["false_alarm_bound"] > 0


def test_region_commands_and_csv(tmp_path, capsys):
    csv_path = tmp_path / "boundary.csv"
    code, out, _ = run_cli(capsys, "region", "--spec", QUBIT, "--which", "cc_csk",
                           "--csv", str(csv_path))
    assert code == 0
    res = json.loads(out)["results"]
    assert "region" in res and "sweep" in res
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "w_R,w_RK,R,R_K,active"
    assert len(lines) == 6  # header + default sweep of 5

    code2, out2, _ = run_cli(capsys, "region", "--spec", QUBIT, "--which", "csc_csk")
    assert code2 == 0
    assert json.loads(out2)["results"]["nested_in_cc_csk"] is True


def test_region_classical_and_causal(capsys):
    code, out, _ = run_cli(capsys, "region", "--spec", CLASSICAL, "--which", "thm6")
    assert code == 0
    res = json.loads(out)["results"]
    labels = [c["label"] for c in res["region"]["constraints"]]
    assert labels == ["R", "R+R_K"]

    code2, out2, _ = run_cli(capsys, "region", "--spec", CLASSICAL, "--which", "thm3")
    assert code2 == 0
    assert json.loads(out2)["results"]["value"] > 0

    code3, out3, _ = run_cli(capsys, "region", "--spec", CLASSICAL, "--which", "causal")
    assert code3 == 0
    sweep = json.loads(out3)["results"]["sweep"]
    assert len(sweep) == 1  # single scalar row


def test_simulate_quantum_pass_and_determinism(tmp_path, capsys):
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    code, _, _ = run_cli(capsys, "simulate", "--spec", QUBIT, "--target", "quantum",
                         "--trials", "60", "--seed", "5", "--out", str(out_a))
    assert code == 0
    code2, _, _ = run_cli(capsys, "simulate", "--spec", QUBIT, "--target", "quantum",
                          "--trials", "60", "--seed", "5", "--out", str(out_b))
    assert code2 == 0
    doc_a = json.loads(out_a.read_text())
    doc_b = json.loads(out_b.read_text())
    assert all(doc_a["verdicts"].values())
    del doc_a["wall_clock_s"], doc_b["wall_clock_s"]
    assert json.dumps(doc_a, sort_keys=True) == json.dumps(doc_b, sort_keys=True)


def test_simulate_refuses_few_trials(capsys):
    code, _, err = run_cli(capsys, "simulate", "--spec", QUBIT, "--target", "quantum",
                           "--trials", "10", "--seed", "1")
    assert code == 6
    assert "trials" in err


def test_simulate_classical(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--spec", CLASSICAL,
                           "--target", "classical", "--trials", "80", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["verdicts"]["resolvability"]
    assert doc["results"]["resolvability"]["estimate"] <= \
        doc["results"]["resolvability"]["bound"] + 1e-9


def test_verify_suites_pass(capsys):
    code, out, _ = run_cli(capsys, "verify", "--suite", "fm", "--seed", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["verdicts"]["fm"]


def test_verify_rejects_faulty_channel(capsys):
    code, _, err = run_cli(capsys, "verify", "--suite", "dataprocessing",
                           "--spec", FAULTY, "--seed", "2")
    assert code == 3
    assert "trace preserving" in err


def test_report_roundtrip(tmp_path, capsys):
    out_path = tmp_path / "r.json"
    code, stdout, _ = run_cli(capsys, "bound", "--spec", QUBIT, "--which", "thm1",
                              "--out", str(out_path))
    assert code == 0
    on_disk = json.loads(out_path.read_text())
    printed = json.loads(stdout)
    assert on_disk == printed
    # round-trip: parse and re-serialize losslessly
    assert json.loads(json.dumps(on_disk, sort_keys=True)) == on_disk


def test_verify_all_suites(capsys):
    code, out, _ = run_cli(capsys, "verify", "--suite", "all", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert set(doc["verdicts"]) == {"pinching", "dataprocessing", "fm", "reduction"}
    assert all(doc["verdicts"].values())


def test_region_corollaries(capsys):
    code, out, _ = run_cli(capsys, "region", "--spec", QUBIT, "--which", "corollaries")
    assert code == 0
    res = json.loads(out)["results"]
    assert {"R_CC", "R_CSK", "R_CSC"} <= set(res)
    assert res["R_CSC"] <= min(res["R_CC"], res["R_CSK"]) + 1e-12
