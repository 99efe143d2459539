import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from macrobell.cli import main
from macrobell.kerr import FAULT_ENV


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_code(capsys, *argv):
    with pytest.raises(SystemExit) as info:
        main(list(argv))
    capsys.readouterr()
    return info.value.code


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_nbs_trace_columns_and_summary(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "nbs-trace", "--N", "2", "--kappa", "1", "--g", "30",
                       "--t-max", "100", "--steps", "200", "--summary", str(summary))
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["t", "t_scaled", "p_N", "p_0", "leakage"]
    assert len(data) == 201
    assert float(data[0]["p_N"]) == pytest.approx(1.0)
    s = json.loads(summary.read_text())
    assert {"omega_formula", "omega_fitted", "max_leakage"} <= set(s)


def test_single_boson_fitted_frequency(capsys):
    code, out, _ = run(capsys, "nbs-trace", "--N", "1", "--kappa", "2", "--g", "5",
                       "--format", "json")
    assert code == 0
    s = json.loads(out)["summary"]
    assert s["omega_fitted"] == pytest.approx(2.0, rel=0.01)


def test_zero_steps_is_usage_error(capsys):
    assert usage_code(capsys, "nbs-trace", "--N", "2", "--kappa", "1", "--g", "30",
                      "--steps", "0") == 2


def test_missing_required_flag(capsys):
    assert usage_code(capsys, "nbs-trace", "--N", "2", "--kappa", "1") == 2


def test_invalid_domain_value_is_usage_error(capsys):
    assert usage_code(capsys, "nbs-trace", "--N", "0", "--kappa", "1", "--g", "30") == 2


def test_numeric_failure_exits_one(capsys):
    code, _, err = run(capsys, "nbs-trace", "--N", "30", "--kappa", "0.01", "--g", "500")
    assert code == 1
    assert "nbs-trace" in err


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 2, "kappa": 1, "g": 30, "steps": 10}))
    code, out, _ = run(capsys, "nbs-trace", "--config", str(cfg))
    assert code == 0 and len(rows(out)) == 11
    code, out, _ = run(capsys, "nbs-trace", "--config", str(cfg), "--steps", "4")
    assert code == 0 and len(rows(out)) == 5


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 2, "kappa": 1, "g": 30, "bogus": 1}))
    assert usage_code(capsys, "nbs-trace", "--config", str(cfg)) == 2


def test_bell_ch_ideal_peak(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "bell-ch", "--mode", "ideal", "--phi-steps", "721",
                       "--summary", str(summary))
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["phi", "S", "p_pp_tt", "p_pp_ttp", "p_pp_tpt", "p_pp_tptp",
                             "p_A_plus", "p_B_plus"]
    s = json.loads(summary.read_text())
    assert s["peak_S"] == pytest.approx(1.2071, abs=1e-3)
    assert s["ideal_S_at_pi_over_16"] < 0


def test_bell_ch_hamiltonian_output_ranges(capsys):
    code, out, _ = run(capsys, "bell-ch", "--N", "10", "--kappa", "10", "--g", "49.433",
                       "--mode", "hamiltonian", "--phi-steps", "40")
    assert code == 0
    for r in rows(out):
        assert math.isfinite(float(r["S"]))
        for k in ("p_pp_tt", "p_pp_ttp", "p_pp_tpt", "p_pp_tptp", "p_A_plus", "p_B_plus"):
            assert 0.0 <= float(r[k]) <= 1.0
    assert max(float(r["S"]) for r in rows(out)) > 1.0


def test_hamiltonian_mode_needs_couplings(capsys):
    assert usage_code(capsys, "bell-ch", "--mode", "hamiltonian", "--N", "2") == 2


def test_outputs_identical_across_worker_counts(capsys, tmp_path):
    outs = []
    for w in ("1", "2"):
        path = tmp_path / f"o{w}.csv"
        code, _, _ = run(capsys, "bell-ch", "--N", "3", "--kappa", "1", "--g", "25",
                         "--mode", "hamiltonian", "--phi-steps", "12", "--workers", w,
                         "-o", str(path))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_kerr_chsh_large_amplitude(capsys):
    code, out, _ = run(capsys, "kerr-chsh", "--alpha", "8", "--beta", "8")
    assert code == 0
    s = json.loads(out)
    assert s["B"] == pytest.approx(2.444, abs=0.02)
    for pair in s["quadrant_probabilities"].values():
        assert all(0 <= p <= 1 for p in pair.values())


def test_kerr_degenerate_amplitude_exits_one(capsys):
    code, _, err = run(capsys, "kerr-chsh", "--alpha", "0.3", "--beta", "3")
    assert code == 1
    assert "overlap" in err


def test_kerr_sweep_all_violate(capsys):
    code, out, _ = run(capsys, "kerr-sweep", "--alpha-min", "2.5", "--alpha-max", "8",
                       "--steps", "12")
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["alpha", "B", "E1", "E2", "E3", "E4"]
    assert len(data) == 12
    assert all(float(r["B"]) > 2 for r in data)


def test_kerr_density_grid(capsys):
    code, out, _ = run(capsys, "kerr-density", "--alpha", "5", "--beta", "5", "--ta",
                       "1.0471975512", "--tb", "0", "--grid-points", "41")
    assert code == 0
    data = rows(out)
    assert len(data) == 41 * 41
    assert all(float(r["density"]) >= 0 for r in data)


def test_optimize_json(capsys):
    code, out, _ = run(capsys, "optimize", "--N", "2", "--kappa-range", "0.5:5",
                       "--g-range", "5:50", "--budget", "60")
    assert code == 0
    s = json.loads(out)
    assert s["evaluations"] <= 60
    assert s["best"]["score"] <= s["grid_best"]["score"]
    assert "objective" in s


def test_optimize_budget_below_minimum(capsys):
    assert usage_code(capsys, "optimize", "--N", "2", "--kappa-range", "0.1:10",
                      "--g-range", "1:100", "--budget", "10") == 2


def test_optimize_bad_range(capsys):
    assert usage_code(capsys, "optimize", "--N", "2", "--kappa-range", "nope",
                      "--g-range", "1:100") == 2


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "FAIL" not in out


def test_verify_filter(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "kerr")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines() if line.startswith(("kerr", "fock",
                                                                             "noon", "search",
                                                                             "josephson"))]
    assert names and all(n.startswith("kerr") for n in names)


def test_verify_fault_injection(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "kerr", "--inject-fault",
                       "skip-renormalization")
    assert code == 1
    assert "FAIL" in out
    assert FAULT_ENV not in os.environ


def test_verify_unknown_filter(capsys):
    assert usage_code(capsys, "verify", "--filter", "nothing-matches") == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "macrobell.cli", "kerr-chsh", "--alpha", "3",
                          "--beta", "3", "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("alpha,beta,E_tt")
