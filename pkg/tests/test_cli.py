import json
import subprocess
import sys

import pytest

from lorentz_range.cli import main

P5 = '{"kind":"power","alpha":0.5}'
P1 = '{"kind":"power","alpha":1.0}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_psi_row(capsys):
    code, out, _ = run(capsys, "psi", "--phi", P5, "--u", "1")
    row = json.loads(out)["rows"][0]
    assert code == 0
    assert row["u"] == 1.0
    assert row["psi"] == pytest.approx(0.82436, abs=1e-5)
    assert row["w_star"] == pytest.approx(2.71828, abs=1e-4)


def test_psi_domain_violation_is_usage_error(capsys):
    code, _, err = run(capsys, "psi", "--phi", P5, "--u", "0")
    assert code == 2 and "error" in err


def test_malformed_phi_is_usage_error(capsys):
    assert run(capsys, "psi", "--phi", '{"kind":"cubic"}', "--u", "1")[0] == 2
    assert run(capsys, "psi", "--phi", "{not json", "--u", "1")[0] == 2


def test_psi_csv(capsys):
    code, out, _ = run(capsys, "psi", "--phi", P5, "--u", "1", "4", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "u,psi,w_star" and len(lines) == 3


def test_check_continuous_exit_codes(capsys):
    code, out, _ = run(capsys, "check-continuous", "--phi", P5)
    assert code == 0 and json.loads(out)["verdict"] == "bounded_with_c"
    code, out, _ = run(capsys, "check-continuous", "--phi", P1, "--psi", P1)
    assert code == 1 and json.loads(out)["verdict"] == "tail_divergent"


def test_check_discrete(capsys):
    assert run(capsys, "check-discrete", "--phi", P5, "--n", "256")[0] == 0
    assert run(capsys, "check-discrete", "--phi", P1, "--n", "256")[0] == 1
    assert run(capsys, "check-discrete", "--phi", P5, "--n", "8")[0] == 2


def test_witness_commands(capsys):
    code, out, _ = run(capsys, "witness", "--phi", P5, "--u", "1")
    assert code == 0 and json.loads(out)["norm"] == pytest.approx(0.82436, abs=1e-5)
    code, out, _ = run(capsys, "witness", "--phi", P5, "--x", '{"layers": [[1, 1]]}')
    assert code == 0 and json.loads(out)["pass"]
    assert run(capsys, "witness", "--phi", P5)[0] == 2


def test_hilbert_commands(capsys):
    code, out, _ = run(capsys, "hilbert", "--x", '{"layers": [[1, 1]]}', "--t", "1")
    assert code == 0 and json.loads(out)["min_slack"] == pytest.approx(0.0615, abs=1e-4)
    code, out, _ = run(capsys, "hilbert", "--x", '{"breakpoints": [0, 1], "values": [1]}', "--t", "-1")
    assert code == 0 and json.loads(out)["H"][0] == pytest.approx(-0.22064, abs=1e-5)
    assert run(capsys, "hilbert", "--x", '{"breakpoints": [0, 1], "values": [1]}', "--t", "1")[0] == 2


def test_phi0_and_truncate_and_doi(capsys):
    assert run(capsys, "phi0-check", "--samples", "20")[0] == 0
    code, out, _ = run(capsys, "truncate", "--matrix", '{"n": 2, "re": [[1, 2], [3, 4]]}')
    assert code == 0 and json.loads(out)["T"]["re"] == [[0, -2], [3, 0]]
    assert run(capsys, "truncate", "--samples", "3", "--dim", "8")[0] == 0
    code, out, _ = run(capsys, "doi", "--a", '{"n": 2, "re": [[0, 0], [0, 1]]}', "--f", '{"x": [0, 1, 2], "y": [0, 1, 4]}',
                       "--matrix", '{"n": 2, "re": [[1, 2], [3, 4]]}')
    assert code == 0 and json.loads(out)["result"]["re"] == [[0, 2], [3, 0]]
    assert run(capsys, "doi", "--samples", "10", "--dim", "6")[0] == 0


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"phi": {"kind": "power", "alpha": 0.5}, "u": [4.0]}))
    code, out, _ = run(capsys, "psi", "--config", str(cfg))
    assert code == 0 and json.loads(out)["rows"][0]["psi"] == pytest.approx(1.64872, abs=1e-5)
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "psi", "--config", str(cfg))[0] == 2


def test_suite_subset_json_and_csv(capsys):
    code, out, _ = run(capsys, "suite", "--experiments", "phi0_sandwich", "measurable_set", "--no-timing")
    data = json.loads(out)
    assert code == 0 and [d["experiment"] for d in data] == ["phi0_sandwich", "measurable_set"]
    assert all("ms" not in d for d in data)
    code, out, _ = run(capsys, "suite", "--experiments", "phi0_sandwich", "--format", "csv")
    assert out.splitlines()[0] == "experiment,sample_id,ratio"


def test_module_entry_point(tmp_path):
    out = tmp_path / "psi.csv"
    res = subprocess.run([sys.executable, "-m", "lorentz_range", "psi", "--phi", P5, "--u", "1", "--format", "csv",
                          "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0
    assert out.read_text().startswith("u,psi,w_star\n1,0.82436063535")
