import csv
import json
import subprocess
import sys

import pytest

from cat0rates.cli import main
from cat0rates.iteration import CSV_COLUMNS
from cat0rates.scenario import FIXTURE_ENV, bundled_scenarios


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv,expected", [
    (["rates", "phi", "--eps", "1", "--b", "1"], "21"),
    (["rates", "phi", "--eps", "1/2", "--b", "1"], "273"),
    (["rates", "chi-fejer", "--n", "5", "--m", "3", "--r", "2"], "9"),
    (["rates", "chi-m", "--g", "table:1,4:0", "--n", "3", "--k", "2"], "12"),
    (["rates", "monotone-cauchy-bound", "--b", "1", "--eps-prime", "1/3", "--k", "2"], "6"),
])
def test_rates_values(capsys, argv, expected):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out.strip() == expected


def test_rates_json_certificate(capsys):
    code, out, _ = run(capsys, "rates", "phi", "--eps", "2", "--b", "1", "--json")
    data = json.loads(out)
    assert code == 0 and data["bound"] == "4" and data["inputs"]["eps"] == "2"


def test_psi_hat_region_verbose(capsys):
    code, out, _ = run(capsys, "rates", "psi-hat", "--k", "0", "--g", "const:1", "--b", "1/2",
                       "--region", '{"box":{"lo":[0],"hi":[1]}}', "-v")
    lines = out.splitlines()
    assert code == 0 and int(lines[0]) == 11664 * (1 + 2**108) + 1
    assert lines[1] == "= 11664*(1+2^108)+1"


def test_psi_hat_identity_warns_lower_bound(capsys):
    code, out, err = run(capsys, "rates", "psi-hat", "--k", "0", "--g", "identity", "--b", "1/2", "--tb", "8")
    assert code == 0 and "lower bound only" in err


def test_phi_prime_with_schedule(capsys):
    code, out, _ = run(capsys, "rates", "phi-prime", "--eps", "3", "--b", "1", "--err-eps", "zero")
    # alpha = 0 and phi(1, 2(b+B)) = 4 * 68 + 1
    assert code == 0 and out.strip() == "273"


def test_malformed_rational_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["rates", "phi", "--eps", "1/0", "--b", "1"])
    assert info.value.code == 2
    assert "malformed rational" in capsys.readouterr().err


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "rates", "phi", "--eps", "0", "--b", "1")
    assert code == 2 and err.startswith("error:")


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0 and out.split() == [p.stem for p in bundled_scenarios()]


def test_run_writes_csv(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "run", "two_intervals", "-o", str(path))
    rows = list(csv.reader(path.open()))
    assert code == 0 and "wrote 200 rows" in out
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 201
    assert rows[1][:2] == ["0", "1"]


def test_verify_text_and_json(capsys, tmp_path):
    path = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "two_intervals.json", "--json", str(path))
    report = json.loads(path.read_text())
    assert code == 0 and out.startswith("scenario two_intervals: PASS")
    assert report["scenario_id"] == "two_intervals" and all(c["status"] != "fail" for c in report["checks"])


def test_verify_parallel(capsys):
    code, out, _ = run(capsys, "verify", "two_intervals", "prox_pair", "--parallel")
    assert code == 0 and out.count(": PASS") == 2


def test_verify_missing_file(capsys):
    code, _, err = run(capsys, "verify", "no_such_scenario")
    assert code == 2 and "no scenario file" in err


def test_metastability(capsys):
    code, out, _ = run(capsys, "metastability", "two_intervals", "--k", "1", "--g", "const:1")
    assert code == 0
    assert "(x_n) k=1 g=const:1: psi_hat " in out and "found n=1" in out


def test_fixture_env_var(tmp_path):
    src = next(p for p in bundled_scenarios() if p.stem == "two_intervals")
    (tmp_path / "mine.json").write_text(src.read_text().replace('"two_intervals"', '"mine"'))
    env = {"PATH": "", FIXTURE_ENV: str(tmp_path)}
    out = subprocess.run([sys.executable, "-m", "cat0rates.cli", "list"], capture_output=True, text=True, env=env)
    assert out.returncode == 0 and out.stdout.split() == ["mine"]
