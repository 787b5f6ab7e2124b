import io
import json
import subprocess
import sys

import pytest

from volterra_asian.cli import CliConfig, main
from volterra_asian.kernel import DEFAULT_PARAMS
from volterra_asian.pricing import PriceResult


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


def test_price_fixed_call_table_value():
    code, text = run("price", "--type", "fixed-call", "--alpha", "1.0", "--T", "0.2", "--K", "90")
    assert code == 0
    assert "10.6571" in text


def test_price_float_call_csv():
    code, text = run("price", "--type", "float-call", "--alpha", "0.75", "--T", "0.4", "--format", "csv")
    assert code == 0
    header, row = text.strip().splitlines()
    assert header == "T,K,alpha,type,price"
    T, K, alpha, kind, value = row.split(",")
    assert (T, K, alpha, kind) == ("0.4", "", "0.75", "float-call")
    assert abs(float(value) - 6.7508) <= 5e-3


@pytest.mark.parametrize("argv", [
    ["price", "--type", "fixed-call", "--T", "1", "--K", "-5"],
    ["price", "--type", "float-put", "--T", "1", "--K", "100"],
    ["price", "--type", "fixed-put", "--T", "1"],
    ["price", "--type", "fixed-put", "--T", "0", "--K", "100"],
    ["price", "--type", "fixed-put", "--T", "1", "--K", "100", "--kappa", "-1"],
    ["price", "--type", "fixed-put", "--T", "1", "--K", "100", "--n-steps", "many"],
    ["price", "--type", "straddle", "--T", "1", "--K", "100"],
    ["check", "--suite", "parity", "--alpha", "2.0"],
    ["table", "--which", "fixed", "--alphas", "0.3"],
    ["price", "--type", "fixed-call", "--T", "1", "--K", "100", "--config", "/nonexistent/cfg"],
])
def test_usage_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_numeric_failure_exit_3():
    code, _ = run("price", "--type", "fixed-call", "--T", "1", "--K", "100", "--quad-rule", "fixed-panel",
                  "--quad-panels", "1", "--quad-tol", "1e-14")
    assert code == 3


def test_json_round_trip():
    code, text = run("price", "--type", "fixed-put", "--alpha", "0.6", "--T", "2", "--K", "105",
                     "--format", "json")
    assert code == 0
    doc = json.loads(text)
    cfg = CliConfig.from_dict(doc["config"])
    assert cfg.params == DEFAULT_PARAMS and cfg.alpha == 0.6 and cfg.format == "json"
    res = PriceResult.from_dict(doc["result"])
    assert res.price == doc["price_full"]
    assert doc["price"] == round(doc["price_full"], 4)
    assert CliConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_output_is_byte_identical(fmt):
    argv = ["table", "--which", "floating", "--alphas", "0.75", "--maturities", "0.5,2", "--format", fmt]
    assert run(*argv) == run(*argv)


def test_table_alpha_subset():
    code, text = run("table", "--which", "fixed", "--alphas", "1.0", "--maturities", "0.2", "--format", "csv")
    assert code == 0
    rows = text.strip().splitlines()[1:]
    assert len(rows) == 10
    assert {r.split(",")[2] for r in rows} == {"1"}
    code, text = run("table", "--which", "fixed", "--alphas", "1.0", "--maturities", "0.2")
    assert "C a=1.00" in text and "a=0.75" not in text


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text("# desk overrides\nkappa = 2.0\nalpha=0.75\nformat = json\n")
    code, text = run("price", "--type", "fixed-call", "--T", "1", "--K", "100", "--config", str(cfg))
    doc = json.loads(text)
    assert code == 0
    assert doc["config"]["params"]["kappa"] == 2.0 and doc["config"]["alpha"] == 0.75
    code, text = run("price", "--type", "fixed-call", "--T", "1", "--K", "100", "--config", str(cfg),
                     "--kappa", "1.5")
    assert json.loads(text)["config"]["params"]["kappa"] == 1.5
    bad = tmp_path / "bad.cfg"
    bad.write_text("volatility = 3\n")
    assert run("price", "--type", "fixed-call", "--T", "1", "--K", "100", "--config", str(bad))[0] == 2


def test_check_consistency_passes_and_reports_threshold_failures():
    code, text = run("check", "--suite", "consistency")
    assert code == 0 and "3/3" in text
    code, text = run("check", "--suite", "consistency", "--n-steps", "32")
    assert code == 1 and "FAIL" in text


def test_check_parity_single_alpha():
    code, text = run("check", "--suite", "parity", "--alpha", "1.0", "--format", "csv")
    assert code == 0
    assert len(text.strip().splitlines()) == 1 + 45


def test_check_mc_subset_small():
    code, text = run("check", "--suite", "mc", "--alphas", "1.0", "--paths", "20000", "--mc-steps", "128")
    assert code == 0
    assert "2/2" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "volterra_asian", "price", "--type", "euro-call",
                           "--T", "1", "--K", "100", "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("T,K,alpha,type,price\n1,100,1,euro-call,")
