import csv
import io
import json
import shutil
from pathlib import Path

import pytest

import winetrace.cli as cli
from winetrace.harness import AttackReport

THREE_HOP = Path(__file__).resolve().parent.parent / "scenarios" / "three_hop.json"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def state(tmp_path, capsys):
    target = tmp_path / "state"
    code, _, _ = run(capsys, "consortium", "init", str(THREE_HOP), "--out", str(target))
    assert code == 0
    return target


# -- consortium and records -----------------------------------------------------------------


def test_init_writes_state(state):
    for name in ("scenario.json", "chain.jsonl", "results.json", "report.json"):
        assert (state / name).is_file()
    assert any((state / "store").iterdir()) and any((state / "records").iterdir())
    results = json.loads((state / "results.json").read_text())
    assert results[-1]["outcome"] == "PASS"


def test_init_json_output(tmp_path, capsys):
    code, out, _ = run(capsys, "consortium", "init", str(THREE_HOP), "--out", str(tmp_path / "s"), "--format", "json")
    assert code == 0 and json.loads(out)


def test_init_with_missing_scenario(tmp_path, capsys):
    code, _, err = run(capsys, "consortium", "init", str(tmp_path / "missing.json"))
    assert code == 1 and "scenario" in err


def test_record_verbs(state, capsys):
    code, out, _ = run(capsys, "record", "create", "--state", str(state), "--member", "winemaker", "--wine", "merlot",
                       "--format", "json")
    assert code == 0 and json.loads(out)["op"] == "create"
    code, out, _ = run(capsys, "record", "append", "--state", str(state), "--member", "winemaker", "--wine", "merlot",
                       "--format", "json")
    assert code == 0 and json.loads(out)["write_count"] == 2
    code, _, _ = run(capsys, "record", "transfer", "--state", str(state), "--from", "winemaker", "--to",
                     "distributor", "--wine", "merlot")
    assert code == 0
    code, out, _ = run(capsys, "record", "validate", "--state", str(state), "--member", "retailer", "--wine", "merlot",
                       "--format", "json")
    assert code == 0 and json.loads(out)["outcome"] == "PASS"
    ops = json.loads((state / "scenario.json").read_text())["operations"]
    assert [o["op"] for o in ops[-4:]] == ["create", "append", "transfer", "validate"]


def test_guard_errors_exit_one(state, capsys):
    code, _, err = run(capsys, "record", "transfer", "--state", str(state), "--from", "winemaker", "--to",
                       "distributor", "--wine", "shiraz-2019")
    assert code == 1 and "Unauthorized" in err
    code, _, _ = run(capsys, "record", "create", "--state", str(state), "--member", "consumer")
    assert code == 1


def test_failed_validation_exits_one(state, monkeypatch, capsys):
    real = cli.apply_operation

    def failing(ctx, op, aliases):
        if op["op"] == "validate":
            wine = aliases[op["wine"]]
            ctx.tags[wine].read_counter = 0  # a rolled-back tag
        return real(ctx, op, aliases)

    monkeypatch.setattr(cli, "apply_operation", failing)
    code, out, _ = run(capsys, "record", "validate", "--state", str(state), "--member", "consumer",
                       "--wine", "shiraz-2019", "--format", "json")
    doc = json.loads(out)
    assert code == 1 and doc["outcome"] == "FAIL" and doc["reason"] == "REAPPLICATION_DETECTED"
    assert json.loads((state / "scenario.json").read_text())["operations"][-1]["op"] == "validate"


def test_usage_errors_exit_one(capsys):
    assert run(capsys, "no-such-verb")[0] == 1
    assert run(capsys, "bench", "tps", "--engine", "pow")[0] == 1


# -- bench ---------------------------------------------------------------------------------


def test_bench_tps_csv_distribution(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "tps", "--blocks", "3", "--gas-limit", "5000000", "--format", "csv",
                       "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["tx_count"] for r in rows] == ["45"] * 3
    assert (tmp_path / "distribution.csv").read_text() == out
    assert json.loads((tmp_path / "report.json").read_text())["report"]["total_txs"] == 135


def test_bench_tps_load_schedule_and_engines(capsys):
    code, out, _ = run(capsys, "bench", "tps", "--blocks", "4", "--load", "2,0", "--engine", "raft", "--format", "json")
    assert code == 0 and json.loads(out)["distribution"] == [2, 0, 2, 0]
    assert run(capsys, "bench", "tps", "--load", "lots")[0] == 1
    assert run(capsys, "bench", "tps", "--blocks", "0")[0] == 1


def test_bench_tps_table_prints_references(capsys):
    code, out, _ = run(capsys, "bench", "tps", "--blocks", "2", "--gas-limit", "1000000", "--interval", "10")
    assert code == 0 and "hardware-bound" in out


def test_bench_pipeline(capsys):
    code, out, _ = run(capsys, "bench", "pipeline", "--ops", "5", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and set(doc["latency"]) == {"create", "append", "validate"}
    assert all(r["decentralized_s"] > r["baseline_s"] for r in doc["latency"].values())
    assert run(capsys, "bench", "pipeline", "--workload", "teleport")[0] == 1


# -- attacks ---------------------------------------------------------------------------------


def test_attack_run_exit_zero_when_all_detected(tmp_path, capsys):
    code, out, _ = run(capsys, "attack", "run", "--injections", "5", "--kinds", "clone,modification,reapplication",
                       "--format", "json", "--out", str(tmp_path))
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["detected"] == doc["injected"]


def test_attack_run_exit_two_when_something_slips(monkeypatch, capsys):
    leaky = AttackReport(injected={"CLONE": 1}, detected={"CLONE": 0}, undetected=[{"kind": "CLONE", "index": 0}])
    monkeypatch.setattr(cli, "attack_campaign", lambda *a, **k: leaky)
    assert run(capsys, "attack", "run", "--kinds", "clone")[0] == 2


def test_attack_run_unknown_kind(capsys):
    assert run(capsys, "attack", "run", "--kinds", "phishing")[0] == 1


# -- gas, chain, report -----------------------------------------------------------------------


def test_gas_estimate_worked_example(capsys):
    code, out, _ = run(capsys, "gas", "estimate", "--bytes", "2900", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert rows[0] == {"storage": "full record on-chain", "bytes": 2900, "words": 91, "gas": 1820000,
                       "eth": "0.1092", "usd": "133.55"}
    assert rows[1]["bytes"] == 46 and rows[1]["words"] == 2 and rows[1]["gas"] == 40000


def test_gas_estimate_from_record_file(tmp_path, capsys):
    blob = tmp_path / "r.json"
    blob.write_bytes(b"x" * 64)
    code, out, _ = run(capsys, "gas", "estimate", "--record", str(blob), "--format", "csv")
    assert code == 0 and "64,2,40000" in out
    assert run(capsys, "gas", "estimate")[0] == 1
    assert run(capsys, "gas", "estimate", "--bytes", "-3")[0] == 1


def test_chain_export(state, tmp_path, capsys):
    code, out, _ = run(capsys, "chain", "export", "--state", str(state))
    assert code == 0 and out == (state / "chain.jsonl").read_text()
    code, _, _ = run(capsys, "chain", "export", "--state", str(state), "--out", str(tmp_path / "x"))
    assert code == 0 and (tmp_path / "x" / "chain.jsonl").read_text() == out


def test_chain_export_refuses_tampered_chain(state, capsys):
    path = state / "chain.jsonl"
    lines = path.read_text().splitlines()
    block = json.loads(lines[3])
    block["timestamp"] += 1
    lines[3] = json.dumps(block)
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "chain", "export", "--state", str(state))
    assert code == 1 and "violations" in err


def test_report_show(tmp_path, capsys):
    run(capsys, "gas", "estimate", "--bytes", "100", "--out", str(tmp_path))
    code, out, _ = run(capsys, "report", "show", str(tmp_path))
    assert code == 0 and out.startswith("# gas estimate") and "full record on-chain" in out
    code, out, _ = run(capsys, "report", "show", str(tmp_path / "report.json"), "--format", "json")
    assert code == 0
    assert run(capsys, "report", "show", str(tmp_path / "nope"))[0] == 1


def test_console_script_is_installed():
    assert shutil.which("winetrace") is not None
