"""``winetrace`` command line.

Exit codes: 0 success, 1 guard error (bad input, rejected operation, failed
validation), 2 an attack campaign let something through.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import click

from .consortium import Scenario, apply_operation, default_scenario, run_scenario
from .errors import WinetraceError
from .harness import AttackKind, attack_campaign, bench_pipeline, bench_tps
from .harness.bench import PIPELINE_OPS
from .ledger.chain import ChainConfig, DEFAULT_GAS_LIMIT, DEFAULT_INTERVAL, Engine, validate_chain
from .ledger.gas import CostParams, storage_gas, tx_cost, words_for_bytes
from .store import HASH_LENGTH

DEFAULT_STATE = "winetrace-state"
EXIT_OK, EXIT_GUARD, EXIT_UNDETECTED = 0, 1, 2


# -- output -------------------------------------------------------------------------


def _table(rows: list[dict]) -> str:
    if not rows:
        return "(empty)\n"
    columns = list(dict.fromkeys(k for row in rows for k in row))
    cells = [["" if row.get(c) is None else str(row[c]) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    line = lambda values: "  ".join(v.ljust(w) for v, w in zip(values, widths)).rstrip()
    out = [line(columns), line(["-" * w for w in widths])] + [line(r) for r in cells]
    return "\n".join(out) + "\n"


def _csv(rows: list[dict]) -> str:
    out = io.StringIO()
    columns = list(dict.fromkeys(k for row in rows for k in row))
    writer = csv.DictWriter(out, columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def render(doc: dict, rows: list[dict], fmt: str, references: list[str] = ()) -> str:
    if fmt == "json":
        return _json(doc)
    if fmt == "csv":
        return _csv(rows)
    text = _table(rows)
    if references:
        text += "\n" + "\n".join(references) + "\n"
    return text


def emit(command: str, doc: dict, rows: list[dict], fmt: str, out: str | None,
         references: list[str] = (), extra: dict[str, str] | None = None, echo: bool = True) -> None:
    """Print the report and, with ``--out``, write report.json beside any extras."""
    if echo:
        click.echo(render(doc, rows, fmt, references), nl=False)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        saved = {"command": command, "report": doc, "rows": rows, "references": list(references)}
        (path / "report.json").write_text(_json(saved), encoding="utf-8")
        for name, text in (extra or {}).items():
            (path / name).write_text(text, encoding="utf-8")


def common(f):
    f = click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table",
                     show_default=True, help="Output format.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="Directory to write report files into.")(f)
    f = click.option("--seed", type=int, default=None, help="Seed for every random choice.")(f)
    return f


def chain_options(f):
    f = click.option("--engine", type=click.Choice([e.value for e in Engine]), default=None)(f)
    f = click.option("--gas-limit", type=int, default=None, help="Block gas limit.")(f)
    f = click.option("--interval", type=int, default=None, help="Block interval, simulated seconds.")(f)
    return f


def _settings(scenario: Scenario, engine, gas_limit, interval) -> Scenario:
    s = scenario.settings
    scenario.settings = type(s)(
        engine=Engine(engine) if engine else s.engine,
        block_interval=interval if interval is not None else s.block_interval,
        gas_limit=gas_limit if gas_limit is not None else s.gas_limit,
    )
    return scenario


@click.group()
def cli() -> None:
    """Deterministic supply-chain anti-counterfeiting simulator."""


# -- consortium and records ------------------------------------------------------------


def _save_state(state_dir: Path, scenario: Scenario, results: list[dict], ctx) -> None:
    state_dir.mkdir(parents=True, exist_ok=True)
    (state_dir / "scenario.json").write_text(_json(scenario.to_doc()), encoding="utf-8")
    (state_dir / "chain.jsonl").write_text(ctx.export_chain(), encoding="utf-8")
    records = state_dir / "records"
    records.mkdir(exist_ok=True)
    for wine_id, text in ctx.export_records().items():
        (records / f"{wine_id}.json").write_text(text, encoding="utf-8")
    ctx.store.export_dir(state_dir / "store")
    (state_dir / "results.json").write_text(_json(results), encoding="utf-8")


def _result_rows(results: list[dict]) -> list[dict]:
    keys = ("op", "wine_id", "outcome", "reason", "gas", "block", "write_count")
    return [{k: r[k] for k in keys if k in r} for r in results]


@cli.group()
def consortium() -> None:
    """Form a consortium and replay a scenario."""


@consortium.command("init")
@click.argument("scenario_file", type=click.Path(dir_okay=False))
@common
@chain_options
def consortium_init(scenario_file, seed, out, fmt, engine, gas_limit, interval):
    """Form the consortium described by SCENARIO_FILE and run its operations."""
    scenario = _settings(_load_scenario(scenario_file), engine, gas_limit, interval)
    if seed is not None:
        scenario.seed = seed
    ctx, results = run_scenario(scenario)
    state = Path(out or DEFAULT_STATE)
    _save_state(state, scenario, results, ctx)
    doc = {"members": {m.member_id: {"role": m.role.value, "address": m.address} for m in ctx.members.values()},
           "height": ctx.ledger.height, "results": results}
    emit("consortium init", doc, _result_rows(results), fmt, str(state))
    return EXIT_OK


def _load_scenario(path) -> Scenario:
    try:
        return Scenario.load(path)
    except OSError as exc:
        raise click.ClickException(f"cannot read scenario: {exc}") from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise click.ClickException(f"malformed scenario: {exc!r}") from exc


def _record_op(state_dir: str, op: dict, fmt: str) -> int:
    state = Path(state_dir)
    scenario = _load_scenario(state / "scenario.json")
    ctx, results = run_scenario(scenario)
    aliases = {o["wine"]: r["wine_id"] for o, r in zip(scenario.operations, results) if "wine" in o}
    result = apply_operation(ctx, op, aliases)
    scenario.operations.append(op)
    _save_state(state, scenario, results + [result], ctx)
    emit(f"record {op['op']}", result, _result_rows([result]), fmt, None)
    if result.get("outcome") == "FAIL":
        return EXIT_GUARD
    return EXIT_OK


@cli.group()
def record() -> None:
    """Create, append to, validate or transfer a wine record in a saved state."""


def state_option(f):
    return click.option("--state", "state_dir", default=DEFAULT_STATE, show_default=True,
                        type=click.Path(file_okay=False), help="State directory from `consortium init`.")(f)


def format_option(f):
    return click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table")(f)


@record.command("create")
@state_option
@format_option
@click.option("--member", required=True, help="Winemaker creating the record.")
@click.option("--wine", default=None, help="Alias for the new wine.")
def record_create(state_dir, fmt, member, wine):
    op = {"op": "create", "member": member} | ({"wine": wine} if wine else {})
    return _record_op(state_dir, op, fmt)


@record.command("append")
@state_option
@format_option
@click.option("--member", required=True, help="Current holder logging the step.")
@click.option("--wine", required=True, help="Wine id or alias.")
def record_append(state_dir, fmt, member, wine):
    return _record_op(state_dir, {"op": "append", "member": member, "wine": wine}, fmt)


@record.command("validate")
@state_option
@format_option
@click.option("--member", required=True, help="Member scanning the tag.")
@click.option("--wine", required=True, help="Wine id or alias.")
def record_validate(state_dir, fmt, member, wine):
    return _record_op(state_dir, {"op": "validate", "member": member, "wine": wine}, fmt)


@record.command("transfer")
@state_option
@format_option
@click.option("--from", "from_id", required=True)
@click.option("--to", "to_id", required=True)
@click.option("--wine", required=True, help="Wine id or alias.")
def record_transfer(state_dir, fmt, from_id, to_id, wine):
    return _record_op(state_dir, {"op": "transfer", "from": from_id, "to": to_id, "wine": wine}, fmt)


# -- benchmarks ------------------------------------------------------------------------


@cli.group()
def bench() -> None:
    """Throughput and pipeline-latency benchmarks."""


@bench.command("tps")
@common
@chain_options
@click.option("--blocks", type=int, default=10, show_default=True)
@click.option("--load", default="saturate", show_default=True,
              help="Transactions arriving per block interval, or 'saturate'.")
@click.option("--authorities", type=int, default=4, show_default=True)
def bench_tps_cmd(seed, out, fmt, engine, gas_limit, interval, blocks, load, authorities):
    """Pack synthetic createWineRecord transactions into blocks."""
    if blocks < 1:
        raise click.ClickException("--blocks must be at least 1")
    if load == "saturate":
        schedule = None
    else:
        try:
            schedule = [int(x) for x in load.split(",")]
        except ValueError:
            raise click.ClickException("--load takes integers or 'saturate'") from None
        schedule = schedule[0] if len(schedule) == 1 else schedule
    placeholder = tuple(f"0x{i:040x}" for i in range(1, authorities + 1))
    config = ChainConfig(placeholder, interval or DEFAULT_INTERVAL, gas_limit or DEFAULT_GAS_LIMIT,
                         Engine(engine or "clique"))
    report = bench_tps(config, schedule, blocks, seed or 0)
    distribution = report.distribution_csv()
    if fmt == "csv":  # the distribution is the useful CSV here
        click.echo(distribution, nl=False)
    emit("bench tps", report.to_doc(), report.rows(), fmt, out, report.references,
         {"distribution.csv": distribution}, echo=fmt != "csv")
    return EXIT_OK


@bench.command("pipeline")
@common
@click.option("--ops", "n_ops", type=int, default=100, show_default=True, help="Requests per operation.")
@click.option("--workload", default=",".join(PIPELINE_OPS), show_default=True)
@click.option("--scenario", "scenario_file", type=click.Path(dir_okay=False), default=None)
def bench_pipeline_cmd(seed, out, fmt, n_ops, workload, scenario_file):
    """Simulated per-operation latency, decentralized against the database-only baseline."""
    scenario = _load_scenario(scenario_file) if scenario_file else default_scenario()
    if seed is not None:
        scenario.seed = seed
    ops = tuple(w.strip() for w in workload.split(",") if w.strip())
    bad = set(ops) - set(PIPELINE_OPS)
    if bad:
        raise click.ClickException(f"unknown workload ops: {', '.join(sorted(bad))}")
    report = bench_pipeline(scenario, n_ops, ops)
    emit("bench pipeline", report.to_doc(), report.rows(), fmt, out, report.references)
    return EXIT_OK


# -- attacks ----------------------------------------------------------------------------


@cli.group()
def attack() -> None:
    """Attack injection campaigns."""


@attack.command("run")
@common
@chain_options
@click.option("--kinds", default=",".join(k.value.lower() for k in AttackKind), show_default=True)
@click.option("--injections", type=int, default=100, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--scenario", "scenario_file", type=click.Path(dir_okay=False), default=None)
def attack_run(seed, out, fmt, engine, gas_limit, interval, kinds, injections, workers, scenario_file):
    """Inject attacks and report what validation caught."""
    try:
        chosen = [AttackKind(k.strip().upper()) for k in kinds.split(",") if k.strip()]
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    scenario = _load_scenario(scenario_file) if scenario_file else default_scenario()
    scenario = _settings(scenario, engine, gas_limit, interval)
    report = attack_campaign(scenario, chosen, injections, seed or 0, workers)
    emit("attack run", report.to_doc(), report.rows(), fmt, out)
    return EXIT_OK if report.ok else EXIT_UNDETECTED


# -- gas ----------------------------------------------------------------------------------


def gas_rows(n_bytes: int, params: CostParams) -> list[dict]:
    """Full record stored on chain against only its content hash."""
    rows = []
    for storage, size in (("full record on-chain", n_bytes), ("content hash only", HASH_LENGTH)):
        words = words_for_bytes(size)
        gas = storage_gas(words, 0)
        eth, usd = tx_cost(gas, params)
        rows.append({"storage": storage, "bytes": size, "words": words, "gas": gas,
                     "eth": format(eth.normalize(), "f"),
                     "usd": str(usd.quantize(Decimal("0.01"), ROUND_HALF_UP))})
    return rows


@cli.group()
def gas() -> None:
    """Storage gas arithmetic."""


@gas.command("estimate")
@common
@click.option("--bytes", "n_bytes", type=int, default=None, help="Record size in bytes.")
@click.option("--record", "record_file", default=None, help="Read the size from a record file.")
@click.option("--gas-price", type=Decimal, default=Decimal(60), show_default=True, help="Gwei per gas.")
@click.option("--eth-usd", type=Decimal, default=Decimal(1223), show_default=True)
def gas_estimate(seed, out, fmt, n_bytes, record_file, gas_price, eth_usd):
    """Words, gas, ETH and USD to store a record in contract storage."""
    if record_file is not None:
        try:
            n_bytes = len(Path(record_file).read_bytes())
        except OSError as exc:
            raise click.ClickException(f"cannot read record file: {exc}") from exc
    if n_bytes is None:
        raise click.ClickException("give --bytes or --record")
    if n_bytes < 0:
        raise click.ClickException("--bytes must be non-negative")
    params = CostParams(gas_price, eth_usd)
    rows = gas_rows(n_bytes, params)
    doc = {"gas_price_gwei": str(gas_price), "eth_usd": str(eth_usd), "rows": rows}
    emit("gas estimate", doc, rows, fmt, out)
    return EXIT_OK


# -- chain and reports ---------------------------------------------------------------------


@cli.group()
def chain() -> None:
    """Chain inspection."""


@chain.command("export")
@state_option
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Write chain.jsonl here.")
def chain_export(state_dir, out):
    """Print (or write) the chain as JSON lines after checking it."""
    from .ledger.chain import import_jsonl

    path = Path(state_dir) / "chain.jsonl"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise click.ClickException(f"cannot read chain: {exc}") from exc
    config, blocks = import_jsonl(text)
    report = validate_chain(blocks, config)
    if not report.ok:
        click.echo(_json(report.to_doc()), err=True)
        return EXIT_GUARD
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "chain.jsonl").write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    return EXIT_OK


@cli.group()
def report() -> None:
    """Saved reports."""


@report.command("show")
@click.argument("path", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table")
def report_show(path, fmt):
    """Render a report.json written with --out (or the directory holding it)."""
    target = Path(path)
    if target.is_dir():
        target = target / "report.json"
    try:
        saved = json.loads(target.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot read report: {exc}") from exc
    click.echo(f"# {saved.get('command', 'report')}")
    click.echo(render(saved.get("report", {}), saved.get("rows", []), fmt, saved.get("references", [])), nl=False)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="winetrace", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_GUARD
    except click.exceptions.Abort:
        return EXIT_GUARD
    except WinetraceError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_GUARD
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
