"""The ``willchain`` command-line interface.

Two modes of use:

* ``willchain run scenario.json`` executes a self-contained scenario
  and emits a deterministic line-delimited report.
* Workspace mode: ``init`` materializes a network into ``--dir``, and
  ``tx``/``advance``/``relay``/``store-file``/``inspect``/``snapshot``
  operate on it incrementally. The workspace file is itself a snapshot.

Exit codes: 0 success, 2 assertion failure, 3 input error.
"""

from __future__ import annotations

import os
import sys

import click

from .codec import canonical_json, from_json, to_hex
from .errors import ScenarioAssertionError, WillchainError
from .scenario import (
    Runner,
    Scenario,
    inspect as inspect_network,
    restore_runner,
    run_scenario,
    snapshot_dict,
)

EXIT_ASSERTION = 2
EXIT_INPUT = 3

WORKSPACE_FILE = "state.json"


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_json_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return from_json(fh.read())
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read {path}: {exc}")


def _workspace_path(directory: str) -> str:
    return os.path.join(directory, WORKSPACE_FILE)


def _load_workspace(directory: str) -> Runner:
    path = _workspace_path(directory)
    if not os.path.exists(path):
        _fail(EXIT_INPUT, f"no workspace at {path}; run `willchain init` first")
    snapshot = _load_json_file(path)
    scenario = Scenario(
        name=snapshot.get("scenario_name", "workspace"),
        genesis={},
        topology={},
        steps=[],
    )
    return restore_runner(scenario, snapshot)


def _save_workspace(directory: str, runner: Runner) -> None:
    with open(_workspace_path(directory), "w", encoding="utf-8") as fh:
        fh.write(canonical_json(snapshot_dict(runner)) + "\n")


def _run_step(runner: Runner, step: dict) -> str:
    try:
        return runner.execute_step(step)
    except ScenarioAssertionError as exc:
        _fail(EXIT_ASSERTION, str(exc))
    except WillchainError as exc:
        _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")


@click.group()
def main() -> None:
    """Deterministic digital-will protocol simulator."""


@main.command()
@click.option("--genesis", "genesis_path", required=True, type=click.Path(exists=True))
@click.option("--topology", "topology_path", type=click.Path(exists=True))
@click.option("--seed", default=None, help="seed string; falls back to WILLCHAIN_SEED")
@click.option("--dir", "directory", default=".", type=click.Path())
def init(genesis_path: str, topology_path: str | None, seed: str | None, directory: str) -> None:
    """Materialize a fresh network workspace from genesis + topology files."""
    genesis = _load_json_file(genesis_path)
    topology = _load_json_file(topology_path) if topology_path else {}
    scenario = Scenario(name="workspace", genesis=genesis, topology=topology, steps=[])
    try:
        runner = Runner(scenario, seed=seed)
    except WillchainError as exc:
        _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")
    os.makedirs(directory, exist_ok=True)
    _save_workspace(directory, runner)
    click.echo(f"initialized workspace in {directory}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--seed", default=None)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--snapshot-out", type=click.Path(), default=None)
@click.option("--stop-after", type=int, default=None, help="run only the first N steps")
@click.option("--resume", "resume_path", type=click.Path(exists=True), default=None)
@click.option("--timestamps", is_flag=True, default=False)
def run(
    scenario_path: str,
    seed: str | None,
    report_path: str | None,
    snapshot_out: str | None,
    stop_after: int | None,
    resume_path: str | None,
    timestamps: bool,
) -> None:
    """Execute a scenario file and emit its report."""
    code = 0
    try:
        if resume_path:
            scenario = Scenario.load(scenario_path)
            runner = restore_runner(scenario, _load_json_file(resume_path))
            runner.run(stop_after=stop_after)
        else:
            runner = run_scenario(scenario_path, seed=seed, stop_after=stop_after)
    except ScenarioAssertionError as exc:
        click.echo(f"assertion failed: {exc}", err=True)
        code = EXIT_ASSERTION
        runner = None
    except WillchainError as exc:
        _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")

    if runner is not None:
        lines = list(runner.report)
        if timestamps:
            import datetime

            lines.append(canonical_json({"generated_at": datetime.datetime.now().isoformat()}))
        body = "\n".join(lines) + "\n"
        if report_path:
            with open(report_path, "w", encoding="utf-8") as fh:
                fh.write(body)
        else:
            click.echo(body, nl=False)
        if snapshot_out:
            with open(snapshot_out, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(snapshot_dict(runner)) + "\n")
    sys.exit(code)


@main.group()
def tx() -> None:
    """Submit signed transactions to the workspace chain."""


def _tx_command(directory: str, step: dict) -> None:
    runner = _load_workspace(directory)
    result = _run_step(runner, step)
    _save_workspace(directory, runner)
    click.echo(result)


@tx.command("create-will")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--sender", required=True)
@click.option("--will", "will_path", required=True, type=click.Path(exists=True))
@click.option("--label", default=None)
def tx_create_will(directory: str, sender: str, will_path: str, label: str | None) -> None:
    """Create a will from a definition file (components, expiration, shares)."""
    definition = _load_json_file(will_path)
    step = {"kind": "create-will", "sender": sender, **definition}
    if label:
        step["label"] = label
    _tx_command(directory, step)


@tx.command("checkin")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--sender", required=True)
@click.option("--will", "will_ref", required=True)
def tx_checkin(directory: str, sender: str, will_ref: str) -> None:
    _tx_command(directory, {"kind": "checkin", "sender": sender, "will": will_ref})


@tx.command("claim")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--sender", required=True)
@click.option("--will", "will_ref", required=True)
@click.option("--component", required=True, help="component index, or 'rft'")
@click.option("--evidence", "evidence_json", default=None, help="evidence descriptor JSON")
def tx_claim(
    directory: str, sender: str, will_ref: str, component: str, evidence_json: str | None
) -> None:
    step: dict = {
        "kind": "claim",
        "sender": sender,
        "will": will_ref,
        "component": component if component == "rft" else int(component),
    }
    if evidence_json:
        step["evidence"] = from_json(evidence_json)
    _tx_command(directory, step)


@tx.command("approve")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--sender", required=True)
@click.option("--chain", required=True)
@click.option("--address", required=True)
def tx_approve(directory: str, sender: str, chain: str, address: str) -> None:
    _tx_command(
        directory,
        {"kind": "approve-contract", "sender": sender, "chain": chain, "address": address},
    )


@tx.command("transfer")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--sender", required=True)
@click.option("--to", "to_ref", required=True)
@click.option("--denom", required=True)
@click.option("--amount", required=True, type=int)
def tx_transfer(directory: str, sender: str, to_ref: str, denom: str, amount: int) -> None:
    _tx_command(
        directory,
        {"kind": "transfer", "sender": sender, "to": to_ref, "denom": denom, "amount": amount},
    )


@main.command()
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--blocks", default=1, type=int)
@click.option("--chain", "chain_id", default=None)
def advance(directory: str, blocks: int, chain_id: str | None) -> None:
    """Produce blocks (home chain and/or destination chains)."""
    runner = _load_workspace(directory)
    result = _run_step(runner, {"kind": "advance", "blocks": blocks, "chain": chain_id})
    _save_workspace(directory, runner)
    click.echo(result)


@main.command()
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--steps", default=1, type=int)
def relay(directory: str, steps: int) -> None:
    """Run relayer scheduling rounds."""
    runner = _load_workspace(directory)
    result = _run_step(runner, {"kind": "relay", "steps": steps})
    _save_workspace(directory, runner)
    click.echo(result)


@main.command("store-file")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--file", "file_path", required=True, type=click.Path(exists=True))
@click.option("--chunk-size", default=1024, type=int)
def store_file(directory: str, file_path: str, chunk_size: int) -> None:
    """Chunk a local file into the on-chain vault; prints the file id."""
    runner = _load_workspace(directory)
    with open(file_path, "rb") as fh:
        data = fh.read()
    try:
        cmap = runner.state.vault.store_file(data, chunk_size)
    except WillchainError as exc:
        _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")
    _save_workspace(directory, runner)
    click.echo(to_hex(cmap.file_id))


@main.command("retrieve-file")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--id", "file_id_hex", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def retrieve_file(directory: str, file_id_hex: str, out_path: str) -> None:
    """Reassemble a stored file by its id and write it locally."""
    runner = _load_workspace(directory)
    cmap = runner.state.vault.maps.get(file_id_hex)
    if cmap is None:
        _fail(EXIT_INPUT, f"no stored file with id {file_id_hex}")
    try:
        data = runner.state.vault.retrieve_file(cmap)
    except WillchainError as exc:
        _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")
    with open(out_path, "wb") as fh:
        fh.write(data)
    click.echo(f"wrote {len(data)} bytes")


@main.command("reveal-key")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
@click.option("--will", "will_ref", required=True)
@click.option("--component", required=True, type=int)
@click.option("--temp", "temp_actor", required=True, help="actor holding the temporary key")
def reveal_key(directory: str, will_ref: str, component: int, temp_actor: str) -> None:
    """Strip a deed's outer encryption layer into the event log."""
    runner = _load_workspace(directory)
    result = _run_step(
        runner,
        {"kind": "reveal-key", "will": will_ref, "component": component, "temp": temp_actor},
    )
    _save_workspace(directory, runner)
    click.echo(result)


@main.command()
@click.argument("query")
@click.argument("identifier", default="")
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
def inspect(query: str, identifier: str, directory: str) -> None:
    """Query workspace state: will, token, account, balances, trace,
    hashes, events."""
    runner = _load_workspace(directory)
    resolved = runner.labels.get(identifier, identifier)
    if identifier.startswith("@"):
        resolved = runner.resolve_ref(identifier)
    try:
        record = inspect_network(runner.network, query, resolved)
    except WillchainError as exc:
        _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")
    click.echo(canonical_json(record))


@main.group()
def snapshot() -> None:
    """Export or import the workspace state."""


@snapshot.command("save")
@click.argument("out_path", type=click.Path())
@click.option("--dir", "directory", default=".", type=click.Path(exists=True))
def snapshot_save(out_path: str, directory: str) -> None:
    runner = _load_workspace(directory)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(snapshot_dict(runner)) + "\n")
    click.echo(f"saved snapshot to {out_path}")


@snapshot.command("load")
@click.argument("in_path", type=click.Path(exists=True))
@click.option("--dir", "directory", default=".", type=click.Path())
def snapshot_load(in_path: str, directory: str) -> None:
    data = _load_json_file(in_path)
    scenario = Scenario(
        name=data.get("scenario_name", "workspace"), genesis={}, topology={}, steps=[]
    )
    try:
        runner = restore_runner(scenario, data)
    except (WillchainError, KeyError) as exc:
        _fail(EXIT_INPUT, f"invalid snapshot: {exc}")
    os.makedirs(directory, exist_ok=True)
    _save_workspace(directory, runner)
    click.echo(f"loaded snapshot into {directory}")


if __name__ == "__main__":
    main()
