"""Deterministic scenario runner.

A scenario file bundles a genesis, a topology, and an ordered step list
(transactions, block advances, relayer rounds, assertions). All
randomness flows from one seed: actor keys, file contents, and relayer
scheduling derive from it through named sub-streams, so a seed fixes
the entire run including every report byte.

Actors are referenced by name; ``@name`` inside addresses, allow lists,
and beneficiaries resolves to the actor's derived address. Wills are
referenced through step labels, since DIDs only exist at runtime.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .chain import ChainState, GenesisConfig, sign_tx
from .claims import (
    Aggregate,
    ClaimEvidence,
    ClaimRequirement,
    CommitmentExpectation,
    DirectExpectation,
    DirectSig,
    KnowledgeProof,
    PedersenOpening,
    SIGNATURE_PROOF_CHALLENGE,
    SignatureHashExpectation,
    SignatureReveal,
    SignerSetExpectation,
    StatementExpectation,
    access_from_dict,
    claim_message,
    derive_address,
    evidence_to_dict,
    requirement_to_dict,
    signature_hash,
)
from .codec import canonical_json, from_hex, from_json, to_hex
from .crypto.dlog import dlog_prove
from .crypto.group import KeyPair, NonceStream, keypair_from_scalar, tagged_hash
from .crypto.pedersen import pedersen_commit
from .crypto.schnorr import (
    prove_possession,
    schnorr_aggregate,
    schnorr_sign,
)
from .errors import (
    NotFoundError,
    ScenarioAssertionError,
    ValidationError,
    WillchainError,
)
from .interchain import Network
from .vault import reveal_key, store_deed

SEED_TAG = b"willchain/seed/v1"
ACTOR_TAG = b"willchain/actor/v1"
FILE_TAG = b"willchain/file-content/v1"

DEFAULT_SEED = "0"


def seed_bytes(seed: str) -> bytes:
    return tagged_hash(SEED_TAG, seed.encode())


def resolve_seed(cli_seed: str | None, scenario_seed: str | None) -> str:
    if cli_seed is not None:
        return cli_seed
    if scenario_seed is not None:
        return scenario_seed
    return os.environ.get("WILLCHAIN_SEED", DEFAULT_SEED)


@dataclass
class Scenario:
    name: str
    genesis: dict
    topology: dict
    steps: list[dict]
    seed: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            name=data.get("name", "scenario"),
            genesis=data["genesis"],
            topology=data.get("topology", {}),
            steps=data.get("steps", []),
            seed=data.get("seed"),
        )

    @classmethod
    def load(cls, path: str) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(from_json(fh.read()))


def build_network(genesis: dict, topology: dict, seed: str) -> tuple[Network, dict[str, KeyPair]]:
    """Construct the chains, channels, contracts, relayers, and actor keys."""
    config = GenesisConfig(
        chain_id=genesis["chain_id"],
        denom=genesis.get("denom", "uwill"),
        penalty_amount=genesis.get("penalty_amount", 1_000_000),
        checkin_period=genesis.get("checkin_period", 100),
        claim_window_blocks=genesis.get("claim_window_blocks", 100),
        tx_fee=genesis.get("tx_fee", 0),
        group=genesis.get("group", "modp-2048-256"),
    )
    state = ChainState(config)
    group = state.ctx.group
    root = seed_bytes(seed)

    actors: dict[str, KeyPair] = {}
    for entry in genesis.get("accounts", []):
        name = entry["actor"]
        stream = NonceStream(group, ACTOR_TAG, root, name.encode())
        actors[name] = keypair_from_scalar(group, stream.next_scalar())
    for entry in genesis.get("accounts", []):
        name = entry["actor"]
        kp = actors[name]
        sponsor = entry.get("sponsor")
        state.add_account(
            derive_address(group, kp.pk),
            pk=kp.pk,
            balances=dict(entry.get("balances", {})),
            sponsor=derive_address(group, actors[sponsor].pk) if sponsor else None,
        )
        state.pop_registry.register(kp.pk, prove_possession(group, kp))
    state.finalize_genesis()

    network = Network(state, seed_bytes(seed))
    for chain_id in topology.get("chains", []):
        network.add_remote_chain(chain_id)
    for channel in topology.get("channels", []):
        network.add_channel(channel["id"], channel["chain"], channel["contract"])
    for spec in topology.get("contracts", []):
        contract = network.contract(spec["chain"], spec["address"])
        for actor_name, assets in spec.get("escrow", {}).items():
            address = to_hex(derive_address(group, actors[actor_name].pk))
            contract.escrowed[address] = dict(assets)
    for relayer in topology.get("relayers", ["relayer-0"]):
        if isinstance(relayer, str):
            network.add_relayer(relayer)
        else:
            network.add_relayer(
                relayer["id"],
                tuple(relayer["channels"]) if relayer.get("channels") else None,
            )
    return network, actors


class Runner:
    """Executes scenario steps against a network, collecting a report."""

    def __init__(self, scenario: Scenario, seed: str | None = None) -> None:
        self.scenario = scenario
        self.seed = resolve_seed(seed, scenario.seed)
        self.network, self.actors = build_network(
            scenario.genesis, scenario.topology, self.seed
        )
        self.labels: dict[str, str] = {}  # will label -> did
        self.files: dict[str, str] = {}  # file label -> file id hex
        self.report: list[str] = []
        self.cursor = 0

    # -- name resolution ------------------------------------------------------

    @property
    def state(self) -> ChainState:
        return self.network.home

    @property
    def group(self):
        return self.state.ctx.group

    def actor(self, name: str) -> KeyPair:
        kp = self.actors.get(name)
        if kp is None:
            raise ValidationError(f"unknown actor {name!r}")
        return kp

    def address_of(self, name: str) -> bytes:
        return derive_address(self.group, self.actor(name).pk)

    def resolve_ref(self, value: str) -> str:
        """'@actor' -> address hex; anything else passes through."""
        if isinstance(value, str) and value.startswith("@"):
            return to_hex(self.address_of(value[1:]))
        return value

    def resolve_did(self, ref: str) -> str:
        if ref in self.labels:
            return self.labels[ref]
        if ref.startswith("did:will:"):
            return ref
        raise NotFoundError(f"unknown will reference {ref!r}")

    def component_id(self, did: str, index: int) -> str:
        return self.state.will(did).components[index].id

    # -- running ----------------------------------------------------------------

    def emit(self, record: dict) -> None:
        self.report.append(canonical_json(record))

    def run(self, stop_after: int | None = None) -> None:
        steps = self.scenario.steps
        while self.cursor < len(steps):
            if stop_after is not None and self.cursor >= stop_after:
                return
            index = self.cursor
            step = steps[index]
            self.cursor += 1
            try:
                result = self.execute_step(step)
            except ScenarioAssertionError as exc:
                self.emit({"step": index, "kind": step.get("kind"), "result": f"assertion-failed: {exc}"})
                raise ScenarioAssertionError(f"step {index}: {exc}") from exc
            self.emit({"step": index, "kind": step.get("kind"), "result": result})
        self.emit({"final_state_hashes": self.network.state_hashes()})
        self.emit({"packet_trace_length": len(self.network.trace)})

    def execute_step(self, step: dict) -> str:
        kind = step.get("kind")
        handler = getattr(self, f"_step_{kind.replace('-', '_')}", None)
        if handler is None:
            raise ValidationError(f"unknown step kind {kind!r}")
        expect = step.get("expect", "ok")
        try:
            outcome = handler(step)
        except WillchainError as exc:
            if isinstance(exc, ScenarioAssertionError):
                raise
            name = type(exc).__name__
            if expect == "ok":
                raise ScenarioAssertionError(f"step failed unexpectedly: {name}: {exc}")
            if expect in (name, "error"):
                return f"rejected:{name}"
            raise ScenarioAssertionError(
                f"expected {expect}, got {name}: {exc}"
            )
        if expect != "ok":
            raise ScenarioAssertionError(f"expected {expect}, but step succeeded")
        return outcome or "ok"

    # -- transaction steps ---------------------------------------------------------

    def _submit(self, sender: str, kind: str, body: dict, fee_payer: str | None = None) -> None:
        payer_hex = to_hex(self.address_of(fee_payer)) if fee_payer else None
        tx = sign_tx(self.group, self.actor(sender), kind, body, fee_payer=payer_hex)
        self.network.submit_tx(tx)

    def _step_create_will(self, step: dict) -> str:
        body = {
            "expiration": (
                step["expiration"]
                if "expiration" in step
                else self.state.height + step["expires_in"]
            ),
            "nonce": tagged_hash(
                b"willchain/creation-nonce/v1",
                seed_bytes(self.seed),
                step.get("label", "w").encode(),
            )[:16].hex(),
            "components": [self._component_spec(c, step) for c in step["components"]],
            "beneficiaries": [self.resolve_ref(b) for b in step.get("beneficiaries", [])],
        }
        if "shares" in step:
            body["shares"] = {self.resolve_ref(a): v for a, v in step["shares"].items()}
            body["rft_escrow"] = step.get("rft_escrow", 0)
        if "claim_window_blocks" in step:
            body["claim_window_blocks"] = step["claim_window_blocks"]
        self._submit(step["sender"], "create-will", body, step.get("fee_payer"))
        did = ""
        for event in reversed(self.state.event_log):
            if event["kind"] == "will-created":
                did = event["did"]
                break
        if "label" in step:
            self.labels[step["label"]] = did
        return f"created:{did}"

    def _component_spec(self, spec: dict, step: dict) -> dict:
        access = dict(spec.get("access", {"visibility": "public"}))
        if "allowed" in access:
            access["allowed"] = [self.resolve_ref(a) for a in access["allowed"]]
        output = dict(spec["output"])
        if "to" in output:
            output["to"] = self.resolve_ref(output["to"])
        out: dict = {"type": spec["type"], "access": access, "output": output}
        if "requirement" in spec:
            out["requirement"] = self._requirement_spec(spec["requirement"], access)
        return out

    def _requirement_spec(self, spec: dict, access: dict) -> dict:
        group = self.group
        ctype = spec["claim_type"]
        req_access = dict(spec.get("access", access))
        if "allowed" in req_access:
            req_access["allowed"] = [self.resolve_ref(a) for a in req_access["allowed"]]
        if ctype == "direct":
            expected = DirectExpectation(beneficiary=from_hex(self.resolve_ref(spec["beneficiary"])))
        elif ctype == "pedersen-claim":
            commitment = pedersen_commit(self.state.ctx.pedersen, spec["m"], spec["r"])
            expected = CommitmentExpectation(commitment=commitment)
        elif ctype == "schnorr-claim":
            expected = SignerSetExpectation(
                signer_pks=tuple(self.actor(a).pk for a in spec["signers"])
            )
        elif ctype == "gnark-claim":
            expected = StatementExpectation(statement_pk=self.actor(spec["prover"]).pk)
        elif ctype == "signature-proof":
            kp = self.actor(spec["signer"])
            presigned = schnorr_sign(group, kp, SIGNATURE_PROOF_CHALLENGE)
            expected = SignatureHashExpectation(
                sig_hash=signature_hash(group, presigned), signer_pk=kp.pk
            )
        else:
            raise ValidationError(f"unknown claim type {ctype!r}")
        req = ClaimRequirement(
            claim_type=ctype, expected=expected, access=access_from_dict(req_access)
        )
        return requirement_to_dict(group, req)

    def _step_claim(self, step: dict) -> str:
        did = self.resolve_did(step["will"])
        component = step["component"]
        if component == "rft":
            comp_id = "rft"
        else:
            comp_id = self.component_id(did, component)
        evidence: dict = {}
        if "evidence" in step:
            claimant = self.address_of(step["sender"])
            ev = self._build_evidence(step["evidence"], did, comp_id, claimant)
            evidence = evidence_to_dict(self.group, ev)
            if step["evidence"].get("tamper"):
                evidence = _tamper_evidence(self.group, evidence)
        self._submit(
            step["sender"],
            "claim",
            {"did": did, "component": comp_id, "evidence": evidence},
            step.get("fee_payer"),
        )
        return "ok"

    def _build_evidence(
        self, spec: dict, did: str, comp_id: str, claimant: bytes
    ) -> ClaimEvidence:
        group = self.group
        msg = claim_message(did, comp_id, claimant, self.state.config.chain_id)
        kind = spec["kind"]
        if kind == "direct":
            kp = self.actor(spec["actor"])
            return DirectSig(sig=schnorr_sign(group, kp, msg), pk=kp.pk)
        if kind == "pedersen":
            return PedersenOpening(m=spec["m"], r=spec["r"])
        if kind == "aggregate":
            sigs = [
                (schnorr_sign(group, self.actor(a), msg), self.actor(a).pk)
                for a in spec["actors"]
            ]
            agg = schnorr_aggregate(group, sigs, msg, self.state.pop_registry)
            return Aggregate(agg=agg)
        if kind == "knowledge":
            kp = self.actor(spec["actor"])
            return KnowledgeProof(proof=dlog_prove(group, kp, msg))
        if kind == "signature-reveal":
            kp = self.actor(spec["actor"])
            return SignatureReveal(sig=schnorr_sign(group, kp, SIGNATURE_PROOF_CHALLENGE))
        raise ValidationError(f"unknown evidence kind {kind!r}")

    def _step_checkin(self, step: dict) -> str:
        did = self.resolve_did(step["will"])
        self._submit(step["sender"], "checkin", {"did": did}, step.get("fee_payer"))
        return "ok"

    def _step_contract_checkin(self, step: dict) -> str:
        did = self.resolve_did(step["will"])
        self.state.checkin_via_hook(did, step.get("contract", "checkin-hook"))
        return "ok"

    def _step_approve_contract(self, step: dict) -> str:
        self._submit(
            step["sender"],
            "approve-contract",
            {"chain": step["chain"], "address": step["address"]},
            step.get("fee_payer"),
        )
        return "ok"

    def _step_transfer(self, step: dict) -> str:
        self._submit(
            step["sender"],
            "transfer",
            {
                "to": self.resolve_ref(step["to"]),
                "denom": step["denom"],
                "amount": step["amount"],
            },
            step.get("fee_payer"),
        )
        return "ok"

    def _step_noop(self, step: dict) -> str:
        self._submit(step["sender"], "noop", {}, step.get("fee_payer"))
        return "ok"

    def _step_advance(self, step: dict) -> str:
        self.network.advance(blocks=step.get("blocks", 1), chain_id=step.get("chain"))
        return f"height:{self.state.height}"

    def _step_relay(self, step: dict) -> str:
        delivered = 0
        for _ in range(step.get("steps", 1)):
            delivered += len(self.network.relay_step())
        return f"delivered:{delivered}"

    # -- vault steps ------------------------------------------------------------------

    def _file_content(self, step: dict) -> bytes:
        if "content_hex" in step:
            return from_hex(step["content_hex"])
        size = step.get("size", 1024)
        stream = NonceStream(
            self.group, FILE_TAG, seed_bytes(self.seed), step.get("label", "file").encode()
        )
        return stream.next_bytes(size)

    def _step_store_file(self, step: dict) -> str:
        data = self._file_content(step)
        cmap = self.state.vault.store_file(data, step.get("chunk_size", 1024))
        if "label" in step:
            self.files[step["label"]] = to_hex(cmap.file_id)
        return f"stored:{to_hex(cmap.file_id)}:chunks:{len(cmap.entries)}"

    def _step_store_deed(self, step: dict) -> str:
        did = self.resolve_did(step["will"])
        comp_id = self.component_id(did, step["component"])
        data = self._file_content(step)
        cmap, _header = store_deed(
            self.state,
            data,
            self.actor(step["beneficiary"]).pk,
            self.actor(step["temp"]).pk,
            did,
            comp_id,
            step.get("chunk_size", 1024),
        )
        if "label" in step:
            self.files[step["label"]] = to_hex(cmap.file_id)
        return f"stored:{to_hex(cmap.file_id)}"

    def _step_reveal_key(self, step: dict) -> str:
        did = self.resolve_did(step["will"])
        comp_id = self.component_id(did, step["component"])
        reveal_key(self.state, did, comp_id, self.actor(step["temp"]).sk)
        return "revealed"

    # -- assertions ----------------------------------------------------------------------

    def _step_assert(self, step: dict) -> str:
        check = step["check"]
        if check == "balance":
            address = from_hex(self.resolve_ref(step["address"]))
            actual = self.state.account(address).balance(step["denom"])
            _expect_equal(actual, step["equals"], f"balance of {step['address']}")
        elif check == "remote-balance":
            chain = self.network.chains[step["chain"]]
            address = self.resolve_ref(step["address"])
            actual = chain.balances.get(address, {}).get(step["denom"], 0)
            _expect_equal(actual, step["equals"], f"remote balance of {address}")
        elif check == "will-status":
            will = self.state.will(self.resolve_did(step["will"]))
            _expect_equal(will.status, step["equals"], f"status of {step['will']}")
        elif check == "component-state":
            did = self.resolve_did(step["will"])
            comp = self.state.will(did).components[step["component"]]
            _expect_equal(comp.state, step["equals"], f"state of component {step['component']}")
        elif check == "burned":
            _expect_equal(self.state.burned, step["equals"], "cumulative burned")
        elif check == "supply-conserved":
            self.state.check_conservation()
        elif check == "event-count":
            matches = [e for e in self.state.event_log if _event_matches(e, step["match"])]
            _expect_equal(len(matches), step["equals"], f"events matching {step['match']}")
        elif check == "events-in-order":
            self._assert_events_in_order(step["matchers"])
        elif check == "released-count":
            contract = self.network.contract(step["chain"], step["contract"])
            _expect_equal(len(contract.released), step["equals"], "release count")
        elif check == "token-owner":
            did = self.resolve_did(step["will"])
            token = self.state.token_registry.get(did)
            if token is None:
                raise ScenarioAssertionError(f"no token for {step['will']}")
            _expect_equal(
                to_hex(token.owner), self.resolve_ref(step["equals"]), "token owner"
            )
        else:
            raise ValidationError(f"unknown assertion check {check!r}")
        return "ok"

    def _assert_events_in_order(self, matchers: list[dict]) -> None:
        position = 0
        events = self.state.event_log
        for matcher in matchers:
            while position < len(events) and not _event_matches(events[position], matcher):
                position += 1
            if position == len(events):
                raise ScenarioAssertionError(f"no event matching {matcher} in order")
            position += 1


def _event_matches(event: dict, matcher: dict) -> bool:
    return all(event.get(k) == v for k, v in matcher.items())


def _expect_equal(actual, expected, label: str) -> None:
    if actual != expected:
        raise ScenarioAssertionError(f"{label}: expected {expected!r}, got {actual!r}")


def _tamper_evidence(group, evidence: dict) -> dict:
    """Flip one scalar field so the evidence fails verification."""
    tampered = dict(evidence)
    for key in ("response", "response_sum", "r"):
        if key in tampered:
            value = group.decode_scalar(from_hex(tampered[key]))
            tampered[key] = to_hex(group.encode_scalar((value + 1) % group.q))
            return tampered
    raise ValidationError("evidence kind has no tamperable scalar")


# -- snapshots -------------------------------------------------------------------


def snapshot_dict(runner: Runner) -> dict:
    return {
        "scenario_name": runner.scenario.name,
        "seed": runner.seed,
        "network": runner.network.to_dict(),
        "actors": {
            name: to_hex(runner.group.encode_scalar(kp.sk))
            for name, kp in sorted(runner.actors.items())
        },
        "labels": dict(sorted(runner.labels.items())),
        "files": dict(sorted(runner.files.items())),
        "report": runner.report,
        "cursor": runner.cursor,
    }


def restore_runner(scenario: Scenario, snapshot: dict) -> Runner:
    runner = Runner.__new__(Runner)
    runner.scenario = scenario
    runner.seed = snapshot["seed"]
    runner.network = Network.from_dict(snapshot["network"])
    group = runner.network.home.ctx.group
    runner.actors = {
        name: keypair_from_scalar(group, group.decode_scalar(from_hex(sk)))
        for name, sk in snapshot["actors"].items()
    }
    runner.labels = dict(snapshot["labels"])
    runner.files = dict(snapshot["files"])
    runner.report = list(snapshot["report"])
    runner.cursor = snapshot["cursor"]
    return runner


def run_scenario(
    path: str,
    seed: str | None = None,
    stop_after: int | None = None,
) -> Runner:
    """Load, build, and execute a scenario file; returns the finished runner."""
    scenario = Scenario.load(path)
    runner = Runner(scenario, seed=seed)
    runner.run(stop_after=stop_after)
    return runner


# -- inspect -------------------------------------------------------------------


def inspect(network: Network, query: str, identifier: str = "") -> dict:
    """Structured views over a network: wills, accounts, tokens, trace."""
    state = network.home
    group = state.ctx.group
    if query == "will":
        will = state.wills.get(identifier)
        if will is None:
            raise NotFoundError(f"unknown will {identifier!r}")
        from .will import will_to_dict

        return will_to_dict(group, will)
    if query == "token":
        token = state.token_registry.get(identifier)
        if token is None:
            raise NotFoundError(f"no token for {identifier!r}")
        from .will import token_to_dict

        return token_to_dict(token)
    if query == "account":
        acct = state.accounts.get(identifier)
        if acct is None:
            raise NotFoundError(f"unknown account {identifier!r}")
        return {"address": identifier, "balances": dict(sorted(acct.balances.items()))}
    if query == "balances":
        return {
            "accounts": {
                addr: dict(sorted(acct.balances.items()))
                for addr, acct in sorted(state.accounts.items())
            },
            "burned": state.burned,
            "genesis_supply": state.genesis_supply,
        }
    if query == "trace":
        return {"trace": network.trace}
    if query == "hashes":
        return {"state_hashes": network.state_hashes()}
    if query == "events":
        return {"events": state.event_log}
    raise NotFoundError(f"unknown query {query!r}")
