"""Multi-chain simulation: destination chains, entrypoint contracts,
relayers, and the init-ack-confirm flow.

Every channel runs between the will module and one entrypoint contract
on a destination chain. The flow for any interchain effect is the same
three phases:

    init     will module -> contract      carries the execution or claim
    ack      contract -> will module      receipt + contract-side status
    confirm  will module -> contract      verdict; contract acts on it

Contracts never trust a packet on its own: the relayer proves each
commitment against the source chain's committed outbox, the destination
recomputes it, and a processed-set rejects replays, so destination
effects apply at most once per packet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chain import ChainState, OutboxEntry
from .codec import canonical_bytes, from_hex, from_json, to_hex
from .crypto.group import tagged_hash
from .errors import (
    ChannelNotFoundError,
    NotFoundError,
    ReplayRejectedError,
    ValidationError,
)
from .packets import Packet, PacketProof, Path, make_packet

RELAY_ORDER_TAG = b"willchain/relay-order/v1"


@dataclass
class EntrypointContract:
    """Behavioral stub of a destination-chain gateway contract."""

    chain_id: str
    address: str
    approved_by: set[str] = field(default_factory=set)  # creator addresses, hex
    escrowed: dict[str, dict[str, int]] = field(default_factory=dict)  # creator -> denom -> amt
    pending_claims: dict[int, dict] = field(default_factory=dict)  # init sequence -> payload
    executions: list[dict] = field(default_factory=list)
    released: list[dict] = field(default_factory=list)

    def record_execution(self, payload: dict) -> tuple[bool, str]:
        if payload["creator"] not in self.approved_by:
            return False, "creator has not approved this contract"
        self.executions.append(
            {
                "did": payload["did"],
                "component": payload["component"],
                "output": payload["output"],
                "status": "executed",
            }
        )
        return True, ""

    def submit_claim(self, sequence: int, payload: dict) -> tuple[bool, str]:
        if payload["creator"] not in self.approved_by:
            return False, "creator has not approved this contract"
        self.pending_claims[sequence] = payload
        return True, ""

    def release(self, claim: dict) -> dict:
        """Hand the creator's escrowed assets to the claimant."""
        creator = claim["creator"]
        moved = self.escrowed.pop(creator, {})
        record = {
            "did": claim["did"],
            "component": claim["component"],
            "claimant": claim["claimant"],
            "assets": moved,
        }
        self.released.append(record)
        return record

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "address": self.address,
            "approved_by": sorted(self.approved_by),
            "escrowed": {c: dict(sorted(d.items())) for c, d in sorted(self.escrowed.items())},
            "pending_claims": {str(s): p for s, p in sorted(self.pending_claims.items())},
            "executions": self.executions,
            "released": self.released,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EntrypointContract":
        return cls(
            chain_id=data["chain_id"],
            address=data["address"],
            approved_by=set(data["approved_by"]),
            escrowed={c: dict(d) for c, d in data["escrowed"].items()},
            pending_claims={int(s): p for s, p in data["pending_claims"].items()},
            executions=list(data["executions"]),
            released=list(data["released"]),
        )


class RemoteChain:
    """Thin destination chain: contracts, voucher balances, packet plumbing."""

    def __init__(self, chain_id: str) -> None:
        self.chain_id = chain_id
        self.height = 0
        self.contracts: dict[str, EntrypointContract] = {}
        self.balances: dict[str, dict[str, int]] = {}
        self.outbox: list[OutboxEntry] = []
        self.committed: dict[str, int] = {}
        self.processed: set[tuple[str, int, str]] = set()
        self.event_log: list[dict] = []

    def log_event(self, kind: str, **fields) -> None:
        self.event_log.append({"height": self.height, "kind": kind, **fields})

    def begin_block(self) -> None:
        self.height += 1

    def credit(self, address: str, denom: str, amount: int) -> None:
        bucket = self.balances.setdefault(address, {})
        bucket[denom] = bucket.get(denom, 0) + amount

    def _contract_for(self, path: Path) -> EntrypointContract:
        contract = self.contracts.get(path.dest_port)
        if contract is None:
            raise ChannelNotFoundError(
                f"no entrypoint contract at port {path.dest_port!r} on {self.chain_id}"
            )
        return contract

    def _emit_reply(self, request: Packet, phase: str, payload: dict) -> Packet:
        packet = make_packet(
            request.path.reversed(), request.sequence, phase, canonical_bytes(payload)
        )
        self.outbox.append(OutboxEntry(packet=packet))
        self.committed[to_hex(packet.commitment)] = self.height
        return packet

    def receive_packet(self, packet: Packet, proof: PacketProof) -> Packet | None:
        if not packet.verify_commitment() or packet.commitment != proof.commitment:
            raise ValidationError("packet commitment does not verify")
        if packet.path.dest_chain != self.chain_id:
            raise ChannelNotFoundError("packet not addressed to this chain")
        key = (packet.path.key, packet.sequence, packet.phase)
        if key in self.processed:
            raise ReplayRejectedError(f"packet {key} already processed")
        self.processed.add(key)
        payload = from_json(packet.payload)

        if packet.phase == "init":
            return self._handle_init(packet, payload)
        if packet.phase == "confirm":
            self._handle_confirm(packet, payload)
            return None
        raise ValidationError(f"unexpected phase {packet.phase!r} at destination chain")

    def _handle_init(self, packet: Packet, payload: dict) -> Packet:
        contract = self._contract_for(packet.path)
        if payload["kind"] == "execution":
            ok, reason = contract.record_execution(payload)
            output = payload["output"]
            if ok and output["kind"] == "ibc-send":
                self.credit(output["address"], output["denom"], output["amount"])
                self.log_event(
                    "voucher-credited",
                    address=output["address"],
                    denom=output["denom"],
                    amount=output["amount"],
                )
            self.log_event(
                "execution-recorded",
                did=payload["did"],
                component=payload["component"],
                ok=ok,
                reason=reason,
            )
            return self._emit_reply(
                packet,
                "ack",
                {
                    "kind": "exec-ack",
                    "ref_sequence": packet.sequence,
                    "contract_ok": ok,
                    "reason": reason,
                },
            )
        if payload["kind"] == "claim-init":
            ok, reason = contract.submit_claim(packet.sequence, payload)
            self.log_event(
                "claim-recorded",
                did=payload["did"],
                component=payload["component"],
                claimant=payload["claimant"],
                ok=ok,
                reason=reason,
            )
            return self._emit_reply(
                packet,
                "ack",
                {
                    "kind": "claim-ack",
                    "ref_sequence": packet.sequence,
                    "contract_ok": ok,
                    "reason": reason,
                },
            )
        raise ValidationError(f"unexpected init payload {payload['kind']!r}")

    def _handle_confirm(self, packet: Packet, payload: dict) -> None:
        contract = self._contract_for(packet.path)
        if payload["kind"] == "exec-confirm":
            self.log_event("execution-finalized", ref_sequence=payload["ref_sequence"])
            return
        if payload["kind"] == "claim-confirm":
            claim = contract.pending_claims.pop(payload["ref_sequence"], None)
            if claim is None:
                self.log_event(
                    "confirm-without-claim", ref_sequence=payload["ref_sequence"]
                )
                return
            if payload["verdict"] == "eligible":
                output = payload["output"]
                if output.get("kind") == "ibc-send":
                    # the claim's effect is the voucher credit itself
                    self.credit(output["address"], output["denom"], output["amount"])
                    self.log_event(
                        "voucher-credited",
                        address=output["address"],
                        denom=output["denom"],
                        amount=output["amount"],
                    )
                else:
                    contract.executions.append(
                        {
                            "did": claim["did"],
                            "component": claim["component"],
                            "output": output,
                            "status": "claimed",
                        }
                    )
                    record = contract.release(claim)
                    for denom, amount in record["assets"].items():
                        self.credit(claim["claimant"], denom, amount)
                    self.log_event(
                        "assets-released",
                        did=claim["did"],
                        component=claim["component"],
                        claimant=claim["claimant"],
                        assets=record["assets"],
                    )
            else:
                self.log_event(
                    "claim-rejected",
                    did=claim["did"],
                    component=claim["component"],
                    claimant=claim["claimant"],
                    verdict=payload["verdict"],
                    reason=payload["reason"],
                )
                if payload["verdict"] == "early":
                    self.log_event(
                        "penalty-reported",
                        did=claim["did"],
                        claimant=claim["claimant"],
                    )
            return
        raise ValidationError(f"unexpected confirm payload {payload['kind']!r}")

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "height": self.height,
            "contracts": {a: c.to_dict() for a, c in sorted(self.contracts.items())},
            "balances": {
                a: dict(sorted(b.items())) for a, b in sorted(self.balances.items())
            },
            "outbox": [entry.to_dict() for entry in self.outbox],
            "committed": dict(sorted(self.committed.items())),
            "processed": sorted(f"{p}|{s}|{ph}" for p, s, ph in self.processed),
            "events": self.event_log,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RemoteChain":
        chain = cls(data["chain_id"])
        chain.height = data["height"]
        chain.contracts = {
            a: EntrypointContract.from_dict(c) for a, c in data["contracts"].items()
        }
        chain.balances = {a: dict(b) for a, b in data["balances"].items()}
        chain.outbox = [OutboxEntry.from_dict(e) for e in data["outbox"]]
        chain.committed = dict(data["committed"])
        chain.processed = {
            (p, int(s), ph)
            for p, s, ph in (entry.split("|") for entry in data["processed"])
        }
        chain.event_log = list(data["events"])
        return chain


@dataclass
class Relayer:
    """Off-chain packet transporter; never fabricates commitments."""

    id: str
    channels: tuple[str, ...] | None = None  # None watches everything
    delivered_count: int = 0

    def watches(self, channel_id: str) -> bool:
        return self.channels is None or channel_id in self.channels

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "channels": list(self.channels) if self.channels is not None else None,
            "delivered_count": self.delivered_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Relayer":
        return cls(
            id=data["id"],
            channels=tuple(data["channels"]) if data["channels"] is not None else None,
            delivered_count=data["delivered_count"],
        )


def relayer_scan(
    relayer: Relayer, chains: dict[str, ChainState | RemoteChain]
) -> list[tuple[Packet, PacketProof]]:
    """Undelivered packets across all watched outboxes, with proofs."""
    found = []
    for chain_id in sorted(chains):
        chain = chains[chain_id]
        for entry in chain.outbox:
            if entry.delivered or not relayer.watches(entry.packet.path.channel_id):
                continue
            height = chain.committed.get(to_hex(entry.packet.commitment), 0)
            found.append((entry.packet, PacketProof(height=height, commitment=entry.packet.commitment)))
    return found


def relayer_decide(
    relayer: Relayer,
    proof: PacketProof,
    packet: Packet,
    chains: dict[str, ChainState | RemoteChain],
) -> str:
    """'deliver' iff the commitment recomputes and exists in the source
    chain's committed store; anything else is dropped."""
    source = chains.get(packet.path.source_chain)
    if source is None:
        return "drop"
    if not packet.verify_commitment():
        return "drop"
    if proof.commitment != packet.commitment:
        return "drop"
    if to_hex(packet.commitment) not in source.committed:
        return "drop"
    return "deliver"


class Network:
    """All chains, channels, and relayers of one simulation."""

    def __init__(self, home: ChainState, seed: bytes) -> None:
        self.home = home
        self.chains: dict[str, ChainState | RemoteChain] = {home.config.chain_id: home}
        self.relayers: list[Relayer] = []
        self.seed = seed
        self.relay_steps = 0
        self.trace: list[dict] = []

    # -- construction -----------------------------------------------------

    def add_remote_chain(self, chain_id: str) -> RemoteChain:
        chain = RemoteChain(chain_id)
        self.chains[chain_id] = chain
        return chain

    def add_channel(self, channel_id: str, dest_chain: str, contract_address: str) -> Path:
        if dest_chain not in self.chains:
            raise NotFoundError(f"unknown destination chain {dest_chain!r}")
        path = Path(
            source_chain=self.home.config.chain_id,
            source_port="will",
            dest_chain=dest_chain,
            dest_port=contract_address,
            channel_id=channel_id,
        )
        self.home.add_channel(path)
        remote = self.chains[dest_chain]
        assert isinstance(remote, RemoteChain)
        if contract_address not in remote.contracts:
            remote.contracts[contract_address] = EntrypointContract(
                chain_id=dest_chain, address=contract_address
            )
        self.home.register_contract(channel_id, contract_address)
        return path

    def add_relayer(self, relayer_id: str, channels: tuple[str, ...] | None = None) -> Relayer:
        relayer = Relayer(id=relayer_id, channels=channels)
        self.relayers.append(relayer)
        return relayer

    def contract(self, chain_id: str, address: str) -> EntrypointContract:
        chain = self.chains.get(chain_id)
        if not isinstance(chain, RemoteChain):
            raise NotFoundError(f"no remote chain {chain_id!r}")
        contract = chain.contracts.get(address)
        if contract is None:
            raise NotFoundError(f"no contract {address!r} on {chain_id!r}")
        return contract

    # -- transaction + block frontends -------------------------------------

    def submit_tx(self, tx) -> None:
        self.home.apply_tx(tx)
        if tx.kind == "approve-contract":
            # the approval travels out-of-band to the destination stub
            try:
                contract = self.contract(tx.body["chain"], tx.body["address"])
            except NotFoundError:
                return
            contract.approved_by.add(tx.sender)

    def advance(self, blocks: int = 1, chain_id: str | None = None) -> None:
        for _ in range(blocks):
            if chain_id is None or chain_id == self.home.config.chain_id:
                self.home.begin_block()
            for cid, chain in self.chains.items():
                if isinstance(chain, RemoteChain) and chain_id in (None, cid):
                    chain.begin_block()

    # -- relaying -----------------------------------------------------------

    def _step_order(self) -> list[Relayer]:
        """Seeded shuffle per step: reproducible relayer races."""
        step = self.relay_steps.to_bytes(8, "little")
        return sorted(
            self.relayers,
            key=lambda r: tagged_hash(RELAY_ORDER_TAG, self.seed, step, r.id.encode()),
        )

    def relay_step(self) -> list[dict]:
        """One scheduling round: each relayer (in seeded order) scans and
        delivers everything it can. Returns the trace records added."""
        self.relay_steps += 1
        added: list[dict] = []
        for relayer in self._step_order():
            for packet, proof in relayer_scan(relayer, self.chains):
                decision = relayer_decide(relayer, proof, packet, self.chains)
                if decision != "deliver":
                    added.append(self._trace(packet, "dropped", relayer.id))
                    continue
                added.append(self.deliver(packet, proof, relayer_id=relayer.id))
                relayer.delivered_count += 1
        self.trace.extend(added)
        return added

    def relay_until_quiet(self, max_steps: int = 32) -> None:
        for _ in range(max_steps):
            if not self.relay_step():
                return

    def deliver(self, packet: Packet, proof: PacketProof, relayer_id: str = "") -> dict:
        """Deliver one packet to its destination chain and mark it sent."""
        dest = self.chains.get(packet.path.dest_chain)
        if dest is None:
            raise ChannelNotFoundError(f"unknown chain {packet.path.dest_chain!r}")
        try:
            dest.receive_packet(packet, proof)
            verdict = self._delivery_verdict(packet)
        except ReplayRejectedError:
            verdict = "replay-rejected"
        self._mark_delivered(packet)
        return self._trace(packet, verdict, relayer_id)

    def _delivery_verdict(self, packet: Packet) -> str:
        if packet.phase == "confirm":
            payload = from_json(packet.payload)
            return str(payload.get("verdict", "ok"))
        return "ok"

    def _mark_delivered(self, packet: Packet) -> None:
        source = self.chains.get(packet.path.source_chain)
        if source is None:
            return
        for entry in source.outbox:
            if entry.packet.commitment == packet.commitment:
                entry.delivered = True

    def _trace(self, packet: Packet, verdict: str, relayer_id: str) -> dict:
        return {
            "path": packet.path.key,
            "sequence": packet.sequence,
            "phase": packet.phase,
            "commitment": to_hex(packet.commitment),
            "verdict": verdict,
            "relayer": relayer_id,
        }

    # -- hashing + serialization ---------------------------------------------

    def state_hashes(self) -> dict[str, str]:
        hashes = {}
        for chain_id in sorted(self.chains):
            chain = self.chains[chain_id]
            if isinstance(chain, ChainState):
                hashes[chain_id] = chain.state_hash()
            else:
                digest = tagged_hash(
                    b"willchain/state/v1", canonical_bytes(chain.to_dict())
                )
                hashes[chain_id] = digest.hex()
        return hashes

    def to_dict(self) -> dict:
        return {
            "home": self.home.to_dict(),
            "remotes": {
                cid: chain.to_dict()
                for cid, chain in sorted(self.chains.items())
                if isinstance(chain, RemoteChain)
            },
            "relayers": [r.to_dict() for r in self.relayers],
            "seed": to_hex(self.seed),
            "relay_steps": self.relay_steps,
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        network = cls(ChainState.from_dict(data["home"]), from_hex(data["seed"]))
        for cid, chain in data["remotes"].items():
            network.chains[cid] = RemoteChain.from_dict(chain)
        network.relayers = [Relayer.from_dict(r) for r in data["relayers"]]
        network.relay_steps = data["relay_steps"]
        network.trace = list(data["trace"])
        return network
