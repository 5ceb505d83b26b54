"""Deterministic single-chain runtime hosting the will module.

The chain is a single-writer state machine: transactions apply
atomically (all effects or none), blocks advance one at a time, and
every mutation lands in an append-only event log. Wills are indexed by
expiration height; ``begin_block`` executes the ones that come due,
elapses claim windows, and enqueues interchain outputs as init packets.

Native-token conservation holds at every block:

    sum(balances) + cumulative burned == genesis supply

The only burns are early-claim penalties.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .claims import (
    CryptoContext,
    check_access,
    derive_address,
    evidence_from_dict,
)
from .codec import canonical_bytes, from_hex, from_json, to_hex
from .crypto.group import GROUPS, Group, KeyPair, tagged_hash
from .crypto.pedersen import default_params
from .crypto.schnorr import (
    PopRegistry,
    decode_signature,
    encode_signature,
    schnorr_sign,
    schnorr_verify,
)
from .errors import (
    AuthError,
    ChannelNotFoundError,
    ClaimRejected,
    InsufficientFundsError,
    NotFoundError,
    ReplayRejectedError,
    TooLateError,
    UnauthorizedError,
    ValidationError,
    WillchainError,
)
from .packets import Packet, PacketProof, Path, make_packet
from .vault import FileVault
from .will import (
    ClaimSubmitted,
    ClaimWindowElapsed,
    CheckinOccurred,
    ComponentOutput,
    ContractCall,
    Emit,
    IbcSend,
    ShareLedger,
    SoulboundToken,
    Transfer,
    Will,
    WillComponent,
    component_from_dict,
    create_will,
    execute_will,
    freeze_ledger_at_expiration,
    is_interchain,
    ledger_from_dict,
    ledger_to_dict,
    make_component,
    mint_rft,
    native_amount,
    output_to_dict,
    refresh_status,
    rft_claim,
    step_component,
    token_from_dict,
    token_to_dict,
    will_from_dict,
    will_to_dict,
)

TX_KINDS = ("create-will", "checkin", "claim", "transfer", "approve-contract", "noop")
RFT_COMPONENT = "rft"

TX_SIGNING_TAG = b"willchain/tx/v1"
STATE_HASH_TAG = b"willchain/state/v1"
WILL_ESCROW_TAG = b"willchain/will-escrow/v1"
CHANNEL_ESCROW_TAG = b"willchain/channel-escrow/v1"
FEE_COLLECTOR_TAG = b"willchain/fee-collector/v1"


@dataclass(frozen=True)
class GenesisConfig:
    chain_id: str
    denom: str = "uwill"
    penalty_amount: int = 1_000_000
    checkin_period: int = 100
    claim_window_blocks: int = 100
    tx_fee: int = 0
    group: str = "modp-2048-256"

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "denom": self.denom,
            "penalty_amount": self.penalty_amount,
            "checkin_period": self.checkin_period,
            "claim_window_blocks": self.claim_window_blocks,
            "tx_fee": self.tx_fee,
            "group": self.group,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenesisConfig":
        return cls(**data)


@dataclass
class Account:
    address: bytes
    pk: int | None = None
    balances: dict[str, int] | None = None
    sponsor: bytes | None = None

    def __post_init__(self) -> None:
        if self.balances is None:
            self.balances = {}
        if self.sponsor == self.address:
            raise ValidationError("account cannot sponsor itself")

    def balance(self, denom: str) -> int:
        return self.balances.get(denom, 0)


@dataclass(frozen=True)
class SignedTx:
    kind: str
    body: dict
    sender: str  # hex address
    fee_payer: str | None
    signature: str  # hex-encoded schnorr signature

    def signing_bytes(self) -> bytes:
        doc = {
            "kind": self.kind,
            "body": self.body,
            "sender": self.sender,
            "fee_payer": self.fee_payer,
        }
        return tagged_hash(TX_SIGNING_TAG, canonical_bytes(doc))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "body": self.body,
            "sender": self.sender,
            "fee_payer": self.fee_payer,
            "signature": self.signature,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignedTx":
        return cls(
            kind=data["kind"],
            body=data["body"],
            sender=data["sender"],
            fee_payer=data["fee_payer"],
            signature=data["signature"],
        )


def sign_tx(
    group: Group, kp: KeyPair, kind: str, body: dict, fee_payer: str | None = None
) -> SignedTx:
    if kind not in TX_KINDS:
        raise ValidationError(f"unknown tx kind {kind!r}")
    sender = to_hex(derive_address(group, kp.pk))
    unsigned = SignedTx(kind=kind, body=body, sender=sender, fee_payer=fee_payer, signature="")
    sig = schnorr_sign(group, kp, unsigned.signing_bytes())
    return replace(unsigned, signature=to_hex(encode_signature(group, sig)))


def will_escrow_address(did: str) -> bytes:
    return tagged_hash(WILL_ESCROW_TAG, did.encode())[:20]


def channel_escrow_address(channel_id: str) -> bytes:
    return tagged_hash(CHANNEL_ESCROW_TAG, channel_id.encode())[:20]


FEE_COLLECTOR = tagged_hash(FEE_COLLECTOR_TAG)[:20]


@dataclass
class OutboxEntry:
    packet: Packet
    delivered: bool = False

    def to_dict(self) -> dict:
        return {"packet": self.packet.to_dict(), "delivered": self.delivered}

    @classmethod
    def from_dict(cls, data: dict) -> "OutboxEntry":
        return cls(packet=Packet.from_dict(data["packet"]), delivered=data["delivered"])


class ChainState:
    """Home-chain state: accounts, wills, packet plumbing, event log."""

    def __init__(self, config: GenesisConfig) -> None:
        group = GROUPS[config.group]
        self.config = config
        self.ctx = CryptoContext(
            group=group, pedersen=default_params(group), chain_id=config.chain_id
        )
        self.height = 0
        self.accounts: dict[str, Account] = {}
        self.wills: dict[str, Will] = {}
        self.expiration_index: dict[int, list[str]] = {}
        self.window_index: dict[int, list[tuple[str, str]]] = {}
        self.share_ledgers: dict[str, ShareLedger] = {}
        self.token_registry: dict[str, SoulboundToken] = {}
        self.event_log: list[dict] = []
        self.outbox: list[OutboxEntry] = []
        self.committed: dict[str, int] = {}  # commitment hex -> emission height
        self.processed: set[tuple[str, int, str]] = set()
        self.pending_interchain: dict[str, dict] = {}  # "<channel>/<seq>" -> claim record
        self.channels: dict[str, Path] = {}
        self.contract_directory: dict[str, str] = {}  # contract address -> channel id
        self.sequences: dict[str, int] = {}
        self.approved_contracts: set[tuple[str, str, str]] = set()  # (creator, chain, addr)
        self.burned = 0
        self.genesis_supply = 0
        self.vault = FileVault()
        self.pop_registry = PopRegistry(group)

    # -- bootstrap ----------------------------------------------------------

    def add_account(
        self,
        address: bytes,
        pk: int | None = None,
        balances: dict[str, int] | None = None,
        sponsor: bytes | None = None,
    ) -> Account:
        account = Account(address=address, pk=pk, balances=dict(balances or {}), sponsor=sponsor)
        self.accounts[to_hex(address)] = account
        return account

    def finalize_genesis(self) -> None:
        self.genesis_supply = sum(
            acct.balance(self.config.denom) for acct in self.accounts.values()
        )

    def add_channel(self, path: Path) -> None:
        if path.source_chain != self.config.chain_id or path.source_port != "will":
            raise ValidationError("home-chain channels must start at the will module port")
        self.channels[path.channel_id] = path
        self.sequences.setdefault(path.channel_id, 0)

    def register_contract(self, channel_id: str, contract_address: str) -> None:
        if channel_id not in self.channels:
            raise ChannelNotFoundError(f"unknown channel {channel_id!r}")
        self.contract_directory[contract_address] = channel_id

    # -- small helpers --------------------------------------------------------

    def log_event(self, kind: str, **fields) -> None:
        self.event_log.append({"height": self.height, "kind": kind, **fields})

    def account(self, address: bytes) -> Account:
        acct = self.accounts.get(to_hex(address))
        if acct is None:
            raise NotFoundError(f"unknown account {to_hex(address)}")
        return acct

    def _ensure_account(self, address: bytes) -> Account:
        key = to_hex(address)
        if key not in self.accounts:
            self.accounts[key] = Account(address=address, balances={})
        return self.accounts[key]

    def credit(self, address: bytes, denom: str, amount: int) -> None:
        acct = self._ensure_account(address)
        acct.balances[denom] = acct.balance(denom) + amount

    def debit(self, address: bytes, denom: str, amount: int) -> None:
        acct = self.account(address)
        if acct.balance(denom) < amount:
            raise InsufficientFundsError(
                f"{to_hex(address)} holds {acct.balance(denom)}{denom}, needs {amount}"
            )
        acct.balances[denom] = acct.balance(denom) - amount

    def burn(self, address: bytes, amount: int) -> None:
        self.debit(address, self.config.denom, amount)
        self.burned += amount

    def will(self, did: str) -> Will:
        will = self.wills.get(did)
        if will is None:
            raise NotFoundError(f"unknown will {did}")
        return will

    def _will_expired(self, will: Will) -> bool:
        return will.status != "active" or self.height >= will.expiration

    def _index_expiration(self, did: str, height: int) -> None:
        self.expiration_index.setdefault(height, []).append(did)

    def _unindex_expiration(self, did: str, height: int) -> None:
        bucket = self.expiration_index.get(height, [])
        if did in bucket:
            bucket.remove(did)
            if not bucket:
                del self.expiration_index[height]

    # -- transactions ---------------------------------------------------------

    def apply_tx(self, tx: SignedTx) -> None:
        """Authenticate, charge the fee, and dispatch. Any failure after
        the fee debit refunds it, so a rejected tx leaves no effects."""
        sender_acct = self.accounts.get(tx.sender)
        if sender_acct is None:
            raise AuthError(f"unknown sender {tx.sender}")
        if sender_acct.pk is None:
            raise AuthError(f"sender {tx.sender} has no registered public key")
        group = self.ctx.group
        try:
            sig = decode_signature(group, from_hex(tx.signature))
        except Exception as exc:
            raise AuthError(f"malformed signature: {exc}") from exc
        if not schnorr_verify(group, sender_acct.pk, tx.signing_bytes(), sig):
            raise AuthError("transaction signature failed verification")

        fee_payer = self._resolve_fee_payer(tx, sender_acct)
        fee = self.config.tx_fee
        if fee:
            self.debit(fee_payer, self.config.denom, fee)
            self.credit(FEE_COLLECTOR, self.config.denom, fee)
        try:
            self._dispatch(tx)
        except Exception:
            if fee:
                self.debit(FEE_COLLECTOR, self.config.denom, fee)
                self.credit(fee_payer, self.config.denom, fee)
            raise

    def _resolve_fee_payer(self, tx: SignedTx, sender_acct: Account) -> bytes:
        if tx.fee_payer is not None:
            payer = from_hex(tx.fee_payer)
            self.account(payer)
            return payer
        if sender_acct.sponsor is not None:
            return sender_acct.sponsor
        return sender_acct.address

    def _dispatch(self, tx: SignedTx) -> None:
        sender = from_hex(tx.sender)
        if tx.kind == "create-will":
            self._handle_create_will(sender, tx.body)
        elif tx.kind == "checkin":
            self.checkin(sender, tx.body["did"])
        elif tx.kind == "claim":
            self.submit_claim(
                sender, tx.body["did"], tx.body["component"], tx.body.get("evidence", {})
            )
        elif tx.kind == "transfer":
            self._handle_transfer(sender, tx.body)
        elif tx.kind == "approve-contract":
            self.approve_contract(sender, tx.body["chain"], tx.body["address"])
        elif tx.kind == "noop":
            self.log_event("noop", sender=tx.sender)
        else:
            raise ValidationError(f"unknown tx kind {tx.kind!r}")

    def _handle_create_will(self, sender: bytes, body: dict) -> None:
        group = self.ctx.group
        sender_acct = self.account(sender)
        components = [self._component_draft(d) for d in body["components"]]
        for comp in components:
            if isinstance(comp.output, IbcSend) and comp.output.channel not in self.channels:
                raise ChannelNotFoundError(f"unknown channel {comp.output.channel!r}")
            if isinstance(comp.output, ContractCall):
                if comp.output.contract_address not in self.contract_directory:
                    raise ChannelNotFoundError(
                        f"no channel routes to contract {comp.output.contract_address!r}"
                    )
        approved = frozenset(
            addr
            for creator, _chain, addr in self.approved_contracts
            if creator == to_hex(sender)
        )
        will, token = create_will(
            group,
            creator_pk=sender_acct.pk,
            expiration=body["expiration"],
            components=components,
            beneficiaries=[from_hex(b) for b in body.get("beneficiaries", [])],
            nonce=from_hex(body["nonce"]),
            current_height=self.height,
            approved_contracts=approved,
            claim_window_blocks=body.get("claim_window_blocks", self.config.claim_window_blocks),
        )
        if will.did in self.wills:
            raise ValidationError(f"will {will.did} already exists")

        denom = self.config.denom
        escrow_needed = sum(native_amount(c.output, denom) for c in will.components)
        shares = {from_hex(a): v for a, v in body.get("shares", {}).items()}
        rft_escrow = body.get("rft_escrow", 0)
        self.debit(sender, denom, escrow_needed + rft_escrow)
        self.credit(will_escrow_address(will.did), denom, escrow_needed + rft_escrow)

        self.wills[will.did] = will
        self.token_registry[will.did] = token
        self._index_expiration(will.did, will.expiration)
        if shares:
            self.share_ledgers[will.did] = mint_rft(will, shares, rft_escrow)
        self.log_event(
            "will-created",
            did=will.did,
            creator=to_hex(will.creator),
            expiration=will.expiration,
            components=len(will.components),
        )
        self.log_event("token-minted", did=will.did, token_id=to_hex(token.token_id), owner=to_hex(token.owner))

    def _component_draft(self, data: dict) -> WillComponent:
        shaped = dict(data)
        shaped.setdefault("id", "draft/0")
        shaped.setdefault("state", "inactive")
        shaped.setdefault("window_blocks", self.config.claim_window_blocks)
        comp = component_from_dict(self.ctx.group, shaped)
        return make_component(comp.ctype, comp.output, comp.access, comp.requirement)

    def _handle_transfer(self, sender: bytes, body: dict) -> None:
        to = from_hex(body["to"])
        self.debit(sender, body["denom"], body["amount"])
        self.credit(to, body["denom"], body["amount"])
        self.log_event(
            "transfer",
            sender=to_hex(sender),
            to=body["to"],
            denom=body["denom"],
            amount=body["amount"],
        )

    # -- named operations -------------------------------------------------------

    def approve_contract(self, creator: bytes, chain_id: str, address: str) -> None:
        self.account(creator)
        self.approved_contracts.add((to_hex(creator), chain_id, address))
        self.log_event(
            "contract-approved", creator=to_hex(creator), chain=chain_id, address=address
        )

    def checkin(self, sender: bytes, did: str) -> None:
        will = self.will(did)
        if sender != will.creator:
            raise UnauthorizedError(f"checkin on {did} only accepted from its creator")
        if will.status != "active":
            raise TooLateError(f"{did} already {will.status}")
        new_expiration = self.height + self.config.checkin_period
        self._unindex_expiration(did, will.expiration)
        self._index_expiration(did, new_expiration)
        comps = []
        cancelled = []
        for comp in will.components:
            stepped, _ = step_component(self.ctx, comp, CheckinOccurred(height=self.height))
            if stepped.state != comp.state:
                cancelled.append(comp.id)
            comps.append(stepped)
        self.wills[did] = replace(will, expiration=new_expiration, components=tuple(comps))
        self.log_event("checkin", did=did, new_expiration=new_expiration)
        for comp_id in cancelled:
            self.log_event("claim-window-cancelled", did=did, component=comp_id)

    def checkin_via_hook(self, did: str, contract: str) -> None:
        """Contract check-in hook: a registered contract invokes the native
        check-in path on the creator's behalf."""
        will = self.will(did)
        self.checkin(will.creator, did)
        self.log_event("checkin-source", did=did, contract=contract)

    def submit_claim(self, claimant: bytes, did: str, component_id: str, evidence: dict) -> None:
        self.account(claimant)
        will = self.will(did)
        if component_id == RFT_COMPONENT:
            self._redeem_shares(claimant, will)
            return
        comp = will.component(component_id)

        if is_interchain(comp.output):
            self._initiate_interchain_claim(claimant, will, comp, evidence)
            return

        expired = self._will_expired(will)
        ev = evidence_from_dict(self.ctx.group, evidence)
        stepped, outputs = step_component(
            self.ctx,
            comp,
            ClaimSubmitted(
                evidence=ev, claimant=claimant, height=self.height, will_expired=expired
            ),
        )
        if not expired:
            # valid early claim: open the window and burn the penalty
            self.burn(claimant, self.config.penalty_amount)
            start, blocks = stepped.claim_window
            self.window_index.setdefault(start + blocks, []).append((did, comp.id))
            self.wills[did] = will.with_component(stepped)
            self.log_event(
                "claim-window-opened",
                did=did,
                component=comp.id,
                claimant=to_hex(claimant),
                closes_at=start + blocks,
            )
            self.log_event(
                "penalty-burned", claimant=to_hex(claimant), amount=self.config.penalty_amount
            )
            return
        updated = will.with_component(stepped)
        self.wills[did] = refresh_status(updated)
        self._apply_outputs(did, stepped.id, outputs, claimant=claimant)
        self.log_event(
            "component-executed", did=did, component=comp.id, claimant=to_hex(claimant)
        )

    def _redeem_shares(self, claimant: bytes, will: Will) -> None:
        ledger = self.share_ledgers.get(will.did)
        if ledger is None:
            raise NotFoundError(f"{will.did} has no share ledger")
        updated, payout = rft_claim(ledger, claimant, will)
        self.share_ledgers[will.did] = updated
        self.debit(will_escrow_address(will.did), self.config.denom, payout)
        self.credit(claimant, self.config.denom, payout)
        self.log_event(
            "shares-redeemed",
            did=will.did,
            claimant=to_hex(claimant),
            payout=payout,
            burned_shares=updated.burned_shares,
        )

    # -- interchain claim handshake ----------------------------------------------

    def _route_output(self, output: ComponentOutput) -> str:
        if isinstance(output, IbcSend):
            if output.channel not in self.channels:
                raise ChannelNotFoundError(f"unknown channel {output.channel!r}")
            return output.channel
        if isinstance(output, ContractCall):
            channel = self.contract_directory.get(output.contract_address)
            if channel is None:
                raise ChannelNotFoundError(
                    f"no channel routes to contract {output.contract_address!r}"
                )
            return channel
        raise ChannelNotFoundError("output is not routable")

    def emit_packet(self, channel_id: str, payload: dict) -> Packet:
        path = self.channels.get(channel_id)
        if path is None:
            raise ChannelNotFoundError(f"unknown channel {channel_id!r}")
        self.sequences[channel_id] += 1
        packet = make_packet(
            path, self.sequences[channel_id], "init", canonical_bytes(payload)
        )
        self.outbox.append(OutboxEntry(packet=packet))
        self.committed[to_hex(packet.commitment)] = self.height
        return packet

    def _emit_reply(self, request: Packet, phase: str, payload: dict) -> Packet:
        """Queue a reply on the reverse path; the request's sequence is
        reused so the phases of one flow stay correlated."""
        packet = make_packet(
            request.path.reversed(), request.sequence, phase, canonical_bytes(payload)
        )
        self.outbox.append(OutboxEntry(packet=packet))
        self.committed[to_hex(packet.commitment)] = self.height
        return packet

    def _initiate_interchain_claim(
        self, claimant: bytes, will: Will, comp: WillComponent, evidence: dict
    ) -> None:
        if comp.requirement is not None and not check_access(comp.requirement, claimant):
            raise UnauthorizedError(f"caller not in access list of {comp.id}")
        if comp.state == "executed":
            raise ClaimRejected(f"component {comp.id} already executed")
        channel = self._route_output(comp.output)
        payload = {
            "kind": "claim-init",
            "did": will.did,
            "component": comp.id,
            "claimant": to_hex(claimant),
            "creator": to_hex(will.creator),
            "evidence": evidence,
            "output": output_to_dict(comp.output),
            "submitted_height": self.height,
        }
        packet = self.emit_packet(channel, payload)
        self.pending_interchain[f"{channel}/{packet.sequence}"] = payload
        self.log_event(
            "claim-initiated",
            did=will.did,
            component=comp.id,
            claimant=to_hex(claimant),
            channel=channel,
            sequence=packet.sequence,
        )

    def receive_packet(self, packet: Packet, proof: PacketProof) -> Packet | None:
        """Will-module endpoint: process an ack and answer with a confirm."""
        if not packet.verify_commitment() or packet.commitment != proof.commitment:
            raise ValidationError("packet commitment does not verify")
        key = (packet.path.key, packet.sequence, packet.phase)
        if key in self.processed:
            raise ReplayRejectedError(f"packet {key} already processed")
        if packet.path.dest_chain != self.config.chain_id:
            raise ChannelNotFoundError("packet not addressed to this chain")
        self.processed.add(key)
        payload = _decode_payload(packet.payload)
        if payload["kind"] == "exec-ack":
            self.log_event(
                "execution-acknowledged",
                channel=packet.path.channel_id,
                sequence=packet.sequence,
            )
            return self._emit_reply(
                packet, "confirm", {"kind": "exec-confirm", "ref_sequence": payload["ref_sequence"]}
            )
        if payload["kind"] == "claim-ack":
            return self._confirm_claim(packet, payload)
        raise ValidationError(f"unexpected payload kind {payload['kind']!r} at will module")

    def _confirm_claim(self, ack: Packet, ack_payload: dict) -> Packet:
        """Eligibility verification midway through the handshake."""
        ref = f"{ack.path.channel_id}/{ack_payload['ref_sequence']}"
        record = self.pending_interchain.get(ref)
        verdict = "ineligible"
        reason = ""
        if record is None:
            reason = "no pending claim for this acknowledgement"
        elif not ack_payload.get("contract_ok", False):
            reason = str(ack_payload.get("reason", "contract rejected the claim"))
        else:
            verdict, reason = self._judge_claim(record)
        claimant = record["claimant"] if record else ""
        if record is not None:
            del self.pending_interchain[ref]
        confirm_payload = {
            "kind": "claim-confirm",
            "ref_sequence": ack_payload["ref_sequence"],
            "verdict": verdict,
            "reason": reason,
            "claimant": claimant,
            "did": record["did"] if record else "",
            "component": record["component"] if record else "",
            "output": record["output"] if record else {},
        }
        self.log_event(
            "claim-verdict",
            did=confirm_payload["did"],
            component=confirm_payload["component"],
            verdict=verdict,
            reason=reason,
        )
        return self._emit_reply(ack, "confirm", confirm_payload)

    def _judge_claim(self, record: dict) -> tuple[str, str]:
        """Returns (verdict, reason); applies home-side effects for the
        eligible (component executed, escrow moved) and early (penalty
        burned, window opened) cases."""
        did = record["did"]
        will = self.wills.get(did)
        if will is None:
            return "ineligible", "will does not exist"
        try:
            comp = will.component(record["component"])
        except ValidationError:
            return "ineligible", "component does not exist"
        claimant = from_hex(record["claimant"])
        expired = self._will_expired(will)
        try:
            ev = evidence_from_dict(self.ctx.group, record["evidence"])
            stepped, _outputs = step_component(
                self.ctx,
                comp,
                ClaimSubmitted(
                    evidence=ev, claimant=claimant, height=self.height, will_expired=expired
                ),
            )
        except (WillchainError, KeyError, TypeError) as exc:
            return "ineligible", str(exc)
        if expired:
            if isinstance(comp.output, IbcSend):
                # home-side half of the send: escrow moves to the channel account
                try:
                    self.debit(
                        will_escrow_address(did), comp.output.denom, comp.output.amount
                    )
                except InsufficientFundsError as exc:
                    return "ineligible", str(exc)
                self.credit(
                    channel_escrow_address(comp.output.channel),
                    comp.output.denom,
                    comp.output.amount,
                )
                self.log_event(
                    "ibc-send",
                    did=did,
                    component=comp.id,
                    channel=comp.output.channel,
                    amount=comp.output.amount,
                    denom=comp.output.denom,
                )
            self.wills[did] = refresh_status(will.with_component(stepped))
            self.log_event(
                "component-executed", did=did, component=comp.id, claimant=record["claimant"]
            )
            return "eligible", ""
        # valid but early: burn and open the cancellation window
        try:
            self.burn(claimant, self.config.penalty_amount)
        except InsufficientFundsError:
            return "ineligible", "claimant cannot cover the early-claim penalty"
        start, blocks = stepped.claim_window
        self.window_index.setdefault(start + blocks, []).append((did, comp.id))
        self.wills[did] = will.with_component(stepped)
        self.log_event(
            "claim-window-opened",
            did=did,
            component=comp.id,
            claimant=record["claimant"],
            closes_at=start + blocks,
        )
        self.log_event(
            "penalty-burned", claimant=record["claimant"], amount=self.config.penalty_amount
        )
        return "early", "claim precedes will expiration"

    # -- block production ----------------------------------------------------------

    def begin_block(self) -> list[tuple[str, str, ComponentOutput]]:
        """Advance one height: elapse due claim windows, execute expiring
        wills, apply their outputs. Failures during expired-will execution
        are logged, never raised."""
        self.height += 1
        applied: list[tuple[str, str, ComponentOutput]] = []

        for did, comp_id in self.window_index.pop(self.height, []):
            will = self.wills.get(did)
            if will is None:
                continue
            comp = will.component(comp_id)
            if comp.state != "active" or comp.claim_window is None:
                continue  # cancelled by a check-in; nothing to elapse
            if sum(comp.claim_window) != self.height:
                continue  # stale entry from a superseded window
            stepped, outputs = step_component(
                self.ctx, comp, ClaimWindowElapsed(height=self.height)
            )
            self.wills[did] = refresh_status(will.with_component(stepped))
            self._apply_outputs(did, comp_id, outputs)
            applied.extend((did, comp_id, out) for out in outputs)
            self.log_event("claim-window-elapsed", did=did, component=comp_id)

        for did in self.expiration_index.pop(self.height, []):
            will = self.wills.get(did)
            if will is None or will.status != "active":
                continue
            will, outputs = execute_will(self.ctx, will, self.height)
            self.wills[did] = will
            if did in self.share_ledgers:
                self.share_ledgers[did] = freeze_ledger_at_expiration(self.share_ledgers[did])
            self.log_event("will-expired", did=did, status=will.status)
            for comp_id, output in outputs:
                self._apply_outputs(did, comp_id, [output])
                applied.append((did, comp_id, output))

        self.check_conservation()
        return applied

    def _apply_outputs(
        self,
        did: str,
        comp_id: str,
        outputs: list[ComponentOutput],
        claimant: bytes | None = None,
    ) -> None:
        escrow = will_escrow_address(did)
        for output in outputs:
            if isinstance(output, Transfer):
                try:
                    self.debit(escrow, output.denom, output.amount)
                except InsufficientFundsError as exc:
                    self.log_event(
                        "execution-failed", did=did, component=comp_id, reason=str(exc)
                    )
                    continue
                self.credit(output.to, output.denom, output.amount)
                self.log_event(
                    "transferred_the_tokens",
                    did=did,
                    component=comp_id,
                    to=to_hex(output.to),
                    amount=output.amount,
                    denom=output.denom,
                )
            elif isinstance(output, Emit):
                self.log_event("emit", did=did, component=comp_id, message=output.message)
            elif isinstance(output, IbcSend):
                try:
                    self.debit(escrow, output.denom, output.amount)
                except InsufficientFundsError as exc:
                    self.log_event(
                        "execution-failed", did=did, component=comp_id, reason=str(exc)
                    )
                    continue
                self.credit(channel_escrow_address(output.channel), output.denom, output.amount)
                payload = {
                    "kind": "execution",
                    "did": did,
                    "component": comp_id,
                    "creator": to_hex(self.wills[did].creator),
                    "output": output_to_dict(output),
                }
                try:
                    packet = self.emit_packet(output.channel, payload)
                except ChannelNotFoundError as exc:
                    self.log_event(
                        "execution-failed", did=did, component=comp_id, reason=str(exc)
                    )
                    continue
                self.log_event(
                    "ibc-send",
                    did=did,
                    component=comp_id,
                    channel=output.channel,
                    sequence=packet.sequence,
                    amount=output.amount,
                    denom=output.denom,
                )
            elif isinstance(output, ContractCall):
                payload = {
                    "kind": "execution",
                    "did": did,
                    "component": comp_id,
                    "creator": to_hex(self.wills[did].creator),
                    "output": output_to_dict(output),
                }
                try:
                    channel = self._route_output(output)
                    packet = self.emit_packet(channel, payload)
                except ChannelNotFoundError as exc:
                    self.log_event(
                        "execution-failed", did=did, component=comp_id, reason=str(exc)
                    )
                    continue
                self.log_event(
                    "contract-call-sent",
                    did=did,
                    component=comp_id,
                    contract=output.contract_address,
                    sequence=packet.sequence,
                )
            else:  # TransferEmit never reaches here: step expands it
                raise ValidationError(f"unexpected output {type(output).__name__}")

    # -- invariants & hashing ----------------------------------------------------

    def total_native_balance(self) -> int:
        return sum(acct.balance(self.config.denom) for acct in self.accounts.values())

    def check_conservation(self) -> None:
        total = self.total_native_balance() + self.burned
        if total != self.genesis_supply:
            raise ValidationError(
                f"conservation violated: {total} != genesis supply {self.genesis_supply}"
            )

    def state_hash(self) -> str:
        return tagged_hash(STATE_HASH_TAG, canonical_bytes(self.to_dict())).hex()

    # -- serialization -------------------------------------------------------------

    def to_dict(self) -> dict:
        group = self.ctx.group
        return {
            "config": self.config.to_dict(),
            "height": self.height,
            "accounts": {
                addr: {
                    "pk": to_hex(group.encode_element(acct.pk)) if acct.pk is not None else None,
                    "balances": dict(sorted(acct.balances.items())),
                    "sponsor": to_hex(acct.sponsor) if acct.sponsor else None,
                }
                for addr, acct in sorted(self.accounts.items())
            },
            "wills": {did: will_to_dict(group, w) for did, w in sorted(self.wills.items())},
            "expiration_index": {
                str(h): sorted(dids) for h, dids in sorted(self.expiration_index.items())
            },
            "window_index": {
                str(h): sorted(f"{d}|{c}" for d, c in entries)
                for h, entries in sorted(self.window_index.items())
            },
            "share_ledgers": {
                did: ledger_to_dict(l) for did, l in sorted(self.share_ledgers.items())
            },
            "tokens": {did: token_to_dict(t) for did, t in sorted(self.token_registry.items())},
            "events": self.event_log,
            "outbox": [entry.to_dict() for entry in self.outbox],
            "committed": dict(sorted(self.committed.items())),
            "processed": sorted(f"{p}|{s}|{ph}" for p, s, ph in self.processed),
            "pending_interchain": dict(sorted(self.pending_interchain.items())),
            "channels": {cid: p.to_dict() for cid, p in sorted(self.channels.items())},
            "contract_directory": dict(sorted(self.contract_directory.items())),
            "sequences": dict(sorted(self.sequences.items())),
            "approved_contracts": sorted("|".join(t) for t in self.approved_contracts),
            "burned": self.burned,
            "genesis_supply": self.genesis_supply,
            "vault": self.vault.to_dict(),
            "registered_pops": [
                to_hex(group.encode_element(pk)) for pk in self.pop_registry.registered_keys()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChainState":
        state = cls(GenesisConfig.from_dict(data["config"]))
        group = state.ctx.group
        state.height = data["height"]
        for addr, acct in data["accounts"].items():
            state.accounts[addr] = Account(
                address=from_hex(addr),
                pk=group.decode_element(from_hex(acct["pk"])) if acct["pk"] else None,
                balances=dict(acct["balances"]),
                sponsor=from_hex(acct["sponsor"]) if acct["sponsor"] else None,
            )
        state.wills = {did: will_from_dict(group, w) for did, w in data["wills"].items()}
        state.expiration_index = {
            int(h): list(dids) for h, dids in data["expiration_index"].items()
        }
        state.window_index = {
            int(h): [tuple(e.split("|")) for e in entries]
            for h, entries in data["window_index"].items()
        }
        state.share_ledgers = {
            did: ledger_from_dict(l) for did, l in data["share_ledgers"].items()
        }
        state.token_registry = {did: token_from_dict(t) for did, t in data["tokens"].items()}
        state.event_log = list(data["events"])
        state.outbox = [OutboxEntry.from_dict(e) for e in data["outbox"]]
        state.committed = dict(data["committed"])
        state.processed = {
            (p, int(s), ph)
            for p, s, ph in (entry.split("|") for entry in data["processed"])
        }
        state.pending_interchain = dict(data["pending_interchain"])
        state.channels = {cid: Path.from_dict(p) for cid, p in data["channels"].items()}
        state.contract_directory = dict(data["contract_directory"])
        state.sequences = dict(data["sequences"])
        state.approved_contracts = {
            tuple(entry.split("|")) for entry in data["approved_contracts"]
        }
        state.burned = data["burned"]
        state.genesis_supply = data["genesis_supply"]
        state.vault = FileVault.from_dict(data["vault"])
        state.pop_registry.restore_registered(
            [group.decode_element(from_hex(pk_hex)) for pk_hex in data["registered_pops"]]
        )
        return state


def _decode_payload(payload: bytes) -> dict:
    return from_json(payload)
