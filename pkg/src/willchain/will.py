"""Will data model: components, lifecycle transitions, identifiers, and
fractional share accounting.

A will is an ordered list of components. Each component is a tuple of
(type, access control, output, transition rule): execution components
fire automatically at expiration, claim components fire on verified
beneficiary claims. Pre-expiration claims open a cancellation window
during which a creator check-in voids the claim; post-expiration claims
execute immediately.

All transition functions here are pure: they take a component or will
value plus an event and return the successor value with any produced
outputs. The chain runtime owns sequencing and side effects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .claims import (
    AccessControl,
    CLAIM_TYPES,
    ClaimEvidence,
    ClaimRequirement,
    CryptoContext,
    access_from_dict,
    access_to_dict,
    check_access,
    claim_message,
    derive_address,
    requirement_from_dict,
    requirement_to_dict,
    verify_claim,
)
from .codec import from_hex, to_hex
from .crypto.group import Group, tagged_hash
from .errors import (
    ApprovalMissingError,
    ClaimRejected,
    NothingToClaimError,
    PrematureClaimError,
    PrematureExecutionError,
    UnauthorizedError,
    ValidationError,
)

DID_PREFIX = "did:will:"
DID_TAG = b"willchain/did/v1"

EXECUTION_TRIGGERS = ("transfer", "ibc-msg", "contract-call")

COMPONENT_STATES = ("inactive", "active", "executed", "cancelled")
WILL_STATUSES = ("active", "expired", "executed")

DEFAULT_CLAIM_WINDOW_BLOCKS = 100


def mint_did(group: Group, creator_pk: int, nonce: bytes) -> tuple[str, bytes]:
    """Deterministic DID and token id from creator key plus creation nonce.

    The nonce keeps a creator's second will from colliding with their
    first; both identifiers share one hash.
    """
    digest = tagged_hash(DID_TAG, group.encode_element(creator_pk), nonce)
    return DID_PREFIX + digest.hex(), digest


def parse_did(did: str) -> bytes:
    if not did.startswith(DID_PREFIX):
        raise ValidationError(f"identifier missing {DID_PREFIX!r} prefix: {did!r}")
    return from_hex(did[len(DID_PREFIX) :])


@dataclass(frozen=True)
class SoulboundToken:
    """Non-transferable will token; no operation anywhere mutates owner."""

    token_id: bytes
    owner: bytes
    will: str


# -- component outputs ------------------------------------------------------


@dataclass(frozen=True)
class TransferEmit:
    to: bytes
    amount: int
    denom: str
    message: str


@dataclass(frozen=True)
class Transfer:
    to: bytes
    amount: int
    denom: str


@dataclass(frozen=True)
class IbcSend:
    channel: str
    address: str
    amount: int
    denom: str


@dataclass(frozen=True)
class ContractCall:
    contract_address: str
    payload: str


@dataclass(frozen=True)
class Emit:
    message: str


ComponentOutput = TransferEmit | Transfer | IbcSend | ContractCall | Emit

_OUTPUT_KINDS = {
    TransferEmit: "transfer-emit",
    Transfer: "transfer",
    IbcSend: "ibc-send",
    ContractCall: "contract-call",
    Emit: "emit",
}


def output_to_dict(output: ComponentOutput) -> dict:
    out: dict = {"kind": _OUTPUT_KINDS[type(output)]}
    if isinstance(output, (TransferEmit, Transfer)):
        out.update(to=to_hex(output.to), amount=output.amount, denom=output.denom)
        if isinstance(output, TransferEmit):
            out["message"] = output.message
    elif isinstance(output, IbcSend):
        out.update(
            channel=output.channel,
            address=output.address,
            amount=output.amount,
            denom=output.denom,
        )
    elif isinstance(output, ContractCall):
        out.update(contract_address=output.contract_address, payload=output.payload)
    else:
        out["message"] = output.message
    return out


def output_from_dict(data: dict) -> ComponentOutput:
    kind = data.get("kind")
    if kind == "transfer-emit":
        return TransferEmit(
            to=from_hex(data["to"]),
            amount=data["amount"],
            denom=data["denom"],
            message=data["message"],
        )
    if kind == "transfer":
        return Transfer(to=from_hex(data["to"]), amount=data["amount"], denom=data["denom"])
    if kind == "ibc-send":
        return IbcSend(
            channel=data["channel"],
            address=data["address"],
            amount=data["amount"],
            denom=data["denom"],
        )
    if kind == "contract-call":
        return ContractCall(
            contract_address=data["contract_address"], payload=data["payload"]
        )
    if kind == "emit":
        return Emit(message=data["message"])
    raise ValidationError(f"unknown output kind {kind!r}")


def _validate_output(output: ComponentOutput) -> None:
    if isinstance(output, (TransferEmit, Transfer, IbcSend)) and output.amount < 0:
        raise ValidationError("output amount must be nonnegative")


def expand_output(output: ComponentOutput) -> list[ComponentOutput]:
    """Composite outputs decompose on execution: transfer+emit fires both."""
    if isinstance(output, TransferEmit):
        return [
            Transfer(to=output.to, amount=output.amount, denom=output.denom),
            Emit(message=output.message),
        ]
    return [output]


def native_amount(output: ComponentOutput, denom: str) -> int:
    """Native tokens this output will draw from the will escrow."""
    if isinstance(output, (TransferEmit, Transfer, IbcSend)) and output.denom == denom:
        return output.amount
    return 0


def is_interchain(output: ComponentOutput) -> bool:
    return isinstance(output, (IbcSend, ContractCall))


# -- execution events --------------------------------------------------------


@dataclass(frozen=True)
class Expire:
    height: int


@dataclass(frozen=True)
class ClaimSubmitted:
    evidence: ClaimEvidence
    claimant: bytes
    height: int
    will_expired: bool


@dataclass(frozen=True)
class ClaimWindowElapsed:
    height: int


@dataclass(frozen=True)
class CheckinOccurred:
    height: int


ExecutionEvent = Expire | ClaimSubmitted | ClaimWindowElapsed | CheckinOccurred


# -- will component ----------------------------------------------------------


@dataclass(frozen=True)
class WillComponent:
    """One (type, access, output, transition) tuple of a will.

    ``ctype`` keeps the full hyphenated composite string, e.g.
    ``"schnorr-claim+transfer"``; the part before ``+`` is the trigger
    (a claim type, or an execution tag that fires at expiration).
    """

    id: str
    ctype: str
    access: AccessControl
    output: ComponentOutput
    requirement: ClaimRequirement | None = None
    state: str = "inactive"
    claim_window: tuple[int, int] | None = None  # (start height, blocks)
    window_blocks: int = DEFAULT_CLAIM_WINDOW_BLOCKS

    @property
    def trigger(self) -> str:
        return self.ctype.split("+", 1)[0]

    @property
    def is_claim(self) -> bool:
        return self.trigger in CLAIM_TYPES

    def __post_init__(self) -> None:
        if self.trigger not in CLAIM_TYPES and self.trigger not in EXECUTION_TRIGGERS:
            raise ValidationError(f"unknown component type {self.ctype!r}")
        if self.state not in COMPONENT_STATES:
            raise ValidationError(f"unknown component state {self.state!r}")
        if self.is_claim and self.requirement is None:
            raise ValidationError(f"claim component {self.ctype!r} needs a requirement")
        if not self.is_claim and self.requirement is not None:
            raise ValidationError(f"execution component {self.ctype!r} takes no requirement")
        if self.is_claim and self.requirement.claim_type != self.trigger:
            raise ValidationError(
                f"component type {self.ctype!r} vs requirement {self.requirement.claim_type!r}"
            )
        _validate_output(self.output)


def make_component(
    ctype: str,
    output: ComponentOutput,
    access: AccessControl | None = None,
    requirement: ClaimRequirement | None = None,
) -> WillComponent:
    """Component draft; create_will assigns the DID-scoped id."""
    return WillComponent(
        id="",
        ctype=ctype,
        access=access or AccessControl(visibility="public"),
        output=output,
        requirement=requirement,
    )


def step_component(
    ctx: CryptoContext, comp: WillComponent, event: ExecutionEvent
) -> tuple[WillComponent, list[ComponentOutput]]:
    """Apply one transition of the component state machine.

    Raises ClaimRejected / UnauthorizedError without changing state for
    bad claims; every other (state, event) pair either transitions or
    is a no-op, matching the transition table exercised in the tests.
    """
    if isinstance(event, Expire):
        if comp.is_claim or comp.state == "executed":
            return comp, []
        return replace(comp, state="executed", claim_window=None), expand_output(comp.output)

    if isinstance(event, ClaimSubmitted):
        if not comp.is_claim:
            raise ClaimRejected(f"component {comp.id} is not claimable")
        if comp.state == "executed":
            raise ClaimRejected(f"component {comp.id} already executed")
        if comp.state == "active":
            raise ClaimRejected(f"component {comp.id} already has a pending claim")
        req = comp.requirement
        assert req is not None
        if not check_access(req, event.claimant):
            raise UnauthorizedError(f"caller not in access list of {comp.id}")
        did = comp.id.rsplit("/", 1)[0]
        msg = claim_message(did, comp.id, event.claimant, ctx.chain_id)
        if not verify_claim(ctx, req, event.evidence, msg):
            raise ClaimRejected(f"evidence failed verification for {comp.id}")
        if event.will_expired:
            return (
                replace(comp, state="executed", claim_window=None),
                expand_output(comp.output),
            )
        return replace(comp, state="active", claim_window=(event.height, comp.window_blocks)), []

    if isinstance(event, CheckinOccurred):
        if comp.state == "active":
            return replace(comp, state="cancelled", claim_window=None), []
        return comp, []

    # ClaimWindowElapsed
    if comp.state == "active":
        return replace(comp, state="executed", claim_window=None), expand_output(comp.output)
    return comp, []


# -- the will ----------------------------------------------------------------


@dataclass(frozen=True)
class Will:
    did: str
    creator: bytes
    expiration: int
    components: tuple[WillComponent, ...]
    beneficiaries: tuple[bytes, ...]
    status: str = "active"
    claim_window_blocks: int = DEFAULT_CLAIM_WINDOW_BLOCKS

    def component(self, component_id: str) -> WillComponent:
        for comp in self.components:
            if comp.id == component_id:
                return comp
        raise ValidationError(f"no component {component_id!r} in {self.did}")

    def with_component(self, updated: WillComponent) -> "Will":
        comps = tuple(updated if c.id == updated.id else c for c in self.components)
        return replace(self, components=comps)


def create_will(
    group: Group,
    creator_pk: int,
    expiration: int,
    components: list[WillComponent],
    beneficiaries: list[bytes],
    nonce: bytes,
    current_height: int,
    approved_contracts: frozenset[str] = frozenset(),
    claim_window_blocks: int = DEFAULT_CLAIM_WINDOW_BLOCKS,
) -> tuple[Will, SoulboundToken]:
    """Mint a will and its soulbound token.

    Components come in as drafts; they get DID-scoped ids, the will's
    claim-window parameter, and a fresh inactive state.
    """
    if not components:
        raise ValidationError("a will must have at least one component")
    if expiration <= current_height:
        raise PrematureExecutionError(
            f"expiration {expiration} not after current height {current_height}"
        )
    for comp in components:
        if isinstance(comp.output, ContractCall):
            if comp.output.contract_address not in approved_contracts:
                raise ApprovalMissingError(
                    f"contract {comp.output.contract_address} not approved by creator"
                )

    did, token_id = mint_did(group, creator_pk, nonce)
    creator = derive_address(group, creator_pk)
    sealed = tuple(
        replace(
            comp,
            id=f"{did}/{index}",
            state="inactive",
            claim_window=None,
            window_blocks=claim_window_blocks,
        )
        for index, comp in enumerate(components)
    )
    will = Will(
        did=did,
        creator=creator,
        expiration=expiration,
        components=sealed,
        beneficiaries=tuple(beneficiaries),
        status="active",
        claim_window_blocks=claim_window_blocks,
    )
    token = SoulboundToken(token_id=token_id, owner=creator, will=did)
    return will, token


def execute_will(
    ctx: CryptoContext, will: Will, height: int
) -> tuple[Will, list[tuple[str, ComponentOutput]]]:
    """Run every execution component in stored order at expiration.

    Claim components are left untouched (they become claimable without
    a window once the will has expired). Idempotent: already-executed
    components contribute nothing on a second call.
    """
    if height < will.expiration:
        raise PrematureExecutionError(
            f"{will.did} expires at {will.expiration}, current height {height}"
        )
    outputs: list[tuple[str, ComponentOutput]] = []
    comps: list[WillComponent] = []
    for comp in will.components:
        stepped, produced = step_component(ctx, comp, Expire(height=height))
        comps.append(stepped)
        outputs.extend((stepped.id, out) for out in produced)
    remaining = any(c.state != "executed" for c in comps)
    status = "expired" if remaining else "executed"
    return replace(will, components=tuple(comps), status=status), outputs


def refresh_status(will: Will) -> Will:
    """Promote expired -> executed once no claimable components remain."""
    if will.status == "expired" and all(c.state == "executed" for c in will.components):
        return replace(will, status="executed")
    return will


# -- fractional shares -------------------------------------------------------


@dataclass(frozen=True)
class ShareLedger:
    """Fungible shares over a will's escrowed payout.

    ``total`` never changes; redeemed shares move from ``balances`` into
    ``burned_shares`` so that live + burned always equals total.
    """

    total: int
    balances: tuple[tuple[bytes, int], ...]
    escrow: int
    escrow_at_expiration: int | None = None
    burned_shares: int = 0

    def balance_of(self, holder: bytes) -> int:
        for addr, amount in self.balances:
            if addr == holder:
                return amount
        return 0


def mint_rft(will: Will, shares: dict[bytes, int], escrow_amount: int) -> ShareLedger:
    if not shares:
        raise ValidationError("share map must be nonempty")
    for holder, amount in shares.items():
        if amount <= 0:
            raise ValidationError(f"share for {to_hex(holder)} must be positive")
    if escrow_amount < 0:
        raise ValidationError("escrow amount must be nonnegative")
    balances = tuple(sorted(shares.items()))
    return ShareLedger(
        total=sum(shares.values()), balances=balances, escrow=escrow_amount
    )


def freeze_ledger_at_expiration(ledger: ShareLedger) -> ShareLedger:
    if ledger.escrow_at_expiration is not None:
        return ledger
    return replace(ledger, escrow_at_expiration=ledger.escrow)


def rft_claim(ledger: ShareLedger, claimant: bytes, will: Will) -> tuple[ShareLedger, int]:
    """Redeem all of a holder's shares for their pro-rata payout.

    Payouts floor-divide against the escrow captured at expiration, so
    redemption order never changes anyone's amount; division dust stays
    in escrow permanently.
    """
    if will.status == "active":
        raise PrematureClaimError(f"{will.did} has not expired")
    held = ledger.balance_of(claimant)
    if held == 0:
        raise NothingToClaimError(f"{to_hex(claimant)} holds no shares of {will.did}")
    basis = ledger.escrow_at_expiration if ledger.escrow_at_expiration is not None else ledger.escrow
    payout = basis * held // ledger.total
    balances = tuple((a, 0 if a == claimant else v) for a, v in ledger.balances)
    updated = replace(
        ledger,
        balances=balances,
        escrow=ledger.escrow - payout,
        burned_shares=ledger.burned_shares + held,
    )
    return updated, payout


def ledger_to_dict(ledger: ShareLedger) -> dict:
    return {
        "total": ledger.total,
        "balances": {to_hex(a): v for a, v in ledger.balances},
        "escrow": ledger.escrow,
        "escrow_at_expiration": ledger.escrow_at_expiration,
        "burned_shares": ledger.burned_shares,
    }


def ledger_from_dict(data: dict) -> ShareLedger:
    return ShareLedger(
        total=data["total"],
        balances=tuple(sorted((from_hex(a), v) for a, v in data["balances"].items())),
        escrow=data["escrow"],
        escrow_at_expiration=data["escrow_at_expiration"],
        burned_shares=data["burned_shares"],
    )


# -- canonical will serialization -------------------------------------------


def component_to_dict(group: Group, comp: WillComponent) -> dict:
    out: dict = {
        "id": comp.id,
        "type": comp.ctype,
        "access": access_to_dict(comp.access),
        "output": output_to_dict(comp.output),
        "state": comp.state,
        "window_blocks": comp.window_blocks,
    }
    if comp.requirement is not None:
        out["requirement"] = requirement_to_dict(group, comp.requirement)
    if comp.claim_window is not None:
        out["claim_window"] = list(comp.claim_window)
    return out


def component_from_dict(group: Group, data: dict) -> WillComponent:
    window = data.get("claim_window")
    return WillComponent(
        id=data["id"],
        ctype=data["type"],
        access=access_from_dict(data["access"]),
        output=output_from_dict(data["output"]),
        requirement=(
            requirement_from_dict(group, data["requirement"])
            if "requirement" in data
            else None
        ),
        state=data["state"],
        claim_window=tuple(window) if window is not None else None,
        window_blocks=data["window_blocks"],
    )


def will_to_dict(group: Group, will: Will) -> dict:
    return {
        "did": will.did,
        "creator": to_hex(will.creator),
        "expiration": will.expiration,
        "components": [component_to_dict(group, c) for c in will.components],
        "beneficiaries": [to_hex(b) for b in will.beneficiaries],
        "status": will.status,
        "claim_window_blocks": will.claim_window_blocks,
    }


def will_from_dict(group: Group, data: dict) -> Will:
    return Will(
        did=data["did"],
        creator=from_hex(data["creator"]),
        expiration=data["expiration"],
        components=tuple(component_from_dict(group, c) for c in data["components"]),
        beneficiaries=tuple(from_hex(b) for b in data["beneficiaries"]),
        status=data["status"],
        claim_window_blocks=data["claim_window_blocks"],
    )


def token_to_dict(token: SoulboundToken) -> dict:
    return {"token_id": to_hex(token.token_id), "owner": to_hex(token.owner), "will": token.will}


def token_from_dict(data: dict) -> SoulboundToken:
    return SoulboundToken(
        token_id=from_hex(data["token_id"]),
        owner=from_hex(data["owner"]),
        will=data["will"],
    )
