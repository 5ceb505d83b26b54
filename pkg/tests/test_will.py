"""Will model: component state machine, execution order, shares, identity."""

import ast
import random
from dataclasses import FrozenInstanceError
from pathlib import Path

import pytest

import willchain
from willchain.claims import (
    AccessControl,
    ClaimRequirement,
    CommitmentExpectation,
    CryptoContext,
    DirectExpectation,
    DirectSig,
    SignerSetExpectation,
    StatementExpectation,
    claim_message,
    derive_address,
)
from willchain.crypto import keypair_from_seed, pedersen_commit, schnorr_sign
from willchain.errors import (
    ClaimRejected,
    NothingToClaimError,
    PrematureClaimError,
    PrematureExecutionError,
    UnauthorizedError,
    ValidationError,
)
from willchain.will import (
    CheckinOccurred,
    ClaimSubmitted,
    ClaimWindowElapsed,
    ContractCall,
    Emit,
    Expire,
    IbcSend,
    SoulboundToken,
    Transfer,
    TransferEmit,
    Will,
    component_from_dict,
    component_to_dict,
    create_will,
    execute_will,
    freeze_ledger_at_expiration,
    make_component,
    mint_did,
    mint_rft,
    parse_did,
    rft_claim,
    step_component,
    will_from_dict,
    will_to_dict,
)


@pytest.fixture(scope="module")
def ctx(prod, prod_params):
    return CryptoContext(group=prod, pedersen=prod_params, chain_id="will-1")


@pytest.fixture(scope="module")
def creator(prod):
    return keypair_from_seed(prod, b"creator")


@pytest.fixture(scope="module")
def heir(prod):
    return keypair_from_seed(prod, b"heir")


def transfer_component(to: bytes) -> "make_component":
    return make_component(
        "transfer+emit",
        TransferEmit(to=to, amount=987654321, denom="uwill", message="transferred_the_tokens"),
    )


def claim_component(ctx, heir_kp):
    addr = derive_address(ctx.group, heir_kp.pk)
    req = ClaimRequirement(
        "direct",
        DirectExpectation(addr),
        AccessControl("private", (addr,)),
    )
    return make_component(
        "direct+transfer",
        Transfer(to=addr, amount=1000, denom="uwill"),
        access=AccessControl("private", (addr,)),
        requirement=req,
    )


def minimal_will(ctx, creator, heir, components=None, expiration=100):
    comps = (
        components
        if components is not None
        else [transfer_component(derive_address(ctx.group, heir.pk))]
    )
    return create_will(
        ctx.group,
        creator_pk=creator.pk,
        expiration=expiration,
        components=comps,
        beneficiaries=[derive_address(ctx.group, heir.pk)],
        nonce=b"nonce-1",
        current_height=0,
    )


# -- identifiers ---------------------------------------------------------------


def test_did_format_and_determinism(prod, creator):
    did1, token1 = mint_did(prod, creator.pk, b"n1")
    did2, token2 = mint_did(prod, creator.pk, b"n1")
    did3, _ = mint_did(prod, creator.pk, b"n2")
    assert did1.startswith("did:will:")
    assert len(parse_did(did1)) == 32
    assert (did1, token1) == (did2, token2)
    assert did1 != did3  # second will of the same creator gets a fresh id
    with pytest.raises(ValidationError):
        parse_did("did:other:abc")


def test_token_minted_to_creator_and_matches_did(ctx, creator, heir):
    will, token = minimal_will(ctx, creator, heir)
    assert token.owner == will.creator
    assert token.will == will.did
    assert token.token_id == parse_did(will.did)


def test_soulbound_token_is_immutable():
    token = SoulboundToken(token_id=b"\x01" * 32, owner=b"\x02" * 20, will="did:will:" + "0" * 64)
    with pytest.raises(FrozenInstanceError):
        token.owner = b"\x03" * 20


def test_no_exported_operation_assigns_token_owner():
    """API-surface scan: no attribute assignment to `.owner` anywhere in
    the package source."""
    pkg_root = Path(willchain.__file__).parent
    for path in pkg_root.rglob("*.py"):
        tree = ast.parse(path.read_text())
        for node in ast.walk(tree):
            targets = []
            if isinstance(node, ast.Assign):
                targets = node.targets
            elif isinstance(node, (ast.AugAssign, ast.AnnAssign)):
                targets = [node.target]
            for target in targets:
                assert not (
                    isinstance(target, ast.Attribute) and target.attr == "owner"
                ), f"{path}:{node.lineno} assigns .owner"


# -- creation ------------------------------------------------------------------


def test_minimal_will(ctx, creator, heir):
    will, token = minimal_will(ctx, creator, heir)
    assert len(will.components) == 1
    assert will.status == "active"
    assert will.components[0].state == "inactive"
    assert will.components[0].id == f"{will.did}/0"


def test_zero_components_rejected(ctx, creator, heir):
    with pytest.raises(ValidationError, match="at least one component"):
        minimal_will(ctx, creator, heir, components=[])


def test_past_expiration_rejected(ctx, creator, heir):
    with pytest.raises(PrematureExecutionError):
        create_will(
            ctx.group,
            creator_pk=creator.pk,
            expiration=0,
            components=[transfer_component(b"\x01" * 20)],
            beneficiaries=[],
            nonce=b"n",
            current_height=5,
        )


def test_unapproved_contract_reference_rejected(ctx, creator, heir):
    comp = make_component(
        "contract-call", ContractCall(contract_address="0xnotapproved", payload="d")
    )
    with pytest.raises(Exception, match="not approved"):
        minimal_will(ctx, creator, heir, components=[comp])


def test_five_paper_components_construct(ctx, creator, heir, prod):
    """The five composite component types with their literal payloads."""
    group = ctx.group
    a1, a2, a3, a4 = (
        derive_address(group, keypair_from_seed(group, f"address{i}".encode()).pk)
        for i in (1, 2, 3, 4)
    )
    signers = tuple(
        keypair_from_seed(group, f"address{i}".encode()).pk for i in (1, 2, 3)
    )
    comps = [
        make_component(
            "transfer+emit",
            TransferEmit(to=a3, amount=987654321, denom="uwill", message="transferred_the_tokens"),
            access=AccessControl("private", (a3,)),
        ),
        make_component(
            "schnorr-claim+transfer",
            Transfer(to=a4, amount=1000000000, denom="uwill"),
            access=AccessControl("private", (a1, a2, a3)),
            requirement=ClaimRequirement(
                "schnorr-claim",
                SignerSetExpectation(signers),
                AccessControl("private", (a1, a2, a3)),
            ),
        ),
        make_component(
            "pedersen-claim+ibc-send",
            IbcSend(channel="channel-0", address="uwill", amount=123, denom="uwill"),
            access=AccessControl("private", (a1,)),
            requirement=ClaimRequirement(
                "pedersen-claim",
                CommitmentExpectation(pedersen_commit(ctx.pedersen, 1, 2)),
                AccessControl("private", (a1,)),
            ),
        ),
        make_component(
            "gnark-claim+contract-call",
            ContractCall(contract_address="0xcontract_address", payload="data"),
            access=AccessControl("private", (a1,)),
            requirement=ClaimRequirement(
                "gnark-claim",
                StatementExpectation(keypair_from_seed(group, b"address1").pk),
                AccessControl("private", (a1,)),
            ),
        ),
        make_component("ibc-msg+emit", Emit(message="sent ibc message")),
    ]
    will, _ = create_will(
        group,
        creator_pk=creator.pk,
        expiration=100,
        components=comps,
        beneficiaries=[a1, a2, a3, a4],
        nonce=b"five",
        current_height=0,
        approved_contracts=frozenset({"0xcontract_address"}),
    )
    assert [c.ctype for c in will.components] == [
        "transfer+emit",
        "schnorr-claim+transfer",
        "pedersen-claim+ibc-send",
        "gnark-claim+contract-call",
        "ibc-msg+emit",
    ]
    assert [c.is_claim for c in will.components] == [False, True, True, True, False]


def test_component_type_validation():
    with pytest.raises(ValidationError):
        make_component("teleport+transfer", Emit(message="x"))
    with pytest.raises(ValidationError, match="needs a requirement"):
        make_component("direct+transfer", Transfer(to=b"\x01" * 20, amount=1, denom="u"))
    with pytest.raises(ValidationError, match="takes no requirement"):
        make_component(
            "transfer",
            Transfer(to=b"\x01" * 20, amount=1, denom="u"),
            requirement=ClaimRequirement(
                "direct", DirectExpectation(b"\x01" * 20), AccessControl("public")
            ),
        )
    with pytest.raises(ValidationError, match="nonnegative"):
        make_component("transfer", Transfer(to=b"\x01" * 20, amount=-5, denom="u"))


# -- the transition table -------------------------------------------------------


def _valid_claim_event(ctx, comp, heir_kp, expired, height=10):
    addr = derive_address(ctx.group, heir_kp.pk)
    did = comp.id.rsplit("/", 1)[0]
    msg = claim_message(did, comp.id, addr, ctx.chain_id)
    return ClaimSubmitted(
        evidence=DirectSig(sig=schnorr_sign(ctx.group, heir_kp, msg), pk=heir_kp.pk),
        claimant=addr,
        height=height,
        will_expired=expired,
    )


def _invalid_claim_event(ctx, comp, heir_kp, expired):
    event = _valid_claim_event(ctx, comp, heir_kp, expired)
    bad = DirectSig(
        sig=schnorr_sign(ctx.group, heir_kp, b"a different message"), pk=heir_kp.pk
    )
    return ClaimSubmitted(
        evidence=bad, claimant=event.claimant, height=event.height, will_expired=expired
    )


def test_transition_table_exhaustive(ctx, creator, heir):
    """Every (state, event) pair of both component families behaves per
    the table; anything else is unreachable."""
    from dataclasses import replace

    will, _ = minimal_will(
        ctx, creator, heir, components=[transfer_component(b"\x09" * 20), claim_component(ctx, heir)]
    )
    exec_base, claim_base = will.components

    # execution component
    stepped, outputs = step_component(ctx, exec_base, Expire(height=100))
    assert stepped.state == "executed"
    assert [type(o).__name__ for o in outputs] == ["Transfer", "Emit"]
    again, nothing = step_component(ctx, stepped, Expire(height=100))
    assert again.state == "executed" and nothing == []
    with pytest.raises(ClaimRejected, match="not claimable"):
        step_component(ctx, exec_base, _valid_claim_event(ctx, exec_base, heir, False))
    for event in (ClaimWindowElapsed(height=5), CheckinOccurred(height=5)):
        unchanged, out = step_component(ctx, exec_base, event)
        assert unchanged == exec_base and out == []

    # claim component: inactive
    unchanged, out = step_component(ctx, claim_base, Expire(height=100))
    assert unchanged == claim_base and out == []
    opened, out = step_component(ctx, claim_base, _valid_claim_event(ctx, claim_base, heir, False))
    assert opened.state == "active" and opened.claim_window == (10, claim_base.window_blocks)
    assert out == []
    executed, out = step_component(ctx, claim_base, _valid_claim_event(ctx, claim_base, heir, True))
    assert executed.state == "executed" and len(out) == 1
    with pytest.raises(ClaimRejected, match="failed verification"):
        step_component(ctx, claim_base, _invalid_claim_event(ctx, claim_base, heir, False))
    stranger = keypair_from_seed(ctx.group, b"stranger")
    stranger_event = _valid_claim_event(ctx, claim_base, stranger, False)
    with pytest.raises(UnauthorizedError):
        step_component(ctx, claim_base, stranger_event)

    # claim component: active (window open)
    cancelled, out = step_component(ctx, opened, CheckinOccurred(height=12))
    assert cancelled.state == "cancelled" and cancelled.claim_window is None and out == []
    elapsed, out = step_component(ctx, opened, ClaimWindowElapsed(height=110))
    assert elapsed.state == "executed" and len(out) == 1
    with pytest.raises(ClaimRejected, match="pending"):
        step_component(ctx, opened, _valid_claim_event(ctx, opened, heir, False))
    unchanged, out = step_component(ctx, opened, Expire(height=100))
    assert unchanged == opened and out == []

    # claim component: cancelled -> active again via new claim
    reopened, out = step_component(ctx, cancelled, _valid_claim_event(ctx, cancelled, heir, False))
    assert reopened.state == "active" and out == []

    # executed is terminal
    for event in (
        Expire(height=200),
        ClaimWindowElapsed(height=200),
        CheckinOccurred(height=200),
    ):
        terminal, out = step_component(ctx, executed, event)
        assert terminal == executed and out == []
    with pytest.raises(ClaimRejected, match="already executed"):
        step_component(ctx, executed, _valid_claim_event(ctx, executed, heir, True))


# -- execution ------------------------------------------------------------------


def test_execute_will_outputs_in_component_order(ctx, creator, heir):
    rng = random.Random(3)
    addr = derive_address(ctx.group, heir.pk)
    for trial in range(10):
        amounts = [rng.randrange(1, 10_000) for _ in range(5)]
        comps = [
            make_component("transfer", Transfer(to=addr, amount=a, denom="uwill"))
            for a in amounts
        ]
        rng.shuffle(comps)
        expected = [c.output.amount for c in comps]
        will, _ = create_will(
            ctx.group,
            creator_pk=creator.pk,
            expiration=50,
            components=comps,
            beneficiaries=[addr],
            nonce=f"t{trial}".encode(),
            current_height=0,
        )
        executed, outputs = execute_will(ctx, will, 50)
        assert [out.amount for _cid, out in outputs] == expected
        assert executed.status == "executed"


def test_execute_will_is_idempotent(ctx, creator, heir):
    will, _ = minimal_will(ctx, creator, heir)
    once, outputs1 = execute_will(ctx, will, 100)
    twice, outputs2 = execute_will(ctx, once, 100)
    assert once == twice
    assert len(outputs1) == 2 and outputs2 == []


def test_execute_before_expiration_rejected(ctx, creator, heir):
    will, _ = minimal_will(ctx, creator, heir)
    with pytest.raises(PrematureExecutionError):
        execute_will(ctx, will, 99)


def test_claim_only_will_stays_expired(ctx, creator, heir):
    will, _ = minimal_will(ctx, creator, heir, components=[claim_component(ctx, heir)])
    executed, outputs = execute_will(ctx, will, 100)
    assert outputs == []
    assert executed.status == "expired"


# -- fractional shares ------------------------------------------------------------


def test_single_heir_full_share(ctx, creator, heir):
    will, _ = minimal_will(ctx, creator, heir)
    ledger = mint_rft(will, {b"\x01" * 20: 100}, escrow_amount=5000)
    assert ledger.total == 100
    will_expired = execute_will(ctx, will, 100)[0]
    ledger = freeze_ledger_at_expiration(ledger)
    updated, payout = rft_claim(ledger, b"\x01" * 20, will_expired)
    assert payout == 5000
    assert updated.balance_of(b"\x01" * 20) == 0
    assert updated.burned_shares == 100


def test_sixty_forty_split(ctx, creator, heir):
    will, _ = minimal_will(ctx, creator, heir)
    a, b = b"\x0a" * 20, b"\x0b" * 20
    ledger = freeze_ledger_at_expiration(mint_rft(will, {a: 60, b: 40}, escrow_amount=1000))
    expired = execute_will(ctx, will, 100)[0]
    ledger, pa = rft_claim(ledger, a, expired)
    ledger, pb = rft_claim(ledger, b, expired)
    assert (pa, pb) == (600, 400)
    assert ledger.escrow == 0


def test_equal_thirds_leave_dust(ctx, creator, heir):
    """Floor division: escrow 100 over {1,1,1} pays 33 each, dust 1 stays."""
    will, _ = minimal_will(ctx, creator, heir)
    holders = [bytes([i]) * 20 for i in (1, 2, 3)]
    ledger = freeze_ledger_at_expiration(
        mint_rft(will, {h: 1 for h in holders}, escrow_amount=100)
    )
    expired = execute_will(ctx, will, 100)[0]
    payouts = []
    for holder in holders:
        ledger, payout = rft_claim(ledger, holder, expired)
        payouts.append(payout)
    assert payouts == [33, 33, 33]
    assert ledger.escrow == 1  # dust retained permanently
    assert sum(payouts) + ledger.escrow == 100


def test_share_conservation_randomized(ctx, creator, heir):
    rng = random.Random(17)
    will, _ = minimal_will(ctx, creator, heir)
    expired = execute_will(ctx, will, 100)[0]
    for _ in range(50):
        n = rng.randrange(1, 9)
        holders = {bytes([i + 1]) * 20: rng.randrange(1, 1000) for i in range(n)}
        escrow = rng.randrange(0, 1_000_000)
        ledger = freeze_ledger_at_expiration(mint_rft(will, holders, escrow))
        order = list(holders)
        rng.shuffle(order)
        paid = 0
        for holder in order:
            ledger, payout = rft_claim(ledger, holder, expired)
            paid += payout
        assert paid + ledger.escrow == escrow
        assert ledger.escrow < max(len(holders), 1) or escrow == 0
        assert ledger.burned_shares == ledger.total


def test_rft_claim_guards(ctx, creator, heir):
    will, _ = minimal_will(ctx, creator, heir)
    ledger = mint_rft(will, {b"\x01" * 20: 10}, escrow_amount=100)
    with pytest.raises(PrematureClaimError):
        rft_claim(ledger, b"\x01" * 20, will)  # still active
    expired = execute_will(ctx, will, 100)[0]
    with pytest.raises(NothingToClaimError):
        rft_claim(ledger, b"\x02" * 20, expired)
    with pytest.raises(ValidationError):
        mint_rft(will, {}, 10)
    with pytest.raises(ValidationError):
        mint_rft(will, {b"\x01" * 20: 0}, 10)


# -- serialization ----------------------------------------------------------------


def test_will_serialization_bit_exact_round_trip(ctx, creator, heir):
    from willchain.codec import canonical_json

    will, _ = minimal_will(
        ctx, creator, heir, components=[transfer_component(b"\x07" * 20), claim_component(ctx, heir)]
    )
    data = will_to_dict(ctx.group, will)
    rebuilt = will_from_dict(ctx.group, data)
    assert rebuilt == will
    assert canonical_json(will_to_dict(ctx.group, rebuilt)) == canonical_json(data)


def test_component_round_trip_preserves_window(ctx, creator, heir):
    comp = claim_component(ctx, heir)
    from dataclasses import replace

    comp = replace(comp, id="did:will:" + "0" * 64 + "/0", state="active", claim_window=(5, 20))
    data = component_to_dict(ctx.group, comp)
    assert component_from_dict(ctx.group, data) == comp
