"""Exception hierarchy for the willchain simulation."""


class WillchainError(Exception):
    """Base class for all protocol errors."""


class EncodingError(WillchainError):
    """Malformed byte encoding of a scalar, element, or wire object."""


class AggregationError(WillchainError):
    """Signature aggregation rejected (invalid member or missing PoP)."""


class DecryptionError(WillchainError):
    """Authentication tag mismatch or undecryptable ciphertext."""


class EvidenceTypeError(WillchainError):
    """Claim evidence variant does not match the requirement."""


class UnsupportedClaimError(WillchainError):
    """Claim type outside the closed tag set."""


class ValidationError(WillchainError):
    """Structurally invalid input (empty components, bad shares, ...)."""


class ApprovalMissingError(WillchainError):
    """Will references a contract the creator has not approved."""


class ClaimRejected(WillchainError):
    """Claim evidence invalid or component not claimable; state unchanged."""


class UnauthorizedError(WillchainError):
    """Caller lacks permission (access control, non-creator checkin, ...)."""


class PrematureExecutionError(WillchainError):
    """execute_will called before the will's expiration height."""


class PrematureClaimError(WillchainError):
    """Share redemption attempted before will expiration."""


class NothingToClaimError(WillchainError):
    """Share redemption by a holder with zero balance."""


class TooLateError(WillchainError):
    """Checkin on an already-expired will."""


class AuthError(WillchainError):
    """Transaction signature failed verification."""


class InsufficientFundsError(WillchainError):
    """Balance too low for fee, transfer, escrow, or penalty."""


class NotEncapsulableError(WillchainError):
    """Component output is not an interchain message."""


class ChannelNotFoundError(WillchainError):
    """Packet or output references an unknown channel."""


class ReplayRejectedError(WillchainError):
    """Packet with an already-processed (path, sequence, phase)."""


class ChunkMissingError(WillchainError):
    """ChunkMap entry points at a cell that does not exist."""


class CorruptionError(WillchainError):
    """Stored chunk bytes do not match the recorded hash."""


class PrematureRevealError(WillchainError):
    """Key reveal requested before the will expired and executed."""


class NotFoundError(WillchainError):
    """Inspect query for an unknown identifier."""


class ScenarioAssertionError(WillchainError):
    """A scenario assertion step did not hold."""
