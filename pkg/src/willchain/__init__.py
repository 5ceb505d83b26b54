"""Deterministic in-process simulation of a digital-will protocol.

Subpackages and modules:

* ``crypto``     group arithmetic, Pedersen commitments, Schnorr
                 signatures with aggregation, discrete-log knowledge
                 proofs, layered hybrid encryption
* ``claims``     claim evidence model and verification dispatch
* ``will``       will/component data model and transition rules
* ``chain``      single-chain runtime (accounts, blocks, penalties)
* ``interchain`` destination chains, entrypoint contracts, relayers
* ``vault``      chunked on-chain file storage and encrypted deeds
* ``scenario``   deterministic scenario runner
* ``cli``        the ``willchain`` command-line interface
"""

__version__ = "0.1.0"
