"""Signatory actor: independent verification and detached signing.

An honest signatory trusts nothing in the request except as a pointer: it
refetches the block and transaction from its own chain view, reconstructs
the transfer message from the on-chain event, recomputes the digest, and
only then signs. Byzantine behavior modes cover the fault-injection
scenarios.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .adapter import event_attr, message_from_request_event
from .chain import ChainView
from .codec import SIGNATURE_LEN, Keypair, TransferMessage, compute_transfer_hash, sign

BEHAVIOR_MODES = ("honest", "refuse", "wrongSignature", "colluding")


@dataclass(frozen=True)
class SigningRequest:
    source_block_number: int
    source_block_hash: bytes
    source_transaction_hash: bytes
    transfer_data_hash: bytes
    transfer: TransferMessage

    def to_wire(self) -> str:
        m = self.transfer
        doc = {
            "sourceBlockNumber": self.source_block_number,
            "sourceBlockHash": self.source_block_hash.hex(),
            "sourceTransactionHash": self.source_transaction_hash.hex(),
            "transferDataHash": self.transfer_data_hash.hex(),
            "transfer": {
                "sourceTransactionHash": m.source_transaction_hash.hex(),
                "sourceAdapterAddress": m.source_adapter_address.hex(),
                "recipientContract": m.recipient_contract.hex(),
                "encodedFunctionCall": m.encoded_function_call.hex(),
                "gas": m.gas,
                "sourceTransferId": m.source_transfer_id,
                "sourceNetworkId": m.source_network_id,
            },
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_wire(cls, text: str) -> "SigningRequest":
        doc = json.loads(text)
        t = doc["transfer"]
        return cls(
            source_block_number=doc["sourceBlockNumber"],
            source_block_hash=bytes.fromhex(doc["sourceBlockHash"]),
            source_transaction_hash=bytes.fromhex(doc["sourceTransactionHash"]),
            transfer_data_hash=bytes.fromhex(doc["transferDataHash"]),
            transfer=TransferMessage(
                source_transaction_hash=bytes.fromhex(t["sourceTransactionHash"]),
                source_adapter_address=bytes.fromhex(t["sourceAdapterAddress"]),
                recipient_contract=bytes.fromhex(t["recipientContract"]),
                encoded_function_call=bytes.fromhex(t["encodedFunctionCall"]),
                gas=t["gas"],
                source_transfer_id=t["sourceTransferId"],
                source_network_id=t["sourceNetworkId"],
            ),
        )


@dataclass
class SignResponse:
    kind: str  # "signed" | "refused"
    public_key: bytes = b""
    signature: bytes = b""
    reason: str = ""

    @staticmethod
    def signed(public_key: bytes, signature: bytes) -> "SignResponse":
        return SignResponse("signed", public_key=public_key, signature=signature)

    @staticmethod
    def refused(reason: str) -> "SignResponse":
        return SignResponse("refused", reason=reason)


class RateLimiter:
    """Fixed budget of admitted requests per requester per window."""

    def __init__(self, budget: int, window_ticks: int):
        self.budget = budget
        self.window_ticks = max(1, window_ticks)
        self._counts: dict[tuple[str, int], int] = {}

    def admit(self, requester: str, tick: int) -> bool:
        window = tick // self.window_ticks
        key = (requester, window)
        count = self._counts.get(key, 0)
        if count >= self.budget:
            return False
        self._counts[key] = count + 1
        # drop stale windows so the table stays bounded
        for k in [k for k in self._counts if k[1] < window]:
            del self._counts[k]
        return True


class Signatory:
    """One signatory identity with a behavior mode and its own chain view."""

    def __init__(self, signatory_id: str, keypair: Keypair,
                 chain_view: ChainView, dest_hash_alg: str,
                 source_adapter: bytes, mode: str = "honest",
                 min_confirmations: int = 0,
                 rate_budget: int = 1000, rate_window_ticks: int = 100):
        if mode not in BEHAVIOR_MODES:
            raise ValueError(f"unknown behavior mode {mode!r}")
        self.signatory_id = signatory_id
        self.keypair = keypair
        self.chain_view = chain_view
        self.dest_hash_alg = dest_hash_alg
        self.source_adapter = source_adapter
        self.mode = mode
        self.min_confirmations = min_confirmations
        self.rate_limiter = RateLimiter(rate_budget, rate_window_ticks)
        self.handled = 0  # admitted requests, for rate-limit assertions

    def handle_sign_request(self, req: SigningRequest, tick: int,
                            requester: str = "bridge") -> SignResponse | None:
        """None models silence: a dropped or refused-to-answer request."""
        if not self.rate_limiter.admit(requester, tick):
            return None
        self.handled += 1
        if self.mode == "refuse":
            return None
        if self.mode == "colluding":
            return SignResponse.signed(
                self.keypair.public_key,
                sign(self.keypair.private_key, req.transfer_data_hash))
        if self.mode == "wrongSignature":
            return SignResponse.signed(
                self.keypair.public_key,
                bytes(SIGNATURE_LEN))  # well-formed length, never verifies
        return self._honest(req)

    def _honest(self, req: SigningRequest) -> SignResponse:
        view = self.chain_view
        block = view.get_block(req.source_block_number)
        if block is None or block.block_hash != req.source_block_hash:
            return SignResponse.refused("BlockHashMismatch")
        conf = view.confirmations(req.source_transaction_hash)
        if conf is None:
            return SignResponse.refused("TxNotFound")
        if conf < self.min_confirmations:
            return SignResponse.refused("InsufficientFinality")
        found = view.get_transaction(req.source_transaction_hash)
        if found is None or found[1] != req.source_block_number:
            return SignResponse.refused("TxNotFound")
        event = self._locate_request_event(block, req)
        if event is None:
            return SignResponse.refused("TxNotFound")
        rebuilt = message_from_request_event(
            event, req.source_transaction_hash, self.source_adapter,
            view.network_id)
        if rebuilt != req.transfer:
            return SignResponse.refused("DataHashMismatch")
        digest = compute_transfer_hash(rebuilt, self.dest_hash_alg)
        if digest != req.transfer_data_hash:
            return SignResponse.refused("DataHashMismatch")
        return SignResponse.signed(self.keypair.public_key,
                                   sign(self.keypair.private_key, digest))

    def _locate_request_event(self, block, req: SigningRequest):
        for ev in block.events:
            if (ev.tx_hash == req.source_transaction_hash
                    and ev.name == "BridgeTransferRequested"
                    and ev.emitter == self.source_adapter
                    and int.from_bytes(event_attr(ev, "transferId"), "big")
                    == req.transfer.source_transfer_id):
                return ev
        return None
