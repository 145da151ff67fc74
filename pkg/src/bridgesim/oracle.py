"""Independent cross-chain causality auditing.

The oracle reads only ground-truth chain stores (canonical lists plus the
orphaned-branch side store). It never consults the bridge, the signatories,
or any adapter's live state, so deleting every protocol actor after a run
does not change its verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

from .adapter import TAG_PROCESS, decode_process_transfer, event_attr
from .chain import Chain, EventLog

VIOLATION_REASONS = ("noSourceRequest", "sourceRequestOrphaned",
                     "payloadMismatch")


@dataclass(frozen=True)
class CausalityViolation:
    dest_block_number: int
    dest_tx_hash: bytes
    transfer_id: int
    reason: str


def _request_matches(ev: EventLog, m) -> bool:
    return (int.from_bytes(event_attr(ev, "transferId"), "big")
            == m.source_transfer_id
            and event_attr(ev, "recipientContract") == m.recipient_contract
            and event_attr(ev, "encodedCall") == m.encoded_function_call
            and int.from_bytes(event_attr(ev, "gas"), "big") == m.gas)


def causality_oracle(source_chain: Chain, dest_chain: Chain,
                     dest_adapter: bytes,
                     source_adapter: bytes) -> list[CausalityViolation]:
    """Check every destination Processed event against source ground truth."""
    violations = []
    canonical_hashes = {b.block_hash for b in source_chain.blocks}
    for block in dest_chain.blocks:
        for ev in block.events:
            if ev.emitter != dest_adapter or ev.name != "Processed":
                continue
            m = _decode_processed_message(block, ev)
            if m is None:
                continue
            reason = _classify(source_chain, source_adapter,
                               canonical_hashes, m)
            if reason is not None:
                violations.append(CausalityViolation(
                    dest_block_number=block.number,
                    dest_tx_hash=ev.tx_hash,
                    transfer_id=m.source_transfer_id,
                    reason=reason,
                ))
    return violations


def _decode_processed_message(block, ev: EventLog):
    for tx in block.transactions:
        if tx.tx_hash == ev.tx_hash and tx.payload[:4] == TAG_PROCESS:
            m, _ = decode_process_transfer(tx.payload)
            return m
    return None


def _classify(source_chain: Chain, source_adapter: bytes,
              canonical_hashes: set, m) -> str | None:
    # canonical source request with fully matching payload?
    found = source_chain.get_transaction(m.source_transaction_hash)
    if found is not None:
        _, number = found
        block = source_chain.blocks[number]
        for ev in block.events:
            if (ev.tx_hash == m.source_transaction_hash
                    and ev.name == "BridgeTransferRequested"
                    and ev.emitter == source_adapter):
                if _request_matches(ev, m):
                    return None
                return "payloadMismatch"
        return "noSourceRequest"
    # not canonical: did it ever exist on an orphaned branch?
    for block in source_chain.all_blocks.values():
        if block.block_hash in canonical_hashes:
            continue
        for ev in block.events:
            if (ev.tx_hash == m.source_transaction_hash
                    and ev.name == "BridgeTransferRequested"
                    and ev.emitter == source_adapter
                    and _request_matches(ev, m)):
                return "sourceRequestOrphaned"
    return "noSourceRequest"


@dataclass(frozen=True)
class ConfigAlarm:
    network_id: str
    block_number: int
    field: str


def config_change_monitor(chains: list[Chain],
                          adapters: dict[str, bytes],
                          expected: set[tuple[str, str]]) -> list[ConfigAlarm]:
    """Flag every ConfigChanged event not declared expected.

    ``expected`` holds (network_id, field) pairs the scenario allow-lists.
    """
    alarms = []
    for chain in chains:
        adapter = adapters[chain.config.network_id]
        for block in chain.blocks:
            for ev in block.events:
                if ev.emitter != adapter or ev.name != "ConfigChanged":
                    continue
                fieldname = event_attr(ev, "field").decode()
                if (chain.config.network_id, fieldname) in expected:
                    continue
                alarms.append(ConfigAlarm(chain.config.network_id,
                                          block.number, fieldname))
    return alarms
