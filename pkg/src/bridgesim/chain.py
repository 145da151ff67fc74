"""Deterministic simulated blockchain with reorg injection.

One `Chain` owns a canonical list of blocks, a pending transaction pool, the
registered contract handlers and their state, and account balances. Every
block ever produced (including orphaned branches) is retained in a side store
that only the harness oracle reads; protocol actors see canonical data only.
"""

from __future__ import annotations

import json
import pickle
from dataclasses import dataclass, field, replace

from .codec import hash_bytes

ZERO32 = b"\x00" * 32


class ChainError(Exception):
    pass


class DuplicateTransaction(ChainError):
    pass


class UnknownRecipient(ChainError):
    pass


class InvalidReorg(ChainError):
    pass


class InvalidRange(ChainError):
    pass


class Revert(Exception):
    """Raised by contract dispatch to abort the call and roll back state."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class ChainConfig:
    network_id: str
    block_time_ticks: int = 1
    hash_alg: str = "keccak256"
    finality_depth: int = 6

    def __post_init__(self):
        if not self.network_id:
            raise ChainError("network_id must be non-empty")
        if self.block_time_ticks < 1:
            raise ChainError("block_time_ticks must be >= 1")
        if self.finality_depth < 0:
            raise ChainError("finality_depth must be >= 0")


@dataclass(frozen=True)
class Transaction:
    tx_hash: bytes
    sender: bytes
    recipient: bytes
    payload: bytes
    value: int
    seq: int


@dataclass(frozen=True)
class EventLog:
    emitter: bytes
    name: str
    attributes: tuple  # ordered (key, value-bytes) pairs
    tx_hash: bytes
    block_number: int


@dataclass(frozen=True)
class Receipt:
    tx_hash: bytes
    status: str  # "ok" | "reverted"
    reason: str = ""


@dataclass(frozen=True)
class Block:
    number: int
    block_hash: bytes
    parent_hash: bytes
    tick: int
    transactions: tuple
    events: tuple
    receipts: tuple
    salt: int = 0  # production counter; distinguishes competing branches


@dataclass(frozen=True)
class ReorgRecord:
    depth: int
    old_head: int
    new_head: int
    dropped: tuple
    replayed: tuple
    excluded: tuple  # dependents excluded by the in-order rule


@dataclass(frozen=True)
class ViewCorruption:
    """A deterministic lie applied by a read-only chain view."""

    kind: str = "none"  # none | substitute_block_hash | fabricate_transfer
    block_number: int = 0
    fake_hash: bytes = ZERO32
    fake_transaction: Transaction | None = None
    fake_event: EventLog | None = None


class DispatchContext:
    """Handed to contract dispatch; mediates transfers and nested calls."""

    def __init__(self, chain: "Chain", block_number: int, tick: int, tx_hash: bytes):
        self.chain = chain
        self.block_number = block_number
        self.tick = tick
        self.tx_hash = tx_hash
        self.events: list[tuple[bytes, str, tuple]] = []

    def transfer(self, from_addr: bytes, to_addr: bytes, amount: int) -> None:
        if amount < 0:
            raise Revert("NegativeTransfer")
        bal = self.chain.balances
        bal[from_addr] = bal.get(from_addr, 0) - amount
        bal[to_addr] = bal.get(to_addr, 0) + amount

    def emit(self, emitter: bytes, name: str, attributes: list[tuple[str, bytes]]) -> None:
        self.events.append((emitter, name, tuple(attributes)))

    def call_contract(self, target: bytes, sender: bytes, value: int,
                      payload: bytes) -> tuple[str, str]:
        """Nested contract call; a revert rolls back only the callee."""
        handler = self.chain.contracts.get(target)
        if handler is None:
            return "failed", "UnknownRecipient"
        snapshot = pickle.dumps(handler.state)
        balances_before = dict(self.chain.balances)
        events_mark = len(self.events)
        try:
            if value:
                self.transfer(sender, target, value)
            handler.dispatch(self, sender, value, payload)
            return "ok", ""
        except Revert as r:
            handler.state = pickle.loads(snapshot)
            self.chain.balances = balances_before
            del self.events[events_mark:]
            return "failed", r.reason


class Chain:
    """Canonical chain plus pending pool, contract registry and side store."""

    SNAPSHOT_DEPTH = 128

    def __init__(self, config: ChainConfig):
        self.config = config
        self.contracts: dict[bytes, object] = {}
        self.balances: dict[bytes, int] = {}
        self.executed_seq: dict[bytes, int] = {}
        self.pending: list[Transaction] = []
        self._next_seq: dict[bytes, int] = {}
        self._produced = 0  # distinct-hash salt across branches
        self.tick = 0
        genesis = Block(
            number=0,
            block_hash=self._block_hash(0, ZERO32, 0, 0, (), ()),
            parent_hash=ZERO32,
            tick=0,
            transactions=(),
            events=(),
            receipts=(),
        )
        self.blocks: list[Block] = [genesis]
        self.all_blocks: dict[bytes, Block] = {genesis.block_hash: genesis}
        self.tx_index: dict[bytes, int] = {}  # canonical tx hash -> block number
        self._snapshots: dict[int, bytes] = {0: self._snapshot()}

    # -- construction helpers ------------------------------------------------

    def register_contract(self, handler) -> None:
        if handler.address in self.contracts:
            raise ChainError("contract address already registered")
        self.contracts[handler.address] = handler
        if len(self.blocks) == 1:
            self._snapshots[0] = self._snapshot()

    def make_transaction(self, sender: bytes, recipient: bytes, payload: bytes,
                         value: int = 0) -> Transaction:
        seq = self._next_seq.get(sender, 0)
        self._next_seq[sender] = seq + 1
        return Transaction(
            tx_hash=self._tx_hash(sender, recipient, payload, value, seq),
            sender=sender,
            recipient=recipient,
            payload=payload,
            value=value,
            seq=seq,
        )

    def _tx_hash(self, sender, recipient, payload, value, seq) -> bytes:
        preimage = (
            sender + recipient
            + len(payload).to_bytes(8, "big") + payload
            + value.to_bytes(32, "big") + seq.to_bytes(8, "big")
        )
        return hash_bytes(self.config.hash_alg, preimage)

    def _event_digest(self, emitter: bytes, name: str, attributes: tuple) -> bytes:
        parts = [emitter, name.encode()]
        for k, v in attributes:
            parts.append(k.encode())
            parts.append(len(v).to_bytes(4, "big"))
            parts.append(v)
        return hash_bytes(self.config.hash_alg, b"".join(parts))

    def _block_hash(self, number, parent_hash, tick, salt, txs, events) -> bytes:
        parts = [number.to_bytes(8, "big"), parent_hash,
                 tick.to_bytes(8, "big"), salt.to_bytes(8, "big")]
        parts.extend(t.tx_hash for t in txs)
        parts.extend(self._event_digest(e.emitter, e.name, e.attributes)
                     for e in events)
        return hash_bytes(self.config.hash_alg, b"".join(parts))

    # -- core operations -----------------------------------------------------

    def submit_transaction(self, tx: Transaction) -> bytes:
        expected = self._tx_hash(tx.sender, tx.recipient, tx.payload, tx.value, tx.seq)
        if tx.tx_hash != expected:
            raise ChainError("transaction hash does not match canonical encoding")
        if (tx.tx_hash in self.tx_index
                or any(p.tx_hash == tx.tx_hash for p in self.pending)):
            raise DuplicateTransaction(tx.tx_hash.hex())
        self.pending.append(tx)
        return tx.tx_hash

    def mine_block(self, tick: int | None = None) -> Block:
        if tick is not None:
            self.tick = tick
        txs = self.pending
        self.pending = []
        block = self._execute_block(txs, self.tick, enforce_seq=False)
        self._append(block)
        return block

    def _execute_block(self, txs: list[Transaction], tick: int,
                       enforce_seq: bool, number: int | None = None) -> Block:
        """Execute txs in order against current state; returns the sealed block.

        ``enforce_seq`` (replay path) silently drops txs whose per-sender
        sequence is gapped, so dependents of a dropped tx never land
        out of order.
        """
        if number is None:
            number = self.blocks[-1].number + 1
        parent = self.blocks[-1].block_hash
        included: list[Transaction] = []
        events: list[EventLog] = []
        receipts: list[Receipt] = []
        for tx in txs:
            expected_seq = self.executed_seq.get(tx.sender, 0)
            if enforce_seq and tx.seq != expected_seq:
                continue  # gapped: excluded by the in-order replay rule
            included.append(tx)
            self.executed_seq[tx.sender] = tx.seq + 1
            handler = self.contracts.get(tx.recipient)
            ctx = DispatchContext(self, number, tick, tx.tx_hash)
            if handler is None:
                # plain value transfer to an account
                ctx.transfer(tx.sender, tx.recipient, tx.value)
                receipts.append(Receipt(tx.tx_hash, "ok"))
                continue
            status, reason = ctx.call_contract(tx.recipient, tx.sender,
                                               tx.value, tx.payload)
            receipts.append(Receipt(tx.tx_hash, "ok" if status == "ok"
                                    else "reverted", reason))
            if status == "ok":
                for emitter, name, attrs in ctx.events:
                    events.append(EventLog(emitter, name, attrs,
                                           tx.tx_hash, number))
        self._produced += 1
        return Block(
            number=number,
            block_hash=self._block_hash(number, parent, tick, self._produced,
                                        tuple(included), tuple(events)),
            parent_hash=parent,
            tick=tick,
            transactions=tuple(included),
            events=tuple(events),
            receipts=tuple(receipts),
            salt=self._produced,
        )

    def _append(self, block: Block) -> None:
        self.blocks.append(block)
        self.all_blocks[block.block_hash] = block
        for tx in block.transactions:
            self.tx_index[tx.tx_hash] = block.number
        self._snapshots[block.number] = self._snapshot()
        stale = block.number - self.SNAPSHOT_DEPTH
        if stale > 0:
            self._snapshots.pop(stale, None)

    def inject_reorg(self, depth: int, drop_txs: set[bytes] = frozenset()) -> ReorgRecord:
        head = self.blocks[-1].number
        if depth < 1 or depth > head:
            raise InvalidReorg(f"depth {depth} with head {head}")
        fork = head - depth
        orphaned = self.blocks[fork + 1:]
        replay = [tx for b in orphaned for tx in b.transactions
                  if tx.tx_hash not in drop_txs]
        dropped = tuple(tx.tx_hash for b in orphaned for tx in b.transactions
                        if tx.tx_hash in drop_txs)
        # rewind
        self._restore(fork)
        del self.blocks[fork + 1:]
        for b in orphaned:
            for tx in b.transactions:
                self.tx_index.pop(tx.tx_hash, None)
            self._snapshots.pop(b.number, None)
        # new, strictly longer branch: replay everything into its first block
        new_first = self._execute_block(replay, self.tick, enforce_seq=True)
        self._append(new_first)
        for _ in range(depth):
            self._append(self._execute_block([], self.tick, enforce_seq=False))
        replayed = tuple(tx.tx_hash for tx in new_first.transactions)
        excluded = tuple(tx.tx_hash for tx in replay
                         if tx.tx_hash not in set(replayed))
        return ReorgRecord(depth=depth, old_head=head,
                           new_head=self.blocks[-1].number,
                           dropped=dropped, replayed=replayed,
                           excluded=excluded)

    # -- canonical read API (the view handed to protocol actors) -------------

    def head_number(self) -> int:
        return self.blocks[-1].number

    def head_hash(self) -> bytes:
        return self.blocks[-1].block_hash

    def get_block(self, number: int) -> Block | None:
        if 0 <= number <= self.blocks[-1].number:
            return self.blocks[number]
        return None

    def get_block_by_hash(self, block_hash: bytes) -> Block | None:
        block = self.all_blocks.get(block_hash)
        if block is None:
            return None
        canonical = self.get_block(block.number)
        return block if canonical is block else None

    def get_transaction(self, tx_hash: bytes) -> tuple[Transaction, int] | None:
        number = self.tx_index.get(tx_hash)
        if number is None:
            return None
        for tx in self.blocks[number].transactions:
            if tx.tx_hash == tx_hash:
                return tx, number
        return None

    def get_receipt(self, tx_hash: bytes) -> Receipt | None:
        number = self.tx_index.get(tx_hash)
        if number is None:
            return None
        for r in self.blocks[number].receipts:
            if r.tx_hash == tx_hash:
                return r
        return None

    def get_events(self, emitter: bytes | None, name: str | None,
                   from_block: int, to_block: int) -> list[EventLog]:
        if from_block > to_block:
            raise InvalidRange(f"{from_block} > {to_block}")
        out = []
        hi = min(to_block, self.blocks[-1].number)
        for number in range(max(from_block, 0), hi + 1):
            for ev in self.blocks[number].events:
                if emitter is not None and ev.emitter != emitter:
                    continue
                if name is not None and ev.name != name:
                    continue
                out.append(ev)
        return out

    def confirmations(self, tx_hash: bytes) -> int | None:
        number = self.tx_index.get(tx_hash)
        if number is None:
            return None
        return self.blocks[-1].number - number

    def faulty_view(self, corruption: ViewCorruption) -> "ChainView":
        return ChainView(self, corruption)

    # -- state snapshots -----------------------------------------------------

    def _snapshot(self) -> bytes:
        states = {addr: c.state for addr, c in self.contracts.items()}
        return pickle.dumps((states, self.balances, self.executed_seq))

    def _restore(self, number: int) -> None:
        blob = self._snapshots.get(number)
        if blob is None:
            # deeper than the ring buffer: rebuild from genesis by re-execution
            states, balances, seqs = pickle.loads(self._snapshots[0])
            self._apply_state(states, balances, seqs)
            for b in self.blocks[1:number + 1]:
                rebuilt = self._execute_block(list(b.transactions), b.tick,
                                              enforce_seq=False, number=b.number)
                assert rebuilt.transactions == b.transactions
            return
        states, balances, seqs = pickle.loads(blob)
        self._apply_state(states, balances, seqs)

    def _apply_state(self, states, balances, seqs) -> None:
        for addr, st in states.items():
            self.contracts[addr].state = st
        self.balances = balances
        self.executed_seq = seqs

    # -- canonical structured-text dump/restore ------------------------------

    def dump_state(self) -> str:
        """Canonical text snapshot (stable field order) for golden tests."""
        doc = {
            "network_id": self.config.network_id,
            "hash_alg": self.config.hash_alg,
            "head": self.blocks[-1].number,
            "blocks": [
                {
                    "number": b.number,
                    "hash": b.block_hash.hex(),
                    "parent": b.parent_hash.hex(),
                    "tick": b.tick,
                    "transactions": [t.tx_hash.hex() for t in b.transactions],
                    "events": [
                        {"emitter": e.emitter.hex(), "name": e.name,
                         "attributes": [[k, v.hex()] for k, v in e.attributes]}
                        for e in b.events
                    ],
                }
                for b in self.blocks
            ],
            "balances": {a.hex(): v for a, v in sorted(self.balances.items())},
            "contracts": {
                addr.hex(): _to_text(c.state)
                for addr, c in sorted(self.contracts.items())
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def restore_state(self, text: str) -> None:
        """Apply contract state and balances from a dump to this chain.

        The same contract handlers must already be registered; block history
        is not rewritten.
        """
        doc = json.loads(text)
        if doc["network_id"] != self.config.network_id:
            raise ChainError("snapshot belongs to a different network")
        self.balances = {bytes.fromhex(a): v for a, v in doc["balances"].items()}
        for addr_hex, state in doc["contracts"].items():
            self.contracts[bytes.fromhex(addr_hex)].state = _from_text(state)


def _to_text(value):
    if isinstance(value, (bytes, bytearray)):
        return "0x" + bytes(value).hex()
    if isinstance(value, dict):
        return {(  # byte keys become hex strings
            "0x" + k.hex() if isinstance(k, (bytes, bytearray)) else k
        ): _to_text(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_text(v) for v in value]
    return value


def _from_text(value):
    if isinstance(value, str) and value.startswith("0x"):
        return bytes.fromhex(value[2:])
    if isinstance(value, dict):
        return {(bytes.fromhex(k[2:]) if isinstance(k, str) and k.startswith("0x")
                 else k): _from_text(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_from_text(v) for v in value]
    return value


class ChainView:
    """Read-only chain view, optionally applying a deterministic corruption.

    Actors are handed views rather than the chain itself; a corrupted view
    models a compromised chain connection for one actor without touching
    the underlying ledger.
    """

    def __init__(self, chain: Chain, corruption: ViewCorruption | None = None):
        self._chain = chain
        self.corruption = corruption or ViewCorruption()
        self.network_id = chain.config.network_id
        self.hash_alg = chain.config.hash_alg

    def _fab_block(self) -> Block | None:
        c = self.corruption
        if c.kind != "fabricate_transfer":
            return None
        real = self._chain.get_block(c.block_number)
        parent = (real.parent_hash if real is not None else ZERO32)
        txs = (c.fake_transaction,) if c.fake_transaction else ()
        events = (c.fake_event,) if c.fake_event else ()
        receipts = tuple(Receipt(t.tx_hash, "ok") for t in txs)
        tick = real.tick if real is not None else 0
        return Block(number=c.block_number, block_hash=c.fake_hash,
                     parent_hash=parent, tick=tick, transactions=txs,
                     events=events, receipts=receipts)

    def head_number(self) -> int:
        return self._chain.head_number()

    def head_hash(self) -> bytes:
        c = self.corruption
        if (c.kind == "substitute_block_hash"
                and c.block_number == self._chain.head_number()):
            return c.fake_hash
        fab = self._fab_block()
        if fab is not None and fab.number == self._chain.head_number():
            return fab.block_hash
        return self._chain.head_hash()

    def get_block(self, number: int) -> Block | None:
        c = self.corruption
        fab = self._fab_block()
        if fab is not None and number == fab.number:
            return fab
        block = self._chain.get_block(number)
        if (block is not None and c.kind == "substitute_block_hash"
                and number == c.block_number):
            return replace(block, block_hash=c.fake_hash)
        return block

    def get_block_by_hash(self, block_hash: bytes) -> Block | None:
        fab = self._fab_block()
        if fab is not None and block_hash == fab.block_hash:
            return fab
        c = self.corruption
        if c.kind == "substitute_block_hash":
            if block_hash == c.fake_hash:
                return self.get_block(c.block_number)
            real = self._chain.get_block(c.block_number)
            if real is not None and block_hash == real.block_hash:
                return None
        return self._chain.get_block_by_hash(block_hash)

    def get_transaction(self, tx_hash: bytes) -> tuple[Transaction, int] | None:
        fab = self._fab_block()
        if fab is not None:
            for tx in fab.transactions:
                if tx.tx_hash == tx_hash:
                    return tx, fab.number
        return self._chain.get_transaction(tx_hash)

    def get_receipt(self, tx_hash: bytes) -> Receipt | None:
        fab = self._fab_block()
        if fab is not None:
            for r in fab.receipts:
                if r.tx_hash == tx_hash:
                    return r
        return self._chain.get_receipt(tx_hash)

    def get_events(self, emitter, name, from_block, to_block) -> list[EventLog]:
        out = self._chain.get_events(emitter, name, from_block, to_block)
        fab = self._fab_block()
        if fab is not None and from_block <= fab.number <= to_block:
            for ev in fab.events:
                if emitter is not None and ev.emitter != emitter:
                    continue
                if name is not None and ev.name != name:
                    continue
                out.append(ev)
            out.sort(key=lambda e: e.block_number)
        return out

    def confirmations(self, tx_hash: bytes) -> int | None:
        fab = self._fab_block()
        if fab is not None:
            for tx in fab.transactions:
                if tx.tx_hash == tx_hash:
                    return self._chain.head_number() - fab.number
        return self._chain.confirmations(tx_hash)
