"""Simulated chain: ordering, reorgs, canonical reads, snapshots."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgesim import (
    Chain,
    ChainConfig,
    DuplicateTransaction,
    InvalidRange,
    InvalidReorg,
    StorageContract,
    blake2b256,
    encode_function_call,
)
from bridgesim.chain import ChainError
from bridgesim.codec import hash_bytes

ALICE = blake2b256(b"acct:alice")
BOB = blake2b256(b"acct:bob")
STORE = blake2b256(b"contract:store")


def make_chain(alg="keccak256", finality=6) -> Chain:
    chain = Chain(ChainConfig(network_id="testnet", hash_alg=alg,
                              finality_depth=finality))
    chain.register_contract(StorageContract(STORE))
    chain.balances[ALICE] = 1_000_000
    return chain


def set_value(chain: Chain, value: int, sender=ALICE):
    tx = chain.make_transaction(
        sender=sender, recipient=STORE,
        payload=encode_function_call("setValue(uint128)", [value]))
    chain.submit_transaction(tx)
    return tx


class TestBasics:
    def test_genesis(self):
        chain = make_chain()
        assert chain.head_number() == 0
        assert chain.get_block(0).parent_hash == bytes(32)

    def test_config_validation(self):
        with pytest.raises(ChainError):
            ChainConfig(network_id="")
        with pytest.raises(ChainError):
            ChainConfig(network_id="x", block_time_ticks=0)
        with pytest.raises(ChainError):
            ChainConfig(network_id="x", finality_depth=-1)

    def test_fifo_within_block(self):
        chain = make_chain()
        txs = [set_value(chain, v) for v in (1, 2, 3)]
        block = chain.mine_block(tick=1)
        assert [t.tx_hash for t in block.transactions] == \
            [t.tx_hash for t in txs]
        assert chain.contracts[STORE].state["value"] == 3  # last write wins

    def test_per_sender_sequence_numbers(self):
        chain = make_chain()
        a0, a1 = set_value(chain, 1), set_value(chain, 2)
        b0 = set_value(chain, 3, sender=BOB)
        assert (a0.seq, a1.seq, b0.seq) == (0, 1, 0)

    def test_duplicate_rejected(self):
        chain = make_chain()
        tx = set_value(chain, 1)
        with pytest.raises(DuplicateTransaction):
            chain.submit_transaction(tx)
        chain.mine_block(tick=1)
        with pytest.raises(DuplicateTransaction):
            chain.submit_transaction(tx)

    def test_tampered_hash_rejected(self):
        chain = make_chain()
        tx = set_value(chain, 1)
        chain.pending.clear()
        from dataclasses import replace
        with pytest.raises(ChainError):
            chain.submit_transaction(replace(tx, value=999))

    def test_reverted_tx_included_with_receipt(self):
        chain = make_chain()
        tx = chain.make_transaction(sender=ALICE, recipient=STORE,
                                    payload=b"\xde\xad\xbe\xef")
        chain.submit_transaction(tx)
        block = chain.mine_block(tick=1)
        assert tx in block.transactions
        receipt = chain.get_receipt(tx.tx_hash)
        assert receipt.status == "reverted"
        assert chain.contracts[STORE].state["value"] == 0

    def test_plain_value_transfer(self):
        chain = make_chain()
        tx = chain.make_transaction(sender=ALICE, recipient=BOB,
                                    payload=b"", value=250)
        chain.submit_transaction(tx)
        chain.mine_block(tick=1)
        assert chain.balances[BOB] == 250


class TestCanonicalReads:
    def test_confirmations(self):
        chain = make_chain()
        tx = set_value(chain, 1)
        chain.mine_block(tick=1)
        assert chain.confirmations(tx.tx_hash) == 0  # in the head block
        for t in range(2, 6):
            chain.mine_block(tick=t)
        assert chain.confirmations(tx.tx_hash) == 4
        assert chain.confirmations(b"\x00" * 32) is None

    def test_get_block_bounds(self):
        chain = make_chain()
        chain.mine_block(tick=1)
        assert chain.get_block(1).number == 1
        assert chain.get_block(2) is None
        assert chain.get_block(-1) is None

    def test_get_events_filters_and_range(self):
        chain = make_chain()
        set_value(chain, 1)
        chain.mine_block(tick=1)
        set_value(chain, 2)
        chain.mine_block(tick=2)
        events = chain.get_events(STORE, "ValueChanged", 0, chain.head_number())
        assert [e.block_number for e in events] == [1, 2]
        assert chain.get_events(STORE, "ValueChanged", 2, 2)[0].block_number == 2
        assert chain.get_events(STORE, "NoSuchEvent", 0, 2) == []
        assert chain.get_events(ALICE, None, 0, 2) == []
        with pytest.raises(InvalidRange):
            chain.get_events(STORE, None, 2, 1)

    def test_hash_chain_integrity(self):
        chain = make_chain()
        for t in range(1, 6):
            set_value(chain, t)
            chain.mine_block(tick=t)
        for number in range(1, 6):
            block = chain.get_block(number)
            parent = chain.get_block(number - 1)
            assert block.parent_hash == parent.block_hash
            assert block.block_hash == chain._block_hash(
                block.number, block.parent_hash, block.tick, block.salt,
                block.transactions, block.events)


class TestReorg:
    def test_replaces_suffix_with_strictly_longer_branch(self):
        chain = make_chain()
        for t in range(1, 6):
            chain.mine_block(tick=t)
        old = [chain.get_block(n).block_hash for n in range(6)]
        record = chain.inject_reorg(depth=3)
        assert record.old_head == 5
        assert record.new_head == 6  # depth d suffix replaced by d+1 blocks
        assert chain.head_number() == 6
        # blocks up to the fork point unchanged, everything after replaced
        for n in range(3):
            assert chain.get_block(n).block_hash == old[n]
        for n in range(3, 6):
            assert chain.get_block(n).block_hash != old[n]

    def test_orphaned_block_not_reachable_by_hash(self):
        chain = make_chain()
        for t in range(1, 4):
            chain.mine_block(tick=t)
        orphan_hash = chain.get_block(3).block_hash
        chain.inject_reorg(depth=2)
        assert chain.get_block_by_hash(orphan_hash) is None
        assert chain.get_block_by_hash(chain.head_hash()) is not None
        # the side store still remembers it for the harness oracle
        assert orphan_hash in chain.all_blocks

    def test_orphaned_txs_replayed(self):
        chain = make_chain()
        tx = set_value(chain, 42)
        chain.mine_block(tick=1)
        chain.mine_block(tick=2)
        record = chain.inject_reorg(depth=2)
        assert tx.tx_hash in record.replayed
        assert chain.get_transaction(tx.tx_hash) is not None
        assert chain.contracts[STORE].state["value"] == 42

    def test_dropped_tx_vanishes(self):
        chain = make_chain()
        tx = set_value(chain, 42)
        chain.mine_block(tick=1)
        chain.mine_block(tick=2)
        record = chain.inject_reorg(depth=2, drop_txs={tx.tx_hash})
        assert record.dropped == (tx.tx_hash,)
        assert chain.get_transaction(tx.tx_hash) is None
        assert chain.get_receipt(tx.tx_hash) is None
        assert chain.confirmations(tx.tx_hash) is None
        assert chain.contracts[STORE].state["value"] == 0

    def test_dependents_of_dropped_tx_excluded(self):
        # dropping seq 0 must also exclude the same sender's seq 1 replay
        chain = make_chain()
        first = set_value(chain, 1)
        second = set_value(chain, 2)
        chain.mine_block(tick=1)
        record = chain.inject_reorg(depth=1, drop_txs={first.tx_hash})
        assert record.excluded == (second.tx_hash,)
        assert chain.get_transaction(second.tx_hash) is None
        assert chain.contracts[STORE].state["value"] == 0

    def test_unrelated_sender_survives_drop(self):
        chain = make_chain()
        dropped = set_value(chain, 1)
        kept = set_value(chain, 7, sender=BOB)
        chain.mine_block(tick=1)
        chain.inject_reorg(depth=1, drop_txs={dropped.tx_hash})
        assert chain.get_transaction(kept.tx_hash) is not None
        assert chain.contracts[STORE].state["value"] == 7

    def test_depth_bounds(self):
        chain = make_chain()
        chain.mine_block(tick=1)
        with pytest.raises(InvalidReorg):
            chain.inject_reorg(depth=0)
        with pytest.raises(InvalidReorg):
            chain.inject_reorg(depth=2)

    def test_reorg_deeper_than_snapshot_ring(self):
        chain = make_chain()
        target = chain.SNAPSHOT_DEPTH + 10
        for t in range(1, target + 1):
            if t % 7 == 0:
                set_value(chain, t)
            chain.mine_block(tick=t)
        value_before_fork = chain.contracts[STORE].state["value"]
        depth = target - 2  # rewinds well past the retained snapshots
        chain.inject_reorg(depth=depth)
        assert chain.head_number() == target + 1
        # all state changes from the replayed suffix still present
        assert chain.contracts[STORE].state["value"] == value_before_fork

    def test_reorg_then_continue_mining(self):
        chain = make_chain()
        for t in range(1, 5):
            chain.mine_block(tick=t)
        chain.inject_reorg(depth=2)
        set_value(chain, 9)
        block = chain.mine_block(tick=6)
        assert block.number == chain.head_number()
        assert chain.contracts[STORE].state["value"] == 9


class TestSnapshots:
    def test_dump_restore_round_trip(self):
        chain = make_chain()
        set_value(chain, 5)
        chain.mine_block(tick=1)
        dump = chain.dump_state()
        other = make_chain()
        other.restore_state(dump)
        assert other.contracts[STORE].state == chain.contracts[STORE].state
        assert other.balances == chain.balances

    def test_dump_is_deterministic(self):
        def build():
            chain = make_chain()
            for t in range(1, 4):
                set_value(chain, t)
                chain.mine_block(tick=t)
            return chain.dump_state()
        assert build() == build()

    def test_restore_rejects_foreign_network(self):
        chain = make_chain()
        other = Chain(ChainConfig(network_id="elsewhere"))
        with pytest.raises(ChainError):
            other.restore_state(chain.dump_state())


class TestDeterminism:
    @given(st.lists(st.tuples(st.integers(0, 2),
                              st.integers(1, 100)), max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_same_schedule_same_dump(self, schedule):
        def run():
            chain = make_chain()
            for step, (op, arg) in enumerate(schedule):
                if op == 0:
                    set_value(chain, arg)
                elif op == 1:
                    chain.mine_block(tick=step + 1)
                elif op == 2 and chain.head_number() >= 1:
                    chain.inject_reorg(
                        depth=1 + arg % chain.head_number()
                        if chain.head_number() > 1 else 1)
            return chain.dump_state()
        assert run() == run()

    def test_branches_have_distinct_hashes(self):
        # two empty blocks at the same height on competing branches
        chain = make_chain()
        for t in range(1, 4):
            chain.mine_block(tick=t)
        before = {chain.get_block(n).block_hash for n in range(1, 4)}
        chain.inject_reorg(depth=2)
        after = {chain.get_block(n).block_hash
                 for n in range(1, chain.head_number() + 1)}
        assert before & after == {chain.get_block(1).block_hash}


class TestViews:
    def test_clean_view_mirrors_chain(self):
        chain = make_chain()
        tx = set_value(chain, 1)
        chain.mine_block(tick=1)
        from bridgesim import ChainView
        view = ChainView(chain)
        assert view.head_number() == chain.head_number()
        assert view.get_transaction(tx.tx_hash)[0] == tx
        assert view.confirmations(tx.tx_hash) == 0

    def test_substitute_block_hash(self):
        from bridgesim import ChainView, ViewCorruption
        chain = make_chain()
        for t in range(1, 4):
            chain.mine_block(tick=t)
        fake = blake2b256(b"lie")
        view = ChainView(chain, ViewCorruption(
            kind="substitute_block_hash", block_number=2, fake_hash=fake))
        assert view.get_block(2).block_hash == fake
        assert view.get_block(1).block_hash == chain.get_block(1).block_hash

    def test_fabricated_transfer_visible_only_through_view(self):
        from bridgesim import ChainView, EventLog, Transaction, ViewCorruption
        chain = make_chain()
        for t in range(1, 10):
            chain.mine_block(tick=t)
        fake_tx = Transaction(tx_hash=blake2b256(b"fake"), sender=ALICE,
                              recipient=STORE, payload=b"", value=0, seq=0)
        fake_ev = EventLog(emitter=STORE, name="ValueChanged",
                           attributes=(("value", b"\x2a"),),
                           tx_hash=fake_tx.tx_hash, block_number=3)
        view = ChainView(chain, ViewCorruption(
            kind="fabricate_transfer", block_number=3,
            fake_hash=blake2b256(b"fake-block"),
            fake_transaction=fake_tx, fake_event=fake_ev))
        assert view.get_transaction(fake_tx.tx_hash)[0] == fake_tx
        assert view.confirmations(fake_tx.tx_hash) == chain.head_number() - 3
        events = view.get_events(STORE, "ValueChanged", 0, view.head_number())
        assert fake_ev in events
        # ground truth is unaffected
        assert chain.get_transaction(fake_tx.tx_hash) is None
        assert chain.get_events(STORE, "ValueChanged", 0,
                                chain.head_number()) == []
