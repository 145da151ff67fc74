"""Relay daemon: event detection, signature collection, ordered submission.

The bridge is a single logical actor advanced once per scheduler tick. All
job-state transitions are appended to a journal and mirrored into a pickled
store, so a bridge can be killed at any transition point and rebuilt with
`BridgeNode.restore` without ever double-delivering a transfer.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field

from .adapter import (
    encode_process_transfer,
    event_attr,
    message_from_request_event,
)
from .chain import Chain, ChainView, DuplicateTransaction
from .codec import (
    SIGNATURE_LEN,
    Keypair,
    TransferMessage,
    compute_transfer_hash,
)
from .signatory import SigningRequest

JOB_STATES = ("detected", "awaitingFinality", "collectingSignatures",
              "submitting", "awaitingDestFinality", "done", "stalled")


@dataclass
class BridgeConfig:
    source_adapter: bytes
    dest_adapter: bytes
    relayer: Keypair
    signatory_ids: list[str]
    signatory_keys: list[bytes]
    quorum_size: int
    source_finality: int = 6
    dest_finality: int = 6
    sign_timeout_ticks: int = 8
    max_retries: int = 3
    liveness_timeout_ticks: int = 50
    reorg_response: str = "continue"  # pause | retry | continue
    censor_transfer_id: int | None = None


@dataclass
class TransferJob:
    transfer: TransferMessage
    state: str = "detected"
    collected: dict = field(default_factory=dict)  # pubkey -> signature
    attempts: int = 0
    source_block_number: int = 0
    source_block_hash: bytes = b""
    digest: bytes = b""
    request_tick: int = -1
    transient_refusal: bool = False
    submitted_payload: bytes = b""
    submitted_tx: bytes = b""
    processed_block: int | None = None
    stall_reason: str = ""
    forged: bool = False

    @property
    def transfer_id(self) -> int:
        return self.transfer.source_transfer_id


@dataclass
class ChainStatus:
    last_seen_head: tuple = (0, b"")
    ticks_since_new_block: int = 0
    reorg_detected: bool = False


class BridgeNode:
    def __init__(self, config: BridgeConfig, source_view: ChainView,
                 dest_view: ChainView, dest_chain: Chain, post):
        """``post(recipient_id, message)`` enqueues a bus message; ``dest_chain``
        is the write handle used to submit relayer transactions."""
        self.config = config
        self.source_view = source_view
        self.dest_view = dest_view
        self.dest_chain = dest_chain
        self.post = post
        self.jobs: dict[int, TransferJob] = {}
        self.forged_jobs: list[TransferJob] = []
        self.journal: list[str] = []
        self.inbox: list = []
        self.paused = False
        self.alarms: list[tuple] = []
        self.source_cursor = 0
        self.dest_cursor = 0
        self.inflight: TransferJob | None = None
        self.status = {
            "source": ChainStatus((source_view.head_number(),
                                   source_view.head_hash())),
            "dest": ChainStatus((dest_view.head_number(),
                                 dest_view.head_hash())),
        }
        self._job_blobs: dict[int, bytes] = {}
        self._forged_blobs: list[bytes] = []
        self._persist()

    # -- journal / persistence ----------------------------------------------

    def _transition(self, tick: int, job: TransferJob, to_state: str,
                    detail: str = "") -> None:
        line = f"{tick} | {job.transfer_id} | {job.state} -> {to_state} | {detail}"
        job.state = to_state
        self.journal.append(line)
        self._persist(job)

    def _persist(self, job: TransferJob | None = None) -> None:
        """Write-through store: only the changed job is re-serialized."""
        if job is None:
            self._job_blobs = {tid: pickle.dumps(j)
                               for tid, j in self.jobs.items()}
            self._forged_blobs = [pickle.dumps(j) for j in self.forged_jobs]
        elif job.forged:
            self._forged_blobs = [pickle.dumps(j) for j in self.forged_jobs]
        else:
            self._job_blobs[job.transfer_id] = pickle.dumps(job)

    @property
    def persisted(self) -> bytes:
        """Snapshot of the durable job store, as a crash would find it."""
        return pickle.dumps({
            "jobs": dict(self._job_blobs),
            "forged_jobs": list(self._forged_blobs),
            "journal": self.journal,
            "source_cursor": self.source_cursor,
            "dest_cursor": self.dest_cursor,
            "alarms": self.alarms,
            "paused": self.paused,
        })

    @classmethod
    def restore(cls, persisted: bytes, config: BridgeConfig,
                source_view: ChainView, dest_view: ChainView,
                dest_chain: Chain, post) -> "BridgeNode":
        """Rebuild a bridge from its persisted job store after a crash.

        In-flight submissions are resubmitted; the destination adapter's
        processed map turns duplicates into AlreadyProcessed events.
        """
        node = cls(config, source_view, dest_view, dest_chain, post)
        doc = pickle.loads(persisted)
        node.jobs = {tid: pickle.loads(blob)
                     for tid, blob in doc["jobs"].items()}
        node.forged_jobs = [pickle.loads(blob) for blob in doc["forged_jobs"]]
        node.journal = doc["journal"]
        node.source_cursor = doc["source_cursor"]
        node.dest_cursor = doc["dest_cursor"]
        node.alarms = doc["alarms"]
        node.paused = doc["paused"]
        for job in node._all_jobs():
            if job.state == "submitting":
                # the submitted tx may or may not have landed; resubmit
                job.submitted_tx = b""
            if job.state == "collectingSignatures":
                job.request_tick = -1  # rebroadcast on the next step
        node._persist()
        return node

    def _all_jobs(self):
        return list(self.jobs.values()) + self.forged_jobs

    # -- operator controls ---------------------------------------------------

    def operator_pause(self) -> None:
        self.paused = True

    def operator_resume(self) -> None:
        self.paused = False

    # -- chain status monitoring ---------------------------------------------

    def monitor_chain_status(self, name: str, view: ChainView,
                             tick: int) -> ChainStatus:
        st = self.status[name]
        prev_number, prev_hash = st.last_seen_head
        head_number = view.head_number()
        head_hash = view.head_hash()
        if head_number == prev_number and head_hash == prev_hash:
            st.ticks_since_new_block += 1
            if st.ticks_since_new_block == self.config.liveness_timeout_ticks:
                self.alarms.append(("liveness", name, tick))
        else:
            st.ticks_since_new_block = 0
        st.reorg_detected = (prev_hash != b""
                             and view.get_block_by_hash(prev_hash) is None)
        if st.reorg_detected:
            self.alarms.append(("reorg", name, tick))
            if self.config.reorg_response == "pause":
                self.paused = True
            elif self.config.reorg_response == "retry" and name == "source":
                finalized = max(0, head_number - self.config.source_finality)
                self.source_cursor = min(self.source_cursor, finalized)
        st.last_seen_head = (head_number, head_hash)
        return st

    # -- main loop -----------------------------------------------------------

    def step(self, tick: int) -> None:
        self.monitor_chain_status("source", self.source_view, tick)
        self.monitor_chain_status("dest", self.dest_view, tick)
        if self.paused:
            self.inbox.clear()
            return
        self._scan_source(tick)
        self._scan_dest(tick)
        self._collect_responses(tick)
        for job in sorted(self.jobs.values(), key=lambda j: j.transfer_id):
            self._advance(job, tick)
        for job in self.forged_jobs:
            self._advance(job, tick)

    def _scan_source(self, tick: int) -> None:
        head = self.source_view.head_number()
        if head <= self.source_cursor:
            return
        events = self.source_view.get_events(
            self.config.source_adapter, "BridgeTransferRequested",
            self.source_cursor + 1, head)
        for ev in events:
            transfer_id = int.from_bytes(event_attr(ev, "transferId"), "big")
            if transfer_id in self.jobs:
                continue
            block = self.source_view.get_block(ev.block_number)
            transfer = message_from_request_event(
                ev, ev.tx_hash, self.config.source_adapter,
                self.source_view.network_id)
            job = TransferJob(
                transfer=transfer,
                source_block_number=ev.block_number,
                source_block_hash=block.block_hash if block else b"",
            )
            self.jobs[transfer_id] = job
            self._transition(tick, job, "awaitingFinality",
                             f"sealed at {ev.block_number}")
        self.source_cursor = head

    def _scan_dest(self, tick: int) -> None:
        head = self.dest_view.head_number()
        if head <= self.dest_cursor:
            return
        events = self.dest_view.get_events(
            self.config.dest_adapter, None, self.dest_cursor + 1, head)
        self.dest_cursor = head
        for ev in events:
            if ev.name == "Processed":
                transfer_id = int.from_bytes(event_attr(ev, "transferId"), "big")
                src_hash = event_attr(ev, "sourceTxHash")
                for job in self._all_jobs():
                    if (job.transfer.source_transaction_hash == src_hash
                            and job.state == "submitting"):
                        job.processed_block = ev.block_number
                        if self.inflight is job:
                            self.inflight = None
                        self._transition(tick, job, "awaitingDestFinality",
                                         f"processed at {ev.block_number}")
            elif ev.name == "AlreadyProcessed":
                src_hash = event_attr(ev, "sourceTxHash")
                for job in self._all_jobs():
                    if (job.transfer.source_transaction_hash == src_hash
                            and job.state == "submitting"):
                        if self.inflight is job:
                            self.inflight = None
                        self._transition(tick, job, "done",
                                         "already processed on resubmission")

    def _collect_responses(self, tick: int) -> None:
        inbox, self.inbox = self.inbox, []
        for msg in inbox:
            if msg.get("type") != "sign_response":
                continue
            transfer_id = msg["transfer_id"]
            job = self.jobs.get(transfer_id)
            if job is None:
                for fj in self.forged_jobs:
                    if fj.transfer_id == transfer_id:
                        job = fj
                        break
            if job is None or job.state != "collectingSignatures":
                continue
            if msg.get("refused"):
                if msg["reason"] == "InsufficientFinality":
                    job.transient_refusal = True
                continue
            pub = msg["public_key"]
            sig = msg["signature"]
            # cursory checks only: length and known key (the bridge cannot
            # fully validate signature schemes it does not understand)
            if len(sig) != SIGNATURE_LEN or pub not in self.config.signatory_keys:
                continue
            job.collected[pub] = sig

    def _advance(self, job: TransferJob, tick: int) -> None:
        if job.state == "awaitingFinality":
            self._advance_finality(job, tick)
        elif job.state == "collectingSignatures":
            self._advance_collecting(job, tick)
        elif job.state == "submitting":
            self._advance_submitting(job, tick)
        elif job.state == "awaitingDestFinality":
            self._advance_dest_finality(job, tick)

    def _advance_finality(self, job: TransferJob, tick: int) -> None:
        if job.forged:
            self._begin_collecting(job, tick)
            return
        conf = self.source_view.confirmations(
            job.transfer.source_transaction_hash)
        if conf is None:
            job.stall_reason = "sourceOrphaned"
            self._transition(tick, job, "stalled", "request left canonical chain")
            return
        if conf >= self.config.source_finality:
            self._begin_collecting(job, tick)

    def _begin_collecting(self, job: TransferJob, tick: int) -> None:
        job.digest = compute_transfer_hash(job.transfer,
                                           self.dest_view.hash_alg)
        self._transition(tick, job, "collectingSignatures",
                         f"digest {job.digest.hex()[:16]}")
        self._broadcast_request(job, tick)

    def _broadcast_request(self, job: TransferJob, tick: int) -> None:
        req = SigningRequest(
            source_block_number=job.source_block_number,
            source_block_hash=job.source_block_hash,
            source_transaction_hash=job.transfer.source_transaction_hash,
            transfer_data_hash=job.digest,
            transfer=job.transfer,
        )
        job.request_tick = tick
        job.transient_refusal = False
        for sid in self.config.signatory_ids:
            self.post(sid, {"type": "sign_request",
                            "transfer_id": job.transfer_id,
                            "request": req.to_wire()})

    def _advance_collecting(self, job: TransferJob, tick: int) -> None:
        if len(job.collected) >= self.config.quorum_size:
            self._transition(tick, job, "submitting",
                             f"{len(job.collected)} signatures")
            return
        if job.request_tick < 0:
            self._broadcast_request(job, tick)
            return
        if tick - job.request_tick >= self.config.sign_timeout_ticks:
            if job.transient_refusal:
                self._broadcast_request(job, tick)
                return
            job.attempts += 1
            if job.attempts > self.config.max_retries:
                job.stall_reason = "signatureTimeout"
                self._transition(tick, job, "stalled",
                                 f"gave up after {job.attempts} attempts")
            else:
                self._broadcast_request(job, tick)

    def _advance_submitting(self, job: TransferJob, tick: int) -> None:
        if self.config.censor_transfer_id == job.transfer_id and not job.forged:
            job.stall_reason = "censored"
            self._transition(tick, job, "stalled", "censored by bridge")
            return
        if job.submitted_tx:
            receipt = self.dest_view.get_receipt(job.submitted_tx)
            if receipt is None or receipt.status == "ok":
                return  # pending, or landed fine: wait for the event scan
            self.inflight = None
            job.submitted_tx = b""
            job.attempts += 1
            if job.attempts > self.config.max_retries:
                job.stall_reason = f"destinationRejected:{receipt.reason}"
                self._transition(tick, job, "stalled", receipt.reason)
                return
            if receipt.reason == "InvalidSignature":
                job.collected.clear()
                self._transition(tick, job, "collectingSignatures",
                                 "re-collecting after InvalidSignature")
                self._broadcast_request(job, tick)
                return
            # other rejections: retry the identical signed payload
        if self.inflight is not None and self.inflight is not job:
            return  # strictly one in-flight destination submission
        if not job.forged and self._earlier_in_progress(job):
            return  # an earlier id must land first or the nonce check reverts
        self._submit(job, tick)

    def _earlier_in_progress(self, job: TransferJob) -> bool:
        for other in self.jobs.values():
            if (other.transfer_id < job.transfer_id
                    and other.state in ("detected", "awaitingFinality",
                                        "collectingSignatures", "submitting")):
                return True
        return False

    def _submit(self, job: TransferJob, tick: int) -> None:
        if not job.submitted_payload:
            entries = sorted(job.collected.items())
            job.submitted_payload = encode_process_transfer(
                job.transfer, entries)
        tx = self.dest_chain.make_transaction(
            sender=self.config.relayer.public_key,
            recipient=self.config.dest_adapter,
            payload=job.submitted_payload,
            value=0,
        )
        try:
            self.dest_chain.submit_transaction(tx)
        except DuplicateTransaction:
            pass
        job.submitted_tx = tx.tx_hash
        self.inflight = job
        self.journal.append(
            f"{tick} | {job.transfer_id} | submitting -> submitting | "
            f"tx {tx.tx_hash.hex()[:16]}")
        self._persist(job)

    def _advance_dest_finality(self, job: TransferJob, tick: int) -> None:
        conf = self.dest_view.head_number() - (job.processed_block or 0)
        if conf >= self.config.dest_finality:
            self._transition(tick, job, "done", f"{conf} confirmations")

    # -- byzantine behaviors -------------------------------------------------

    def byzantine_replay(self, transfer_id: int, tick: int) -> None:
        """Resubmit a completed job's signed transaction verbatim."""
        job = self.jobs.get(transfer_id)
        if job is None or not job.submitted_payload:
            return
        tx = self.dest_chain.make_transaction(
            sender=self.config.relayer.public_key,
            recipient=self.config.dest_adapter,
            payload=job.submitted_payload,
            value=0,
        )
        self.dest_chain.submit_transaction(tx)
        self.journal.append(
            f"{tick} | {transfer_id} | done -> done | replayed tx "
            f"{tx.tx_hash.hex()[:16]}")
        self._persist(job)

    def byzantine_forge(self, m: TransferMessage, tick: int,
                        claimed_block: int = 0,
                        claimed_block_hash: bytes = b"\x00" * 32) -> None:
        """Fabricate a transfer that never occurred on the source chain."""
        job = TransferJob(transfer=m, forged=True,
                          source_block_number=claimed_block,
                          source_block_hash=claimed_block_hash,
                          state="awaitingFinality")
        self.forged_jobs.append(job)
        self.journal.append(
            f"{tick} | {m.source_transfer_id} | forged -> awaitingFinality | "
            "fabricated transfer")
        self._persist(job)

    def byzantine_flood(self, count: int, tick: int) -> None:
        """Send a burst of junk signing requests to every signatory."""
        bogus = SigningRequest(
            source_block_number=0,
            source_block_hash=b"\xff" * 32,
            source_transaction_hash=b"\xff" * 32,
            transfer_data_hash=b"\xff" * 32,
            transfer=TransferMessage(b"\xff" * 32, b"\xff" * 32, b"\xff" * 32,
                                     b"\xff\xff\xff\xff", 0, 0, "bogus"),
        )
        wire = bogus.to_wire()
        for _ in range(count):
            for sid in self.config.signatory_ids:
                self.post(sid, {"type": "sign_request",
                                "transfer_id": 0,
                                "request": wire})
