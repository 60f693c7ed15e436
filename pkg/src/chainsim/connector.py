"""Bridge between company-side documents and the certification ledger.

Documents live off chain in a small sqlite store; only their SHA-512 over a
canonical JSON form is certified on chain. Verification recomputes the digest
from the stored payload and compares it with the registry, so any later edit
of the off-chain copy surfaces as a hash mismatch.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import sqlite3
from dataclasses import dataclass
from datetime import date
from typing import Callable, Iterable

from .ledger import (
    EVENT_INFO_POSTED,
    AuthorizationStatus,
    Keypair,
    Ledger,
    PendingTimeParams,
    DEFAULT_PENDING_TIME,
    PostSharedInfo,
    RequestAuthorization,
    UniformSource,
    Vote,
    make_transaction,
    sample_pending_time,
)

SCHEMA_VERSION = 1


class ConnectorError(Exception):
    """Base class for connector failures."""


class NonCanonicalizable(ConnectorError):
    """Document cannot be put into canonical JSON form."""


class NotFound(ConnectorError):
    """No shared information under that id."""


class Forbidden(ConnectorError):
    """Requester is neither the owner nor in the visibility set."""


class MiningFailed(ConnectorError):
    """The posting transaction did not land in a block."""


class VerificationStatus(enum.Enum):
    AUTHENTIC = "authentic"
    HASH_MISMATCH = "hash_mismatch"
    NOT_ON_CHAIN = "not_on_chain"


# --------------------------------------------------------------------------
# Canonical JSON


def _check_canonical(value: object) -> None:
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise NonCanonicalizable(f"object key {key!r} is not a string")
            _check_canonical(item)
    elif isinstance(value, (list, tuple)):
        for item in value:
            _check_canonical(item)
    elif isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise NonCanonicalizable(f"non-finite number {value!r}")
    elif value is not None and not isinstance(value, (str, int, bool)):
        raise NonCanonicalizable(f"unsupported value type {type(value).__name__}")


def canonicalize_document(document: object) -> bytes:
    """UTF-8 canonical JSON: sorted keys, no whitespace, shortest numbers."""
    _check_canonical(document)
    text = json.dumps(
        document, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )
    return text.encode("utf-8")


def hash_document(document: object) -> bytes:
    """SHA-512 digest of the canonical form; what gets certified on chain."""
    return hashlib.sha512(canonicalize_document(document)).digest()


# --------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class TransactionVerification:
    """Receipt tying a shared document to its certification transaction."""

    tx_hash: bytes
    block_index: int
    submitted_at: float
    mined_at: float
    gas_used: int
    fee_paid: float

    @property
    def pending_seconds(self) -> float:
        return self.mined_at - self.submitted_at


@dataclass(frozen=True)
class SharedInfo:
    info_id: int
    owner_id: str
    payload: object
    reference_date: date
    visibility: frozenset[str]
    hash_sum: bytes
    verification: TransactionVerification | None = None

    def visible_to(self, requester_id: str) -> bool:
        return requester_id == self.owner_id or requester_id in self.visibility


# --------------------------------------------------------------------------
# Off-chain store


class OffChainStore:
    """Sqlite-backed mutable document store, one row per shared record.

    Being off chain, rows can be overwritten after the fact; that is the
    threat the on-chain digest exists to expose.
    """

    def __init__(self, path: str = ":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        version = self._conn.execute("PRAGMA user_version").fetchone()[0]
        if version == 0:
            self._create_schema()
        elif version != SCHEMA_VERSION:
            raise ConnectorError(f"unsupported store schema version {version}")

    def _create_schema(self) -> None:
        with self._conn:
            self._conn.execute(
                """
                CREATE TABLE IF NOT EXISTS shared_info (
                    info_id INTEGER PRIMARY KEY,
                    owner_id TEXT NOT NULL,
                    reference_date TEXT NOT NULL,
                    visibility TEXT NOT NULL,
                    payload TEXT NOT NULL,
                    hash_sum TEXT NOT NULL,
                    tx_hash TEXT NOT NULL,
                    block_index INTEGER NOT NULL,
                    submitted_at REAL NOT NULL,
                    mined_at REAL NOT NULL,
                    gas_used INTEGER NOT NULL,
                    fee_paid REAL NOT NULL
                )
                """
            )
            self._conn.execute(
                "CREATE INDEX IF NOT EXISTS idx_shared_owner ON shared_info(owner_id)"
            )
            self._conn.execute(
                "CREATE INDEX IF NOT EXISTS idx_shared_date ON shared_info(reference_date)"
            )
            self._conn.execute(f"PRAGMA user_version = {SCHEMA_VERSION}")

    def close(self) -> None:
        self._conn.close()

    def put(self, record: SharedInfo) -> None:
        if record.verification is None:
            raise ConnectorError("only certified records belong in the store")
        v = record.verification
        with self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO shared_info VALUES (?,?,?,?,?,?,?,?,?,?,?,?)",
                (
                    record.info_id,
                    record.owner_id,
                    record.reference_date.isoformat(),
                    json.dumps(sorted(record.visibility)),
                    canonicalize_document(record.payload).decode("utf-8"),
                    record.hash_sum.hex(),
                    v.tx_hash.hex(),
                    v.block_index,
                    v.submitted_at,
                    v.mined_at,
                    v.gas_used,
                    v.fee_paid,
                ),
            )

    def overwrite_payload(self, info_id: int, document: object) -> None:
        """Replace a stored payload in place, certification left untouched."""
        text = canonicalize_document(document).decode("utf-8")
        with self._conn:
            cur = self._conn.execute(
                "UPDATE shared_info SET payload = ? WHERE info_id = ?", (text, info_id)
            )
            if cur.rowcount == 0:
                raise NotFound(f"no shared info {info_id}")

    @staticmethod
    def _row_to_record(row: tuple) -> SharedInfo:
        return SharedInfo(
            info_id=row[0],
            owner_id=row[1],
            reference_date=date.fromisoformat(row[2]),
            visibility=frozenset(json.loads(row[3])),
            payload=json.loads(row[4]),
            hash_sum=bytes.fromhex(row[5]),
            verification=TransactionVerification(
                tx_hash=bytes.fromhex(row[6]),
                block_index=row[7],
                submitted_at=row[8],
                mined_at=row[9],
                gas_used=row[10],
                fee_paid=row[11],
            ),
        )

    def get(self, info_id: int) -> SharedInfo | None:
        row = self._conn.execute(
            "SELECT * FROM shared_info WHERE info_id = ?", (info_id,)
        ).fetchone()
        return None if row is None else self._row_to_record(row)

    def search(
        self,
        owner_id: str | None = None,
        date_from: date | None = None,
        date_to: date | None = None,
    ) -> list[SharedInfo]:
        clauses = []
        args: list[object] = []
        if owner_id is not None:
            clauses.append("owner_id = ?")
            args.append(owner_id)
        if date_from is not None:
            clauses.append("reference_date >= ?")
            args.append(date_from.isoformat())
        if date_to is not None:
            clauses.append("reference_date <= ?")
            args.append(date_to.isoformat())
        sql = "SELECT * FROM shared_info"
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY info_id"
        rows = self._conn.execute(sql, args).fetchall()
        return [self._row_to_record(row) for row in rows]


# --------------------------------------------------------------------------
# Connector


class Connector:
    """Synchronous posting and retrieval against one ledger and one store."""

    def __init__(
        self,
        ledger: Ledger,
        store: OffChainStore,
        clock: Callable[[], float],
        pending_rng: UniformSource,
        gas_price: float,
        pending_params: PendingTimeParams = DEFAULT_PENDING_TIME,
    ):
        self.ledger = ledger
        self.store = store
        self.clock = clock
        self.pending_rng = pending_rng
        self.gas_price = gas_price
        self.pending_params = pending_params

    # -- membership ----------------------------------------------------------

    def register_company(
        self, candidate: Keypair, sponsors: Iterable[Keypair]
    ) -> AuthorizationStatus:
        """Run the request-plus-vote flow until the candidate resolves.

        Administrative blocks mine immediately; the pending-time model only
        applies to data posts.
        """
        now = self.clock()
        if candidate.address.id not in self.ledger.state.authorized:
            request = make_transaction(
                candidate, self.ledger.next_nonce(candidate.address.id),
                RequestAuthorization(), 0.0,
            )
            self.ledger.submit_transaction(request)
            self.ledger.mine_block(now)
        for sponsor in sponsors:
            status = self.ledger.state.status_of(candidate.address.id)
            if status is not AuthorizationStatus.PENDING:
                return status
            vote = make_transaction(
                sponsor, self.ledger.next_nonce(sponsor.address.id),
                Vote(candidate=candidate.address.id, approve=True), 0.0,
            )
            self.ledger.submit_transaction(vote)
            self.ledger.mine_block(now)
        return self.ledger.state.status_of(candidate.address.id)

    # -- posting -------------------------------------------------------------

    def post_shared_info(
        self,
        company: Keypair,
        document: object,
        reference_date: date,
        visibility: Iterable[str],
    ) -> SharedInfo:
        """Certify one document: hash, submit, wait out the pending delay, mine."""
        visible = frozenset(visibility)
        digest = hash_document(document)
        call = PostSharedInfo(
            hash_sum=digest, reference_date=reference_date, visibility=visible
        )
        tx = make_transaction(
            company, self.ledger.next_nonce(company.address.id), call, self.gas_price
        )
        submitted_at = self.clock()
        self.ledger.submit_transaction(tx)
        delay = sample_pending_time(self.pending_rng, self.pending_params)
        mined_at = submitted_at + delay
        block = self.ledger.mine_block(mined_at)
        info_id = self._find_posted_id(tx.tx_hash)
        if info_id is None:
            raise MiningFailed(f"transaction {tx.tx_hash.hex()[:16]} did not certify")
        record = SharedInfo(
            info_id=info_id,
            owner_id=company.address.id,
            payload=document,
            reference_date=reference_date,
            visibility=visible,
            hash_sum=digest,
            verification=TransactionVerification(
                tx_hash=tx.tx_hash,
                block_index=block.index,
                submitted_at=submitted_at,
                mined_at=mined_at,
                gas_used=tx.gas_amount,
                fee_paid=tx.fee,
            ),
        )
        self.store.put(record)
        return record

    def _find_posted_id(self, tx_hash: bytes) -> int | None:
        registry = self.ledger.state.registry
        for info_id in range(self.ledger.state.next_info_id - 1, -1, -1):
            if registry[info_id].tx_hash == tx_hash:
                return info_id
        return None

    # -- retrieval -----------------------------------------------------------

    def get_shared_info(self, requester_id: str, info_id: int) -> SharedInfo:
        record = self.store.get(info_id)
        if record is None:
            raise NotFound(f"no shared info {info_id}")
        if not record.visible_to(requester_id):
            raise Forbidden(f"{requester_id} may not read shared info {info_id}")
        return record

    def search_shared_info(
        self,
        requester_id: str,
        owner_id: str | None = None,
        date_from: date | None = None,
        date_to: date | None = None,
    ) -> list[SharedInfo]:
        rows = self.store.search(owner_id=owner_id, date_from=date_from, date_to=date_to)
        return [row for row in rows if row.visible_to(requester_id)]

    # -- verification --------------------------------------------------------

    def verify_shared_info(self, record: SharedInfo) -> VerificationStatus:
        """Compare the record's recomputed digest with the on-chain one."""
        on_chain = self.ledger.get_record(record.info_id)
        if on_chain is None:
            return VerificationStatus.NOT_ON_CHAIN
        if hash_document(record.payload) == on_chain.hash_sum:
            return VerificationStatus.AUTHENTIC
        return VerificationStatus.HASH_MISMATCH

    # -- polling -------------------------------------------------------------

    def poll_new_info(self, requester_id: str, cursor: int) -> tuple[int, list[int]]:
        """New visible info ids since the cursor, plus the advanced cursor."""
        cursor = max(0, cursor)
        events = self.ledger.read_events(cursor)
        new_cursor = cursor + len(events)
        visible: list[int] = []
        for event in events:
            if event.kind != EVENT_INFO_POSTED:
                continue
            on_chain = self.ledger.get_record(int(event.payload))
            if on_chain is None:
                continue
            if requester_id == on_chain.owner_id or requester_id in on_chain.visibility:
                visible.append(on_chain.info_id)
        return new_cursor, visible
