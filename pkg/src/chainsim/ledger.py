"""Append-only certification ledger with an authorization registry.

A single in-process chain: signed transactions enter a pending pool, mining
orders them by fee and appends a hash-linked block, and a registry contract
tracks which addresses are authorized (by majority vote) and which shared
information digests have been certified. Block and transaction hashes are
SHA-512 over a canonical length-prefixed serialization, so any byte flip
anywhere in the chain is detectable afterwards.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from datetime import date
from statistics import NormalDist
from typing import Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

# Gas schedule: posting carries the measured contract-call amount, the
# administrative calls the flat base amount.
POST_GAS = 190_000
BASE_GAS = 21_000

GENESIS_PREV_HASH = bytes(64)


class LedgerError(Exception):
    """Base class for ledger failures."""


class BadSignature(LedgerError):
    """Transaction signature does not verify against the sender key."""


class BadNonce(LedgerError):
    """Transaction nonce is not the sender's next expected value."""


class Unauthorized(LedgerError):
    """Sender is not in the authorized set for a restricted call."""


class EmptyPool(LedgerError):
    """Mining was requested with no pending transactions."""


class NotPending(LedgerError):
    """Vote cast for a candidate with no open authorization request."""


class DuplicateVote(LedgerError):
    """Voter already voted on this candidate."""


class ChainError(LedgerError):
    """Chain verification failed at a specific block."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"block {index}: {reason}")
        self.index = index
        self.reason = reason


# --------------------------------------------------------------------------
# Canonical byte encoding. Fixed-width big-endian integers, IEEE doubles,
# and length-prefixed blobs; the same bytes feed signatures and hashes.

def _u32(value: int) -> bytes:
    return struct.pack(">I", value)


def _u64(value: int) -> bytes:
    return struct.pack(">Q", value)


def _f64(value: float) -> bytes:
    return struct.pack(">d", value)


def _blob(data: bytes) -> bytes:
    return _u32(len(data)) + data


def _text(value: str) -> bytes:
    return _blob(value.encode("utf-8"))


# --------------------------------------------------------------------------
# Identities


@dataclass(frozen=True)
class Address:
    """Node identity: raw public key plus its derived short id."""

    public_key: bytes
    id: str

    @classmethod
    def from_public_key(cls, public_key: bytes) -> Address:
        digest = hashlib.sha512(public_key).digest()
        return cls(public_key=public_key, id=digest[:20].hex())


class Keypair:
    """Deterministic signing identity for one company or node."""

    def __init__(self, private_key: ed25519.Ed25519PrivateKey):
        self._private = private_key
        raw = private_key.public_key().public_bytes_raw()
        self.address = Address.from_public_key(raw)

    @classmethod
    def generate(cls, seed: bytes | None = None) -> Keypair:
        """Fresh keypair, or a reproducible one from a 32-byte seed."""
        if seed is None:
            return cls(ed25519.Ed25519PrivateKey.generate())
        if len(seed) != 32:
            raise ValueError(f"seed must be 32 bytes, got {len(seed)}")
        return cls(ed25519.Ed25519PrivateKey.from_private_bytes(seed))

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """Total verification: malformed keys or signatures return False."""
    try:
        ed25519.Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


# --------------------------------------------------------------------------
# Contract calls


@dataclass(frozen=True)
class RequestAuthorization:
    """Ask the registry to open a membership vote for the sender."""

    def canonical_bytes(self) -> bytes:
        return b"\x00"


@dataclass(frozen=True)
class Vote:
    """Approve or reject a pending membership candidate."""

    candidate: str
    approve: bool

    def canonical_bytes(self) -> bytes:
        return b"\x01" + _text(self.candidate) + (b"\x01" if self.approve else b"\x00")


@dataclass(frozen=True)
class PostSharedInfo:
    """Certify the digest of an off-chain document."""

    hash_sum: bytes
    reference_date: date
    visibility: frozenset[str]

    def __post_init__(self) -> None:
        if len(self.hash_sum) != 64:
            raise ValueError(f"hash_sum must be 64 bytes, got {len(self.hash_sum)}")

    def canonical_bytes(self) -> bytes:
        parts = [b"\x02", _blob(self.hash_sum), _text(self.reference_date.isoformat())]
        members = sorted(self.visibility)
        parts.append(_u32(len(members)))
        parts.extend(_text(member) for member in members)
        return b"".join(parts)


ContractCall = RequestAuthorization | Vote | PostSharedInfo


# --------------------------------------------------------------------------
# Transactions and blocks


@dataclass(frozen=True)
class SignedTransaction:
    sender: Address
    nonce: int
    call: ContractCall
    gas_amount: int
    gas_price: float
    signature: bytes

    def signing_bytes(self) -> bytes:
        return b"".join(
            (
                _blob(self.sender.public_key),
                _u64(self.nonce),
                self.call.canonical_bytes(),
                _u64(self.gas_amount),
                _f64(self.gas_price),
            )
        )

    def canonical_bytes(self) -> bytes:
        return self.signing_bytes() + _blob(self.signature)

    @property
    def tx_hash(self) -> bytes:
        return hashlib.sha512(self.canonical_bytes()).digest()

    @property
    def fee(self) -> float:
        return self.gas_amount * self.gas_price


def make_transaction(
    keypair: Keypair,
    nonce: int,
    call: ContractCall,
    gas_price: float,
    gas_amount: int | None = None,
) -> SignedTransaction:
    """Sign a contract call. Posting always carries the fixed posting gas."""
    if gas_amount is None:
        gas_amount = POST_GAS if isinstance(call, PostSharedInfo) else BASE_GAS
    if isinstance(call, PostSharedInfo) and gas_amount != POST_GAS:
        raise ValueError(f"posting gas amount is fixed at {POST_GAS}")
    if gas_amount < 0 or gas_price < 0:
        raise ValueError("gas amount and price must be non-negative")
    unsigned = SignedTransaction(
        sender=keypair.address,
        nonce=nonce,
        call=call,
        gas_amount=gas_amount,
        gas_price=gas_price,
        signature=b"",
    )
    signature = keypair.sign(unsigned.signing_bytes())
    return SignedTransaction(
        sender=keypair.address,
        nonce=nonce,
        call=call,
        gas_amount=gas_amount,
        gas_price=gas_price,
        signature=signature,
    )


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    timestamp: float
    transactions: tuple[SignedTransaction, ...]
    block_hash: bytes

    def header_bytes(self) -> bytes:
        parts = [_u64(self.index), _blob(self.prev_hash), _f64(self.timestamp)]
        parts.append(_u32(len(self.transactions)))
        parts.extend(_blob(tx.canonical_bytes()) for tx in self.transactions)
        return b"".join(parts)

    @staticmethod
    def compute_hash(
        index: int,
        prev_hash: bytes,
        timestamp: float,
        transactions: tuple[SignedTransaction, ...],
    ) -> bytes:
        shell = Block(index, prev_hash, timestamp, transactions, b"")
        return hashlib.sha512(shell.header_bytes()).digest()


# --------------------------------------------------------------------------
# Registry contract state


class AuthorizationStatus(enum.Enum):
    PENDING = "pending"
    AUTHORIZED = "authorized"
    DENIED = "denied"


@dataclass
class PendingAuthorization:
    candidate: str
    votes_for: set[str] = field(default_factory=set)
    votes_against: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class OnChainRecord:
    """Registry entry certifying one shared information digest."""

    info_id: int
    owner_id: str
    hash_sum: bytes
    reference_date: date
    visibility: frozenset[str]
    block_index: int
    tx_hash: bytes


@dataclass(frozen=True)
class Event:
    cursor: int
    kind: str
    payload: int | str


EVENT_INFO_POSTED = "info_posted"
EVENT_ADDRESS_AUTHORIZED = "address_authorized"
EVENT_ADDRESS_DENIED = "address_denied"


class ContractState:
    """Mutable registry state replayed from the chain.

    Votes resolve by strict majority of the authorized set measured when the
    vote lands, so the quorum grows as membership grows.
    """

    def __init__(self) -> None:
        self.authorized: set[str] = set()
        self.pending: dict[str, PendingAuthorization] = {}
        self.registry: dict[int, OnChainRecord] = {}
        self.events: list[Event] = []
        self.next_info_id = 0

    def _emit(self, kind: str, payload: int | str) -> None:
        self.events.append(Event(cursor=len(self.events), kind=kind, payload=payload))

    def status_of(self, candidate: str) -> AuthorizationStatus:
        if candidate in self.authorized:
            return AuthorizationStatus.AUTHORIZED
        if candidate in self.pending:
            return AuthorizationStatus.PENDING
        return AuthorizationStatus.DENIED

    def request_authorization(self, candidate: str) -> AuthorizationStatus:
        """Open a membership vote. Re-requests while pending are no-ops and
        denied candidates may apply again."""
        if candidate in self.authorized:
            return AuthorizationStatus.AUTHORIZED
        if candidate not in self.pending:
            self.pending[candidate] = PendingAuthorization(candidate=candidate)
        return AuthorizationStatus.PENDING

    def vote_threshold(self) -> int:
        return len(self.authorized) // 2 + 1

    def apply_vote(self, voter: str, candidate: str, approve: bool) -> AuthorizationStatus:
        if voter not in self.authorized:
            raise Unauthorized(f"voter {voter} is not authorized")
        entry = self.pending.get(candidate)
        if entry is None:
            raise NotPending(f"candidate {candidate} has no pending request")
        if voter in entry.votes_for or voter in entry.votes_against:
            raise DuplicateVote(f"voter {voter} already voted on {candidate}")
        if approve:
            entry.votes_for.add(voter)
        else:
            entry.votes_against.add(voter)
        threshold = self.vote_threshold()
        if len(entry.votes_for) >= threshold:
            del self.pending[candidate]
            self.authorized.add(candidate)
            self._emit(EVENT_ADDRESS_AUTHORIZED, candidate)
            return AuthorizationStatus.AUTHORIZED
        if len(entry.votes_against) >= threshold:
            del self.pending[candidate]
            self._emit(EVENT_ADDRESS_DENIED, candidate)
            return AuthorizationStatus.DENIED
        return AuthorizationStatus.PENDING

    def post_shared_info(
        self,
        owner: str,
        hash_sum: bytes,
        reference_date: date,
        visibility: frozenset[str],
        block_index: int,
        tx_hash: bytes,
    ) -> int:
        if owner not in self.authorized:
            raise Unauthorized(f"poster {owner} is not authorized")
        info_id = self.next_info_id
        self.next_info_id += 1
        self.registry[info_id] = OnChainRecord(
            info_id=info_id,
            owner_id=owner,
            hash_sum=hash_sum,
            reference_date=reference_date,
            visibility=visibility,
            block_index=block_index,
            tx_hash=tx_hash,
        )
        self._emit(EVENT_INFO_POSTED, info_id)
        return info_id


# --------------------------------------------------------------------------
# The ledger


class Ledger:
    """Single-writer chain plus pending pool plus replayed contract state."""

    def __init__(self, deployer: Keypair, genesis_time: float = 0.0):
        self.state = ContractState()
        self.blocks: list[Block] = []
        self._pool: dict[bytes, tuple[int, SignedTransaction]] = {}
        self._submit_seq = 0
        self._next_nonce: dict[str, int] = {}
        genesis_tx = make_transaction(deployer, 0, RequestAuthorization(), 0.0)
        self._next_nonce[deployer.address.id] = 1
        block_hash = Block.compute_hash(0, GENESIS_PREV_HASH, genesis_time, (genesis_tx,))
        self.blocks.append(
            Block(0, GENESIS_PREV_HASH, genesis_time, (genesis_tx,), block_hash)
        )
        # The deployer is pre-authorized at genesis, no vote possible yet.
        self.state.authorized.add(deployer.address.id)
        self.state._emit(EVENT_ADDRESS_AUTHORIZED, deployer.address.id)

    # -- pool ----------------------------------------------------------------

    def next_nonce(self, address_id: str) -> int:
        return self._next_nonce.get(address_id, 0)

    def submit_transaction(self, tx: SignedTransaction) -> bytes:
        """Validate and queue a transaction; returns its hash."""
        if not verify_signature(tx.sender.public_key, tx.signing_bytes(), tx.signature):
            raise BadSignature(f"bad signature from {tx.sender.id}")
        expected = self.next_nonce(tx.sender.id)
        if tx.nonce != expected:
            raise BadNonce(f"{tx.sender.id}: got nonce {tx.nonce}, expected {expected}")
        if isinstance(tx.call, (Vote, PostSharedInfo)) and tx.sender.id not in self.state.authorized:
            raise Unauthorized(f"sender {tx.sender.id} is not authorized")
        self._next_nonce[tx.sender.id] = expected + 1
        self._pool[tx.tx_hash] = (self._submit_seq, tx)
        self._submit_seq += 1
        return tx.tx_hash

    @property
    def pool_size(self) -> int:
        return len(self._pool)

    # -- mining --------------------------------------------------------------

    def mine_block(self, timestamp: float, max_tx: int | None = None) -> Block:
        """Append a block with the highest-fee pending transactions.

        Equal fees keep submission order. Contract calls that fail at
        execution time stay in the block but leave the state untouched.
        """
        if not self._pool:
            raise EmptyPool("no pending transactions")
        ordered = sorted(self._pool.values(), key=lambda item: (-item[1].fee, item[0]))
        if max_tx is not None:
            ordered = ordered[:max_tx]
        chosen = tuple(tx for _, tx in ordered)
        index = len(self.blocks)
        for tx in chosen:
            self._execute(tx, index)
        prev_hash = self.blocks[-1].block_hash
        block_hash = Block.compute_hash(index, prev_hash, timestamp, chosen)
        block = Block(index, prev_hash, timestamp, chosen, block_hash)
        self.blocks.append(block)
        for tx in chosen:
            del self._pool[tx.tx_hash]
        return block

    def _execute(self, tx: SignedTransaction, block_index: int) -> None:
        call = tx.call
        try:
            if isinstance(call, RequestAuthorization):
                self.state.request_authorization(tx.sender.id)
            elif isinstance(call, Vote):
                self.state.apply_vote(tx.sender.id, call.candidate, call.approve)
            else:
                self.state.post_shared_info(
                    owner=tx.sender.id,
                    hash_sum=call.hash_sum,
                    reference_date=call.reference_date,
                    visibility=call.visibility,
                    block_index=block_index,
                    tx_hash=tx.tx_hash,
                )
        except LedgerError:
            # Mined but ineffective: authorization rules always win.
            pass

    # -- verification --------------------------------------------------------

    def verify_chain(self) -> None:
        """Walk the whole chain; raise ChainError at the first violation."""
        prev_hash = GENESIS_PREV_HASH
        for i, block in enumerate(self.blocks):
            if block.index != i:
                raise ChainError(i, f"index {block.index} out of sequence")
            if block.prev_hash != prev_hash:
                raise ChainError(i, "previous-hash link broken")
            recomputed = Block.compute_hash(
                block.index, block.prev_hash, block.timestamp, block.transactions
            )
            if recomputed != block.block_hash:
                raise ChainError(i, "block hash does not match contents")
            for tx in block.transactions:
                if not verify_signature(tx.sender.public_key, tx.signing_bytes(), tx.signature):
                    raise ChainError(i, f"bad transaction signature from {tx.sender.id}")
            prev_hash = block.block_hash

    # -- queries -------------------------------------------------------------

    def read_events(self, since_cursor: int = 0) -> list[Event]:
        """Events with cursor >= since_cursor, oldest first."""
        if since_cursor <= 0:
            return list(self.state.events)
        return self.state.events[since_cursor:]

    def get_record(self, info_id: int) -> OnChainRecord | None:
        return self.state.registry.get(info_id)

    def find_transaction(self, tx_hash: bytes) -> tuple[int, SignedTransaction] | None:
        for block in self.blocks:
            for tx in block.transactions:
                if tx.tx_hash == tx_hash:
                    return block.index, tx
        return None


# --------------------------------------------------------------------------
# Costs


def transaction_cost(gas_amount: int, gas_price: float) -> float:
    """Cost of one transaction: gas amount times price per gas unit."""
    if gas_amount < 0 or gas_price < 0:
        raise ValueError("gas amount and price must be non-negative")
    return gas_amount * gas_price


# --------------------------------------------------------------------------
# Pending-time model


class UniformSource(Protocol):
    def random(self) -> float: ...


@dataclass(frozen=True)
class PendingTimeParams:
    """Truncated lognormal for the submit-to-mine delay, in seconds.

    ``mu`` was solved once (root finding on the truncated-mean equation,
    sigma held at 1) so that the mean delay on [lower, upper] comes out at
    the calibrated 16.3 s.
    """

    mu: float = 2.279902179334971
    sigma: float = 1.0
    lower: float = 2.0
    upper: float = 146.0


DEFAULT_PENDING_TIME = PendingTimeParams()

_NORMAL = NormalDist()


def sample_pending_time(
    rng: UniformSource, params: PendingTimeParams = DEFAULT_PENDING_TIME
) -> float:
    """One delay draw by inverse CDF, always inside [lower, upper]."""
    if params.lower > params.upper:
        raise ValueError("lower bound above upper bound")
    if params.lower == params.upper:
        return params.lower
    z_lo = (math.log(params.lower) - params.mu) / params.sigma
    z_hi = (math.log(params.upper) - params.mu) / params.sigma
    c_lo = _NORMAL.cdf(z_lo)
    c_hi = _NORMAL.cdf(z_hi)
    u = rng.random()
    z = _NORMAL.inv_cdf(c_lo + u * (c_hi - c_lo))
    value = math.exp(params.mu + params.sigma * z)
    # inv_cdf at the far tails can overshoot by an ulp; clamp to the support.
    return min(max(value, params.lower), params.upper)


# --------------------------------------------------------------------------
# Snapshots


def _call_to_json(call: ContractCall) -> dict:
    if isinstance(call, RequestAuthorization):
        return {"kind": "request_authorization"}
    if isinstance(call, Vote):
        return {"kind": "vote", "candidate": call.candidate, "approve": call.approve}
    return {
        "kind": "post_shared_info",
        "hash_sum": call.hash_sum.hex(),
        "reference_date": call.reference_date.isoformat(),
        "visibility": sorted(call.visibility),
    }


def _call_from_json(data: dict) -> ContractCall:
    kind = data["kind"]
    if kind == "request_authorization":
        return RequestAuthorization()
    if kind == "vote":
        return Vote(candidate=data["candidate"], approve=bool(data["approve"]))
    if kind == "post_shared_info":
        return PostSharedInfo(
            hash_sum=bytes.fromhex(data["hash_sum"]),
            reference_date=date.fromisoformat(data["reference_date"]),
            visibility=frozenset(data["visibility"]),
        )
    raise ValueError(f"unknown call kind {kind!r}")


def snapshot_chain(ledger: Ledger) -> dict:
    """JSON-ready view of the whole chain, hashes as lowercase hex."""
    blocks = []
    for block in ledger.blocks:
        blocks.append(
            {
                "block_index": block.index,
                "prev_hash": block.prev_hash.hex(),
                "timestamp": block.timestamp,
                "txs": [
                    {
                        "public_key": tx.sender.public_key.hex(),
                        "nonce": tx.nonce,
                        "call": _call_to_json(tx.call),
                        "gas_amount": tx.gas_amount,
                        "gas_price": tx.gas_price,
                        "signature": tx.signature.hex(),
                    }
                    for tx in block.transactions
                ],
                "block_hash": block.block_hash.hex(),
            }
        )
    return {"blocks": blocks}


def _tx_from_json(data: dict) -> SignedTransaction:
    return SignedTransaction(
        sender=Address.from_public_key(bytes.fromhex(data["public_key"])),
        nonce=int(data["nonce"]),
        call=_call_from_json(data["call"]),
        gas_amount=int(data["gas_amount"]),
        gas_price=float(data["gas_price"]),
        signature=bytes.fromhex(data["signature"]),
    )


def restore_chain(snapshot: dict) -> Ledger:
    """Rebuild a ledger from a snapshot and verify it end to end."""
    blocks_json = snapshot.get("blocks", [])
    if not blocks_json:
        raise ValueError("snapshot has no blocks")
    ledger = Ledger.__new__(Ledger)
    ledger.state = ContractState()
    ledger.blocks = []
    ledger._pool = {}
    ledger._submit_seq = 0
    ledger._next_nonce = {}
    for i, bj in enumerate(blocks_json):
        txs = tuple(_tx_from_json(tj) for tj in bj["txs"])
        block = Block(
            index=int(bj["block_index"]),
            prev_hash=bytes.fromhex(bj["prev_hash"]),
            timestamp=float(bj["timestamp"]),
            transactions=txs,
            block_hash=bytes.fromhex(bj["block_hash"]),
        )
        ledger.blocks.append(block)
        if i == 0:
            if len(txs) != 1 or not isinstance(txs[0].call, RequestAuthorization):
                raise ValueError("genesis block must hold the deployer request")
            deployer_id = txs[0].sender.id
            ledger.state.authorized.add(deployer_id)
            ledger.state._emit(EVENT_ADDRESS_AUTHORIZED, deployer_id)
        else:
            for tx in txs:
                ledger._execute(tx, block.index)
        for tx in txs:
            nxt = ledger._next_nonce.get(tx.sender.id, 0)
            ledger._next_nonce[tx.sender.id] = max(nxt, tx.nonce + 1)
    ledger.verify_chain()
    return ledger


def write_snapshot(ledger: Ledger, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(snapshot_chain(ledger), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_snapshot(path: str) -> Ledger:
    with open(path, "r", encoding="utf-8") as fh:
        return restore_chain(json.load(fh))
