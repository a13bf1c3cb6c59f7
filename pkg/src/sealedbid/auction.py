"""Sealed-bid auction lifecycle running inside the enclave.

States advance Init -> Deployed -> Open -> Closed -> Resolved -> Claimed;
failed checks leave the state unchanged (verification retries, early
closes, aborted resolutions), so the transition relation is exactly the
forward edges plus self-loops.

Bids are escrow balances frozen at the deadline height. Resolution
queries each registered escrow once at the cutoff for winner selection,
then constructs self-funding settlement transactions: the winner's
cutoff balance (minus the flat fee) pays the auctioneer, losers are
refunded their full observed balance, and any post-cutoff excess returns
to the winner's funding source. Asset-registry transfers carry no chain
fee (escrow accounts hold no balance; see chain module notes).

Equal top bids break ties by the earliest height at which the escrow
first reached its cutoff balance (located by binary search over
historical balance queries, valid because escrows only ever receive
funds before resolution), then by ascending escrow address bytes - both
auditable from public chain data once the bidder set is disclosed.
"""

import enum
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from sealedbid.chain import ASSET_REGISTRY_ADDRESS, SimChain, asset_transfer_data
from sealedbid.enclave import Enclave, Envelope
from sealedbid.errors import ConfigError, RegistrationError, StateError
from sealedbid.events import EventLog, canonical, hx, unhx
from sealedbid.gas import (
    GasLedger,
    LAYER_EXECUTION,
    MODE_EXHAUSTIVE,
    MODE_PROPOSER,
    OP_BID,
    OP_DEPLOY,
    OP_END,
    OP_START,
    default_pricing,
)
from sealedbid.quorum import QuorumClient
from sealedbid.transactions import SignedTransaction, UnsignedTx


class AuctionState(enum.Enum):
    INIT = "Init"
    DEPLOYED = "Deployed"
    OPEN = "Open"
    CLOSED = "Closed"
    RESOLVED = "Resolved"
    CLAIMED = "Claimed"


# the lifecycle edge set; anything else observed is a bug
LEGAL_TRANSITIONS = frozenset([
    (AuctionState.INIT, AuctionState.DEPLOYED),
    (AuctionState.DEPLOYED, AuctionState.OPEN),
    (AuctionState.OPEN, AuctionState.CLOSED),
    (AuctionState.CLOSED, AuctionState.RESOLVED),
    (AuctionState.RESOLVED, AuctionState.CLAIMED),
])


@dataclass(frozen=True)
class AuctionConfig:
    deadline_height: int
    auctioneer_address: bytes
    token_id: int
    gas_price: int = 1
    kappa: int = 6
    resolution_mode: str = MODE_EXHAUSTIVE
    proposal_window: int = 10
    settlement_tx_gas: int = 21_000
    chain_id: int = 1

    def __post_init__(self):
        if self.deadline_height < 1:
            raise ConfigError("deadline_height must be positive")
        if len(self.auctioneer_address) != 20:
            raise ConfigError("auctioneer_address must be 20 bytes")
        if self.resolution_mode not in (MODE_EXHAUSTIVE, MODE_PROPOSER):
            raise ConfigError("unknown resolution mode %r" % self.resolution_mode)
        if self.kappa < 0 or self.gas_price < 0 or self.proposal_window < 1:
            raise ConfigError("kappa/gas_price/proposal_window out of range")

    @property
    def settlement_fee(self) -> int:
        return self.settlement_tx_gas * self.gas_price


@dataclass(frozen=True)
class RegistryEntry:
    index: int
    handle: str
    escrow_address: bytes
    encryption_key: bytes
    claim_address: bytes
    registration_height: int

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "handle": self.handle,
            "escrow_address": hx(self.escrow_address),
            "encryption_key": hx(self.encryption_key),
            "claim_address": hx(self.claim_address),
            "registration_height": self.registration_height,
        }

    @classmethod
    def from_record(cls, r: dict) -> "RegistryEntry":
        return cls(r["index"], r["handle"], unhx(r["escrow_address"]),
                   unhx(r["encryption_key"]), unhx(r["claim_address"]),
                   r["registration_height"])


@dataclass(frozen=True)
class SettlementTx:
    role: str  # asset_claim | winner_payment | refund | excess_return
    tx: SignedTransaction

    def to_record(self) -> dict:
        return {"role": self.role, "raw": self.tx.raw_hex()}


@dataclass
class ConservationEntry:
    escrow: bytes
    balance_observed: int
    transferred: int = 0
    fees: int = 0
    dust: int = 0

    def balanced(self) -> bool:
        return self.transferred + self.fees + self.dust == self.balance_observed


@dataclass
class ConservationLedger:
    entries: List[ConservationEntry] = field(default_factory=list)

    def balanced(self) -> bool:
        return all(e.balanced() for e in self.entries)

    def totals(self) -> dict:
        return {
            "balances": sum(e.balance_observed for e in self.entries),
            "transferred": sum(e.transferred for e in self.entries),
            "fees": sum(e.fees for e in self.entries),
            "dust": sum(e.dust for e in self.entries),
        }


@dataclass
class ResolutionResult:
    winner_escrow: Optional[bytes]
    winning_amount: int
    cutoff_height: int
    settlement_txs: List[SettlementTx]
    bidder_set_disclosure: List[bytes]
    conservation: ConservationLedger

    @property
    def has_winner(self) -> bool:
        return self.winner_escrow is not None


class AuctionInstance:
    """One auction; all operations run inside the owning enclave."""

    def __init__(self, enclave: Enclave, config: AuctionConfig,
                 events: Optional[EventLog] = None,
                 gas: Optional[GasLedger] = None):
        self.enclave = enclave
        self.config = config
        self.events = events if events is not None else EventLog()
        self.gas = gas if gas is not None else GasLedger(
            default_pricing(config.resolution_mode))
        self.state = AuctionState.INIT
        self.transitions: List[Tuple[AuctionState, AuctionState]] = []
        self.resolution: Optional[ResolutionResult] = None
        self.auction_id: Optional[str] = None
        self._asset_handle: Optional[str] = None
        self.asset_escrow_address: Optional[bytes] = None
        self._proposal_phase = None
        self.register_call_count = 0

    # -- lifecycle helpers -----------------------------------------------------

    def _set_state(self, new_state: AuctionState) -> None:
        self.transitions.append((self.state, new_state))
        self.state = new_state

    def _require_state(self, expected: AuctionState, op: str) -> None:
        if self.state is not expected:
            raise StateError("%s requires state %s, not %s"
                             % (op, expected.value, self.state.value))

    def _emit(self, event: str, **fields) -> dict:
        record = {"event": event, "seq": len(self.events.records)}
        record.update(fields)
        report = self.enclave.attest(canonical(record).encode())
        record["attestation"] = report.to_record()
        return self.events.append(record)

    # -- sealed registry ----------------------------------------------------------

    @property
    def _registry_label(self) -> str:
        return "auction/%s/registry" % self.auction_id

    def _load_registry(self) -> List[RegistryEntry]:
        raw = self.enclave.seal_get(self._registry_label)
        return [RegistryEntry.from_record(r) for r in json.loads(raw)]

    def _store_registry(self, entries: List[RegistryEntry]) -> None:
        payload = canonical([e.to_record() for e in entries])
        self.enclave.seal_put(self._registry_label, payload.encode())

    @property
    def registered_count(self) -> int:
        return len(self._load_registry())

    def disclosed_bidders(self) -> List[bytes]:
        """Escrow addresses; readable only once the auction is resolved."""
        if self.state not in (AuctionState.RESOLVED, AuctionState.CLAIMED):
            raise StateError("bidder set is sealed until resolution")
        return [e.escrow_address for e in self._load_registry()]

    # -- operations ------------------------------------------------------------

    @classmethod
    def deploy(cls, enclave: Enclave, config: AuctionConfig,
               quorum: QuorumClient, events: Optional[EventLog] = None,
               gas: Optional[GasLedger] = None) -> "AuctionInstance":
        instance = cls(enclave, config, events, gas)
        head, _ = quorum.query_height()
        if config.deadline_height <= head:
            raise ConfigError("deadline height %d is not past the settlement head %d"
                              % (config.deadline_height, head))
        instance.auction_id = enclave.random(4).hex()
        instance._store_registry([])
        instance._set_state(AuctionState.DEPLOYED)
        instance._emit(
            "Deployed",
            auction_id=instance.auction_id,
            deadline_height=config.deadline_height,
            token_id=config.token_id,
            resolution_mode=config.resolution_mode,
            kappa=config.kappa,
            chain_id=config.chain_id,
            auctioneer=hx(config.auctioneer_address),
            code_hash=hx(enclave.code_hash),
            attestation_address=hx(enclave.attestation_address),
            input_public_key=hx(enclave.input_public_key),
        )
        instance.gas.charge(LAYER_EXECUTION, OP_DEPLOY, actor="auctioneer")
        return instance

    def setup(self) -> bytes:
        """Create (or return) the asset escrow address; idempotent."""
        self._require_state(AuctionState.DEPLOYED, "setup")
        if self._asset_handle is not None:
            return self.asset_escrow_address
        handle, address = self.enclave.generate_keypair()
        self._asset_handle = handle
        self.asset_escrow_address = address
        self.enclave.seal_put("auction/%s/asset" % self.auction_id, handle.encode())
        self._emit("AssetEscrowAddress", address=hx(address))
        self.gas.charge(LAYER_EXECUTION, OP_START, actor="auctioneer")
        return address

    def verify_asset_escrow(self, quorum: QuorumClient) -> bool:
        """Open the auction iff the token is escrowed at a confirmed height."""
        self._require_state(AuctionState.DEPLOYED, "verify_asset_escrow")
        if self._asset_handle is None:
            raise StateError("setup has not been called")
        head, _ = quorum.query_height()
        observed = max(0, head - self.config.kappa)
        owner, _ = quorum.query_asset_owner(self.config.token_id, observed)
        if owner != self.asset_escrow_address:
            return False
        self._set_state(AuctionState.OPEN)
        self._emit("Open", verified_height=observed,
                   token_id=self.config.token_id)
        return True

    def register_bidder(self, quorum: QuorumClient,
                        registration: Envelope) -> Envelope:
        """One enclave call per bidder: returns the escrow address envelope."""
        self._require_state(AuctionState.OPEN, "register_bidder")
        self.register_call_count += 1
        head, _ = quorum.query_height()
        if head >= self.config.deadline_height:
            raise RegistrationError("registration after the deadline is rejected")
        try:
            payload = json.loads(self.enclave.decrypt_input(registration))
            encryption_key = unhx(payload["encryption_key"])
            claim_address = unhx(payload["claim_address"])
        except Exception as exc:
            raise RegistrationError("malformed registration payload") from exc
        if len(encryption_key) != 32 or len(claim_address) != 20:
            raise RegistrationError("bad key or claim address length")
        entries = self._load_registry()
        handle, escrow_address = self.enclave.generate_keypair()
        entry = RegistryEntry(
            index=len(entries),
            handle=handle,
            escrow_address=escrow_address,
            encryption_key=encryption_key,
            claim_address=claim_address,
            registration_height=head,
        )
        entries.append(entry)
        self._store_registry(entries)
        response = canonical({
            "escrow_address": hx(escrow_address),
            "registration_index": entry.index,
        }).encode()
        envelope = self.enclave.encrypt_to(encryption_key, response)
        self._emit("BidderEnvelope", registration_index=entry.index,
                   **envelope.to_record())
        self.gas.charge(LAYER_EXECUTION, OP_BID, actor="bidder-%d" % entry.index)
        return envelope

    def close(self, quorum: QuorumClient) -> bool:
        """Freeze the bidder set once the deadline is kappa-confirmed."""
        self._require_state(AuctionState.OPEN, "close")
        if not quorum.confirm_deadline(self.config.deadline_height):
            return False
        count = len(self._load_registry())
        self._set_state(AuctionState.CLOSED)
        self._emit("Closed", bidder_count=count,
                   deadline_height=self.config.deadline_height)
        return True

    # -- winner determination ---------------------------------------------------

    def _cutoff_balance(self, quorum: QuorumClient, escrow: bytes) -> int:
        balance, _ = quorum.query_balance(escrow, self.config.deadline_height)
        return balance

    def _first_reach_height(self, quorum: QuorumClient, escrow: bytes,
                            target: int) -> int:
        """Earliest height with balance == target (balances are monotone)."""
        low, high = 1, self.config.deadline_height
        while low < high:
            mid = (low + high) // 2
            balance, _ = quorum.query_balance(escrow, mid)
            if balance >= target:
                high = mid
            else:
                low = mid + 1
        return low

    def _determine_winner(self, quorum: QuorumClient):
        """One cutoff query per registered escrow; ties need extra queries."""
        entries = self._load_registry()
        balances = [(entry, self._cutoff_balance(quorum, entry.escrow_address))
                    for entry in entries]
        funded = [(entry, bal) for entry, bal in balances if bal > 0]
        if not funded:
            return None, 0
        top = max(bal for _, bal in funded)
        tied = [entry for entry, bal in funded if bal == top]
        if len(tied) == 1:
            return tied[0], top
        ranked = sorted(
            tied,
            key=lambda e: (self._first_reach_height(quorum, e.escrow_address, top),
                           e.escrow_address),
        )
        return ranked[0], top

    def rank_key(self, quorum: QuorumClient, entry: RegistryEntry,
                 amount: int) -> Tuple[int, bytes]:
        """Tie-break key (reach height, address); lower wins."""
        return (self._first_reach_height(quorum, entry.escrow_address, amount),
                entry.escrow_address)

    # -- settlement construction ---------------------------------------------------

    def _sign_transfer(self, handle: str, nonce: int, to: bytes,
                       value: int, data: bytes = b"") -> SignedTransaction:
        tx = UnsignedTx(
            nonce=nonce,
            gas_price=self.config.gas_price,
            gas_limit=self.config.settlement_tx_gas,
            to=to,
            value=value,
            data=data,
            chain_id=self.config.chain_id,
        )
        return self.enclave.sign_with(handle, tx, self.config.chain_id)

    def _construct_resolution(self, winner: Optional[RegistryEntry],
                              winner_amount: int,
                              quorum: QuorumClient) -> ResolutionResult:
        config = self.config
        head, _ = quorum.query_height()
        observed = max(config.deadline_height, head - config.kappa)
        fee = config.settlement_fee
        entries = self._load_registry()
        txs: List[SettlementTx] = []
        conservation = ConservationLedger()

        # the auctioned asset moves first: to the winner's claim address,
        # or back to the auctioneer when nobody bid
        recipient = winner.claim_address if winner else config.auctioneer_address
        asset_tx = self._sign_transfer(
            self._asset_handle, 0, ASSET_REGISTRY_ADDRESS, 0,
            asset_transfer_data(config.token_id, recipient))
        txs.append(SettlementTx("asset_claim", asset_tx))

        for entry in entries:
            full, _ = quorum.query_balance(entry.escrow_address, observed)
            record = ConservationEntry(entry.escrow_address, full)
            conservation.entries.append(record)
            if full == 0:
                continue
            source, _ = quorum.query_funding_source(entry.escrow_address, observed)
            refund_to = source if source else None
            nonce = 0
            if winner is not None and entry.index == winner.index:
                payment = winner_amount - fee
                if payment > 0:
                    txs.append(SettlementTx("winner_payment", self._sign_transfer(
                        entry.handle, nonce, config.auctioneer_address, payment)))
                    record.transferred += payment
                    record.fees += fee
                    nonce += 1
                else:
                    record.dust += winner_amount
                excess = max(0, full - winner_amount)
                if excess > fee and refund_to is not None:
                    txs.append(SettlementTx("excess_return", self._sign_transfer(
                        entry.handle, nonce, refund_to, excess - fee)))
                    record.transferred += excess - fee
                    record.fees += fee
                elif excess:
                    record.dust += excess
                # if full < winner_amount (possible only when the escrow was
                # drained by a breach) the entry is left unbalanced on purpose
            else:
                refund = full - fee
                if refund > 0 and refund_to is not None:
                    txs.append(SettlementTx("refund", self._sign_transfer(
                        entry.handle, nonce, refund_to, refund)))
                    record.transferred += refund
                    record.fees += fee
                else:
                    record.dust += full

        return ResolutionResult(
            winner_escrow=winner.escrow_address if winner else None,
            winning_amount=winner_amount if winner else 0,
            cutoff_height=config.deadline_height,
            settlement_txs=txs,
            bidder_set_disclosure=[e.escrow_address for e in entries],
            conservation=conservation,
        )

    def _commit_resolution(self, result: ResolutionResult) -> None:
        self.resolution = result
        self._set_state(AuctionState.RESOLVED)
        self._emit(
            "Resolved",
            winner_escrow=hx(result.winner_escrow) if result.has_winner else None,
            winning_amount=result.winning_amount,
            cutoff_height=result.cutoff_height,
            payloads=[stx.to_record() for stx in result.settlement_txs],
            bidder_set=[hx(a) for a in result.bidder_set_disclosure],
        )

    def resolve(self, quorum: QuorumClient) -> ResolutionResult:
        """Exhaustive resolution; on quorum failure the state stays Closed."""
        self._require_state(AuctionState.CLOSED, "resolve")
        if self.config.resolution_mode != MODE_EXHAUSTIVE:
            raise StateError("resolve is only available in exhaustive mode")
        winner, amount = self._determine_winner(quorum)
        result = self._construct_resolution(winner, amount, quorum)
        self._commit_resolution(result)
        self.gas.charge(LAYER_EXECUTION, OP_END, actor="resolver",
                        n_bidders=len(result.bidder_set_disclosure))
        return result

    # -- post-resolution ---------------------------------------------------------

    def settlement_payloads(self) -> List[str]:
        """Raw hex payloads, submittable by any relayer."""
        if self.state not in (AuctionState.RESOLVED, AuctionState.CLAIMED):
            raise StateError("no settlement payloads before resolution")
        return [stx.tx.raw_hex() for stx in self.resolution.settlement_txs]

    def finalize(self, chain: SimChain) -> AuctionState:
        """Claimed once every settlement tx is kappa-deep; idempotent poll."""
        if self.state is AuctionState.CLAIMED:
            return self.state
        self._require_state(AuctionState.RESOLVED, "finalize")
        kappa = self.config.kappa
        heights = {}
        for stx in self.resolution.settlement_txs:
            tx_hash = stx.tx.tx_hash()
            if not chain.is_confirmed(tx_hash, kappa):
                return self.state
            heights[stx.to_record()["raw"]] = chain.height_of(tx_hash)
        self._set_state(AuctionState.CLAIMED)
        self._emit("Claimed", inclusion_heights=heights)
        return self.state

    # -- fuzzing support -----------------------------------------------------------

    def state_fingerprint(self) -> tuple:
        """Cheap digest of externally visible state, for mutation checks."""
        return (
            self.state,
            self.auction_id,
            self.asset_escrow_address,
            len(self.events.records),
            None if self.resolution is None else
            (self.resolution.winner_escrow, self.resolution.winning_amount),
        )
