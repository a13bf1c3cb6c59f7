"""Simulated public settlement chain.

An account ledger with explicit block production, bounded reorgs, a
finality window, and a single-asset ownership registry. Value is an
unsigned integer unit; each included value transfer pays a flat fee of
`tx_gas * tx.gas_price` which is tracked (not redistributed), so

    sum(balances) + fees_collected == genesis supply

holds after every block. Asset-registry transactions are fee-exempt:
their senders are enclave-held escrow accounts that hold no balance, and
their real-world fees are treated as relayer-sponsored (the gas ledger
still accounts them).

Asset transfers are ordinary signed transactions addressed to
ASSET_REGISTRY_ADDRESS with data = rlp([token_id, recipient]) and zero
value; they apply only if the signer currently owns the token.
"""

import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from sealedbid import rlp
from sealedbid.crypto import keccak_256
from sealedbid.errors import ChainQueryError, CodecError, ConfigError, SignatureError
from sealedbid.transactions import SignedTransaction, recover_signer

ASSET_REGISTRY_ADDRESS = keccak_256(b"sealedbid/asset-registry")[-20:]

REJECT_BAD_SIGNATURE = "bad_signature"
REJECT_REPLAY = "replay_protection"
REJECT_NONCE_GAP = "nonce_gap"
REJECT_INSUFFICIENT = "insufficient_funds"
REJECT_ASSET_OP = "invalid_asset_op"


def asset_transfer_data(token_id: int, recipient: bytes) -> bytes:
    return rlp.encode([rlp.encode_int(token_id), recipient])


def parse_asset_transfer(data: bytes) -> Tuple[int, bytes]:
    item = rlp.decode(data)
    if not (isinstance(item, list) and len(item) == 2
            and isinstance(item[0], bytes) and isinstance(item[1], bytes)
            and len(item[1]) == 20):
        raise CodecError("asset transfer data must be rlp([token_id, recipient])")
    return rlp.decode_int(item[0]), item[1]


@dataclass(frozen=True)
class Block:
    height: int
    parent_hash: bytes
    tx_list: Tuple[SignedTransaction, ...]
    state_root: bytes
    senders: Tuple[bytes, ...] = field(default=(), compare=False)

    def header_hash(self) -> bytes:
        return keccak_256(rlp.encode([
            rlp.encode_int(self.height),
            self.parent_hash,
            self.state_root,
            [tx.raw() for tx in self.tx_list],
        ]))


@dataclass(frozen=True)
class SubmitResult:
    accepted: bool
    reason: Optional[str]
    tx_hash: bytes


@dataclass(frozen=True)
class ReorgResult:
    applied: bool
    reason: Optional[str] = None
    included: Tuple[bytes, ...] = ()
    rejected: Tuple[Tuple[bytes, str], ...] = ()


class _State:
    """Post-block account/asset snapshot; cheap to copy at desk scale."""

    __slots__ = ("balances", "nonces", "assets", "fees_collected")

    def __init__(self, balances=None, nonces=None, assets=None, fees_collected=0):
        self.balances: Dict[bytes, int] = dict(balances or {})
        self.nonces: Dict[bytes, int] = dict(nonces or {})
        self.assets: Dict[int, bytes] = dict(assets or {})
        self.fees_collected = fees_collected

    def copy(self) -> "_State":
        return _State(self.balances, self.nonces, self.assets, self.fees_collected)

    def root(self) -> bytes:
        accounts = sorted(set(self.balances) | set(self.nonces))
        return keccak_256(rlp.encode([
            [[addr, rlp.encode_int(self.balances.get(addr, 0)),
              rlp.encode_int(self.nonces.get(addr, 0))] for addr in accounts],
            [[rlp.encode_int(token), owner]
             for token, owner in sorted(self.assets.items())],
            rlp.encode_int(self.fees_collected),
        ]))


class SimChain:
    def __init__(self, genesis, chain_id: int, finality_depth: int,
                 genesis_assets=None, tx_gas: int = 21_000):
        if finality_depth < 1:
            raise ConfigError("finality_depth must be >= 1")
        if tx_gas < 0:
            raise ConfigError("tx_gas must be non-negative")
        state = _State()
        for addr, balance in self._iter_genesis(genesis):
            if len(addr) != 20:
                raise ConfigError("genesis address must be 20 bytes")
            if balance < 0:
                raise ConfigError("genesis balance must be non-negative")
            if addr in state.balances:
                raise ConfigError("duplicate genesis address 0x%s" % addr.hex())
            state.balances[addr] = balance
        for token_id, owner in (genesis_assets or {}).items():
            if len(owner) != 20:
                raise ConfigError("asset owner must be a 20-byte address")
            state.assets[int(token_id)] = owner

        self.chain_id = chain_id
        self.finality_depth = finality_depth
        self.tx_gas = tx_gas
        self._lock = threading.RLock()
        self._pending: List[Tuple[SignedTransaction, bytes]] = []  # (tx, sender)
        self._snapshots: List[_State] = [state]
        genesis_block = Block(0, b"\x00" * 32, (), state.root())
        self._blocks: List[Block] = [genesis_block]
        self._tx_index: Dict[bytes, int] = {}  # tx_hash -> inclusion height

    @staticmethod
    def _iter_genesis(genesis):
        if hasattr(genesis, "items"):
            return list(genesis.items())
        return list(genesis)

    # -- queries ------------------------------------------------------------

    @property
    def head_height(self) -> int:
        return len(self._blocks) - 1

    def block_at(self, height: int) -> Block:
        with self._lock:
            if not 0 <= height <= self.head_height:
                raise ChainQueryError("unknown height %d" % height)
            return self._blocks[height]

    def balance_at(self, addr: bytes, height: int) -> int:
        with self._lock:
            if not 0 <= height <= self.head_height:
                raise ChainQueryError("unknown height %d" % height)
            return self._snapshots[height].balances.get(addr, 0)

    def asset_owner_at(self, token_id: int, height: int) -> bytes:
        with self._lock:
            if not 0 <= height <= self.head_height:
                raise ChainQueryError("unknown height %d" % height)
            owner = self._snapshots[height].assets.get(token_id)
            if owner is None:
                raise ChainQueryError("unknown token %d at height %d" % (token_id, height))
            return owner

    def balance(self, addr: bytes) -> int:
        return self.balance_at(addr, self.head_height)

    def account_nonce(self, addr: bytes) -> int:
        with self._lock:
            return self._snapshots[-1].nonces.get(addr, 0)

    def next_nonce(self, addr: bytes) -> int:
        """Account nonce plus transactions already pending from `addr`."""
        with self._lock:
            pending = sum(1 for _, sender in self._pending if sender == addr)
            return self.account_nonce(addr) + pending

    def token_owner(self, token_id: int) -> bytes:
        return self.asset_owner_at(token_id, self.head_height)

    def total_supply(self) -> int:
        with self._lock:
            state = self._snapshots[-1]
            return sum(state.balances.values()) + state.fees_collected

    def fees_collected_at(self, height: int) -> int:
        with self._lock:
            if not 0 <= height <= self.head_height:
                raise ChainQueryError("unknown height %d" % height)
            return self._snapshots[height].fees_collected

    def height_of(self, tx_hash: bytes) -> Optional[int]:
        with self._lock:
            return self._tx_index.get(tx_hash)

    def is_confirmed(self, tx_hash: bytes, confirmations: int) -> bool:
        with self._lock:
            height = self._tx_index.get(tx_hash)
            return height is not None and self.head_height >= height + confirmations

    def first_funder(self, addr: bytes, height: int) -> Optional[bytes]:
        """Sender of the first value transfer into `addr`, as of `height`."""
        with self._lock:
            if not 0 <= height <= self.head_height:
                raise ChainQueryError("unknown height %d" % height)
            for block in self._blocks[1:height + 1]:
                for tx, sender in zip(block.tx_list, block.senders):
                    if tx.to == addr and tx.value > 0:
                        return sender
            return None

    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)

    # -- fees ---------------------------------------------------------------

    def tx_fee(self, tx: SignedTransaction) -> int:
        if tx.to == ASSET_REGISTRY_ADDRESS:
            return 0
        return self.tx_gas * tx.gas_price

    # -- mutation -----------------------------------------------------------

    def submit_tx(self, tx: SignedTransaction) -> SubmitResult:
        tx_hash = tx.tx_hash()
        if tx.v < 35 or tx.chain_id != self.chain_id:
            return SubmitResult(False, REJECT_REPLAY, tx_hash)
        try:
            sender = recover_signer(tx)
        except SignatureError:
            return SubmitResult(False, REJECT_BAD_SIGNATURE, tx_hash)
        if tx.to == ASSET_REGISTRY_ADDRESS:
            if tx.value != 0:
                return SubmitResult(False, REJECT_ASSET_OP, tx_hash)
            try:
                parse_asset_transfer(tx.data)
            except CodecError:
                return SubmitResult(False, REJECT_ASSET_OP, tx_hash)
        with self._lock:
            state = self._snapshots[-1]
            pending_from_sender = [p for p, s in self._pending if s == sender]
            expected_nonce = state.nonces.get(sender, 0) + len(pending_from_sender)
            if tx.nonce != expected_nonce:
                return SubmitResult(False, REJECT_NONCE_GAP, tx_hash)
            committed = sum(p.value + self.tx_fee(p) for p in pending_from_sender)
            spendable = state.balances.get(sender, 0) - committed
            if tx.value + self.tx_fee(tx) > spendable:
                return SubmitResult(False, REJECT_INSUFFICIENT, tx_hash)
            self._pending.append((tx, sender))
            return SubmitResult(True, None, tx_hash)

    def mine_block(self) -> Block:
        with self._lock:
            state = self._snapshots[-1].copy()
            applied: List[SignedTransaction] = []
            senders: List[bytes] = []
            for tx, sender in self._pending:
                if self._apply(state, tx, sender):
                    applied.append(tx)
                    senders.append(sender)
            self._pending = []
            block = Block(
                height=self.head_height + 1,
                parent_hash=self._blocks[-1].header_hash(),
                tx_list=tuple(applied),
                state_root=state.root(),
                senders=tuple(senders),
            )
            self._blocks.append(block)
            self._snapshots.append(state)
            for tx in applied:
                self._tx_index[tx.tx_hash()] = block.height
            return block

    def _apply(self, state: _State, tx: SignedTransaction, sender: bytes) -> bool:
        """Apply `tx` to `state` in place; invalidated transactions drop."""
        if tx.nonce != state.nonces.get(sender, 0):
            return False
        fee = self.tx_fee(tx)
        if state.balances.get(sender, 0) < tx.value + fee:
            return False
        if tx.to == ASSET_REGISTRY_ADDRESS:
            try:
                token_id, recipient = parse_asset_transfer(tx.data)
            except CodecError:
                return False
            if state.assets.get(token_id) != sender:
                return False
            state.assets[token_id] = recipient
        else:
            state.balances[tx.to] = state.balances.get(tx.to, 0) + tx.value
        state.balances[sender] = state.balances.get(sender, 0) - tx.value - fee
        state.fees_collected += fee
        state.nonces[sender] = tx.nonce + 1
        return True

    def reorg(self, depth: int, replacement_txs=()) -> ReorgResult:
        """Replace the last `depth` blocks, re-mining with `replacement_txs`.

        Transactions from the replaced blocks are dropped unless they
        appear in the replacement list. The untouched pending pool
        survives the reorg.
        """
        with self._lock:
            if depth == 0:
                return ReorgResult(applied=True)
            if depth > min(self.finality_depth, self.head_height):
                return ReorgResult(applied=False, reason="finality")
            removed = self._blocks[-depth:]
            del self._blocks[-depth:]
            del self._snapshots[-depth:]
            for block in removed:
                for tx in block.tx_list:
                    self._tx_index.pop(tx.tx_hash(), None)
            stashed = self._pending
            self._pending = []
            included, rejected = [], []
            for tx in replacement_txs:
                result = self.submit_tx(tx)
                if result.accepted:
                    included.append(result.tx_hash)
                else:
                    rejected.append((result.tx_hash, result.reason))
            for _ in range(depth):
                self.mine_block()
            self._pending = stashed
            return ReorgResult(applied=True, included=tuple(included),
                               rejected=tuple(rejected))
