"""Settlement chain: ledger rules, history queries, reorgs, conservation."""

import random
import threading

import pytest

from sealedbid.chain import (
    ASSET_REGISTRY_ADDRESS,
    SimChain,
    asset_transfer_data,
)
from sealedbid.crypto import secp256k1
from sealedbid.errors import ChainQueryError, ConfigError
from sealedbid.transactions import UnsignedTx, derive_address, sign_tx

CHAIN_ID = 1
GAS = 21_000


def addr_of(key):
    return derive_address(secp256k1.public_key(key))


KEY_A, KEY_B, KEY_C = 1001, 1002, 1003
A, B, C = addr_of(KEY_A), addr_of(KEY_B), addr_of(KEY_C)


def make_chain(finality=6, genesis=None, assets=None, chain_id=CHAIN_ID):
    balances = {A: 10_000_000, B: 10_000_000} if genesis is None else genesis
    return SimChain(balances, chain_id=chain_id, finality_depth=finality,
                    genesis_assets=assets)


def transfer(chain, key, to, value, nonce=None, gas_price=1, chain_id=CHAIN_ID,
             data=b""):
    sender = addr_of(key)
    tx = UnsignedTx(
        nonce=chain.next_nonce(sender) if nonce is None else nonce,
        gas_price=gas_price, gas_limit=GAS, to=to, value=value,
        data=data, chain_id=chain_id)
    return sign_tx(tx, key, chain_id)


# -- creation -----------------------------------------------------------------

def test_empty_genesis():
    chain = SimChain({}, chain_id=1, finality_depth=6)
    assert chain.head_height == 0
    assert chain.total_supply() == 0


def test_genesis_identity():
    chain = SimChain({A: 100}, chain_id=1, finality_depth=6)
    assert chain.balance_at(A, 0) == 100


def test_two_account_supply_matches_sum():
    chain = SimChain({A: 100, B: 250}, chain_id=1, finality_depth=6)
    assert chain.total_supply() == 350


def test_duplicate_genesis_address_rejected():
    with pytest.raises(ConfigError):
        SimChain([(A, 5), (A, 6)], chain_id=1, finality_depth=6)


def test_genesis_validation():
    with pytest.raises(ConfigError):
        SimChain({A: -1}, chain_id=1, finality_depth=6)
    with pytest.raises(ConfigError):
        SimChain({}, chain_id=1, finality_depth=0)
    with pytest.raises(ConfigError):
        SimChain({b"\x01": 5}, chain_id=1, finality_depth=6)


# -- submission ---------------------------------------------------------------

def test_valid_transfer_accepted_and_applied():
    chain = make_chain()
    result = chain.submit_tx(transfer(chain, KEY_A, C, 5))
    assert result.accepted
    chain.mine_block()
    assert chain.balance(C) == 5
    assert chain.balance(A) == 10_000_000 - 5 - GAS


def test_chain_id_mismatch_rejected_as_replay():
    chain = make_chain()
    foreign = transfer(chain, KEY_A, C, 5, chain_id=2)
    result = chain.submit_tx(foreign)
    assert not result.accepted and result.reason == "replay_protection"


def test_cross_chain_replay_isolation():
    chain1 = make_chain(chain_id=1)
    chain2 = make_chain(chain_id=2)
    tx = transfer(chain1, KEY_A, C, 5, chain_id=1)
    assert chain1.submit_tx(tx).accepted
    assert chain2.submit_tx(tx).reason == "replay_protection"


def test_overdraft_rejected():
    chain = make_chain(genesis={A: 30_000})
    result = chain.submit_tx(transfer(chain, KEY_A, C, 20_000))
    assert result.reason == "insufficient_funds"  # 20000 + fee > 30000


def test_fee_counts_against_balance():
    chain = make_chain(genesis={A: GAS + 10})
    assert chain.submit_tx(transfer(chain, KEY_A, C, 10)).accepted
    assert chain.submit_tx(transfer(chain, KEY_A, C, 11)).reason \
        == "nonce_gap"  # second tx has stale nonce anyway
    chain2 = make_chain(genesis={A: GAS + 10})
    assert chain2.submit_tx(transfer(chain2, KEY_A, C, 11)).reason \
        == "insufficient_funds"


def test_nonce_gap_rejected():
    chain = make_chain()
    result = chain.submit_tx(transfer(chain, KEY_A, C, 5, nonce=3))
    assert result.reason == "nonce_gap"


def test_bad_signature_rejected():
    chain = make_chain()
    tx = transfer(chain, KEY_A, C, 5)
    from sealedbid.transactions import SignedTransaction
    forged = SignedTransaction(tx.nonce, tx.gas_price, tx.gas_limit, tx.to,
                               tx.value + 1, tx.data, tx.v, tx.r,
                               secp256k1.N - tx.s)
    assert chain.submit_tx(forged).reason == "bad_signature"


def test_pending_nonce_chain_in_one_block():
    chain = make_chain()
    assert chain.submit_tx(transfer(chain, KEY_A, C, 5)).accepted
    assert chain.submit_tx(transfer(chain, KEY_A, C, 7)).accepted  # nonce n+1
    block = chain.mine_block()
    assert len(block.tx_list) == 2
    assert chain.balance(C) == 12
    assert chain.account_nonce(A) == 2


# -- mining ----------------------------------------------------------------------

def test_empty_pool_mines_empty_block():
    chain = make_chain()
    block = chain.mine_block()
    assert block.height == 1 and block.tx_list == ()


def test_sequential_apply_oracle():
    """Block application equals a hand-rolled sequential replay."""
    rng = random.Random(17)
    chain = make_chain()
    expected = {A: 10_000_000, B: 10_000_000}
    fees = 0
    for _ in range(5):
        for _ in range(rng.randrange(0, 4)):
            key, sender = rng.choice([(KEY_A, A), (KEY_B, B)])
            value = rng.randrange(1, 2000)
            if chain.submit_tx(transfer(chain, key, C, value)).accepted:
                expected[sender] -= value + GAS
                expected[C] = expected.get(C, 0) + value
                fees += GAS
        chain.mine_block()
    for account, balance in expected.items():
        assert chain.balance(account) == balance
    assert chain.fees_collected_at(chain.head_height) == fees


def test_value_and_asset_transfer_in_one_block():
    chain = make_chain(assets={7: A})
    chain.submit_tx(transfer(chain, KEY_A, C, 9))
    chain.submit_tx(transfer(chain, KEY_A, ASSET_REGISTRY_ADDRESS, 0,
                             data=asset_transfer_data(7, B)))
    chain.mine_block()
    assert chain.balance(C) == 9
    assert chain.token_owner(7) == B


def test_invalidated_pending_tx_dropped_at_mining():
    chain = make_chain(genesis={A: 2 * GAS + 100})
    # both pass admission individually, but together they overdraw
    t1 = transfer(chain, KEY_A, C, 90)
    assert chain.submit_tx(t1).accepted
    t2 = transfer(chain, KEY_A, B, 90, nonce=1)
    chain._pending.append((t2, A))  # bypass admission to force the conflict
    block = chain.mine_block()
    assert len(block.tx_list) == 1


# -- asset registry ----------------------------------------------------------------

def test_asset_minted_at_genesis():
    chain = make_chain(assets={5: A})
    assert chain.asset_owner_at(5, 0) == A


def test_asset_transfer_history():
    chain = make_chain(assets={5: A})
    chain.mine_block()  # height 1
    chain.submit_tx(transfer(chain, KEY_A, ASSET_REGISTRY_ADDRESS, 0,
                             data=asset_transfer_data(5, B)))
    chain.mine_block()  # height 2: transferred
    assert chain.asset_owner_at(5, 1) == A
    assert chain.asset_owner_at(5, 2) == B


def test_asset_transfer_requires_ownership():
    chain = make_chain(assets={5: A})
    chain.submit_tx(transfer(chain, KEY_B, ASSET_REGISTRY_ADDRESS, 0,
                             data=asset_transfer_data(5, B)))
    chain.mine_block()
    assert chain.token_owner(5) == A  # dropped at apply time


def test_malformed_asset_op_rejected():
    chain = make_chain()
    assert chain.submit_tx(transfer(chain, KEY_A, ASSET_REGISTRY_ADDRESS, 0,
                                    data=b"junk")).reason == "invalid_asset_op"
    assert chain.submit_tx(transfer(chain, KEY_A, ASSET_REGISTRY_ADDRESS, 5,
                                    data=asset_transfer_data(5, B))
                           ).reason == "invalid_asset_op"


def test_unknown_token_query_errors():
    chain = make_chain()
    with pytest.raises(ChainQueryError):
        chain.asset_owner_at(99, 0)


# -- historical queries ----------------------------------------------------------------

def test_unfunded_address_is_zero_everywhere():
    chain = make_chain()
    chain.mine_block()
    assert chain.balance_at(C, 0) == 0
    assert chain.balance_at(C, 1) == 0


def test_balance_at_replay_oracle():
    chain = make_chain()
    chain.mine_block()
    chain.mine_block()
    chain.submit_tx(transfer(chain, KEY_A, C, 7))
    chain.mine_block()  # height 3: +7
    assert chain.balance_at(C, 2) == 0
    assert chain.balance_at(C, 3) == 7


def test_late_topup_excluded_at_cutoff():
    chain = make_chain()
    chain.mine_block(), chain.mine_block()
    chain.submit_tx(transfer(chain, KEY_A, C, 7))
    chain.mine_block()  # height 3
    chain.mine_block()  # height 4 (the cutoff)
    chain.submit_tx(transfer(chain, KEY_A, C, 2))
    chain.mine_block()  # height 5
    assert chain.balance_at(C, 4) == 7
    assert chain.balance_at(C, 5) == 9


def test_unknown_height_errors():
    chain = make_chain()
    with pytest.raises(ChainQueryError):
        chain.balance_at(A, 5)


def test_first_funder():
    chain = make_chain()
    assert chain.first_funder(C, 0) is None
    chain.submit_tx(transfer(chain, KEY_B, C, 3))
    chain.mine_block()
    chain.submit_tx(transfer(chain, KEY_A, C, 5))
    chain.mine_block()
    assert chain.first_funder(C, chain.head_height) == B


# -- conservation and determinism ----------------------------------------------------

def test_supply_conserved_over_random_blocks():
    rng = random.Random(23)
    chain = make_chain()
    initial = chain.total_supply()
    keys = [KEY_A, KEY_B]
    for _ in range(12):
        for _ in range(rng.randrange(0, 5)):
            chain.submit_tx(transfer(chain, rng.choice(keys),
                                     rng.choice([A, B, C]),
                                     rng.randrange(0, 5000)))
        chain.mine_block()
        assert chain.total_supply() == initial


def test_identical_histories_produce_identical_roots():
    def build():
        chain = make_chain(assets={3: A})
        chain.submit_tx(transfer(chain, KEY_A, C, 5))
        chain.mine_block()
        chain.submit_tx(transfer(chain, KEY_B, C, 9))
        chain.submit_tx(transfer(chain, KEY_A, ASSET_REGISTRY_ADDRESS, 0,
                                 data=asset_transfer_data(3, C)))
        chain.mine_block()
        return [chain.block_at(h).state_root for h in range(chain.head_height + 1)]
    assert build() == build()


# -- reorgs ---------------------------------------------------------------------------

def test_reorg_depth_zero_is_noop():
    chain = make_chain()
    chain.mine_block()
    root = chain.block_at(1).state_root
    result = chain.reorg(0)
    assert result.applied
    assert chain.block_at(1).state_root == root


def test_reorg_beyond_finality_refused():
    chain = make_chain(finality=3)
    for _ in range(6):
        chain.mine_block()
    result = chain.reorg(4)
    assert not result.applied and result.reason == "finality"
    assert chain.reorg(3).applied


def test_reorg_cannot_touch_genesis():
    chain = make_chain(finality=6)
    chain.mine_block()
    assert not chain.reorg(2).applied


def test_reorg_removing_funding_changes_cutoff_balance():
    chain = make_chain()
    chain.submit_tx(transfer(chain, KEY_A, C, 7))
    chain.mine_block()  # height 1 carries the funding
    assert chain.balance_at(C, 1) == 7
    result = chain.reorg(1, replacement_txs=())
    assert result.applied
    assert chain.head_height == 1
    assert chain.balance_at(C, 1) == 0


def test_reorg_reincludes_replacements():
    chain = make_chain()
    tx = transfer(chain, KEY_A, C, 7)
    chain.submit_tx(tx)
    chain.mine_block()
    chain.mine_block()
    assert chain.reorg(2, replacement_txs=[tx]).applied
    assert chain.head_height == 2
    assert chain.balance_at(C, 1) == 7  # re-landed in the first re-mined block
    assert chain.height_of(tx.tx_hash()) == 1


def test_finalized_history_immutable_under_permitted_reorgs():
    rng = random.Random(5)
    chain = make_chain(finality=3)
    for _ in range(10):
        if rng.random() < 0.7:
            chain.submit_tx(transfer(chain, KEY_A, C, rng.randrange(1, 100)))
        chain.mine_block()
    finalized_height = chain.head_height - chain.finality_depth
    frozen = [chain.balance_at(C, h) for h in range(finalized_height + 1)]
    for depth in (1, 2, 3, 4):
        chain.reorg(depth)  # depth 4 is refused; 1-3 apply
        assert [chain.balance_at(C, h)
                for h in range(finalized_height + 1)] == frozen


def test_pending_pool_survives_reorg():
    chain = make_chain()
    chain.mine_block()
    chain.submit_tx(transfer(chain, KEY_B, C, 11))
    assert chain.reorg(1).applied
    assert chain.pending_count() == 1
    chain.mine_block()
    assert chain.balance(C) == 11


# -- concurrency -----------------------------------------------------------------------

def test_concurrent_submissions_are_safe():
    keys = [3000 + i for i in range(8)]
    genesis = {addr_of(k): 1_000_000 for k in keys}
    chain = SimChain(genesis, chain_id=1, finality_depth=6)
    prepared = []
    for k in keys:
        for nonce in range(10):
            prepared.append(transfer(chain, k, C, 10, nonce=nonce))

    def submit(txs):
        for tx in txs:
            chain.submit_tx(tx)

    threads = [threading.Thread(target=submit, args=(prepared[i::4],))
               for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    chain.mine_block()
    assert chain.balance(C) == 8 * 10 * 10
    assert chain.total_supply() == 8 * 1_000_000
