"""Scenario runner: drives full auction lifecycles and audits the outcome.

The runner owns everything outside the enclave: wallets, the settlement
chain, endpoint processes, the relayer, and fault injection. It executes
a deterministic schedule derived from scripted block heights, then runs
an invariant suite (oracle agreement, conservation, confidentiality,
audit completeness, non-interactivity) and assembles a RunReport.

`oracle_resolve` is the independent verifier: it recomputes the winner
from the scripted funding plan alone, bypassing the enclave, the chain,
and the quorum client.
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from sealedbid.auction import (
    AuctionConfig,
    AuctionInstance,
    AuctionState,
    LEGAL_TRANSITIONS,
)
from sealedbid.chain import ASSET_REGISTRY_ADDRESS, SimChain, asset_transfer_data
from sealedbid.crypto import secp256k1
from sealedbid.enclave import (
    DeterministicStream,
    Enclave,
    decrypt_envelope,
    encrypt_to_key,
)
from sealedbid.errors import ConfigError, SealedStoreIntegrity
from sealedbid.events import AuditLog, EventLog, canonical, hx, unhx
from sealedbid.gas import (
    GasLedger,
    LAYER_SETTLEMENT,
    MODE_PROPOSER,
    OP_BID,
    OP_CLAIM,
    OP_START,
    default_pricing,
)
from sealedbid.proposer import finalize_proposals, open_proposals, submit_proposal
from sealedbid.quorum import Behavior, Endpoint, QuorumClient
from sealedbid.scenario import Scenario, load_scenario
from sealedbid.transactions import UnsignedTx, derive_address, sign_tx


@dataclass
class OracleOutcome:
    """Winner set (normally a singleton; ties beyond reach height stay
    tied because the oracle never sees escrow addresses) and amount."""

    winner_names: List[str]
    amount: int

    @property
    def has_winner(self) -> bool:
        return bool(self.winner_names)

    def to_dict(self) -> dict:
        return {"winners": self.winner_names, "amount": self.amount}


def oracle_resolve(scenario: Scenario) -> OracleOutcome:
    """Brute-force winner from the scripted funding plan alone."""
    deadline = scenario.auction.deadline_height
    plans = []
    for b in scenario.bidders:
        entries = [[b.funding_height, b.funding, "%s:funding" % b.name]]
        if b.has_topup():
            entries.append([b.topup_height, b.topup, "%s:topup" % b.name])
        plans.append((b.name, entries))
    # replay scripted reorg faults onto effective inclusion heights
    for fault in sorted(scenario.faults.reorgs, key=lambda r: r.at_height):
        if fault.depth == 0:
            continue
        if fault.depth > min(scenario.chain.finality_depth, fault.at_height):
            continue  # the chain refuses it
        low = fault.at_height - fault.depth + 1
        for _, entries in plans:
            for entry in entries:
                height, amount, label = entry
                if amount is None or not low <= height <= fault.at_height:
                    continue
                if label in fault.censor:
                    entry[1] = None
                else:
                    entry[0] = low  # re-included in the first replacement block
    scored = []
    for name, entries in plans:
        counted = [(h, a) for h, a, _ in entries if a is not None and h <= deadline]
        cutoff = sum(a for _, a in counted)
        reach = max((h for h, a in counted if a > 0), default=None)
        scored.append((name, cutoff, reach))
    top = max((c for _, c, _ in scored), default=0)
    if top <= 0:
        return OracleOutcome([], 0)
    best_reach = min(r for _, c, r in scored if c == top)
    winners = [n for n, c, r in scored if c == top and r == best_reach]
    return OracleOutcome(winners, top)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class RunReport:
    scenario: str
    seed: int
    final_state: str
    winner: Optional[dict]
    oracle: dict
    checks: List[CheckResult]
    flags: dict
    gas: dict
    counters: dict
    paths: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "final_state": self.final_state,
            "winner": self.winner,
            "oracle": self.oracle,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "flags": self.flags,
            "gas": self.gas,
            "counters": self.counters,
            "paths": self.paths,
        }

    def format_text(self) -> str:
        lines = ["scenario %s (seed %d): %s" % (self.scenario, self.seed,
                                                "PASS" if self.passed else "FAIL")]
        lines.append("  final state: %s" % self.final_state)
        if self.winner:
            lines.append("  winner: %(bidder)s escrow=%(escrow)s amount=%(amount)d"
                         % self.winner)
        else:
            lines.append("  winner: none")
        for check in self.checks:
            lines.append("  [%s] %s%s" % ("ok" if check.passed else "FAIL",
                                          check.name,
                                          " - " + check.detail if check.detail else ""))
        for key, value in sorted(self.flags.items()):
            lines.append("  flag %s: %s" % (key, value))
        return "\n".join(lines)


class _Wallet:
    def __init__(self, stream: DeterministicStream):
        self.key = secp256k1.generate_private_key(stream.read)
        self.address = derive_address(secp256k1.public_key(self.key))
        self.encryption_private = stream.read(32)
        self.registration_ephemeral = stream.read(32)

    @property
    def encryption_public(self) -> bytes:
        from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey
        return X25519PrivateKey.from_private_bytes(
            self.encryption_private).public_key().public_bytes_raw()


class ScenarioRunner:
    def __init__(self, scenario: Scenario, out_dir=None,
                 seed: Optional[int] = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.out_dir = Path(out_dir) if out_dir else None
        self.flags: Dict[str, object] = {}
        self.escrows: Dict[str, bytes] = {}          # bidder name -> escrow addr
        self.tx_labels: Dict[bytes, str] = {}        # tx hash -> label
        self.censored_labels: set = set()
        self._tx_schedule: Dict[int, List[Tuple[str, Callable]]] = {}
        self._action_schedule: Dict[int, List[Callable]] = {}
        self.reorg_results: List[dict] = []

    # -- construction ---------------------------------------------------------

    def _build(self) -> None:
        scn = self.scenario
        wallet_stream = DeterministicStream(b"wallets/%d" % self.seed)
        self.auctioneer = _Wallet(wallet_stream)
        self.wallets = {b.name: _Wallet(wallet_stream) for b in scn.bidders}
        self.attacker = _Wallet(wallet_stream)
        genesis = {self.auctioneer.address: scn.auctioneer.balance}
        for b in scn.bidders:
            balance = b.balance if b.balance is not None \
                else scn.default_wallet_balance(b)
            genesis[self.wallets[b.name].address] = balance
        self.genesis_balances = dict(genesis)
        self.chain = SimChain(
            genesis,
            chain_id=scn.chain.chain_id,
            finality_depth=scn.chain.finality_depth,
            genesis_assets={scn.auction.token_id: self.auctioneer.address},
            tx_gas=scn.chain.tx_gas,
        )
        self.enclave = Enclave(mode="test", seed=self.seed)
        endpoints = [
            Endpoint(spec.id, self.chain,
                     Behavior(kind=spec.behavior, offset=spec.offset,
                              value=spec.value, probability=spec.probability))
            for spec in scn.endpoints
        ]
        fallback = None
        if scn.quorum.fallback:
            fallback = Endpoint("fallback", self.chain,
                                Behavior(kind=scn.quorum.fallback))
        self.audit = AuditLog()
        self.client = QuorumClient(
            endpoints,
            sample_size=scn.quorum.sample_size,
            agreement_quorum=scn.quorum.agreement_quorum,
            kappa=scn.auction.kappa,
            rand=self.enclave.random,
            fallback=fallback,
            audit_log=self.audit,
        )
        self.events = EventLog()
        self.gas = GasLedger(default_pricing(scn.auction.resolution_mode))
        self.auction: Optional[AuctionInstance] = None

    # -- scheduling ------------------------------------------------------------

    def _at(self, height: int, action: Callable) -> None:
        self._action_schedule.setdefault(height, []).append(action)

    def _tx_at(self, height: int, label: str, builder: Callable) -> None:
        self._tx_schedule.setdefault(height, []).append((label, builder))

    def _advance_to(self, target: int) -> None:
        scn = self.scenario
        while self.chain.head_height < target:
            next_height = self.chain.head_height + 1
            for label, builder in self._tx_schedule.pop(next_height, []):
                tx = builder()
                result = self.chain.submit_tx(tx)
                self.tx_labels[tx.tx_hash()] = label
                if result.accepted and (label.endswith(":funding")
                                        or label.endswith(":topup")):
                    self.gas.charge(LAYER_SETTLEMENT, OP_BID,
                                    actor=label.split(":")[0])
            self.chain.mine_block()
            head = self.chain.head_height
            for action in self._action_schedule.pop(head, []):
                action()
            for fault in scn.faults.reorgs:
                if fault.at_height == head:
                    self._apply_reorg(fault)

    def _apply_reorg(self, fault) -> None:
        head = self.chain.head_height
        depth = fault.depth
        dropped = []
        if depth and depth <= min(self.chain.finality_depth, head):
            for height in range(head - depth + 1, head + 1):
                dropped.extend(self.chain.block_at(height).tx_list)
        replacements = []
        for tx in dropped:
            label = self.tx_labels.get(tx.tx_hash(), "")
            if label in fault.censor:
                self.censored_labels.add(label)
            else:
                replacements.append(tx)
        result = self.chain.reorg(depth, replacements)
        self.reorg_results.append({
            "at_height": fault.at_height,
            "depth": depth,
            "applied": result.applied,
            "reason": result.reason,
        })

    # -- lifecycle ----------------------------------------------------------------

    def _register(self, bidder_script) -> None:
        wallet = self.wallets[bidder_script.name]
        payload = canonical({
            "encryption_key": hx(wallet.encryption_public),
            "claim_address": hx(wallet.address),
        }).encode()
        registration = encrypt_to_key(self.enclave.input_public_key, payload,
                                      wallet.registration_ephemeral)
        envelope = self.auction.register_bidder(self.client, registration)
        response = json.loads(decrypt_envelope(wallet.encryption_private, envelope))
        escrow = unhx(response["escrow_address"])
        self.escrows[bidder_script.name] = escrow
        self._schedule_funding(bidder_script, wallet, escrow)

    def _schedule_funding(self, script, wallet, escrow: bytes) -> None:
        scn = self.scenario

        def make_builder(amount):
            def build():
                tx = UnsignedTx(
                    nonce=self.chain.next_nonce(wallet.address),
                    gas_price=scn.auction.gas_price,
                    gas_limit=scn.chain.tx_gas,
                    to=escrow,
                    value=amount,
                    chain_id=scn.chain.chain_id,
                )
                return sign_tx(tx, wallet.key, scn.chain.chain_id)
            return build

        self._tx_at(script.funding_height, "%s:funding" % script.name,
                    make_builder(script.funding))
        if script.has_topup():
            self._tx_at(script.topup_height, "%s:topup" % script.name,
                        make_builder(script.topup))

    def _escrow_asset(self) -> None:
        scn = self.scenario
        tx = UnsignedTx(
            nonce=self.chain.next_nonce(self.auctioneer.address),
            gas_price=scn.auction.gas_price,
            gas_limit=scn.chain.tx_gas,
            to=ASSET_REGISTRY_ADDRESS,
            value=0,
            data=asset_transfer_data(scn.auction.token_id,
                                     self.auction.asset_escrow_address),
            chain_id=scn.chain.chain_id,
        )
        signed = sign_tx(tx, self.auctioneer.key, scn.chain.chain_id)
        self._tx_at(1, "auctioneer:asset_escrow", lambda: signed)
        self.gas.charge(LAYER_SETTLEMENT, OP_START, actor="auctioneer")

    def _breach(self) -> None:
        """Enclave compromise: the attacker drains the richest escrow."""
        scn = self.scenario
        exported = self.enclave.compromise()
        self.flags["compromised"] = True
        by_address = {}
        for handle, key_bytes in exported.items():
            if not handle.startswith("key-"):
                continue
            key = int.from_bytes(key_bytes, "big")
            by_address[derive_address(secp256k1.public_key(key))] = key
        target = max(sorted(self.escrows.values()), key=self.chain.balance)
        key = by_address[target]
        fee = scn.chain.tx_gas * scn.auction.gas_price
        value = self.chain.balance(target) - fee
        if value <= 0:
            return
        tx = UnsignedTx(
            nonce=self.chain.next_nonce(target),
            gas_price=scn.auction.gas_price,
            gas_limit=scn.chain.tx_gas,
            to=self.attacker.address,
            value=value,
            chain_id=scn.chain.chain_id,
        )
        signed = sign_tx(tx, key, scn.chain.chain_id)
        result = self.chain.submit_tx(signed)
        self.tx_labels[signed.tx_hash()] = "attacker:drain"
        self.flags["attacker_drain_accepted"] = result.accepted
        self._advance_to(self.chain.head_height + 1 + scn.auction.kappa)

    def _run_proposals(self) -> None:
        scn = self.scenario
        phase = open_proposals(self.auction, self.client)
        opened_at = self.chain.head_height
        for script in sorted(scn.proposals, key=lambda p: p.after_open):
            self._advance_to(opened_at + script.after_open)
            candidate = self.escrows[script.candidate]
            submit_proposal(phase, candidate, self.client)
        self._advance_to(phase.window_end_height)
        finalize_proposals(phase, self.client)

    def _settle(self) -> None:
        scn = self.scenario
        kappa = scn.auction.kappa
        for _attempt in range(4):
            for i, stx in enumerate(self.auction.resolution.settlement_txs):
                tx_hash = stx.tx.tx_hash()
                if self.chain.height_of(tx_hash) is not None:
                    continue
                result = self.chain.submit_tx(stx.tx)
                self.tx_labels[tx_hash] = "settlement:%s:%d" % (stx.role, i)
                if result.accepted:
                    self.gas.charge(LAYER_SETTLEMENT, OP_CLAIM, actor="relayer")
            self._advance_to(self.chain.head_height + 1 + kappa)
            if self.auction.finalize(self.chain) is AuctionState.CLAIMED:
                break
        pending = [stx.role for stx in self.auction.resolution.settlement_txs
                   if self.chain.height_of(stx.tx.tx_hash()) is None]
        if pending:
            self.flags["unclaimed_payloads"] = pending

    def _lifecycle(self) -> None:
        scn = self.scenario
        config = AuctionConfig(
            deadline_height=scn.auction.deadline_height,
            auctioneer_address=self.auctioneer.address,
            token_id=scn.auction.token_id,
            gas_price=scn.auction.gas_price,
            kappa=scn.auction.kappa,
            resolution_mode=scn.auction.resolution_mode,
            proposal_window=scn.auction.proposal_window,
            settlement_tx_gas=scn.chain.tx_gas,
            chain_id=scn.chain.chain_id,
        )
        self.auction = AuctionInstance.deploy(self.enclave, config, self.client,
                                              self.events, self.gas)
        self.auction.setup()
        if scn.auctioneer.escrow_asset:
            self._escrow_asset()
        self._advance_to(scn.open_height)
        if not self.auction.verify_asset_escrow(self.client):
            return  # stays Deployed; nothing else can happen
        if scn.faults.tamper_sealed:
            self._at(scn.open_height + 1,
                     lambda: self.enclave.tamper_sealed_entry(
                         self.auction._registry_label, b"corrupted"))
        for script in scn.bidders:
            if script.registration_height <= self.chain.head_height:
                self._register(script)
            else:
                self._at(script.registration_height,
                         lambda s=script: self._register(s))
        self._advance_to(scn.close_target_height())
        if not self.auction.close(self.client):
            return
        if scn.faults.compromise_enclave:
            self._breach()
        if scn.auction.resolution_mode == MODE_PROPOSER:
            self._run_proposals()
        else:
            self.auction.resolve(self.client)
        self._settle()

    # -- invariant suite --------------------------------------------------------

    def _engine_winner(self) -> Optional[dict]:
        if self.auction is None or self.auction.resolution is None:
            return None
        res = self.auction.resolution
        if not res.has_winner:
            return None
        by_escrow = {addr: name for name, addr in self.escrows.items()}
        return {
            "bidder": by_escrow.get(res.winner_escrow, "<unknown>"),
            "escrow": hx(res.winner_escrow),
            "amount": res.winning_amount,
        }

    def _checks(self, oracle: OracleOutcome) -> List[CheckResult]:
        checks = []
        scn = self.scenario
        auction = self.auction
        state = auction.state.value if auction else "Init"

        # expected terminal state
        if scn.expect.final_state is not None:
            checks.append(CheckResult(
                "final_state", state == scn.expect.final_state,
                "expected %s, got %s" % (scn.expect.final_state, state)))

        # expected winner by bidder name
        if scn.expect.winner is not None:
            engine = self._engine_winner()
            got = engine["bidder"] if engine else None
            checks.append(CheckResult(
                "expected_winner", got == scn.expect.winner,
                "expected %s, got %s" % (scn.expect.winner, got)))

        # every observed transition is a legal lifecycle edge
        illegal = [t for t in (auction.transitions if auction else [])
                   if t not in LEGAL_TRANSITIONS]
        checks.append(CheckResult(
            "lifecycle_edges", not illegal,
            "illegal transitions: %s" % illegal if illegal else "all edges legal"))

        # winner agreement with the script-level oracle
        checks.append(self._oracle_check(oracle))

        resolved = auction is not None and auction.resolution is not None
        if resolved and not self.flags.get("compromised"):
            ledger = auction.resolution.conservation
            checks.append(CheckResult(
                "conservation_ledger", ledger.balanced(),
                canonical(ledger.totals())))

        # chain-level supply conservation always holds
        supply = self.chain.total_supply()
        expected_supply = sum(self.genesis_balances.values())
        checks.append(CheckResult(
            "supply_conservation", supply == expected_supply,
            "supply %d vs genesis %d" % (supply, expected_supply)))

        if (auction is not None and auction.state is AuctionState.CLAIMED
                and not self.flags.get("compromised")
                and not self.censored_labels):
            checks.extend(self._settlement_checks())

        checks.append(self._confidentiality_check())

        checks.append(CheckResult(
            "audit_completeness", len(self.audit) == self.client.query_count,
            "%d records for %d queries" % (len(self.audit),
                                           self.client.query_count)))

        if (scn.bidders and not any(b.has_topup() for b in scn.bidders)
                and not scn.faults.reorgs and self.escrows):
            checks.append(self._non_interactivity_check())

        bad = [e for e in scn.endpoints if e.behavior != "honest"]
        defeat_threshold = scn.quorum.sample_size - scn.quorum.agreement_quorum + 1
        if bad and len(bad) < defeat_threshold and resolved:
            flagged = any(r.get("discrepancies") for r in self.audit.records)
            checks.append(CheckResult(
                "adversarial_detectability", flagged,
                "%d misbehaving endpoint(s); discrepancies logged: %s"
                % (len(bad), flagged)))
        return checks

    def _oracle_check(self, oracle: OracleOutcome) -> CheckResult:
        scn = self.scenario
        auction = self.auction
        resolved = auction is not None and auction.resolution is not None
        if not resolved:
            expected_early = scn.expect.final_state not in ("Resolved", "Claimed")
            return CheckResult("oracle_agreement", expected_early,
                               "auction did not resolve")
        engine = self._engine_winner()
        if engine is None:
            agree = not oracle.has_winner
            detail = "engine: no winner; oracle: %s" % oracle.to_dict()
        else:
            agree = (engine["bidder"] in oracle.winner_names
                     and engine["amount"] == oracle.amount)
            detail = "engine: %s@%d; oracle: %s" % (
                engine["bidder"], engine["amount"], oracle.to_dict())
        self.flags["oracle_divergence"] = not agree
        if scn.expect.oracle_divergence:
            return CheckResult("oracle_divergence_flagged", not agree, detail)
        return CheckResult("oracle_agreement", agree, detail)

    def _settlement_checks(self) -> List[CheckResult]:
        """Exact value accounting after Claimed, to the unit."""
        scn = self.scenario
        res = self.auction.resolution
        checks = []
        fee = scn.chain.tx_gas * scn.auction.gas_price
        inbound: Dict[bytes, int] = {}
        payment_value = 0
        for stx in res.settlement_txs:
            if stx.role in ("refund", "excess_return"):
                inbound[stx.tx.to] = inbound.get(stx.tx.to, 0) + stx.tx.value
            elif stx.role == "winner_payment":
                payment_value += stx.tx.value
        # escrows end up holding exactly the recorded dust
        dust_ok = all(
            self.chain.balance(entry.escrow) == entry.dust
            for entry in res.conservation.entries)
        checks.append(CheckResult("escrows_drained", dust_ok,
                                  "escrow balances equal recorded dust"))
        # auctioneer collected the winning amount minus the documented fee
        expected_auctioneer = scn.auctioneer.balance + payment_value
        actual_auctioneer = self.chain.balance(self.auctioneer.address)
        checks.append(CheckResult(
            "auctioneer_payment", actual_auctioneer == expected_auctioneer,
            "balance %d, expected %d" % (actual_auctioneer, expected_auctioneer)))
        # every bidder wallet: initial - deposits - fees + returns
        wallet_ok, wallet_detail = True, []
        for b in scn.bidders:
            wallet = self.wallets[b.name]
            spent = b.funding + (b.topup or 0)
            n_txs = 1 + (1 if b.has_topup() else 0)
            expected = (self.genesis_balances[wallet.address]
                        - spent - n_txs * fee
                        + inbound.get(wallet.address, 0))
            actual = self.chain.balance(wallet.address)
            if actual != expected:
                wallet_ok = False
                wallet_detail.append("%s: %d != %d" % (b.name, actual, expected))
        checks.append(CheckResult(
            "bidder_refunds_exact", wallet_ok,
            "; ".join(wallet_detail) if wallet_detail else
            "all wallet balances match to the unit"))
        # the asset landed with the winner (or returned to the auctioneer)
        owner = self.chain.token_owner(scn.auction.token_id)
        engine = self._engine_winner()
        if engine is None:
            expected_owner = self.auctioneer.address
        else:
            expected_owner = self.wallets[engine["bidder"]].address
        checks.append(CheckResult(
            "asset_delivery", owner == expected_owner,
            "owner %s expected %s" % (hx(owner), hx(expected_owner))))
        return checks

    def _confidentiality_check(self) -> CheckResult:
        """No escrow address or bid value in plaintext before disclosure
        begins; no private key material anywhere, ever."""
        boundary = len(self.events.records)
        for record in self.events.records:
            if record.get("event") in ("Resolved", "ProposalsOpened"):
                boundary = record["seq"]
                break
        pre_text = "\n".join(canonical(r)
                             for r in self.events.records[:boundary]).lower()
        full_text = self.events.text().lower() + self.audit.text().lower()
        problems = []
        for name, escrow in self.escrows.items():
            if escrow.hex() in pre_text:
                problems.append("escrow of %s leaked before disclosure" % name)
        for b in self.scenario.bidders:
            for amount in filter(None, (b.funding, b.topup or 0)):
                if amount >= 1000 and re.search(r"(?<!\d)%d(?!\d)" % amount, pre_text):
                    problems.append("bid value %d of %s visible pre-resolution"
                                    % (amount, b.name))
        if not self.flags.get("compromised"):
            leaks = self.enclave.scan_for_key_leaks(full_text)
            if leaks:
                problems.append("%d private-key leak(s) in public logs" % leaks)
        if self.auction is not None and self.auction.resolution is not None:
            disclosed = self.events.text().lower()
            for name, escrow in self.escrows.items():
                if escrow.hex() not in disclosed:
                    problems.append("escrow of %s missing from disclosure" % name)
        return CheckResult("confidentiality", not problems,
                           "; ".join(problems) if problems else
                           "no plaintext leaks before disclosure")

    def _non_interactivity_check(self) -> CheckResult:
        expected = len(self.scenario.bidders)
        calls_ok = self.auction.register_call_count == expected
        transfer_counts = []
        for name, escrow in self.escrows.items():
            inflows = 0
            for height in range(1, self.chain.head_height + 1):
                for tx in self.chain.block_at(height).tx_list:
                    if tx.to == escrow and tx.value > 0:
                        inflows += 1
            transfer_counts.append((name, inflows))
        transfers_ok = all(count == 1 for _, count in transfer_counts)
        return CheckResult(
            "non_interactivity", calls_ok and transfers_ok,
            "register calls %d/%d; funding transfers %s"
            % (self.auction.register_call_count, expected, transfer_counts))

    # -- entry point ----------------------------------------------------------------

    def run(self) -> RunReport:
        self._build()
        try:
            self._lifecycle()
        except SealedStoreIntegrity as exc:
            self.flags["integrity_error"] = str(exc)
        oracle = oracle_resolve(self.scenario)
        checks = self._checks(oracle)
        report = RunReport(
            scenario=self.scenario.name,
            seed=self.seed,
            final_state=self.auction.state.value if self.auction else "Init",
            winner=self._engine_winner(),
            oracle=oracle.to_dict(),
            checks=checks,
            flags=dict(self.flags),
            gas=self.gas.report().to_dict(),
            counters={
                "queries": self.client.query_count,
                "events": len(self.events),
                "blocks": self.chain.head_height,
                "reorgs": self.reorg_results,
            },
        )
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            events_path = self.out_dir / "events.jsonl"
            audit_path = self.out_dir / "audit.jsonl"
            report_path = self.out_dir / "report.json"
            gas_path = self.out_dir / "gas.csv"
            self.events.write(events_path)
            self.audit.write(audit_path)
            with open(gas_path, "w", encoding="utf-8") as fh:
                fh.write("layer,operation,actor,gas\n")
                for entry in self.gas.entries:
                    fh.write("%s,%s,%s,%d\n" % (entry.layer, entry.operation,
                                                entry.actor, entry.gas))
            report.paths = {
                "events": str(events_path),
                "audit": str(audit_path),
                "gas": str(gas_path),
                "report": str(report_path),
            }
            with open(report_path, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
        return report


def run_scenario(scenario, out_dir=None, seed: Optional[int] = None) -> RunReport:
    """Run a Scenario object or a path to a scenario file."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    return ScenarioRunner(scenario, out_dir=out_dir, seed=seed).run()
