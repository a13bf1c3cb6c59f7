"""Declarative auction scenarios.

A scenario is a YAML document describing chain parameters, the auction
configuration, bidder funding scripts, the endpoint roster, fault
injections, and expected outcomes. Scenarios double as executable
documentation: the bundled files under scenarios/ cover the honest
lifecycle and every modeled threat.

All times are settlement block heights. The runner derives a fixed
timeline: the asset is escrowed in block 1, the auction opens once that
is kappa-confirmed, and resolution happens after every scripted transfer
is kappa-deep, so registration heights must be at least kappa+1 and
strictly precede their funding heights.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import yaml

from sealedbid.errors import ConfigError
from sealedbid.gas import MODE_EXHAUSTIVE, MODE_PROPOSER


@dataclass
class ChainParams:
    chain_id: int = 1
    finality_depth: int = 5
    tx_gas: int = 21_000


@dataclass
class AuctionParams:
    deadline_height: int = 12
    token_id: int = 1
    gas_price: int = 1
    kappa: int = 6
    resolution_mode: str = MODE_EXHAUSTIVE
    proposal_window: int = 10


@dataclass
class AuctioneerParams:
    balance: int = 1_000_000
    escrow_asset: bool = True


@dataclass
class QuorumParams:
    sample_size: int = 3
    agreement_quorum: int = 2
    fallback: Optional[str] = None  # behavior name of a trusted fallback


@dataclass
class EndpointSpec:
    id: str
    behavior: str = "honest"
    offset: int = 0
    value: Optional[int] = None
    probability: float = 1.0


@dataclass
class BidderScript:
    name: str
    registration_height: int
    funding: int
    funding_height: int
    topup: Optional[int] = None
    topup_height: Optional[int] = None
    balance: Optional[int] = None

    def has_topup(self) -> bool:
        return self.topup is not None


@dataclass
class ProposalScript:
    candidate: str     # bidder name
    after_open: int    # blocks after the proposal phase opens


@dataclass
class ReorgFault:
    at_height: int
    depth: int
    censor: List[str] = field(default_factory=list)


@dataclass
class FaultPlan:
    reorgs: List[ReorgFault] = field(default_factory=list)
    compromise_enclave: bool = False
    tamper_sealed: bool = False


@dataclass
class Expectations:
    final_state: Optional[str] = None
    oracle_divergence: bool = False
    winner: Optional[str] = None


@dataclass
class Scenario:
    name: str
    seed: int = 0
    description: str = ""
    chain: ChainParams = field(default_factory=ChainParams)
    auction: AuctionParams = field(default_factory=AuctionParams)
    auctioneer: AuctioneerParams = field(default_factory=AuctioneerParams)
    quorum: QuorumParams = field(default_factory=QuorumParams)
    endpoints: List[EndpointSpec] = field(default_factory=list)
    bidders: List[BidderScript] = field(default_factory=list)
    proposals: List[ProposalScript] = field(default_factory=list)
    faults: FaultPlan = field(default_factory=FaultPlan)
    expect: Expectations = field(default_factory=Expectations)

    @property
    def open_height(self) -> int:
        """Head height at which the auction can open (escrow kappa-confirmed)."""
        return 1 + self.auction.kappa

    def last_transfer_height(self) -> int:
        heights = [self.auction.deadline_height]
        for b in self.bidders:
            heights.append(b.funding_height)
            if b.topup_height is not None:
                heights.append(b.topup_height)
        return max(heights)

    def close_target_height(self) -> int:
        """Head height at which closing and resolution proceed."""
        return self.last_transfer_height() + self.auction.kappa

    def default_wallet_balance(self, bidder: BidderScript) -> int:
        fee = self.chain.tx_gas * self.auction.gas_price
        return bidder.funding + (bidder.topup or 0) + 4 * fee + 1_000

    def bidder(self, name: str) -> BidderScript:
        for b in self.bidders:
            if b.name == name:
                return b
        raise ConfigError("unknown bidder %r" % name)


def _build(cls, data, context):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("%s: expected a mapping, got %r" % (context, type(data).__name__))
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError("%s: unknown keys %s" % (context, sorted(unknown)))
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError("%s: %s" % (context, exc))


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario document must be a mapping")
    if "name" not in data:
        raise ConfigError("scenario: missing required key 'name'")
    scn = Scenario(
        name=data["name"],
        seed=int(data.get("seed", 0)),
        description=data.get("description", ""),
        chain=_build(ChainParams, data.get("chain"), "chain"),
        auction=_build(AuctionParams, data.get("auction"), "auction"),
        auctioneer=_build(AuctioneerParams, data.get("auctioneer"), "auctioneer"),
        quorum=_build(QuorumParams, data.get("quorum"), "quorum"),
        endpoints=[_build(EndpointSpec, e, "endpoints[%d]" % i)
                   for i, e in enumerate(data.get("endpoints") or [])],
        bidders=[_build(BidderScript, b, "bidders[%d]" % i)
                 for i, b in enumerate(data.get("bidders") or [])],
        proposals=[_build(ProposalScript, p, "proposals[%d]" % i)
                   for i, p in enumerate(data.get("proposals") or [])],
        faults=_build_faults(data.get("faults")),
        expect=_build(Expectations, data.get("expect"), "expect"),
    )
    validate_scenario(scn)
    return scn


def _build_faults(data) -> FaultPlan:
    if data is None:
        return FaultPlan()
    if not isinstance(data, dict):
        raise ConfigError("faults: expected a mapping")
    reorgs = [_build(ReorgFault, r, "faults.reorgs[%d]" % i)
              for i, r in enumerate(data.get("reorgs") or [])]
    return FaultPlan(
        reorgs=reorgs,
        compromise_enclave=bool(data.get("compromise_enclave", False)),
        tamper_sealed=bool(data.get("tamper_sealed", False)),
    )


def validate_scenario(scn: Scenario) -> None:
    ctx = "scenario %r" % scn.name
    if not scn.endpoints:
        raise ConfigError("%s: declares no endpoints" % ctx)
    if scn.quorum.sample_size > len(scn.endpoints):
        raise ConfigError("%s: sample_size exceeds the endpoint roster" % ctx)
    seen_ids = set()
    for ep in scn.endpoints:
        if ep.id in seen_ids:
            raise ConfigError("%s: duplicate endpoint id %r" % (ctx, ep.id))
        seen_ids.add(ep.id)
    if scn.auction.deadline_height <= scn.open_height:
        raise ConfigError("%s: deadline %d must exceed the open height %d"
                          % (ctx, scn.auction.deadline_height, scn.open_height))
    names = set()
    for b in scn.bidders:
        bctx = "%s bidder %r" % (ctx, b.name)
        if b.name in names:
            raise ConfigError("%s: duplicate name" % bctx)
        names.add(b.name)
        if b.registration_height < scn.open_height:
            raise ConfigError("%s: registers at %d before the auction can open (%d)"
                              % (bctx, b.registration_height, scn.open_height))
        if b.registration_height >= scn.auction.deadline_height:
            raise ConfigError("%s: registers at/after the deadline" % bctx)
        if b.funding_height <= b.registration_height:
            raise ConfigError("%s: funding height %d must follow registration %d"
                              % (bctx, b.funding_height, b.registration_height))
        if (b.topup is None) != (b.topup_height is None):
            raise ConfigError("%s: topup and topup_height must appear together" % bctx)
        if b.topup_height is not None and b.topup_height <= b.funding_height:
            raise ConfigError("%s: topup height %d must follow funding %d"
                              % (bctx, b.topup_height, b.funding_height))
        if b.funding < 0 or (b.topup or 0) < 0:
            raise ConfigError("%s: negative amounts" % bctx)
    if scn.proposals and scn.auction.resolution_mode != MODE_PROPOSER:
        raise ConfigError("%s: proposals require proposer mode" % ctx)
    for p in scn.proposals:
        if p.candidate not in names:
            raise ConfigError("%s: proposal names unknown bidder %r" % (ctx, p.candidate))
        if not 1 <= p.after_open < scn.auction.proposal_window:
            raise ConfigError("%s: proposal offset %d outside the window" % (ctx, p.after_open))
    for r in scn.faults.reorgs:
        if r.at_height < 2:
            raise ConfigError("%s: reorg at height %d has nothing to replace"
                              % (ctx, r.at_height))
        if r.depth < 0:
            raise ConfigError("%s: negative reorg depth" % ctx)


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("cannot read scenario %s: %s" % (path, exc))
    except yaml.YAMLError as exc:
        raise ConfigError("cannot parse scenario %s: %s" % (path, exc))
    return scenario_from_dict(data)
