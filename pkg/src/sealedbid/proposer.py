"""Proposer-based resolution: scalable alternative to exhaustive queries.

After closing, anyone may nominate a candidate winner during a
fixed-length challenge window. Each verified proposal costs a single
cutoff-balance query; a proposal replaces the current leader only if it
is strictly higher (or equal and ahead on the deterministic tie-break,
which keeps the outcome equal to exhaustive resolution when the true
winner is proposed). If the window expires with no proposals at all,
resolution falls back to the exhaustive path so the auction still
terminates.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from sealedbid.auction import (
    AuctionInstance,
    AuctionState,
    RegistryEntry,
    ResolutionResult,
)
from sealedbid.errors import StateError
from sealedbid.events import hx
from sealedbid.gas import (
    LAYER_EXECUTION,
    MODE_PROPOSER,
    OP_END,
    OP_REGISTER_WINNER,
)
from sealedbid.quorum import QuorumClient

STATUS_OPEN = "open"
STATUS_FINALIZED = "finalized"
STATUS_TIMED_OUT = "timed_out"

REJECT_UNKNOWN_ESCROW = "unknown_escrow"
REJECT_NOT_HIGHER = "not_higher"
REJECT_ZERO_BALANCE = "zero_balance"
REJECT_WINDOW_EXPIRED = "window_expired"


@dataclass
class ProposalPhase:
    auction: AuctionInstance
    window_end_height: int
    status: str = STATUS_OPEN
    current_leader: Optional[Tuple[RegistryEntry, int]] = None
    proposal_count: int = 0
    verified_count: int = 0  # proposals that cost a balance query
    _leader_rank: Optional[tuple] = field(default=None, repr=False)

    @property
    def leader_summary(self) -> Optional[Tuple[bytes, int]]:
        if self.current_leader is None:
            return None
        entry, amount = self.current_leader
        return entry.escrow_address, amount


def open_proposals(auction: AuctionInstance, quorum: QuorumClient) -> ProposalPhase:
    if auction.state is not AuctionState.CLOSED:
        raise StateError("proposals open only on a Closed auction, not %s"
                         % auction.state.value)
    if auction.config.resolution_mode != MODE_PROPOSER:
        raise StateError("auction is not configured for proposer-based resolution")
    if auction._proposal_phase is not None:
        raise StateError("proposal phase is already open")
    head, _ = quorum.query_height()
    phase = ProposalPhase(auction=auction,
                          window_end_height=head + auction.config.proposal_window)
    auction._proposal_phase = phase
    auction._emit("ProposalsOpened", window_end_height=phase.window_end_height)
    return phase


def submit_proposal(phase: ProposalPhase, candidate_escrow: bytes,
                    quorum: QuorumClient):
    """Verify one candidate with one balance query; returns (accepted, reason)."""
    if phase.status != STATUS_OPEN:
        raise StateError("proposal phase is %s" % phase.status)
    auction = phase.auction
    phase.proposal_count += 1
    head, _ = quorum.query_height()
    if head >= phase.window_end_height:
        return _reject(auction, REJECT_WINDOW_EXPIRED)
    entry = _find_entry(auction, candidate_escrow)
    if entry is None:
        return _reject(auction, REJECT_UNKNOWN_ESCROW)
    phase.verified_count += 1
    amount = auction._cutoff_balance(quorum, entry.escrow_address)
    auction.gas.charge(LAYER_EXECUTION, OP_REGISTER_WINNER, actor="proposer")
    if amount == 0:
        return _reject(auction, REJECT_ZERO_BALANCE)
    if phase.current_leader is not None:
        leader_entry, leader_amount = phase.current_leader
        if amount < leader_amount:
            return _reject(auction, REJECT_NOT_HIGHER)
        if amount == leader_amount:
            # equal bids: the tie-break decides, costing extra queries
            if phase._leader_rank is None:
                phase._leader_rank = auction.rank_key(quorum, leader_entry,
                                                      leader_amount)
            candidate_rank = auction.rank_key(quorum, entry, amount)
            if candidate_rank >= phase._leader_rank:
                return _reject(auction, REJECT_NOT_HIGHER)
            phase._leader_rank = candidate_rank
            phase.current_leader = (entry, amount)
            auction._emit("ProposalAccepted", candidate=hx(entry.escrow_address),
                          amount=amount)
            return True, None
    phase.current_leader = (entry, amount)
    phase._leader_rank = None
    auction._emit("ProposalAccepted", candidate=hx(entry.escrow_address),
                  amount=amount)
    return True, None


def finalize_proposals(phase: ProposalPhase,
                       quorum: QuorumClient) -> ResolutionResult:
    """Settle with the leading proposal, or fall back to exhaustive."""
    if phase.status != STATUS_OPEN:
        raise StateError("proposal phase is %s" % phase.status)
    auction = phase.auction
    head, _ = quorum.query_height()
    if head < phase.window_end_height:
        raise StateError("challenge window is open until height %d"
                         % phase.window_end_height)
    if phase.current_leader is not None:
        winner, amount = phase.current_leader
        phase.status = STATUS_FINALIZED
    else:
        # nobody proposed: liveness falls back to the exhaustive scan
        winner, amount = auction._determine_winner(quorum)
        phase.status = STATUS_TIMED_OUT
    result = auction._construct_resolution(winner, amount, quorum)
    auction._emit("ProposalFinalized", status=phase.status,
                  proposal_count=phase.proposal_count)
    auction._commit_resolution(result)
    auction.gas.charge(LAYER_EXECUTION, OP_END, actor="finalizer",
                       n_bidders=len(result.bidder_set_disclosure))
    return result


def _find_entry(auction: AuctionInstance, escrow: bytes) -> Optional[RegistryEntry]:
    for entry in auction._load_registry():
        if entry.escrow_address == escrow:
            return entry
    return None


def _reject(auction: AuctionInstance, reason: str):
    auction._emit("ProposalRejected", reason=reason)
    return False, reason
