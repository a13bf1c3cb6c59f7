"""The enclave's sampled view of the settlement layer.

Every query samples n of the m declared endpoints uniformly without
replacement (driven by enclave randomness), collects their responses,
and accepts the plurality value only if at least q endpoints reported
it. On disagreement the optional trusted fallback endpoint is consulted;
if that also fails the query raises. Every query, including failed
ones, appends one AuditRecord to the audit log.

Endpoint behaviors model the threat surface: honest endpoints mirror
chain ground truth, `misreport_balance` / `misreport_height` skew their
respective query kinds (colluders share the same skew), and `withhold`
times out with a configurable probability.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from sealedbid.chain import SimChain
from sealedbid.errors import (
    ChainQueryError,
    ConfigError,
    QuorumFailure,
    QuorumTimeout,
)
from sealedbid.events import AuditLog, hx

HONEST_LATENCY = 1
TIMEOUT_LATENCY = 10

BEHAVIOR_KINDS = ("honest", "misreport_balance", "misreport_height", "withhold")


@dataclass(frozen=True)
class Behavior:
    kind: str = "honest"
    offset: int = 0
    value: Optional[int] = None
    probability: float = 1.0

    def __post_init__(self):
        if self.kind not in BEHAVIOR_KINDS:
            raise ConfigError("unknown endpoint behavior %r" % self.kind)


class Endpoint:
    """One settlement-layer interface backed by chain ground truth."""

    def __init__(self, endpoint_id: str, chain: SimChain,
                 behavior: Behavior = Behavior()):
        self.id = endpoint_id
        self.chain = chain
        self.behavior = behavior

    def serve(self, request: tuple, draw01: Callable[[], float]):
        """Returns (value, latency); value None models a timeout."""
        if self.behavior.kind == "withhold" and draw01() < self.behavior.probability:
            return None, TIMEOUT_LATENCY
        kind = request[0]
        if kind == "balance":
            truth = self.chain.balance_at(request[1], request[2])
            if self.behavior.kind == "misreport_balance":
                if self.behavior.value is not None:
                    return self.behavior.value, HONEST_LATENCY
                return truth + self.behavior.offset, HONEST_LATENCY
            return truth, HONEST_LATENCY
        if kind == "height":
            truth = self.chain.head_height
            if self.behavior.kind == "misreport_height":
                return truth + self.behavior.offset, HONEST_LATENCY
            return truth, HONEST_LATENCY
        if kind == "asset_owner":
            try:
                owner = self.chain.asset_owner_at(request[1], request[2])
            except ChainQueryError:
                owner = b""  # token unknown at that height
            return owner, HONEST_LATENCY
        if kind == "funding_source":
            funder = self.chain.first_funder(request[1], request[2])
            # b"" means "no funder yet"; None is reserved for timeouts
            return (funder if funder is not None else b""), HONEST_LATENCY
        raise ConfigError("unknown query kind %r" % kind)


@dataclass
class Decision:
    kind: str            # "agreed" | "fallback" | "failed"
    value: object = None
    reason: Optional[str] = None


@dataclass
class AuditRecord:
    query: str
    params: dict
    samples: List[dict] = field(default_factory=list)
    decision: Optional[Decision] = None
    discrepancy_ids: List[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "query": self.query,
            "params": self.params,
            "samples": self.samples,
            "decision": {
                "kind": self.decision.kind,
                "value": _jsonable(self.decision.value),
                "reason": self.decision.reason,
            },
            "discrepancies": self.discrepancy_ids,
        }


def _jsonable(value):
    if isinstance(value, (bytes, bytearray)):
        return hx(value)
    return value


class QuorumClient:
    def __init__(self, endpoints: Sequence[Endpoint], sample_size: int,
                 agreement_quorum: int, kappa: int,
                 rand: Callable[[int], bytes],
                 fallback: Optional[Endpoint] = None,
                 audit_log: Optional[AuditLog] = None):
        if sample_size > len(endpoints):
            raise ConfigError("sample_size %d exceeds %d declared endpoints"
                              % (sample_size, len(endpoints)))
        if sample_size < 1:
            raise ConfigError("sample_size must be >= 1")
        if not 1 <= agreement_quorum <= sample_size:
            raise ConfigError("agreement_quorum must be in [1, sample_size]")
        if kappa < 0:
            raise ConfigError("kappa must be non-negative")
        self.endpoints = list(endpoints)
        self.sample_size = sample_size
        self.agreement_quorum = agreement_quorum
        self.kappa = kappa
        self.fallback = fallback
        self._rand = rand
        self.audit_log = audit_log if audit_log is not None else AuditLog()
        self.query_count = 0

    # -- randomness helpers --------------------------------------------------

    def _rand_below(self, bound: int) -> int:
        # rejection sampling on 4-byte draws keeps the sample unbiased
        limit = (1 << 32) - ((1 << 32) % bound)
        while True:
            draw = int.from_bytes(self._rand(4), "big")
            if draw < limit:
                return draw % bound

    def _draw01(self) -> float:
        return int.from_bytes(self._rand(4), "big") / float(1 << 32)

    def sample_endpoints(self) -> List[Endpoint]:
        """Uniform sample of sample_size distinct endpoints."""
        if self.sample_size > len(self.endpoints):
            raise ConfigError("sample_size exceeds endpoint list")
        pool = list(self.endpoints)
        chosen = []
        for i in range(self.sample_size):
            j = i + self._rand_below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
            chosen.append(pool[i])
        return chosen

    # -- core query path -------------------------------------------------------

    def _execute(self, query: str, params: dict, request: tuple):
        record = AuditRecord(query=query, params=params)
        responses = []
        for endpoint in self.sample_endpoints():
            value, latency = endpoint.serve(request, self._draw01)
            responses.append((endpoint.id, value))
            record.samples.append({
                "endpoint": endpoint.id,
                "response": _jsonable(value) if value is not None else None,
                "timeout": value is None,
                "latency": latency,
            })
        decided = self._agree(responses)
        if decided is not None:
            record.decision = Decision("agreed", decided)
            record.discrepancy_ids = [eid for eid, v in responses if v != decided]
            return self._finish(record, decided)
        # no agreement: consult the fallback if one is declared
        if self.fallback is not None:
            value, latency = self.fallback.serve(request, self._draw01)
            record.samples.append({
                "endpoint": self.fallback.id,
                "response": _jsonable(value) if value is not None else None,
                "timeout": value is None,
                "latency": latency,
                "fallback": True,
            })
            if value is not None:
                record.decision = Decision("fallback", value)
                record.discrepancy_ids = [eid for eid, v in responses if v != value]
                return self._finish(record, value)
        all_withheld = all(v is None for _, v in responses)
        reason = "timeout" if all_withheld else "no_quorum"
        record.decision = Decision("failed", None, reason)
        record.discrepancy_ids = [eid for eid, _ in responses]
        self._finish(record, None)
        if reason == "timeout":
            raise QuorumTimeout("every sampled endpoint withheld its response")
        raise QuorumFailure("no value reached the agreement quorum")

    def _agree(self, responses):
        counts = {}
        for _, value in responses:
            if value is not None:
                counts[value] = counts.get(value, 0) + 1
        reaching = [(count, value) for value, count in counts.items()
                    if count >= self.agreement_quorum]
        if not reaching:
            return None
        best = max(count for count, _ in reaching)
        winners = [value for count, value in reaching if count == best]
        if len(winners) > 1:
            return None  # ambiguous plurality: treat as disagreement
        return winners[0]

    def _finish(self, record: AuditRecord, value):
        self.query_count += 1
        self.audit_log.append(record.to_record())
        return value, record

    # -- public query operations ---------------------------------------------------

    def query_balance(self, addr: bytes, height: int):
        return self._execute("balance", {"address": hx(addr), "height": height},
                             ("balance", addr, height))

    def query_height(self):
        return self._execute("height", {}, ("height",))

    def query_asset_owner(self, token_id: int, height: int):
        return self._execute("asset_owner",
                             {"token_id": token_id, "height": height},
                             ("asset_owner", token_id, height))

    def query_funding_source(self, addr: bytes, height: int):
        return self._execute("funding_source",
                             {"address": hx(addr), "height": height},
                             ("funding_source", addr, height))

    def confirm_deadline(self, deadline_height: int) -> bool:
        """True once the agreed head is kappa blocks past the deadline."""
        head, _ = self.query_height()
        return head >= deadline_height + self.kappa
