"""Command-line interface.

    sealedbid run <scenario.yaml> [--seed N] [--out-dir DIR]
    sealedbid oracle <scenario.yaml>
    sealedbid plot --out plot.csv [--modes ...] [--pricing ...] [--bidders A:B]
    sealedbid verify-log <events.jsonl>

Exit codes: 0 success, 1 invariant/verification failure, 2 configuration
or usage error.
"""

import argparse
import json
import re
import sys

from sealedbid.enclave import AttestationReport, verify_attestation
from sealedbid.errors import ConfigError, SealedBidError
from sealedbid.events import canonical, unhx
from sealedbid.gas import write_plot_csv
from sealedbid.harness import ScenarioRunner, oracle_resolve
from sealedbid.scenario import load_scenario
from sealedbid.transactions import SignedTransaction, recover_signer


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    runner = ScenarioRunner(scenario, out_dir=args.out_dir, seed=args.seed)
    report = runner.run()
    print(report.format_text())
    print()
    print(runner.gas.report().format_text())
    return 0 if report.passed else 1


def _cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    outcome = oracle_resolve(scenario)
    if not outcome.has_winner:
        print("winner: none")
    elif len(outcome.winner_names) == 1:
        print("winner: %s" % outcome.winner_names[0])
        print("amount: %d" % outcome.amount)
    else:
        print("tied winners (escrow address order decides): %s"
              % ", ".join(outcome.winner_names))
        print("amount: %d" % outcome.amount)
    return 0


def _parse_range(spec: str):
    match = re.fullmatch(r"(\d+):(\d+)", spec)
    if match:
        low, high = int(match.group(1)), int(match.group(2))
        if low > high:
            raise ConfigError("empty bidder range %s" % spec)
        return list(range(low, high + 1))
    try:
        return [int(part) for part in spec.split(",") if part]
    except ValueError:
        raise ConfigError("cannot parse bidder range %r" % spec)


def _cmd_plot(args) -> int:
    rows = write_plot_csv(
        args.out,
        modes=args.modes.split(",") if args.modes else None,
        pricings=args.pricing.split(",") if args.pricing else None,
        bidders=_parse_range(args.bidders) if args.bidders is not None else None,
    )
    print("wrote %d data rows to %s" % (rows, args.out))
    return 0


def _cmd_verify_log(args) -> int:
    """Offline re-verification of a public event stream."""
    with open(args.log, "r", encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records:
        print("verify-log: empty log")
        return 1
    header = records[0]
    if header.get("event") != "Deployed":
        print("verify-log: log does not start with a Deployed event")
        return 1
    code_hash = unhx(header["code_hash"])
    attestation_address = unhx(header["attestation_address"])
    failures = 0

    for record in records:
        attestation = record.get("attestation")
        if attestation is None:
            print("event %-18s seq=%-3d FAIL (no attestation)"
                  % (record.get("event"), record.get("seq", -1)))
            failures += 1
            continue
        stripped = {k: v for k, v in record.items() if k != "attestation"}
        report = AttestationReport.from_record(attestation)
        ok = verify_attestation(report, code_hash,
                                canonical(stripped).encode(),
                                attestation_address)
        print("event %-18s seq=%-3d %s" % (record.get("event"),
                                           record.get("seq", -1),
                                           "ok" if ok else "FAIL"))
        failures += 0 if ok else 1

    resolved = next((r for r in records if r.get("event") == "Resolved"), None)
    if resolved is not None:
        bidder_set = {addr.lower() for addr in resolved.get("bidder_set", [])}
        asset_events = [r for r in records if r.get("event") == "AssetEscrowAddress"]
        known = set(bidder_set)
        known.update(r["address"].lower() for r in asset_events)
        for payload in resolved.get("payloads", []):
            tx = SignedTransaction.from_raw(payload["raw"])
            try:
                signer = "0x" + recover_signer(tx).hex()
                ok = signer in known
            except SealedBidError:
                signer, ok = "<unrecoverable>", False
            print("payload %-15s signer=%s %s" % (payload["role"], signer,
                                                  "ok" if ok else "FAIL"))
            failures += 0 if ok else 1
        # confidentiality replay: disclosed escrows must not appear earlier
        boundary = resolved["seq"]
        pre_text = "\n".join(canonical(r) for r in records
                             if r.get("seq", 0) < boundary
                             and r.get("event") not in ("ProposalsOpened",
                                                        "ProposalAccepted",
                                                        "ProposalRejected",
                                                        "ProposalFinalized")).lower()
        for addr in bidder_set:
            if addr[2:] in pre_text:
                print("confidentiality FAIL: %s disclosed early" % addr)
                failures += 1

    print("verify-log: %s (%d event(s), %d failure(s))"
          % ("PASS" if failures == 0 else "FAIL", len(records), failures))
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sealedbid",
        description="Sealed-bid auction simulator with enclave-style "
                    "confidential bidding and public-chain settlement.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario end to end")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--out-dir", default=None,
                       help="directory for event/audit logs and the report")
    p_run.set_defaults(func=_cmd_run)

    p_oracle = sub.add_parser("oracle",
                              help="brute-force winner from the funding script")
    p_oracle.add_argument("scenario")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_plot = sub.add_parser("plot", help="emit gas-scaling CSV data")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--modes", default=None,
                        help="comma-separated: exhaustive,proposer")
    p_plot.add_argument("--pricing", default=None,
                        help="comma-separated: default,adjusted")
    p_plot.add_argument("--bidders", default=None,
                        help="range A:B or comma-separated list")
    p_plot.set_defaults(func=_cmd_plot)

    p_verify = sub.add_parser("verify-log",
                              help="re-verify attestations and payload "
                                   "signatures in an event log")
    p_verify.add_argument("log")
    p_verify.set_defaults(func=_cmd_verify_log)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except SealedBidError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
