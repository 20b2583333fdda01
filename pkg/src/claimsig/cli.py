"""Command-line interface.

Exit codes: 0 success, 1 scenario outcome mismatch, 2 ledger verification
failure, 3 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from claimsig.errors import (
    ClaimsigError,
    ConfigError,
    EmptySeries,
    LedgerIntegrityError,
    PriceSeriesError,
)
from claimsig.gas import DEFAULT_SCHEDULE, GasSchedule, load_prices, operation_reports, render_reports
from claimsig.ledger import Ledger, LedgerRecord
from claimsig.protocol import audit_signatures
from claimsig.scenarios import (
    FraudScenario,
    ScenarioName,
    SuiteEntry,
    ledger_filename,
    load_suite_config,
    run_scenario,
    run_suite,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_LEDGER = 2
EXIT_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimsig",
        description="Multi-signature insurance claim protocol engine and fraud-scenario harness",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo", help="run the happy path and print its audit trail")
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("run-scenario", help="run one fraud scenario")
    p.add_argument("--name", required=True, choices=[n.value for n in ScenarioName])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run-suite", help="run every scenario listed in a suite config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("verify-ledger", help="re-verify a ledger's hash chain and signatures")
    p.add_argument("--file", required=True)

    p = sub.add_parser("report-costs", help="USD cost report per operation over a price series")
    p.add_argument("--schedule", help="gas schedule JSON (default: built-in schedule)")
    p.add_argument("--prices", required=True, help="CSV: day,gas_price_gwei,token_usd")
    p.add_argument("--format", choices=["csv", "table"], default="table")
    p.add_argument("--lines", type=int, default=1, help="line items per submission")
    p.add_argument("--signatures", type=int, default=2, help="signatures per multisig")

    p = sub.add_parser("audit", help="print the audit trail of one claim")
    p.add_argument("--ledger", required=True)
    p.add_argument("--claim", required=True, help="claim id, hex")
    return parser


def describe(rec: LedgerRecord) -> str:
    body = rec.body()
    parts = []
    if isinstance(body, dict):
        for k in sorted(body):
            v = body[k]
            if isinstance(v, bytes):
                v = v.hex()[:16] + "…"
            parts.append(f"{k}={v}")
    signers = ""
    if rec.envelope:
        signers = " signed-by=" + ",".join(
            f"{s.signer_id}({s.signer_role.value})#{s.nonce}" for s in rec.envelope.signatures
        )
    return f"[{rec.index:3d}] t={rec.timestamp} {rec.kind.value:<18} {' '.join(parts)}{signers}"


def cmd_demo(args) -> int:
    run = run_scenario(FraudScenario.from_catalog(ScenarioName.HAPPY_PATH), args.seed)
    claim_id = bytes.fromhex(run.outcome.claim_id)
    claim = run.engine.claim(claim_id)
    print(f"claim {claim_id.hex()}")
    print(f"state {claim.state.value}; submitted {claim.total_submitted} cents, "
          f"received {claim.acknowledgment.received}, patient owes {claim.acknowledgment.remaining} "
          f"(copay {claim.copay} collected at the visit)")
    print("audit trail:")
    for rec in run.engine.audit_trail(claim_id):
        print("  " + describe(rec))
    bad = run.ledger.verify()
    print(f"ledger: {len(run.ledger)} records, chain {'intact' if bad is None else f'BROKEN at {bad}'}, "
          f"head {run.ledger.head_hash.hex()}")
    return EXIT_OK


def cmd_run_scenario(args) -> int:
    scen = FraudScenario.from_catalog(args.name)
    run = run_scenario(scen, args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        run.ledger.save(out / ledger_filename(scen.name, args.seed))
        (out / f"{scen.name.value}-{args.seed}.outcome.json").write_text(
            json.dumps(
                {"scenario": scen.name.value, "seed": args.seed, "expected": scen.expected.to_json(),
                 "actual": run.outcome.to_json(), "match": run.matches},
                indent=2, sort_keys=True,
            ) + "\n"
        )
    except OSError as exc:
        raise ConfigError(f"cannot write to {out}: {exc}") from exc
    print(json.dumps(run.outcome.to_json(), sort_keys=True))
    return EXIT_OK if run.matches else EXIT_MISMATCH


def cmd_run_suite(args) -> int:
    entries, seed = load_suite_config(args.config)
    report = run_suite(entries, args.out, seed)
    sys.stdout.write(report.table())
    for r in report.mismatches:
        print(f"mismatch: {r.entry.scenario.name.value} seed {r.entry.seed}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_MISMATCH


def _load_ledger(path: str) -> Ledger:
    try:
        return Ledger.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read ledger {path}: {exc}") from exc


def cmd_verify_ledger(args) -> int:
    try:
        ledger = _load_ledger(args.file)
    except LedgerIntegrityError as exc:
        print(f"FAIL: {exc} (first bad index {exc.first_bad_index})")
        return EXIT_LEDGER
    problems = audit_signatures(ledger.records)
    if problems:
        for p in problems:
            print(f"FAIL: {p}")
        return EXIT_LEDGER
    print(f"OK: {len(ledger)} records, head {ledger.head_hash.hex()}")
    return EXIT_OK


def cmd_report_costs(args) -> int:
    schedule = GasSchedule.load(args.schedule) if args.schedule else DEFAULT_SCHEDULE
    try:
        series = load_prices(args.prices)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.prices}: {exc}") from exc
    except (PriceSeriesError, EmptySeries) as exc:
        raise ConfigError(f"{args.prices}: {exc}") from exc
    try:
        reports = operation_reports(series, schedule, args.lines, args.signatures)
    except EmptySeries as exc:
        raise ConfigError(f"{args.prices}: {exc}") from exc
    sys.stdout.write(render_reports(reports, args.format))
    return EXIT_OK


def cmd_audit(args) -> int:
    try:
        ledger = _load_ledger(args.ledger)
    except LedgerIntegrityError as exc:
        print(f"FAIL: {exc}")
        return EXIT_LEDGER
    try:
        claim_id = bytes.fromhex(args.claim)
    except ValueError:
        raise ConfigError(f"claim id is not hex: {args.claim!r}") from None
    trail = ledger.audit_trail(claim_id)
    if not trail:
        print(f"no records reference claim {args.claim}")
    for rec in trail:
        print(describe(rec))
    return EXIT_OK


COMMANDS = {
    "demo": cmd_demo,
    "run-scenario": cmd_run_scenario,
    "run-suite": cmd_run_suite,
    "verify-ledger": cmd_verify_ledger,
    "report-costs": cmd_report_costs,
    "audit": cmd_audit,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ClaimsigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
