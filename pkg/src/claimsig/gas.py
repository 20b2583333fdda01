"""Abstract gas metering and USD cost reports over a price series.

Costs are computed exactly with :class:`fractions.Fraction` and only rounded
(half-even, to cents) when a report is rendered.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from claimsig.errors import ConfigError, EmptySeries, PriceSeriesError

GWEI = Fraction(1, 10**9)

# Average USD per operation on Ethereum mainnet over the 100-day window.
# Historical market data; used only to check the default schedule's ratios.
REFERENCE_ETHEREUM_USD = {"Deploy": Decimal("80.22"), "Submit": Decimal("20.60"), "MultiSig": Decimal("6.47")}
REFERENCE_OPTIMISM_USD = {"Deploy": Decimal("0.35"), "Submit": Decimal("0.089"), "MultiSig": Decimal("0.028")}

# Shape of the operations the reference figures were measured on.
REFERENCE_SUBMIT_LINES = 1
REFERENCE_SIGNATURES = 2


class Operation(str, Enum):
    DEPLOY = "Deploy"
    SUBMIT = "Submit"
    MULTISIG = "MultiSig"


@dataclass(frozen=True)
class GasSchedule:
    deploy_gas: int = 1_240_000
    submit_base_gas: int = 300_000
    submit_per_line_gas: int = 18_000
    multisig_per_signature_gas: int = 50_000

    def __post_init__(self) -> None:
        for name in ("deploy_gas", "submit_base_gas", "submit_per_line_gas", "multisig_per_signature_gas"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

    @classmethod
    def load(cls, path: str | Path) -> "GasSchedule":
        try:
            obj = json.loads(Path(path).read_text())
            return cls(**obj)
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc


DEFAULT_SCHEDULE = GasSchedule()


def meter(op: Operation, lines: int = 0, signatures: int = 0, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    if lines < 0 or signatures < 0:
        raise ValueError("counts must be non-negative")
    op = Operation(op)
    if op is Operation.DEPLOY:
        return schedule.deploy_gas
    if op is Operation.SUBMIT:
        return schedule.submit_base_gas + lines * schedule.submit_per_line_gas
    return signatures * schedule.multisig_per_signature_gas


@dataclass(frozen=True)
class PricePoint:
    day: dt.date
    gas_price: Fraction  # gwei per gas unit
    token_price: Fraction  # USD per token

    def __post_init__(self) -> None:
        object.__setattr__(self, "gas_price", Fraction(self.gas_price))
        object.__setattr__(self, "token_price", Fraction(self.token_price))
        if self.gas_price <= 0 or self.token_price <= 0:
            raise PriceSeriesError(f"{self.day}: prices must be strictly positive")


def check_series(series: Sequence[PricePoint]) -> None:
    for a, b in zip(series, series[1:]):
        if b.day <= a.day:
            raise PriceSeriesError(f"days not strictly increasing at {b.day}")


def usd_cost(gas: int, point: PricePoint) -> Fraction:
    return gas * point.gas_price * GWEI * point.token_price


def _cents(x: Fraction) -> Decimal:
    d = Decimal(x.numerator) / Decimal(x.denominator)
    return d.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


@dataclass(frozen=True)
class CostReport:
    operation: Operation
    gas: int
    min_usd: Fraction
    max_usd: Fraction
    mean_usd: Fraction
    days: int

    def rounded(self) -> dict:
        return {
            "operation": self.operation.value,
            "gas": self.gas,
            "min_usd": _cents(self.min_usd),
            "mean_usd": _cents(self.mean_usd),
            "max_usd": _cents(self.max_usd),
            "days": self.days,
        }


def cost_report(gas: int, series: Sequence[PricePoint], operation: Operation = Operation.DEPLOY) -> CostReport:
    if not series:
        raise EmptySeries("price series is empty")
    check_series(series)
    costs = [usd_cost(gas, p) for p in series]
    return CostReport(
        operation=Operation(operation),
        gas=gas,
        min_usd=min(costs),
        max_usd=max(costs),
        mean_usd=sum(costs, Fraction(0)) / len(costs),
        days=len(costs),
    )


def operation_reports(
    series: Sequence[PricePoint],
    schedule: GasSchedule = DEFAULT_SCHEDULE,
    lines: int = REFERENCE_SUBMIT_LINES,
    signatures: int = REFERENCE_SIGNATURES,
) -> list[CostReport]:
    """One report per operation kind, in Deploy, Submit, MultiSig order."""
    return [
        cost_report(meter(op, lines, signatures, schedule), series, op)
        for op in Operation
    ]


PRICE_HEADER = ["day", "gas_price_gwei", "token_usd"]


def parse_prices(text: str) -> list[PricePoint]:
    """Parse ``day,gas_price_gwei,token_usd`` CSV. Errors cite the file line."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise PriceSeriesError("line 1: missing header") from None
    if [h.strip() for h in header] != PRICE_HEADER:
        raise PriceSeriesError(f"line 1: expected header {','.join(PRICE_HEADER)}")
    series: list[PricePoint] = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise PriceSeriesError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            day = dt.date.fromisoformat(row[0].strip())
            point = PricePoint(day, Fraction(row[1].strip()), Fraction(row[2].strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise PriceSeriesError(f"line {lineno}: {exc}") from exc
        except PriceSeriesError as exc:
            raise PriceSeriesError(f"line {lineno}: {exc}") from exc
        if series and point.day <= series[-1].day:
            raise PriceSeriesError(f"line {lineno}: day {day} not after {series[-1].day}")
        series.append(point)
    return series


def load_prices(path: str | Path) -> list[PricePoint]:
    return parse_prices(Path(path).read_text())


def render_reports(reports: Iterable[CostReport], fmt: str = "table") -> str:
    rows = [r.rounded() for r in reports]
    cols = ["operation", "gas", "min_usd", "mean_usd", "max_usd", "days"]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] for c in cols])
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    cells = [cols] + [[str(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    out = []
    for n, row in enumerate(cells):
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
