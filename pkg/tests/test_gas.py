import datetime as dt
from decimal import Decimal, getcontext
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from claimsig.errors import ConfigError, EmptySeries, PriceSeriesError
from claimsig.gas import (
    DEFAULT_SCHEDULE,
    REFERENCE_ETHEREUM_USD,
    REFERENCE_OPTIMISM_USD,
    REFERENCE_SIGNATURES,
    REFERENCE_SUBMIT_LINES,
    GasSchedule,
    Operation,
    PricePoint,
    cost_report,
    meter,
    operation_reports,
    parse_prices,
    render_reports,
    usd_cost,
)

DAY0 = dt.date(2024, 1, 1)


def series_of(pairs):
    return [PricePoint(DAY0 + dt.timedelta(days=i), Fraction(g), Fraction(t)) for i, (g, t) in enumerate(pairs)]


def test_meter_examples():
    assert meter(Operation.DEPLOY) == 1_240_000
    assert meter(Operation.SUBMIT, lines=1) == 318_000
    assert meter(Operation.SUBMIT, lines=3) == 354_000
    assert meter(Operation.MULTISIG, signatures=2) == 100_000


def test_usd_cost_example():
    # 1e6 gas at 20 gwei and 2000 USD per token is 40 USD
    assert usd_cost(1_000_000, series_of([("20", "2000")])[0]) == 40


def test_cost_report_example():
    r = cost_report(1_000_000, series_of([("10", "2000"), ("30", "2000")]))
    assert (r.min_usd, r.mean_usd, r.max_usd, r.days) == (20, 40, 60, 2)


def test_rounding_half_even_at_output_only():
    # 0.125 USD rounds to 0.12, 0.135 to 0.14
    r = cost_report(1, series_of([(Fraction(1, 8) * 10**9, "1")]))
    assert r.rounded()["mean_usd"] == Decimal("0.12")
    r = cost_report(1, series_of([(Fraction(135, 1000) * 10**9, "1")]))
    assert r.rounded()["mean_usd"] == Decimal("0.14")


@pytest.mark.parametrize("reference", [REFERENCE_ETHEREUM_USD, REFERENCE_OPTIMISM_USD])
def test_default_schedule_ratios_within_one_percent(reference):
    gas = {op.value: meter(op, REFERENCE_SUBMIT_LINES, REFERENCE_SIGNATURES) for op in Operation}
    for a in gas:
        for b in gas:
            ours = Fraction(gas[a], gas[b])
            ref = Fraction(reference[a]) / Fraction(reference[b])
            rel = abs(ours - ref) / ref
            assert rel <= Fraction(1, 100), (a, b, float(rel))


def oracle_mean(gas, pairs):
    getcontext().prec = 60
    costs = [Decimal(gas) * Decimal(g) / Decimal(10**9) * Decimal(t) for g, t in pairs]
    return sum(costs) / len(costs)


prices = st.lists(st.tuples(st.integers(1, 500), st.integers(1, 10_000)), min_size=1, max_size=30)


@given(st.integers(1, 10**8), prices)
def test_mean_matches_decimal_oracle(gas, pairs):
    r = cost_report(gas, series_of(pairs))
    ours = Decimal(r.mean_usd.numerator) / Decimal(r.mean_usd.denominator)
    assert abs(ours - oracle_mean(gas, pairs)) < Decimal("1e-30")


@given(st.integers(1, 10**8), st.integers(1, 50), prices)
def test_linear_in_gas(gas, k, pairs):
    s = series_of(pairs)
    one, many = cost_report(gas, s), cost_report(gas * k, s)
    assert many.mean_usd == k * one.mean_usd
    assert many.min_usd == k * one.min_usd and many.max_usd == k * one.max_usd


@given(st.integers(1, 10**8), prices)
def test_min_mean_max_ordered(gas, pairs):
    r = cost_report(gas, series_of(pairs))
    assert r.min_usd <= r.mean_usd <= r.max_usd


def test_empty_series():
    with pytest.raises(EmptySeries):
        cost_report(1, [])


def test_unordered_series():
    s = series_of([("1", "1"), ("1", "1")])
    with pytest.raises(PriceSeriesError):
        cost_report(1, [s[1], s[0]])


@pytest.mark.parametrize("g,t", [("0", "1"), ("1", "-2")])
def test_non_positive_price(g, t):
    with pytest.raises(PriceSeriesError):
        PricePoint(DAY0, Fraction(g), Fraction(t))


def test_parse_prices():
    s = parse_prices("day,gas_price_gwei,token_usd\n2024-01-01,20.5,2200.10\n\n2024-01-02,18,2150\n")
    assert [p.gas_price for p in s] == [Fraction("20.5"), 18]
    assert s[0].token_price == Fraction("2200.10")


@pytest.mark.parametrize("text,line", [
    ("", "line 1"),
    ("d,g,t\n", "line 1"),
    ("day,gas_price_gwei,token_usd\n2024-01-01,1\n", "line 2"),
    ("day,gas_price_gwei,token_usd\n2024-01-01,1,1\nnot-a-date,1,1\n", "line 3"),
    ("day,gas_price_gwei,token_usd\n2024-01-01,abc,1\n", "line 2"),
    ("day,gas_price_gwei,token_usd\n2024-01-01,0,1\n", "line 2"),
    ("day,gas_price_gwei,token_usd\n2024-01-02,1,1\n2024-01-01,1,1\n", "line 3"),
])
def test_parse_prices_errors_cite_line(text, line):
    with pytest.raises(PriceSeriesError, match=line):
        parse_prices(text)


def test_schedule_validation(tmp_path):
    with pytest.raises(ConfigError):
        GasSchedule(deploy_gas=0)
    p = tmp_path / "s.json"
    p.write_text('{"deploy_gas": 5, "bogus": 1}')
    with pytest.raises(ConfigError):
        GasSchedule.load(p)
    p.write_text('{"deploy_gas": 5}')
    assert GasSchedule.load(p).deploy_gas == 5


def test_render_formats():
    reports = operation_reports(series_of([("20", "2000")]), DEFAULT_SCHEDULE)
    csv_text = render_reports(reports, "csv")
    assert csv_text.splitlines()[0] == "operation,gas,min_usd,mean_usd,max_usd,days"
    assert csv_text.splitlines()[1] == "Deploy,1240000,49.60,49.60,49.60,1"
    table = render_reports(reports, "table")
    assert "MultiSig" in table and "4.00" in table
    with pytest.raises(ValueError):
        render_reports(reports, "xml")


def test_negative_counts():
    with pytest.raises(ValueError):
        meter(Operation.SUBMIT, lines=-1)
