import math

import pytest
from hypothesis import given, strategies as st

from mdisarg import keyrate
from mdisarg.errors import DegenerateTotalsError, DomainError
from mdisarg.events import EventType
from mdisarg.keyrate import GYS, ErrorCorrection, ExperimentParams, binary_entropy, key_rate, totals
from mdisarg.optics import PA_PAIRS, YieldEntry, YieldTable, build_yield_table

FIXED = ErrorCorrection("fixed", 1.33)


def _table(cells, n_max=2):
    entries = {(int(t), m, n): YieldEntry(0.0, 0.0, 0.0 if (m, n) in PA_PAIRS else None)
               for t in (1, 2) for m in range(n_max + 1) for n in range(n_max + 1)}
    for key, entry in cells.items():
        entries[key] = entry
    return YieldTable(entries, n_max, "synthetic")


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    ref = -0.11 * math.log(0.11) / math.log(2) - 0.89 * math.log(0.89) / math.log(2)
    assert abs(binary_entropy(0.11) - ref) < 1e-15
    assert abs(binary_entropy(0.11) - 0.49992) < 1e-5
    for bad in (-0.1, 1.01):
        with pytest.raises(DomainError):
            binary_entropy(bad)


def test_binary_entropy_symmetry_grid():
    for i in range(1000):
        x = i / 999
        assert abs(binary_entropy(x) - binary_entropy(1 - x)) < 1e-12


@given(st.floats(0, 1))
def test_binary_entropy_bounds(x):
    assert 0 <= binary_entropy(x) <= 1


def test_error_correction_factor():
    enzer = ErrorCorrection()
    assert keyrate.error_correction_factor(enzer, 0.0) == 1.1581
    assert abs(keyrate.error_correction_factor(enzer, 0.05) - 1.16525) < 1e-6
    assert keyrate.error_correction_factor(FIXED, 0.3) == 1.33
    with pytest.raises(DomainError):
        keyrate.error_correction_factor(enzer, 0.6)
    with pytest.raises(DomainError):
        ErrorCorrection("fixed", 0.9)


def test_error_correction_parse():
    assert ErrorCorrection.parse("enzer") == ErrorCorrection()
    assert ErrorCorrection.parse("fixed:1.33") == FIXED
    assert str(FIXED) == "fixed:1.33"
    for bad in ("cubic", "fixed:x", "fixed:0.5"):
        with pytest.raises(DomainError):
            ErrorCorrection.parse(bad)


def test_transmittance():
    assert keyrate.transmittance(0, 0.21) == 1.0
    assert abs(keyrate.transmittance(100, 0.21) - 10**-1.05) < 1e-12
    assert abs(keyrate.transmittance(100, 0.21) - 0.08913) < 1e-5
    with pytest.raises(DomainError):
        keyrate.transmittance(-1, 0.21)


@given(st.floats(0, 300), st.floats(0.01, 1))
def test_transmittance_doubling(L, alpha):
    t = keyrate.transmittance(L, alpha)
    assert math.isclose(keyrate.transmittance(2 * L, alpha), t * t, rel_tol=1e-12, abs_tol=1e-300)


def test_poisson_weight():
    assert abs(keyrate.poisson_weight(0.1, 0) - 0.90484) < 1e-5
    assert abs(keyrate.poisson_weight(0.1, 1) - 0.090484) < 1e-6
    with pytest.raises(DomainError):
        keyrate.poisson_weight(0.0, 1)


def test_poisson_truncation_mass():
    # The tail beyond n_max=6 is about 1.0e-6 at μ=0.5 and 1.8e-11 at μ=0.1.
    tail_05 = 1 - sum(keyrate.poisson_weight(0.5, m) for m in range(7))
    tail_01 = 1 - sum(keyrate.poisson_weight(0.1, m) for m in range(7))
    assert abs(tail_05 - 1.0024e-6) < 1e-9
    assert tail_01 < 1e-10


def test_params_validation():
    assert GYS.mu_b == GYS.mu_a
    for kw in ({"eta": 0}, {"dark": 1.0}, {"alpha": 0}, {"mu_a": -1}, {"n_max": 1}):
        with pytest.raises(DomainError):
            ExperimentParams(**kw)


def test_totals_single_cell():
    t = totals(_table({(1, 1, 1): YieldEntry(2e-4, 0.07, 0.1), (2, 0, 1): YieldEntry(1e-5, 0.3)}))
    assert t[EventType.TYPE1] == (2e-4, 0.07)
    assert t[EventType.TYPE2] == (1e-5, 0.3)


def test_totals_constant_error():
    cells = {(t, m, n): YieldEntry(10.0 ** -(m + n + 3), 0.125, None) for t in (1, 2) for m in range(3) for n in range(3)}
    for q, e in totals(_table(cells)).values():
        assert abs(e - 0.125) < 1e-15


def test_totals_degenerate():
    with pytest.raises(DegenerateTotalsError):
        totals(_table({(1, 1, 1): YieldEntry(1e-4, 0.0, 0.0)}))


def test_totals_match_flat_resummation():
    table = build_yield_table(GYS, 50.0)
    text = table.to_text()
    rows = [ln.split("\t") for ln in text.splitlines() if ln and not ln.startswith(("#", "type"))]
    got = totals(table)
    for ev in EventType:
        q = sum(float(r[3]) for r in rows if int(r[0]) == ev)
        qe = sum(float(r[3]) * float(r[4]) for r in rows if int(r[0]) == ev)
        assert abs(got[ev][0] - q) < 1e-12
        assert abs(got[ev][1] - qe / q) < 1e-12


def test_single_cell_key_rate_is_q():
    q = 3.7e-4
    table = _table({(1, 1, 1): YieldEntry(q, 0.0, 0.0), (2, 1, 1): YieldEntry(q, 0.0, 0.0)})
    for ev in EventType:
        pt = key_rate(ev, 0.0, GYS, table)
        assert abs(pt.K - q) < 1e-12
        assert pt.reason is None


def test_all_zero_table():
    pt = key_rate(EventType.TYPE1, 0.0, GYS, _table({}))
    assert pt.K == 0.0 and pt.reason


def test_clamp_and_components():
    table = build_yield_table(ExperimentParams(dark=1e-3), 0.0)
    for ev in EventType:
        pt = key_rate(ev, 0.0, ExperimentParams(dark=1e-3), table)
        assert pt.K == 0.0
        assert pt.raw < 0
        assert all(pt.components[f"pa_{m}{n}"] >= 0 for m, n in PA_PAIRS)
        assert pt.components["ec"] <= 0


def test_error_above_half_gives_zero():
    table = _table({(1, 1, 1): YieldEntry(1e-3, 0.6, 0.0)})
    pt = key_rate(EventType.TYPE1, 0.0, GYS, table)
    assert pt.K == 0.0 and "1/2" in pt.reason


@pytest.mark.parametrize("e_b", [0.0, 0.01, 0.03, 0.08])
def test_monotone_in_error_correction_factor(e_b):
    table = _table({(1, 1, 1): YieldEntry(1e-3, e_b, 0.02), (1, 2, 1): YieldEntry(2e-4, e_b, 0.1)})
    ks = [key_rate(EventType.TYPE1, 0.0, ExperimentParams(fe=ErrorCorrection("fixed", f)), table).K for f in (1.0, 1.2, 1.5, 2.0, 3.0)]
    assert all(a >= b for a, b in zip(ks, ks[1:]))


def test_key_rate_deterministic_and_nonnegative():
    a = key_rate(EventType.TYPE2, 20.0, GYS)
    b = key_rate(EventType.TYPE2, 20.0, GYS)
    assert a == b and a.K >= 0
