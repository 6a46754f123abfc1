import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as gamma_fn

from edgestep import Constant, DomainError, InverseLogPower, PowerLaw, UnsupportedRegimeError
from edgestep.edge_step import err_term, expected_vertices
from edgestep.theory import (
    ExpectationTable,
    concentration_halfwidth,
    corollary_band,
    default_d_max,
    evolve_expectations,
    expected_first_vertex_degree,
    expected_ratio,
    general_concentration_bound,
    halfwidth_from_F,
    p_gamma,
    p_gamma_recursive,
    p_gamma_tail,
    read_expectation_csv,
    warn_if_truncated,
)

from conftest import ALL_FAMILY_SPECS
from oracles import enumerate_degree_law, expected_counts, expected_first_degree

GAMMA_GRID = [round(0.1 * k, 1) for k in range(10)]


# --- limit law ----------------------------------------------------------------


def test_p_gamma_examples():
    assert p_gamma(0.0, 1) == pytest.approx(0.5, rel=1e-14)
    assert p_gamma(0.5, 1) == pytest.approx(1 / 3, rel=1e-14)
    assert p_gamma(0.0, 4) == pytest.approx(0.05, rel=1e-14)
    assert p_gamma_recursive(0.5, 2) == pytest.approx(2 / 15, rel=1e-15)


@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 0.75])
def test_p_gamma_base_case(g):
    assert p_gamma_recursive(g, 1) == pytest.approx((1 - g) / (2 - g), rel=1e-15)
    assert p_gamma(g, 1) == pytest.approx((1 - g) / (2 - g), rel=1e-13)


def test_p_zero_closed_form():
    d = np.arange(1, 10**4 + 1, dtype=float)
    np.testing.assert_allclose(p_gamma(0.0, d), 1.0 / (d * (d + 1)), rtol=1e-10)


@pytest.mark.parametrize("g", GAMMA_GRID)
def test_closed_form_matches_recursion(g):
    d = np.arange(1, 10**4 + 1)
    rec = np.empty(d.size)
    rec[0] = p_gamma_recursive(g, 1)
    for k in range(2, d.size + 1):
        rec[k - 1] = rec[k - 2] * (k - 1) / (k + 1 - g)
    np.testing.assert_allclose(p_gamma(g, d), rec, rtol=1e-10)
    for k in (7, 300, 10**4):
        assert p_gamma_recursive(g, k) == pytest.approx(rec[k - 1], rel=1e-10)


@pytest.mark.parametrize("g", GAMMA_GRID)
def test_p_gamma_positive_decreasing_with_power_tail(g):
    d = np.arange(1, 2001)
    p = p_gamma(g, d)
    assert np.all(p > 0) and np.all(np.diff(p) < 0)
    scaled = p_gamma(g, 10**4) * float(10**4) ** (2 - g)
    assert scaled == pytest.approx((1 - g) * gamma_fn(2 - g), rel=0.01)


@pytest.mark.parametrize("g", [0.0, 0.3, 0.5, 0.9])
def test_total_mass_via_tail(g):
    for D in (1, 10, 1000):
        head = float(np.sum(p_gamma(g, np.arange(1, D + 1))))
        assert head + p_gamma_tail(g, D) == pytest.approx(1.0, rel=1e-12)


def test_p_gamma_domain():
    for g in (-0.1, 1.0, 1.5):
        with pytest.raises(DomainError):
            p_gamma(g, 3)
        with pytest.raises(DomainError):
            p_gamma_recursive(g, 3)
    with pytest.raises(DomainError):
        p_gamma(0.5, 0)


# --- recursion -----------------------------------------------------------------


def test_initial_row():
    table = evolve_expectations(PowerLaw(c=1.0, gamma=0.5), [1])
    row = table.rows[1]
    assert row[2] == 1.0 and row.sum() == 1.0
    assert expected_ratio(table, 1, 2) == 1.0


def test_two_step_hand_enumeration():
    table = evolve_expectations(PowerLaw(c=1.0, gamma=1.0), [2])  # f(2) = 1/2
    assert table.expected_count(2, 1) == pytest.approx(0.5, abs=1e-15)
    assert table.expected_count(2, 3) == pytest.approx(0.5, abs=1e-15)
    assert table.expected_count(2, 4) == pytest.approx(0.5, abs=1e-15)
    assert table.expected_count(2, 2) == 0.0


def test_matches_exact_enumeration_constant():
    half = Fraction(1, 2)
    t = 7
    exact = expected_counts(enumerate_degree_law(lambda s: half, t))
    table = evolve_expectations(Constant(p=0.5), [t])
    for d in range(1, 2 * t + 1):
        assert table.expected_count(t, d) == pytest.approx(float(exact.get(d, 0)), rel=1e-13, abs=1e-15)


def test_matches_exact_enumeration_power_law():
    spec = PowerLaw(c=1.0, gamma=0.5)
    t = 6
    law = enumerate_degree_law(lambda s: s**-0.5, t)
    exact = expected_counts(law)
    table = evolve_expectations(spec, [t])
    for d in range(1, 2 * t + 1):
        assert table.expected_count(t, d) == pytest.approx(exact.get(d, 0.0), rel=1e-12, abs=1e-15)
    assert expected_first_vertex_degree(spec, t) == pytest.approx(expected_first_degree(law), rel=1e-12)


@pytest.mark.parametrize("spec", ALL_FAMILY_SPECS, ids=lambda s: f"{s.family}-{s.gamma}")
def test_conservation_identities(spec):
    cps = [10, 100, 1000, 10**4]
    table = evolve_expectations(spec, cps, d_max=2 * cps[-1])
    for t in cps:
        row = table.rows[t]
        assert np.all(row >= 0)
        F = expected_vertices(spec, t)
        assert row.sum() == pytest.approx(F, rel=1e-9)
        assert np.arange(row.size) @ row == pytest.approx(2 * t, rel=1e-9)
        assert table.truncated_mass[t] < 1e-9 * F
    assert not table.truncation_warning


def test_truncation_keeps_exact_entries_and_flags():
    spec = PowerLaw(c=1.0, gamma=0.25)
    full = evolve_expectations(spec, [2000], d_max=4000)
    cut = evolve_expectations(spec, [2000], d_max=32)
    np.testing.assert_allclose(cut.rows[2000][1:33], full.rows[2000][1:33], rtol=1e-12, atol=0)
    assert cut.truncation_warning
    assert cut.truncated_mass[2000] == pytest.approx(full.rows[2000][33:].sum(), rel=1e-9)
    with pytest.warns(UserWarning):
        warn_if_truncated(cut)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        warn_if_truncated(full)


def test_table_errors():
    table = evolve_expectations(Constant(p=0.5), [10, 20])
    with pytest.raises(KeyError):
        table.expected_count(15, 1)
    with pytest.raises(KeyError):
        expected_ratio(table, 15, 1)
    with pytest.raises(DomainError):
        evolve_expectations(Constant(p=0.5), [0, 5])
    with pytest.raises(DomainError):
        evolve_expectations(Constant(p=0.5), [5], d_max=1)


def test_default_d_max():
    assert default_d_max(100) == 200
    assert default_d_max(10**6) == 4096


def test_ratio_converges_towards_limit():
    spec = PowerLaw(c=1.0, gamma=0.5)
    table = evolve_expectations(spec, [10**3, 10**5], d_max=64)
    far = abs(expected_ratio(table, 10**3, 1) - 1 / 3)
    near = abs(expected_ratio(table, 10**5, 1) - 1 / 3)
    assert near < far


@pytest.mark.slow
def test_mass_escape_deterministic():
    spec = PowerLaw(c=1.0, gamma=1.0)
    cps = [10**3, 10**4, 10**5, 10**6]
    table = evolve_expectations(spec, cps, d_max=16)
    ratios = [table.rows[t][1:6].sum() / table.F[t] for t in cps]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_constant_tail_slope():
    from edgestep.stats import fit_tail_exponent

    table = evolve_expectations(Constant(p=0.5), [10**5], d_max=64)
    values = {d: expected_ratio(table, 10**5, d) for d in range(10, 41)}
    slope, _ = fit_tail_exponent(values, 10, 40)
    assert slope == pytest.approx(-7 / 3, abs=0.1)


def test_csv_round_trip(tmp_path):
    spec = InverseLogPower(c=1.0, gamma=0.25)
    table = evolve_expectations(spec, [1, 50, 200])
    path = tmp_path / "e.csv"
    table.to_csv(path)
    back = read_expectation_csv(path, spec, table.d_max)
    for t in table.checkpoints:
        np.testing.assert_array_equal(back.rows[t], table.rows[t])
        assert back.F[t] == table.F[t]


def test_csv_single_row_at_t1(tmp_path):
    path = tmp_path / "e.csv"
    evolve_expectations(Constant(p=0.5), [1]).to_csv(path)
    assert path.read_text() == "t,d,expected_count,F_t,ratio\n1,2,1.0,1.0,1.0\n"


@pytest.mark.parametrize(
    "body",
    [
        "",
        "t,d,wrong\n",
        "t,d,expected_count,F_t,ratio\n",
        "t,d,expected_count,F_t,ratio\n1,2,abc,1.0,1.0\n",
        "t,d,expected_count,F_t,ratio\n1,2,1.0\n",
        "t,d,expected_count,F_t,ratio\n5,1,-1.0,3.0,0.1\n",
        "t,d,expected_count,F_t,ratio\n5,1,1.0,3.0,0.1\n5,2,1.0,4.0,0.1\n",
    ],
)
def test_read_csv_rejects_malformed(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValueError):
        read_expectation_csv(path, Constant(p=0.5))


# --- bounds --------------------------------------------------------------------


def test_halfwidth_substitution():
    hw = halfwidth_from_F(1000.0, 0.0, 10**4, 2, 1.0)
    assert hw.halfwidth == pytest.approx(20 / math.sqrt(1000))
    assert hw.halfwidth == pytest.approx(0.6325, abs=1e-4)
    assert hw.failure_prob == pytest.approx(3 * math.exp(-1 / 3))


def test_halfwidth_limits_and_condition():
    spec = PowerLaw(c=1.0, gamma=0.0)
    tiny = concentration_halfwidth(spec, 1000, 1, 1e-12)
    assert tiny.halfwidth < 1e-10 and tiny.failure_prob == pytest.approx(3.0)
    assert tiny.condition_ok
    assert not concentration_halfwidth(spec, 1000, 1, 1e6).condition_ok
    with pytest.raises(UnsupportedRegimeError):
        concentration_halfwidth(PowerLaw(c=1.0, gamma=1.0), 1000, 1, 1.0)


@settings(max_examples=40, deadline=None)
@given(
    F=st.floats(1.0, 1e9),
    g=st.floats(0.0, 0.99),
    d=st.integers(1, 50),
    A=st.floats(1e-3, 1e3),
)
def test_halfwidth_formula_properties(F, g, d, A):
    hw = halfwidth_from_F(F, g, 1000, d, A)
    assert hw.halfwidth == pytest.approx(10 * d * A / math.sqrt((1 - g) * F), rel=1e-12)
    assert halfwidth_from_F(F, g, 1000, 2 * d, A).halfwidth == pytest.approx(2 * hw.halfwidth, rel=1e-12)
    assert 0 <= hw.failure_prob <= 3


def test_general_bound_example():
    spec = Constant(p=1.0)
    lam = 50.0
    sigma2 = 10 * sum((s + lam) / s for s in range(1, 100))
    expected = math.exp(-lam**2 / (2 * sigma2 + 8 * lam / 3)) + math.exp(-lam**2 / (2 * 100 + 4 * lam / 3))
    value = general_concentration_bound(spec, 100, 1, lam)
    assert value == pytest.approx(expected, rel=1e-12)
    assert 0 < value < 2


def test_general_bound_monotone_and_vanishing():
    spec = PowerLaw(c=1.0, gamma=0.5)
    lams = np.geomspace(1, 1e6, 30)
    vals = [general_concentration_bound(spec, 500, 3, lam) for lam in lams]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-12


def test_corollary_band_structure():
    spec = PowerLaw(c=1.0, gamma=0.5)
    t = 10**4
    F = expected_vertices(spec, t)
    err = err_term(spec, t, 0.5) / F
    b1 = corollary_band(spec, t, 1, 1.0, 0.5) - err
    b2 = corollary_band(spec, t, 2, 1.0, 0.5) - err
    assert b1 == pytest.approx(math.sqrt(40 / F), rel=1e-12)
    assert b2 == pytest.approx(2 * b1, rel=1e-12)
    # substitution check at F = 4000
    assert 1.0 * math.sqrt(40 * 1 / 4000) == pytest.approx(0.1)


def test_corollary_band_decreasing_in_t():
    spec = PowerLaw(c=1.0, gamma=0.5)
    bands = [corollary_band(spec, 10**k, 2, 3.0, 0.5) for k in range(4, 9)]
    assert all(b < a for a, b in zip(bands, bands[1:]))
    with pytest.raises(UnsupportedRegimeError):
        corollary_band(PowerLaw(c=1.0, gamma=1.0), 100, 1, 1.0, 0.5)


def test_expectation_table_is_dataclass_with_checkpoints():
    table = evolve_expectations(Constant(p=0.5), [30, 10, 20, 10])
    assert isinstance(table, ExpectationTable)
    assert table.checkpoints == [10, 20, 30]
