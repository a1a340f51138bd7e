import io
import math

import numpy as np
import pytest

from wordrank.asymptotics import (
    RegimeMismatch,
    compute_nu,
    emit_series,
    fit_exponential_rate,
    fit_power_exponent,
    intermediate_diagnostics,
    power_overlay,
    q_offsets,
    read_series,
    select_model,
    window_ranks,
)
from wordrank.chain import ChainSpec, compose_parallel
from wordrank.enumeration import rank_series

LN_SQRT2 = math.log(math.sqrt(2))


def test_nu_closed_forms(figs):
    d = compute_nu(figs["fig1d"])
    assert d.nu == pytest.approx(LN_SQRT2, abs=1e-12)
    assert [t.k for t in d.terms] == [1, 1]
    e = compute_nu(figs["fig1e"])
    assert e.nu == pytest.approx(LN_SQRT2, abs=1e-12)
    assert [t.k for t in e.terms] == [4]
    assert e.alpha == 0.25 and e.heaviest == (1, 2)
    s = compute_nu(figs["fig1e_start1"])
    assert s.nu == pytest.approx(math.log(2), abs=1e-12)
    assert [t.k for t in s.terms] == [2]


def test_inverse_nu_is_sum_of_contributions(figs):
    r = compute_nu(figs["fig1d"])
    assert 1 / r.nu == pytest.approx(r.inverse_nu, rel=1e-15)
    assert r.inverse_nu == pytest.approx(2 / math.log(2), rel=1e-15)


def test_nu_is_additive_under_parallel_composition():
    def loop(p):
        return ChainSpec(np.array([[1.0, 0.0], [1 - p, p]]), np.array([1.0]))

    spec = compose_parallel([loop(0.3), loop(0.6)])
    r = compute_nu(spec)
    assert r.inverse_nu == pytest.approx(-1 / math.log(0.3) - 1 / math.log(0.6), rel=1e-14)
    assert r.alpha == 0.6


def test_support_changes_nu_not_beta(figs):
    from wordrank.spectral import solve_beta

    assert compute_nu(figs["fig1e"]).nu != compute_nu(figs["fig1e_start1"]).nu
    assert solve_beta(figs["fig1e"].substochastic) == solve_beta(figs["fig1e_start1"].substochastic)


def test_nu_regime_mismatch(figs):
    for name in ("fig1a", "fig1b", "fig1c", "fig2"):
        with pytest.raises(RegimeMismatch):
            compute_nu(figs[name])


def test_exact_power_law_fit():
    t = np.arange(1, 2001)
    fit = fit_power_exponent(t, -2.0 * np.log(t))
    assert fit.slope == pytest.approx(-2.0, abs=1e-9)
    assert fit.samples >= 50
    assert fit.t_max == 2000 and fit.t_min <= 1000


def test_exact_exponential_fit():
    t = np.arange(1, 2001)
    fit = fit_exponential_rate(t, -0.5 * t)
    assert fit.estimate == pytest.approx(0.5, abs=1e-9)


def test_fit_needs_enough_points():
    with pytest.raises(ValueError):
        fit_power_exponent(np.arange(1, 50), np.zeros(49))


def test_window_is_geometric():
    ranks = window_ranks(10**6)
    ratios = ranks[1:] / ranks[:-1]
    assert ratios.max() < 1.06
    assert ranks.size >= 50


def test_fig1d_prefers_exponential(figs):
    t, logp = rank_series(figs["fig1d"], 3000)
    sel = select_model(t, logp)
    assert sel["preferred"] == "exponential"
    assert sel["power"]["residual"] > 10 * sel["exponential"]["residual"]


def test_synthetic_diagnostics():
    t = np.arange(1, 100_001)
    power = intermediate_diagnostics(t, -3.0 * np.log(t))
    assert power.shape == "power-like"
    expo = intermediate_diagnostics(t, -1.0 * t)
    assert expo.shape == "exponential-like"
    assert not expo.sqrt_bounded


def test_q_offsets_are_bounded(figs):
    xs = list(range(5, 41, 5))
    for name in ("fig1d", "fig1e", "fig1e_start1"):
        nu = compute_nu(figs[name]).nu
        assert all(abs(d) <= 10 for d in q_offsets(figs[name], nu, xs))


def test_series_round_trip():
    t = np.array([1, 2, 3])
    logp = np.log(np.array([0.5, 0.25, 0.125])) + np.array([0.0, 1e-17, -3.3e-16])
    buf = io.StringIO()
    emit_series(buf, t, logp)
    back = read_series(io.StringIO(buf.getvalue()))
    np.testing.assert_array_equal(back["t"], t)
    np.testing.assert_array_equal(back["ln_p"], logp)
    buf2 = io.StringIO()
    emit_series(buf2, back["t"], back["ln_p"])
    assert buf2.getvalue() == buf.getvalue()


def test_empty_series_is_header_only(tmp_path):
    path = tmp_path / "s.csv"
    emit_series(path, [], [])
    assert path.read_text() == "t,p,ln_t,ln_p\n"


def test_overlay_column(figs):
    t, logp = rank_series(figs["fig1b"], 2000)
    beta = math.log2((1 + math.sqrt(5)) / 2)
    ov = power_overlay(t, logp, beta)
    assert ov[999] == pytest.approx(logp[999], abs=1e-12)
    buf = io.StringIO()
    emit_series(buf, t, logp, ov)
    assert buf.getvalue().splitlines()[0] == "t,p,ln_t,ln_p,theory_p"


def test_jsonl_series():
    buf = io.StringIO()
    emit_series(buf, [1], [math.log(0.5)], fmt="jsonl")
    assert buf.getvalue() == '{"t": 1, "p": 0.5, "ln_t": 0, "ln_p": -0.69314718055994529}\n'
