import math

import numpy as np
import pytest

from anytime_cs import sim
from anytime_cs._errors import DomainError
from anytime_cs.boundaries import linear_boundary
from anytime_cs.confseq import EmpiricalBernsteinStrategy, HoeffdingStrategy, NaiveSNStrategy
from anytime_cs.psi import PsiFamily
from anytime_cs.sim import (
    PRESETS,
    Scenario,
    crossing_probability_mc,
    parse_law,
    preset,
    rep_rng,
    run_scenario,
    t_grid,
)


def small(name, **kw):
    return preset(name, **{"horizon": 400, "reps": 60, **kw})


def test_rep_rng_streams():
    a = rep_rng(3, 7).random(5)
    assert np.array_equal(a, rep_rng(3, 7).random(5))
    assert not np.array_equal(a, rep_rng(3, 8).random(5))
    assert not np.array_equal(a, rep_rng(4, 7).random(5))
    with pytest.raises(DomainError):
        rep_rng(-1, 0)


def test_parse_law():
    law = parse_law("bernoulli(0.3)")
    assert law.params == (0.3,) and law.support == (0.0, 1.0)
    assert law.mean == 0.3 and law.var == pytest.approx(0.21)
    tp = parse_law("three_point")
    assert tp.mean == pytest.approx(-1.408 * 0.495 + 0.495 + 0.2, rel=1e-12)
    x = tp.draw(rep_rng(0, 0), 200000)
    assert set(np.unique(x)) <= {-1.408, 1.0, 20.0}
    assert x.mean() == pytest.approx(tp.mean, abs=0.05)
    for bad in ("cauchy", "bernoulli(1.5)", "bernoulli", "normal(0,-1)", "bernoulli(0.1,0.2)"):
        with pytest.raises(DomainError):
            parse_law(bad)


def test_t_grid():
    g = t_grid(10000)
    assert g[0] == 1 and g[-1] == 10000
    assert np.all(np.diff(g) > 0)
    assert 40 <= g.size <= 50


def test_scenario_validation():
    with pytest.raises(DomainError):
        Scenario("x", "bernoulli(0.5)", ("hoeffding",), horizon=0)
    with pytest.raises(DomainError):
        Scenario("x", "bernoulli(0.5)", ("hoeffding",), reps=0)
    with pytest.raises(DomainError):
        Scenario("x", "bernoulli(0.5)", ("hoeffding",), alpha=1.5)
    with pytest.raises(DomainError):
        Scenario("x", "normal(0,1)", ("hoeffding",))
    with pytest.raises(DomainError):
        preset("nope")


def test_deterministic_and_thread_independent(monkeypatch):
    sc = small("bernoulli05", reps=80)
    first = run_scenario(sc).to_table()
    assert run_scenario(sc).to_table() == first
    monkeypatch.setattr(sim, "thread_count", lambda: 1)
    assert run_scenario(sc).to_table() == first
    other = run_scenario(small("bernoulli05", reps=80, seed=1)).to_table()
    assert other != first


def test_report_shape():
    rep = run_scenario(small("bernoulli05"))
    lines = rep.to_table().splitlines()
    assert lines[0] == "scenario,strategy,t,cum_miscoverage,mc_stderr,mean_width"
    assert len(lines) == 1 + len(PRESETS["bernoulli05"].strategies) * rep.t_grid.size
    for name in PRESETS["bernoulli05"].strategies:
        miss = rep.cum_miscoverage(name)
        assert np.all(np.diff(miss) >= 0)
        assert rep.final_miscoverage(name) == miss[-1]
        w = rep.mean_width(name)
        assert np.all(w > 0)
    # widths shrink over time for every bounded strategy
    assert rep.mean_width("hoeffding")[-1] < rep.mean_width("hoeffding")[0]


def test_widths_match_streaming_strategies():
    # one replication of the vectorized kernels against the sequential classes
    sc = small("bernoulli05", reps=1, strategies=("hoeffding", "empirical_bernstein", "naive_sn"))
    rep = run_scenario(sc)
    xs = sc_law_draw(sc)
    streams = {
        "hoeffding": HoeffdingStrategy(0.0, 1.0, 0.05, opt_time=sim.OPT_TIME),
        "empirical_bernstein": EmpiricalBernsteinStrategy(0.0, 1.0, 0.05, opt_var=0.25 * sim.OPT_TIME),
        "naive_sn": NaiveSNStrategy(0.0, 1.0, 0.05, opt_var=0.25 * sim.OPT_TIME),
    }
    widths = {k: [] for k in streams}
    grid = set(rep.t_grid.tolist())
    for t, x in enumerate(xs, 1):
        for k, s in streams.items():
            ci = s.update(float(x))
            if t in grid:
                widths[k].append(ci.width)
    for k in streams:
        assert np.allclose(rep.mean_width(k), widths[k], rtol=1e-9), k


def sc_law_draw(sc):
    return parse_law(sc.data_law).draw(rep_rng(sc.seed, 0), sc.horizon)


def test_gaussian_crossing_linear_below_alpha():
    u = linear_boundary(PsiFamily.normal(), 1.0, 0.05)
    rate, se = crossing_probability_mc(u, "gaussian_increments", 500, 2000, seed=5)
    assert rate <= 0.05 + 3 * se + 1e-3
    assert se == pytest.approx(math.sqrt(rate * (1 - rate) / 2000))


def test_crossing_mc_near_one():
    # nearly flat line just above zero: almost every walk pokes above it
    u = linear_boundary(PsiFamily.normal(), 0.01, 1 - 1e-9)
    rate, _ = crossing_probability_mc(u, "rademacher", 2000, 200, seed=1)
    assert rate > 0.95


def test_crossing_mc_bad_law():
    u = linear_boundary(PsiFamily.normal(), 1.0, 0.05)
    with pytest.raises(DomainError):
        crossing_probability_mc(u, "bernoulli(0.5)", 10, 10)
    with pytest.raises(DomainError):
        crossing_probability_mc(u, "cauchy", 10, 10)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_run_small(name):
    sc = preset(name, horizon=200, reps=30)
    rep = run_scenario(sc)
    assert set(rep.rows) == set(sc.strategies)
    for n in sc.strategies:
        assert 0.0 <= rep.final_miscoverage(n) <= 1.0


def test_rademacher_clt_loses_coverage():
    rep = run_scenario(preset("rademacher", horizon=10_000, reps=400))
    assert rep.final_miscoverage("normal_mixture") <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / 400)
    clt = rep.cum_miscoverage("clt")
    assert clt[-1] > 0.3
    assert clt[-1] > clt[len(clt) // 2] > 0.05


def test_widths_shrink_past_tuning_time():
    rep = run_scenario(preset("bernoulli05", horizon=3000, reps=40))
    sel = rep.t_grid >= sim.OPT_TIME
    for name in rep.rows:
        assert np.all(np.diff(rep.mean_width(name)[sel]) < 0), name
