import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stemcovid.sim import (
    ASYMPTOMATIC,
    SCENARIOS,
    SYMPTOMATIC,
    Category,
    Disease,
    Profile,
    ScenarioConfig,
    Status,
    analytic_stay_probability,
    build_world,
    daily_schedules,
    generate_daily_schedule,
    infection_draws,
    run_simulation,
    stay_infection_frequency,
    step_hour,
)


def run_world(cfg, seed):
    world = build_world(cfg, seed)
    for h in range(cfg.T):
        step_hour(world, h)
    return world


class TestConfig:
    @pytest.mark.parametrize(
        "name,row",
        [
            ("S200N", (200, 50, 2, 10, 2, 1, "normal")),
            ("S200H", (200, 50, 2, 10, 2, 1, "high_risk")),
            ("S1000N", (1000, 250, 10, 50, 10, 5, "normal")),
        ],
    )
    def test_presets(self, name, row):
        c = ScenarioConfig.preset(name)
        assert (c.n_agents, c.p_vh, c.p_h, c.p_m, c.p_l, c.n_index, c.index_profile) == row
        assert (c.T, c.acc_fraction, c.incubation_mean, c.incubation_sd, c.runs) == (480, 0.2, 120.0, 12.0, 15)

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            ScenarioConfig.preset("S7")

    def test_dict_round_trip(self):
        c = ScenarioConfig.preset("S1000N", seed=9)
        assert ScenarioConfig.from_dict(c.to_dict()) == c

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            ScenarioConfig.from_dict({"bogus": 1})

    @pytest.mark.parametrize(
        "kw",
        [{"n_index": 300}, {"p_h": 0}, {"acc_fraction": 1.5}, {"index_profile": "x"}, {"p_vh": 10},
         {"home_hours": 11}, {"T": 0}],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ScenarioConfig(**kw)

    def test_partial_household(self):
        cfg = ScenarioConfig(n_agents=10, p_vh=3)
        w = build_world(cfg, 0)
        assert np.bincount(w.home).tolist() == [4, 4, 2]


class TestWorld:
    @pytest.mark.parametrize("name,places,households,index", [("S200N", 64, 50, 1), ("S1000N", 320, 250, 5)])
    def test_layout(self, name, places, households, index):
        cfg = SCENARIOS[name]
        w = build_world(cfg, 0)
        assert w.n_places == places
        assert np.bincount(w.home).tolist() == [4] * households
        assert np.all(w.place_category[w.home] == Category.VERY_HIGH)
        assert np.all(w.place_category[w.work] == Category.MIDDLE)
        assert len(w.index_agents) == index
        assert np.all(w.state[w.index_agents] == Disease.ASYMPTOMATIC)
        assert np.all(w.infection_hour[w.index_agents] == 0)
        assert w.disease_state(int(w.index_agents[0])).since == 0
        assert np.count_nonzero(w.state != Disease.SUSCEPTIBLE) == index

    def test_rates_by_category(self):
        w = build_world(SCENARIOS["S200N"], 0)
        want = {Category.VERY_HIGH: 0.01, Category.HIGH: 0.005, Category.MIDDLE: 0.001, Category.LOW: 0.0001}
        for cat, r in want.items():
            assert np.all(w.place_rate[w.places_of(cat)] == r)

    def test_high_risk_profile_only_for_index(self):
        w = build_world(SCENARIOS["S200H"], 3)
        assert np.flatnonzero(w.profile == Profile.HIGH_RISK).tolist() == w.index_agents.tolist()
        assert not np.any(build_world(SCENARIOS["S200N"], 3).profile == Profile.HIGH_RISK)

    def test_world_determinism(self):
        a, b = build_world(SCENARIOS["S200N"], 11), build_world(SCENARIOS["S200N"], 11)
        for f in ("home", "work", "phase", "index_agents", "place_category"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


class TestSchedule:
    def test_zero_jitter_durations(self):
        w = build_world(SCENARIOS["S200N"], 0)
        rng = np.random.default_rng(0)
        sched = daily_schedules(w, 0, rng, jitter=0)
        cats = w.place_category[sched]
        for i in range(w.n_agents):
            counts = np.bincount(cats[i], minlength=4)
            hours = {c: counts[c] for c in Category}
            assert (hours[Category.VERY_HIGH], hours[Category.MIDDLE], hours[Category.HIGH], hours[Category.LOW]) == (
                10, 8, 3, 3)

    def test_blocks_contiguous_from_phase(self):
        w = build_world(SCENARIOS["S200N"], 0)
        sched = generate_daily_schedule(w, 5, 0, np.random.default_rng(1), jitter=0)
        phase = int(w.phase[5])
        local = [sched[(phase + h) % 24] for h in range(24)]
        assert local[:10] == [w.home[5]] * 10
        assert local[10:18] == [w.work[5]] * 8
        assert len(set(local[18:21])) == 1 and w.place_category[local[18]] == Category.HIGH
        assert len(set(local[21:])) == 1 and w.place_category[local[21]] == Category.LOW

    @settings(max_examples=1000, deadline=None)
    @given(seed=st.integers(0, 2**31), jitter=st.integers(0, 3), high_risk=st.booleans())
    def test_day_covers_24_hours(self, seed, jitter, high_risk):
        cfg = SCENARIOS["S200H" if high_risk else "S200N"]
        w = build_world(cfg, seed % 50)
        sched = daily_schedules(w, 0, np.random.default_rng(seed), jitter=jitter)
        assert sched.shape == (200, 24)
        cats = w.place_category[sched]
        normal = w.profile == Profile.NORMAL
        # every normal agent visits each block at least once
        for c in range(4):
            assert np.all((cats[normal] == c).any(axis=1))
        assert np.all(sched[np.arange(200), :] >= 0)

    def test_high_risk_index_hours(self):
        cfg = SCENARIOS["S200H"]
        w = build_world(cfg, 2)
        idx = int(w.index_agents[0])
        rng = np.random.default_rng(0)
        hours = [np.sum(w.place_category[generate_daily_schedule(w, idx, d, rng)] == Category.HIGH) for d in range(20)]
        assert 9.0 <= np.mean(hours) <= 11.0
        cats = w.place_category[generate_daily_schedule(w, idx, 0, rng)]
        assert set(cats.tolist()) <= {Category.VERY_HIGH, Category.HIGH}

    def test_venues_vary_across_visits(self):
        w = build_world(SCENARIOS["S1000N"], 0)
        rng = np.random.default_rng(0)
        sched = daily_schedules(w, 0, rng)
        high = set(sched[w.place_category[sched] == Category.HIGH].tolist())
        assert high == set(w.places_of(Category.HIGH).tolist())


class TestInfection:
    @pytest.mark.parametrize(
        "rate,hours,rounded", [(0.01, 10, 0.096), (0.005, 3, 0.015), (0.001, 8, 0.008), (0.0001, 3, 0.0003)]
    )
    def test_analytic_per_stay(self, rate, hours, rounded):
        assert analytic_stay_probability(rate, hours) == pytest.approx(rounded, rel=0.05)

    def test_no_carriers(self):
        loc = np.zeros(5, dtype=np.int64)
        t, s, p = infection_draws(loc, np.zeros(5, bool), np.ones(5, bool), np.array([1.0]), np.random.default_rng(0))
        assert len(t) == len(s) == len(p) == 0

    def test_saturating_multi_carrier(self):
        loc = np.array([0, 0, 0, 1, 1])
        infectious = np.array([True, True, False, False, False])
        susceptible = ~infectious
        t, s, p = infection_draws(loc, infectious, susceptible, np.array([0.5, 1.0]), np.random.default_rng(0))
        # rate 0.5 with two carriers saturates at 1; place 1 has no carrier
        assert t.tolist() == [2] and p.tolist() == [0] and s[0] in (0, 1)

    def test_absent_agents_never_infected(self):
        loc = np.array([0, -1])
        t, _, _ = infection_draws(loc, np.array([True, False]), np.array([False, True]), np.array([1.0]),
                                  np.random.default_rng(0))
        assert len(t) == 0

    def test_multi_carrier_rate(self):
        rng = np.random.default_rng(4)
        n = 40000
        loc = np.zeros(n + 3, dtype=np.int64)
        infectious = np.zeros(n + 3, bool)
        infectious[:3] = True
        t, s, _ = infection_draws(loc, infectious, ~infectious, np.array([0.01]), rng)
        p = 0.03
        assert abs(len(t) / n - p) < 3 * math.sqrt(p * (1 - p) / n)
        assert set(s.tolist()) <= {0, 1, 2}

    def test_stay_frequency_quick(self):
        f = stay_infection_frequency(Category.VERY_HIGH, 10, 20000, np.random.default_rng(0))
        p = analytic_stay_probability(0.01, 10)
        assert abs(f - p) < 4 * math.sqrt(p * (1 - p) / 20000)


@pytest.fixture(scope="module")
def out():
    return run_simulation(SCENARIOS["S200N"], 1)


class TestRun:
    def test_determinism(self, out):
        again = run_simulation(SCENARIOS["S200N"], 1)
        for f in ("trace_places", "trace_lengths", "labels", "destiny", "infection_hour", "infection_log", "counts"):
            np.testing.assert_array_equal(getattr(out, f), getattr(again, f))
        assert out.status == again.status

    def test_no_index_no_infections(self):
        out = run_simulation(ScenarioConfig(n_index=0, T=96), 0)
        assert len(out.infection_log) == 0
        assert set(out.status) == {Status.HEALTHY}
        assert not out.labels.any()
        assert np.all(out.trace_lengths == 96)

    def test_labels_match_status(self, out):
        for i, s in enumerate(out.status):
            assert (out.labels[i] == 1) == (s == Status.SCC_ISOLATED)
        assert np.all(out.labels[out.index_agents] == 0)
        assert set(out.index_agents.tolist()) <= set(out.acc_agents().tolist())

    def test_isolation_truncates(self, out):
        for i in np.flatnonzero(out.labels):
            n = out.trace_lengths[i]
            assert n < out.cfg.T
            assert np.all(out.trace_places[i, :n] >= 0)
            assert np.all(out.trace_places[i, n:] == -1)
        untested = out.labels == 0
        assert np.all(out.trace_lengths[untested] == out.cfg.T)

    def test_infection_log_consistent(self, out):
        onset = np.where(out.labels == 1, out.trace_lengths, out.cfg.T)
        for hour, place, src, tgt in out.infection_log.tolist():
            assert out.trace_places[src, hour] == place == out.trace_places[tgt, hour]
            assert out.infection_hour[tgt] == hour
            assert out.infection_hour[src] < hour or (src in out.index_agents and hour >= 0)
            assert hour < onset[src]
        targets = out.infection_log[:, 3]
        assert len(set(targets.tolist())) == len(targets)

    def test_counts(self, out):
        assert np.all(np.diff(out.counts, axis=0) >= 0)
        infected = out.destiny >= 0
        assert out.counts[-1, 0] == np.count_nonzero(out.destiny == ASYMPTOMATIC)
        assert out.counts[-1, 2] == np.count_nonzero(out.destiny == SYMPTOMATIC)
        assert out.counts[-1, 1] == out.labels.sum()
        assert out.counts[-1, 0] + out.counts[-1, 2] == infected.sum()
        assert out.counts[-1, 1] <= out.counts[-1, 2]

    def test_statuses_partition(self, out):
        healthy = sum(s == Status.HEALTHY for s in out.status)
        assert healthy == np.count_nonzero(out.destiny < 0)
        assert len(out.status) == out.n_agents


@settings(max_examples=1000, deadline=None)
@given(n=st.integers(4, 24), n_index=st.integers(0, 3), T=st.integers(1, 72), seed=st.integers(0, 2**31),
       high_risk=st.booleans())
def test_determinism_small_configs(n, n_index, T, seed, high_risk):
    cfg = ScenarioConfig(n_agents=n, p_vh=6, p_h=2, p_m=2, p_l=1, n_index=min(n_index, n), T=T,
                         index_profile="high_risk" if high_risk else "normal", rate_vh=0.2, rate_h=0.1)
    a, b = run_simulation(cfg, seed), run_simulation(cfg, seed)
    np.testing.assert_array_equal(a.trace_places, b.trace_places)
    np.testing.assert_array_equal(a.infection_log, b.infection_log)
    assert a.status == b.status
    # conservation at every hour
    assert np.all(np.diff(a.counts, axis=0) >= 0)
    assert np.all(a.counts[:, 0] + a.counts[:, 2] <= n)


@pytest.fixture(scope="module")
def pooled_worlds():
    cfg = SCENARIOS["S1000N"]
    return [run_world(cfg, s) for s in range(100, 106)]


def test_acc_fraction_binomial(pooled_worlds):
    destinies = []
    for w in pooled_worlds:
        secondary = np.setdiff1d(np.flatnonzero(w.destiny >= 0), w.index_agents)
        destinies.append(w.destiny[secondary])
    d = np.concatenate(destinies)
    n = len(d)
    assert n >= 1000
    p0 = 0.2
    z = (np.count_nonzero(d == ASYMPTOMATIC) - n * p0) / math.sqrt(n * p0 * (1 - p0))
    assert abs(z) < 2.576  # two-sided, 1% level


def test_incubation_statistics(pooled_worlds):
    t_in = np.concatenate([w.incubation[w.destiny == SYMPTOMATIC] for w in pooled_worlds])
    n = len(t_in)
    assert abs(t_in.mean() - 120.0) < 3 * 12.0 / math.sqrt(n)
    assert abs(t_in.std(ddof=1) - 12.0) < 3 * 12.0 / math.sqrt(2 * (n - 1))


def test_disease_clock(pooled_worlds):
    w = pooled_worlds[0]
    scc = np.flatnonzero(w.destiny == SYMPTOMATIC)
    np.testing.assert_array_equal(w.shed_hour[scc] - w.infection_hour[scc], np.ceil(0.2 * w.incubation[scc]))
    np.testing.assert_array_equal(w.onset_hour[scc] - w.infection_hour[scc], np.ceil(w.incubation[scc]))
    for i in scc:
        state = w.disease_state(int(i))
        assert state.kind in (Disease.LATENT, Disease.PRESYMPTOMATIC, Disease.ISOLATED)


def test_step_hour_range():
    w = build_world(ScenarioConfig(T=5), 0)
    with pytest.raises(ValueError):
        step_hour(w, 5)
