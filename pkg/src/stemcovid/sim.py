"""Agent-based COVID-19 spreading simulator.

Agents live in households of four, commute to a fixed workplace and visit
high-risk (shops, restaurants) and low-risk (parks) venues every day.  Every
hour, each susceptible agent sharing a place with ``k`` infectious agents is
infected with probability ``min(1, rate * k)``, where ``rate`` depends on the
place category.

Symptomatic cases (SCCs) follow a step infectiousness profile: silent for
``0.2 * T_in`` hours, infectious until symptom onset at ``T_in``, then isolated
(tested positive, removed from every place).  Asymptomatic cases (ACCs) are
infectious from the hour after infection until the end of the run.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np

__all__ = [
    "Category",
    "Profile",
    "Disease",
    "Status",
    "CATEGORY_RATES",
    "ScenarioConfig",
    "SCENARIOS",
    "World",
    "SimulationOutput",
    "DiseaseState",
    "build_world",
    "generate_daily_schedule",
    "daily_schedules",
    "infection_draws",
    "step_hour",
    "run_simulation",
    "stay_infection_frequency",
]


class Category(IntEnum):
    VERY_HIGH = 0
    HIGH = 1
    MIDDLE = 2
    LOW = 3


CATEGORY_RATES = {
    Category.VERY_HIGH: 0.01,
    Category.HIGH: 0.005,
    Category.MIDDLE: 0.001,
    Category.LOW: 0.0001,
}


class Profile(IntEnum):
    NORMAL = 0
    HIGH_RISK = 1


class Disease(IntEnum):
    SUSCEPTIBLE = 0
    LATENT = 1
    PRESYMPTOMATIC = 2
    ISOLATED = 3
    ASYMPTOMATIC = 4


class Status:
    """Ground-truth labels written at the end of a run."""

    HEALTHY = "Healthy"
    ACC = "ACC"
    SCC_PRESYMPTOMATIC = "SCC_presymptomatic"
    SCC_ISOLATED = "SCC_isolated"
    INDEX = "Index"


NO_DESTINY = -1
SYMPTOMATIC = 0
ASYMPTOMATIC = 1
DESTINY_NAMES = {NO_DESTINY: "none", SYMPTOMATIC: "WillBeSymptomatic", ASYMPTOMATIC: "Asymptomatic"}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    n_agents: int = 200
    p_vh: int = 50
    p_h: int = 2
    p_m: int = 10
    p_l: int = 2
    n_index: int = 1
    index_profile: str = "normal"
    T: int = 480
    acc_fraction: float = 0.2
    rate_vh: float = 0.01
    rate_h: float = 0.005
    rate_m: float = 0.001
    rate_l: float = 0.0001
    incubation_mean: float = 120.0
    incubation_sd: float = 12.0
    runs: int = 15
    seed: int = 0
    household_size: int = 4
    # daily life cycle, in hours: home, work, high-risk venue, low-risk venue
    home_hours: int = 10
    work_hours: int = 8
    high_hours: int = 3
    low_hours: int = 3
    jitter: int = 1
    high_risk_index_hours: int = 10
    # hour of day each agent's cycle starts: drawn per "agent", per "household", or 0 for all ("none")
    phase_mode: str = "agent"

    def __post_init__(self):
        if self.n_agents < 0 or self.n_index < 0 or self.n_index > self.n_agents:
            raise ValueError(f"invalid population: N={self.n_agents}, N_u0={self.n_index}")
        for attr in ("p_vh", "p_h", "p_m", "p_l"):
            if getattr(self, attr) < 1:
                raise ValueError(f"{attr} must be >= 1")
        if self.index_profile not in ("normal", "high_risk"):
            raise ValueError(f"unknown index profile {self.index_profile!r}")
        if self.phase_mode not in ("household", "agent", "none"):
            raise ValueError(f"unknown phase mode {self.phase_mode!r}")
        if not 0.0 <= self.acc_fraction <= 1.0:
            raise ValueError("acc_fraction must lie in [0, 1]")
        if self.T < 1:
            raise ValueError("T must be positive")
        if self.household_size < 1:
            raise ValueError("household_size must be positive")
        if self.n_households > self.p_vh:
            raise ValueError(
                f"{self.n_households} households need homes but only {self.p_vh} very-high-risk places exist"
            )
        if self.home_hours + self.work_hours + self.high_hours + self.low_hours != 24:
            raise ValueError("daily block durations must sum to 24")

    @property
    def n_places(self) -> int:
        return self.p_vh + self.p_h + self.p_m + self.p_l

    @property
    def n_households(self) -> int:
        return -(-self.n_agents // self.household_size)

    @classmethod
    def preset(cls, name: str, **overrides) -> "ScenarioConfig":
        try:
            base = SCENARIOS[name]
        except KeyError:
            raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
        return dataclasses.replace(base, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


SCENARIOS = {
    "S200N": ScenarioConfig("S200N", 200, 50, 2, 10, 2, 1, "normal"),
    "S200H": ScenarioConfig("S200H", 200, 50, 2, 10, 2, 1, "high_risk"),
    "S1000N": ScenarioConfig("S1000N", 1000, 250, 10, 50, 10, 5, "normal"),
}


class DiseaseState(NamedTuple):
    kind: Disease
    shed_at: int | None = None
    onset_at: int | None = None
    since: int | None = None


@dataclass
class World:
    cfg: ScenarioConfig
    place_category: np.ndarray
    place_rate: np.ndarray
    home: np.ndarray
    work: np.ndarray
    profile: np.ndarray
    phase: np.ndarray
    index_agents: np.ndarray
    state: np.ndarray
    destiny: np.ndarray
    infection_hour: np.ndarray
    shed_hour: np.ndarray
    onset_hour: np.ndarray
    incubation: np.ndarray
    source: np.ndarray
    schedule_rng: np.random.Generator = field(repr=False)
    infection_rng: np.random.Generator = field(repr=False)
    schedule: np.ndarray | None = field(default=None, repr=False)
    schedule_day: int = -1

    @property
    def n_agents(self) -> int:
        return len(self.home)

    @property
    def n_places(self) -> int:
        return len(self.place_category)

    def places_of(self, category: Category) -> np.ndarray:
        return np.flatnonzero(self.place_category == category)

    def disease_state(self, agent: int) -> DiseaseState:
        kind = Disease(int(self.state[agent]))
        if kind == Disease.LATENT:
            return DiseaseState(kind, int(self.shed_hour[agent]), int(self.onset_hour[agent]))
        if kind == Disease.PRESYMPTOMATIC:
            return DiseaseState(kind, onset_at=int(self.onset_hour[agent]))
        if kind == Disease.ISOLATED:
            return DiseaseState(kind, since=int(self.onset_hour[agent]))
        if kind == Disease.ASYMPTOMATIC:
            return DiseaseState(kind, since=int(self.infection_hour[agent]))
        return DiseaseState(kind)

    def infectious_mask(self) -> np.ndarray:
        return (self.state == Disease.PRESYMPTOMATIC) | (self.state == Disease.ASYMPTOMATIC)


@dataclass
class SimulationOutput:
    """Everything a run produces.

    ``trace_places[i, t]`` is the place of agent ``i`` at hour ``t`` or -1
    once the agent is isolated; ``trace_lengths[i]`` is the number of leading
    valid hours.  ``counts`` has one row per hour with cumulative
    (ACC, t-SCC, SCC) numbers at the end of that hour.
    """

    cfg: ScenarioConfig
    seed: int
    trace_places: np.ndarray
    trace_lengths: np.ndarray
    labels: np.ndarray
    status: list[str]
    destiny: np.ndarray
    infection_hour: np.ndarray
    index_agents: np.ndarray
    infection_log: np.ndarray
    counts: np.ndarray

    @property
    def n_agents(self) -> int:
        return len(self.labels)

    def trace(self, agent: int) -> list[tuple[int, int]]:
        n = int(self.trace_lengths[agent])
        return [(t, int(p)) for t, p in enumerate(self.trace_places[agent, :n])]

    def traces(self) -> list[list[tuple[int, int]]]:
        return [self.trace(i) for i in range(self.n_agents)]

    def acc_agents(self) -> np.ndarray:
        """Ground-truth ACC targets, index cases included."""
        return np.array(
            [i for i, s in enumerate(self.status) if s in (Status.ACC, Status.INDEX)], dtype=np.int64
        )

    def secondary_infections(self, agent: int) -> int:
        if len(self.infection_log) == 0:
            return 0
        return int(np.count_nonzero(self.infection_log[:, 2] == agent))


def _place_rates(cfg: ScenarioConfig, category: np.ndarray) -> np.ndarray:
    by_cat = np.array([cfg.rate_vh, cfg.rate_h, cfg.rate_m, cfg.rate_l])
    return by_cat[category]


def build_world(cfg: ScenarioConfig, seed: int) -> World:
    """Lay out places, households, workplaces and the index cases."""
    world_ss, sched_ss, inf_ss = np.random.SeedSequence(seed).spawn(3)
    rng = np.random.default_rng(world_ss)

    category = np.repeat(
        np.array([Category.VERY_HIGH, Category.HIGH, Category.MIDDLE, Category.LOW], dtype=np.int8),
        [cfg.p_vh, cfg.p_h, cfg.p_m, cfg.p_l],
    )
    rates = _place_rates(cfg, category)
    n = cfg.n_agents
    home = np.arange(n, dtype=np.int64) // cfg.household_size
    middle = np.flatnonzero(category == Category.MIDDLE)
    work = middle[rng.integers(0, len(middle), size=n)]

    if cfg.phase_mode == "household":
        phase = rng.integers(0, 24, size=cfg.n_households)[home]
    elif cfg.phase_mode == "agent":
        phase = rng.integers(0, 24, size=n)
    else:
        phase = np.zeros(n, dtype=np.int64)

    index_agents = np.sort(rng.choice(n, size=cfg.n_index, replace=False)) if n else np.array([], np.int64)
    profile = np.full(n, Profile.NORMAL, dtype=np.int8)
    if cfg.index_profile == "high_risk":
        profile[index_agents] = Profile.HIGH_RISK

    state = np.full(n, Disease.SUSCEPTIBLE, dtype=np.int8)
    destiny = np.full(n, NO_DESTINY, dtype=np.int8)
    infection_hour = np.full(n, -1, dtype=np.int64)
    state[index_agents] = Disease.ASYMPTOMATIC
    destiny[index_agents] = ASYMPTOMATIC
    infection_hour[index_agents] = 0

    return World(
        cfg=cfg,
        place_category=category,
        place_rate=rates,
        home=home,
        work=work,
        profile=profile,
        phase=phase.astype(np.int64),
        index_agents=index_agents.astype(np.int64),
        state=state,
        destiny=destiny,
        infection_hour=infection_hour,
        shed_hour=np.full(n, -1, dtype=np.int64),
        onset_hour=np.full(n, -1, dtype=np.int64),
        incubation=np.full(n, np.nan),
        source=np.full(n, -1, dtype=np.int64),
        schedule_rng=np.random.default_rng(sched_ss),
        infection_rng=np.random.default_rng(inf_ss),
    )


def _block_durations(cfg: ScenarioConfig, profile: np.ndarray, jitter: int, rng) -> np.ndarray:
    """(n, 4) hours per category in daily order: home, work, high, low."""
    n = len(profile)
    eps = rng.integers(-jitter, jitter + 1, size=(n, 3)) if jitter else np.zeros((n, 3), np.int64)
    dur = np.empty((n, 4), dtype=np.int64)
    dur[:, 1] = np.maximum(1, cfg.work_hours + eps[:, 0])
    dur[:, 2] = np.maximum(1, cfg.high_hours + eps[:, 1])
    dur[:, 3] = np.maximum(1, cfg.low_hours + eps[:, 2])
    hr = profile == Profile.HIGH_RISK
    # work and outdoor hours are displaced first, home absorbs the rest
    dur[hr, 1] = 0
    dur[hr, 3] = 0
    dur[hr, 2] = np.maximum(1, cfg.high_risk_index_hours + eps[hr, 1])
    dur[:, 0] = 24 - dur[:, 1:].sum(axis=1)
    return dur


def daily_schedules(
    world: World, day: int, rng: np.random.Generator, agents: np.ndarray | None = None, jitter: int | None = None
) -> np.ndarray:
    """Hour-by-hour places for one day, shape ``(len(agents), 24)``.

    Blocks run home -> work -> high-risk venue -> low-risk venue starting at
    each agent's phase hour, wrapping around midnight.  Venue choice is a
    fresh uniform draw per visit.
    """
    cfg = world.cfg
    if agents is None:
        agents = np.arange(world.n_agents)
    agents = np.asarray(agents, dtype=np.int64)
    jitter = cfg.jitter if jitter is None else jitter
    n = len(agents)
    dur = _block_durations(cfg, world.profile[agents], jitter, rng)
    high = world.places_of(Category.HIGH)
    low = world.places_of(Category.LOW)
    high_pick = high[rng.integers(0, len(high), size=n)]
    low_pick = low[rng.integers(0, len(low), size=n)]

    venues = np.stack([world.home[agents], world.work[agents], high_pick, low_pick], axis=1)
    ends = np.cumsum(dur, axis=1)
    local = (np.arange(24)[None, :] - world.phase[agents][:, None]) % 24
    block = (local[:, :, None] >= ends[:, None, :]).sum(axis=2)
    return np.take_along_axis(venues, block, axis=1)


def generate_daily_schedule(world: World, agent: int, day: int, rng: np.random.Generator, jitter=None) -> list[int]:
    return daily_schedules(world, day, rng, np.array([agent]), jitter=jitter)[0].tolist()


def infection_draws(
    location: np.ndarray,
    infectious: np.ndarray,
    susceptible: np.ndarray,
    place_rate: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One hour of transmission.

    Returns ``(targets, sources, places)`` for the new infections.  A target's
    source is drawn uniformly from the infectious agents at its place.
    """
    n_places = len(place_rate)
    present = location >= 0
    carriers = np.flatnonzero(infectious & present)
    empty = np.array([], dtype=np.int64)
    if len(carriers) == 0:
        return empty, empty, empty
    carrier_place = location[carriers]
    k = np.bincount(carrier_place, minlength=n_places)
    exposed = np.flatnonzero(susceptible & present)
    exposed = exposed[k[location[exposed]] > 0]
    if len(exposed) == 0:
        return empty, empty, empty
    where = location[exposed]
    p = np.minimum(1.0, place_rate[where] * k[where])
    hit = rng.random(len(exposed)) < p
    targets = exposed[hit]
    if len(targets) == 0:
        return empty, empty, empty
    places = where[hit]
    order = np.argsort(carrier_place, kind="stable")
    sorted_carriers = carriers[order]
    start = np.concatenate(([0], np.cumsum(k)[:-1]))
    pick = start[places] + rng.integers(0, k[places])
    return targets, sorted_carriers[pick], places


def _sample_incubation(cfg: ScenarioConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    out = rng.normal(cfg.incubation_mean, cfg.incubation_sd, size=size)
    bad = out <= 0
    while bad.any():
        out[bad] = rng.normal(cfg.incubation_mean, cfg.incubation_sd, size=int(bad.sum()))
        bad = out <= 0
    return out


def _infect(world: World, targets: np.ndarray, sources: np.ndarray, hour: int) -> None:
    cfg = world.cfg
    rng = world.infection_rng
    n = len(targets)
    asym = rng.random(n) < cfg.acc_fraction
    t_in = _sample_incubation(cfg, rng, n)
    world.infection_hour[targets] = hour
    world.source[targets] = sources
    a, s = targets[asym], targets[~asym]
    world.destiny[a] = ASYMPTOMATIC
    world.state[a] = Disease.ASYMPTOMATIC
    world.destiny[s] = SYMPTOMATIC
    world.state[s] = Disease.LATENT
    world.incubation[s] = t_in[~asym]
    world.shed_hour[s] = hour + np.ceil(0.2 * t_in[~asym]).astype(np.int64)
    world.onset_hour[s] = hour + np.ceil(t_in[~asym]).astype(np.int64)


def current_locations(world: World, hour: int) -> np.ndarray:
    day = hour // 24
    if world.schedule_day != day:
        world.schedule = daily_schedules(world, day, world.schedule_rng)
        world.schedule_day = day
    loc = world.schedule[:, hour % 24].copy()
    loc[world.state == Disease.ISOLATED] = -1
    return loc


def _advance_disease(world: World, hour: int) -> None:
    latent = world.state == Disease.LATENT
    world.state[latent & (world.shed_hour <= hour)] = Disease.PRESYMPTOMATIC
    pre = world.state == Disease.PRESYMPTOMATIC
    world.state[pre & (world.onset_hour <= hour)] = Disease.ISOLATED


def step_hour(world: World, hour: int) -> tuple[np.ndarray, np.ndarray]:
    """Advance one hour.  Returns the agents' locations and this hour's
    infection records as an ``(m, 4)`` array of (hour, place, source, target)."""
    if not 0 <= hour < world.cfg.T:
        raise ValueError(f"hour {hour} outside [0, {world.cfg.T})")
    _advance_disease(world, hour)
    loc = current_locations(world, hour)
    targets, sources, places = infection_draws(
        loc, world.infectious_mask(), world.state == Disease.SUSCEPTIBLE, world.place_rate, world.infection_rng
    )
    if len(targets):
        _infect(world, targets, sources, hour)
    records = np.column_stack([np.full(len(targets), hour), places, sources, targets]).astype(np.int64)
    return loc, records


def _counts(world: World) -> tuple[int, int, int]:
    acc = int(np.count_nonzero(world.destiny == ASYMPTOMATIC))
    tscc = int(np.count_nonzero(world.state == Disease.ISOLATED))
    scc = int(np.count_nonzero(world.destiny == SYMPTOMATIC))
    return acc, tscc, scc


def run_simulation(cfg: ScenarioConfig, seed: int | None = None) -> SimulationOutput:
    seed = cfg.seed if seed is None else seed
    world = build_world(cfg, seed)
    n, T = cfg.n_agents, cfg.T
    places = np.full((n, T), -1, dtype=np.int64)
    logs = []
    counts = np.zeros((T, 3), dtype=np.int64)
    for hour in range(T):
        loc, records = step_hour(world, hour)
        places[:, hour] = loc
        if len(records):
            logs.append(records)
        counts[hour] = _counts(world)

    isolated = world.state == Disease.ISOLATED
    lengths = np.full(n, T, dtype=np.int64)
    lengths[isolated] = world.onset_hour[isolated]
    labels = isolated.astype(np.int8)

    index = set(world.index_agents.tolist())
    status = []
    for i in range(n):
        s = world.state[i]
        if i in index:
            status.append(Status.INDEX)
        elif s == Disease.SUSCEPTIBLE:
            status.append(Status.HEALTHY)
        elif s == Disease.ASYMPTOMATIC:
            status.append(Status.ACC)
        elif s == Disease.ISOLATED:
            status.append(Status.SCC_ISOLATED)
        else:
            status.append(Status.SCC_PRESYMPTOMATIC)

    log = np.concatenate(logs) if logs else np.zeros((0, 4), dtype=np.int64)
    return SimulationOutput(
        cfg=cfg,
        seed=seed,
        trace_places=places,
        trace_lengths=lengths,
        labels=labels,
        status=status,
        destiny=world.destiny.copy(),
        infection_hour=world.infection_hour.copy(),
        index_agents=world.index_agents.copy(),
        infection_log=log,
        counts=counts,
    )


def stay_infection_frequency(
    category: Category, hours: int, n_stays: int, rng: np.random.Generator, carriers: int = 1, cfg=None
) -> float:
    """Monte-Carlo fraction of susceptibles infected during one stay.

    Each of ``n_stays`` susceptible agents spends ``hours`` consecutive hours
    at a single place of ``category`` together with ``carriers`` infectious
    agents, using the same hourly kernel as the simulator.
    """
    cfg = cfg or ScenarioConfig()
    rate = _place_rates(cfg, np.array([int(category)]))
    n = n_stays + carriers
    location = np.zeros(n, dtype=np.int64)
    infectious = np.zeros(n, dtype=bool)
    infectious[:carriers] = True
    susceptible = ~infectious
    infected = 0
    for _ in range(hours):
        targets, _, _ = infection_draws(location, infectious, susceptible, rate, rng)
        susceptible[targets] = False
        infected += len(targets)
    return infected / n_stays


def analytic_stay_probability(rate: float, hours: int) -> float:
    return 1.0 - math.pow(1.0 - rate, hours)
