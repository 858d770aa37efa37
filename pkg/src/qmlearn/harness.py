"""Match runner, learning experiments and cross-play tournaments."""
from __future__ import annotations

import configparser
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import Agent, AgentKind, AgentSpec
from .games import ConfigurationError, GameSpec, apply, goal, initial_state
from .learning import EpsilonSchedule, LearningParams, MatchRecord
from .rng import RandomStream
from .search import SearchBudget

DEFAULT_WINDOW = 500
# exploitation matches used to evaluate an untrained learner (l = 0)
UNTRAINED_EVAL_MATCHES = 1000

LEARNING, EXPLOITATION = "learning", "exploitation"


@dataclass(slots=True)
class MatchResult:
    index: int
    first_mover: int  # which agent (0 or 1) played role 0
    goals: tuple[int, int]  # indexed by agent, not role
    move_count: int
    moves: Optional[list[int]] = None


def play_match(agent0: Agent, agent1: Agent, spec: GameSpec, rng, m: int = 0,
               learning: bool = False, log: bool = False):
    """Play one game; ``agent0`` moves first on even ``m``.

    Returns the result and the match records of learning agents, keyed by
    role. With ``learning`` set each learning agent updates its table for the
    role it played.
    """
    by_role = (agent0, agent1) if m % 2 == 0 else (agent1, agent0)
    records = {r: MatchRecord(r) for r in (0, 1) if by_role[r].learns}
    pending: list[Optional[tuple[str, int]]] = [None, None]
    moves = [] if log else None
    state = initial_state(spec)
    while state.status is None:
        role = state.to_move
        agent = by_role[role]
        move = agent.select(state, rng, m, learning)
        if role in records:
            key = state.key
            if pending[role] is not None:
                records[role].steps.append((*pending[role], key))
            pending[role] = (key, move)
        if log:
            moves.append(move)
        state = apply(state, move)
    for role, rec in records.items():
        if pending[role] is not None:
            rec.steps.append((*pending[role], state.key))
        rec.terminal_key = state.key
        rec.terminal_goal = goal(state, role)
    if learning:
        for role, rec in records.items():
            if rec.steps:
                by_role[role].learn(rec)
    g0, g1 = goal(state, 0), goal(state, 1)
    first = 0 if m % 2 == 0 else 1
    goals = (g0, g1) if first == 0 else (g1, g0)
    return MatchResult(m, first, goals, state.move_count, moves), records


@dataclass(frozen=True)
class SeriesPoint:
    match: int
    win_rate: float
    phase: str
    wins: int
    draws: int
    losses: int


@dataclass
class WinRateSeries:
    """Learner's outcomes over one run, reduced to one point per window."""

    results: list[MatchResult]
    window: int = DEFAULT_WINDOW
    learning_matches: int = 0
    agent: int = 0

    def outcome(self, r: MatchResult) -> int:
        return r.goals[self.agent]

    def phase(self, index: int) -> str:
        return LEARNING if index < self.learning_matches else EXPLOITATION

    def points(self) -> list[SeriesPoint]:
        pts = []
        w = self.window
        res = self.results
        for end in range(w, len(res) + 1, w):
            chunk = [self.outcome(r) for r in res[end - w:end]]
            wins = chunk.count(100)
            draws = chunk.count(50)
            pts.append(SeriesPoint(end - 1, wins / w, self.phase(end - 1), wins, draws,
                                   w - wins - draws))
        return pts

    def counts(self, phase: Optional[str] = None) -> tuple[int, int, int]:
        outs = [self.outcome(r) for r in self.results
                if phase is None or self.phase(r.index) == phase]
        wins, draws = outs.count(100), outs.count(50)
        return wins, draws, len(outs) - wins - draws

    def win_rate(self, phase: Optional[str] = EXPLOITATION) -> float:
        w, d, l = self.counts(phase)
        n = w + d + l
        return w / n if n else float("nan")

    def decisive_win_rate(self, phase: Optional[str] = EXPLOITATION) -> float:
        w, _, l = self.counts(phase)
        return w / (w + l) if w + l else float("nan")


@dataclass(frozen=True)
class ExperimentConfig:
    game: GameSpec
    learner: AgentSpec
    opponent: AgentSpec = AgentSpec(AgentKind.RANDOM)
    learning_matches: int = 50000
    repetitions: int = 5
    seed: int = 1
    window: int = DEFAULT_WINDOW
    exploitation_matches: Optional[int] = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        if self.learning_matches < 0 or self.window < 1:
            raise ConfigurationError("learning matches must be >= 0 and window >= 1")
        if not self.learner.learns:
            raise ConfigurationError("the learner must be a QPlayer or QMPlayer")

    @property
    def n_exploitation(self) -> int:
        if self.exploitation_matches is not None:
            return self.exploitation_matches
        if self.learning_matches == 0:
            return UNTRAINED_EVAL_MATCHES
        return math.ceil(1.5 * self.learning_matches) - self.learning_matches

    @property
    def total_matches(self) -> int:
        return self.learning_matches + self.n_exploitation

    def describe(self) -> dict:
        return {
            "game": self.game.token,
            "learner": self.learner.token,
            "opponent": self.opponent.token,
            "alpha": self.learner.params.alpha,
            "gamma": self.learner.params.gamma,
            "epsilon_a": self.learner.schedule.a,
            "epsilon_b": self.learner.schedule.b,
            "learning_matches": self.learning_matches,
            "total_matches": self.total_matches,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "window": self.window,
        }


@dataclass
class RepetitionResult:
    series: WinRateSeries
    tables: list
    updates: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    repetitions: list[RepetitionResult]
    wall_time: float = 0.0

    @property
    def series(self) -> list[WinRateSeries]:
        return [r.series for r in self.repetitions]

    @property
    def convergence(self) -> list[float]:
        """Exploitation-phase win rate of each repetition."""
        return [s.win_rate(EXPLOITATION) for s in self.series]

    @property
    def mean_convergence(self) -> float:
        return float(np.mean(self.convergence))

    @property
    def decisive_convergence(self) -> float:
        return float(np.mean([s.decisive_win_rate(EXPLOITATION) for s in self.series]))

    def mean_series(self) -> list[tuple[int, float, float, str]]:
        """``(match, mean, sample variance, phase)`` per window across repetitions."""
        per_rep = [s.points() for s in self.series]
        rows = []
        for pts in zip(*per_rep):
            rates = np.array([p.win_rate for p in pts])
            var = float(rates.var(ddof=1)) if len(rates) > 1 else 0.0
            rows.append((pts[0].match, float(rates.mean()), var, pts[0].phase))
        return rows


def run_repetition(config: ExperimentConfig, rep: int) -> RepetitionResult:
    l = config.learning_matches
    learner = config.learner.with_learning_matches(l).build()
    opponent = config.opponent.build(frozen=config.opponent.learns)
    stream = RandomStream(config.seed).spawn("rep", rep)
    results = []
    updates = 0
    for m in range(config.total_matches):
        learning = m < l
        result, records = play_match(learner, opponent, config.game, stream.spawn(m), m, learning)
        if learning:
            updates += 1
        results.append(result)
    learner.matches_learned = l
    series = WinRateSeries(results, config.window, l)
    return RepetitionResult(series, learner.tables, updates)


def _run_repetition_args(args):
    return run_repetition(*args)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Learning phase of ``l`` matches, then the exploitation phase with
    exploration off, repeated with independent random substreams.
    """
    t0 = time.perf_counter()
    args = [(config, rep) for rep in range(config.repetitions)]
    if jobs > 1 and config.repetitions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(_run_repetition_args, args))
    else:
        reps = [run_repetition(*a) for a in args]
    return ExperimentResult(config, reps, time.perf_counter() - t0)


@dataclass
class TournamentMatrix:
    """``cells[i][j]`` is agent j's win rate against agent i (row i, column j)."""

    agents: list[AgentSpec]
    cells: list[list[Optional[float]]]
    draws: list[list[Optional[float]]]
    n: int

    @property
    def labels(self) -> list[str]:
        return [a.label for a in self.agents]


def head_to_head(a: Agent, b: Agent, spec: GameSpec, n: int, stream) -> tuple[int, int, int]:
    """Wins of ``a``, wins of ``b`` and draws over ``n`` alternating matches."""
    wa = wb = 0
    for m in range(n):
        result, _ = play_match(a, b, spec, stream.spawn(m), m, learning=False)
        if result.goals[0] == 100:
            wa += 1
        elif result.goals[1] == 100:
            wb += 1
    return wa, wb, n - wa - wb


def run_tournament(agents: Sequence[AgentSpec], spec: GameSpec, n_matches: int,
                   seed: int = 1, progress=None) -> TournamentMatrix:
    """Every pair plays ``n_matches`` with alternating first mover.

    Both cells of a pair come from the same matches, so a pair's two win
    rates and its draw rate sum to one. Learners play frozen.
    """
    if len(agents) < 2:
        raise ConfigurationError("a tournament needs at least two agents")
    built = [a.build(frozen=True) for a in agents]
    k = len(agents)
    cells = [[None] * k for _ in range(k)]
    draws = [[None] * k for _ in range(k)]
    root = RandomStream(seed)
    for i in range(k):
        for j in range(i + 1, k):
            wi, wj, d = head_to_head(built[i], built[j], spec, n_matches, root.spawn("pair", i, j))
            cells[i][j] = wj / n_matches
            cells[j][i] = wi / n_matches
            draws[i][j] = draws[j][i] = d / n_matches
            if progress:
                progress(agents[i].label, agents[j].label, wi, wj, d)
    return TournamentMatrix(list(agents), cells, draws, n_matches)


@dataclass
class ComparisonResult:
    results: dict[str, ExperimentResult]
    reference: str

    @property
    def final_rates(self) -> dict[str, float]:
        return {k: r.mean_convergence for k, r in self.results.items()}

    @property
    def deltas(self) -> dict[str, float]:
        """Reference variant's final win rate minus each other variant's."""
        rates = self.final_rates
        return {k: rates[self.reference] - v for k, v in rates.items() if k != self.reference}


def default_epsilon_variants(l: int) -> dict[str, EpsilonSchedule]:
    return {
        "dynamic": EpsilonSchedule(0.5, 0.0, l),
        "fixed-0.1": EpsilonSchedule.fixed(0.1, l),
        "fixed-0.2": EpsilonSchedule.fixed(0.2, l),
    }


def epsilon_comparison_experiment(spec: GameSpec, variants: Optional[dict] = None, l: int = 30000,
                                  seed: int = 1, repetitions: int = 5,
                                  window: int = DEFAULT_WINDOW,
                                  params: LearningParams = LearningParams(),
                                  jobs: int = 1) -> ComparisonResult:
    """QPlayer vs Random under several exploration schedules, all switched to
    eps = 0 after ``l`` learning matches. The first variant is the reference.
    """
    variants = variants or default_epsilon_variants(l)
    results = {}
    for name, schedule in variants.items():
        learner = AgentSpec(AgentKind.QPLAYER, params=params, schedule=schedule, name=name)
        cfg = ExperimentConfig(spec, learner, learning_matches=l, repetitions=repetitions,
                               seed=seed, window=window)
        results[name] = run_experiment(cfg, jobs)
    return ComparisonResult(results, next(iter(variants)))


def _agent_from_section(sec, l: int) -> AgentSpec:
    kind = AgentKind(sec.get("kind", "random").lower())
    params = schedule = None
    if kind in (AgentKind.QPLAYER, AgentKind.QMPLAYER):
        params = LearningParams(sec.getfloat("alpha", 0.1), sec.getfloat("gamma", 0.9))
        schedule = EpsilonSchedule(sec.getfloat("a", 0.5), sec.getfloat("b", 0.0), l)
    budget = sec.get("budget")
    return AgentSpec(kind, params, schedule, SearchBudget.parse(budget) if budget else None,
                     sec.get("snapshot") or None, sec.get("name") or None)


def load_experiment_config(path) -> ExperimentConfig:
    """Read an INI-style experiment file.

    ``[experiment]`` holds game, learning_matches, repetitions, seed, window
    (and optionally exploitation_matches); ``[learner]`` and ``[opponent]``
    hold kind, alpha, gamma, a, b, budget, snapshot.
    """
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigurationError(f"cannot read config file {path}")
    if "experiment" not in cp or "learner" not in cp:
        raise ConfigurationError(f"{path}: needs [experiment] and [learner] sections")
    ex = cp["experiment"]
    try:
        l = ex.getint("learning_matches", 50000)
        exploit = ex.get("exploitation_matches")
        return ExperimentConfig(
            game=GameSpec.parse(ex.get("game", "tictactoe:3x3:3")),
            learner=_agent_from_section(cp["learner"], l),
            opponent=_agent_from_section(cp["opponent"], l) if "opponent" in cp
            else AgentSpec(AgentKind.RANDOM),
            learning_matches=l,
            repetitions=ex.getint("repetitions", 5),
            seed=ex.getint("seed", 1),
            window=ex.getint("window", DEFAULT_WINDOW),
            exploitation_matches=int(exploit) if exploit else None,
        )
    except ValueError as e:
        raise ConfigurationError(f"{path}: {e}") from None
