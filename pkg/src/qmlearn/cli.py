"""Command-line entry point: ``qmlearn {learn,compete,tournament,play,oracle}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

from . import __version__
from .agents import AgentKind, AgentSpec, snapshot_paths
from .games import ConfigurationError, GameSpec, IllegalMoveError, apply, initial_state
from .harness import (
    DEFAULT_WINDOW,
    ExperimentConfig,
    head_to_head,
    load_experiment_config,
    play_match,
    run_experiment,
    run_tournament,
)
from .learning import EpsilonSchedule, LearningParams
from .oracle import DEFAULT_LIMIT, Minimax, OracleLimitError, enumerate_states, outcome_label
from .reporting import (
    RunMetadata,
    format_matrix,
    save_qtable,
    write_matrix,
    write_mean_series,
    write_metadata,
    write_series,
)
from .rng import RandomStream
from .search import SearchBudget

log = logging.getLogger("qmlearn")

PAPER_AGENTS = "mcts:playouts:100000,random,qplayer@runs/q/rep0,qmplayer@runs/qm/rep0,mcs:playouts:10000"


def _game(token: str) -> GameSpec:
    try:
        return GameSpec.parse(token)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e))


def _budget(token: str) -> SearchBudget:
    try:
        return SearchBudget.parse(token)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e))


def _agent_list(text: str, args) -> list[AgentSpec]:
    params = LearningParams(args.alpha, args.gamma) if hasattr(args, "alpha") else None
    specs = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        spec = AgentSpec.parse(tok, params=params if tok.lower().startswith("q") else None)
        if args.budget is not None and ":" not in tok.partition("@")[0] and spec.budget is not None:
            spec = replace(spec, budget=args.budget)
        specs.append(spec)
    return specs


def cmd_learn(args) -> int:
    if args.config:
        config = load_experiment_config(args.config)
    else:
        params = LearningParams(args.alpha, args.gamma)
        schedule = EpsilonSchedule(args.eps_a, args.eps_b, args.learning_matches)
        learner = AgentSpec.parse(args.agent, params, schedule)
        if args.budget is not None and learner.kind is AgentKind.QMPLAYER:
            learner = replace(learner, budget=args.budget)
        opponent = _agent_list(args.opponent, args)[0]
        config = ExperimentConfig(args.game, learner, opponent, args.learning_matches,
                                  args.reps, args.seed, args.window, args.exploitation_matches)
    if config.learning_matches == 0:
        log.warning("learning matches is 0: evaluating an untrained learner over %d matches",
                    config.n_exploitation)
    result = run_experiment(config, jobs=args.jobs)
    out = args.out
    os.makedirs(out, exist_ok=True)
    for rep, rr in enumerate(result.repetitions):
        if rr.series.points():
            write_series(rr.series, os.path.join(out, f"series_rep{rep}.csv"))
        for table, path in zip(rr.tables, snapshot_paths(os.path.join(out, f"rep{rep}"))):
            save_qtable(table, path, config.game.token, config.learner.params.alpha,
                        config.learner.params.gamma, config.learning_matches)
    rows = result.mean_series()
    if rows:
        write_mean_series(rows, os.path.join(out, "mean_series.csv"))
    notes = []
    if config.learner.kind is AgentKind.QMPLAYER:
        notes.append(f"MCS fallback budget {config.learner.budget.token} stands in for a 50 ms time limit")
    meta = RunMetadata(config.describe(), config.seed, wall_time=round(result.wall_time, 3),
                       notes=notes)
    meta_path = os.path.join(out, "metadata.json")
    write_metadata(meta, meta_path)
    print(f"game {config.game.token}  learner {config.learner.label}  opponent {config.opponent.label}")
    for rep, rate in enumerate(result.convergence):
        w, d, l = result.repetitions[rep].series.counts("exploitation")
        print(f"  rep {rep}: convergence win rate {rate:.4f}  (W/D/L {w}/{d}/{l})")
    print(f"convergence win rate {result.mean_convergence:.4f}")
    print(f"decisive-game win rate {result.decisive_convergence:.4f}")
    if config.learning_matches == 0:
        print("warning: learner is untrained")
    return 0


def cmd_compete(args) -> int:
    agents = _agent_list(args.agents, args)
    if len(agents) != 2:
        raise ConfigurationError("compete needs exactly two agents")
    a, b = (s.build(frozen=True) for s in agents)
    wa, wb, d = head_to_head(a, b, args.game, args.matches, RandomStream(args.seed))
    n = args.matches
    print(f"{a.name}: {wa} wins ({wa / n:.3f})")
    print(f"{b.name}: {wb} wins ({wb / n:.3f})")
    print(f"draws: {d} ({d / n:.3f})")
    return 0


def cmd_tournament(args) -> int:
    agents = _agent_list(args.agents, args)
    if len(agents) < 2:
        raise ConfigurationError("a tournament needs at least two agents")
    t0 = time.perf_counter()

    def progress(a, b, wa, wb, d):
        log.info("%s vs %s: %d/%d/%d", a, b, wa, wb, d)

    matrix = run_tournament(agents, args.game, args.matches, args.seed, progress)
    print(format_matrix(matrix))
    if args.out:
        write_matrix(matrix, os.path.join(args.out, "matrix.csv"))
        meta = RunMetadata({"game": args.game.token, "agents": [a.token for a in agents],
                            "matches": args.matches,
                            "draws": matrix.draws}, args.seed,
                           wall_time=round(time.perf_counter() - t0, 3))
        write_metadata(meta, os.path.join(args.out, "metadata.json"))
    return 0


def cmd_play(args) -> int:
    agents = _agent_list(args.agents, args)
    if len(agents) != 2:
        raise ConfigurationError("play needs exactly two agents")
    a, b = (s.build(frozen=s.snapshot is not None) for s in agents)
    result, _ = play_match(a, b, args.game, RandomStream(args.seed), args.match, log=True)
    names = (a.name, b.name) if result.first_mover == 0 else (b.name, a.name)
    state = initial_state(args.game)
    for i, move in enumerate(result.moves):
        state = apply(state, move)
        print(f"{i + 1}. {names[i % 2]} plays {move}")
    print(state.render())
    print(f"{a.name}: {result.goals[0]}  {b.name}: {result.goals[1]}")
    return 0


def cmd_oracle(args) -> int:
    if args.mode == "enumerate":
        print(f"{args.game.token}: {enumerate_states(args.game, args.limit)} reachable states")
        return 0
    solver = Minimax(args.game, args.limit)
    state = initial_state(args.game)
    for mv in filter(None, (args.moves or "").split(",")):
        state = apply(state, int(mv))
    v0 = solver.value(state)
    print(f"{args.game.token} [{state.key}]: value {v0}/{100 - v0} ({outcome_label(v0)})")
    if state.status is None:
        print("optimal moves: " + " ".join(map(str, solver.optimal_moves(state))))
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="qmlearn", description=__doc__, formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, agents_default=None):
        sp.add_argument("--game", type=_game, default=GameSpec.parse("tictactoe:3x3:3"),
                        help="game token, e.g. tictactoe:3x3:3, connectfour:4x4:4, hex:3x3")
        sp.add_argument("--seed", type=int, default=1, help="root random seed")
        sp.add_argument("--budget", type=_budget, default=None,
                        help="search budget for agents given without one, "
                             "playouts:N or ms:N (defaults: QMPlayer playouts:200, "
                             "MCS playouts:10000, MCTS playouts:100000)")
        if agents_default is not None:
            sp.add_argument("--agents", default=agents_default,
                            help="comma-separated agent tokens kind[:mode:amount][@snapshot_dir]")

    sp = sub.add_parser("learn", help="run a learning experiment against an opponent",
                        formatter_class=fmt)
    common(sp)
    sp.add_argument("--agent", default="qplayer", help="learner: qplayer or qmplayer")
    sp.add_argument("--opponent", default="random", help="opponent agent token")
    sp.add_argument("--learning-matches", type=int, default=50000, help="total learning matches l")
    sp.add_argument("--exploitation-matches", type=int, default=None,
                    help="exploitation matches (default 0.5*l; 1000 when l is 0)")
    sp.add_argument("--reps", type=int, default=5, help="independent repetitions")
    sp.add_argument("--alpha", type=float, default=0.1, help="learning rate")
    sp.add_argument("--gamma", type=float, default=0.9, help="discount factor")
    sp.add_argument("--eps-a", type=float, default=0.5, help="epsilon schedule amplitude a")
    sp.add_argument("--eps-b", type=float, default=0.0, help="epsilon schedule floor b")
    sp.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="win-rate window")
    sp.add_argument("--config", default=None, help="INI experiment file (overrides flags)")
    sp.add_argument("--jobs", type=int, default=1, help="parallel repetitions")
    sp.add_argument("--out", default="runs/learn", help="output directory")
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("compete", help="head-to-head between two agents", formatter_class=fmt)
    common(sp, "mcts,random")
    sp.add_argument("--matches", type=int, default=100)
    sp.add_argument("--alpha", type=float, default=0.1, help="learning rate")
    sp.add_argument("--gamma", type=float, default=0.9, help="discount factor")
    sp.set_defaults(func=cmd_compete)

    sp = sub.add_parser("tournament", help="cross-play win-rate matrix", formatter_class=fmt)
    common(sp, PAPER_AGENTS)
    sp.add_argument("--matches", type=int, default=200, help="matches per pair")
    sp.add_argument("--alpha", type=float, default=0.1, help="learning rate")
    sp.add_argument("--gamma", type=float, default=0.9, help="discount factor")
    sp.add_argument("--out", default=None, help="output directory for matrix.csv")
    sp.set_defaults(func=cmd_tournament)

    sp = sub.add_parser("play", help="play and print one match", formatter_class=fmt)
    common(sp, "mcts:playouts:10000,random")
    sp.add_argument("--match", type=int, default=0, help="match index (odd swaps first mover)")
    sp.set_defaults(func=cmd_play)

    sp = sub.add_parser("oracle", help="brute-force ground truth", formatter_class=fmt)
    sp.add_argument("--game", type=_game, default=GameSpec.parse("tictactoe:3x3:3"))
    sp.add_argument("--mode", choices=("minimax", "enumerate"), default="minimax")
    sp.add_argument("--moves", default=None, help="comma-separated moves to reach the queried state")
    sp.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="maximum states visited")
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, IllegalMoveError) as e:
        parser.error(str(e))
    except OracleLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
