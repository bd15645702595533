"""popctl command line.

Exit codes: 0 = positive/won, 1 = negative/lost, 2 = error or budget,
3 = inconclusive (budget ran out mid-simulation).
"""

from __future__ import annotations

import argparse
import sys

from .arena import BudgetExceededError, DEFAULT_NODE_BUDGET
from .nfa import GadgetSpec, NfaError, generate, parse_nfa, serialize_nfa
from .popsim import (
    ControllerStrategy,
    ResourceBudget,
    ResourceExceededError,
    SimulationError,
    TimeGadgetScript,
    exact_winner,
    find_cutoff,
    format_trace,
    make_adversary,
    run,
)
from .service import SessionError, SessionStore, create_app
from .support_game import solve_support_game
from .synthesis import decide, deserialize_controller, serialize_controller

EXIT_YES = 0
EXIT_NO = 1
EXIT_ERROR = 2
EXIT_INCONCLUSIVE = 3


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_nfa(fh.read())


def cmd_decide(args) -> int:
    nfa = _load(args.file)
    decision = decide(nfa, node_budget=args.budget)
    stats = decision.arena_stats
    print("YES" if decision.positive else "NO")
    print(f"arena: {stats['nodes']} nodes, {stats['edges']} edges")
    hist = ", ".join(f"{p}:{c}" for p, c in sorted(stats["priorities"].items()))
    print(f"priorities: {hist}")
    if decision.positive and args.strategy:
        with open(args.strategy, "w", encoding="utf-8") as fh:
            fh.write(serialize_controller(decision.controller))
        print(f"controller written to {args.strategy}")
    return EXIT_YES if decision.positive else EXIT_NO


def cmd_support(args) -> int:
    nfa = _load(args.file)
    result = solve_support_game(nfa)
    if result.player1_wins:
        names = " ".join(nfa.alphabet[a] for a in result.witness_actions)
        print(f"Player1 wins the support game; witness: {names}")
        code = EXIT_YES
    else:
        print("Player2 wins the support game")
        print(f"({len(result.safe_supports)} supports reachable, none is the target alone)")
        code = EXIT_NO
    decision_hint = decide(nfa, node_budget=args.budget)
    if not result.player1_wins and decision_hint.positive:
        print("note: every finite population is still controllable (decide=YES)")
    return code


def cmd_simulate(args) -> int:
    nfa = _load(args.file)
    adversary = make_adversary(args.adversary, args.seed)
    if args.script == "time":
        strategy = TimeGadgetScript()
    elif args.strategy:
        with open(args.strategy, "r", encoding="utf-8") as fh:
            controller = deserialize_controller(fh.read(), nfa)
        strategy = ControllerStrategy(controller)
    else:
        decision = decide(nfa, node_budget=args.arena_budget)
        if not decision.positive:
            print("NO: not controllable, nothing to simulate", file=sys.stderr)
            return EXIT_ERROR
        strategy = ControllerStrategy(decision.controller)
    outcome = run(nfa, strategy, args.m, adversary, budget=args.budget,
                  record_trace=args.trace is not None)
    print(f"{outcome.status} after {outcome.steps} steps (m={args.m})")
    if args.trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(format_trace(nfa, outcome.trace))
    if outcome.status == "won":
        return EXIT_YES
    if outcome.status == "lost":
        return EXIT_NO
    return EXIT_INCONCLUSIVE


def cmd_exact(args) -> int:
    nfa = _load(args.file)
    winner = exact_winner(nfa, args.m, ResourceBudget(args.max_configs, args.max_branch))
    print(f"Player{winner} wins the {args.m}-population game")
    return EXIT_YES if winner == 1 else EXIT_NO


def cmd_cutoff(args) -> int:
    nfa = _load(args.file)
    result = find_cutoff(nfa, args.max, ResourceBudget(args.max_configs, args.max_branch))
    if result.is_cutoff:
        print(f"cutoff = {result.value}")
    else:
        print(f"no cutoff up to m = {result.value}")
    return EXIT_YES


def cmd_gen(args) -> int:
    spec = GadgetSpec.parse(args.gadget)
    nfa = generate(spec)
    text = serialize_nfa(nfa)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"{spec.kind} gadget with {nfa.n} states written to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_YES


def cmd_serve(args) -> int:
    import uvicorn

    store = SessionStore(cap=args.sessions, node_budget=args.budget)
    app = create_app(store, static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_YES


def cmd_play(args) -> int:
    store = SessionStore(node_budget=args.budget)
    with open(args.file, "r", encoding="utf-8") as fh:
        session = store.create(fh.read(), args.m)
    nfa = session.nfa
    print(f"playing adversary against the controller, m={args.m}")
    while session.status == "Running":
        view = session.view()
        counts = ", ".join(f"{s}:{c}" for s, c in view["counts"].items() if c)
        print(f"step {view['step']}: {counts}")
        print(f"controller plays: {view['proposedAction']}")
        try:
            split: dict[str, dict[str, int]] = {}
            for state, succs in view["legalSuccessors"].items():
                have = view["counts"][state]
                if len(succs) == 1:
                    split[state] = {succs[0]: have}
                    continue
                prompt = f"  {state} ({have} agents) over {' '.join(succs)}: "
                alloc: dict[str, int] = {}
                for part in input(prompt).split():
                    dst, _, k = part.partition("=")
                    alloc[dst] = int(k)
                split[state] = alloc
            session.move(split, store.step_cap)
        except EOFError:
            print("input closed; leaving the session")
            break
        except (ValueError, SessionError) as exc:
            print(f"illegal split: {exc}")
    print(f"session {session.status.lower()} after {session.step} moves")
    return EXIT_YES if session.status == "Won" else EXIT_INCONCLUSIVE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popctl",
                                     description="population control toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide the population control problem")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.add_argument("--strategy", help="write the controller document here")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("support", help="solve the infinite-population game")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.set_defaults(func=cmd_support)

    p = sub.add_parser("simulate", help="run one finite-population game")
    p.add_argument("file")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--adversary", default="even", choices=["even", "oneoff", "random"])
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, default=10_000, help="max steps")
    p.add_argument("--arena-budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.add_argument("--strategy", help="load a controller document")
    p.add_argument("--script", choices=["time"], help="use a built-in scripted strategy")
    p.add_argument("--trace", help="write the step trace here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="solve one m-population game exactly")
    p.add_argument("file")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--max-configs", type=int, default=2_000_000)
    p.add_argument("--max-branch", type=int, default=2_000_000)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("cutoff", help="scan population sizes for the cutoff")
    p.add_argument("file")
    p.add_argument("--max", type=int, required=True)
    p.add_argument("--max-configs", type=int, default=2_000_000)
    p.add_argument("--max-branch", type=int, default=2_000_000)
    p.set_defaults(func=cmd_cutoff)

    p = sub.add_parser("gen", help="generate a built-in gadget family member")
    p.add_argument("gadget", help="kind or kind:parameter, e.g. counter:2")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("serve", help="serve the session API and play UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--sessions", type=int, default=64)
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.add_argument("--ui", help="directory with the built play-ui bundle")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("play", help="play the adversary in the terminal")
    p.add_argument("file")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.set_defaults(func=cmd_play)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NfaError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (BudgetExceededError, ResourceExceededError) as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
