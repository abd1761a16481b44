"""``fsrteams`` command line: simulate, verify, design, reduce, crossvalidate.

Exit codes:

    0   success / yes / found / cross-validation agreed
    1   no / bot / cross-validation disagreement
    2   usage, parse or I/O error
    3   search cap exceeded
    10  DeterminismViolation  (simulate)
    11  Collision             (simulate)
    12  ObstacleEntry         (simulate)
    13  ModificationConflict  (simulate)
    14  EcBudgetExceeded      (simulate)
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundle import BundleError, read_bundle, write_bundle
from .controller import ControllerError, parse_controllers, render_controllers
from .gridworld import GridError, Position, parse_environment
from .oracles import CHECKS, cross_validate, default_corpus
from .problems import (
    DEFAULT_C1,
    DEFAULT_C2,
    ContDesLSInstance,
    SearchCapExceeded,
    TeamDesLSInstance,
    TeamEnvVerInstance,
    design_controllers_ls,
    design_team_homogeneous,
    design_team_ls,
    verify_team_env,
)
from .reductions import (
    parse_dimacs_cnf,
    parse_graph,
    reduce_3sat_to_teamdesls,
    reduce_3sat_to_teamenvver,
    reduce_domset_to_contdesls,
    with_holding,
)
from .simulator import FailureKind, TargetConfiguration, Team, initial_configuration, parse_target, run, steps_bound

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
FAILURE_EXIT = {
    FailureKind.DETERMINISM: 10,
    FailureKind.COLLISION: 11,
    FailureKind.OBSTACLE: 12,
    FailureKind.MODIFICATION: 13,
    FailureKind.EC_BUDGET: 14,
}


class UsageError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _parse(path, parser):
    try:
        return parser(_read(path))
    except (GridError, ControllerError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load(bundle) -> tuple:
    try:
        return read_bundle(bundle)
    except (GridError, ControllerError, BundleError, ValueError) as exc:
        raise UsageError(f"{bundle}: {exc}") from None


def _emit_trace(res, path):
    text = res.trace.render()
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _unreachable(team) -> TargetConfiguration:
    # robot index len(team) never exists, so the run goes to its step budget
    return TargetConfiguration(positions=((len(team), Position(1, 1)),))


def cmd_simulate(args) -> int:
    if args.bundle:
        inst, _ = _load(args.bundle)
        if not isinstance(inst, TeamEnvVerInstance):
            raise UsageError("simulate needs a teamenvver bundle")
        env, team, start, task, ec = inst.env, inst.team, inst.start, inst.task, inst.ec_budget
    else:
        if not (args.env and args.team and args.start):
            raise UsageError("give a bundle or all of --env, --team and --start")
        env = _parse(args.env, parse_environment)
        pool = {c.name: c for c in _parse(args.team, parse_controllers)}
        start, robots = [], []
        for n, line in enumerate(_read(args.start).splitlines(), start=1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            if len(parts) != 3 or parts[2] not in pool:
                raise UsageError(f"{args.start}:{n}: expected 'col row controller-name'")
            try:
                start.append(Position(int(parts[0]), int(parts[1])))
            except ValueError:
                raise UsageError(f"{args.start}:{n}: bad coordinates") from None
            robots.append(pool[parts[2]])
        team, start = Team(robots), tuple(start)
        task = _parse(args.task, parse_target) if args.task else _unreachable(team)
        ec = 0
    if args.ec is not None:
        ec = args.ec
    try:
        c0 = initial_configuration(env, team, start)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = run(c0, team, task, args.steps, ec, detect_cycles=args.cycles)
    _emit_trace(res, args.trace)
    print(f"status={res.status.value} t={res.timestep}" + (f" reason={res.failure}" if res.failure else ""), file=sys.stderr)
    return FAILURE_EXIT[res.failure.kind] if res.failure else EXIT_OK


def cmd_verify(args) -> int:
    inst, limits = _load(args.bundle)
    if not isinstance(inst, TeamEnvVerInstance):
        raise UsageError("verify needs a teamenvver bundle")
    steps = args.steps
    if steps is None and "steps" in limits:
        steps = int(limits["steps"])
    if steps is None:
        steps = steps_bound(args.c1, args.c2, inst.env.size, inst.team.max_states)
    if args.ec is not None:
        inst = TeamEnvVerInstance(inst.env, inst.team, inst.start, args.ec, inst.task)
    verdict = verify_team_env(inst, steps, detect_cycles=not args.no_cycles)
    print(verdict.result.describe())
    if args.trace:
        _emit_trace(verdict.result, args.trace)
    return EXIT_OK if verdict.yes else EXIT_NO


def cmd_design(args) -> int:
    inst, _ = _load(args.bundle)
    try:
        if args.mode == "controllers":
            if not isinstance(inst, ContDesLSInstance):
                raise UsageError("controller design needs a contdesls bundle")
            found = design_controllers_ls(inst, cap=args.cap)
        else:
            if not isinstance(inst, TeamDesLSInstance):
                raise UsageError("team design needs a teamdesls bundle")
            if args.mode == "homogeneous":
                try:
                    found = design_team_homogeneous(inst)
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
            else:
                found = design_team_ls(inst, cap=args.cap, all_placements=args.all_placements)
    except SearchCapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    if not found:
        print("bot")
        return EXIT_NO
    print(f"found t={found.result.timestep} assignment={' '.join(map(str, found.assignment))}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "controllers.txt").write_text(render_controllers(found.controllers), encoding="utf-8")
        (out / "assignment.txt").write_text(
            "".join(f"{p.col} {p.row} {a}\n" for p, a in zip(found.positions, found.assignment)), encoding="utf-8"
        )
        (out / "trace.txt").write_text(found.result.trace.render(), encoding="utf-8")
    else:
        sys.stdout.write(render_controllers(found.controllers))
    return EXIT_OK


def cmd_reduce(args) -> int:
    if args.kind == "ds-cdls":
        if args.k is None:
            raise UsageError("ds-cdls needs --k")
        g = _parse(args.input, parse_graph)
        try:
            red = reduce_domset_to_contdesls(g, args.k, ladder_states=args.ladder or 1)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        if args.ladder:
            raise UsageError("--ladder only applies to ds-cdls")
        f = _parse(args.input, parse_dimacs_cnf)
        red = (reduce_3sat_to_teamenvver if args.kind == "3sat-tev" else reduce_3sat_to_teamdesls)(f)
    if args.holding is not None:
        if args.holding < 1:
            raise UsageError("--holding must be >= 1")
        red = with_holding(red, args.holding - 1, args.states)
    write_bundle(red.instance, args.out, {"certificate.txt": red.certificate.render(), "source.txt": red.source.render()})
    print(f"wrote {args.out} instance_digest={red.certificate.instance_digest}")
    return EXIT_OK


def _manifest(path, construction):
    base = Path(path).parent
    items = []
    for n, line in enumerate(_read(path).splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if construction == "ds-cdls":
            if len(parts) != 2:
                raise UsageError(f"{path}:{n}: expected '<graph-file> <k>'")
            items.append((_parse(base / parts[0], parse_graph), int(parts[1])))
        else:
            items.append(_parse(base / parts[0], parse_dimacs_cnf))
    return items


def cmd_crossvalidate(args) -> int:
    if args.corpus:
        corpus = _manifest(args.corpus, args.construction)
    else:
        if args.construction == "3sat-tdls" and args.seed is None:
            raise UsageError("random corpora need --seed")
        corpus = default_corpus(args.construction, seed=args.seed or 0, count=args.count)
    report = cross_validate(args.construction, corpus, CHECKS[args.construction], jobs=args.jobs)
    print(report.render())
    for label in report.disagreements:
        print(f"disagreement {label}")
    if args.report:
        Path(args.report).write_text(report.render() + "\n", encoding="utf-8")
    return EXIT_OK if report.ok else EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsrteams", description="Finite-state robot team simulation, design and reductions.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a team and write its trace")
    s.add_argument("bundle", nargs="?", help="teamenvver bundle directory")
    s.add_argument("--env")
    s.add_argument("--team", help="controllers file ('---'-separated, each with a name)")
    s.add_argument("--start", help="lines 'col row controller-name'")
    s.add_argument("--task", help="target configuration file (default: run to the step budget)")
    s.add_argument("--steps", type=int, default=100)
    s.add_argument("--ec", type=int)
    s.add_argument("--cycles", action="store_true", help="stop when a configuration repeats")
    s.add_argument("--trace", help="write the trace here instead of stdout")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="decide a teamenvver bundle")
    v.add_argument("bundle")
    v.add_argument("--steps", type=int, help="step budget (default: c1*(|E|+max|Q|)^c2)")
    v.add_argument("--c1", type=int, default=DEFAULT_C1)
    v.add_argument("--c2", type=int, default=DEFAULT_C2)
    v.add_argument("--ec", type=int)
    v.add_argument("--no-cycles", action="store_true")
    v.add_argument("--trace")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("design", help="solve a teamdesls or contdesls bundle")
    d.add_argument("mode", choices=["team", "controllers", "homogeneous"])
    d.add_argument("bundle")
    d.add_argument("--out", help="directory for controllers.txt, assignment.txt and trace.txt")
    d.add_argument("--cap", type=int, default=1_000_000)
    d.add_argument("--all-placements", action="store_true")
    d.set_defaults(func=cmd_design)

    r = sub.add_parser("reduce", help="build an instance bundle from a CNF or graph")
    r.add_argument("kind", choices=["3sat-tev", "ds-cdls", "3sat-tdls"])
    r.add_argument("input", help="DIMACS cnf, or 'p edge' graph for ds-cdls")
    r.add_argument("--out", required=True)
    r.add_argument("--k", type=int)
    r.add_argument("--ladder", type=int, help="force this many controller states (ds-cdls)")
    r.add_argument("--holding", type=int, help="raise the team's type count to this h")
    r.add_argument("--states", type=int, default=1, help="states per holding-area robot")
    r.set_defaults(func=cmd_reduce)

    x = sub.add_parser("crossvalidate", help="compare a construction with its oracle")
    x.add_argument("construction", choices=sorted(CHECKS))
    x.add_argument("--corpus", help="manifest: one input path per line ('path k' for ds-cdls)")
    x.add_argument("--seed", type=int)
    x.add_argument("--count", type=int)
    x.add_argument("--jobs", type=int, default=1)
    x.add_argument("--report")
    x.set_defaults(func=cmd_crossvalidate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
