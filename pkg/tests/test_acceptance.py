"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed in pytest's terminal summary (section "acceptance
criteria") and also written to stdout for ``pytest -s`` runs.
"""
import random
import time
from dataclasses import replace

from conftest import ACCEPTANCE
from fsrteams.controller import parse_controller
from fsrteams.gridworld import Position, build_environment, manhattan_distance, with_types
from fsrteams.oracles import (
    all_3cnfs,
    all_graphs,
    check_3sat_tev,
    cross_validate,
    default_corpus,
    design_team_oracle,
    domset_oracle,
    sat_oracle,
)
from fsrteams.problems import (
    design_controllers_ls,
    design_team_homogeneous,
    design_team_ls,
    verify_team_env,
)
from fsrteams.reductions import (
    Graph,
    add_holding_area,
    dominating_set_from,
    extend_with_state_ladder,
    neighborhood,
    reduce_3sat_to_teamdesls,
    reduce_3sat_to_teamenvver,
    reduce_domset_to_contdesls,
)
from fsrteams.simulator import (
    ANY,
    Configuration,
    FailureKind,
    FailureReason,
    Status,
    TargetConfiguration,
    Team,
    initial_configuration,
    run,
    simulate_reference,
    step,
)

from helpers import random_teamdesls, random_world

P3 = Graph(3, frozenset({(1, 2), (2, 3)}))


def report(key: int, ok: bool, detail: str):
    ACCEPTANCE[key] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
    assert ok, detail


# 1 ---------------------------------------------------------------------------


def test_criterion_1_reduction_a_equivalence():
    corpus = all_3cnfs(3, 3)
    started = time.perf_counter()
    rep = cross_validate("3sat-tev", corpus, check_3sat_tev)
    wall = time.perf_counter() - started
    report(1, rep.ok and wall < 600,
           f"3SAT->TeamEnvVer {rep.agreements}/{rep.count} agree, "
           f"{len(rep.disagreements)} disagreements, {wall:.0f}s (limit 600s)")


# 2 + 3 -------------------------------------------------------------------------

_WITNESSES: list = []


def test_criterion_2_reduction_b_equivalence():
    started = time.perf_counter()
    total = agree = 0
    bad = []
    for g in all_graphs(4):
        for k in (1, 2):
            if k > g.num_vertices:
                continue
            red = reduce_domset_to_contdesls(g, k)
            found = design_controllers_ls(red.instance)
            expect = domset_oracle(g, k) is not None
            total += 1
            if bool(found) == expect:
                agree += 1
            else:
                bad.append((g.render(), k))
            if found:
                chosen = dominating_set_from(red, found.controllers[0])
                dominated = all(set(neighborhood(g, v)) & set(chosen) for v in range(1, g.num_vertices + 1))
                if len(chosen) > k or not dominated:
                    bad.append(("decoded set invalid", g.render(), k))
                _WITNESSES.append((g.num_vertices, found.result.timestep))
    wall = time.perf_counter() - started
    report(2, not bad and agree == total and wall < 600,
           f"DomSet->ContDesLS {agree}/{total} agree, {len(bad)} problems, {wall:.0f}s (limit 600s)")


def test_criterion_3_reduction_b_witness_length():
    if not _WITNESSES:
        test_criterion_2_reduction_b_equivalence()
    over = [(n, t) for n, t in _WITNESSES if t > (n + 1) + (n * n + 1)]
    report(3, bool(_WITNESSES) and not over,
           f"{len(_WITNESSES)} yes-witnesses, {len(over)} longer than (|V|+1)+(|V|^2+1)")


# 4 ---------------------------------------------------------------------------


def test_criterion_4_reduction_d_equivalence():
    started = time.perf_counter()
    corpus = default_corpus("3sat-tdls", seed=2024, count=200)
    assert all(f.num_vars <= 4 and len(f.clauses) <= 4 for f in corpus)
    agree, shape_ok, yes = 0, True, 0
    for f in corpus:
        red = reduce_3sat_to_teamdesls(f)
        inst = red.instance
        shape_ok &= len(inst.library) == 2 and all(len(c.states) == 1 for c in inst.library) and inst.ec_budget == 0
        got = bool(design_team_ls(inst))
        expect = sat_oracle(f) is not None
        agree += got == expect
        yes += expect
    wall = time.perf_counter() - started
    report(4, agree == len(corpus) and shape_ok and wall < 900,
           f"3SAT->TeamDesLS {agree}/{len(corpus)} agree ({yes} satisfiable), "
           f"library=2 |Q|=1 ec=0: {shape_ok}, {wall:.0f}s (limit 900s)")


# 5 ---------------------------------------------------------------------------


def test_criterion_5_homogeneous_algorithm():
    agree, over, yes = 0, 0, 0
    for seed in range(50):
        inst = random_teamdesls(random.Random(seed), h=1, max_lib=4, max_cells=100)
        assert inst.env.size <= 100 and len(inst.library) <= 4
        got = design_team_homogeneous(inst)
        expect = design_team_oracle(inst) is not None
        agree += bool(got) == expect
        yes += expect
        over += sum(1 for _, budget, t in got.candidates if t > budget)
    report(5, agree == 50 and over == 0,
           f"{agree}/50 agree with brute force ({yes} yes), {over} candidate runs beyond steps_bound")


# 6 ---------------------------------------------------------------------------


def test_criterion_6_state_ladder():
    rows = []
    ok = True
    for q in (2, 3):
        inst = extend_with_state_ladder(reduce_domset_to_contdesls(P3, 1), q).instance
        at_q = design_controllers_ls(inst)
        below = design_controllers_ls(replace(inst, max_states=q - 1))
        ok &= bool(at_q) and not below and len(at_q.controllers[0].states) == q
        rows.append(f"maxQ={q}: |Q|={q} {'found' if at_q else 'bot'}, |Q|={q - 1} {'found' if below else 'bot'}")
    report(6, ok, "; ".join(rows))


# 7 ---------------------------------------------------------------------------


def test_criterion_7_holding_neutrality():
    rng = random.Random(77)
    tev = all_3cnfs(3, 3)
    sat = [f for f in tev if sat_oracle(f) is not None]
    unsat = [f for f in tev if sat_oracle(f) is None]
    from_1 = rng.sample(sat, 5) + rng.sample(unsat, 5)
    corpus_4 = default_corpus("3sat-tdls", seed=2024, count=200)
    from_4 = [f for f in corpus_4 if sat_oracle(f)][:5] + [f for f in corpus_4 if not sat_oracle(f)][:5]
    changed, checked = 0, 0
    for f in from_1:
        inst = reduce_3sat_to_teamenvver(f).instance
        base = verify_team_env(inst).yes
        for extra in (1, 2):
            for states in (1, 2):
                checked += 1
                changed += verify_team_env(add_holding_area(inst, extra, states)).yes != base
    for f in from_4:
        inst = reduce_3sat_to_teamdesls(f).instance
        base = bool(design_team_ls(inst))
        for extra in (1, 2):
            for states in (1, 2):
                checked += 1
                changed += bool(design_team_ls(add_holding_area(inst, extra, states))) != base
    report(7, changed == 0, f"20 instances x 4 holding variants: {changed}/{checked} verdicts changed")


# 8 ---------------------------------------------------------------------------


def _invariants(env, team, positions, tgt):
    """Problems found on one random world; empty when all invariants hold."""
    problems = []
    c0 = initial_configuration(env, team, positions)
    a = run(c0, team, tgt, 200, 6)
    b = run(c0, team, tgt, 200, 6)
    if a.trace.digest() != b.trace.digest():
        problems.append("re-run trace differs")
    if simulate_reference(c0, team, tgt, 200, 6).trace.digest() != a.trace.digest():
        problems.append("engine and reference disagree")
    c, ec = c0, 0
    for _ in range(len(a.trace)):
        nxt = step(c, team)
        if not isinstance(nxt, Configuration):
            break
        if nxt.ec < ec:
            problems.append("ec decreased")
        ec = nxt.ec
        if len(set(nxt.positions)) != len(nxt.positions):
            problems.append("two robots share a square")
        changed = {
            (col, row)
            for row in range(1, env.height + 1)
            for col in range(1, env.width + 1)
            if nxt.env.squares[row - 1][col - 1] != c.env.squares[row - 1][col - 1]
        }
        near = {(p.col + dx, p.row + dy) for p in c.positions for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))}
        if not changed <= near or nxt.ec - c.ec < len(changed):
            problems.append("square changed without a matching modification")
        c = nxt
    if a.status is Status.CYCLE:
        longer = run(c0, team, tgt, 2000, 6, detect_cycles=False)
        if longer.status is Status.SUCCESS:
            problems.append("cycle-detected run succeeds under 10x budget")
    return problems


def test_criterion_8_simulator_invariants():
    rng = random.Random(8)
    failures, statuses = [], {}
    for i in range(100):
        env, team, positions, tgt = random_world(rng, wild=i % 4 == 3)
        env = with_types(env, ["e_a", "e_b", "e_c"])
        probs = _invariants(env, team, positions, tgt)
        if probs:
            failures.append((i, probs))
        status = run(initial_configuration(env, team, positions), team, tgt, 200, 6).status.value
        statuses[status] = statuses.get(status, 0) + 1
    mix = " ".join(f"{k}={v}" for k, v in sorted(statuses.items()))
    report(8, not failures, f"100 random worlds, {len(failures)} with violations ({mix})")


# 9 ---------------------------------------------------------------------------


def test_criterion_9_step_examples():
    env = build_environment(3, 1, {}, default="floor")
    stay = parse_controller("s0: * / * / stay -> s0")
    east = parse_controller("s0: * / * / goEast -> s0")
    west = parse_controller("s0: * / * / goWest -> s0")
    split = parse_controller("s0: enval(floor,0,0) / * / stay -> s0\ns0: !enval(rock,0,0) / * / stay -> s1")

    c0 = initial_configuration(env, [stay], [Position(2, 1)])
    noop = step(c0, [stay])
    ok_noop = isinstance(noop, Configuration) and (noop.env, noop.positions, noop.states, noop.ec, noop.t) == (
        c0.env, c0.positions, c0.states, c0.ec, 1)
    crash = step(initial_configuration(env, [east, west], [Position(1, 1), Position(3, 1)]), [east, west])
    ok_crash = isinstance(crash, FailureReason) and crash.kind is FailureKind.COLLISION and crash.square == (2, 1)
    det = step(initial_configuration(env, [split], [Position(1, 1)]), [split])
    ok_det = isinstance(det, FailureReason) and det.kind is FailureKind.DETERMINISM
    report(9, ok_noop and ok_crash and ok_det,
           f"no-op={'ok' if ok_noop else 'wrong'} collision={'ok' if ok_crash else 'wrong'} "
           f"determinism={'ok' if ok_det else 'wrong'}")


# 10 --------------------------------------------------------------------------


def test_criterion_10_desk_scale_performance():
    env = build_environment(50, 50, {}, default="e_floor")
    bouncer = parse_controller(
        "radius 1\nstates east west\n"
        "east: enval(e_floor,1,0) / * / goEast -> east\neast: * / * / stay -> west\n"
        "west: enval(e_floor,-1,0) / * / goWest -> west\nwest: * / * / stay -> east\n"
    )
    team = Team([bouncer] * 10)
    positions = [Position(1 + 3 * i, 1 + 5 * i) for i in range(10)]
    never = TargetConfiguration(positions=((ANY, Position(50, 50)), (ANY, Position(1, 50))))
    c0 = initial_configuration(env, team, positions)
    started = time.perf_counter()
    res = run(c0, team, never, 100_000, 0, detect_cycles=False)
    wall = time.perf_counter() - started
    moved = manhattan_distance(res.final.positions[0], positions[0])
    report(10, res.status is Status.BUDGET and res.timestep == 100_000 and wall <= 10 and moved >= 0,
           f"50x50, 10 robots, {res.timestep} steps in {wall:.2f}s (limit 10s)")
