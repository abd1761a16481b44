"""Seeded random worlds shared by property tests and the acceptance suite."""
import random

from fsrteams.controller import STAR, And, Controller, Mod, Not, Or, Pred, Transition
from fsrteams.gridworld import Position, build_environment
from fsrteams.simulator import ANY, TargetConfiguration, Team

TYPES = ["e_a", "e_b", "e_c"]
DIRS = ["goNorth", "goSouth", "goEast", "goWest", "stay"]


def random_formula(rng: random.Random, radius: int, depth: int = 2):
    if depth == 0 or rng.random() < 0.4:
        while True:
            dx, dy = rng.randint(-radius, radius), rng.randint(-radius, radius)
            if abs(dx) + abs(dy) <= radius:
                break
        return Pred(rng.choice(TYPES + ["e_robot"]), dx, dy)
    kind = rng.choice("NAO")
    if kind == "N":
        return Not(random_formula(rng, radius, depth - 1))
    op = And if kind == "A" else Or
    return op(random_formula(rng, radius, depth - 1), random_formula(rng, radius, depth - 1))


OFFSET = {"goNorth": (0, 1), "goSouth": (0, -1), "goEast": (1, 0), "goWest": (-1, 0)}


def _free_ahead(d: str):
    # true only for an in-grid, unoccupied, freespace square
    dx, dy = OFFSET[d]
    out = Pred(TYPES[0], dx, dy)
    for t in TYPES[1:]:
        out = Or(out, Pred(t, dx, dy))
    return out


def random_controller(rng: random.Random, name: str, mod_rate: float = 0.2, wild: bool = False) -> Controller:
    """Tame controllers mostly move only onto free squares; wild ones move
    blindly and may carry co-enabled transitions that disagree."""
    radius = rng.randint(1, 2)
    states = tuple(f"q{i}" for i in range(rng.randint(1, 4)))
    trs = []

    def mod():
        if rng.random() < mod_rate:
            dx, dy = rng.choice([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])
            return Mod(rng.choice(TYPES), dx, dy)
        return STAR

    for i, q in enumerate(states):
        if wild:
            for _ in range(rng.randint(1, 3)):
                trig = STAR if rng.random() < 0.35 else random_formula(rng, radius)
                trs.append(Transition(q, trig, mod(), rng.choice(DIRS), rng.choice(states)))
            continue
        d = rng.choice(list(OFFSET))
        guard = _free_ahead(d)
        if rng.random() < 0.5:
            guard = And(guard, random_formula(rng, radius, 1))
        trs.append(Transition(q, guard, mod(), d, rng.choice(states)))
        # blocked: turn to the next state's heading
        trs.append(Transition(q, STAR, mod(), "stay", states[(i + 1) % len(states)]))
    return Controller(states, states[0], radius, tuple(trs), name)


def random_world(rng: random.Random, max_side: int = 7, max_robots: int = 4, mod_rate: float = 0.2, wild: bool = False):
    """(env, team, positions, target); the target is a free square no robot starts on."""
    w, h = rng.randint(2, max_side), rng.randint(2, max_side)
    cells = {}
    for c in range(1, w + 1):
        for r in range(1, h + 1):
            cells[(c, r)] = ("e_x", True) if rng.random() < 0.12 else rng.choice(TYPES)
    env = build_environment(w, h, cells)
    free = env.freespace()
    if len(free) < 2:
        return random_world(rng, max_side, max_robots, mod_rate, wild)
    n = rng.randint(1, min(max_robots, len(free)))
    positions = tuple(rng.sample(free, n))
    kinds = [random_controller(rng, f"k{i}", mod_rate, wild) for i in range(rng.randint(1, n))]
    team = Team(rng.choice(kinds) for _ in range(n))
    goal = rng.choice([p for p in free if p not in positions] or free)
    target = TargetConfiguration(positions=((ANY, goal),))
    return env, team, positions, target


def random_teamdesls(rng: random.Random, h: int = 1, max_lib: int = 4, max_cells: int = 100):
    """A small TeamDesLS instance with a target some library member may reach."""
    from fsrteams.gridworld import with_types
    from fsrteams.problems import TeamDesLSInstance

    while True:
        w = rng.randint(2, 10)
        hgt = rng.randint(2, max(2, min(10, max_cells // w)))
        cells = {
            (c, r): ("e_x", True) if rng.random() < 0.1 else rng.choice(TYPES)
            for c in range(1, w + 1)
            for r in range(1, hgt + 1)
        }
        env = with_types(build_environment(w, hgt, cells), TYPES)
        free = env.freespace()
        if len(free) >= 4:
            break
    size = rng.randint(1, 3)
    region = tuple(rng.sample(free, size))
    library = tuple(random_controller(rng, f"L{i}", mod_rate=0.1) for i in range(rng.randint(1, max_lib)))
    goals = rng.sample([p for p in free if p not in region] or free, rng.randint(1, min(2, size)))
    if rng.random() < 0.5:
        goals = [_visited(env, rng.choice(library), region, rng.randint(1, 12)) or goals[0]]
    task = TargetConfiguration(positions=tuple((ANY, g) for g in goals))
    return TeamDesLSInstance(env, size, library, region, h, rng.randint(0, 3), task, c1=1, c2=2)


def _visited(env, ctrl, region, steps):
    """Where robot 0 of a homogeneous team stands after ``steps`` clean steps."""
    from fsrteams.problems import canonical_placement
    from fsrteams.simulator import Configuration, initial_configuration, step

    team = [ctrl] * len(region)
    c = initial_configuration(env, team, canonical_placement(region))
    for _ in range(steps):
        nxt = step(c, team)
        if not isinstance(nxt, Configuration):
            return None
        c = nxt
    return c.positions[0]


def random_contdesls(rng: random.Random):
    """A tiny ContDesLS instance the naive oracle can enumerate."""
    from fsrteams.controller import TransitionTemplate
    from fsrteams.problems import ContDesLSInstance

    w, hgt = rng.randint(2, 4), rng.randint(1, 3)
    cells = {(c, r): rng.choice(TYPES[:2]) for c in range(1, w + 1) for r in range(1, hgt + 1)}
    env = build_environment(w, hgt, cells)
    free = env.freespace()
    size = rng.randint(1, min(2, len(free) - 1))
    start = tuple(rng.sample(free, size))
    radius = rng.randint(0, 1)
    library = []
    for _ in range(rng.randint(1, 3)):
        trig = STAR if rng.random() < 0.4 else random_formula(rng, radius, 1)
        library.append(TransitionTemplate(trig, STAR, rng.choice(DIRS)))
    goal = rng.choice([p for p in free if p not in start])
    task = TargetConfiguration(positions=((ANY, goal),))
    return ContDesLSInstance(
        env=env, team_size=size, start=start, library=tuple(library), radius=radius,
        max_states=rng.randint(1, 2), max_out_degree=rng.randint(1, 2), h=1, ec_budget=0, task=task,
    )
