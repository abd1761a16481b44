"""Polynomial-time instance generators from 3SAT and Dominating Set.

Each generator returns a :class:`Reduction`: the instance plus a certificate
recording the source digest, the instance digest and the construction
parameters, so a bundle can be traced back to the formula or graph it encodes.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Union

from .bundle import instance_digest
from .controller import (
    STAR,
    Controller,
    Not,
    Pred,
    TransitionTemplate,
    conj,
    disj,
    instantiate_template,
)
from .gridworld import E_ROBOT, Environment, ParseError, Position, build_environment, with_types
from .problems import ContDesLSInstance, Resident, TeamDesLSInstance, TeamEnvVerInstance
from .simulator import ANY, TargetConfiguration, Team


# --- source problems -----------------------------------------------------------


@dataclass(frozen=True)
class CNF:
    """3-CNF formula over variables 1..num_vars; literals are signed ints."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("a formula needs at least one variable")
        for c in self.clauses:
            if len(c) != 3:
                raise ValueError(f"clause {c} does not have exactly three literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} outside variables 1..{self.num_vars}")

    def satisfied_by(self, assignment) -> bool:
        """``assignment[i]`` is the value of variable ``i + 1``."""
        return all(any((lit > 0) == bool(assignment[abs(lit) - 1]) for lit in c) for c in self.clauses)

    def render(self) -> str:
        out = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        out += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(out) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 1..num_vertices."""

    num_vertices: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.num_vertices < 1:
            raise ValueError("a graph needs at least one vertex")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (1 <= u <= self.num_vertices and 1 <= v <= self.num_vertices):
                raise ValueError(f"edge ({u},{v}) outside vertices 1..{self.num_vertices}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    def render(self) -> str:
        out = [f"p edge {self.num_vertices} {len(self.edges)}"]
        out += [f"e {u} {v}" for u, v in sorted(self.edges)]
        return "\n".join(out) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()


def neighborhood(g: Graph, v: int) -> list[int]:
    """Closed neighbourhood of ``v``, ascending."""
    out = {v}
    for a, b in g.edges:
        if a == v:
            out.add(b)
        elif b == v:
            out.add(a)
    return sorted(out)


def _header(line: str, kind: str, n: int):
    parts = line.split()
    if len(parts) != 4 or parts[1] != kind:
        raise ParseError(f"expected 'p {kind} <n> <m>'", n)
    try:
        return int(parts[2]), int(parts[3])
    except ValueError:
        raise ParseError("header counts must be integers", n) from None


def parse_dimacs_cnf(text: str) -> CNF:
    header = None
    clauses, current = [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise ParseError("duplicate header", n)
            header = _header(line, "cnf", n)
            continue
        if header is None:
            raise ParseError("clause before 'p cnf' header", n)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", n) from None
            if lit == 0:
                if len(current) != 3:
                    raise ParseError(f"clause has {len(current)} literals, expected 3", n)
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > header[0]:
                raise ParseError(f"literal {lit} exceeds declared {header[0]} variables", n)
            else:
                current.append(lit)
    if header is None:
        raise ParseError("missing 'p cnf' header", 1)
    if current:
        raise ParseError("last clause is not terminated by 0", len(text.splitlines()))
    if len(clauses) != header[1]:
        raise ParseError(f"header declares {header[1]} clauses, found {len(clauses)}", 1)
    return CNF(header[0], tuple(clauses))


def parse_graph(text: str) -> Graph:
    header = None
    edges = set()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise ParseError("duplicate header", n)
            header = _header(line, "edge", n)
            continue
        parts = line.split()
        if parts[0] != "e" or len(parts) != 3:
            raise ParseError(f"expected 'e <u> <v>', got {line!r}", n)
        if header is None:
            raise ParseError("edge before 'p edge' header", n)
        try:
            u, v = int(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError("vertex ids must be integers", n) from None
        if u == v or not (1 <= u <= header[0] and 1 <= v <= header[0]):
            raise ParseError(f"bad edge ({u},{v})", n)
        edges.add((min(u, v), max(u, v)))
    if header is None:
        raise ParseError("missing 'p edge' header", 1)
    return Graph(header[0], frozenset(edges))


# --- certificates --------------------------------------------------------------

Instance = Union[TeamEnvVerInstance, TeamDesLSInstance, ContDesLSInstance]


@dataclass(frozen=True)
class ReductionCertificate:
    construction: str
    source_digest: str
    instance_digest: str
    params: tuple[tuple[str, object], ...] = ()

    def render(self) -> str:
        out = [
            f"construction={self.construction}",
            f"source_digest={self.source_digest}",
            f"instance_digest={self.instance_digest}",
        ]
        out += [f"{k}={v}" for k, v in self.params]
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class Reduction:
    instance: Instance
    certificate: ReductionCertificate
    source: Union[CNF, Graph]
    layout: dict = field(default_factory=dict, compare=False, repr=False)


def _certify(construction: str, source, inst, layout: dict, **params) -> Reduction:
    cert = ReductionCertificate(construction, source.digest(), instance_digest(inst), tuple(params.items()))
    return Reduction(inst, cert, source, layout)


def _robot(dx: int, dy: int) -> Pred:
    return Pred(E_ROBOT, dx, dy)


def _single_state(name: str, radius: int, rules) -> Controller:
    trs = tuple(instantiate_template(TransitionTemplate(f, STAR, d), "s0", "s0") for f, d in rules)
    return Controller(("s0",), "s0", radius, trs, name)


# --- Dominating Set -> controller design ---------------------------------------


def reduce_domset_to_contdesls(g: Graph, k: int, ladder_states: int = 1) -> Reduction:
    """A single robot climbs one column per vertex; it may step east only
    from squares naming a vertex it was built to react to.

    Column ``j`` holds a band listing the closed neighbourhood of vertex
    ``j``.  The robot starts at the bottom of column 1 and must reach the
    northeast corner, so every band must contain a vertex with an eastward
    transition, while the out-degree bound ``d = k + 1`` (one default
    northward move plus ``k`` eastward moves) caps the chosen set at ``k``.

    ``ladder_states = m > 1`` prepends a staircase that can only be
    descended by a controller with ``m`` states (see
    :func:`extend_with_state_ladder`).
    """
    n = g.num_vertices
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    m = ladder_states
    if m < 1:
        raise ValueError("ladder_states must be >= 1")
    if m > 1 and m - 1 > k + 1:
        raise ValueError(f"a {m}-state ladder needs out-degree {m - 1} > k + 1")
    strip = m - 1  # rows of ladder types under every band
    x0 = m if m > 1 else 0  # ladder columns plus bridge
    base = lambda j: strip + (j - 1) * (n + strip) + 1  # first band row of column j

    cells: dict = {}
    for j in range(1, n + 2):
        x = x0 + j
        for i in range(strip):
            cells[(x, base(j) - strip + i)] = f"e_q{i + 1}"
        if j <= n:
            for i, u in enumerate(neighborhood(g, j)):
                cells[(x, base(j) + i)] = f"e_v{u}"

    top = 1
    if m > 1:
        # column j (1..m-1) lists e_q1..e_qj from its top down;
        # the bottom of column j sits west of the top of column j+1
        bottom = 1
        for j in range(m - 1, 0, -1):
            for i in range(j):
                cells[(j, bottom + j - 1 - i)] = f"e_q{i + 1}"
            bottom = bottom + j - 1
        top = bottom
        cells[(m, 1)] = "e_E"
    width = x0 + n + 1
    height = max(top, base(n + 1))
    env = build_environment(width, height, cells, default="e_N")
    start = Position(1, top if m > 1 else 1)
    task = TargetConfiguration(positions=((ANY, Position(width, height)),))

    library = [TransitionTemplate(Pred(f"e_v{v}", 0, 0), STAR, "goEast") for v in range(1, n + 1)]
    library.append(TransitionTemplate(STAR, STAR, "goNorth"))
    for i in range(1, strip + 1):
        library.append(TransitionTemplate(Pred(f"e_q{i}", 0, 0), STAR, "goSouth"))
        library.append(TransitionTemplate(Pred(f"e_q{i}", 0, 0), STAR, "goEast"))
    if m > 1:
        library.append(TransitionTemplate(Pred("e_E", 0, 0), STAR, "goEast"))

    inst = ContDesLSInstance(
        env=env, team_size=1, start=(start,), library=tuple(library), radius=0,
        max_states=m, max_out_degree=k + 1, h=1, ec_budget=0, task=task, c1=1, c2=1,
    )
    layout = {"columns": {v: x0 + v for v in range(1, n + 1)}, "ladder_states": m, "top": top}
    return _certify("ds-cdls", g, inst, layout, k=k, ladder_states=m)


def extend_with_state_ladder(red: Reduction, states: int) -> Reduction:
    """Regenerate a Dominating Set instance so that solutions need ``states`` states."""
    if red.certificate.construction != "ds-cdls":
        raise ValueError("only Dominating Set instances carry a state ladder")
    k = dict(red.certificate.params)["k"]
    return reduce_domset_to_contdesls(red.source, k, ladder_states=states)


def dominating_set_from(red: Reduction, controller: Controller) -> list[int]:
    """Vertices whose eastward template the designed controller uses."""
    out = set()
    for t in controller.transitions:
        if t.dir == "goEast" and isinstance(t.trigger, Pred) and t.trigger.type.startswith("e_v"):
            out.add(int(t.trigger.type[3:]))
    return sorted(out)


# --- 3SAT -> team verification -------------------------------------------------


def reduce_3sat_to_teamenvver(f: CNF) -> Reduction:
    """Variable robots form a binary counter that a carry robot increments.

    Layout for ``n`` variables (width ``2n + 1``, height 5):

    * rows 1-2: a two-square slot per variable at column ``2i``; a robot in
      the lower square means False, upper means True;
    * row 3: the carry track, with the carry's home at ``(1, 3)``;
    * row 4: the return track back to the home square;
    * row 5: the evaluator at ``(2, 5)`` and the goal square ``(1, 5)``.

    The carry sweeps east: it pushes True variables down (to False) and keeps
    going, and lifts the first False variable up before returning home.  The
    evaluator watches the home square; whenever the carry is home it reads
    every slot and steps onto the goal if the counter satisfies the formula.
    After the all-True assignment the carry runs off the east end of the
    track and stops, the configuration freezes and the run is a "no".
    """
    n = f.num_vars
    width = 2 * n + 1
    wall = ("e_Wall", True)
    cells: dict = {}
    for col in range(1, width + 1):
        for row in (1, 2):
            cells[(col, row)] = "e_Var" if col % 2 == 0 and col <= 2 * n else wall
        cells[(col, 3)] = "e_CD" if col == 1 else "e_Car"
        cells[(col, 4)] = "e_CS" if col <= 2 * n else wall
        cells[(col, 5)] = "e_Evl" if col <= 2 else wall
    env = build_environment(width, 5, cells)

    at = lambda t, dx=0, dy=0: Pred(t, dx, dy)
    lit = lambda l: _robot(2 * abs(l) - 2, -3) if l > 0 else Not(_robot(2 * abs(l) - 2, -3))
    phi = conj(*(disj(*(lit(l) for l in c)) for c in f.clauses)) if f.clauses else None
    evaluate = [at("e_Evl"), at("e_Evl", -1, 0), _robot(-1, -2)] + ([phi] if phi is not None else [])
    rules = [
        # variables: step down or up when the carry reads the slot
        (conj(at("e_Var"), at("e_Var", 0, -1), _robot(0, 1)), "goSouth"),
        (conj(at("e_Var"), Not(at("e_Var", 0, -1)), _robot(0, 2)), "goNorth"),
        # carry, forward track
        (conj(at("e_Car"), _robot(0, -1)), "goEast"),
        (conj(at("e_Car"), at("e_Var", 0, -1), _robot(0, -2)), "goNorth"),
        (conj(at("e_Car"), Not(at("e_Var", 0, -1)), Not(_robot(0, -1)), at("e_Car", 1, 0)), "goEast"),
        # carry, return track and home
        (conj(at("e_CS"), at("e_CS", -1, 0)), "goWest"),
        (conj(at("e_CS"), Not(at("e_CS", -1, 0))), "goSouth"),
        (at("e_CD"), "goEast"),
        # evaluator
        (conj(*evaluate), "goWest"),
    ]
    ctrl = _single_state("counter", width, rules)
    start = tuple(Position(2 * i, 1) for i in range(1, n + 1)) + (Position(1, 3), Position(2, 5))
    team = Team((ctrl,) * len(start))
    task = TargetConfiguration(positions=((ANY, Position(1, 5)),))
    inst = TeamEnvVerInstance(env, team, start, 0, task)
    return _certify("3sat-tev", f, inst, {"variables": n}, variables=n, clauses=len(f.clauses))


# --- 3SAT -> team design -------------------------------------------------------


def reduce_3sat_to_teamdesls(f: CNF) -> Reduction:
    """One robot per variable climbs its own column of clause rows.

    Two variables are added: one forced True by the clause ``(u_T | u_T | u_T)``
    and one forced False by ``(~u_F | ~u_F | ~u_F)``, so any solution uses
    both library controllers.  The True controller steps north on clause rows
    where its variable occurs positively, the False controller where it
    occurs negatively, and either steps north whenever it senses a robot
    further north.  Row ``j`` can only be left once some robot satisfies
    clause ``j``, so all robots reach the top row iff the assignment read off
    the chosen controllers satisfies every clause.
    """
    n = f.num_vars + 2
    u_t, u_f = f.num_vars + 1, f.num_vars + 2
    clauses = list(f.clauses) + [(u_t, u_t, u_t), (-u_f, -u_f, -u_f)]
    rows = len(clauses)
    width, height = n + 2, rows + 1
    cells: dict = {}
    for row in range(1, height + 1):
        cells[(1, row)] = ("e_W", True)
        cells[(width, row)] = ("e_W", True)
    for j, c in enumerate(clauses, start=1):
        for v in range(1, n + 1):
            pos, neg = v in c, -v in c
            cells[(v + 1, j)] = "e_PM" if pos and neg else "e_P" if pos else "e_M" if neg else "e_0"
    for v in range(1, n + 1):
        cells[(v + 1, height)] = "e_B"
    env = build_environment(width, height, cells)

    radius = (n - 1) + rows
    # some robot anywhere further north on the clause rows
    ahead = disj(*(_robot(dx, dy) for dy in range(1, rows + 1) for dx in range(-(n - 1), n) if dx != 0))
    clause_row = disj(*(Pred(t, 0, 0) for t in ("e_P", "e_M", "e_PM", "e_0")))

    def make(name: str, own: str) -> Controller:
        rules = [(disj(Pred(own, 0, 0), Pred("e_PM", 0, 0)), "goNorth")]
        rules.append((conj(clause_row, ahead), "goNorth"))
        rules.append((Pred("e_B", 0, 0), "stay"))
        return _single_state(name, radius, rules)

    library = (make("T", "e_P"), make("F", "e_M"))
    region = tuple(Position(v + 1, 1) for v in range(1, n + 1))
    task = TargetConfiguration(positions=tuple((ANY, Position(v + 1, height)) for v in range(1, n + 1)))
    inst = TeamDesLSInstance(env, n, library, region, 2, 0, task, c1=1, c2=1)
    return _certify("3sat-tdls", f, inst, {"variables": f.num_vars}, variables=f.num_vars, clauses=len(f.clauses))


def assignment_from(red: Reduction, assignment: tuple[int, ...]) -> tuple[bool, ...]:
    """Truth values of the original variables from a TeamDesLS library choice."""
    n = red.layout["variables"]
    return tuple(a == 0 for a in assignment[:n])


# --- holding areas -------------------------------------------------------------


def _fresh(env: Environment, name: str) -> str:
    taken = env.types
    out, i = name, 1
    while out in taken:
        out, i = f"{name}{i}", i + 1
    return out


def _sensing_radius(inst: Instance) -> int:
    if isinstance(inst, TeamEnvVerInstance):
        ctrls = list(inst.team)
    elif isinstance(inst, TeamDesLSInstance):
        ctrls = list(inst.library)
    else:
        ctrls = []
    ctrls += [r.controller for r in getattr(inst, "residents", ())]
    radii = [c.radius for c in ctrls] + [getattr(inst, "radius", 0)]
    return max(radii)


def holding_controller(index: int, states: int) -> Controller:
    """A robot that never moves or writes and cycles through ``states`` states."""
    names = tuple(f"h{i}" for i in range(states))
    trs = tuple(
        instantiate_template(TransitionTemplate(STAR, STAR, "stay"), names[i], names[(i + 1) % states])
        for i in range(states)
    )
    return Controller(names, names[0], 0, trs, f"hold{index}")


def add_holding_area(inst: Instance, extra: int, states: int = 1) -> Instance:
    """Park ``extra`` idle robots, each with its own controller, in a walled
    strip east of the grid, farther away than any robot can sense.

    Verdicts are unchanged: the residents never move, never write and are
    never seen, while the new squares are obstacles or unreachable.
    """
    if extra < 0 or states < 1:
        raise ValueError("extra must be >= 0 and states >= 1")
    if extra == 0:
        return inst
    env = inst.env
    gap = _sensing_radius(inst) + 1
    wall, slot = _fresh(env, "e_HW"), _fresh(env, "e_Hold")
    x0 = env.width + gap  # west wall of the strip
    width = x0 + extra + 1
    height = max(env.height, 3)
    cells = {}
    for row in range(1, height + 1):
        for col in range(1, width + 1):
            if col <= env.width and row <= env.height:
                cells[(col, row)] = (env.squares[row - 1][col - 1], env.obstacles[row - 1][col - 1])
            elif x0 < col < width and row == 2:
                cells[(col, row)] = slot
            else:
                cells[(col, row)] = (wall, True)
    # keep legend-only types (modification targets absent from the grid)
    grown = with_types(build_environment(width, height, cells), (e.name for e in env.legend if not e.obstacle))
    residents = tuple(Resident(holding_controller(i, states), Position(x0 + 1 + i, 2)) for i in range(extra))
    if isinstance(inst, TeamEnvVerInstance):
        team = Team(tuple(inst.team) + tuple(r.controller for r in residents))
        return TeamEnvVerInstance(grown, team, inst.start + tuple(r.position for r in residents), inst.ec_budget, inst.task)
    fields = dict(inst.__dict__)
    fields.update(env=grown, residents=inst.residents + residents)
    return type(inst)(**fields)


def with_holding(red: Reduction, extra: int, states: int = 1) -> Reduction:
    """:func:`add_holding_area` applied to a reduction, re-certified."""
    if extra == 0:
        return red
    inst = add_holding_area(red.instance, extra, states)
    params = red.certificate.params + (("holding_extra", extra), ("holding_states", states))
    cert = ReductionCertificate(red.certificate.construction, red.certificate.source_digest, instance_digest(inst), params)
    return Reduction(inst, cert, red.source, red.layout)
