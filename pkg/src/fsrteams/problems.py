"""Verification and library-selection design problems.

``design_team_homogeneous`` is the polynomial h = 1 algorithm: one simulation
per library controller.  ``design_team_ls`` and ``design_controllers_ls`` are
exhaustive searches meant for desk-scale instances.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .controller import Controller, Star, Transition, TransitionTemplate, formula_radius
from .gridworld import Environment, Position
from .simulator import (
    Configuration,
    FailureReason,
    RunResult,
    TargetConfiguration,
    Team,
    check_target,
    initial_configuration,
    run,
    step,
    steps_bound,
)

DEFAULT_C1 = 10
DEFAULT_C2 = 3


class SearchCapExceeded(RuntimeError):
    """The candidate space is larger than the caller allowed."""


@dataclass(frozen=True)
class Resident:
    """A fixed robot that is part of every candidate team (holding areas)."""

    controller: Controller
    position: Position


@dataclass(frozen=True)
class TeamEnvVerInstance:
    env: Environment
    team: Team
    start: tuple[Position, ...]
    ec_budget: int
    task: TargetConfiguration

    def __post_init__(self):
        if len(self.start) != len(self.team):
            raise ValueError("start positioning does not match team size")


@dataclass(frozen=True)
class TeamDesLSInstance:
    env: Environment
    team_size: int
    library: tuple[Controller, ...]
    region: tuple[Position, ...]
    h: int
    ec_budget: int
    task: TargetConfiguration
    c1: int = 1
    c2: int = 1
    exact_h: bool = False
    residents: tuple[Resident, ...] = ()

    def __post_init__(self):
        if len(self.region) != self.team_size:
            raise ValueError(f"initial region has {len(self.region)} squares for {self.team_size} robots")
        if self.h < 1:
            raise ValueError("h must be >= 1")


@dataclass(frozen=True)
class ContDesLSInstance:
    env: Environment
    team_size: int
    start: tuple[Position, ...]
    library: tuple[TransitionTemplate, ...]
    radius: int
    max_states: int
    max_out_degree: int
    h: int
    ec_budget: int
    task: TargetConfiguration
    c1: int = 1
    c2: int = 1
    exact_h: bool = False
    residents: tuple[Resident, ...] = ()

    def __post_init__(self):
        if min(self.max_states, self.max_out_degree, self.h) < 1:
            raise ValueError("|Q|, d and h must all be >= 1")
        if len(self.start) != self.team_size:
            raise ValueError("start positioning does not match team size")


@dataclass
class Verdict:
    yes: bool
    result: RunResult
    step_budget: int

    def __bool__(self):
        return self.yes


@dataclass
class Found:
    team: Team
    positions: tuple[Position, ...]
    controllers: tuple[Controller, ...]
    assignment: tuple[int, ...]
    result: RunResult
    candidates: list = field(default_factory=list, repr=False)

    def __bool__(self):
        return True


@dataclass
class Bot:
    """No solution: the problem's bottom symbol."""

    candidates: list = field(default_factory=list, repr=False)

    def __bool__(self):
        return False

    def __str__(self):
        return "bot"


def verify_team_env(inst: TeamEnvVerInstance, step_budget: Optional[int] = None, detect_cycles: bool = True) -> Verdict:
    if step_budget is None:
        step_budget = steps_bound(DEFAULT_C1, DEFAULT_C2, inst.env.size, inst.team.max_states)
    c0 = initial_configuration(inst.env, inst.team, inst.start)
    res = run(c0, inst.team, inst.task, step_budget, inst.ec_budget, detect_cycles)
    return Verdict(res.success, res, step_budget)


def canonical_placement(region: Sequence[Position]) -> tuple[Position, ...]:
    """Region squares south to north, west to east within a row."""
    return tuple(sorted(region, key=lambda p: (p.row, p.col)))


def _confirm(c0: Configuration, team, tgt, budget, ec, res: RunResult) -> RunResult:
    again = run(c0, team, tgt, budget, ec, detect_cycles=False)
    if not again.success or again.trace.digest() != res.trace.digest():
        raise RuntimeError("witness failed re-verification")
    return again


def design_team_homogeneous(inst: TeamDesLSInstance) -> Found | Bot:
    if inst.h != 1:
        raise ValueError("the homogeneous algorithm needs h = 1")
    placement = canonical_placement(inst.region) + tuple(r.position for r in inst.residents)
    residents = tuple(r.controller for r in inst.residents)
    candidates = []
    for idx, c in enumerate(inst.library):
        team = Team((c,) * inst.team_size + residents)
        budget = steps_bound(inst.c1, inst.c2, inst.env.size, team.max_states)
        c0 = initial_configuration(inst.env, team, placement)
        res = run(c0, team, inst.task, budget, inst.ec_budget)
        candidates.append((idx, budget, res.timestep))
        if res.success:
            _confirm(c0, team, inst.task, budget, inst.ec_budget, res)
            return Found(team, placement, (c,), (idx,) * inst.team_size, res, candidates)
    return Bot(candidates)


def design_team_ls(inst: TeamDesLSInstance, cap: int = 1_000_000, all_placements: bool = False) -> Found | Bot:
    lib = inst.library
    slots = inst.team_size
    space = len(lib) ** slots
    orders = list(itertools.permutations(canonical_placement(inst.region))) if all_placements else [canonical_placement(inst.region)]
    if space * len(orders) > cap:
        raise SearchCapExceeded(f"{space * len(orders)} candidates exceed cap {cap}")
    extra_pos = tuple(r.position for r in inst.residents)
    residents = tuple(r.controller for r in inst.residents)
    candidates = []
    for assignment in itertools.product(range(len(lib)), repeat=slots):
        kinds = len(set(assignment))
        if kinds > inst.h or (inst.exact_h and kinds != inst.h):
            continue
        team = Team(tuple(lib[a] for a in assignment) + residents)
        budget = steps_bound(inst.c1, inst.c2, inst.env.size, team.max_states)
        for order in orders:
            placement = tuple(order) + extra_pos
            c0 = initial_configuration(inst.env, team, placement)
            res = run(c0, team, inst.task, budget, inst.ec_budget)
            candidates.append((assignment, budget, res.timestep))
            if res.success:
                _confirm(c0, team, inst.task, budget, inst.ec_budget, res)
                chosen = tuple(dict.fromkeys(lib[a] for a in assignment))
                return Found(team, placement, chosen, assignment, res, candidates)
    return Bot(candidates)


# --- controller design by lazy template selection ----------------------------

_EXCLUDED = -1


def restricted_growth(length: int, kinds: int) -> Iterator[tuple[int, ...]]:
    """Slot-to-controller maps using exactly ``kinds`` labels, first uses in order."""

    def rec(prefix, top):
        if len(prefix) == length:
            if top == kinds:
                yield tuple(prefix)
            return
        if kinds - top > length - len(prefix):
            return
        for v in range(min(top + 1, kinds)):
            yield from rec(prefix + [v], max(top, v + 1))

    yield from rec([], 0)


class _NeedDecision(Exception):
    def __init__(self, key):
        self.key = key


class _LazySearch:
    """Depth-first search over per-(controller, state, template) choices.

    A choice is only made when a robot's percept actually consults it, so
    transitions that never fire are never enumerated.  At most one target
    per template and state is considered: two copies with different targets
    are co-enabled whenever either fires, which is a determinism failure.
    """

    def __init__(self, inst: ContDesLSInstance, cap: int):
        self.inst = inst
        self.cap = cap
        self.nodes = 0
        self.lib = inst.library
        usable = [j for j, t in enumerate(self.lib) if formula_radius(t.trigger) <= inst.radius]
        self.nonstar = [j for j in usable if not isinstance(self.lib[j].trigger, Star)]
        self.star = [j for j in usable if isinstance(self.lib[j].trigger, Star)]
        self.budget = steps_bound(inst.c1, inst.c2, inst.env.size, inst.max_states)
        self.res_ctrl = tuple(r.controller for r in inst.residents)
        self.res_pos = tuple(r.position for r in inst.residents)

    def build(self, decisions: dict, used: list[int]) -> tuple[Controller, ...]:
        out = []
        for k, n in enumerate(used):
            trs = sorted(
                (q, j, tgt) for (c, q, j), tgt in decisions.items() if c == k and tgt != _EXCLUDED
            )
            transitions = tuple(
                Transition(f"s{q}", self.lib[j].trigger, self.lib[j].mod, self.lib[j].dir, f"s{tgt}")
                for q, j, tgt in trs
            )
            out.append(Controller(tuple(f"s{i}" for i in range(n)), "s0", self.inst.radius, transitions, f"c{k}"))
        return tuple(out)

    def _consult(self, decisions, slots, c: Configuration):
        from .controller import eval_trigger, percept_of

        for k, kind in enumerate(slots):
            q = int(c.states[k][1:])
            percept = percept_of(c.env, c.positions, c.positions[k], self.inst.radius)
            fired = False
            for j in self.nonstar:
                if eval_trigger(self.lib[j].trigger, percept):
                    d = decisions.get((kind, q, j))
                    if d is None:
                        raise _NeedDecision((kind, q, j))
                    fired = fired or d != _EXCLUDED
            if not fired:
                for j in self.star:
                    if (kind, q, j) not in decisions:
                        raise _NeedDecision((kind, q, j))

    def simulate(self, decisions, used, slots):
        """Returns a RunResult-like status string, or raises _NeedDecision."""
        inst = self.inst
        ctrls = self.build(decisions, used)
        team = Team(tuple(ctrls[s] for s in slots) + self.res_ctrl)
        c = initial_configuration(inst.env, team, inst.start + self.res_pos)
        if check_target(c, inst.task):
            return "success", team, c
        seen = {c.key()}
        for _ in range(self.budget):
            self._consult(decisions, slots, c)
            nxt = step(c, team)
            if isinstance(nxt, FailureReason) or nxt.ec > inst.ec_budget:
                return "failure", team, c
            c = nxt
            if check_target(c, inst.task):
                return "success", team, c
            if c.key() in seen:
                return "cycle", team, c
            seen.add(c.key())
        return "budget", team, c

    def explore(self, decisions: dict, used: list[int], slots) -> Optional[tuple]:
        self.nodes += 1
        if self.nodes > self.cap:
            raise SearchCapExceeded(f"controller search visited more than {self.cap} nodes")
        try:
            status, team, _ = self.simulate(decisions, used, slots)
        except _NeedDecision as need:
            kind, q, j = need.key
            n = used[kind]
            options = list(range(n))
            if n < self.inst.max_states:
                options.append(n)
            options.append(_EXCLUDED)
            degree = sum(1 for (c, s, _), t in decisions.items() if c == kind and s == q and t != _EXCLUDED)
            for opt in options:
                if opt != _EXCLUDED and degree >= self.inst.max_out_degree:
                    continue
                grown = list(used)
                if opt != _EXCLUDED:
                    grown[kind] = max(n, opt + 1)
                hit = self.explore({**decisions, need.key: opt}, grown, slots)
                if hit:
                    return hit
            return None
        if status == "success":
            return decisions, used
        return None


def design_controllers_ls(inst: ContDesLSInstance, cap: int = 200_000) -> Found | Bot:
    search = _LazySearch(inst, cap)
    kinds_range = [inst.h] if inst.exact_h else range(1, inst.h + 1)
    for kinds in kinds_range:
        for slots in restricted_growth(inst.team_size, kinds):
            hit = search.explore({}, [1] * kinds, slots)
            if hit is None:
                continue
            decisions, used = hit
            ctrls = search.build(decisions, used)
            team = Team(tuple(ctrls[s] for s in slots) + search.res_ctrl)
            positions = inst.start + search.res_pos
            c0 = initial_configuration(inst.env, team, positions)
            res = run(c0, team, inst.task, search.budget, inst.ec_budget)
            if not res.success:
                raise RuntimeError("lazy search witness failed re-verification")
            _confirm(c0, team, inst.task, search.budget, inst.ec_budget, res)
            return Found(team, positions, ctrls, slots, res, [(slots, search.budget, res.timestep)])
    return Bot([("nodes", search.nodes)])
