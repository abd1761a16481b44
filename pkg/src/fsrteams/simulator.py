"""Lock-step team execution.

Two routes share one contract: :func:`step` / :func:`simulate_reference` work
directly on :class:`Configuration` values and the percept API, while
:func:`run` drives a compiled engine over a padded integer grid.  Tests hold
the two to byte-identical traces.
"""
from __future__ import annotations

import enum
import hashlib
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Union

from .controller import (
    DELTAS,
    Controller,
    Mod,
    Star,
    enabled_transitions,
    percept_of,
    predicates,
    Pred,
    Not,
    And,
    Or,
)
from .gridworld import E_ROBOT, Environment, LegendError, Position, square_at

ANY = None  # robot selector matching any team member

_STEPS_CAP = 2**63 - 1


class Team(tuple):
    """Ordered robots; the same controller may appear several times."""

    def __new__(cls, robots: Iterable[Controller]):
        robots = tuple(robots)
        if not robots:
            raise ValueError("a team needs at least one robot")
        return super().__new__(cls, robots)

    @property
    def h(self) -> int:
        return len(set(self))

    @property
    def max_states(self) -> int:
        return max(len(c.states) for c in self)


@dataclass(frozen=True)
class Configuration:
    env: Environment
    positions: tuple[Position, ...]
    states: tuple[str, ...]
    t: int = 0
    ec: int = 0

    def key(self):
        """Identity for cycle detection: timestep and change count excluded."""
        return (self.env.squares, self.positions, self.states)


def initial_configuration(env: Environment, team: Sequence[Controller], positions: Sequence[Position]) -> Configuration:
    positions = tuple(positions)
    if len(positions) != len(team):
        raise ValueError(f"{len(team)} robots but {len(positions)} positions")
    if len(set(positions)) != len(positions):
        raise ValueError("two robots share a starting square")
    for p in positions:
        if not env.in_bounds(p.col, p.row) or env.is_obstacle(p):
            raise ValueError(f"start {p} is not a freespace square")
    return Configuration(env, positions, tuple(c.initial for c in team))


@dataclass(frozen=True)
class TargetConfiguration:
    squares: tuple[tuple[Position, str], ...] = ()
    positions: tuple[tuple[Optional[int], Position], ...] = ()
    states: tuple[tuple[Optional[int], str], ...] = ()

    def render(self) -> str:
        sel = lambda s: "any" if s is ANY else str(s)
        out = [f"square {p.col} {p.row} {t}" for p, t in self.squares]
        out += [f"position {sel(s)} {p.col} {p.row}" for s, p in self.positions]
        out += [f"state {sel(s)} {q}" for s, q in self.states]
        return "".join(l + "\n" for l in out)


def parse_target(text: str) -> TargetConfiguration:
    squares, positions, states = [], [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            kind = parts[0]
            if kind == "square" and len(parts) == 4:
                squares.append((Position(int(parts[1]), int(parts[2])), parts[3]))
            elif kind == "position" and len(parts) == 4:
                positions.append((_selector(parts[1]), Position(int(parts[2]), int(parts[3]))))
            elif kind == "state" and len(parts) == 3:
                states.append((_selector(parts[1]), parts[2]))
            else:
                raise ValueError(f"unknown requirement {raw.strip()!r}")
        except ValueError as exc:
            raise ValueError(f"line {n}: {exc}") from None
    return TargetConfiguration(tuple(squares), tuple(positions), tuple(states))


def _selector(s: str) -> Optional[int]:
    if s == "any":
        return ANY
    v = int(s)
    if v < 0:
        raise ValueError("robot index must be >= 0")
    return v


def _bipartite_match(options: list[list[int]]) -> bool:
    """True if every requirement gets its own robot (augmenting paths)."""
    owner: dict[int, int] = {}

    def assign(req, seen):
        for robot in options[req]:
            if robot in seen:
                continue
            seen.add(robot)
            if robot not in owner or assign(owner[robot], seen):
                owner[robot] = req
                return True
        return False

    return all(assign(req, set()) for req in range(len(options)))


def check_target(c: Configuration, tgt: TargetConfiguration) -> bool:
    for p, t in tgt.squares:
        if not c.env.in_bounds(p.col, p.row) or square_at(c.env, p) != t:
            return False
    n = len(c.positions)
    loose: list[list[int]] = []
    for sel, p in tgt.positions:
        if sel is ANY:
            loose.append([i for i in range(n) if c.positions[i] == p])
        elif sel >= n or c.positions[sel] != p:
            return False
    for sel, q in tgt.states:
        if sel is ANY:
            loose.append([i for i in range(n) if c.states[i] == q])
        elif sel >= n or c.states[sel] != q:
            return False
    return _bipartite_match(loose) if loose else True


# --- outcomes ---------------------------------------------------------------

class FailureKind(str, enum.Enum):
    DETERMINISM = "DeterminismViolation"
    COLLISION = "Collision"
    OBSTACLE = "ObstacleEntry"
    MODIFICATION = "ModificationConflict"
    EC_BUDGET = "EcBudgetExceeded"


@dataclass(frozen=True)
class FailureReason:
    kind: FailureKind
    timestep: int
    robot: Optional[int] = None
    square: Optional[tuple[int, int]] = None

    def __str__(self):
        extra = ""
        if self.robot is not None:
            extra += f" robot={self.robot}"
        if self.square is not None:
            extra += f" square=({self.square[0]},{self.square[1]})"
        return f"{self.kind.value}(t={self.timestep}{extra})"


class Status(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    BUDGET = "budget"
    CYCLE = "cycle"


@dataclass(frozen=True)
class TraceRecord:
    t: int
    positions: tuple[tuple[int, int], ...]
    states: tuple[str, ...]
    mods: tuple[tuple[tuple[int, int], str], ...]
    ec: int

    def render(self) -> str:
        pos = " ".join(f"{i}:({c},{r})" for i, (c, r) in enumerate(self.positions))
        st = " ".join(f"{i}:{q}" for i, q in enumerate(self.states))
        mods = " ".join(f"({c},{r}):{t}" for (c, r), t in self.mods)
        return f"t={self.t} pos={pos} state={st} mods={mods} ec={self.ec}"


class Trace(Sequence):
    """Per-step records; the engine stores raw tuples and decodes on access."""

    def __init__(self, raw: list | None = None, decode: Callable[[tuple], TraceRecord] | None = None):
        self._raw = raw if raw is not None else []
        self._decode = decode or (lambda r: r)

    def __len__(self):
        return len(self._raw)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self._decode(r) for r in self._raw[i]]
        return self._decode(self._raw[i])

    def render(self) -> str:
        return "".join(self._decode(r).render() + "\n" for r in self._raw)

    def digest(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()


@dataclass
class RunResult:
    status: Status
    timestep: int
    trace: Trace
    failure: Optional[FailureReason] = None
    final: Optional[Configuration] = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.status is Status.SUCCESS

    def describe(self) -> str:
        if self.status is Status.SUCCESS:
            return f"yes t={self.timestep}"
        if self.status is Status.FAILURE:
            return f"no reason={self.failure}"
        if self.status is Status.CYCLE:
            return f"no reason=CycleDetected(t={self.timestep})"
        return f"no reason=StepBudgetExhausted(t={self.timestep})"


def steps_bound(c1: int, c2: int, env_size: int, max_q: int) -> int:
    if c1 < 1 or c2 < 1:
        raise ValueError("completability constants must be >= 1")
    value = c1 * (env_size + max_q) ** c2
    if value > _STEPS_CAP:
        raise OverflowError(f"step bound {c1}*({env_size}+{max_q})^{c2} exceeds 2^63-1")
    return value


def check_team_types(env: Environment, team: Iterable[Controller]):
    """Every written type must be writable into freespace."""
    writable = {e.name for e in env.legend if not e.obstacle}
    for c in set(team):
        for tr in c.transitions:
            if isinstance(tr.mod, Mod) and tr.mod.type not in writable:
                raise LegendError(f"controller {c.name or '?'} writes unknown type {tr.mod.type!r}")


# --- reference route --------------------------------------------------------

def _choose(c: Controller, q: str, percept) -> tuple[bool, object]:
    enabled = enabled_transitions(c, q, percept)
    if not enabled:
        return True, None
    first = enabled[0]
    if any(t.action != first.action for t in enabled[1:]):
        return False, None
    return True, first


def step(c: Configuration, team: Sequence[Controller]) -> Union[Configuration, FailureReason]:
    """One synchronous step, or the reason the team fails during it."""
    env, t = c.env, c.t + 1
    chosen = []
    for i, (ctrl, p, q) in enumerate(zip(team, c.positions, c.states)):
        ok, tr = _choose(ctrl, q, percept_of(env, c.positions, p, ctrl.radius))
        if not ok:
            return FailureReason(FailureKind.DETERMINISM, t, robot=i)
        chosen.append(tr)
    targets = []
    for i, (p, tr) in enumerate(zip(c.positions, chosen)):
        dx, dy = DELTAS[tr.dir] if tr else (0, 0)
        dest = (p.col + dx, p.row + dy)
        if env.blocked(*dest):
            return FailureReason(FailureKind.OBSTACLE, t, robot=i, square=dest)
        targets.append(dest)
    seen = set()
    for dest in targets:
        if dest in seen:
            return FailureReason(FailureKind.COLLISION, t, square=dest)
        seen.add(dest)
    writes: dict[tuple[int, int], str] = {}
    order = []
    for i, (p, tr) in enumerate(zip(c.positions, chosen)):
        if tr is None or isinstance(tr.mod, Star):
            continue
        sq = (p.col + tr.mod.dx, p.row + tr.mod.dy)
        # a robot moving onto the square conflicts; one merely standing there does not
        movers = (d for j, d in enumerate(targets) if j != i and d != (c.positions[j].col, c.positions[j].row))
        if env.blocked(*sq) or sq in writes or sq in movers:
            return FailureReason(FailureKind.MODIFICATION, t, robot=i, square=sq)
        writes[sq] = tr.mod.type
        order.append(sq)
    squares = env.squares
    if writes:
        rows = [list(r) for r in squares]
        for (col, row), typ in writes.items():
            rows[row - 1][col - 1] = typ
        squares = tuple(tuple(r) for r in rows)
        env = Environment(env.width, env.height, squares, env.obstacles, env.legend)
    return Configuration(
        env,
        tuple(Position(*d) for d in targets),
        tuple(tr.target if tr else q for tr, q in zip(chosen, c.states)),
        t,
        c.ec + len(writes),
    )


def _record(c: Configuration, mods) -> TraceRecord:
    return TraceRecord(c.t, tuple((p.col, p.row) for p in c.positions), c.states, mods, c.ec)


def simulate_reference(
    c0: Configuration,
    team: Sequence[Controller],
    tgt: TargetConfiguration,
    step_budget: int,
    ec_budget: int,
    detect_cycles: bool = True,
) -> RunResult:
    """Plain loop over :func:`step`; the independent twin of :func:`run`."""
    check_team_types(c0.env, team)
    trace = Trace()
    if check_target(c0, tgt):
        return RunResult(Status.SUCCESS, c0.t, trace, final=c0)
    seen = {c0.key()} if detect_cycles else None
    c = c0
    for _ in range(step_budget):
        nxt = step(c, team)
        if isinstance(nxt, FailureReason):
            return RunResult(Status.FAILURE, c.t, trace, nxt, final=c)
        mods = tuple(
            ((p.col, p.row), nxt.env.squares[p.row - 1][p.col - 1])
            for p in _written(c, nxt, team)
        )
        c = nxt
        trace._raw.append(_record(c, mods))
        if c.ec > ec_budget:
            return RunResult(Status.FAILURE, c.t, trace, FailureReason(FailureKind.EC_BUDGET, c.t), final=c)
        if check_target(c, tgt):
            return RunResult(Status.SUCCESS, c.t, trace, final=c)
        if seen is not None:
            k = c.key()
            if k in seen:
                return RunResult(Status.CYCLE, c.t, trace, final=c)
            seen.add(k)
    return RunResult(Status.BUDGET, c.t, trace, final=c)


def _written(before: Configuration, after: Configuration, team) -> list[Position]:
    # replay the choice to list modified squares in robot order
    out = []
    for ctrl, p, q in zip(team, before.positions, before.states):
        ok, tr = _choose(ctrl, q, percept_of(before.env, before.positions, p, ctrl.radius))
        if tr is not None and not isinstance(tr.mod, Star):
            out.append(Position(p.col + tr.mod.dx, p.row + tr.mod.dy))
    return out


# --- compiled route ---------------------------------------------------------

class _Engine:
    """Padded flat-grid simulator. Off-grid squares are blocked, typeless cells."""

    def __init__(self, c0: Configuration, team: Sequence[Controller]):
        env = c0.env
        self.env0 = env
        self.team = tuple(team)
        pad = max([1] + [c.radius for c in self.team])
        self.pad = pad
        self.wp = wp = env.width + 2 * pad
        hp = env.height + 2 * pad
        names = sorted({e.name for e in env.legend})
        self.code = {n: k for k, n in enumerate(names)}
        self.names = names
        cells = [-1] * (wp * hp)
        blocked = bytearray(b"\x01" * (wp * hp))
        for row in range(env.height):
            for col in range(env.width):
                i = self.index(col + 1, row + 1)
                cells[i] = self.code[env.squares[row][col]]
                blocked[i] = 1 if env.obstacles[row][col] else 0
        self.cells = cells
        self.blocked = bytes(blocked)
        self.occ = bytearray(wp * hp)
        self.ctrl_ids = []
        self.tables = []
        self.state_names = []
        compiled: dict[Controller, int] = {}
        for ctrl in self.team:
            if ctrl not in compiled:
                compiled[ctrl] = len(self.tables)
                self.tables.append(self._compile(ctrl))
                self.state_names.append(ctrl.states)
            self.ctrl_ids.append(compiled[ctrl])
        self.pos = [self.index(p.col, p.row) for p in c0.positions]
        self.st = [team[k].states.index(q) for k, q in enumerate(c0.states)]
        for i in self.pos:
            self.occ[i] = 1
        self.t = c0.t
        self.ec = c0.ec

    def index(self, col: int, row: int) -> int:
        return (row - 1 + self.pad) * self.wp + (col - 1 + self.pad)

    def coords(self, i: int) -> tuple[int, int]:
        return (i % self.wp - self.pad + 1, i // self.wp - self.pad + 1)

    def _expr(self, f) -> str:
        if isinstance(f, Pred):
            d = f.dy * self.wp + f.dx
            at = f"i+{d}" if d >= 0 else f"i{d}"
            if f.type == E_ROBOT:
                return f"O[{at}]"
            code = self.code.get(f.type)
            if code is None:
                return "False"
            if d == 0 and f.dx == 0:
                return f"(C[i]=={code})"
            return f"(C[{at}]=={code} and not O[{at}])"
        if isinstance(f, Not):
            return f"(not {self._expr(f.arg)})"
        if isinstance(f, And):
            return f"({self._expr(f.left)} and {self._expr(f.right)})"
        if isinstance(f, Or):
            return f"({self._expr(f.left)} or {self._expr(f.right)})"
        raise TypeError(f"not a formula: {f!r}")

    def _compile(self, ctrl: Controller):
        index = {q: k for k, q in enumerate(ctrl.states)}
        table = [([], []) for _ in ctrl.states]
        for tr in ctrl.transitions:
            dx, dy = DELTAS[tr.dir]
            if isinstance(tr.mod, Mod):
                mod = (self.code[tr.mod.type], tr.mod.dy * self.wp + tr.mod.dx)
            else:
                mod = None
            act = (mod, dy * self.wp + dx, index[tr.target])
            nonstar, star = table[index[tr.source]]
            if isinstance(tr.trigger, Star):
                star.append(act)
            else:
                fn = eval(f"lambda i, C, O: {self._expr(tr.trigger)}")  # noqa: S307 - generated from the AST
                nonstar.append((fn, act))
        return [(tuple(a), tuple(b)) for a, b in table]

    def step(self):
        """Advance one step; returns (mods, None) or (None, FailureReason)."""
        C, O, B = self.cells, self.occ, self.blocked
        pos, st, tables, ids = self.pos, self.st, self.tables, self.ctrl_ids
        t = self.t + 1
        n = len(pos)
        acts = [None] * n
        for k in range(n):
            i = pos[k]
            nonstar, star = tables[ids[k]][st[k]]
            chosen = None
            for fn, act in nonstar:
                if fn(i, C, O):
                    if chosen is None:
                        chosen = act
                    elif act != chosen:
                        return None, FailureReason(FailureKind.DETERMINISM, t, robot=k)
            if chosen is None:
                for act in star:
                    if chosen is None:
                        chosen = act
                    elif act != chosen:
                        return None, FailureReason(FailureKind.DETERMINISM, t, robot=k)
            acts[k] = chosen
        dest = pos[:]
        for k in range(n):
            a = acts[k]
            if a is not None and a[1]:
                d = pos[k] + a[1]
                if B[d]:
                    return None, FailureReason(FailureKind.OBSTACLE, t, robot=k, square=self.coords(d))
                dest[k] = d
        if n > 1 and len(set(dest)) < n:
            seen = set()
            for d in dest:
                if d in seen:
                    return None, FailureReason(FailureKind.COLLISION, t, square=self.coords(d))
                seen.add(d)
        mods = []
        for k in range(n):
            a = acts[k]
            if a is None or a[0] is None:
                continue
            sq = pos[k] + a[0][1]
            if B[sq] or any(m == sq for m, _ in mods) or any(dest[j] == sq != pos[j] for j in range(n) if j != k):
                return None, FailureReason(FailureKind.MODIFICATION, t, robot=k, square=self.coords(sq))
            mods.append((sq, a[0][0]))
        for sq, code in mods:
            C[sq] = code
        for i in pos:
            O[i] = 0
        for k in range(n):
            O[dest[k]] = 1
            a = acts[k]
            if a is not None:
                st[k] = a[2]
        self.pos = dest
        self.t = t
        self.ec += len(mods)
        return mods, None

    def decode(self, raw) -> TraceRecord:
        t, pos, st, mods, ec = raw
        return TraceRecord(
            t,
            tuple(self.coords(i) for i in pos),
            tuple(self.state_names[self.ctrl_ids[k]][s] for k, s in enumerate(st)),
            tuple((self.coords(sq), self.names[code]) for sq, code in mods),
            ec,
        )

    def configuration(self) -> Configuration:
        env = self.env0
        rows = [list(r) for r in env.squares]
        for row in range(env.height):
            for col in range(env.width):
                rows[row][col] = self.names[self.cells[self.index(col + 1, row + 1)]]
        env = replace(env, squares=tuple(tuple(r) for r in rows))
        return Configuration(
            env,
            tuple(Position(*self.coords(i)) for i in self.pos),
            tuple(self.state_names[self.ctrl_ids[k]][s] for k, s in enumerate(self.st)),
            self.t,
            self.ec,
        )

    def target_checker(self, tgt: TargetConfiguration) -> Callable[[], bool]:
        env = self.env0
        squares = []
        for p, typ in tgt.squares:
            if not env.in_bounds(p.col, p.row) or typ not in self.code:
                return lambda: False
            squares.append((self.index(p.col, p.row), self.code[typ]))
        n = len(self.pos)
        fixed_pos, loose_pos = [], []
        for sel, p in tgt.positions:
            if not env.in_bounds(p.col, p.row):
                return lambda: False
            if sel is ANY:
                loose_pos.append(self.index(p.col, p.row))
            elif sel >= n:
                return lambda: False
            else:
                fixed_pos.append((sel, self.index(p.col, p.row)))
        fixed_st, loose_st = [], []
        for sel, q in tgt.states:
            if sel is ANY:
                loose_st.append(q)
            elif sel >= n:
                return lambda: False
            else:
                names = self.state_names[self.ctrl_ids[sel]]
                if q not in names:
                    return lambda: False
                fixed_st.append((sel, names.index(q)))
        C, O = self.cells, self.occ
        need_match = bool(loose_st) or len(set(loose_pos)) != len(loose_pos)

        def check() -> bool:
            for i, code in squares:
                if C[i] != code:
                    return False
            pos, st = self.pos, self.st
            for k, i in fixed_pos:
                if pos[k] != i:
                    return False
            for k, s in fixed_st:
                if st[k] != s:
                    return False
            if not need_match:
                return all(O[i] for i in loose_pos)
            options = [[k for k in range(n) if pos[k] == i] for i in loose_pos]
            options += [
                [k for k in range(n) if self.state_names[self.ctrl_ids[k]][st[k]] == q] for q in loose_st
            ]
            return _bipartite_match(options)

        return check

    def key(self, env_id: int):
        return (tuple(self.pos), tuple(self.st), env_id)


def run(
    c0: Configuration,
    team: Sequence[Controller],
    tgt: TargetConfiguration,
    step_budget: int,
    ec_budget: int,
    detect_cycles: bool = True,
) -> RunResult:
    if step_budget < 0 or ec_budget < 0:
        raise ValueError("budgets must be non-negative")
    check_team_types(c0.env, team)
    eng = _Engine(c0, team)
    raw: list = []
    trace = Trace(raw, eng.decode)
    done = eng.target_checker(tgt)

    def result(status, failure=None):
        return RunResult(status, eng.t, trace, failure, final=eng.configuration())

    if done():
        return result(Status.SUCCESS)
    envs = {tuple(eng.cells): 0} if detect_cycles else None
    env_id = 0
    seen = {eng.key(0)} if detect_cycles else None
    for _ in range(step_budget):
        mods, failure = eng.step()
        if failure is not None:
            return result(Status.FAILURE, failure)
        raw.append((eng.t, tuple(eng.pos), tuple(eng.st), tuple(mods), eng.ec))
        if eng.ec > ec_budget:
            return result(Status.FAILURE, FailureReason(FailureKind.EC_BUDGET, eng.t))
        if done():
            return result(Status.SUCCESS)
        if seen is not None:
            if mods:
                env_id = envs.setdefault(tuple(eng.cells), len(envs))
            k = eng.key(env_id)
            if k in seen:
                return result(Status.CYCLE)
            seen.add(k)
    return result(Status.BUDGET)
