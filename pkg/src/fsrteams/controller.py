"""Finite-state robot controllers and their text DSL.

A controller file looks like::

    name walker
    radius 1
    initial s0
    states s0 s1
    s0: enval(grass,0,0) & !enval(e_robot,1,0) / enmod(gravel,0,0) / goEast -> s1
    s1: * / * / stay -> s0

``name``, ``radius``, ``initial`` and ``states`` are optional; without them the
name is empty, the radius is 0, states are collected in order of appearance
and the first one is initial.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .gridworld import E_ROBOT, Environment, Position

DIRECTIONS = ("goNorth", "goSouth", "goEast", "goWest", "stay")
DELTAS = {"goNorth": (0, 1), "goSouth": (0, -1), "goEast": (1, 0), "goWest": (-1, 0), "stay": (0, 0)}

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ControllerError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# --- trigger formulas -------------------------------------------------------

@dataclass(frozen=True)
class Star:
    def __str__(self):
        return "*"


STAR = Star()


@dataclass(frozen=True)
class Pred:
    type: str
    dx: int = 0
    dy: int = 0

    def __str__(self):
        return f"enval({self.type},{self.dx},{self.dy})"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self):
        return "!" + _render_operand(self.arg)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        left = f"({self.left})" if isinstance(self.left, Or) else str(self.left)
        return f"{left} & {_render_operand(self.right)}"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        # & binds tighter and both operators nest to the left
        right = f"({self.right})" if isinstance(self.right, Or) else str(self.right)
        return f"{self.left} | {right}"


Formula = Union[Pred, Not, And, Or]
Trigger = Union[Star, Formula]


def _render_operand(f) -> str:
    return f"({f})" if isinstance(f, (And, Or)) else str(f)


def conj(*fs: Formula) -> Formula:
    """Left-nested conjunction of one or more formulas."""
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def predicates(f: Trigger) -> Iterator[Pred]:
    if isinstance(f, Pred):
        yield f
    elif isinstance(f, Not):
        yield from predicates(f.arg)
    elif isinstance(f, (And, Or)):
        yield from predicates(f.left)
        yield from predicates(f.right)


def formula_radius(f: Trigger) -> int:
    return max((abs(p.dx) + abs(p.dy) for p in predicates(f)), default=0)


# --- modifications and transitions ------------------------------------------

@dataclass(frozen=True)
class Mod:
    type: str
    dx: int = 0
    dy: int = 0

    def __post_init__(self):
        if abs(self.dx) + abs(self.dy) > 1:
            raise ControllerError(f"modification offset ({self.dx},{self.dy}) beyond distance 1")
        if self.type == E_ROBOT:
            raise ControllerError(f"cannot write {E_ROBOT} into the environment")

    def __str__(self):
        return f"enmod({self.type},{self.dx},{self.dy})"


Modification = Union[Star, Mod]


@dataclass(frozen=True)
class TransitionTemplate:
    trigger: Trigger
    mod: Modification
    dir: str

    def __post_init__(self):
        if self.dir not in DIRECTIONS:
            raise ControllerError(f"unknown direction {self.dir!r}")

    def __str__(self):
        return f"{self.trigger} / {self.mod} / {self.dir}"


@dataclass(frozen=True)
class Transition:
    source: str
    trigger: Trigger
    mod: Modification
    dir: str
    target: str

    def __post_init__(self):
        if self.dir not in DIRECTIONS:
            raise ControllerError(f"unknown direction {self.dir!r}")

    @property
    def action(self) -> tuple:
        """What co-enabled transitions must agree on."""
        return (self.mod, self.dir, self.target)

    def __str__(self):
        return f"{self.source}: {self.trigger} / {self.mod} / {self.dir} -> {self.target}"


def instantiate_template(t: TransitionTemplate, q: str, q2: str) -> Transition:
    return Transition(q, t.trigger, t.mod, t.dir, q2)


@dataclass(frozen=True)
class Controller:
    states: tuple[str, ...]
    initial: str
    radius: int = 0
    transitions: tuple[Transition, ...] = ()
    name: str = ""

    def __post_init__(self):
        if not self.states:
            raise ControllerError("a controller needs at least one state")
        if len(set(self.states)) != len(self.states):
            raise ControllerError("duplicate state ids")
        if self.initial not in self.states:
            raise ControllerError(f"initial state {self.initial!r} not declared")
        if self.radius < 0:
            raise ControllerError("radius must be non-negative")
        known = set(self.states)
        for tr in self.transitions:
            for s in (tr.source, tr.target):
                if s not in known:
                    raise ControllerError(f"unknown state id {s!r}")
            if formula_radius(tr.trigger) > self.radius:
                raise ControllerError(f"trigger of {tr} senses beyond radius {self.radius}")

    def outgoing(self, q: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == q]

    def __str__(self):
        return render_controller(self)


# --- percepts and evaluation ------------------------------------------------

@dataclass(frozen=True)
class Cell:
    type: str
    obstacle: bool
    robot: bool


Percept = Mapping[tuple[int, int], Cell]


def percept_of(env: Environment, robot_positions: Iterable[Position], at: Position, r: int) -> dict[tuple[int, int], Cell]:
    occupied = {(p.col, p.row) for p in robot_positions}
    out = {}
    for dx in range(-r, r + 1):
        span = r - abs(dx)
        for dy in range(-span, span + 1):
            c, w = at.col + dx, at.row + dy
            if not env.in_bounds(c, w):
                continue
            out[(dx, dy)] = Cell(env.squares[w - 1][c - 1], env.obstacles[w - 1][c - 1], (c, w) in occupied)
    return out


def eval_trigger(f: Formula, p: Percept) -> bool:
    """Truth value of a star-free formula.

    A square holding another robot reads as ``e_robot`` only; the robot's
    own square at (0, 0) still shows its type.
    """
    if isinstance(f, Pred):
        cell = p.get((f.dx, f.dy))
        if cell is None:
            return False
        if f.type == E_ROBOT:
            return cell.robot
        if cell.robot and (f.dx, f.dy) != (0, 0):
            return False
        return cell.type == f.type
    if isinstance(f, Not):
        return not eval_trigger(f.arg, p)
    if isinstance(f, And):
        return eval_trigger(f.left, p) and eval_trigger(f.right, p)
    if isinstance(f, Or):
        return eval_trigger(f.left, p) or eval_trigger(f.right, p)
    if isinstance(f, Star):
        raise TypeError("'*' has no truth value on its own")
    raise TypeError(f"not a formula: {f!r}")


def enabled_transitions(c: Controller, q: str, p: Percept) -> list[Transition]:
    if q not in c.states:
        raise ControllerError(f"unknown state {q!r}")
    out = c.outgoing(q)
    fired = [t for t in out if not isinstance(t.trigger, Star) and eval_trigger(t.trigger, p)]
    if fired:
        return fired
    return [t for t in out if isinstance(t.trigger, Star)]


# --- DSL --------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(enval|enmod)\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\)|([!&|()*]))")


class _FormulaParser:
    def __init__(self, text: str, line: int | None):
        self.text = text.strip()
        self.line = line
        self.tokens = self._lex()
        self.i = 0

    def _lex(self):
        pos, toks = 0, []
        while pos < len(self.text):
            if self.text[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(self.text, pos)
            if not m:
                raise ControllerError(f"cannot parse {self.text[pos:]!r}", self.line)
            if m.group(1):
                toks.append((m.group(1), m.group(2), int(m.group(3)), int(m.group(4))))
            else:
                toks.append((m.group(5),))
            pos = m.end()
        return toks

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise ControllerError("empty formula", self.line)
        if self.tokens == [("*",)]:
            return STAR
        f = self.disjunction()
        if self.i != len(self.tokens):
            raise ControllerError(f"trailing input in {self.text!r}", self.line)
        return f

    def disjunction(self):
        f = self.conjunction()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self):
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            f = self.disjunction()
            if self.peek() != ")":
                raise ControllerError("missing ')'", self.line)
            self.take()
            return f
        if tok == "enval":
            _, t, dx, dy = self.take()
            return Pred(t, dx, dy)
        raise ControllerError(f"unexpected token {tok!r} in {self.text!r}", self.line)


def parse_formula(text: str, line: int | None = None) -> Trigger:
    return _FormulaParser(text, line).parse()


def parse_modification(text: str, line: int | None = None) -> Modification:
    text = text.strip()
    if text == "*":
        return STAR
    m = re.fullmatch(r"enmod\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\)", text)
    if not m:
        raise ControllerError(f"bad modification {text!r}", line)
    try:
        return Mod(m.group(1), int(m.group(2)), int(m.group(3)))
    except ControllerError as exc:
        raise ControllerError(str(exc), line) from None


def parse_template(text: str, line: int | None = None) -> TransitionTemplate:
    parts = text.split("/")
    if len(parts) != 3:
        raise ControllerError(f"expected '<formula> / <mod> / <dir>', got {text!r}", line)
    direction = parts[2].strip()
    if direction not in DIRECTIONS:
        raise ControllerError(f"unknown direction {direction!r}", line)
    return TransitionTemplate(parse_formula(parts[0], line), parse_modification(parts[1], line), direction)


def parse_controller(text: str, first_line: int = 1) -> Controller:
    name, radius, initial, declared = "", 0, None, None
    seen: list[str] = []
    transitions = []
    for n, raw in enumerate(text.splitlines(), start=first_line):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "name":
            name = rest.strip()
            continue
        if head == "radius":
            try:
                radius = int(rest)
            except ValueError:
                raise ControllerError(f"bad radius {rest!r}", n) from None
            continue
        if head == "initial":
            initial = rest.strip()
            continue
        if head == "states":
            declared = rest.split()
            for s in declared:
                if not _NAME.match(s):
                    raise ControllerError(f"bad state id {s!r}", n)
            continue
        src, colon, body = line.partition(":")
        if not colon or "->" not in body:
            raise ControllerError(f"cannot parse {raw!r}", n)
        body, _, dst = body.rpartition("->")
        src, dst = src.strip(), dst.strip()
        for s in (src, dst):
            if not _NAME.match(s):
                raise ControllerError(f"bad state id {s!r}", n)
            if declared is not None and s not in declared:
                raise ControllerError(f"unknown state id {s!r}", n)
            if s not in seen:
                seen.append(s)
        tmpl = parse_template(body, n)
        if formula_radius(tmpl.trigger) > radius:
            raise ControllerError(f"offset beyond radius {radius}", n)
        transitions.append(instantiate_template(tmpl, src, dst))
    states = declared if declared is not None else seen
    if initial is None:
        if not states:
            raise ControllerError("controller declares no states", first_line)
        initial = states[0]
    elif initial not in states:
        if declared is not None:
            raise ControllerError(f"unknown initial state {initial!r}", first_line)
        states = [initial] + states
    return Controller(tuple(states), initial, radius, tuple(transitions), name)


def render_controller(c: Controller) -> str:
    out = []
    if c.name:
        out.append(f"name {c.name}")
    out += [f"radius {c.radius}", f"initial {c.initial}", "states " + " ".join(c.states)]
    out += [str(t) for t in c.transitions]
    return "\n".join(out) + "\n"


SEPARATOR = "---"


def parse_controllers(text: str) -> list[Controller]:
    """Parse ``---``-separated controller sections."""
    out, chunk, start = [], [], 1
    for n, line in enumerate(text.splitlines(), start=1):
        if line.strip() == SEPARATOR:
            if any(l.split("#", 1)[0].strip() for l in chunk):
                out.append(parse_controller("\n".join(chunk), start))
            chunk, start = [], n + 1
        else:
            chunk.append(line)
    if any(l.split("#", 1)[0].strip() for l in chunk):
        out.append(parse_controller("\n".join(chunk), start))
    return out


def render_controllers(cs: Iterable[Controller]) -> str:
    return (SEPARATOR + "\n").join(render_controller(c) for c in cs)


def parse_templates(text: str) -> list[TransitionTemplate]:
    out = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_template(line, n))
    return out


def render_templates(ts: Iterable[TransitionTemplate]) -> str:
    return "".join(f"{t}\n" for t in ts)
