"""Square-grid environments: typed squares, obstacle flags and the text format.

Coordinates are 1-based ``(col, row)`` with ``(1, 1)`` the southwest corner.
Files list rows north to south, so the first grid line is ``row == height``.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

E_ROBOT = "e_robot"

# candidate characters when a legend has to be minted for generated grids
_SYMBOLS = (
    ".#" + string.ascii_letters + string.digits
    + "!$%&*+,-/:;<=>?@^_`{|}~'\"()[]"
    + "".join(chr(c) for c in range(0x00C0, 0x0250))
)


class GridError(ValueError):
    """Base class for environment errors."""


class ParseError(GridError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class BoundsError(GridError, IndexError):
    pass


class LegendError(GridError):
    pass


class ObstacleError(GridError):
    pass


@dataclass(frozen=True, order=True)
class Position:
    col: int
    row: int

    def __post_init__(self):
        if self.col < 1 or self.row < 1:
            raise BoundsError(f"positions are 1-based, got ({self.col},{self.row})")

    def offset(self, dx: int, dy: int) -> tuple[int, int]:
        """Raw coordinates shifted by (dx, dy); may leave the grid."""
        return (self.col + dx, self.row + dy)

    def __str__(self):
        return f"({self.col},{self.row})"


@dataclass(frozen=True)
class LegendEntry:
    symbol: str
    name: str
    obstacle: bool = False


@dataclass(frozen=True)
class Environment:
    """Immutable grid. ``squares[row-1][col-1]`` holds the type name."""

    width: int
    height: int
    squares: tuple[tuple[str, ...], ...]
    obstacles: tuple[tuple[bool, ...], ...]
    legend: tuple[LegendEntry, ...] = field(default=())

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GridError("environment must be at least 1x1")
        if len(self.squares) != self.height or len(self.obstacles) != self.height:
            raise GridError("row count does not match height")
        if any(len(r) != self.width for r in self.squares) or any(
            len(r) != self.width for r in self.obstacles
        ):
            raise GridError("column count does not match width")
        names = set()
        symbols = set()
        for entry in self.legend:
            if entry.name == E_ROBOT:
                raise LegendError(f"{E_ROBOT} is reserved")
            if entry.symbol in symbols:
                raise LegendError(f"duplicate legend symbol {entry.symbol!r}")
            symbols.add(entry.symbol)
            names.add((entry.name, entry.obstacle))
        for row in range(self.height):
            for col in range(self.width):
                key = (self.squares[row][col], self.obstacles[row][col])
                if key not in names:
                    raise LegendError(f"square ({col + 1},{row + 1}) of type {key[0]!r} not in legend")

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def types(self) -> frozenset[str]:
        return frozenset(e.name for e in self.legend)

    def in_bounds(self, col: int, row: int) -> bool:
        return 1 <= col <= self.width and 1 <= row <= self.height

    def is_obstacle(self, p: Position) -> bool:
        self._check(p)
        return self.obstacles[p.row - 1][p.col - 1]

    def blocked(self, col: int, row: int) -> bool:
        """Obstacle or off-grid; both stop movement."""
        return not self.in_bounds(col, row) or self.obstacles[row - 1][col - 1]

    def positions(self) -> Iterator[Position]:
        for row in range(1, self.height + 1):
            for col in range(1, self.width + 1):
                yield Position(col, row)

    def freespace(self) -> list[Position]:
        return [p for p in self.positions() if not self.obstacles[p.row - 1][p.col - 1]]

    def _check(self, p: Position):
        if not self.in_bounds(p.col, p.row):
            raise BoundsError(f"{p} outside {self.width}x{self.height} grid")


def square_at(env: Environment, p: Position) -> str:
    env._check(p)
    return env.squares[p.row - 1][p.col - 1]


def set_square(env: Environment, p: Position, t: str) -> Environment:
    """Return a copy of ``env`` with square ``p`` retyped to ``t``."""
    env._check(p)
    if env.obstacles[p.row - 1][p.col - 1]:
        raise ObstacleError(f"cannot modify obstacle square {p}")
    if not any(e.name == t and not e.obstacle for e in env.legend):
        raise LegendError(f"type {t!r} has no freespace legend entry")
    if env.squares[p.row - 1][p.col - 1] == t:
        return env
    row = list(env.squares[p.row - 1])
    row[p.col - 1] = t
    squares = env.squares[: p.row - 1] + (tuple(row),) + env.squares[p.row:]
    return Environment(env.width, env.height, squares, env.obstacles, env.legend)


def manhattan_distance(a: Position, b: Position) -> int:
    return abs(a.col - b.col) + abs(a.row - b.row)


def build_environment(
    width: int,
    height: int,
    cells: Mapping[tuple[int, int], str | tuple[str, bool]],
    default: str | tuple[str, bool] = "e_N",
) -> Environment:
    """Build an environment from sparse ``(col, row) -> type`` cells.

    A cell value may be a plain type name (freespace) or ``(name, obstacle)``.
    Legend symbols are assigned in order of first appearance.
    """

    def norm(v):
        return (v, False) if isinstance(v, str) else (v[0], bool(v[1]))

    base = norm(default)
    squares, obstacles = [], []
    for row in range(1, height + 1):
        srow, orow = [], []
        for col in range(1, width + 1):
            name, obst = norm(cells.get((col, row), base))
            srow.append(name)
            orow.append(obst)
        squares.append(tuple(srow))
        obstacles.append(tuple(orow))
    return Environment(width, height, tuple(squares), tuple(obstacles),
                       mint_legend(zip_cells(squares, obstacles)))


def zip_cells(squares, obstacles) -> Iterable[tuple[str, bool]]:
    # north to south, the order a reader of the file sees
    for srow, orow in zip(reversed(squares), reversed(obstacles)):
        yield from zip(srow, orow)


def mint_legend(cells: Iterable[tuple[str, bool]], extra: Iterable[tuple[str, bool]] = ()) -> tuple[LegendEntry, ...]:
    seen: dict[tuple[str, bool], str] = {}
    symbols = iter(_SYMBOLS)
    for key in list(cells) + list(extra):
        if key not in seen:
            try:
                seen[key] = next(symbols)
            except StopIteration:
                raise LegendError("too many square types for a text legend") from None
    return tuple(LegendEntry(sym, name, obst) for (name, obst), sym in seen.items())


def with_types(env: Environment, names: Iterable[str]) -> Environment:
    """Add freespace legend entries for ``names`` (used for modification targets)."""
    have = {(e.name, e.obstacle) for e in env.legend}
    used = {e.symbol for e in env.legend}
    legend = list(env.legend)
    free = (s for s in _SYMBOLS if s not in used)
    for n in names:
        if (n, False) not in have:
            legend.append(LegendEntry(next(free), n, False))
            have.add((n, False))
    return Environment(env.width, env.height, env.squares, env.obstacles, tuple(legend))


def parse_environment(text: str) -> Environment:
    lines = text.splitlines()
    legend: list[LegendEntry] = []
    i = 0
    while i < len(lines) and lines[i].strip():
        parts = lines[i].split()
        if parts[0] != "legend" or len(parts) not in (3, 4):
            raise ParseError(f"expected 'legend <char> <type> [obstacle]', got {lines[i]!r}", i + 1)
        sym, name = parts[1], parts[2]
        if len(sym) != 1:
            raise ParseError(f"legend symbol must be one character, got {sym!r}", i + 1)
        obst = False
        if len(parts) == 4:
            if parts[3] != "obstacle":
                raise ParseError(f"unknown legend flag {parts[3]!r}", i + 1)
            obst = True
        if name == E_ROBOT:
            raise ParseError(f"{E_ROBOT} may not appear in a legend", i + 1)
        if any(e.symbol == sym for e in legend):
            raise ParseError(f"duplicate legend symbol {sym!r}", i + 1)
        legend.append(LegendEntry(sym, name, obst))
        i += 1
    if not legend:
        raise ParseError("missing legend header", 1)
    while i < len(lines) and not lines[i].strip():
        i += 1
    body_start = i
    body = lines[i:]
    while body and not body[-1].strip():
        body.pop()
    if not body:
        raise ParseError("empty grid body", body_start + 1)
    width = len(body[0])
    by_symbol = {e.symbol: e for e in legend}
    squares, obstacles = [], []
    for n, line in enumerate(body):
        lineno = body_start + n + 1
        if len(line) != width:
            raise ParseError(f"ragged row: expected {width} characters, got {len(line)}", lineno)
        srow, orow = [], []
        for ch in line:
            entry = by_symbol.get(ch)
            if entry is None:
                raise ParseError(f"unknown legend symbol {ch!r}", lineno)
            srow.append(entry.name)
            orow.append(entry.obstacle)
        squares.append(tuple(srow))
        obstacles.append(tuple(orow))
    squares.reverse()
    obstacles.reverse()
    return Environment(width, len(body), tuple(squares), tuple(obstacles), tuple(legend))


def render_environment(env: Environment) -> str:
    symbol = {(e.name, e.obstacle): e.symbol for e in env.legend}
    out = []
    for e in env.legend:
        out.append(f"legend {e.symbol} {e.name}" + (" obstacle" if e.obstacle else ""))
    out.append("")
    for row in range(env.height - 1, -1, -1):
        out.append("".join(symbol[(env.squares[row][c], env.obstacles[row][c])] for c in range(env.width)))
    return "\n".join(out) + "\n"
