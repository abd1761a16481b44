"""Instance bundles: a directory of small text files describing one problem.

Files: ``env.txt``, ``task.txt``, ``limits.txt`` (``key=value`` lines, with
``problem`` one of teamenvver / teamdesls / contdesls), ``start.txt``
(``col row [controller]`` per robot or region square), ``team.txt`` or
``library.txt``, and optionally ``residents.txt`` + ``residents_start.txt``.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Union

from .controller import (
    Controller,
    parse_controllers,
    parse_templates,
    render_controllers,
    render_templates,
)
from .gridworld import Position, parse_environment, render_environment
from .problems import ContDesLSInstance, Resident, TeamDesLSInstance, TeamEnvVerInstance
from .simulator import Team, parse_target

Instance = Union[TeamEnvVerInstance, TeamDesLSInstance, ContDesLSInstance]

PROBLEMS = {TeamEnvVerInstance: "teamenvver", TeamDesLSInstance: "teamdesls", ContDesLSInstance: "contdesls"}


class BundleError(ValueError):
    pass


def _named(controllers, prefix: str) -> dict[Controller, str]:
    """Distinct controllers with unique names, keeping given names where possible."""
    names: dict[Controller, str] = {}
    taken = set()
    for c in controllers:
        if c in names:
            continue
        name = c.name or f"{prefix}{len(names)}"
        while name in taken:
            name = f"{name}_{len(names)}"
        taken.add(name)
        names[c] = name
    return names


def _with_name(c: Controller, name: str) -> Controller:
    return c if c.name == name else Controller(c.states, c.initial, c.radius, c.transitions, name)


def _lines(rows) -> str:
    return "".join(" ".join(str(x) for x in r) + "\n" for r in rows)


def render_bundle(inst: Instance, extra_limits: dict | None = None) -> dict[str, str]:
    files = {"env.txt": render_environment(inst.env), "task.txt": inst.task.render()}
    limits = {"problem": PROBLEMS[type(inst)], "ec": inst.ec_budget}
    if isinstance(inst, TeamEnvVerInstance):
        names = _named(inst.team, "c")
        files["team.txt"] = render_controllers(_with_name(c, n) for c, n in names.items())
        files["start.txt"] = _lines((p.col, p.row, names[c]) for p, c in zip(inst.start, inst.team))
        limits.update(T=len(inst.team))
    else:
        limits.update(T=inst.team_size, h=inst.h, c1=inst.c1, c2=inst.c2, exact_h=int(inst.exact_h))
        if isinstance(inst, TeamDesLSInstance):
            names = _named(inst.library, "c")
            if len(names) != len(inst.library):
                raise BundleError("library controllers must be distinct")
            files["library.txt"] = render_controllers(_with_name(c, names[c]) for c in inst.library)
            files["start.txt"] = _lines((p.col, p.row) for p in inst.region)
        else:
            files["library.txt"] = render_templates(inst.library)
            files["start.txt"] = _lines((p.col, p.row) for p in inst.start)
            limits.update(Q=inst.max_states, d=inst.max_out_degree, r=inst.radius)
        if inst.residents:
            names = _named((r.controller for r in inst.residents), "resident")
            files["residents.txt"] = render_controllers(_with_name(c, n) for c, n in names.items())
            files["residents_start.txt"] = _lines(
                (r.position.col, r.position.row, names[r.controller]) for r in inst.residents
            )
    limits.update(extra_limits or {})
    files["limits.txt"] = "".join(f"{k}={v}\n" for k, v in limits.items())
    return files


def instance_digest(inst: Instance) -> str:
    h = hashlib.sha256()
    for name, text in sorted(render_bundle(inst).items()):
        h.update(name.encode() + b"\0" + text.encode() + b"\0")
    return h.hexdigest()


def write_bundle(inst: Instance, directory, extra_files: dict[str, str] | None = None, extra_limits: dict | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = render_bundle(inst, extra_limits)
    files.update(extra_files or {})
    for name, text in files.items():
        (d / name).write_text(text, encoding="utf-8")
    return d


def parse_limits(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise BundleError(f"limits.txt line {n}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def _read(d: Path, name: str, required: bool = True) -> str | None:
    p = d / name
    if not p.exists():
        if required:
            raise BundleError(f"bundle {d} lacks {name}")
        return None
    return p.read_text(encoding="utf-8")


def _starts(text: str, fname: str):
    rows = []
    for n, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            rows.append((Position(int(parts[0]), int(parts[1])), parts[2] if len(parts) > 2 else None))
        except (ValueError, IndexError):
            raise BundleError(f"{fname} line {n}: expected 'col row [controller]'") from None
    return rows


def _by_name(controllers, fname):
    out = {}
    for c in controllers:
        if not c.name:
            raise BundleError(f"{fname}: every controller needs a 'name' line")
        out[c.name] = c
    return out


def read_bundle(directory) -> tuple[Instance, dict[str, str]]:
    """Returns the instance and the raw limits (which may carry ``steps``)."""
    d = Path(directory)
    env = parse_environment(_read(d, "env.txt"))
    task = parse_target(_read(d, "task.txt"))
    limits = parse_limits(_read(d, "limits.txt"))
    num = lambda k, default=None: int(limits[k]) if k in limits else default
    kind = limits.get("problem")
    starts = _starts(_read(d, "start.txt"), "start.txt")
    residents = ()
    res_text = _read(d, "residents.txt", required=False)
    if res_text is not None:
        pool = _by_name(parse_controllers(res_text), "residents.txt")
        residents = tuple(
            Resident(pool[name], p) for p, name in _starts(_read(d, "residents_start.txt"), "residents_start.txt")
        )
    if kind == "teamenvver":
        pool = _by_name(parse_controllers(_read(d, "team.txt")), "team.txt")
        try:
            team = Team(pool[name] for _, name in starts)
        except KeyError as exc:
            raise BundleError(f"start.txt names unknown controller {exc}") from None
        inst = TeamEnvVerInstance(env, team, tuple(p for p, _ in starts), num("ec", 0), task)
    elif kind == "teamdesls":
        library = tuple(parse_controllers(_read(d, "library.txt")))
        inst = TeamDesLSInstance(
            env, num("T", len(starts)), library, tuple(p for p, _ in starts), num("h", 1), num("ec", 0), task,
            num("c1", 10), num("c2", 3), bool(num("exact_h", 0)), residents,
        )
    elif kind == "contdesls":
        library = tuple(parse_templates(_read(d, "library.txt")))
        inst = ContDesLSInstance(
            env, num("T", len(starts)), tuple(p for p, _ in starts), library, num("r", 0), num("Q", 1),
            num("d", 1), num("h", 1), num("ec", 0), task, num("c1", 10), num("c2", 3), bool(num("exact_h", 0)),
            residents,
        )
    else:
        raise BundleError(f"limits.txt: unknown problem {kind!r}")
    return inst, limits
