"""Brute-force reference answers and the cross-validation harness.

These deliberately share as little as possible with the solvers they check:
satisfiability and domination are decided directly on the source problem,
and the design oracles enumerate candidates and run the reference
simulator (``simulate_reference``) instead of the compiled engine.
"""
from __future__ import annotations

import hashlib
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .controller import Controller, Star, formula_radius, instantiate_template
from .problems import ContDesLSInstance, SearchCapExceeded, TeamDesLSInstance, canonical_placement
from .reductions import CNF, Graph, neighborhood
from .simulator import Team, initial_configuration, simulate_reference, steps_bound

MAX_SAT_VARS = 25
MAX_DS_VERTICES = 20


def sat_oracle(f: CNF) -> Optional[tuple[bool, ...]]:
    """First satisfying assignment in counting order, or None."""
    if f.num_vars > MAX_SAT_VARS:
        raise ValueError(f"enumeration capped at {MAX_SAT_VARS} variables")
    for bits in itertools.product((False, True), repeat=f.num_vars):
        if f.satisfied_by(bits):
            return bits
    return None


def dpll(f: CNF) -> Optional[dict[int, bool]]:
    """Unit propagation plus splitting; a second, independent SAT check."""

    def solve(clauses: list[frozenset], assign: dict[int, bool]):
        while True:
            unit = next((c for c in clauses if len(c) == 1), None)
            if unit is None:
                break
            (lit,) = unit
            assign = {**assign, abs(lit): lit > 0}
            clauses = _simplify(clauses, lit)
            if clauses is None:
                return None
        if not clauses:
            return assign
        lit = next(iter(clauses[0]))
        for choice in (lit, -lit):
            reduced = _simplify(clauses, choice)
            if reduced is not None:
                got = solve(reduced, {**assign, abs(choice): choice > 0})
                if got is not None:
                    return got
        return None

    result = solve([frozenset(c) for c in f.clauses], {})
    if result is None:
        return None
    return {v: result.get(v, False) for v in range(1, f.num_vars + 1)}


def _simplify(clauses, lit):
    out = []
    for c in clauses:
        if lit in c:
            continue
        rest = c - {-lit}
        if not rest:
            return None
        out.append(rest)
    return out


def domset_oracle(g: Graph, k: int) -> Optional[tuple[int, ...]]:
    """A dominating set of size at most ``k`` (exactly ``min(k, |V|)``), or None."""
    if g.num_vertices > MAX_DS_VERTICES:
        raise ValueError(f"enumeration capped at {MAX_DS_VERTICES} vertices")
    size = min(k, g.num_vertices)
    hoods = [set(neighborhood(g, v)) for v in range(1, g.num_vertices + 1)]
    for cand in itertools.combinations(range(1, g.num_vertices + 1), size):
        chosen = set(cand)
        if all(h & chosen for h in hoods):
            return cand
    return None


def _reference_success(inst, team, positions, budget) -> bool:
    c0 = initial_configuration(inst.env, team, positions)
    res = simulate_reference(c0, team, inst.task, budget, inst.ec_budget)
    return res.success


def design_team_oracle(inst: TeamDesLSInstance, cap: int = 200_000) -> Optional[tuple[int, ...]]:
    """Exhaustive library assignment check with the reference simulator."""
    lib = inst.library
    if len(lib) ** inst.team_size > cap:
        raise SearchCapExceeded("oracle candidate space exceeds cap")
    placement = canonical_placement(inst.region) + tuple(r.position for r in inst.residents)
    residents = tuple(r.controller for r in inst.residents)

    def rec(prefix):
        if len(prefix) == inst.team_size:
            kinds = len(set(prefix))
            if kinds > inst.h or (inst.exact_h and kinds != inst.h):
                return None
            team = Team(tuple(lib[i] for i in prefix) + residents)
            budget = steps_bound(inst.c1, inst.c2, inst.env.size, team.max_states)
            return tuple(prefix) if _reference_success(inst, team, placement, budget) else None
        for i in range(len(lib)):
            hit = rec(prefix + [i])
            if hit is not None:
                return hit
        return None

    return rec([])


def _state_controllers(inst: ContDesLSInstance, m: int, cap_box: list) -> Iterable[Controller]:
    """Every controller with states s0..s(m-1) built from the template library."""
    lib = [t for t in inst.library if formula_radius(t.trigger) <= inst.radius]
    names = [f"s{i}" for i in range(m)]
    pairs = [(t, q2) for t in lib for q2 in names]
    per_state = []
    for q in names:
        options = []
        for size in range(inst.max_out_degree + 1):
            for combo in itertools.combinations(pairs, size):
                options.append(tuple(instantiate_template(t, q, q2) for t, q2 in combo))
        per_state.append(options)
    for choice in itertools.product(*per_state):
        cap_box[0] -= 1
        if cap_box[0] < 0:
            raise SearchCapExceeded("oracle candidate space exceeds cap")
        yield Controller(tuple(names), "s0", inst.radius, tuple(itertools.chain(*choice)))


def design_controllers_oracle(inst: ContDesLSInstance, cap: int = 200_000) -> bool:
    """Naive enumeration of controllers (|Q| and d bounded) per team slot.

    Only homogeneous teams are enumerated when h == 1; for larger h the
    product over team slots is taken.
    """
    cap_box = [cap]
    budget = steps_bound(inst.c1, inst.c2, inst.env.size, inst.max_states)
    res_c = tuple(r.controller for r in inst.residents)
    positions = inst.start + tuple(r.position for r in inst.residents)
    for m in range(1, inst.max_states + 1):
        pool = list(_state_controllers(inst, m, cap_box))
        if inst.h == 1:
            teams = ((c,) * inst.team_size for c in pool)
        else:
            teams = itertools.product(pool, repeat=inst.team_size)
        for chosen in teams:
            kinds = len(set(chosen))
            if kinds > inst.h or (inst.exact_h and kinds != inst.h):
                continue
            cap_box[0] -= 1
            if cap_box[0] < 0:
                raise SearchCapExceeded("oracle candidate space exceeds cap")
            if _reference_success(inst, Team(chosen + res_c), positions, budget):
                return True
    return False


# --- cross-validation ----------------------------------------------------------


@dataclass
class CrossValidationReport:
    construction: str
    count: int = 0
    agreements: int = 0
    disagreements: list = field(default_factory=list)
    wall_seconds: float = 0.0
    digest: str = ""

    @property
    def ok(self) -> bool:
        return not self.disagreements and self.agreements == self.count

    def render(self) -> str:
        return (
            f"construction={self.construction} instances={self.count} agreements={self.agreements} "
            f"disagreements={len(self.disagreements)} wall={self.wall_seconds:.2f}s digest={self.digest}"
        )


def _check_one(job):
    check, item = job
    return check(item)


def cross_validate(
    construction: str,
    corpus: Sequence,
    check: Callable[[object], tuple[bool, bool, str]],
    jobs: int = 1,
) -> CrossValidationReport:
    """Run ``check`` (returning ``(expected, got, label)``) on every corpus item.

    The digest covers labels and verdicts in corpus order, so it is stable
    across job counts.
    """
    started = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_check_one, [(check, item) for item in corpus], chunksize=16))
    else:
        outcomes = [check(item) for item in corpus]
    report = CrossValidationReport(construction, count=len(outcomes))
    h = hashlib.sha256()
    for expected, got, label in outcomes:
        h.update(f"{label}:{int(expected)}:{int(got)}\n".encode())
        if expected == got:
            report.agreements += 1
        else:
            report.disagreements.append(label)
    report.digest = h.hexdigest()
    report.wall_seconds = time.perf_counter() - started
    return report


# --- corpora -------------------------------------------------------------------


def all_3cnfs(max_vars: int = 3, max_clauses: int = 3) -> list[CNF]:
    """Every formula up to the limits, clauses as literal multisets, deduplicated by clause set."""
    out = []
    for n in range(1, max_vars + 1):
        lits = [v for i in range(1, n + 1) for v in (i, -i)]
        clauses = list(itertools.combinations_with_replacement(lits, 3))
        for m in range(max_clauses + 1):
            for combo in itertools.combinations(clauses, m):
                out.append(CNF(n, combo))
    return out


def random_3cnf(rng, num_vars: int, num_clauses: int, unit_rate: float = 0.0) -> CNF:
    """Uniform literals; with probability ``unit_rate`` a clause repeats one literal."""

    def literal():
        v = rng.randint(1, num_vars)
        return v if rng.random() < 0.5 else -v

    def clause():
        if rng.random() < unit_rate:
            lit = literal()
            return (lit, lit, lit)
        return (literal(), literal(), literal())

    return CNF(num_vars, tuple(clause() for _ in range(num_clauses)))


def all_graphs(max_vertices: int = 4) -> list[Graph]:
    """Every labelled graph (all edge subsets) on 1..max_vertices vertices."""
    out = []
    for n in range(1, max_vertices + 1):
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        for mask in range(1 << len(pairs)):
            out.append(Graph(n, frozenset(p for i, p in enumerate(pairs) if mask >> i & 1)))
    return out


def graph_label(g: Graph) -> str:
    return f"{g.num_vertices}:" + ",".join(f"{u}-{v}" for u, v in sorted(g.edges))


def cnf_label(f: CNF) -> str:
    return f"{f.num_vars}:" + ",".join(" ".join(map(str, c)) for c in f.clauses)


# per-construction checks: (expected, got, label); top-level so they pickle


def check_3sat_tev(f: CNF) -> tuple[bool, bool, str]:
    from .problems import verify_team_env
    from .reductions import reduce_3sat_to_teamenvver

    red = reduce_3sat_to_teamenvver(f)
    return sat_oracle(f) is not None, verify_team_env(red.instance).yes, cnf_label(f)


def check_3sat_tdls(f: CNF) -> tuple[bool, bool, str]:
    from .problems import design_team_ls
    from .reductions import reduce_3sat_to_teamdesls

    red = reduce_3sat_to_teamdesls(f)
    return sat_oracle(f) is not None, bool(design_team_ls(red.instance)), cnf_label(f)


def check_ds_cdls(item: tuple[Graph, int]) -> tuple[bool, bool, str]:
    from .problems import design_controllers_ls
    from .reductions import reduce_domset_to_contdesls

    g, k = item
    red = reduce_domset_to_contdesls(g, k)
    return domset_oracle(g, k) is not None, bool(design_controllers_ls(red.instance)), f"{graph_label(g)}/k={k}"


CHECKS = {"3sat-tev": check_3sat_tev, "3sat-tdls": check_3sat_tdls, "ds-cdls": check_ds_cdls}


def default_corpus(construction: str, seed: int = 0, count: int | None = None) -> list:
    """Exhaustive small corpora for 3sat-tev and ds-cdls, seeded random formulas for 3sat-tdls."""
    import random

    if construction == "3sat-tev":
        corpus = all_3cnfs()
    elif construction == "ds-cdls":
        corpus = [(g, k) for g in all_graphs() for k in (1, 2) if k <= g.num_vertices]
    elif construction == "3sat-tdls":
        rng = random.Random(seed)
        # repeated-literal clauses make unsatisfiable draws common enough to matter
        corpus = [random_3cnf(rng, rng.randint(1, 4), rng.randint(1, 4), unit_rate=0.5) for _ in range(count or 200)]
    else:
        raise ValueError(f"unknown construction {construction!r}")
    return corpus if count is None else corpus[:count]
