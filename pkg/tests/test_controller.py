import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsrteams.controller import (
    STAR,
    And,
    Cell,
    Controller,
    ControllerError,
    Mod,
    Not,
    Or,
    Pred,
    Transition,
    TransitionTemplate,
    enabled_transitions,
    eval_trigger,
    formula_radius,
    instantiate_template,
    parse_controller,
    parse_controllers,
    parse_formula,
    parse_template,
    percept_of,
    render_controller,
    render_controllers,
)
from fsrteams.gridworld import Position, build_environment

ENV = build_environment(3, 3, {}, default="grass")


def test_percept_radius_zero():
    p = percept_of(ENV, [Position(2, 2)], Position(2, 2), 0)
    assert p == {(0, 0): Cell("grass", False, True)}


def test_percept_sees_teammate_and_drops_off_grid_offsets():
    p = percept_of(ENV, [Position(1, 2), Position(2, 2)], Position(1, 2), 1)
    assert p[(1, 0)].robot
    assert (-1, 0) not in p
    assert len(p) == 4  # diamond of radius 1 minus the western square


def test_eval_trigger_basics():
    alone = percept_of(ENV, [Position(1, 2)], Position(1, 2), 1)
    assert eval_trigger(Pred("grass", 0, 0), alone)
    assert eval_trigger(Not(Pred("e_robot", 1, 0)), alone)
    assert not eval_trigger(Pred("grass", -1, 0), alone)
    with pytest.raises(TypeError):
        eval_trigger(STAR, alone)


def test_other_robot_masks_square_type_but_own_square_stays_visible():
    p = percept_of(ENV, [Position(1, 2), Position(2, 2)], Position(1, 2), 1)
    assert not eval_trigger(Pred("grass", 1, 0), p)
    assert eval_trigger(Pred("e_robot", 1, 0), p)
    assert eval_trigger(Pred("grass", 0, 0), p)
    assert eval_trigger(Pred("e_robot", 0, 0), p)


def test_enabled_star_only_as_default():
    c = parse_controller("radius 1\ns0: enval(grass,0,0) / * / goEast -> s0\ns0: * / * / stay -> s0")
    p = percept_of(ENV, [Position(1, 1)], Position(1, 1), 1)
    assert [t.dir for t in enabled_transitions(c, "s0", p)] == ["goEast"]
    bare = Controller(("s0", "s1"), "s0", 0, c.transitions[:1])
    assert enabled_transitions(bare, "s1", p) == []
    both = parse_controller("s0: enval(grass,0,0) / * / goEast -> s0\ns0: !enval(rock,0,0) / * / goNorth -> s0")
    assert len(enabled_transitions(both, "s0", p)) == 2


def test_star_fires_when_nothing_else_does():
    c = parse_controller("s0: enval(rock,0,0) / * / goEast -> s0\ns0: * / * / goNorth -> s0")
    p = percept_of(ENV, [Position(1, 1)], Position(1, 1), 0)
    assert [t.dir for t in enabled_transitions(c, "s0", p)] == ["goNorth"]


def test_instantiate_template():
    t = TransitionTemplate(Pred("e1", 0, 0), STAR, "goEast")
    loop = instantiate_template(t, "s0", "s0")
    assert loop.source == loop.target == "s0"
    cross = instantiate_template(t, "s0", "s1")
    assert (cross.source, cross.target) == ("s0", "s1")
    states = ["s0", "s1", "s2"]
    assert len({instantiate_template(t, a, b) for a in states for b in states}) == 9


def test_parse_single_line_controller():
    c = parse_controller("s0: enval(grass,0,0) / * / goEast -> s0")
    assert c.states == ("s0",) and c.initial == "s0" and len(c.transitions) == 1


def test_offset_beyond_declared_radius():
    with pytest.raises(ControllerError) as err:
        parse_controller("radius 1\ns0: enval(grass,2,0) / * / stay -> s0")
    assert err.value.line == 2


@pytest.mark.parametrize(
    "text",
    [
        "s0: enval(grass,0,0) / * / goUp -> s0",
        "s0: enval(grass,0,0) / * -> s0",
        "s0 enval(grass,0,0) / * / stay",
        "states s0\ns0: * / * / stay -> s1",
        "s0: enval(grass,0,0 / * / stay -> s0",
        "s0: * / enmod(e_robot,0,0) / stay -> s0",
        "s0: * / enmod(grass,1,1) / stay -> s0",
    ],
)
def test_bad_controllers(text):
    with pytest.raises(ControllerError):
        parse_controller(text)


def test_formula_precedence():
    f = parse_formula("enval(a,0,0) | enval(b,0,0) & !enval(c,0,0)")
    assert f == Or(Pred("a"), And(Pred("b"), Not(Pred("c"))))
    assert formula_radius(parse_formula("enval(a,2,-1) | enval(b,0,0)")) == 3


def test_template_parse():
    t = parse_template("enval(grass,0,1) / enmod(gravel,0,0) / goNorth")
    assert t.mod == Mod("gravel", 0, 0) and t.dir == "goNorth"


def test_multi_controller_sections_keep_line_numbers():
    text = "name a\ns0: * / * / stay -> s0\n---\nname b\ns0: enval(x,5,0) / * / stay -> s0\n"
    with pytest.raises(ControllerError) as err:
        parse_controllers(text)
    assert err.value.line == 5


# --- property: DSL round trip -------------------------------------------------

TYPES = ["grass", "rock", "e_v1", "e_robot"]


def formulas(radius):
    offs = st.tuples(st.integers(-radius, radius), st.integers(-radius, radius)).filter(
        lambda o: abs(o[0]) + abs(o[1]) <= radius
    )
    leaf = st.builds(lambda t, o: Pred(t, *o), st.sampled_from(TYPES), offs)
    return st.recursive(
        leaf,
        lambda sub: st.one_of(st.builds(Not, sub), st.builds(And, sub, sub), st.builds(Or, sub, sub)),
        max_leaves=6,
    )


@st.composite
def controllers(draw):
    radius = draw(st.integers(0, 2))
    n = draw(st.integers(1, 3))
    states = tuple(f"q{i}" for i in range(n))
    trs = []
    for _ in range(draw(st.integers(0, 5))):
        trig = draw(st.one_of(st.just(STAR), formulas(radius)))
        mod = draw(st.one_of(st.just(STAR), st.builds(Mod, st.sampled_from(["grass", "rock"]),
                                                     st.sampled_from([0, 1, -1]), st.just(0))))
        trs.append(Transition(draw(st.sampled_from(states)), trig, mod,
                              draw(st.sampled_from(["goNorth", "goSouth", "goEast", "goWest", "stay"])),
                              draw(st.sampled_from(states))))
    return Controller(states, draw(st.sampled_from(states)), radius, tuple(trs), draw(st.sampled_from(["", "walker"])))


@settings(max_examples=100)
@given(controllers())
def test_render_parse_round_trip(c):
    assert parse_controller(render_controller(c)) == c


@settings(max_examples=30)
@given(st.lists(controllers(), min_size=1, max_size=3))
def test_sections_round_trip(cs):
    assert parse_controllers(render_controllers(cs)) == cs


@settings(max_examples=100)
@given(formulas(2))
def test_formula_round_trip(f):
    assert parse_formula(str(f)) == f
