import pytest

import oracles
from potentialist.controls import (
    DialFamily, PreconditionError, classify, independent_buttons_dial, independent_switches, is_dial,
    make_button_dial_model, make_switch_model, mp_check, pushed_worlds, s42_cap_witness, s5_cap_witness,
)
from potentialist.formula import TOP, Atom, Not, parse_prop, render, substitute
from potentialist.kripke import CapExceeded, Frame, Model, chain_model, cluster_model, model_check
from potentialist.theories import Theory, decide, logic_fingerprint

s0, s1, b0, b1 = Atom("s0"), Atom("s1"), Atom("b0"), Atom("b1")
P = Atom("p")


def buttons(n):
    return [Atom(f"b{i}") for i in range(n)]


def dial(m, n):
    return DialFamily.everywhere(m, [Atom(f"d{i}") for i in range(n)])


def assert_witness(m, f, r):
    inst = substitute(f, r.substitution)
    assert inst == r.instance
    assert not model_check(m, r.world, inst)
    assert not oracles.holds(m.to_json(), r.world, inst)


# -- classification ----------------------------------------------------------------------------


def test_classify_neither():
    rep = classify(cluster_model(1), "w0", "s")
    assert rep.role == "neither"
    assert rep.violation == ("w0", "<>s fails")


def test_classify_button_on_chain():
    m = chain_model(4, {"b": [2, 3]})
    rep = classify(m, "w0", "b")
    assert rep.role == "button"
    assert rep.pushed == {"w2", "w3"}


def test_classify_switch():
    rep = classify(make_switch_model(1, 3), "l0p0", "s0")
    assert rep.role == "switch" and not rep.also_button


def test_switch_model_shapes():
    m = make_switch_model(1, 2)
    assert len(m.worlds) == 4
    assert all(classify(m, w, s0).role == "switch" for w in m.worlds)
    assert independent_switches(m, "l0p0", [s0])
    assert len(make_switch_model(0, 1).worlds) == 1


def test_button_dial_model_shapes():
    m = make_button_dial_model(1, 1, 3)
    rep = classify(m, "l0b0d0", b0)
    assert rep.role == "button"
    assert not any(w.startswith("l0b0") for w in rep.pushed)


def test_model_size_cap():
    with pytest.raises(CapExceeded):
        make_switch_model(7, 1)


@pytest.mark.parametrize("m", [
    make_switch_model(2, 2), make_button_dial_model(2, 2, 3), chain_model(3, {"p": [1, 2]}),
])
def test_pushed_worlds_are_upward_closed(m):
    fr = m.frame
    for a in sorted({x for v in m.valuation.values() for x in v}):
        pushed = pushed_worlds(m, Atom(a))
        for w in pushed:
            assert set(fr.successors(w)) <= pushed


# -- dials ------------------------------------------------------------------------------------


def test_trivial_dial():
    assert is_dial(make_switch_model(1, 3), [TOP])


def test_switch_as_two_valued_dial():
    m = make_switch_model(1, 3)
    c = is_dial(m, [s0, Not(s0)])
    assert c.ok
    # partition, asserted directly
    for w in m.worlds:
        assert [model_check(m, w, s0), model_check(m, w, Not(s0))].count(True) == 1


def test_dial_value_out_of_reach():
    m = chain_model(2, {"p": [0]})
    c = is_dial(m, [P, Not(P)])
    assert not c.ok
    assert c.violation == ("w1", "cannot reach dial value 0")


def test_dial_scope_restricts_the_check():
    m = chain_model(2, {"p": [0]})
    assert is_dial(m, [P, Not(P)], scope={"w0"})


# -- independence -----------------------------------------------------------------------------


def test_independent_switches():
    m = make_switch_model(2, 3)
    assert independent_switches(m, "l0p0", [s0, s1])
    assert not independent_switches(m, "l0p0", [s0, s0])


def test_switch_fixed_at_the_top_is_not_independent():
    m = Model(Frame(("a", "t"), {("a", "a"), ("a", "t"), ("t", "t")}), {"a": set(), "t": {"s0"}})
    assert not independent_switches(m, "a", [s0])


def test_independent_buttons_with_dial():
    m = make_button_dial_model(2, 3, 8)
    assert independent_buttons_dial(m, [b0, b1], dial(m, 3))
    assert independent_buttons_dial(m, [b0, b1], DialFamily.everywhere(m, [TOP]))
    assert not independent_buttons_dial(m, [b0, b0], dial(m, 3))


# -- witnesses --------------------------------------------------------------------------------


def test_s5_witness_single_switch():
    m = make_switch_model(1, 3)
    f = parse_prop("[](p | q) -> []p | []q")
    r = s5_cap_witness(m, "l0p0", [s0], f)
    assert {a: render(g) for a, g in r.substitution.items()} == {"p": "s0", "q": "~s0"}
    inst = substitute(f, r.substitution)
    assert not any(model_check(m, w, inst) for w in m.worlds)


def test_s5_witness_four_cluster():
    m = make_switch_model(2, 3)
    f = parse_prop("~(<>(p & q) & <>(p & ~q) & <>(~p & q) & <>(~p & ~q))")
    r = s5_cap_witness(m, "l0p0", [s0, s1], f)
    assert r.countermodel.model.frame.size == 4
    assert_witness(m, f, r)


def test_s5_witness_precondition():
    with pytest.raises(PreconditionError):
        s5_cap_witness(make_switch_model(1, 3), "l0p0", [s0], parse_prop("<>[]p -> []<>p"))


def test_s5_witness_needs_enough_switches():
    f = parse_prop("~(<>(p & q) & <>(p & ~q) & <>(~p & q) & <>(~p & ~q))")
    with pytest.raises(PreconditionError):
        s5_cap_witness(make_switch_model(1, 3), "l0p0", [s0], f)


def test_s42_witness_chain():
    m = make_button_dial_model(1, 1, 3)
    f = parse_prop("<>[]p -> p")
    r = s42_cap_witness(m, "l0b0d0", [b0], DialFamily.everywhere(m, [TOP]), f)
    assert {a: render(g) for a, g in r.substitution.items()} == {"p": "b0"}
    assert classify(m, r.world, b0).role == "button"
    assert r.world not in pushed_worlds(m, b0)
    assert_witness(m, f, r)


def test_s42_witness_three_level_chain():
    m = make_button_dial_model(2, 1, 4)
    f = parse_prop("~(~p & ~q & <>(p & ~q & <>(p & q & ~<>~p)) & ~<>(q & ~p))")
    assert decide(f, Theory.S4_2).model.frame.size == 3
    r = s42_cap_witness(m, "l0b0d0", [b0, b1], dial(m, 1), f)
    assert_witness(m, f, r)


def test_s42_witness_branching():
    f = parse_prop("~(<>(p & ~<>q) & <>(q & ~<>p))")
    m = make_button_dial_model(3, 2, 4)
    r = s42_cap_witness(m, "l0b0d0", buttons(3), dial(m, 2), f)
    assert_witness(m, f, r)
    with pytest.raises(PreconditionError):
        small = make_button_dial_model(2, 1, 3)
        s42_cap_witness(small, "l0b0d0", buttons(2), dial(small, 1), f)


def test_s42_witness_precondition():
    m = make_button_dial_model(1, 1, 3)
    with pytest.raises(PreconditionError):
        s42_cap_witness(m, "l0b0d0", [b0], dial(m, 1), parse_prop("[]p -> [][]p"))


def test_witnesses_over_a_corpus_self_certify():
    """Every non-S5 or non-S4.2 formula in a small corpus gets a certified witness or a clean refusal."""
    sw = make_switch_model(3, 2)
    bd = make_button_dial_model(3, 2, 4)
    made = 0
    for f in oracles.corpus(77, 60, max_ops=5):
        for t, host, run in (
            (Theory.S5, sw, lambda f: s5_cap_witness(sw, "l0p0", [Atom(f"s{i}") for i in range(3)], f)),
            (Theory.S4_2, bd, lambda f: s42_cap_witness(bd, "l0b0d0", buttons(3), dial(bd, 2), f)),
        ):
            try:
                r = run(f)
            except PreconditionError:
                continue
            assert_witness(host, f, r)
            made += 1
    assert made > 20


def test_upper_bound_echo_on_button_dial_model():
    m = make_button_dial_model(3, 3, 8)
    rep = logic_fingerprint(m, ["b0", "d0"], 2)
    assert all(r.valid for r in rep["s4.2"])
    r = s42_cap_witness(m, "l0b0d0", buttons(3), dial(m, 3), parse_prop("<>[]p -> p"))
    assert_witness(m, parse_prop("<>[]p -> p"), r)


# -- maximality principle ---------------------------------------------------------------------


def test_mp_on_cluster():
    m = cluster_model(3, {"p": [1]})
    assert all(mp_check(m, w, ["p"], 1) for w in m.worlds)


def test_mp_on_chain():
    m = chain_model(2, {"p": [1]})
    c = mp_check(m, "w0", ["p"], 0)
    assert not c.ok and c.witness == ("<>[]p -> p",)
    assert mp_check(m, "w1", ["p"], 2)
