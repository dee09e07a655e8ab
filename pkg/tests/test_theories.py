import pytest

import oracles
from potentialist import kripke
from potentialist.formula import Atom, parse_prop, render, subformula_closure
from potentialist.kripke import FrameProperty as FP, chain_model, cluster_model
from potentialist.theories import (
    SCHEMES, CertificationError, Countermodel, Inconclusive, Theory, Valid, axioms, brute_countermodel,
    certify_countermodel, decide, filtration_bound, generate_pool, instantiate, logic_fingerprint,
)

S4, S42, S5, K = Theory.S4, Theory.S4_2, Theory.S5, Theory.K
P, Q = Atom("p"), Atom("q")

DOT2 = parse_prop("<>[]p -> []<>p")
FIVE = parse_prop("<>[]p -> p")


def assert_certified(f, t, v):
    assert isinstance(v, Countermodel)
    assert not kripke.model_check(v.model, v.world, f)
    assert not oracles.holds(v.model.to_json(), v.world, f)
    for prop in t.frame_class:
        assert kripke.frame_property(v.model.frame, prop)


def test_axiom_lists():
    assert [n for n, _ in axioms(S4)] == ["K", "Dual", "S", "4"]
    assert [n for n, _ in axioms(S42)] == ["K", "Dual", "S", "4", ".2"]
    assert [n for n, _ in axioms(S5)] == ["K", "Dual", "S", "4", "5"]
    assert instantiate(SCHEMES[".2"], P) == DOT2


def test_theory_parse():
    assert Theory.parse("S4.2") is S42 and Theory.parse("s4_2") is S42
    with pytest.raises(ValueError):
        Theory.parse("s4.3")


def test_decide_examples():
    assert isinstance(decide(parse_prop("[](p -> q) -> ([]p -> []q)"), S4, 16), Valid)
    v = decide(DOT2, S4, 16)
    assert_certified(DOT2, S4, v)
    assert v.model.frame.size == 3
    assert not kripke.frame_property(v.model.frame, FP.DIRECTED)
    assert isinstance(decide(DOT2, S42, 16), Valid)
    v = decide(FIVE, S42, 16)
    assert_certified(FIVE, S42, v)
    assert v.model.frame.size == 2


def test_valid_carries_filtration_bound():
    v = decide(DOT2, S42)
    assert v.searched_bound == filtration_bound(DOT2) == 2 ** 6


@pytest.mark.parametrize("t", list(Theory))
@pytest.mark.parametrize("name", ["K", "Dual", "S", "4", ".2", "5"])
def test_axiom_instances(t, name):
    expected = name in dict(axioms(t)) or (t is S5 and name == ".2")
    if t is K and name in ("S", "4", ".2", "5"):
        expected = False
    f = instantiate(SCHEMES[name], P, Q)
    v = decide(f, t)
    if expected:
        assert isinstance(v, Valid), (t, name, v)
    else:
        assert_certified(f, t, v)


def test_separations_are_small():
    for f, t in ((DOT2, S4), (FIVE, S42)):
        v = decide(f, t)
        assert_certified(f, t, v)
        assert v.model.frame.size <= 3


def test_theory_chain_on_corpus():
    for f in oracles.corpus(1234, 200):
        verdicts = [decide(f, t) for t in (S4, S42, S5)]
        for weaker, stronger in zip(verdicts, verdicts[1:]):
            if isinstance(weaker, Valid):
                assert isinstance(stronger, Valid), render(f)
        for t, v in zip((S4, S42, S5), verdicts):
            if isinstance(v, Countermodel):
                assert_certified(f, t, v)


def test_valid_verdicts_agree_with_oracle_on_small_closures():
    seen = 0
    for f in oracles.corpus(99, 300, max_ops=4):
        if len(subformula_closure(f)) > 4:
            continue
        for t in Theory:
            v = decide(f, t)
            if isinstance(v, Valid):
                seen += 1
                assert not oracles.has_countermodel(f, t.value, 4 if t is K else 5), (render(f), t)
    assert seen > 20


def test_elimination_agrees_with_brute_force():
    """With cap 1 the brute search stops at one world and type elimination decides."""
    checked = 0
    for f in oracles.corpus(4321, 150, max_ops=5):
        for t in (S4, S42, S5):
            full = decide(f, t)
            small = decide(f, t, cap=1)
            if isinstance(small, Valid):
                assert isinstance(full, Valid), (render(f), t)
            elif isinstance(small, Countermodel):
                assert_certified(f, t, small)
            else:
                assert isinstance(small, Inconclusive)
                assert isinstance(full, Countermodel), (render(f), t)
                checked += 1
    assert checked > 0


# distinct valuations in a chain whose last world cannot see the first
CHAIN4 = parse_prop("~(p & ~q & ~r & <>(~p & q & ~r & <>(~p & ~q & r & <>(p & q & r & ~<>(p & ~q & ~r)))))")
CHAIN5 = parse_prop(
    "~(p & ~q & ~r & <>(~p & q & ~r & <>(~p & ~q & r & <>(p & q & ~r & <>(p & q & r & ~<>(p & ~q & ~r))))))"
)


@pytest.mark.parametrize("f,t,brute_reach,smallest", [
    (CHAIN4, K, 3, 4), (CHAIN4, S4, 3, 4), (CHAIN5, S42, 4, 5),
])
def test_elimination_builds_countermodels_past_the_brute_budget(f, t, brute_reach, smallest):
    cm, reach = brute_countermodel(f, t, 16)
    assert cm is None and reach == brute_reach
    assert not oracles.has_countermodel(f, t.value, smallest - 1)
    v = decide(f, t, 16)
    assert_certified(f, t, v)
    assert smallest <= v.model.frame.size <= smallest + 1
    assert isinstance(decide(f, t, smallest - 1), Inconclusive)


def test_chain_formulas_are_s5_valid():
    for f in (CHAIN4, CHAIN5):
        assert isinstance(decide(f, S5), Valid)
    assert not oracles.has_countermodel(CHAIN4, "s5", 5)


def test_certification_guard():
    bogus = Countermodel(cluster_model(1, {"p": [0]}), "w0")
    with pytest.raises(CertificationError):
        certify_countermodel(FIVE, S5, bogus)


def test_bad_cap():
    with pytest.raises(ValueError):
        decide(P, S4, cap=0)


# -- fingerprint -------------------------------------------------------------------------------


def _valid_schemes(report, theory):
    return {r.scheme: r.valid for r in report[theory]}


def test_fingerprint_single_world():
    rep = logic_fingerprint(cluster_model(1), ["p"], 1)
    assert all(_valid_schemes(rep, "s5").values())


def test_fingerprint_two_chain():
    rep = logic_fingerprint(chain_model(2, {"p": [1]}), ["p"], 1)
    assert all(_valid_schemes(rep, "s4").values())
    five = next(r for r in rep["s5"] if r.scheme == "5")
    assert not five.valid
    assert ("<>[]p -> p", ["w0"]) in five.examples


def test_fingerprint_directed_diamond():
    fr = kripke.rt_closure(kripke.Frame(("r", "a", "b", "t"), {("r", "a"), ("r", "b"), ("a", "t"), ("b", "t")}))
    m = kripke.Model(fr, {"r": set(), "a": {"p"}, "b": set(), "t": {"p"}})
    rep = logic_fingerprint(m, ["p"], 1)
    assert all(_valid_schemes(rep, "s4.2").values())


def test_pool_dedupes_by_extension():
    m = chain_model(2, {"p": [1]})
    pool = generate_pool(["p"], 2, model=m)
    exts = [kripke.extension(m, g) for g in pool]
    assert len(exts) == len(set(exts)) == 4
    assert generate_pool(["p"], 0) == [P]
