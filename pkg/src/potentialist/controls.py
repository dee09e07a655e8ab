"""Control statements on finite Kripke models: switches, buttons, dials.

Also the two labeling constructions that turn an independent family of
controls into a failing substitution instance of a formula outside S5 (from
switches) or outside S4.2 (from buttons plus a dial).  Both constructions
re-check their own output and raise ``CertificationError`` when the instance
does not actually fail.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from . import kripke
from .formula import (
    Atom, Box, Diamond, Formula, Not, TOP, BOTTOM, atoms, conj, disj, render, substitute,
)
from .kripke import CapExceeded, Check, Frame, Model, extension
from .theories import CertificationError, Countermodel, Theory, decide, generate_pool

MAX_SWITCHES = 6
MAX_BUTTONS = 6
MAX_DIAL = 12
MAX_WORLDS = 4096


class PreconditionError(ValueError):
    """The inputs do not meet the operation's stated precondition."""


def _as_formula(s) -> Formula:
    if isinstance(s, Formula):
        return s
    from .formula import parse_prop
    return parse_prop(s)


# -- classification ----------------------------------------------------------------


@dataclass(frozen=True)
class ControlReport:
    statement: Formula
    role: str  # "switch" | "button" | "neither"
    pushed: Optional[FrozenSet[str]] = None
    also_button: bool = False
    violation: Optional[Tuple[str, str]] = None  # (world, reason)

    def to_json(self) -> dict:
        out = {"statement": render(self.statement), "role": self.role}
        if self.pushed is not None:
            out["pushed"] = sorted(self.pushed)
        if self.role == "switch":
            out["also_button"] = self.also_button
        if self.violation is not None:
            out["violation"] = {"world": self.violation[0], "reason": self.violation[1]}
        return out


def switch_violation(m: Model, w: str, s: Formula) -> Optional[Tuple[str, str]]:
    """First world accessed from ``w`` where ``<>s`` or ``<>~s`` fails."""
    fr = m.frame
    pos = extension(m, Diamond(s))
    neg = extension(m, Diamond(Not(s)))
    for u in fr.successors(w):
        i = fr.index(u)
        if not pos >> i & 1:
            return (u, f"<>{render(s) if _atomic(s) else '(' + render(s) + ')'} fails")
        if not neg >> i & 1:
            return (u, f"<>~{render(s) if _atomic(s) else '(' + render(s) + ')'} fails")
    return None


def _atomic(s: Formula) -> bool:
    return isinstance(s, Atom) or render(s) in ("true", "false")


def button_violation(m: Model, b: Formula) -> Optional[Tuple[str, str]]:
    ext = extension(m, Diamond(Box(b)))
    full = (1 << m.frame.size) - 1
    if ext == full:
        return None
    missing = full & ~ext
    i = (missing & -missing).bit_length() - 1
    return (m.worlds[i], "<>[]b fails")


def pushed_worlds(m: Model, b: Formula) -> FrozenSet[str]:
    return frozenset(m.frame.worlds_of(extension(m, Box(b))))


def classify(m: Model, w: str, s) -> ControlReport:
    """Switch at ``w``, button (globally), or neither with the first violation.

    A statement that is both is reported as a switch with ``also_button`` set.
    """
    s = _as_formula(s)
    m.frame.index(w)
    sv = switch_violation(m, w, s)
    bv = button_violation(m, s)
    if sv is None:
        return ControlReport(s, "switch", pushed_worlds(m, s) if bv is None else None, bv is None)
    if bv is None:
        return ControlReport(s, "button", pushed_worlds(m, s))
    return ControlReport(s, "neither", violation=sv)


# -- dials ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DialFamily:
    statements: Tuple[Formula, ...]
    scope: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "statements", tuple(_as_formula(d) for d in self.statements))
        object.__setattr__(self, "scope", frozenset(self.scope))
        if not self.statements:
            raise ValueError("a dial needs at least one statement")

    @property
    def size(self) -> int:
        return len(self.statements)

    @classmethod
    def everywhere(cls, m: Model, statements) -> "DialFamily":
        return cls(tuple(statements), frozenset(m.worlds))


@dataclass(frozen=True)
class DialCheck:
    ok: bool
    violations: Tuple[Tuple[str, str], ...] = ()

    def __bool__(self):
        return self.ok

    @property
    def violation(self):
        return self.violations[0] if self.violations else None


def dial_values(m: Model, dial: DialFamily) -> List[int]:
    return [extension(m, d) for d in dial.statements]


def is_dial(m: Model, ds, scope=None) -> DialCheck:
    """Partition clause and reach-every-value clause at every scope world.

    All violations are collected, in declared world order.
    """
    dial = ds if isinstance(ds, DialFamily) else DialFamily(
        tuple(ds), frozenset(m.worlds if scope is None else scope))
    fr = m.frame
    exts = dial_values(m, dial)
    bad = []
    for w in fr.worlds:
        if w not in dial.scope:
            continue
        i = fr.index(w)
        hits = [k for k, e in enumerate(exts) if e >> i & 1]
        if len(hits) != 1:
            bad.append((w, f"satisfies {len(hits)} dial statements"))
            continue
        for k, e in enumerate(exts):
            if not fr.succ[i] & e:
                bad.append((w, f"cannot reach dial value {k}"))
                break
    return DialCheck(not bad, tuple(bad))


# -- independence -------------------------------------------------------------------------


def _pattern_masks(m: Model, ss: Sequence[Formula]) -> List[int]:
    """World sets realizing each truth pattern; bit ``k`` of a pattern index is ``ss[k]``."""
    full = (1 << m.frame.size) - 1
    exts = [extension(m, s) for s in ss]
    out = []
    for p in range(1 << len(ss)):
        mask = full
        for k, e in enumerate(exts):
            mask &= e if p >> k & 1 else full & ~e
        out.append(mask)
    return out


def pattern_formula(ss: Sequence[Formula], p: int) -> Formula:
    return conj(s if p >> k & 1 else Not(s) for k, s in enumerate(ss))


def independent_switches(m: Model, w: str, ss) -> Check:
    """Every switch pattern is realized from every world accessed by ``w``.

    Witness on failure: ``(world, pattern formula)``.
    """
    ss = [_as_formula(s) for s in ss]
    if len(ss) > MAX_SWITCHES:
        raise CapExceeded(f"{len(ss)} switches exceed the cap of {MAX_SWITCHES}")
    fr = m.frame
    pats = _pattern_masks(m, ss)
    for u in fr.successors(w):
        su = fr.succ[fr.index(u)]
        for p, mask in enumerate(pats):
            if not su & mask:
                return Check(False, (u, render(pattern_formula(ss, p))))
    return Check(True)


def independent_buttons_dial(m: Model, bs, dial: DialFamily) -> Check:
    """Buttons independent of each other and of a dial.

    (i) some world has every button unpushed; (ii) from every scope world, for
    every unpushed button and every dial value, some accessed world pushes that
    button, keeps every other unpushed button unpushed, and shows that value;
    (iii) from every scope world every dial value is reachable without pushing
    anything.  The dial itself must pass ``is_dial`` on its scope.
    """
    bs = [_as_formula(b) for b in bs]
    if len(bs) > MAX_BUTTONS:
        raise CapExceeded(f"{len(bs)} buttons exceed the cap of {MAX_BUTTONS}")
    fr = m.frame
    full = (1 << fr.size) - 1
    for b in bs:
        v = button_violation(m, b)
        if v is not None:
            return Check(False, (v[0], f"{render(b)} is not a button: {v[1]}"))
    dc = is_dial(m, dial)
    if not dc:
        return Check(False, dc.violation)
    pushed = [extension(m, Box(b)) for b in bs]
    none_pushed = full
    for p in pushed:
        none_pushed &= ~p
    if not none_pushed:
        return Check(False, (None, "no world has every button unpushed"))
    values = dial_values(m, dial)
    for w in fr.worlds:
        if w not in dial.scope:
            continue
        i = fr.index(w)
        unpushed = [k for k, p in enumerate(pushed) if not p >> i & 1]
        still = fr.succ[i]
        for k in unpushed:
            still &= ~pushed[k]
        for d, val in enumerate(values):
            if not still & val:
                return Check(False, (w, f"cannot set dial value {d} without pushing a button"))
        for k in unpushed:
            target = fr.succ[i] & pushed[k]
            for j in unpushed:
                if j != k:
                    target &= ~pushed[j]
            for d, val in enumerate(values):
                if not target & val:
                    return Check(False, (w, f"cannot push {render(bs[k])} alone with dial value {d}"))
    return Check(True)


# -- labeling witnesses ----------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessResult:
    substitution: Dict[str, Formula]
    world: str
    instance: Formula
    countermodel: Countermodel
    notes: Tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "substitution": {a: render(g) for a, g in self.substitution.items()},
            "world": self.world,
            "instance": render(self.instance),
            "notes": list(self.notes),
        }


def _certify(m: Model, world: str, f: Formula, sub: Dict[str, Formula]) -> Formula:
    inst = substitute(f, sub)
    if kripke.model_check(m, world, inst):
        raise CertificationError(f"labeled instance {render(inst)} holds at {world}")
    return inst


def _countermodel(f: Formula, t: Theory, cap: int) -> Countermodel:
    v = decide(f, t, cap)
    if not isinstance(v, Countermodel):
        raise PreconditionError(f"{render(f)} is not refuted in {t.value} within cap {cap}: {v}")
    return v


def s5_cap_witness(m: Model, w: str, ss, f, cap: int = 12) -> WitnessResult:
    """Refute a non-S5 formula ``f`` in ``m`` by labeling with independent switches.

    The switch patterns are split, in ascending pattern order, into one group
    per world of an S5 countermodel: pattern ``p`` goes to cluster world
    ``min(p, k-1)``.  Each atom becomes the disjunction of the pattern
    conjunctions of the groups whose cluster world makes it true.
    """
    f = _as_formula(f)
    ss = [_as_formula(s) for s in ss]
    chk = independent_switches(m, w, ss)
    if not chk:
        raise PreconditionError(f"switches not independent at {w}: {chk.witness}")
    cm = _countermodel(f, Theory.S5, cap)
    cluster = cm.model.worlds
    k = len(cluster)
    npat = 1 << len(ss)
    if npat < k:
        raise PreconditionError(f"{len(ss)} switches give {npat} patterns, countermodel cluster has {k} worlds")
    group = [min(p, k - 1) for p in range(npat)]

    def label(members: List[int]) -> Formula:
        if len(members) == npat:
            return TOP
        return disj(pattern_formula(ss, p) for p in members)

    sub = {}
    for a in atoms(f):
        sub[a] = label([p for p in range(npat) if a in cm.model.valuation[cluster[group[p]]]])
    target = cluster.index(cm.world)
    pats = _pattern_masks(m, ss)
    fr = m.frame
    want = 0
    for p in range(npat):
        if group[p] == target:
            want |= pats[p]
    hits = fr.succ[fr.index(w)] & want
    if not hits:
        raise CertificationError(f"no world accessed from {w} carries the failing pattern group")
    world = fr.worlds_of(hits)[0]
    inst = _certify(m, world, f, sub)
    notes = (f"{len(ss)} switches, {npat} patterns, countermodel cluster of {k}",)
    return WitnessResult(sub, world, inst, cm, notes)


def _clusters(fr: Frame) -> Tuple[List[List[int]], List[int]]:
    """Clusters in order of first member, and the cluster index of each world."""
    reach = kripke.reachable_masks(fr.succ)
    of = [-1] * fr.size
    clusters: List[List[int]] = []
    for i in range(fr.size):
        if of[i] >= 0:
            continue
        members = [j for j in range(fr.size) if reach[i] >> j & 1 and reach[j] >> i & 1]
        for j in members:
            of[j] = len(clusters)
        clusters.append(members)
    return clusters, of


def s42_cap_witness(m: Model, w: str, bs, dial: DialFamily, f, cap: int = 12) -> WitnessResult:
    """Refute a non-S4.2 formula ``f`` in ``m`` by labeling with buttons and a dial.

    The countermodel is cut down to the part generated by its failing world,
    a directed preorder with a top cluster.  A control state is the set of
    pushed buttons plus the dial value; it is mapped onto that preorder:

    * if the clusters form a chain, ``c`` pushed buttons select the ``c``-th
      cluster from the bottom (capped at the top) -- needs one button per
      step of the chain;
    * otherwise each non-root cluster owns a button: pushed buttons whose
      clusters form a chain select the highest of them, anything else selects
      the top cluster -- needs one button per non-root cluster.

    Within the selected cluster the dial value picks the member (value
    modulo cluster size), so the dial needs as many values as the largest
    cluster.  Atoms become disjunctions over the control states labeled by
    worlds where they hold.
    """
    f = _as_formula(f)
    bs = [_as_formula(b) for b in bs]
    chk = independent_buttons_dial(m, bs, dial)
    if not chk:
        raise PreconditionError(f"buttons and dial not independent: {chk.witness}")
    cm = _countermodel(f, Theory.S4_2, cap)
    sub_model, root = _generated(cm.model, cm.world)
    fr = sub_model.frame
    clusters, of = _clusters(fr)
    reach = kripke.reachable_masks(fr.succ)
    root_c = of[fr.index(root)]
    below = {c: {d for d in range(len(clusters)) if reach[clusters[d][0]] >> clusters[c][0] & 1} for c in range(len(clusters))}
    chain = all(
        c == d or c in below[d] or d in below[c]
        for c in range(len(clusters)) for d in range(len(clusters))
    )
    width = max(len(c) for c in clusters)
    if dial.size < width:
        raise PreconditionError(f"dial has {dial.size} values, countermodel cluster needs {width}")
    nb = len(bs)
    if chain:
        levels = sorted(range(len(clusters)), key=lambda c: len(below[c]))
        need = len(levels) - 1

        def select(A: FrozenSet[int]) -> int:
            return levels[min(len(A), len(levels) - 1)]
    else:
        others = [c for c in range(len(clusters)) if c != root_c]
        top = max(range(len(clusters)), key=lambda c: len(below[c]))
        need = len(others)

        def select(A: FrozenSet[int]) -> int:
            chosen = [others[k] for k in A]
            for c in chosen:
                for d in chosen:
                    if not (c == d or c in below[d] or d in below[c]):
                        return top
            if not chosen:
                return root_c
            return max(chosen, key=lambda c: len(below[c]))
    if nb < need:
        raise PreconditionError(f"{nb} buttons given, labeling needs {need}")
    used = list(range(need))
    states = [(frozenset(A), d) for r in range(need + 1) for A in itertools.combinations(used, r) for d in range(dial.size)]

    def world_of(state) -> str:
        A, d = state
        members = clusters[select(A)]
        return fr.worlds[members[d % len(members)]]

    pushed = [_pushed_formula(m, b) for b in bs]

    def state_formula(state) -> Formula:
        A, d = state
        parts = [pushed[k] if k in A else Not(pushed[k]) for k in used]
        if dial.size > 1:
            parts.append(dial.statements[d])
        return conj(parts)

    sub = {}
    for a in atoms(f):
        true_states = [s for s in states if a in sub_model.valuation[world_of(s)]]
        if len(true_states) == len(states):
            sub[a] = TOP
        elif not true_states:
            sub[a] = BOTTOM
        else:
            sub[a] = disj(state_formula(s) for s in true_states)
    # host world: nothing pushed, dial value = position of the failing world
    root_pos = clusters[of[fr.index(root)]].index(fr.index(root))
    hf = m.frame
    cand = (1 << hf.size) - 1
    for k in used:
        cand &= ~extension(m, Box(bs[k]))
    cand &= extension(m, dial.statements[root_pos])
    cand &= hf.mask_of(x for x in hf.worlds if x in dial.scope)
    cand &= hf.succ[hf.index(w)]
    if not cand:
        raise PreconditionError(f"no scope world accessed from {w} has all buttons unpushed and dial value {root_pos}")
    world = hf.worlds_of(cand)[0]
    inst = _certify(m, world, f, sub)
    shape = "chain" if chain else "branching"
    notes = (f"{shape} countermodel with {len(clusters)} clusters, widest {width}; used {need} buttons, {dial.size} dial values",)
    return WitnessResult(sub, world, inst, cm, notes)


def _pushed_formula(m: Model, b: Formula) -> Formula:
    """``b`` itself when it already agrees with ``[]b`` everywhere, else ``[]b``."""
    if extension(m, b) == extension(m, Box(b)):
        return b
    return Box(b)


def _generated(m: Model, w: str) -> Tuple[Model, str]:
    fr = m.frame
    reach = kripke.reachable_masks(fr.succ)[fr.index(w)]
    keep = fr.worlds_of(reach)
    rel = {(a, b) for a, b in fr.relation if a in keep and b in keep}
    return Model(Frame(tuple(keep), frozenset(rel)), {x: m.valuation[x] for x in keep}), w


# -- maximality principle -------------------------------------------------------------------


def mp_check(m: Model, w: str, pool: Sequence, depth: int) -> Check:
    """``<>[]g -> g`` at ``w`` for every ``g`` generated from ``pool`` up to ``depth``.

    Witness on failure: the first failing instance.
    """
    i = m.frame.index(w)
    for g in generate_pool(pool, depth, model=m):
        inst = Diamond(Box(g)) >> g
        if not extension(m, inst) >> i & 1:
            return Check(False, (render(inst),))
    return Check(True)


# -- synthetic host models -------------------------------------------------------------------


def make_switch_model(n: int, depth: int) -> Model:
    """Worlds are (pattern, level); a world sees every world on its level or above.

    Atom ``s<k>`` holds where bit ``k`` of the pattern is set.
    """
    if n > MAX_SWITCHES or depth < 1 or (1 << n) * depth > MAX_WORLDS:
        raise CapExceeded(f"switch model with n={n}, depth={depth} is out of range")
    worlds = [(lvl, p) for lvl in range(depth) for p in range(1 << n)]
    name = {x: f"l{x[0]}p{x[1]}" for x in worlds}
    rel = {(name[a], name[b]) for a in worlds for b in worlds if a[0] <= b[0]}
    val = {name[x]: frozenset(f"s{k}" for k in range(n) if x[1] >> k & 1) for x in worlds}
    return Model(Frame(tuple(name[x] for x in worlds), frozenset(rel)), val)


def make_button_dial_model(nb: int, nd: int, depth: int) -> Model:
    """Worlds are (pushed button set, dial value, level).

    ``(A, i, l)`` sees ``(B, j, m)`` iff ``A <= B`` and ``l <= m``; the dial
    value is free.  Atom ``b<k>`` holds iff ``k`` is in the set, ``d<j>`` iff
    the dial value is ``j``.
    """
    if nb > MAX_BUTTONS or nd < 1 or nd > MAX_DIAL or depth < 1 or (1 << nb) * nd * depth > MAX_WORLDS:
        raise CapExceeded(f"button-dial model with nb={nb}, nd={nd}, depth={depth} is out of range")
    worlds = [(lvl, A, d) for lvl in range(depth) for A in range(1 << nb) for d in range(nd)]
    name = {x: f"l{x[0]}b{x[1]}d{x[2]}" for x in worlds}
    rel = {
        (name[a], name[b]) for a in worlds for b in worlds
        if a[0] <= b[0] and a[1] & ~b[1] == 0
    }
    val = {
        name[x]: frozenset([f"b{k}" for k in range(nb) if x[1] >> k & 1] + [f"d{x[2]}"])
        for x in worlds
    }
    return Model(Frame(tuple(name[x] for x in worlds), frozenset(rel)), val)


def dial_atoms(nd: int) -> List[Formula]:
    return [Atom(f"d{j}") for j in range(nd)]
