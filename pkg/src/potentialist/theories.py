"""The modal theories K, S4, S4.2 and S5, and a semantic decision procedure.

``decide`` first runs an exhaustive countermodel search over small models of
the theory's frame class (size, then relation bitmask, then valuation bitmask,
ascending).  Past the sizes that search can afford, it runs an elimination
over *types*: truth assignments to the subformulas of ``f`` that are
boolean-consistent.  Every filtrated model has its worlds among the types, so
an elimination that leaves no type refuting ``f`` exhausts every model up to
the filtration bound ``2**|sub(f)|``; a surviving refuting type yields an
explicit countermodel, which is re-checked before being returned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kripke
from .formula import (
    Atom, And, Bottom, Box, Diamond, Formula, Iff, Implies, Not, Or, Top,
    atoms, parse_prop, render, subformula_closure, subformulas, substitute,
)
from .kripke import CapExceeded, FrameProperty, Model

DEFAULT_CAP = 12
# largest (frames x valuations) product the brute-force phase takes on per size
BRUTE_BUDGET = 1 << 20
MAX_TYPE_BITS = 16


class Theory(enum.Enum):
    K = "k"
    S4 = "s4"
    S4_2 = "s4.2"
    S5 = "s5"

    @classmethod
    def parse(cls, text: str) -> "Theory":
        key = text.strip().lower().replace("_", ".")
        for t in cls:
            if t.value == key:
                return t
        raise ValueError(f"unknown theory {text!r}; choose from k, s4, s4.2, s5")

    @property
    def frame_class(self) -> frozenset:
        R, T, D = FrameProperty.REFLEXIVE, FrameProperty.TRANSITIVE, FrameProperty.DIRECTED
        return {
            Theory.K: frozenset(),
            Theory.S4: frozenset({R, T}),
            Theory.S4_2: frozenset({R, T, D}),
            Theory.S5: frozenset({FrameProperty.EQUIVALENCE}),
        }[self]


PHI = Atom("phi")
PSI = Atom("psi")

SCHEMES: Dict[str, Formula] = {
    "K": parse_prop("[](phi -> psi) -> ([]phi -> []psi)"),
    "Dual": parse_prop("~<>phi <-> []~phi"),
    "S": parse_prop("[]phi -> phi"),
    "4": parse_prop("[]phi -> [][]phi"),
    ".2": parse_prop("<>[]phi -> []<>phi"),
    "5": parse_prop("<>[]phi -> phi"),
}

_AXIOM_NAMES = {
    Theory.K: ("K", "Dual"),
    Theory.S4: ("K", "Dual", "S", "4"),
    Theory.S4_2: ("K", "Dual", "S", "4", ".2"),
    Theory.S5: ("K", "Dual", "S", "4", "5"),
}


def axioms(t: Theory) -> List[Tuple[str, Formula]]:
    """Named axiom schemes over the metavariables ``phi`` and ``psi``."""
    return [(name, SCHEMES[name]) for name in _AXIOM_NAMES[t]]


def instantiate(scheme: Formula, phi: Formula, psi: Optional[Formula] = None) -> Formula:
    s = {"phi": phi}
    if psi is not None:
        s["psi"] = psi
    return substitute(scheme, s)


# -- verdicts -----------------------------------------------------------------------


@dataclass(frozen=True)
class Valid:
    searched_bound: int

    def __str__(self):
        return "Valid"


@dataclass(frozen=True)
class Countermodel:
    model: Model
    world: str

    def __str__(self):
        return f"Countermodel at {self.world}"


@dataclass(frozen=True)
class Inconclusive:
    cap: int

    def __str__(self):
        return f"Inconclusive (cap {self.cap})"


Verdict = object  # Valid | Countermodel | Inconclusive


# -- brute force ------------------------------------------------------------------------


def _brute_sizes(t: Theory, nat: int, limit: int):
    for n in range(1, limit + 1):
        nval = 1 << (n * nat)
        if t is Theory.S5:
            free_bits = 0
        elif t is Theory.K:
            free_bits = n * n
        else:
            free_bits = n * n - n
        if free_bits > 20 or nval > BRUTE_BUDGET or n * n > 62:
            return
        if t is Theory.S5:
            masks = _cluster_mask(n)
        else:
            masks = kripke.frame_masks(n, t.frame_class)
        if len(masks) * nval > BRUTE_BUDGET:
            return
        yield n, masks


def _cluster_mask(n: int):
    return np.array([(1 << (n * n)) - 1], dtype=np.int64)


def brute_countermodel(f: Formula, t: Theory, limit: int):
    """First countermodel in deterministic order among the affordable sizes ``<= limit``.

    Returns ``(countermodel or None, largest size fully searched)``.
    """
    names = atoms(f)
    searched = 0
    for n, masks in _brute_sizes(t, len(names), limit):
        hit = kripke.first_failure(f, n, masks, names)
        if hit is not None:
            rel, val, world = hit
            m = kripke.model_from_masks(n, rel, names, val)
            return Countermodel(m, m.worlds[world]), n
        searched = n
    return None, searched


# -- type elimination ---------------------------------------------------------------------


class _Types:
    """All boolean-consistent truth assignments to the subformulas of ``f``."""

    def __init__(self, f: Formula):
        self.f = f
        sub = subformula_closure(f)
        order = {g: i for i, g in enumerate(subformulas(f))}
        self.atoms = atoms(f)
        self.modal = sorted((g for g in sub if isinstance(g, (Box, Diamond))), key=order.get)
        bits = len(self.atoms) + len(self.modal)
        if bits > MAX_TYPE_BITS:
            raise CapExceeded(f"{bits} atoms and modal subformulas exceed the type cap {MAX_TYPE_BITS}")
        self.count = 1 << bits
        na = len(self.atoms)
        # per type: truth of f, of each modal node, of each modal node's body
        self.f_true = 0
        self.node = [0] * len(self.modal)
        self.body = [0] * len(self.modal)
        for tix in range(self.count):
            val: Dict[Formula, bool] = {}
            for j, a in enumerate(self.atoms):
                val[Atom(a)] = bool(tix >> j & 1)
            for j, g in enumerate(self.modal):
                val[g] = bool(tix >> (na + j) & 1)
            ev = _boolean_eval(val)
            bit = 1 << tix
            if ev(f):
                self.f_true |= bit
            for j, g in enumerate(self.modal):
                if val[g]:
                    self.node[j] |= bit
                if ev(g.body):
                    self.body[j] |= bit
        self.full = (1 << self.count) - 1
        # necessity slots: a box that holds, or a diamond that fails
        self.nec = []
        self.sat = []
        for tix in range(self.count):
            nec = sat = 0
            for j, g in enumerate(self.modal):
                on = self.node[j] >> tix & 1
                body = self.body[j] >> tix & 1
                if isinstance(g, Box):
                    nec |= on << j
                    sat |= body << j
                else:
                    nec |= (1 - on) << j
                    sat |= (1 - body) << j
            self.nec.append(nec)
            self.sat.append(sat)
        # demand sets: types that can serve as witnesses
        self.demand_targets = []
        for j, g in enumerate(self.modal):
            self.demand_targets.append(self.full & ~self.body[j] if isinstance(g, Box) else self.body[j])

    def demands(self, tix: int) -> List[int]:
        out = []
        for j, g in enumerate(self.modal):
            on = self.node[j] >> tix & 1
            if isinstance(g, Box) and not on:
                out.append(self.demand_targets[j])
            elif isinstance(g, Diamond) and on:
                out.append(self.demand_targets[j])
        return out

    def reflexive(self, tix: int) -> bool:
        return self.nec[tix] & ~self.sat[tix] == 0

    def mask(self, pred) -> int:
        return sum(1 << t for t in range(self.count) if pred(t))


def _boolean_eval(val: Dict[Formula, bool]):
    def ev(g: Formula) -> bool:
        if g in val:
            return val[g]
        if isinstance(g, Top):
            return True
        if isinstance(g, Bottom):
            return False
        if isinstance(g, Not):
            return not ev(g.body)
        if isinstance(g, And):
            return ev(g.left) and ev(g.right)
        if isinstance(g, Or):
            return ev(g.left) or ev(g.right)
        if isinstance(g, Implies):
            return (not ev(g.left)) or ev(g.right)
        if isinstance(g, Iff):
            return ev(g.left) == ev(g.right)
        raise TypeError(f"not a propositional modal formula: {g!r}")

    return ev


def _successors(ty: _Types, t: Theory, domain: int) -> Dict[int, int]:
    """Syntactic accessibility between types, restricted to ``domain``."""
    members = [u for u in range(ty.count) if domain >> u & 1]
    cache: Dict[int, int] = {}
    succ = {}
    for tix in members:
        key = ty.nec[tix]
        if key not in cache:
            if t is Theory.K:
                cache[key] = sum(1 << u for u in members if key & ~ty.sat[u] == 0)
            elif t is Theory.S5:
                cache[key] = sum(1 << u for u in members if ty.nec[u] == key)
            else:
                cache[key] = sum(1 << u for u in members if key & ~ty.nec[u] == 0)
        succ[tix] = cache[key]
    return succ


def _eliminate(ty: _Types, alive: int, succ: Dict[int, int], fixed: int = 0) -> int:
    changed = True
    while changed:
        changed = False
        for tix in range(ty.count):
            if not (alive >> tix & 1) or fixed >> tix & 1:
                continue
            reach = succ[tix] & alive
            if any(not reach & d for d in ty.demands(tix)):
                alive &= ~(1 << tix)
                changed = True
    return alive


def _elimination(ty: _Types, t: Theory):
    """Surviving types, their successor map and the final-cluster mask, or ``None`` if valid."""
    if t is Theory.K:
        domain = ty.full
    else:
        domain = ty.mask(ty.reflexive)
    if t is not Theory.S4_2:
        succ = _successors(ty, t, domain)
        alive = _eliminate(ty, domain, succ)
        if alive & ~ty.f_true:
            return alive, succ, 0
        return None
    # S4.2: guess the box-profile of the final cluster
    profiles = sorted({ty.nec[u] for u in range(ty.count) if domain >> u & 1})
    for top in profiles:
        cluster = sum(1 << u for u in range(ty.count) if domain >> u & 1 and ty.nec[u] == top)
        cluster = _eliminate(ty, cluster, _successors(ty, Theory.S5, cluster))
        if not cluster:
            continue
        below = sum(
            1 << u for u in range(ty.count)
            if domain >> u & 1 and ty.nec[u] != top and ty.nec[u] & ~top == 0
        )
        succ = _successors(ty, Theory.S4, cluster | below)
        alive = _eliminate(ty, cluster | below, succ, fixed=cluster)
        if alive & ~ty.f_true:
            return alive, succ, cluster
    return None


def _type_model(ty: _Types, alive: int, succ: Dict[int, int], anchor: int = 0) -> Countermodel:
    """A small countermodel cut out of the surviving types.

    Starting from the least refuting type, each demand is met by a type that
    is already chosen where possible, else by the least new one.  Boxes stay
    true on the subset because accessibility is inherited, so the truth lemma
    holds.  ``anchor`` marks final-cluster types under S4.2; one of them is
    always included so the chosen frame stays directed.
    """
    root = _lowest(alive & ~ty.f_true)
    chosen = [root]
    mask = 1 << root
    if anchor and not anchor >> root & 1:
        top = _lowest(anchor & alive)
        chosen.append(top)
        mask |= 1 << top
    k = 0
    while k < len(chosen):
        u = chosen[k]
        k += 1
        reach = succ[u] & alive
        for d in ty.demands(u):
            if reach & d & mask:
                continue
            v = _lowest(reach & d)
            chosen.append(v)
            mask |= 1 << v
    names = {u: f"w{i}" for i, u in enumerate(chosen)}
    rel = {(names[u], names[v]) for u in chosen for v in chosen if succ[u] >> v & 1}
    val = {
        names[u]: frozenset(a for j, a in enumerate(ty.atoms) if u >> j & 1)
        for u in chosen
    }
    m = Model(kripke.Frame(tuple(names[u] for u in chosen), frozenset(rel)), val)
    return Countermodel(m, names[root])


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def filtration_bound(f: Formula) -> int:
    return 2 ** len(subformula_closure(f))


class CertificationError(AssertionError):
    """A returned witness failed its own re-check: an engine bug, never a verdict."""


def certify_countermodel(f: Formula, t: Theory, cm: Countermodel) -> None:
    if kripke.model_check(cm.model, cm.world, f):
        raise CertificationError(f"countermodel for {render(f)} does not refute it")
    for prop in t.frame_class:
        if not kripke.frame_property(cm.model.frame, prop):
            raise CertificationError(f"countermodel for {render(f)} is not {prop.value}")


def decide(f: Formula, t: Theory, cap: int = DEFAULT_CAP):
    """``Valid``, a self-checked ``Countermodel``, or ``Inconclusive``."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    bound = filtration_bound(f)
    cm, _ = brute_countermodel(f, t, min(cap, bound))
    if cm is not None:
        certify_countermodel(f, t, cm)
        return cm
    try:
        ty = _Types(f)
    except CapExceeded:
        return Inconclusive(cap)
    found = _elimination(ty, t)
    if found is None:
        return Valid(bound)
    cm = _type_model(ty, *found)
    certify_countermodel(f, t, cm)
    if cm.model.frame.size > cap:
        return Inconclusive(cap)
    return cm


# -- logic fingerprint ----------------------------------------------------------------------

FINGERPRINT_THEORIES = (Theory.S4, Theory.S4_2, Theory.S5)
MAX_POOL_ATOMS = 4
MAX_POOL_DEPTH = 3
MAX_POOL_SIZE = 4096


def generate_pool(pool: Sequence, depth: int, model: Optional[Model] = None) -> List[Formula]:
    """Formulas built from ``pool`` with ``~ [] <> & | ->`` up to nesting ``depth``.

    With a model, formulas with an already-seen extension are dropped, so the
    result holds one representative (the first generated) per truth set.
    """
    base = [Atom(p) if isinstance(p, str) else p for p in pool]
    if len(base) > MAX_POOL_ATOMS:
        raise CapExceeded(f"pool of {len(base)} exceeds the cap of {MAX_POOL_ATOMS}")
    if depth > MAX_POOL_DEPTH:
        raise CapExceeded(f"depth {depth} exceeds the cap of {MAX_POOL_DEPTH}")
    out: List[Formula] = []
    seen = set()

    def add(g: Formula) -> None:
        key = kripke.extension(model, g) if model is not None else g
        if key in seen:
            return
        seen.add(key)
        out.append(g)
        if len(out) > MAX_POOL_SIZE:
            raise CapExceeded(f"pool grew past {MAX_POOL_SIZE} formulas")

    for g in base:
        add(g)
    layers = [list(out)]
    for _ in range(depth):
        prev = layers[-1]
        older = [g for layer in layers for g in layer]
        start = len(out)
        for g in prev:
            for op in (Not, Box, Diamond):
                add(op(g))
        for g in older:
            for h in older:
                if g not in prev and h not in prev:
                    continue
                for op in (And, Or, Implies):
                    add(op(g, h))
        layers.append(out[start:])
    return out


@dataclass
class SchemeReport:
    theory: str
    scheme: str
    instances: int = 0
    failed: int = 0
    examples: List[Tuple[str, List[str]]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.failed == 0


def logic_fingerprint(m: Model, atom_pool: Sequence[str], depth: int, max_examples: int = 5) -> Dict[str, List[SchemeReport]]:
    """Which axiom instances over the generated pool hold at every world of ``m``.

    Instances are taken over one representative formula per truth set, which
    loses nothing: an instance's truth depends only on the truth sets of what
    is substituted.
    """
    pool = generate_pool(atom_pool, depth, model=m)
    full = (1 << m.frame.size) - 1
    succ = m.frame.succ
    ext = {g: kripke.extension(m, g) for g in pool}
    done: Dict[str, SchemeReport] = {}
    out: Dict[str, List[SchemeReport]] = {}
    for t in FINGERPRINT_THEORIES:
        reports = []
        for name, scheme in axioms(t):
            if name not in done:
                rep = SchemeReport(t.value, name)
                two = "psi" in atoms(scheme)
                for g in pool:
                    for h in (pool if two else [None]):
                        masks = {"phi": ext[g]}
                        if h is not None:
                            masks["psi"] = ext[h]
                        rep.instances += 1
                        e = kripke.extension_masks(succ, masks, scheme)
                        if e != full:
                            rep.failed += 1
                            if len(rep.examples) < max_examples:
                                rep.examples.append(
                                    (render(instantiate(scheme, g, h)), m.frame.worlds_of(full & ~e))
                                )
                done[name] = rep
            reports.append(done[name])
        out[t.value] = reports
    return out


def fingerprint_json(report: Dict[str, List[SchemeReport]]) -> dict:
    return {
        theory: [
            {
                "scheme": r.scheme,
                "instances": r.instances,
                "valid": r.valid,
                "failures": r.failed,
                "examples": [{"instance": i, "worlds": ws} for i, ws in r.examples],
            }
            for r in reps
        ]
        for theory, reps in report.items()
    }
