"""A finite toy potentialist system of transitive hereditarily finite sets.

World ``T(S, h)`` has domain ``h`` (the von Neumann ordinal, i.e. the
ordinals below ``h``) together with the truncated multiple-sets
``{m*k : k < K}`` for each ``m`` in ``S``.  Worlds are ordered by inclusion
of domains.  Finite transitive sets are rigid, so the embedding clause of the
accessibility relation holds vacuously and inclusion is all that remains.

Height-mod-``m`` observables play the dial, "the set ``{m*k : k < K}``
exists" plays button ``m``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .formula import (
    And, Bottom, Box, Diamond, Equal, Exists, Forall, Formula, Iff, Implies, Member, Not, Or, Top,
    children, disj, free_vars, is_modal_free, parse_fo, potentialist_translate, render,
)
from .kripke import CapExceeded, Check, Frame, Model

MAX_HEIGHT_CAP = 40
MAX_MULTIPLIERS = 4
MAX_K = 8


class HfSet:
    """Canonical hereditarily finite set.

    Members are kept sorted by ``(rank, members' keys)`` and deduplicated, so
    structural equality is extensional equality.
    """

    __slots__ = ("elements", "rank", "key", "_hash", "_members")

    def __init__(self, elements: Iterable["HfSet"] = ()):
        uniq = {e.key: e for e in elements}
        self.elements: Tuple[HfSet, ...] = tuple(uniq[k] for k in sorted(uniq))
        self.rank: int = 1 + max(e.rank for e in self.elements) if self.elements else 0
        self.key = (self.rank, tuple(e.key for e in self.elements))
        self._hash = hash(self.key)
        self._members = frozenset(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, HfSet) and self.key == other.key

    def __lt__(self, other: "HfSet") -> bool:
        return self.key < other.key

    def __hash__(self) -> int:
        return self._hash

    def __contains__(self, x: "HfSet") -> bool:
        return x in self._members

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        return f"HfSet({to_literal(self)!r})"

    def __str__(self) -> str:
        return show(self)


EMPTY = HfSet()


@lru_cache(maxsize=None)
def ordinal(n: int) -> HfSet:
    """The von Neumann ordinal ``n = {0, ..., n-1}``."""
    return HfSet(ordinal(k) for k in range(n))


def as_ordinal(x: HfSet) -> Optional[int]:
    n = len(x)
    return n if x == ordinal(n) else None


def show(x: HfSet) -> str:
    n = as_ordinal(x)
    if n is not None:
        return str(n)
    return "{" + ", ".join(show(e) for e in x) + "}"


def hf_rank(x: HfSet) -> int:
    return x.rank


def to_literal(x: HfSet) -> list:
    """Nested-array literal: ``[]`` is the empty set, ``[[]]`` is ``{0}``."""
    return [to_literal(e) for e in x]


def from_literal(lit) -> HfSet:
    if not isinstance(lit, list):
        raise ValueError(f"HF literal must be a nested list, got {lit!r}")
    return HfSet(from_literal(e) for e in lit)


def multiples(m: int, K: int) -> HfSet:
    """``{m*k : k < K}`` as a set of ordinals."""
    return HfSet(ordinal(m * k) for k in range(K))


def is_transitive(domain: FrozenSet[HfSet]) -> bool:
    return all(e in domain for x in domain for e in x)


@dataclass(frozen=True)
class ToyWorld:
    id: str
    domain: FrozenSet[HfSet]
    buttons: Tuple[int, ...] = ()
    level: Optional[int] = None  # the h in T(S, h), when built by make_toy_system

    def __post_init__(self):
        object.__setattr__(self, "domain", frozenset(self.domain))
        if not is_transitive(self.domain):
            raise ValueError(f"world {self.id} has a non-transitive domain")

    @property
    def height(self) -> int:
        """Least ordinal not in the domain."""
        h = 0
        while ordinal(h) in self.domain:
            h += 1
        return h

    @property
    def members(self) -> List[HfSet]:
        return sorted(self.domain)

    def includes(self, other: "ToyWorld") -> bool:
        return other.domain <= self.domain


def world_id(S: Sequence[int], h: int) -> str:
    return f"T({','.join(map(str, S))};{h})"


class ToySystem:
    """Worlds ordered by domain inclusion; ``top`` is the world holding every set, if any."""

    def __init__(self, worlds: Sequence[ToyWorld], K: Optional[int] = None):
        self.worlds: List[ToyWorld] = list(worlds)
        if len({w.id for w in self.worlds}) != len(self.worlds):
            raise ValueError("world ids must be unique")
        self.K = K
        self._by_id = {w.id: i for i, w in enumerate(self.worlds)}
        n = len(self.worlds)
        self.succ: List[List[int]] = [
            [j for j in range(n) if self.worlds[i].domain <= self.worlds[j].domain] for i in range(n)
        ]
        union = frozenset().union(*(w.domain for w in self.worlds)) if self.worlds else frozenset()
        self.universe = union
        self.top: Optional[ToyWorld] = next((w for w in self.worlds if w.domain == union), None)

    def __len__(self) -> int:
        return len(self.worlds)

    def world(self, wid: str) -> ToyWorld:
        try:
            return self.worlds[self._by_id[wid]]
        except KeyError:
            raise KeyError(f"unknown world {wid!r}") from None

    def index(self, w: ToyWorld) -> int:
        return self._by_id[w.id]

    def successors(self, w: ToyWorld) -> List[ToyWorld]:
        return [self.worlds[j] for j in self.succ[self.index(w)]]

    def without(self, wid: str) -> "ToySystem":
        return ToySystem([w for w in self.worlds if w.id != wid], self.K)

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "top": self.top.id if self.top else None,
            "worlds": [
                {
                    "id": w.id,
                    "buttons": list(w.buttons),
                    "level": w.level,
                    "height": w.height,
                    "domain": [to_literal(x) for x in w.members],
                }
                for w in self.worlds
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ToySystem":
        allowed = {"K", "top", "worlds", "max_height", "multipliers"}
        extra = set(data) - allowed
        if extra:
            raise ValueError(f"unknown system keys: {sorted(extra)}")
        worlds = []
        for w in data["worlds"]:
            worlds.append(ToyWorld(
                w["id"],
                frozenset(from_literal(x) for x in w["domain"]),
                tuple(w.get("buttons", ())),
                w.get("level"),
            ))
        return cls(worlds, data.get("K"))


def base_height(multipliers: Sequence[int], K: int) -> int:
    return max(multipliers, default=0) * (K - 1) + 1


def make_toy_system(max_height: int, multipliers: Sequence[int], K: int) -> ToySystem:
    """All worlds ``T(S, h)``, ``S`` a subset of ``multipliers``, ``h`` from the base height up."""
    mults = sorted(set(multipliers))
    if len(mults) > MAX_MULTIPLIERS or K < 2 or K > MAX_K or max_height > MAX_HEIGHT_CAP:
        raise CapExceeded("toy system parameters exceed the configured caps")
    if any(m < 2 for m in mults):
        raise ValueError("multipliers must be at least 2 (m = 1 gives an ordinal, not a button set)")
    lo = max(base_height(mults, K), 1)
    if max_height < lo:
        raise ValueError(f"max_height must be at least {lo} so every button set fits")
    worlds = []
    subsets = sorted(
        (tuple(c) for r in range(len(mults) + 1) for c in itertools.combinations(mults, r))
    )
    for S in subsets:
        for h in range(lo, max_height + 1):
            dom = set(ordinal(h)) | {multiples(m, K) for m in S}
            worlds.append(ToyWorld(world_id(S, h), frozenset(dom), S, h))
    return ToySystem(worlds, K)


# -- first-order evaluation -------------------------------------------------------------


class EvaluationError(ValueError):
    pass


def _check_env(domain: FrozenSet[HfSet], env: Mapping[str, HfSet], f: Formula) -> None:
    missing = free_vars(f) - set(env)
    if missing:
        raise EvaluationError(f"unbound variable(s): {', '.join(sorted(missing))}")
    for v, x in env.items():
        if x not in domain:
            raise EvaluationError(f"parameter {v} = {show(x)} is not in the world's domain")


def eval_fo(w: ToyWorld, f: Formula, env: Optional[Mapping[str, HfSet]] = None) -> bool:
    """Tarskian truth in ``(w.domain, membership)``."""
    if not is_modal_free(f):
        raise EvaluationError("eval_fo needs a purely first-order formula")
    env = dict(env or {})
    _check_env(w.domain, env, f)
    return _Evaluator(None, f).run(w, env)


def eval_potentialist(sys: ToySystem, w: ToyWorld, f: Formula, env: Optional[Mapping[str, HfSet]] = None) -> bool:
    """Truth at ``w`` where ``<>``/``[]`` range over inclusion-successors in ``sys``."""
    env = dict(env or {})
    _check_env(w.domain, env, f)
    return _Evaluator(sys, f).run(w, env)


class _Evaluator:
    """Memoized recursive evaluator; the memo key is (world, node, free-variable values)."""

    def __init__(self, sys: Optional[ToySystem], f: Formula):
        self.sys = sys
        self.root = f
        self.free: Dict[int, Tuple[str, ...]] = {}
        self.memo: Dict[tuple, bool] = {}
        self.members: Dict[str, List[HfSet]] = {}
        stack = [f]
        while stack:
            g = stack.pop()
            if id(g) not in self.free:
                self.free[id(g)] = tuple(sorted(free_vars(g)))
                stack.extend(children(g))

    def run(self, w: ToyWorld, env: Dict[str, HfSet]) -> bool:
        return self.ev(w, self.root, env)

    def _members(self, w: ToyWorld) -> List[HfSet]:
        out = self.members.get(w.id)
        if out is None:
            out = self.members[w.id] = w.members
        return out

    def ev(self, w: ToyWorld, g: Formula, env: Dict[str, HfSet]) -> bool:
        if isinstance(g, Member):
            return env[g.left] in env[g.right]
        if isinstance(g, Equal):
            return env[g.left] == env[g.right]
        if isinstance(g, Top):
            return True
        if isinstance(g, Bottom):
            return False
        if isinstance(g, Not):
            return not self.ev(w, g.body, env)
        if isinstance(g, And):
            return self.ev(w, g.left, env) and self.ev(w, g.right, env)
        if isinstance(g, Or):
            return self.ev(w, g.left, env) or self.ev(w, g.right, env)
        if isinstance(g, Implies):
            return (not self.ev(w, g.left, env)) or self.ev(w, g.right, env)
        if isinstance(g, Iff):
            return self.ev(w, g.left, env) == self.ev(w, g.right, env)
        key = (w.id, id(g), tuple(env[v] for v in self.free[id(g)]))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if isinstance(g, (Exists, Forall)):
            want = isinstance(g, Exists)
            res = not want
            inner = dict(env)
            for x in self._members(w):
                inner[g.var] = x
                if self.ev(w, g.body, inner) == want:
                    res = want
                    break
        elif isinstance(g, (Diamond, Box)):
            if self.sys is None:
                raise EvaluationError("modal operator outside a potentialist system")
            want = isinstance(g, Diamond)
            res = not want
            for v in self.sys.successors(w):
                if self.ev(v, g.body, env) == want:
                    res = want
                    break
        else:
            raise EvaluationError(f"cannot evaluate {type(g).__name__} over sets")
        self.memo[key] = res
        return res


# -- sentence builders ---------------------------------------------------------------------


def is_empty(x: str) -> Formula:
    return Forall(f"{x}_e", Not(Member(f"{x}_e", x)))


def is_successor(y: str, x: str) -> Formula:
    """``y = x + 1``, i.e. ``y = x u {x}``."""
    z = f"{y}_s"
    return Forall(z, Iff(Member(z, y), Or(Member(z, x), Equal(z, x))))


def has_exactly(x: str, names: Sequence[str]) -> Formula:
    z = f"{x}_m"
    return Forall(z, Iff(Member(z, x), disj(Equal(z, n) for n in names)))


def ordinal_chain(top: int, body: Formula) -> Formula:
    """``E o0 ... E o<top>`` binding ``o<k>`` to the ordinal ``k``, guarding each step."""
    out = body
    for k in range(top, 0, -1):
        out = Exists(f"o{k}", And(is_successor(f"o{k}", f"o{k-1}"), out))
    return Exists("o0", And(is_empty("o0"), out))


def button_sentence(m: int, K: int) -> Formula:
    """First-order sentence: the set ``{m*k : k < K}`` exists."""
    inner = Exists("x", has_exactly("x", [f"o{m * k}" for k in range(K)]))
    return ordinal_chain(m * (K - 1), inner)


def standard_corpus(multipliers: Sequence[int] = (2, 3), K: int = 3) -> List[Tuple[str, Formula]]:
    """Twenty first-order sentences (some with parameters ``a``, ``b``) for the corollary sweep."""
    P = parse_fo
    out = [
        ("extensionality", P("A x. A y. (A z. (z in x <-> z in y) -> x = y)")),
        ("empty set", P("E x. A y. ~(y in x)")),
        ("pairing", P("A x. A y. E z. (x in z & y in z)")),
        ("pairing instance", P("E z. (a in z & b in z)")),
        ("exact pair instance", P("E z. A u. (u in z <-> u = a | u = b)")),
        ("singleton instance", P("E z. A u. (u in z <-> u = a)")),
        ("union", P("A x. E y. A z. (z in y <-> E u. (u in x & z in u))")),
        ("union instance", P("E y. A z. (z in y <-> E u. (u in a & z in u))")),
        ("every set is a member of another", P("A x. E y. x in y")),
        ("foundation", P("A x. (E y. y in x -> E y. (y in x & A z. (z in y -> ~(z in x))))")),
        ("every set is transitive", P("A x. A y. (y in x -> A z. (z in y -> z in x))")),
        ("inductive set", P("E x. (E y. y in x & A y. (y in x -> E z. (z in x & y in z)))")),
        ("membership instance", P("a in b")),
        ("equality instance", P("a = b")),
        ("nonempty instance", P("E x. x in a")),
        ("unique element", P("E x. E y. (y in x & A z. (z in x -> z = y))")),
        ("falsum", P("false")),
    ]
    for m in list(multipliers)[:2]:
        out.append((f"button {m}", button_sentence(m, K)))
    out.append((f"button {max(multipliers) + 2}", button_sentence(max(multipliers) + 2, K)))
    return out[:20]


# -- the corollary and the account of V ---------------------------------------------------


@dataclass
class CorollaryReport:
    sentences: int = 0
    checks: int = 0
    violations: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"sentences": self.sentences, "checks": self.checks, "ok": self.ok, "violations": self.violations}


def corollary_check(sys: ToySystem, corpus: Sequence) -> CorollaryReport:
    """Top-world truth of each sentence against potentialist truth of its translation.

    Every world and every assignment of the sentence's free variables
    (its parameters) from that world's domain is tried.
    """
    if sys.top is None:
        raise ValueError("the system has no top world")
    rep = CorollaryReport()
    for item in corpus:
        name, phi = item if isinstance(item, tuple) else (render(item), item)
        if not is_modal_free(phi):
            raise ValueError(f"corpus sentence {name!r} is not purely first-order")
        params = sorted(free_vars(phi))
        tr = potentialist_translate(phi)
        top_eval = _Evaluator(None, phi)
        pot_eval = _Evaluator(sys, tr)
        rep.sentences += 1
        for w in sys.worlds:
            for vals in itertools.product(w.members, repeat=len(params)):
                env = dict(zip(params, vals))
                lhs = top_eval.run(sys.top, dict(env))
                rhs = pot_eval.run(w, dict(env))
                rep.checks += 1
                if lhs != rhs:
                    rep.violations.append({
                        "sentence": name, "world": w.id,
                        "parameters": {k: show(v) for k, v in env.items()},
                        "top": lhs, "potentialist": rhs,
                    })
    return rep


def account_check(sys: ToySystem) -> Check:
    """Every world reaches a world holding any given set; inclusion is a directed preorder."""
    n = len(sys)
    W = sys.worlds
    reach = [set(s) for s in sys.succ]
    for i in range(n):
        if i not in reach[i]:
            return Check(False, ("not reflexive", W[i].id))
        for j in reach[i]:
            if not reach[j] <= reach[i]:
                return Check(False, ("not transitive", W[i].id, W[j].id))
    for i in range(n):
        for j in reach[i]:
            for k in reach[i]:
                if not reach[j] & reach[k]:
                    return Check(False, ("not directed", W[i].id, W[j].id, W[k].id))
    for i in range(n):
        for a in sorted(sys.universe):
            if not any(a in W[j].domain for j in reach[i]):
                return Check(False, ("set out of reach", W[i].id, show(a)))
    return Check(True)


# -- bridge to Kripke models -----------------------------------------------------------------


def observable(spec: str, K: Optional[int] = None):
    """Compile a statement spec to a world predicate.

    Specs: ``true``, ``false``, ``height_mod M = I``, ``button M`` /
    ``button M K``, or a first-order sentence in the formula grammar.
    """
    words = spec.split()
    if spec.strip() in ("true", "false"):
        val = spec.strip() == "true"
        return lambda w: val
    if words and words[0] == "height_mod":
        try:
            m, eq, i = words[1:]
            m, i = int(m), int(i)
        except ValueError:
            raise ValueError(f"bad observable {spec!r}; expected 'height_mod M = I'") from None
        if eq != "=" or m < 1:
            raise ValueError(f"bad observable {spec!r}; expected 'height_mod M = I'")
        return lambda w: w.height % m == i
    if words and words[0] == "button":
        if len(words) not in (2, 3):
            raise ValueError(f"bad observable {spec!r}; expected 'button M [K]'")
        m = int(words[1])
        k = int(words[2]) if len(words) == 3 else K
        if k is None:
            raise ValueError(f"observable {spec!r} needs K")
        target = multiples(m, k)
        return lambda w: target in w.domain
    if words and words[0].isidentifier() and len(words) == 1 and words[0] not in ("true", "false"):
        raise ValueError(f"unknown observable {spec!r}")
    phi = parse_fo(spec)
    if free_vars(phi):
        raise ValueError(f"statement {spec!r} has free variables")
    ev = _Evaluator(None, phi)
    return lambda w: ev.run(w, {})


def induce_model(sys: ToySystem, atoms: Mapping[str, str]) -> Model:
    """Kripke model mirroring ``sys`` with each atom valued by its statement spec."""
    preds = {a: observable(spec, sys.K) for a, spec in atoms.items()}
    order = sorted(sys.worlds, key=lambda w: (w.buttons, w.level if w.level is not None else w.height, w.id))
    ids = tuple(w.id for w in order)
    rel = {(w.id, sys.worlds[j].id) for w in order for j in sys.succ[sys.index(w)]}
    val = {w.id: frozenset(a for a, p in preds.items() if p(w)) for w in order}
    return Model(Frame(ids, frozenset(rel)), val)


def headroom_scope(sys: ToySystem, m: int) -> FrozenSet[str]:
    """Worlds of height at most ``max height - m``, where every height-mod-``m`` value stays reachable."""
    hmax = max(w.height for w in sys.worlds)
    return frozenset(w.id for w in sys.worlds if w.height <= hmax - m)


def height_dial_atoms(m: int) -> Dict[str, str]:
    return {f"d{i}": f"height_mod {m} = {i}" for i in range(m)}


def load_system(path: str) -> ToySystem:
    with open(path) as fh:
        return ToySystem.from_json(json.load(fh))
