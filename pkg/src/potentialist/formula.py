"""Formula syntax: trees, parsing, printing, substitution, potentialist translation.

One node family serves both languages.  A propositional modal formula is
built from ``Atom``, ``Top``, ``Bottom``, the boolean connectives, ``Diamond``
and ``Box``.  A first-order modal formula replaces atoms with ``Member`` and
``Equal`` over variable names and adds ``Forall``/``Exists``.

Text grammar (precedence from tightest): ``~ [] <>`` and quantifiers, ``&``,
``|``, ``->`` (right associative), ``<->``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Set, Tuple

NAME_RE = re.compile(r"[a-z][a-z0-9_]*")
KEYWORDS = frozenset({"true", "false", "in"})


class FormulaSyntaxError(ValueError):
    """Raised by the parsers; carries the byte offset and the expected tokens."""

    def __init__(self, text: str, offset: int, expected):
        self.text = text
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        found = text[offset:offset + 8] or "end of input"
        super().__init__(
            f"syntax error at offset {offset} near {found!r}: "
            f"expected one of {', '.join(self.expected)}"
        )


class Formula:
    """Base class of all formula nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)

    # operator sugar for building formulas in code and tests
    def __invert__(self) -> "Formula":
        return Not(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __rshift__(self, other: "Formula") -> "Formula":
        return Implies(self, other)


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __post_init__(self):
        if not NAME_RE.fullmatch(self.name) or self.name in KEYWORDS:
            raise ValueError(f"invalid atom name {self.name!r}")


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    body: Formula


@dataclass(frozen=True)
class Box(Formula):
    body: Formula


@dataclass(frozen=True)
class Member(Formula):
    """``x in y``"""

    left: str
    right: str


@dataclass(frozen=True)
class Equal(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


TOP = Top()
BOTTOM = Bottom()

BINARY = (And, Or, Implies, Iff)
UNARY_MODAL = (Diamond, Box)
QUANTIFIERS = (Forall, Exists)
FO_ATOMS = (Member, Equal)

Substitution = Mapping[str, Formula]


def children(f: Formula) -> Tuple[Formula, ...]:
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, (Not, Diamond, Box, Forall, Exists)):
        return (f.body,)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order walk over every node (with repetitions)."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def node_count(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def subformula_closure(f: Formula) -> Set[Formula]:
    return set(subformulas(f))


def atoms(f: Formula) -> List[str]:
    """Atom names in order of first occurrence, left to right."""
    seen: Dict[str, None] = {}
    for g in subformulas(f):
        if isinstance(g, Atom):
            seen.setdefault(g.name)
    return list(seen)


def is_modal_free(f: Formula) -> bool:
    return not any(isinstance(g, UNARY_MODAL) for g in subformulas(f))


def is_propositional(f: Formula) -> bool:
    return not any(isinstance(g, QUANTIFIERS + FO_ATOMS) for g in subformulas(f))


def modal_depth(f: Formula) -> int:
    if isinstance(f, UNARY_MODAL):
        return 1 + modal_depth(f.body)
    return max((modal_depth(c) for c in children(f)), default=0)


def _rebuild(f: Formula, kids: Tuple[Formula, ...]) -> Formula:
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    if isinstance(f, (Not, Diamond, Box)):
        return type(f)(kids[0])
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, kids[0])
    return f


def substitute(f: Formula, s: Substitution) -> Formula:
    """Simultaneously replace atoms named in ``s`` by their images."""
    if isinstance(f, Atom):
        return s.get(f.name, f)
    kids = children(f)
    if not kids:
        return f
    return _rebuild(f, tuple(substitute(k, s) for k in kids))


def compose(s1: Substitution, s2: Substitution) -> Dict[str, Formula]:
    """The substitution that acts like applying ``s1`` and then ``s2``."""
    out = {a: substitute(g, s2) for a, g in s1.items()}
    for a, g in s2.items():
        out.setdefault(a, g)
    return out


# -- first-order helpers ----------------------------------------------------


def free_vars(f: Formula) -> Set[str]:
    if isinstance(f, FO_ATOMS):
        return {f.left, f.right}
    if isinstance(f, QUANTIFIERS):
        return free_vars(f.body) - {f.var}
    out: Set[str] = set()
    for c in children(f):
        out |= free_vars(c)
    return out


def rename_apart(f: Formula) -> Formula:
    """Rename bound variables so no variable is bound twice on one branch.

    Free variables are never renamed, and a bound variable that would capture
    a free variable's name is renamed too.
    """
    used = set(free_vars(f))
    for g in subformulas(f):
        if isinstance(g, QUANTIFIERS):
            used.add(g.var)
        elif isinstance(g, FO_ATOMS):
            used.update((g.left, g.right))

    def fresh(base: str) -> str:
        i = 1
        while f"{base}{i}" in used:
            i += 1
        name = f"{base}{i}"
        used.add(name)
        return name

    def go(g: Formula, env: Dict[str, str], bound: frozenset) -> Formula:
        if isinstance(g, FO_ATOMS):
            return type(g)(env.get(g.left, g.left), env.get(g.right, g.right))
        if isinstance(g, QUANTIFIERS):
            name = g.var
            if name in bound or name in outer_free:
                name = fresh(g.var)
            inner = dict(env)
            inner[g.var] = name
            return type(g)(name, go(g.body, inner, bound | {name}))
        kids = children(g)
        if not kids:
            return g
        return _rebuild(g, tuple(go(k, env, bound) for k in kids))

    outer_free = frozenset(free_vars(f))
    return go(f, {}, frozenset())


def potentialist_translate(f: Formula) -> Formula:
    """Prefix every ``Exists`` with ``Diamond`` and every ``Forall`` with ``Box``."""
    if not is_modal_free(f):
        raise ValueError("potentialist translation needs a purely first-order formula")

    def go(g: Formula) -> Formula:
        if isinstance(g, Exists):
            return Diamond(Exists(g.var, go(g.body)))
        if isinstance(g, Forall):
            return Box(Forall(g.var, go(g.body)))
        kids = children(g)
        if not kids:
            return g
        return _rebuild(g, tuple(go(k) for k in kids))

    return go(f)


# -- printing ----------------------------------------------------------------

_LEVEL = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
# (min level of left operand, min level of right operand)
_OPERAND = {Iff: (1, 2), Implies: (3, 2), Or: (3, 4), And: (4, 5)}


def _level(f: Formula) -> int:
    for cls, lvl in _LEVEL.items():
        if isinstance(f, cls):
            return lvl
    return 5


def _wrap(f: Formula, need: int) -> str:
    s = render(f)
    return f"({s})" if _level(f) < need else s


def render(f: Formula) -> str:
    """Print with the fewest parentheses the grammar allows."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Member):
        return f"{f.left} in {f.right}"
    if isinstance(f, Equal):
        return f"{f.left} = {f.right}"
    if isinstance(f, (Not, Diamond, Box, Forall, Exists)):
        if isinstance(f, Not):
            prefix = "~"
        elif isinstance(f, Diamond):
            prefix = "<>"
        elif isinstance(f, Box):
            prefix = "[]"
        else:
            prefix = f"{'A' if isinstance(f, Forall) else 'E'} {f.var}. "
        body = f.body
        if isinstance(body, FO_ATOMS):
            return f"{prefix}({render(body)})"
        return prefix + _wrap(body, 5)
    for cls, (lneed, rneed) in _OPERAND.items():
        if isinstance(f, cls):
            return f"{_wrap(f.left, lneed)} {_SYMBOL[cls]} {_wrap(f.right, rneed)}"
    raise TypeError(f"not a formula: {f!r}")


# -- parsing ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op><->|->|<>|\[\]|[|&~().=])|(?P<quant>[AE])(?![A-Za-z0-9_])|(?P<name>[a-z][a-z0-9_]*))"
)


class _Parser:
    def __init__(self, text: str, first_order: bool):
        self.text = text
        self.fo = first_order
        self.tokens: List[Tuple[str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                raise FormulaSyntaxError(text, pos, self._unary_starts())
            tok = m.group("op") or m.group("quant") or m.group("name")
            start = m.start("op") if m.group("op") else (
                m.start("quant") if m.group("quant") else m.start("name"))
            self.tokens.append((tok, start))
            pos = m.end()
        self.i = 0

    def _unary_starts(self):
        base = ["~", "[]", "<>", "(", "true", "false"]
        return base + (["A", "E", "variable"] if self.fo else ["atom"])

    def peek(self) -> Optional[str]:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def offset(self) -> int:
        return self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)

    def fail(self, expected):
        raise FormulaSyntaxError(self.text, self.offset(), expected)

    def take(self, tok: str) -> None:
        if self.peek() != tok:
            self.fail([tok])
        self.i += 1

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek() is not None:
            self.fail(["<->", "->", "|", "&", "end of input"])
        return f

    def iff(self) -> Formula:
        f = self.imp()
        while self.peek() == "<->":
            self.i += 1
            f = Iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.or_()
        if self.peek() == "->":
            self.i += 1
            return Implies(f, self.imp())
        return f

    def or_(self) -> Formula:
        f = self.and_()
        while self.peek() == "|":
            self.i += 1
            f = Or(f, self.and_())
        return f

    def and_(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.i += 1
            f = And(f, self.unary())
        return f

    def variable(self) -> str:
        tok = self.peek()
        if tok is None or not NAME_RE.fullmatch(tok) or tok in KEYWORDS:
            self.fail(["variable"])
        self.i += 1
        return tok

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "~":
            self.i += 1
            return Not(self.unary())
        if tok == "[]":
            self.i += 1
            return Box(self.unary())
        if tok == "<>":
            self.i += 1
            return Diamond(self.unary())
        if tok == "(":
            self.i += 1
            f = self.iff()
            self.take(")")
            return f
        if tok == "true":
            self.i += 1
            return TOP
        if tok == "false":
            self.i += 1
            return BOTTOM
        if self.fo and tok in ("A", "E"):
            self.i += 1
            var = self.variable()
            self.take(".")
            body = self.unary()
            return Forall(var, body) if tok == "A" else Exists(var, body)
        if tok is not None and NAME_RE.fullmatch(tok) and tok not in KEYWORDS:
            self.i += 1
            if not self.fo:
                return Atom(tok)
            op = self.peek()
            if op == "in":
                self.i += 1
                return Member(tok, self.variable())
            if op == "=":
                self.i += 1
                return Equal(tok, self.variable())
            self.fail(["in", "="])
        self.fail(self._unary_starts())


def parse_prop(text: str) -> Formula:
    """Parse a propositional modal formula, e.g. ``"<>[]p -> []<>p"``."""
    return _Parser(text, first_order=False).parse()


def parse_fo(text: str) -> Formula:
    """Parse a first-order modal formula, e.g. ``"E x. A y. ~(y in x)"``.

    Bound variables are renamed apart.
    """
    return rename_apart(_Parser(text, first_order=True).parse())


def parse_substitution(mapping: Mapping[str, str]) -> Dict[str, Formula]:
    return {a: parse_prop(t) for a, t in mapping.items()}


# -- small builders -------------------------------------------------------------


def conj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return TOP
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return BOTTOM
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out
