"""Finite Kripke frames and models.

Worlds are kept in declared order; internally a world set is an ``int``
bitmask whose bit ``i`` stands for the ``i``-th declared world.  A relation
bitmask over ``n`` worlds puts the pair ``(i, j)`` at bit ``i * n + j``.  A
valuation bitmask over atoms ``a_0..a_{k-1}`` puts "``a_j`` true at world
``i``" at bit ``j * n + i``.  Enumerations run over these integers in
ascending order, which fixes every reported witness.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .formula import (
    Atom, And, Bottom, Box, Diamond, Formula, Iff, Implies, Not, Or, Top, atoms,
)

DEFAULT_ATOM_CAP = 4
DEFAULT_FRAME_CAP = 5


class CapExceeded(ValueError):
    """A configured search bound would be exceeded."""


class FrameProperty(enum.Enum):
    REFLEXIVE = "reflexive"
    TRANSITIVE = "transitive"
    DIRECTED = "directed"
    SYMMETRIC = "symmetric"
    EQUIVALENCE = "equivalence"


@dataclass(frozen=True)
class Frame:
    worlds: Tuple[str, ...]
    relation: FrozenSet[Tuple[str, str]]

    def __post_init__(self):
        object.__setattr__(self, "worlds", tuple(self.worlds))
        object.__setattr__(self, "relation", frozenset(tuple(p) for p in self.relation))
        if len(set(self.worlds)) != len(self.worlds):
            raise ValueError("world ids must be unique")
        ws = set(self.worlds)
        for a, b in self.relation:
            if a not in ws or b not in ws:
                raise ValueError(f"relation pair ({a}, {b}) mentions an unknown world")

    @property
    def size(self) -> int:
        return len(self.worlds)

    def index(self, w: str) -> int:
        try:
            return self._index[w]
        except KeyError:
            raise KeyError(f"unknown world {w!r}") from None

    @property
    def _index(self) -> Dict[str, int]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {w: i for i, w in enumerate(self.worlds)}
            object.__setattr__(self, "_idx", idx)
        return idx

    @property
    def succ(self) -> Tuple[int, ...]:
        """Successor bitmask of every world, in declared order."""
        s = self.__dict__.get("_succ")
        if s is None:
            out = [0] * self.size
            for a, b in self.relation:
                out[self.index(a)] |= 1 << self.index(b)
            s = tuple(out)
            object.__setattr__(self, "_succ", s)
        return s

    def successors(self, w: str) -> List[str]:
        return self.worlds_of(self.succ[self.index(w)])

    def worlds_of(self, mask: int) -> List[str]:
        return [w for i, w in enumerate(self.worlds) if mask >> i & 1]

    def mask_of(self, ws: Iterable[str]) -> int:
        m = 0
        for w in ws:
            m |= 1 << self.index(w)
        return m

    def relation_mask(self) -> int:
        n = self.size
        return sum(1 << (i * n + j) for i, s in enumerate(self.succ) for j in range(n) if s >> j & 1)

    @classmethod
    def from_mask(cls, n: int, mask: int, names: Optional[Sequence[str]] = None) -> "Frame":
        names = list(names) if names is not None else [f"w{i}" for i in range(n)]
        rel = {(names[i], names[j]) for i in range(n) for j in range(n) if mask >> (i * n + j) & 1}
        return cls(tuple(names), frozenset(rel))


def rt_closure(fr: Frame) -> Frame:
    """Reflexive-transitive closure (explicit; never applied implicitly)."""
    reach = reachable_masks(fr.succ)
    n = fr.size
    rel = {(fr.worlds[i], fr.worlds[j]) for i in range(n) for j in range(n) if reach[i] >> j & 1}
    return Frame(fr.worlds, frozenset(rel))


def reachable_masks(succ: Sequence[int]) -> List[int]:
    """Reflexive-transitive reachability per world."""
    n = len(succ)
    out = []
    for i in range(n):
        seen = 1 << i
        frontier = 1 << i
        while frontier:
            nxt = 0
            for j in range(n):
                if frontier >> j & 1:
                    nxt |= succ[j]
            frontier = nxt & ~seen
            seen |= nxt
        out.append(seen)
    return out


@dataclass(frozen=True)
class Model:
    frame: Frame
    valuation: Mapping[str, FrozenSet[str]]

    def __post_init__(self):
        val = {w: frozenset(v) for w, v in dict(self.valuation).items()}
        if set(val) != set(self.frame.worlds):
            raise ValueError("valuation must be defined on exactly the frame's worlds")
        object.__setattr__(self, "valuation", val)

    def __hash__(self):
        return hash((self.frame, tuple(sorted((w, tuple(sorted(v))) for w, v in self.valuation.items()))))

    @property
    def worlds(self) -> Tuple[str, ...]:
        return self.frame.worlds

    def atom_mask(self, name: str) -> int:
        return self.frame.mask_of(w for w in self.worlds if name in self.valuation[w])

    def to_json(self) -> dict:
        fr = self.frame
        rel = sorted(fr.relation, key=lambda p: (fr.index(p[0]), fr.index(p[1])))
        return {
            "worlds": list(fr.worlds),
            "relation": [list(p) for p in rel],
            "valuation": {w: sorted(self.valuation[w]) for w in fr.worlds},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=None)

    @classmethod
    def from_json(cls, data: dict) -> "Model":
        allowed = {"worlds", "relation", "valuation", "close"}
        extra = set(data) - allowed
        if extra:
            raise ValueError(f"unknown model keys: {sorted(extra)}")
        for key in ("worlds", "relation", "valuation"):
            if key not in data:
                raise ValueError(f"model is missing {key!r}")
        worlds = data["worlds"]
        if not isinstance(worlds, list) or not all(isinstance(w, str) for w in worlds):
            raise ValueError("'worlds' must be a list of strings")
        rel = data["relation"]
        if not isinstance(rel, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(isinstance(x, str) for x in p) for p in rel
        ):
            raise ValueError("'relation' must be a list of [world, world] pairs")
        val = data["valuation"]
        if not isinstance(val, dict) or not all(
            isinstance(v, list) and all(isinstance(a, str) for a in v) for v in val.values()
        ):
            raise ValueError("'valuation' must map worlds to lists of atom names")
        fr = Frame(tuple(worlds), frozenset(tuple(p) for p in rel))
        close = data.get("close")
        if close is not None:
            if close != "rt":
                raise ValueError(f"unsupported closure {close!r}")
            fr = rt_closure(fr)
        return cls(fr, {w: frozenset(v) for w, v in val.items()})

    @classmethod
    def loads(cls, text: str) -> "Model":
        return cls.from_json(json.loads(text))


# -- forcing -------------------------------------------------------------------


def _box_mask(succ: Sequence[int], body: int) -> int:
    out = 0
    for i, s in enumerate(succ):
        if not s & ~body:
            out |= 1 << i
    return out


def _dia_mask(succ: Sequence[int], body: int) -> int:
    out = 0
    for i, s in enumerate(succ):
        if s & body:
            out |= 1 << i
    return out


def extension_masks(succ: Sequence[int], atom_masks: Mapping[str, int], f: Formula) -> int:
    """Set of worlds (bitmask) at which ``f`` is forced."""
    full = (1 << len(succ)) - 1
    memo: Dict[Formula, int] = {}

    def ev(g: Formula) -> int:
        r = memo.get(g)
        if r is not None:
            return r
        if isinstance(g, Atom):
            r = atom_masks.get(g.name, 0)
        elif isinstance(g, Top):
            r = full
        elif isinstance(g, Bottom):
            r = 0
        elif isinstance(g, Not):
            r = full & ~ev(g.body)
        elif isinstance(g, And):
            r = ev(g.left) & ev(g.right)
        elif isinstance(g, Or):
            r = ev(g.left) | ev(g.right)
        elif isinstance(g, Implies):
            r = (full & ~ev(g.left)) | ev(g.right)
        elif isinstance(g, Iff):
            r = full & ~(ev(g.left) ^ ev(g.right))
        elif isinstance(g, Box):
            r = _box_mask(succ, ev(g.body))
        elif isinstance(g, Diamond):
            r = _dia_mask(succ, ev(g.body))
        else:
            raise TypeError(f"not a propositional modal formula: {g!r}")
        memo[g] = r
        return r

    return ev(f)


def extension(m: Model, f: Formula) -> int:
    names = {a for w in m.worlds for a in m.valuation[w]} | set(atoms(f))
    return extension_masks(m.frame.succ, {a: m.atom_mask(a) for a in names}, f)


def truth_set(m: Model, f: Formula) -> List[str]:
    return m.frame.worlds_of(extension(m, f))


def model_check(m: Model, w: str, f: Formula) -> bool:
    i = m.frame.index(w)
    return bool(extension(m, f) >> i & 1)


@dataclass(frozen=True)
class Check:
    """Outcome of a universally quantified check, with the first failure."""

    ok: bool
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def valid_on_model(m: Model, f: Formula) -> Check:
    ext = extension(m, f)
    for i, w in enumerate(m.worlds):
        if not ext >> i & 1:
            return Check(False, (w,))
    return Check(True)


def valid_on_frame(fr: Frame, f: Formula, atom_cap: int = DEFAULT_ATOM_CAP) -> Check:
    """Truth of ``f`` under every valuation of its atoms at every world.

    The witness is ``(valuation, world)`` for the first failing valuation in
    ascending valuation-bitmask order.
    """
    names = atoms(f)
    if len(names) > atom_cap:
        raise CapExceeded(f"{len(names)} atoms exceed the cap of {atom_cap}")
    n = fr.size
    full = (1 << n) - 1
    succ = fr.succ
    for v in range(1 << (n * len(names))):
        masks = {a: (v >> (j * n)) & full for j, a in enumerate(names)}
        ext = extension_masks(succ, masks, f)
        if ext != full:
            i = ((~ext & full) & -(~ext & full)).bit_length() - 1
            val = {w: frozenset(a for a in names if masks[a] >> k & 1) for k, w in enumerate(fr.worlds)}
            return Check(False, (val, fr.worlds[i]))
    return Check(True)


# -- frame properties ------------------------------------------------------------


def frame_property(fr: Frame, p: FrameProperty) -> Check:
    """Whether ``fr`` has property ``p``; on failure the witness is a tuple of world ids."""
    succ = fr.succ
    n = fr.size
    W = fr.worlds
    R = lambda i, j: bool(succ[i] >> j & 1)  # noqa: E731
    if p is FrameProperty.REFLEXIVE:
        for i in range(n):
            if not R(i, i):
                return Check(False, (W[i],))
    elif p is FrameProperty.TRANSITIVE:
        for i, j, k in itertools.product(range(n), repeat=3):
            if R(i, j) and R(j, k) and not R(i, k):
                return Check(False, (W[i], W[j], W[k]))
    elif p is FrameProperty.SYMMETRIC:
        for i, j in itertools.product(range(n), repeat=2):
            if R(i, j) and not R(j, i):
                return Check(False, (W[i], W[j]))
    elif p is FrameProperty.DIRECTED:
        for i, j, k in itertools.product(range(n), repeat=3):
            if R(i, j) and R(i, k) and not succ[j] & succ[k]:
                return Check(False, (W[i], W[j], W[k]))
    elif p is FrameProperty.EQUIVALENCE:
        for q in (FrameProperty.REFLEXIVE, FrameProperty.TRANSITIVE, FrameProperty.SYMMETRIC):
            c = frame_property(fr, q)
            if not c:
                return c
    else:
        raise ValueError(p)
    return Check(True)


def _expand(props: Iterable[FrameProperty]) -> FrozenSet[FrameProperty]:
    out = set(props)
    if FrameProperty.EQUIVALENCE in out:
        out |= {FrameProperty.REFLEXIVE, FrameProperty.TRANSITIVE, FrameProperty.SYMMETRIC}
        out.discard(FrameProperty.EQUIVALENCE)
    return frozenset(out)


def _bit(masks: np.ndarray, pos: int) -> np.ndarray:
    return (masks >> np.int64(pos)) & np.int64(1)


@lru_cache(maxsize=None)
def frame_masks(n: int, props: FrozenSet[FrameProperty]) -> np.ndarray:
    """Ascending relation bitmasks on ``n`` worlds with all ``props``."""
    props = _expand(props)
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    refl = FrameProperty.REFLEXIVE in props
    free = [i * n + j for i in range(n) for j in range(n) if not (refl and i == j)]
    if len(free) > 25:
        raise CapExceeded(f"2^{len(free)} candidate relations on {n} worlds is too many")
    idx = np.arange(1 << len(free), dtype=np.int64)
    masks = np.zeros_like(idx)
    for k, pos in enumerate(free):
        masks |= ((idx >> k) & 1) << pos
    if refl:
        masks |= np.int64(sum(1 << (i * n + i) for i in range(n)))
    keep = np.ones(len(masks), dtype=bool)
    if FrameProperty.SYMMETRIC in props:
        for i in range(n):
            for j in range(i + 1, n):
                keep &= _bit(masks, i * n + j) == _bit(masks, j * n + i)
        masks = masks[keep]
        keep = keep[keep]
    if FrameProperty.TRANSITIVE in props:
        for i, j, k in itertools.product(range(n), repeat=3):
            bad = (_bit(masks, i * n + j) & _bit(masks, j * n + k) & ~_bit(masks, i * n + k)).astype(bool)
            keep &= ~bad
        masks = masks[keep]
        keep = keep[keep]
    if FrameProperty.DIRECTED in props:
        row = (1 << n) - 1
        rows = [(masks >> np.int64(i * n)) & row for i in range(n)]
        for i, j, k in itertools.product(range(n), repeat=3):
            bad = _bit(rows[i], j).astype(bool) & _bit(rows[i], k).astype(bool) & ((rows[j] & rows[k]) == 0)
            keep &= ~bad
        masks = masks[keep]
    masks.setflags(write=False)
    return masks


def enumerate_frames(n: int, props: Iterable[FrameProperty] = (), cap: int = DEFAULT_FRAME_CAP) -> Iterator[Frame]:
    """Every frame on ``w0..w(n-1)`` with the given properties, by ascending relation bitmask."""
    if n > cap:
        raise CapExceeded(f"{n} worlds exceed the frame cap of {cap}")
    for mask in frame_masks(n, _expand(props)):
        yield Frame.from_mask(n, int(mask))


# -- vectorised evaluation over many frames and valuations at once ----------------


def batch_extensions(f: Formula, n: int, masks: np.ndarray, names: Sequence[str], valuations: np.ndarray) -> np.ndarray:
    """Extension bitmask of ``f`` for every (frame, valuation) pair.

    Returns an array of shape ``(len(masks), len(valuations))``.
    """
    full = np.int64((1 << n) - 1)
    succ = [((masks >> np.int64(i * n)) & full)[:, None] for i in range(n)]
    atom = {a: ((valuations >> np.int64(j * n)) & full)[None, :] for j, a in enumerate(names)}
    shape = (len(masks), len(valuations))
    memo: Dict[Formula, np.ndarray] = {}

    def ev(g: Formula) -> np.ndarray:
        r = memo.get(g)
        if r is not None:
            return r
        if isinstance(g, Atom):
            r = atom[g.name]
        elif isinstance(g, Top):
            r = np.full((1, 1), full)
        elif isinstance(g, Bottom):
            r = np.zeros((1, 1), dtype=np.int64)
        elif isinstance(g, Not):
            r = full & ~ev(g.body)
        elif isinstance(g, And):
            r = ev(g.left) & ev(g.right)
        elif isinstance(g, Or):
            r = ev(g.left) | ev(g.right)
        elif isinstance(g, Implies):
            r = (full & ~ev(g.left)) | ev(g.right)
        elif isinstance(g, Iff):
            r = full & ~(ev(g.left) ^ ev(g.right))
        elif isinstance(g, (Box, Diamond)):
            body = ev(g.body)
            r = np.zeros(np.broadcast_shapes(shape, body.shape), dtype=np.int64)
            for i in range(n):
                if isinstance(g, Box):
                    hit = (succ[i] & ~body & full) == 0
                else:
                    hit = (succ[i] & body) != 0
                r |= hit.astype(np.int64) << np.int64(i)
        else:
            raise TypeError(f"not a propositional modal formula: {g!r}")
        memo[g] = r
        return r

    return np.broadcast_to(ev(f), shape)


def first_failure(f: Formula, n: int, masks: np.ndarray, names: Sequence[str], chunk: int = 1 << 20):
    """First ``(relation mask, valuation mask, world index)`` at which ``f`` fails.

    Order: relation mask, then valuation mask, then world; ``None`` if ``f``
    holds throughout.
    """
    nval = 1 << (n * len(names))
    vals = np.arange(nval, dtype=np.int64)
    full = (1 << n) - 1
    step = max(1, chunk // nval)
    for start in range(0, len(masks), step):
        block = masks[start:start + step]
        ext = batch_extensions(f, n, block, names, vals)
        bad = ext != full
        if bad.any():
            flat = int(np.argmax(bad))
            fi, vi = divmod(flat, nval)
            e = int(ext[fi, vi])
            missing = full & ~e
            world = (missing & -missing).bit_length() - 1
            return int(block[fi]), vi, world
    return None


def model_from_masks(n: int, rel_mask: int, names: Sequence[str], val_mask: int) -> Model:
    fr = Frame.from_mask(n, rel_mask)
    val = {
        w: frozenset(a for j, a in enumerate(names) if (val_mask >> (j * n + i)) & 1)
        for i, w in enumerate(fr.worlds)
    }
    return Model(fr, val)


def chain_model(n: int, truths: Mapping[str, Iterable[int]] = {}) -> Model:
    """Reflexive-transitive chain ``w0 <= w1 <= ...`` with atoms true at the given indices."""
    names = [f"w{i}" for i in range(n)]
    rel = {(names[i], names[j]) for i in range(n) for j in range(i, n)}
    val = {w: set() for w in names}
    for a, idx in truths.items():
        for i in idx:
            val[names[i]].add(a)
    return Model(Frame(tuple(names), frozenset(rel)), val)


def cluster_model(n: int, truths: Mapping[str, Iterable[int]] = {}) -> Model:
    """Single cluster: ``n`` worlds, universal relation."""
    names = [f"w{i}" for i in range(n)]
    rel = {(a, b) for a in names for b in names}
    val = {w: set() for w in names}
    for a, idx in truths.items():
        for i in idx:
            val[names[i]].add(a)
    return Model(Frame(tuple(names), frozenset(rel)), val)
