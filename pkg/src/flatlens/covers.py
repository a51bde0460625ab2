"""Cyclic covers X_d(w_h, w_v) of the pillowcase branched over p1, p2, p3.

The weights are residues mod d.  Fibers over the three branch points are
counted by gcds; an independent check glues d copies of the cut-open
pillowcase and traces vertex cycles (``build_complex``).
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import product


class CoverError(ValueError):
    pass


class Disconnected(CoverError):
    pass


class NotBranchedOverThree(CoverError):
    pass


def _g(a: int, d: int) -> int:
    # gcd(0, d) = d is what math.gcd already does
    return math.gcd(a % d, d)


@dataclass(frozen=True, order=True)
class CyclicCover:
    d: int
    w_h: int
    w_v: int

    def __post_init__(self):
        if self.d < 1:
            raise CoverError("degree must be positive")
        object.__setattr__(self, "w_h", self.w_h % self.d)
        object.__setattr__(self, "w_v", self.w_v % self.d)

    @property
    def connected(self) -> bool:
        return math.gcd(self.d, math.gcd(self.w_h, self.w_v)) == 1

    @property
    def branched_over_three(self) -> bool:
        return all(n < self.d for n in fiber_counts(self))

    def __str__(self):
        return f"X_{self.d}({self.w_h},{self.w_v})"


def fiber_counts(cover: CyclicCover) -> tuple[int, int, int]:
    d = cover.d
    return (_g(cover.w_h, d), _g(abs(cover.w_h - cover.w_v), d), _g(cover.w_v, d))


def branching_orders(cover: CyclicCover) -> tuple[int, int, int]:
    return tuple(cover.d // n for n in fiber_counts(cover))  # type: ignore[return-value]


def genus(cover: CyclicCover, strict: bool = False) -> int:
    """Genus from the gcd formula.

    With strict=True a cover that is unbranched over one of p1, p2, p3 raises
    NotBranchedOverThree instead of returning the (still correct) value.
    """
    if not cover.connected:
        raise Disconnected(f"{cover} is not connected")
    if strict and not cover.branched_over_three:
        raise NotBranchedOverThree(f"{cover} is unbranched over one of p1, p2, p3")
    n1, n2, n3 = fiber_counts(cover)
    twice = cover.d - n1 - n2 - n3
    return 1 + twice // 2


# vertex slots of one rectangle: top-left, top-middle, top-right, bottom-*
TL, TM, TR, BL, BM, BR = range(6)
# which pillowcase corner each slot lies over, and its angle in units of pi
_OVER = {TL: 2, TM: 1, TR: 2, BL: 3, BM: 4, BR: 3}
_ANGLE = {TL: 0.5, TM: 1.0, TR: 0.5, BL: 0.5, BM: 1.0, BR: 0.5}


@dataclass
class GluedComplex:
    """d rectangles of the cut pillowcase with their edge pairings."""
    d: int
    w_h: int
    w_v: int
    edge_pairs: list = field(default_factory=list)
    vertex_classes: list = field(default_factory=list)

    @property
    def V(self) -> int:
        return len(self.vertex_classes)

    @property
    def E(self) -> int:
        return len(self.edge_pairs)

    @property
    def F(self) -> int:
        return self.d


def build_complex(cover: CyclicCover) -> GluedComplex:
    d, wh, wv = cover.d, cover.w_h, cover.w_v
    parent = list(range(6 * d))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    def v(i, slot):
        return 6 * (i % d) + slot

    pairs = []
    for i in range(d):
        j = (i + wv) % d
        # right edge of copy i to left edge of copy i + w_v, by translation
        pairs.append((("R", i), ("L", j)))
        union(v(i, TR), v(j, TL))
        union(v(i, BR), v(j, BL))
        k = (i + wh) % d
        # right half of the top edge to the left half of the top of copy i + w_h
        pairs.append((("TR", i), ("TL", k)))
        union(v(i, TM), v(k, TM))
        union(v(i, TR), v(k, TL))
        # bottom halves of the same copy, half turn about the bottom midpoint
        pairs.append((("BR", i), ("BL", i)))
        union(v(i, BR), v(i, BL))
    classes: dict[int, list[int]] = {}
    for a in range(6 * d):
        classes.setdefault(find(a), []).append(a)
    cx = GluedComplex(d, wh, wv, pairs, sorted(classes.values()))
    return cx


def euler_char(cx: GluedComplex) -> int:
    return cx.V - cx.E + cx.F


def singularity_orders(cx: GluedComplex) -> dict[int, Counter]:
    """For each pillowcase corner 1..4, the multiset of cone angles / pi."""
    out: dict[int, Counter] = {1: Counter(), 2: Counter(), 3: Counter(), 4: Counter()}
    for cls in cx.vertex_classes:
        over = {_OVER[a % 6] for a in cls}
        if len(over) != 1:
            raise CoverError("vertex cycle mixes pillowcase corners")
        angle = sum(_ANGLE[a % 6] for a in cls)
        out[over.pop()][round(angle)] += 1
    return out


def complex_fiber_counts(cx: GluedComplex) -> tuple[int, int, int]:
    orders = singularity_orders(cx)
    return tuple(sum(orders[i].values()) for i in (1, 2, 3))  # type: ignore[return-value]


def complex_genus(cover: CyclicCover) -> int:
    chi = euler_char(build_complex(cover))
    return (2 - chi) // 2


def units(d: int) -> list[int]:
    return [a for a in range(1, d) if math.gcd(a, d) == 1] or [1]


def canonical_form(cover: CyclicCover) -> CyclicCover:
    """Lexicographic minimum of (A w_h, A w_v) over units A of Z/d."""
    d = cover.d
    best = min(((a * cover.w_h) % d, (a * cover.w_v) % d) for a in units(d))
    return CyclicCover(d, *best)


def table_form(cover: CyclicCover) -> CyclicCover:
    """Unit multiple with w_v = gcd(w_v, d) and, among those, the largest w_h.

    This is the normalisation used for the printed census.
    """
    d = cover.d
    g = _g(cover.w_v, d)
    cands = [((a * cover.w_h) % d, (a * cover.w_v) % d) for a in units(d)]
    cands = [c for c in cands if c[1] == g % d]
    if not cands:  # cannot happen: some unit maps w_v to its gcd with d
        raise CoverError(f"no unit normalises {cover}")
    wh, wv = max(cands)
    return CyclicCover(d, wh, wv)


def sl2z_step(cover: CyclicCover, generator: str) -> CyclicCover:
    d, wh, wv = cover.d, cover.w_h, cover.w_v
    if generator in ("P_h", "h", "Ph"):
        return CyclicCover(d, wv - wh, wv)
    if generator in ("P_v", "v", "Pv"):
        return CyclicCover(d, wh, wh - wv)
    raise CoverError(f"unknown generator {generator!r}")


def sl2z_orbit(cover: CyclicCover) -> set[CyclicCover]:
    seen = {cover}
    todo = [cover]
    while todo:
        c = todo.pop()
        for g in ("P_h", "P_v"):
            n = sl2z_step(c, g)
            if n not in seen:
                seen.add(n)
                todo.append(n)
    return seen


def enumerate_covers(d: int, genus_value: int | None = None) -> list[CyclicCover]:
    """Connected covers of degree d with weights in 1..d-1, branched over p1, p2, p3."""
    out = []
    for wh, wv in product(range(1, d), repeat=2):
        c = CyclicCover(d, wh, wv)
        if not c.connected or not c.branched_over_three:
            continue
        if genus_value is not None and genus(c) != genus_value:
            continue
        out.append(c)
    return out


def enumerate_torus_covers(d_max: int) -> list[CyclicCover]:
    out = []
    for d in range(2, d_max + 1):
        out.extend(enumerate_covers(d, 1))
    return out


def census_table(d_max: int = 6) -> list[tuple[int, int, int, int, int, int]]:
    """Genus-one covers up to unit renaming: rows (d, w_h, w_v, n1, n2, n3)."""
    rows = set()
    for c in enumerate_torus_covers(d_max):
        t = table_form(c)
        rows.add((t.d, t.w_h, t.w_v) + fiber_counts(t))
    return sorted(rows)


def orbit_classes(covers) -> list[frozenset]:
    """Partition covers into classes under SL2(Z) and deck renaming."""
    classes: list[frozenset] = []
    seen: set[CyclicCover] = set()
    for c in sorted(covers):
        k = canonical_form(c)
        if k in seen:
            continue
        cls = set()
        for o in sl2z_orbit(c):
            for a in units(c.d):
                cls.add(canonical_form(CyclicCover(c.d, a * o.w_h, a * o.w_v)))
        # close under both operations until stable
        changed = True
        while changed:
            changed = False
            for m in list(cls):
                for o in sl2z_orbit(m):
                    k2 = canonical_form(o)
                    if k2 not in cls:
                        cls.add(k2)
                        changed = True
        seen |= cls
        classes.append(frozenset(cls))
    return classes


def oracle_mismatches(d_max: int) -> list[str]:
    """Formula versus gluing complex on every connected branched cover up to d_max."""
    bad = []
    for d in range(2, d_max + 1):
        for c in enumerate_covers(d):
            cx = build_complex(c)
            chi = euler_char(cx)
            if chi != 2 - 2 * genus(c):
                bad.append(f"{c}: chi {chi} vs genus {genus(c)}")
            if complex_fiber_counts(cx) != fiber_counts(c):
                bad.append(f"{c}: fibers {complex_fiber_counts(cx)} vs {fiber_counts(c)}")
            orders = singularity_orders(cx)
            for i, n in zip((1, 2, 3), fiber_counts(c)):
                if orders[i] != Counter({d // n: n}):
                    bad.append(f"{c}: orders over p{i} {dict(orders[i])}")
            if orders[4] != Counter({1: d}):
                bad.append(f"{c}: cover should be unbranched over p4")
    return bad
