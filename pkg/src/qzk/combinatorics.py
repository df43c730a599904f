"""Small graphs, permutations and colorings, with brute-force oracles.

Vertices are 1-based throughout.  A graph on ``n`` vertices is stored as a
bitmask over the ``n(n-1)/2`` vertex pairs in lexicographic order
``(1,2), (1,3), ..., (n-1,n)``; bit ``k`` is the ``k``-th pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator

from .config import COLORING_LIMIT, GROUP_LIMIT


class LimitExceeded(ValueError):
    """A brute-force scan was requested beyond its configured size limit."""


@lru_cache(maxsize=None)
def pair_slots(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(itertools.combinations(range(1, n + 1), 2))


@lru_cache(maxsize=None)
def _slot_index(n: int) -> dict[tuple[int, int], int]:
    return {p: k for k, p in enumerate(pair_slots(n))}


@dataclass(frozen=True, order=True)
class Graph:
    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a graph needs at least one vertex")
        if self.bits < 0 or self.bits >> len(pair_slots(self.n)):
            raise ValueError(f"bitmask {self.bits} out of range for n={self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        index = _slot_index(n)
        bits = 0
        for u, v in edges:
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key not in index:
                raise ValueError(f"edge {key} outside vertex set 1..{n}")
            bits |= 1 << index[key]
        return cls(n, bits)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, 0)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, (1 << len(pair_slots(n))) - 1)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(p for k, p in enumerate(pair_slots(self.n)) if self.bits >> k & 1)

    @property
    def m(self) -> int:
        return bin(self.bits).count("1")

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.bits >> _slot_index(self.n)[(min(u, v), max(u, v))] & 1)

    def __str__(self):
        return f"Graph(n={self.n}, edges={list(self.edges)})"


def all_graphs(n: int) -> list[Graph]:
    return [Graph(n, b) for b in range(1 << len(pair_slots(n)))]


@dataclass(frozen=True, order=True)
class Permutation:
    """``images[i]`` is the image of vertex ``i + 1``."""

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"{imgs} is not a permutation of 1..{len(imgs)}")
        object.__setattr__(self, "images", imgs)

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return Permutation(tuple(inv))

    def power(self, k: int) -> "Permutation":
        result = Permutation.identity(self.n)
        for _ in range(k):
            result = compose(self, result)
        return result


def apply_permutation(pi: Permutation, g: Graph) -> Graph:
    if pi.n != g.n:
        raise ValueError(f"degree mismatch: permutation on {pi.n}, graph on {g.n}")
    return Graph.from_edges(g.n, ((pi(u), pi(v)) for u, v in g.edges))


def compose(outer: Permutation, inner: Permutation) -> Permutation:
    """The permutation ``i -> outer(inner(i))`` (right factor acts first)."""
    if outer.n != inner.n:
        raise ValueError(f"degree mismatch: {outer.n} vs {inner.n}")
    return Permutation(tuple(outer(inner(i)) for i in range(1, inner.n + 1)))


def enumerate_group(n: int, limit: int = GROUP_LIMIT) -> list[Permutation]:
    if n > limit:
        raise LimitExceeded(f"S_{n} enumeration exceeds limit n <= {limit}")
    return _group(n)


@lru_cache(maxsize=None)
def _group(n: int) -> list[Permutation]:
    return [Permutation(p) for p in itertools.permutations(range(1, n + 1))]


def permutation_index(pi: Permutation) -> int:
    """Position of ``pi`` in :func:`enumerate_group` order."""
    return _group_index(pi.n)[pi]


@lru_cache(maxsize=None)
def _group_index(n: int) -> dict[Permutation, int]:
    return {p: k for k, p in enumerate(_group(n))}


def orbit(g: Graph, limit: int = GROUP_LIMIT) -> list[Graph]:
    """All relabelings of ``g``, sorted by bitmask."""
    return sorted({apply_permutation(p, g) for p in enumerate_group(g.n, limit)}, key=lambda h: h.bits)


def find_isomorphism(g0: Graph, g1: Graph, limit: int = GROUP_LIMIT) -> Permutation | None:
    """First ``sigma`` in enumeration order with ``sigma(g1) == g0``."""
    if g0.n != g1.n:
        raise ValueError("graphs have different vertex counts")
    if g0.m != g1.m:
        enumerate_group(g0.n, limit)
        return None
    for sigma in enumerate_group(g0.n, limit):
        if apply_permutation(sigma, g1) == g0:
            return sigma
    return None


@dataclass(frozen=True)
class ColorAssignment:
    colors: tuple[int, ...]

    def __post_init__(self):
        cols = tuple(int(c) for c in self.colors)
        if any(c not in (1, 2, 3) for c in cols):
            raise ValueError(f"colors must lie in {{1,2,3}}: {cols}")
        object.__setattr__(self, "colors", cols)

    @property
    def n(self) -> int:
        return len(self.colors)

    def __call__(self, u: int) -> int:
        return self.colors[u - 1]


def all_assignments(n: int, limit: int = COLORING_LIMIT) -> Iterator[ColorAssignment]:
    if n > limit:
        raise LimitExceeded(f"3^{n} coloring scan exceeds limit n <= {limit}")
    for cols in itertools.product((1, 2, 3), repeat=n):
        yield ColorAssignment(cols)


def is_valid_coloring(g: Graph, c: ColorAssignment) -> bool:
    if c.n != g.n:
        raise ValueError("assignment length differs from vertex count")
    return all(c(u) != c(v) for u, v in g.edges)


def proper_edge_count(g: Graph, c: ColorAssignment) -> int:
    return sum(c(u) != c(v) for u, v in g.edges)


def best_coloring_score(g: Graph, limit: int = COLORING_LIMIT) -> Fraction:
    """Largest fraction of bichromatic edges over all 3^n assignments."""
    if g.n > limit:
        raise LimitExceeded(f"3^{g.n} coloring scan exceeds limit n <= {limit}")
    if g.m == 0:
        return Fraction(1)
    best = max(proper_edge_count(g, c) for c in all_assignments(g.n, limit))
    return Fraction(best, g.m)


def best_assignment(g: Graph, limit: int = COLORING_LIMIT) -> ColorAssignment:
    """First assignment in lexicographic order achieving the best score."""
    return max(all_assignments(g.n, limit), key=lambda c: proper_edge_count(g, c))


def find_coloring(g: Graph, limit: int = COLORING_LIMIT) -> ColorAssignment | None:
    for c in all_assignments(g.n, limit):
        if is_valid_coloring(g, c):
            return c
    return None


def parse_graph_text(text: str) -> tuple[Graph, ColorAssignment | None]:
    """Parse ``n`` on the first line, then ``u v`` edge lines.

    An optional ``colors: c1 ... cn`` line carries a witness coloring.
    Blank lines and ``#`` comments are ignored.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty graph description")
    n = int(lines[0])
    edges, colors = [], None
    for ln in lines[1:]:
        if ln.lower().startswith("colors:"):
            colors = ColorAssignment(tuple(int(c) for c in ln.split(":", 1)[1].split()))
            if colors.n != n:
                raise ValueError(f"coloring has {colors.n} entries for {n} vertices")
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(n, edges), colors


def format_graph_text(g: Graph, colors: ColorAssignment | None = None) -> str:
    out = [str(g.n)] + [f"{u} {v}" for u, v in g.edges]
    if colors is not None:
        out.append("colors: " + " ".join(map(str, colors.colors)))
    return "\n".join(out) + "\n"
