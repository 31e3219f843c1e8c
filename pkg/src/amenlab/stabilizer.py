"""Local finiteness certificates for stabilisers of ``E △ N``.

Given finitely many maps ``F`` fixing ``S = E △ N`` setwise, Z splits into
uniformly bounded ``F``-invariant blocks built from translated copies of the
"phase transition" region of ``S``.  The group generated by ``F`` then embeds
in a product of finite symmetric groups, and its order is computed by closure.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .wobbling import WobblingMap

__all__ = [
    "PatternError",
    "DecompositionError",
    "CapExceeded",
    "PatternConstant",
    "BlockDecomposition",
    "stabilizes",
    "good_translates",
    "pattern_constant",
    "block_decomposition",
    "block_permutations",
    "finite_order",
    "closure_order",
    "divides_factorial_product",
]


class PatternError(RuntimeError):
    """No translate of the pattern found within the allowed distance."""


class DecompositionError(RuntimeError):
    pass


class CapExceeded(RuntimeError):
    pass


def _in_S(j: int, E: frozenset) -> bool:
    return (j >= 0) != (j in E)


def stabilizes(g: WobblingMap, E) -> bool:
    """Whether ``g(E △ N) = E △ N``.

    Only ``|j| <= c + m`` needs checking: further out, ``j`` and ``g(j)`` have
    the same sign and both avoid ``E``.
    """
    E = frozenset(E)
    c = max((abs(e) for e in E), default=0)
    reach = c + g.bound
    images = g.displacements(-reach, reach) + np.arange(-reach, reach + 1)
    return all(_in_S(j, E) == _in_S(int(gj), E) for j, gj in zip(range(-reach, reach + 1), images))


@dataclass(frozen=True)
class PatternConstant:
    n: int
    F: tuple[str, ...]
    k: int
    horizon: int


def good_translates(F: Sequence[WobblingMap], n: int, lo: int, hi: int) -> np.ndarray:
    """All ``t`` in ``[lo, hi]`` with ``g(i+t) - (i+t) = g(i) - i`` for ``|i| <= n``, ``g`` in ``F``."""
    ok = np.ones(hi - lo + 1, dtype=bool)
    for g in F:
        disp = g.displacements(lo - n, hi + n)
        ref = g.displacements(-n, n)
        for i in range(2 * n + 1):
            ok &= disp[i:i + hi - lo + 1] == ref[i]
    return np.flatnonzero(ok) + lo


def pattern_constant(F: Sequence[WobblingMap], n: int, horizon: int, k_max: int | None = None) -> PatternConstant:
    """Least ``k`` such that every ``[j-k, j+k]``, ``|j| <= horizon``, holds a translate of the ``[-n, n]`` pattern.

    The translate ``t`` must satisfy ``[t-n, t+n] ⊆ [j-k, j+k]``, i.e.
    ``|t - j| <= k - n``.  Translates are scanned on
    ``[-horizon - k_max, horizon + k_max]`` (``k_max`` defaults to ``horizon``).
    """
    if n < 0 or horizon < 0:
        raise ValueError("n and horizon must be nonnegative")
    k_max = horizon if k_max is None else k_max
    span = k_max - n
    if span < 0:
        raise PatternError(f"k_max={k_max} is smaller than the radius {n}")
    good = good_translates(F, n, -horizon - span, horizon + span)
    labels = tuple(g.label for g in F)
    if good.size == 0:
        raise PatternError(f"pattern of radius {n} not witnessed within {k_max}")
    j = np.arange(-horizon, horizon + 1)
    idx = np.searchsorted(good, j)
    right = np.where(idx < good.size, good[np.minimum(idx, good.size - 1)] - j, np.iinfo(np.int64).max)
    left = np.where(idx > 0, j - good[np.maximum(idx - 1, 0)], np.iinfo(np.int64).max)
    dist = int(np.minimum(left, right).max())
    if dist > span:
        raise PatternError(f"pattern of radius {n} not witnessed within k <= {k_max}")
    return PatternConstant(n, labels, n + dist, horizon)


@dataclass
class BlockDecomposition:
    blocks: list[tuple[int, ...]]
    interior: tuple[int, int]
    k: int
    radius: int
    E: frozenset
    translates: list[int]
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    @property
    def max_size_bound(self) -> int:
        return 4 * self.k + 2


def block_decomposition(F: Sequence[WobblingMap], E, window: int, k: int | None = None,
                        horizon: int | None = None) -> BlockDecomposition:
    """Blocks ``B_i = (E_i ∪ [max E_i + 1, max E_{i+1}]) \\ E_{i+1}`` covering ``[-window, window]``.

    ``E_0 = S ∩ [-r, r]`` with ``r = c + 2m``; intervals ``I_i`` of length
    ``2k+1`` tile Z with ``I_0 = [-k, k]``, and ``E_i = E_0 + t_i`` uses the
    leftmost good translate ``t_i`` with ``[t_i - r, t_i + r] ⊆ I_i``
    (``t_0 = 0``).  The outer half-blocks are omitted: the returned blocks
    cover ``[max E_a + 1, min E_{b+1} - 1]`` and every block is checked for
    ``F``-invariance and the ``4k + 2`` size bound.
    """
    E = frozenset(E)
    for g in F:
        if not stabilizes(g, E):
            raise DecompositionError(f"{g.label} does not stabilise E △ N for E = {sorted(E)}")
    c = max((abs(e) for e in E), default=0)
    m = max((g.bound for g in F), default=0)
    r = c + 2 * m
    if k is None:
        try:
            k = pattern_constant(F, r, horizon if horizon is not None else window + 2 * r + 2).k
        except PatternError:
            supports = [g.support_radius() for g in F]
            if any(s is None for s in supports):
                raise
            return _finite_support_decomposition(F, E, window, max([c, *supports]))
    if k < r:
        raise DecompositionError(f"k={k} is smaller than the pattern radius {r}")
    period = 2 * k + 1
    E0 = [j for j in range(-r, r + 1) if _in_S(j, E)]
    if not E0:
        raise DecompositionError("E △ N misses the pattern window; need max displacement > 0")
    M = -(-window // period) + 1
    lo_t, hi_t = -M * period - k, (M + 1) * period + k
    good = good_translates(F, r, lo_t, hi_t)
    translates = []
    for i in range(-M, M + 2):
        if i == 0:
            translates.append(0)
            continue
        a, b = i * period - k + r, i * period + k - r
        pos = np.searchsorted(good, a)
        if pos >= good.size or good[pos] > b:
            raise DecompositionError(f"no pattern copy inside I_{i} = [{i * period - k}, {i * period + k}]")
        translates.append(int(good[pos]))
    copies = [[t + e for e in E0] for t in translates]
    blocks = []
    for cur, nxt in zip(copies, copies[1:]):
        nxt_set = set(nxt)
        block = set(cur) | set(range(max(cur) + 1, max(nxt) + 1))
        blocks.append(tuple(sorted(block - nxt_set)))
    interior = (max(copies[0]) + 1, min(copies[-1]) - 1)
    dec = BlockDecomposition(blocks, interior, k, r, E, translates)
    _check(F, dec)
    return dec


def _finite_support_decomposition(F: Sequence[WobblingMap], E: frozenset, window: int, s: int) -> BlockDecomposition:
    """Finitely supported ``F`` has no ubiquitous pattern; use ``[-s, s]`` plus singletons.

    Every generator permutes its support inside ``[-s, s]`` and fixes all
    other points, so this partition is invariant with blocks of size at most
    ``2s + 1 <= 4k + 2`` for ``k = ceil(s / 2)``.
    """
    lo, hi = -max(window, s), max(window, s)
    blocks = [(x,) for x in range(lo, -s)] + [tuple(range(-s, s + 1))] + [(x,) for x in range(s + 1, hi + 1)]
    dec = BlockDecomposition(blocks, (lo, hi), (s + 1) // 2, s, E, [0])
    _check(F, dec)
    return dec


def _check(F: Sequence[WobblingMap], dec: BlockDecomposition) -> None:
    seen: set[int] = set()
    for b in dec.blocks:
        if seen & set(b):
            raise DecompositionError(f"blocks overlap at {sorted(seen & set(b))[:5]}")
        seen |= set(b)
    lo, hi = dec.interior
    if not set(range(lo, hi + 1)) <= seen:
        raise DecompositionError("blocks do not cover the window interior")
    dec.checks["partition"] = True
    for b in dec.blocks:
        bs = set(b)
        for g in F:
            for x in b:
                if g(x) not in bs:
                    raise DecompositionError(f"{g.label} moves {x} out of block [{b[0]}..{b[-1]}]")
    dec.checks["invariance"] = True
    worst = max(dec.sizes)
    if worst > dec.max_size_bound:
        raise DecompositionError(f"block of size {worst} exceeds 4k+2 = {dec.max_size_bound}")
    dec.checks["size_bound"] = True


def block_permutations(F: Sequence[WobblingMap], dec: BlockDecomposition, dedupe: bool = True) -> list[tuple[int, ...]]:
    """Each generator as a permutation of the concatenated block points.

    With ``dedupe``, blocks whose ``F``-action is a translate of an earlier
    block's action are skipped; they only add diagonal copies and leave the
    generated group unchanged.
    """
    points: list[int] = []
    seen_types = set()
    for b in dec.blocks:
        if dedupe:
            base = b[0]
            sig = (tuple(x - base for x in b), tuple(tuple(g(x) - base for x in b) for g in F))
            if sig in seen_types:
                continue
            seen_types.add(sig)
        points.extend(b)
    pos = {x: i for i, x in enumerate(points)}
    return [tuple(pos[g(x)] for x in points) for g in F]


def closure_order(gens: Sequence[tuple[int, ...]], cap: int = 10 ** 6) -> int:
    """Breadth-first closure of the generated permutation group."""
    if not gens:
        return 1
    ident = np.arange(len(gens[0]), dtype=np.int32)
    gens = [np.asarray(g, dtype=np.int32) for g in gens]
    seen = {ident.tobytes()}
    queue = deque([ident])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = g[x]
            key = y.tobytes()
            if key not in seen:
                seen.add(key)
                if len(seen) > cap:
                    raise CapExceeded(f"group closure exceeds {cap} elements")
                queue.append(y)
    return len(seen)


def finite_order(F: Sequence[WobblingMap], dec: BlockDecomposition, cap: int = 10 ** 6) -> int:
    """Order of the group generated by ``F`` acting on the blocks of ``dec``."""
    return closure_order(block_permutations(F, dec), cap)


def divides_factorial_product(order: int, dec: BlockDecomposition) -> bool:
    prod = math.prod(math.factorial(s) for s in dec.sizes)
    return prod % order == 0
