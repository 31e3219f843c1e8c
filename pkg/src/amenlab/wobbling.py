"""Bounded-displacement bijections of the integers (the wobbling group W(Z)).

Every element carries a certified displacement bound ``bound`` with
``|g(j) - j| <= bound`` for all integers ``j``.  Four backends are provided:

* :class:`TableMap`   -- finite-support permutation, identity elsewhere
* :class:`ShiftMap`   -- ``j -> j + k``
* :class:`SubshiftMap` -- ``j -> j + rule(p[j-R..j+R])`` read off a subshift orbit
* :class:`ComposeMap` / :class:`InverseMap` -- formal composition trees

All values are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "BijectivityError",
    "WobblingMap",
    "TableMap",
    "ShiftMap",
    "SubshiftMap",
    "ComposeMap",
    "InverseMap",
    "DisplacementPattern",
    "identity",
    "shift",
    "swap",
    "evaluate",
    "compose",
    "invert",
    "displacement_pattern",
    "verify_bijectivity_window",
    "observed_bound",
    "to_json",
    "from_json",
]


class BijectivityError(ValueError):
    """Raised when a backend fails to describe a bijection."""


class WobblingMap:
    """Base class.  Subclasses implement ``__call__`` and set ``bound``."""

    bound: int
    label: str

    def __call__(self, j: int) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def displacements(self, lo: int, hi: int) -> np.ndarray:
        """Array of ``g(j) - j`` for ``j`` in ``[lo, hi]``."""
        return np.fromiter((self(j) - j for j in range(lo, hi + 1)), dtype=np.int64, count=hi - lo + 1)

    def support_radius(self) -> int | None:
        """Some ``s`` with ``g(j) = j`` whenever ``|j| > s``, or None if unknown."""
        return None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label} bound={self.bound}>"


@dataclass(frozen=True, repr=False, eq=False)
class TableMap(WobblingMap):
    table: Mapping[int, int]
    label: str = "table"
    bound: int = field(init=False)

    def __post_init__(self):
        table = {int(k): int(v) for k, v in self.table.items() if int(k) != int(v)}
        if set(table) != set(table.values()):
            raise BijectivityError(f"table is not a permutation of its domain: {sorted(table.items())}")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "bound", max((abs(v - k) for k, v in table.items()), default=0))

    def __call__(self, j: int) -> int:
        return self.table.get(j, j)

    def displacements(self, lo: int, hi: int) -> np.ndarray:
        out = np.zeros(hi - lo + 1, dtype=np.int64)
        for k, v in self.table.items():
            if lo <= k <= hi:
                out[k - lo] = v - k
        return out

    def support_radius(self) -> int:
        return max((abs(k) for k in self.table), default=0)


@dataclass(frozen=True, repr=False, eq=False)
class ShiftMap(WobblingMap):
    k: int = 1
    label: str = "shift"
    bound: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bound", abs(self.k))

    def __call__(self, j: int) -> int:
        return j + self.k

    def displacements(self, lo: int, hi: int) -> np.ndarray:
        return np.full(hi - lo + 1, self.k, dtype=np.int64)

    def support_radius(self) -> int | None:
        return 0 if self.k == 0 else None


@dataclass(frozen=True, repr=False, eq=False)
class SubshiftMap(WobblingMap):
    """``j -> j + rule[p[j-R..j+R]]`` along the orbit of the base point ``p``.

    ``system`` is anything with ``window(lo, hi) -> str`` (inclusive bounds),
    normally a :class:`amenlab.subshift.SubshiftSystem`.
    """

    system: object
    radius: int
    rule: Mapping[str, int]
    label: str = "subshift"
    bound: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rule", dict(self.rule))
        object.__setattr__(self, "bound", max((abs(e) for e in self.rule.values()), default=0))

    def __call__(self, j: int) -> int:
        word = self.system.window(j - self.radius, j + self.radius)
        try:
            return j + self.rule[word]
        except KeyError:
            raise BijectivityError(f"word {word!r} at position {j} has no exponent") from None

    def displacements(self, lo: int, hi: int) -> np.ndarray:
        R = self.radius
        text = self.system.window(lo - R, hi + R)
        rule = self.rule
        width = 2 * R + 1
        try:
            return np.fromiter(
                (rule[text[i:i + width]] for i in range(hi - lo + 1)), dtype=np.int64, count=hi - lo + 1
            )
        except KeyError as exc:
            raise BijectivityError(f"word {exc.args[0]!r} has no exponent") from None


@dataclass(frozen=True, repr=False, eq=False)
class ComposeMap(WobblingMap):
    """``outer o inner``: ``j -> outer(inner(j))``."""

    outer: WobblingMap
    inner: WobblingMap
    label: str = ""
    bound: int = field(init=False)

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", f"({self.outer.label}*{self.inner.label})")
        object.__setattr__(self, "bound", self.outer.bound + self.inner.bound)

    def __call__(self, j: int) -> int:
        return self.outer(self.inner(j))

    def displacements(self, lo: int, hi: int) -> np.ndarray:
        b = self.inner.bound
        d_in = self.inner.displacements(lo, hi)
        d_out = self.outer.displacements(lo - b, hi + b)
        mid = np.arange(lo, hi + 1) + d_in
        return d_in + d_out[mid - (lo - b)]

    def support_radius(self) -> int | None:
        a, b = self.outer.support_radius(), self.inner.support_radius()
        if a is None or b is None:
            return None
        return max(a, b)


@dataclass(frozen=True, repr=False, eq=False)
class InverseMap(WobblingMap):
    """Inverse by exhaustive search of ``[j - bound, j + bound]``."""

    of: WobblingMap
    label: str = ""
    bound: int = field(init=False)

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", f"{self.of.label}^-1")
        object.__setattr__(self, "bound", self.of.bound)

    def __call__(self, j: int) -> int:
        b = self.bound
        hits = [i for i in range(j - b, j + b + 1) if self.of(i) == j]
        if len(hits) != 1:
            raise BijectivityError(
                f"{self.of.label}: {len(hits)} preimages of {j} in [{j - b}, {j + b}]"
            )
        return hits[0]

    def displacements(self, lo: int, hi: int) -> np.ndarray:
        b = self.bound
        fwd = self.of.displacements(lo - b, hi + b) + np.arange(lo - b, hi + b + 1)
        out = np.full(hi - lo + 1, np.iinfo(np.int64).min, dtype=np.int64)
        for i, v in zip(range(lo - b, hi + b + 1), fwd.tolist()):
            if lo <= v <= hi:
                if out[v - lo] != np.iinfo(np.int64).min:
                    raise BijectivityError(f"{self.of.label}: two preimages of {v}")
                out[v - lo] = i - v
        if (out == np.iinfo(np.int64).min).any():
            missing = lo + int(np.argmax(out == np.iinfo(np.int64).min))
            raise BijectivityError(f"{self.of.label}: no preimage of {missing}")
        return out

    def support_radius(self) -> int | None:
        return self.of.support_radius()


@dataclass(frozen=True)
class DisplacementPattern:
    center: int
    radius: int
    displacements: tuple[int, ...]


def identity() -> TableMap:
    return TableMap({}, label="id")


def shift(k: int = 1) -> ShiftMap:
    return ShiftMap(k, label="shift" if k == 1 else f"shift{k:+d}")


def swap(a: int, b: int) -> TableMap:
    """Transposition of the integers ``a`` and ``b``."""
    return TableMap({a: b, b: a}, label=f"swap({a},{b})")


def evaluate(g: WobblingMap, j: int) -> int:
    return g(j)


def compose(g: WobblingMap, h: WobblingMap) -> WobblingMap:
    """The map ``j -> g(h(j))``."""
    if isinstance(g, TableMap) and isinstance(h, TableMap):
        domain = set(g.table) | set(h.table)
        return TableMap({j: g(h(j)) for j in domain}, label=f"({g.label}*{h.label})")
    if isinstance(g, ShiftMap) and isinstance(h, ShiftMap):
        return shift(g.k + h.k)
    return ComposeMap(g, h)


def invert(g: WobblingMap) -> WobblingMap:
    if isinstance(g, TableMap):
        return TableMap({v: k for k, v in g.table.items()}, label=g.label if _involution(g) else f"{g.label}^-1")
    if isinstance(g, ShiftMap):
        return shift(-g.k)
    if isinstance(g, InverseMap):
        return g.of
    if isinstance(g, ComposeMap):
        return compose(invert(g.inner), invert(g.outer))
    return InverseMap(g)


def _involution(g: TableMap) -> bool:
    return all(g.table[v] == k for k, v in g.table.items())


def displacement_pattern(g: WobblingMap, t: int, n: int) -> DisplacementPattern:
    if n < 0:
        raise ValueError("radius must be nonnegative")
    return DisplacementPattern(t, n, tuple(g.displacements(t - n, t + n).tolist()))


def verify_bijectivity_window(g: WobblingMap, lo: int, hi: int) -> bool:
    """Injective on ``[lo - bound, hi + bound]`` and the image covers ``[lo, hi]``."""
    if hi < lo:
        raise ValueError("need hi >= lo")
    b = g.bound
    try:
        images = (g.displacements(lo - b, hi + b) + np.arange(lo - b, hi + b + 1)).tolist()
    except BijectivityError:
        return False
    if len(set(images)) != len(images):
        return False
    return set(range(lo, hi + 1)) <= set(images)


def observed_bound(g: WobblingMap, lo: int, hi: int) -> int:
    """Tightening pass: the largest displacement seen on ``[lo, hi]``."""
    return int(np.abs(g.displacements(lo, hi)).max(initial=0))


# -- JSON ---------------------------------------------------------------------

def to_json(g: WobblingMap) -> dict:
    if isinstance(g, TableMap):
        return {"kind": "table", "label": g.label, "table": {str(k): v for k, v in sorted(g.table.items())}}
    if isinstance(g, ShiftMap):
        return {"kind": "shift", "k": g.k}
    if isinstance(g, ComposeMap):
        return {"kind": "compose", "outer": to_json(g.outer), "inner": to_json(g.inner)}
    if isinstance(g, InverseMap):
        return {"kind": "inverse", "of": to_json(g.of)}
    if isinstance(g, SubshiftMap):
        return {
            "kind": "subshift",
            "label": g.label,
            "system": g.system.to_json(),
            "radius": g.radius,
            "rule": dict(sorted(g.rule.items())),
        }
    raise TypeError(f"cannot serialize {type(g).__name__}")


def from_json(d: Mapping) -> WobblingMap:
    kind = d["kind"]
    if kind == "table":
        return TableMap({int(k): int(v) for k, v in d["table"].items()}, label=d.get("label", "table"))
    if kind == "shift":
        return shift(int(d.get("k", 1)))
    if kind == "compose":
        return ComposeMap(from_json(d["outer"]), from_json(d["inner"]))
    if kind == "inverse":
        return InverseMap(from_json(d["of"]))
    if kind == "subshift":
        from .subshift import system_from_json

        return SubshiftMap(system_from_json(d["system"]), int(d["radius"]), d["rule"], label=d.get("label", "subshift"))
    raise ValueError(f"unknown map kind {kind!r}")
