"""Topological full group elements as local rules, and the embedding into W(Z).

An element acts by ``q -> T^{e(q)} q`` where ``(Tq)_i = q_{i+1}`` and the
exponent ``e(q)`` depends only on the window ``q[-R..R]``.  Along the orbit
``j -> T^j p`` this becomes ``j -> j + e(p[j-R..j+R])``, which is the map
:func:`embed_pi_p` returns.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .subshift import SubshiftSystem, language
from .wobbling import SubshiftMap

__all__ = [
    "ElementError",
    "LocalRuleElement",
    "identity_element",
    "shift_element",
    "cylinder_swap",
    "compose_elements",
    "invert_element",
    "commutator",
    "simplify",
    "verify_element",
    "embed_pi_p",
    "element_to_json",
    "element_from_json",
    "commutator_pool",
]


class ElementError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LocalRuleElement:
    system: SubshiftSystem
    radius: int
    rule: Mapping[str, int]
    label: str = "g"
    exponent_bound: int = field(init=False)

    def __post_init__(self):
        words = language(self.system, 2 * self.radius + 1).words
        rule = {str(k): int(v) for k, v in self.rule.items()}
        missing = words - set(rule)
        if missing:
            raise ElementError(f"no exponent for admissible words {sorted(missing)[:5]}")
        extra = set(rule) - words
        if extra:
            raise ElementError(f"rule mentions non-admissible words {sorted(extra)[:5]}")
        object.__setattr__(self, "rule", rule)
        object.__setattr__(self, "exponent_bound", max((abs(e) for e in rule.values()), default=0))

    def exponent(self, window: str) -> int:
        return self.rule[window]

    def is_identity(self) -> bool:
        return all(e == 0 for e in self.rule.values())

    def __repr__(self) -> str:
        return f"<LocalRuleElement {self.label} R={self.radius} bound={self.exponent_bound}>"


def _words(sys: SubshiftSystem, R: int) -> list[str]:
    return language(sys, 2 * R + 1).sorted()


def identity_element(sys: SubshiftSystem) -> LocalRuleElement:
    return LocalRuleElement(sys, 0, {a: 0 for a in _words(sys, 0)}, label="id")


def shift_element(sys: SubshiftSystem, k: int = 1) -> LocalRuleElement:
    """``T^k`` applied everywhere."""
    return LocalRuleElement(sys, 0, {a: k for a in _words(sys, 0)}, label="T" if k == 1 else f"T^{k}")


def cylinder_swap(sys: SubshiftSystem, w: str) -> LocalRuleElement:
    """The involution acting as ``T`` on ``[w]``, as ``T^-1`` on ``T[w]``, identity elsewhere.

    ``[w]`` is the cylinder ``q[0..|w|-1] = w``; ``T[w]`` is ``q[-1..|w|-2] = w``.
    Both conditions hold at once only on the word ``c^(|w|+1)`` for a
    constant ``w = c^|w|``, so that is the only possible overlap.
    """
    if not w:
        raise ElementError("the empty cylinder is the whole space")
    if w not in language(sys, len(w)):
        raise ElementError(f"{w!r} is not an admissible word")
    if len(set(w)) == 1 and w + w[0] in language(sys, len(w) + 1):
        raise ElementError(f"[{w}] and T[{w}] overlap on the admissible word {w + w[0]!r}")
    R = len(w)
    rule = {}
    for u in _words(sys, R):
        if u[R:R + len(w)] == w:
            rule[u] = 1
        elif u[R - 1:R - 1 + len(w)] == w:
            rule[u] = -1
        else:
            rule[u] = 0
    return LocalRuleElement(sys, R, rule, label=f"swap({w})")


def simplify(a: LocalRuleElement) -> LocalRuleElement:
    """Shrink the radius while the rule ignores the outermost letters."""
    R, rule = a.radius, dict(a.rule)
    while R > 0:
        inner: dict[str, int] = {}
        for u, e in rule.items():
            if inner.setdefault(u[1:-1], e) != e:
                break
        else:
            R, rule = R - 1, inner
            continue
        break
    if R == a.radius:
        return a
    return LocalRuleElement(a.system, R, rule, label=a.label)


def compose_elements(a: LocalRuleElement, b: LocalRuleElement, label: str | None = None) -> LocalRuleElement:
    """The element ``q -> a(b(q))``."""
    if a.system is not b.system:
        raise ElementError("elements live on different systems")
    R = max(b.radius, a.radius + b.exponent_bound)
    rule = {}
    for u in _words(a.system, R):
        s = b.rule[u[R - b.radius:R + b.radius + 1]]
        c = R + s
        rule[u] = s + a.rule[u[c - a.radius:c + a.radius + 1]]
    return simplify(LocalRuleElement(a.system, R, rule, label=label or f"{a.label}*{b.label}"))


def invert_element(a: LocalRuleElement, label: str | None = None) -> LocalRuleElement:
    """``a^-1(q) = T^s q`` for the unique ``|s| <= bound`` with ``s + e(T^s q) = 0``."""
    E = a.exponent_bound
    R = a.radius + E
    rule = {}
    for u in _words(a.system, R):
        hits = [s for s in range(-E, E + 1) if s + a.rule[u[R + s - a.radius:R + s + a.radius + 1]] == 0]
        if len(hits) != 1:
            raise ElementError(f"{a.label} is not invertible at window {u!r} ({len(hits)} candidates)")
        rule[u] = hits[0]
    return simplify(LocalRuleElement(a.system, R, rule, label=label or f"{a.label}^-1"))


def commutator(a: LocalRuleElement, b: LocalRuleElement) -> LocalRuleElement:
    """``[a, b] = a b a^-1 b^-1``."""
    ab = compose_elements(a, b)
    inv = compose_elements(invert_element(a), invert_element(b))
    return compose_elements(ab, inv, label=f"[{a.label},{b.label}]")


def verify_element(a: LocalRuleElement, window: int) -> bool:
    """Desk-scale membership check along the orbit of ``p``.

    True iff every window word ``p[j-R..j+R]`` for ``|j| <= window`` has an
    exponent and ``j -> j + e`` is injective there.
    """
    R = a.radius
    text = a.system.window(-window - R, window + R)
    width = 2 * R + 1
    seen = set()
    for i in range(2 * window + 1):
        e = a.rule.get(text[i:i + width])
        if e is None:
            return False
        target = i + e
        if target in seen:
            return False
        seen.add(target)
    return True


def embed_pi_p(a: LocalRuleElement) -> SubshiftMap:
    """``j -> j + e(p[j-R..j+R])``; certified bound is the exponent bound."""
    return SubshiftMap(a.system, a.radius, a.rule, label=a.label)


def element_to_json(a: LocalRuleElement) -> dict:
    return {"radius": a.radius, "rule": dict(sorted(a.rule.items())), "label": a.label}


def element_from_json(sys: SubshiftSystem, d: Mapping) -> LocalRuleElement:
    return LocalRuleElement(sys, int(d["radius"]), d["rule"], label=d.get("label", "g"))


def commutator_pool(sys: SubshiftSystem, words: Iterable[str]) -> list[LocalRuleElement]:
    """Nontrivial commutators of cylinder swaps over the given words."""
    swaps = [cylinder_swap(sys, w) for w in words]
    pool = []
    for i, a in enumerate(swaps):
        for b in swaps[i + 1:]:
            c = commutator(a, b)
            if not c.is_identity():
                pool.append(c)
    return pool
