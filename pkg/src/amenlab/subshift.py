"""Primitive substitution subshifts.

A :class:`Substitution` supplies the minimal Cantor system; :func:`fixed_point`
builds a two-sided point ``p`` whose orbit is identified with the integers.
Only substitution subshifts are supported: every object stays finitely
described, and primitivity plus aperiodicity gives minimality.
"""
from __future__ import annotations

import functools
import os
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "HorizonError",
    "SubstitutionError",
    "RecurrenceError",
    "Substitution",
    "SubshiftSystem",
    "LanguageTable",
    "FIBONACCI",
    "THUE_MORSE",
    "BUILTINS",
    "default_horizon",
    "fixed_point",
    "builtin_system",
    "system_from_json",
    "language",
    "recurrence_bound",
    "window_recurrence",
]

DEFAULT_HORIZON = 2 ** 16


class HorizonError(RuntimeError):
    """A query needs orbit symbols beyond the configured horizon."""


class SubstitutionError(ValueError):
    pass


class RecurrenceError(RuntimeError):
    pass


def default_horizon() -> int:
    env = os.environ.get("FGL_ORBIT_HORIZON")
    return int(env) if env else DEFAULT_HORIZON


@dataclass(frozen=True)
class Substitution:
    alphabet: tuple[str, ...]
    rules: tuple[tuple[str, str], ...]
    name: str = ""

    @classmethod
    def from_rules(cls, rules: Mapping[str, str], alphabet: Sequence[str] | None = None, name: str = "") -> "Substitution":
        alphabet = tuple(alphabet) if alphabet is not None else tuple(sorted(rules))
        sub = cls(alphabet, tuple((a, rules[a]) for a in alphabet if a in rules), name)
        sub.validate()
        return sub

    @property
    def rule(self) -> dict[str, str]:
        return dict(self.rules)

    def validate(self) -> None:
        rule = self.rule
        if len(set(self.alphabet)) != len(self.alphabet) or any(len(a) != 1 for a in self.alphabet):
            raise SubstitutionError("alphabet symbols must be distinct single characters")
        if set(rule) != set(self.alphabet):
            raise SubstitutionError("every symbol needs exactly one rule")
        for a, w in rule.items():
            if not w or set(w) - set(self.alphabet):
                raise SubstitutionError(f"rule for {a!r} must be a nonempty word over the alphabet")
        if len(self.alphabet) < 2:
            raise SubstitutionError("a one-letter alphabet has no aperiodic point")
        if max(len(w) for w in rule.values()) < 2:
            raise SubstitutionError("substitution is not expanding")
        if not self.is_primitive():
            raise SubstitutionError("substitution is not primitive")

    def matrix(self) -> np.ndarray:
        idx = {a: i for i, a in enumerate(self.alphabet)}
        M = np.zeros((len(idx), len(idx)), dtype=np.int64)
        for a, w in self.rules:
            for b in w:
                M[idx[b], idx[a]] += 1
        return M

    def is_primitive(self) -> bool:
        # Wielandt: a primitive d x d matrix has M^((d-1)^2+1) > 0.
        d = len(self.alphabet)
        B = (self.matrix() > 0).astype(np.int64)
        P = B.copy()
        for _ in range((d - 1) ** 2 + 1):
            if (P > 0).all():
                return True
            P = ((P @ B) > 0).astype(np.int64)
        return bool((P > 0).all())

    def apply(self, word: str, times: int = 1) -> str:
        rule = self.rule
        for _ in range(times):
            word = "".join(rule[c] for c in word)
        return word

    def to_json(self) -> dict:
        return {"alphabet": list(self.alphabet), "rules": self.rule}


FIBONACCI = Substitution.from_rules({"0": "01", "1": "0"}, name="fibonacci")
THUE_MORSE = Substitution.from_rules({"0": "01", "1": "10"}, name="thue-morse")
BUILTINS = {"fibonacci": (FIBONACCI, ("0", "1")), "thue-morse": (THUE_MORSE, ("0", "1"))}


@dataclass(frozen=True)
class LanguageTable:
    length: int
    words: frozenset[str]

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    def sorted(self) -> list[str]:
        return sorted(self.words)


class SubshiftSystem:
    """A substitution together with the two-sided fixed point ``p``.

    ``p[j]`` for ``j >= 0`` is read from the right half (a prefix of an
    iterate starting with ``seed[0]``), for ``j < 0`` from the left half
    (a suffix of an iterate ending with ``seed[1]``).  The buffers are
    extended lazily up to ``horizon`` symbols on each side; extension never
    changes symbols already generated.  Extension is not thread-safe.
    """

    def __init__(self, substitution: Substitution, seed: tuple[str, str], power: int, horizon: int, name: str = ""):
        self.substitution = substitution
        self.seed = seed
        self.power = power
        self.horizon = horizon
        self.name = name or substitution.name
        self._right = seed[0]
        self._left = seed[1]

    def __repr__(self) -> str:
        return f"<SubshiftSystem {self.name or self.substitution.rule} seed={self.seed} horizon={self.horizon}>"

    def _extend(self, need_right: int, need_left: int) -> None:
        sub, k = self.substitution, self.power
        while len(self._right) < need_right:
            self._right = sub.apply(self._right, k)
        while len(self._left) < need_left:
            self._left = sub.apply(self._left, k)

    def window(self, lo: int, hi: int) -> str:
        """The word ``p[lo] p[lo+1] ... p[hi]``."""
        if hi < lo:
            return ""
        if lo < -self.horizon or hi >= self.horizon:
            raise HorizonError(
                f"window [{lo}, {hi}] exceeds orbit horizon [-{self.horizon}, {self.horizon - 1}]"
            )
        self._extend(hi + 1, -lo)
        if lo >= 0:
            return self._right[lo:hi + 1]
        left = self._left[len(self._left) + lo:len(self._left) + min(hi, -1) + 1]
        return left + (self._right[:hi + 1] if hi >= 0 else "")

    def symbol(self, j: int) -> str:
        return self.window(j, j)

    def to_json(self) -> dict:
        if self.name in BUILTINS and BUILTINS[self.name][0] == self.substitution and BUILTINS[self.name][1] == self.seed:
            return {"builtin": self.name}
        return {**self.substitution.to_json(), "seed": list(self.seed)}


def fixed_point(sub: Substitution, seed: tuple[str, str], horizon: int | None = None,
                max_power: int | None = None, period_check: int = 64) -> SubshiftSystem:
    """Two-sided fixed point of a power of ``sub``.

    ``seed = (a, b)``: ``p[0] = a`` and the right half is the limit of
    ``sub^k(a)``; ``p[-1] = b`` and the left half is the limit of ``sub^k(b)``.
    The word ``ba`` must be admissible.
    """
    sub.validate()
    a, b = seed
    if a not in sub.alphabet or b not in sub.alphabet:
        raise SubstitutionError(f"seed symbols must lie in the alphabet {sub.alphabet}")
    if b + a not in language(sub, 2):
        raise SubstitutionError(
            f"p[-1]p[0] = {b + a!r} is not admissible; valid pairs: {sorted(language(sub, 2).words)}"
        )
    max_power = max_power or 2 * len(sub.alphabet) ** 2 + 2
    power = None
    for k in range(1, max_power + 1):
        ra, rb = sub.apply(a, k), sub.apply(b, k)
        if ra[0] == a and rb[-1] == b and len(ra) > 1 and len(rb) > 1:
            power = k
            break
    if power is None:
        good = [
            (x, y) for x in sub.alphabet for y in sub.alphabet
            if y + x in language(sub, 2) and _stabilizes(sub, x, y, max_power)
        ]
        raise SubstitutionError(f"seed {seed} does not stabilize within {max_power} iterations; try one of {good}")
    horizon = default_horizon() if horizon is None else horizon
    system = SubshiftSystem(sub, (a, b), power, horizon)
    probe = min(1024, horizon)
    text = system.window(-probe, probe - 1)
    for per in range(1, min(period_check, len(text) // 2) + 1):
        if text[per:] == text[:-per]:
            raise SubstitutionError(f"generated point has period {per}; the subshift is not aperiodic")
    return system


def _stabilizes(sub: Substitution, a: str, b: str, max_power: int) -> bool:
    return any(
        sub.apply(a, k)[0] == a and sub.apply(b, k)[-1] == b and len(sub.apply(a, k)) > 1 and len(sub.apply(b, k)) > 1
        for k in range(1, max_power + 1)
    )


def builtin_system(name: str, horizon: int | None = None) -> SubshiftSystem:
    try:
        sub, seed = BUILTINS[name]
    except KeyError:
        raise SubstitutionError(f"unknown built-in system {name!r}; choose from {sorted(BUILTINS)}") from None
    sys_ = fixed_point(sub, seed, horizon)
    sys_.name = name
    return sys_


def system_from_json(d: Mapping | str, horizon: int | None = None) -> SubshiftSystem:
    """Accepts a built-in name, ``{"builtin": name}`` or a substitution config."""
    if isinstance(d, str):
        return builtin_system(d, horizon)
    if "builtin" in d:
        return builtin_system(d["builtin"], horizon)
    sub = Substitution.from_rules(d["rules"], d.get("alphabet"), name=d.get("name", ""))
    seed = d.get("seed") or (sub.alphabet[0], sub.alphabet[0])
    return fixed_point(sub, (seed[0], seed[1]), horizon)


# -- language -----------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _two_letter_words(sub: Substitution) -> frozenset[str]:
    words: set[str] = set()
    for _, w in sub.rules:
        words.update(w[i:i + 2] for i in range(len(w) - 1))
    frontier = set(words)
    while frontier:
        new = set()
        for u in frontier:
            img = sub.apply(u)
            new.update(img[i:i + 2] for i in range(len(img) - 1))
        frontier = new - words
        words |= new
    return frozenset(words)


@functools.lru_cache(maxsize=None)
def _language(sub: Substitution, L: int) -> frozenset[str]:
    if L == 1:
        return frozenset(sub.alphabet)
    # Each length-L factor of sub^m(x) lies inside sub^m(cd) for a legal
    # two-letter word cd once every sub^m(c) has length >= L - 1.
    seeds = list(_two_letter_words(sub))
    m = 0
    while min(len(sub.apply(c, m)) for c in sub.alphabet) < L - 1:
        m += 1
    seeds = [sub.apply(s, m) for s in seeds]
    return frozenset(s[i:i + L] for s in seeds for i in range(len(s) - L + 1))


def language(sys: SubshiftSystem | Substitution, L: int, max_length: int = 4096) -> LanguageTable:
    """All length-``L`` factors of the subshift, computed from the substitution alone."""
    if L < 1 or L > max_length:
        raise ValueError(f"word length must lie in [1, {max_length}]")
    sub = sys.substitution if isinstance(sys, SubshiftSystem) else sys
    return LanguageTable(L, _language(sub, L))


# -- recurrence ---------------------------------------------------------------

def window_recurrence(text: str, words: frozenset[str] | set[str], L: int) -> int | None:
    """Least ``R`` such that every length-``R`` window of ``text`` contains every word.

    Returns None if even the full text misses a word.
    """
    N = len(text)
    if N < L:
        return None
    big = N + 1
    # need[x]: length of the shortest window starting at x containing all words
    need = np.zeros(N, dtype=np.int64)
    for w in words:
        starts = np.array([m.start() for m in re.finditer(f"(?={re.escape(w)})", text)], dtype=np.int64)
        if starts.size == 0:
            return None
        pos = np.arange(N)
        k = np.searchsorted(starts, pos)
        nxt = np.where(k < starts.size, starts[np.minimum(k, starts.size - 1)], -1)
        span = np.where(nxt >= 0, nxt - pos + L, big)
        np.maximum(need, span, out=need)
    prefix = np.maximum.accumulate(need)
    for R in range(L, N + 1):
        if prefix[N - R] <= R:
            return R
    return None


def recurrence_bound(sys: SubshiftSystem, L: int, horizon: int) -> int:
    """Least window length witnessing every ``L``-word on ``p[-horizon..horizon]``."""
    words = language(sys, L).words
    text = sys.window(-horizon, horizon)
    R = window_recurrence(text, words, L)
    if R is None or R > horizon:
        raise RecurrenceError(f"recurrence of length-{L} words not witnessed within horizon {horizon}")
    return R
