"""Almost-invariant probability measures on finite subsets of Z.

The Walsh transform of ``f_n`` is a product over coordinates, so ``|f_n^(E)|^2``
normalised is the product measure that includes ``j`` with probability

    p_j = (1 - a_j)^2 / ((1 - a_j)^2 + (1 + a_j)^2).

Measures here are either product-form (independent inclusions) or explicit
(finitely many weighted sets).  Throughout, ``N = {0, 1, 2, ...}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .density import coefficient
from .wobbling import WobblingMap, compose, invert

__all__ = [
    "ProductMeasure",
    "ExplicitMeasure",
    "DensityTable",
    "TwistedElement",
    "fourier_measure",
    "fourier_window",
    "walsh_coefficients",
    "fourier_coefficients",
    "sample_set",
    "pushforward_defect",
    "hellinger_affinity",
    "tv_upper_bound",
    "monte_carlo_tv",
    "boost_union",
    "density_from_measure",
    "sqrt_density_defect",
    "pushforward_explicit",
    "explicit_l1_distance",
    "twist",
    "twisted_product",
]


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Independent inclusion of each ``j`` in ``[-window, window]``.

    ``base[j + window]`` is the base inclusion probability; the measure is the
    law of the union of ``copies`` independent draws, so the effective
    probability is ``1 - (1 - base)^copies``.  ``tail_mass`` bounds the total
    base probability dropped outside the window; :attr:`effective_tail`
    scales it by ``copies``.
    """

    base: np.ndarray
    window: int
    copies: int = 1
    tail_mass: float = 0.0
    label: str = ""

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        if base.shape != (2 * self.window + 1,):
            raise ValueError("need one probability per coordinate of the window")
        if (base < 0).any() or (base > 1).any():
            raise ValueError("probabilities must lie in [0, 1]")
        if self.copies < 1:
            raise ValueError("copies must be positive")
        base.setflags(write=False)
        object.__setattr__(self, "base", base)

    @property
    def probs(self) -> np.ndarray:
        if self.copies == 1:
            return self.base
        return 1.0 - (1.0 - self.base) ** self.copies

    @property
    def effective_tail(self) -> float:
        return min(1.0, self.copies * self.tail_mass)

    def prob(self, j: int) -> float:
        return float(self.probs[j + self.window]) if abs(j) <= self.window else 0.0

    def coordinates(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)


@dataclass(frozen=True, eq=False)
class ExplicitMeasure:
    atoms: tuple[tuple[frozenset, float], ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Iterable[int], float]]) -> "ExplicitMeasure":
        acc: dict[frozenset, float] = {}
        for s, w in pairs:
            key = frozenset(int(x) for x in s)
            acc[key] = acc.get(key, 0.0) + float(w)
        if any(w < 0 for w in acc.values()):
            raise ValueError("weights must be nonnegative")
        total = math.fsum(acc.values())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"total mass is {total}, not 1")
        return cls(tuple(sorted(acc.items(), key=lambda kv: sorted(kv[0]))))

    def as_dict(self) -> dict[frozenset, float]:
        return dict(self.atoms)

    def cardinality(self) -> int:
        sizes = {len(s) for s, w in self.atoms if w > 0}
        if len(sizes) != 1:
            raise ValueError(f"supported sets have mixed cardinalities {sorted(sizes)}")
        return sizes.pop()


def fourier_window(n: float, tail: float = 1e-9) -> int:
    """Smallest window whose dropped mass bound in :func:`fourier_measure` is at most ``tail``."""
    if not 0 < tail < 1:
        raise ValueError("tail must lie in (0, 1)")
    W = math.ceil(n / 2 * math.log(n * n / (-math.expm1(-2 / n) * tail))) - 1
    return max(W, 1)


def fourier_measure(n: float, window: int) -> ProductMeasure:
    """``|f_n^|^2 / ||f_n||^2`` restricted to ``[-window, window]``.

    Dropped coordinates carry ``p_j <= (1 - a_j)^2 / 2 <= n^2 e^{-2|j|/n} / 2``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    a = coefficient(n, np.arange(-window, window + 1))
    lo, hi = (1 - a) ** 2, (1 + a) ** 2
    tail = n * n * math.exp(-2 * (window + 1) / n) / -math.expm1(-2 / n)
    return ProductMeasure(lo / (lo + hi), window, tail_mass=tail, label=f"fourier(n={n})")


def _configurations(width: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=width)), dtype=np.int8)


def walsh_coefficients(values: np.ndarray) -> np.ndarray:
    """``h^(E) = E_x[h(x) (-1)^{sum_{j in E} x_j}]`` by the fast Walsh-Hadamard transform.

    ``values`` is indexed like :func:`itertools.product` over ``{0,1}^width``
    (first coordinate most significant); the output uses the same indexing
    for the indicator vector of ``E``.
    """
    h = np.array(values, dtype=float)
    size = h.size
    step = 1
    while step < size:
        h = h.reshape(-1, 2, step)
        h = np.stack([h[:, 0] + h[:, 1], h[:, 0] - h[:, 1]], axis=1)
        step *= 2
    return h.reshape(size) / size


def fourier_coefficients(n: float, window: int) -> np.ndarray:
    """Closed form ``prod_{j in E} (1 - a_j)/2 * prod_{j not in E} (1 + a_j)/2`` over all ``E``."""
    a = coefficient(n, np.arange(-window, window + 1))
    X = _configurations(2 * window + 1)
    return np.prod(np.where(X == 1, (1 - a) / 2, (1 + a) / 2), axis=1)


def sample_set(m: ProductMeasure, rng_seed: int | np.random.Generator, size: int | None = None):
    """One set (or ``size`` sets) drawn with independent inclusions."""
    rng = np.random.default_rng(rng_seed)
    p = m.probs
    coords = m.coordinates()
    if size is None:
        return frozenset(coords[rng.random(p.size) < p].tolist())
    draws = rng.random((size, p.size)) < p
    return [frozenset(coords[row].tolist()) for row in draws]


def _pulled_back(m: ProductMeasure, g: WobblingMap) -> tuple[np.ndarray, np.ndarray]:
    """``(p_j, p_{g^-1(j)})`` over every ``j`` where either can be nonzero."""
    reach = m.window + g.bound
    coords = np.arange(-reach, reach + 1)
    ginv = invert(g)
    pre = ginv.displacements(-reach, reach) + coords
    full = np.concatenate([np.zeros(g.bound), m.probs, np.zeros(g.bound)])
    inside = np.abs(pre) <= m.window
    pulled = np.where(inside, full[np.clip(pre + reach, 0, full.size - 1)], 0.0)
    return full, pulled


def pushforward_defect(m: ProductMeasure, g: WobblingMap) -> float:
    """``sum_j |p_j - p_{g^-1(j)}|``, the coordinatewise-coupling bound on ``TV(m, g m)``."""
    p, q = _pulled_back(m, g)
    return math.fsum(np.abs(p - q))


def hellinger_affinity(m: ProductMeasure, g: WobblingMap) -> float:
    """Bhattacharyya coefficient ``sum_E sqrt(m(E) gm(E))`` of two product measures."""
    p, q = _pulled_back(m, g)
    per = np.sqrt(p * q) + np.sqrt((1 - p) * (1 - q))
    return math.exp(math.fsum(np.log(np.minimum(per, 1.0))))


def tv_upper_bound(m: ProductMeasure, g: WobblingMap) -> float:
    """``TV(m, gm) <= sqrt(1 - BC^2)``; tends to zero along the Fourier family."""
    bc = hellinger_affinity(m, g)
    return math.sqrt(max(0.0, 1.0 - bc * bc))


def monte_carlo_tv(m: ProductMeasure, g: WobblingMap, samples: int, seed: int, coords: Iterable[int]) -> tuple[float, float]:
    """Empirical TV between the laws of ``E ∩ K`` and ``g(E) ∩ K`` for a finite ``K``.

    Projection onto ``K`` can only shrink total variation, so the estimate is
    comparable with :func:`pushforward_defect`.  Returns ``(estimate, sigma)``.
    """
    coords = sorted(coords)
    rng = np.random.default_rng(seed)
    a = sample_set(m, rng, samples)
    b = sample_set(m, rng, samples)
    key = lambda s: tuple(j for j in coords if j in s)
    ca: dict[tuple, int] = {}
    cb: dict[tuple, int] = {}
    for s in a:
        k = key(s)
        ca[k] = ca.get(k, 0) + 1
    for s in b:
        k = key({g(j) for j in s})
        cb[k] = cb.get(k, 0) + 1
    tv = 0.5 * sum(abs(ca.get(k, 0) - cb.get(k, 0)) for k in set(ca) | set(cb)) / samples
    cells = len(set(ca) | set(cb))
    return tv, math.sqrt(cells / samples)


def boost_union(m: ProductMeasure, k: int) -> ProductMeasure:
    """Law of the union of ``k`` independent draws: ``p' = 1 - (1 - p)^k``."""
    if k < 1:
        raise ValueError("k must be positive")
    return ProductMeasure(m.base, m.window, m.copies * k, m.tail_mass, m.label)


@dataclass(frozen=True, eq=False)
class DensityTable:
    """Values of a function on ``{0,1}^coords`` in :func:`itertools.product` order."""

    coords: tuple[int, ...]
    values: np.ndarray

    def l1_norm(self) -> float:
        return float(np.abs(self.values).mean())

    def act(self, g: WobblingMap) -> "DensityTable":
        """``(g h)(w) = h(g^-1 w)`` with ``(g^-1 w)_x = w_{g(x)}``; needs ``g(coords) = coords``."""
        pos = {x: i for i, x in enumerate(self.coords)}
        try:
            target = [pos[g(x)] for x in self.coords]
        except KeyError:
            raise ValueError("the map does not preserve the coordinate window") from None
        X = _configurations(len(self.coords))
        Y = X[:, target]
        width = len(self.coords)
        idx = Y.astype(np.int64) @ (1 << np.arange(width - 1, -1, -1))
        return DensityTable(self.coords, self.values[idx])


def density_from_measure(m: ExplicitMeasure, window: Iterable[int]) -> DensityTable:
    """``f_mu = 2^{n(mu)} sum_E mu(E) 1_{C_E}`` with ``C_E = {w : w_x = 0 for x in E}``."""
    size = m.cardinality()
    coords = tuple(sorted(set(window)))
    pos = {x: i for i, x in enumerate(coords)}
    X = _configurations(len(coords))
    values = np.zeros(len(X))
    for s, w in m.atoms:
        if not s <= pos.keys():
            raise ValueError(f"set {sorted(s)} leaves the window")
        cols = [pos[x] for x in s]
        values += w * (X[:, cols].sum(axis=1) == 0)
    return DensityTable(coords, values * 2.0 ** size)


def pushforward_explicit(m: ExplicitMeasure, g: WobblingMap) -> ExplicitMeasure:
    return ExplicitMeasure.from_pairs((frozenset(g(x) for x in s), w) for s, w in m.atoms)


def explicit_l1_distance(m1: ExplicitMeasure, m2: ExplicitMeasure) -> float:
    d1, d2 = m1.as_dict(), m2.as_dict()
    return math.fsum(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in set(d1) | set(d2))


def sqrt_density_defect(m: ExplicitMeasure, g: WobblingMap, window: Iterable[int]) -> tuple[float, float]:
    """``(||g f^{1/2} - f^{1/2}||_2, ||g mu - mu||_1^{1/2})`` on a ``g``-invariant window."""
    f = density_from_measure(m, window)
    root = DensityTable(f.coords, np.sqrt(f.values))
    moved = root.act(g)
    lhs = math.sqrt(float(np.mean((moved.values - root.values) ** 2)))
    rhs = math.sqrt(explicit_l1_distance(pushforward_explicit(m, g), m))
    return lhs, rhs


@dataclass(frozen=True, eq=False)
class TwistedElement:
    finite_set: frozenset
    map: WobblingMap


def _moved_across(g: WobblingMap) -> frozenset:
    """``N △ g(N)``: only ``j`` in ``[-bound, bound)`` can change side."""
    b = g.bound
    ginv = invert(g)
    out = set()
    for j in range(-b, b):
        if (j >= 0) != (ginv(j) >= 0):
            out.add(j)
    return frozenset(out)


def twist(g: WobblingMap) -> TwistedElement:
    """``g -> (N △ g(N), g)``."""
    return TwistedElement(_moved_across(g), g)


def twisted_product(x: TwistedElement, y: TwistedElement) -> TwistedElement:
    """``(A, g)(B, h) = (A △ g(B), gh)``."""
    return TwistedElement(x.finite_set ^ frozenset(x.map(b) for b in y.finite_set), compose(x.map, y.map))
