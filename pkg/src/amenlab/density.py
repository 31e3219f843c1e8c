"""Certified evaluation of the Bernoulli-space densities and their estimates.

The family ``f_n(x) = exp(-n sum_j x_j e^{-|j|/n})`` on ``{0,1}^Z`` has
product structure, so norms and correlations reduce to products over
``j`` of expressions in the coefficients ``a_{n,j} = exp(-n e^{-|j|/n})``.
Infinite series are truncated at a radius ``J`` with a geometric tail bound
that is recomputed and asserted, never assumed.

Constants used for a map with displacement bound ``m``::

    C_g   = e^m
    C'_g  = exp(m + e^m)
    C''_g = A e^A,  A = m + e^m
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .wobbling import WobblingMap

__all__ = [
    "LOG_CONSTANT",
    "PrecisionError",
    "TruncatedValue",
    "coefficient",
    "conditioned_norm_ratio",
    "norm_squared",
    "c_g",
    "c_prime",
    "c_double_prime",
    "log_c_g",
    "log_c_prime",
    "log_c_double_prime",
    "correlation_ratio",
    "F_n",
    "b_profile",
    "check_lemma_B",
    "check_lemma_sum",
    "check_log_inequality",
    "eta_theta",
    "decompose_sum2",
    "abel_check",
    "psi",
    "vanishing_integrals",
]

LOG_CONSTANT = 4 * math.log(2) - 2
_FLOAT_FLOOR = 1e-14


class PrecisionError(ValueError):
    """Requested accuracy is below what double precision can certify."""


@dataclass(frozen=True)
class TruncatedValue:
    value: float
    error_bound: float
    truncation_radius: int

    def __float__(self) -> float:
        return self.value


def coefficient(n: float, j: int | np.ndarray) -> float | np.ndarray:
    """``a_{n,j} = exp(-n exp(-|j|/n))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(-n * np.exp(-np.abs(j) / n)) if isinstance(j, np.ndarray) else math.exp(-n * math.exp(-abs(j) / n))


def conditioned_norm_ratio(n: float) -> float:
    """``||f_n 1_{x_0=0}||^2 / ||f_n||^2 = 1 / (1 + a_{n,0}^2)``."""
    a0 = coefficient(n, 0)
    return 1.0 / (1.0 + a0 * a0)


def norm_squared(n: float, radius: int) -> float:
    """``prod_{|j|<=radius} (1 + a_{n,j}^2) / 2``: the window-truncated ``||f_n||^2``."""
    a = coefficient(n, np.arange(-radius, radius + 1))
    return math.exp(math.fsum(np.log1p(a * a) - math.log(2)))


def _exp(x: float) -> float:
    # huge constants are sound as +inf
    return math.exp(x) if x < 709 else math.inf


def log_c_g(m: int) -> float:
    return float(m)


def log_c_prime(m: int) -> float:
    return m + math.exp(m)


def log_c_double_prime(m: int) -> float:
    A = m + math.exp(m)
    return math.log(A) + A


def c_g(m: int) -> float:
    return _exp(log_c_g(m))


def c_prime(m: int) -> float:
    return _exp(log_c_prime(m))


def c_double_prime(m: int) -> float:
    return _exp(log_c_double_prime(m))


def _log_tail(log_scale: float, n: float, J: int, rate: float) -> float:
    return math.log(2.0) + log_scale - rate * (J + 1) / n - math.log(-math.expm1(-rate / n))


def _geometric_tail(scale: float, n: float, J: int, rate: float = 1.0, log_scale: float | None = None) -> float:
    """``scale * sum_{|j|>J} e^{-rate|j|/n}`` (both sides); pass ``log_scale`` for huge scales."""
    if log_scale is None:
        if not scale:
            return 0.0
        log_scale = math.log(scale)
    return _exp(_log_tail(log_scale, n, J, rate))


def _radius_for(scale: float, n: float, eps: float, rate: float = 1.0, log_scale: float | None = None) -> int:
    """Smallest ``J`` with ``_geometric_tail(scale, n, J, rate) <= eps``."""
    if log_scale is None:
        if not scale:
            return 0
        log_scale = math.log(scale)
    # log 2 + log_scale - rate (J+1)/n - log(1 - e^{-rate/n}) <= log eps
    J = max(0, math.ceil(n * (_log_tail(log_scale, n, -1, rate) - math.log(eps)) / rate) - 1)
    while _log_tail(log_scale, n, J, rate) > math.log(eps):
        J += 1
    return J


def _ratio_minus_one(n: float, j: np.ndarray, gj: np.ndarray) -> np.ndarray:
    """``a_{n,g(j)} / a_{n,j} - 1`` without cancellation."""
    aj = np.abs(j)
    d = np.abs(gj) - aj
    # log ratio = -n e^{-|j|/n} (e^{-d/n} - 1)
    return np.expm1(-n * np.exp(-aj / n) * np.expm1(-d / n))


def _images(g: WobblingMap, lo: int, hi: int) -> np.ndarray:
    return g.displacements(lo, hi) + np.arange(lo, hi + 1)


def _log_factors(n: float, g: WobblingMap, J: int) -> np.ndarray:
    j = np.arange(-J, J + 1)
    a = coefficient(n, j)
    w = a * a / (1 + a * a)
    z = w * _ratio_minus_one(n, j, _images(g, -J, J))
    return np.log1p(z)


def correlation_ratio(n: float, g: WobblingMap, eps: float = 1e-10, radius: int | None = None) -> TruncatedValue:
    """``<g f_n, f_n> / ||f_n||^2 = prod_j (1 + a_j a_{g(j)}) / (1 + a_j^2)``.

    The product is summed in log space over ``|j| <= J``.  Each discarded log
    term is at most ``C''_g e^{-|j|/n}`` in absolute value, which fixes ``J``
    unless ``radius`` is forced; a finitely supported ``g`` has zero tail
    once ``J`` covers its support.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps < _FLOAT_FLOOR:
        raise PrecisionError(f"eps={eps:g} is below the double-precision floor {_FLOAT_FLOOR:g}")
    m = g.bound
    support = g.support_radius()
    log_scale = None if m == 0 else log_c_double_prime(m)
    if radius is None:
        # log-domain budget: value * expm1(tail) <= eps for value <= 1
        J = _radius_for(0.0, n, math.log1p(eps) / 2, log_scale=log_scale)
        if support is not None:
            J = min(J, support)
    else:
        J = radius
    tail = 0.0 if support is not None and J >= support else _geometric_tail(0.0, n, J, log_scale=log_scale)
    value = math.exp(math.fsum(_log_factors(n, g, J)))
    return TruncatedValue(value, value * math.expm1(tail) if tail else 0.0, J)


def F_n(n: float, g: WobblingMap, eps: float = 1e-12, radius: int | None = None) -> TruncatedValue:
    """``sum_j a_j^2/(1+a_j^2) e^{-|j|/n} (|g(j)| - |j|)``.

    Evaluated as ``sum_{j>=0} psi(j) b_j`` (pairing ``j`` with ``-j``), which is
    the same absolutely convergent series regrouped.  ``|b_j| <= 2m`` and the
    weight is at most ``e^{-j/n}/2``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = g.bound
    support = g.support_radius()
    if radius is None:
        # one-sided tail: m * sum_{j>J} e^{-j/n} = _geometric_tail(m/2, ...)
        J = _radius_for(m / 2, n, eps)
        if support is not None:
            J = min(J, support)
    else:
        J = radius
    tail = 0.0 if (support is not None and J >= support) or m == 0 else _geometric_tail(m / 2, n, J)
    b, _ = _b_arrays(g, J)
    value = math.fsum(psi(n, np.arange(J + 1)) * b)
    return TruncatedValue(value, tail, J)


def psi(n: float, t: float | np.ndarray) -> float | np.ndarray:
    """``psi(t) = E/(1+E) e^{-t/n}`` with ``E = exp(-2n e^{-t/n})``."""
    s = np.exp(-np.asarray(t, dtype=float) / n)
    E = np.exp(-2 * n * s)
    out = E / (1 + E) * s
    return float(out) if np.ndim(out) == 0 else out


def _b_arrays(g: WobblingMap, u_max: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(u_max + 1)
    pos = np.abs(_images(g, 0, u_max))
    neg = np.abs(_images(g, -u_max, 0))[::-1]
    b = pos + neg - 2 * j
    b[0] = pos[0]
    return b, np.cumsum(b)


def b_profile(g: WobblingMap, u_max: int) -> list[tuple[int, int]]:
    """``[(b_j, B(j)) for j in 0..u_max]``; ``B`` is constant on ``[j, j+1)``."""
    if u_max < 0:
        raise ValueError("u_max must be nonnegative")
    b, B = _b_arrays(g, u_max)
    return list(zip(b.tolist(), B.tolist()))


@dataclass
class LemmaBReport:
    bound: int
    lower: int
    upper: int
    values: dict[float, int]
    margin: int
    counterexamples: list[tuple[float, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def check_lemma_B(g: WobblingMap, u_grid: Iterable[float]) -> LemmaBReport:
    """``-2m^2 <= B(u) <= 4m^2`` for every ``u > m``."""
    u_grid = list(u_grid)
    m = g.bound
    if any(u <= m for u in u_grid):
        raise ValueError(f"grid points must exceed the displacement bound {m}")
    _, B = _b_arrays(g, int(math.floor(max(u_grid, default=0))))
    lo, hi = -2 * m * m, 4 * m * m
    values = {u: int(B[int(math.floor(u))]) for u in u_grid}
    bad = [(u, v) for u, v in values.items() if not lo <= v <= hi]
    margin = min((min(v - lo, hi - v) for v in values.values()), default=0)
    return LemmaBReport(m, lo, hi, values, margin, bad)


@dataclass
class LemmaSumReport:
    n: float
    S1: TruncatedValue
    S2: TruncatedValue
    half_sum1: float
    half_sum2: float
    comparison1: float
    comparison2: float
    phi_unimodal: bool

    @property
    def passed(self) -> bool:
        return (
            self.S1.value + self.S1.error_bound <= 3
            and self.S2.value + self.S2.error_bound <= 1 / self.n
            and self.half_sum1 <= self.comparison1
            and self.half_sum2 <= self.comparison2
            and self.phi_unimodal
        )


def _phi1(n: float, t: np.ndarray) -> np.ndarray:
    s = np.exp(-t / n)
    return np.exp(-n * s) * s


def _phi2(n: float, t: np.ndarray) -> np.ndarray:
    s = np.exp(-t / n)
    return np.exp(-2 * n * s) * s * s


def _unimodal(values: np.ndarray, peak: int) -> bool:
    d = np.diff(values)
    return bool((d[:peak] >= 0).all() and (d[peak:] <= 0).all())


def check_lemma_sum(n: float, eps: float = 1e-13, grid_points: int = 4001) -> LemmaSumReport:
    """Both series of the summation lemma, plus the integral comparison at ``t0 = n log n``.

    ``phi_unimodal`` is a numerical check on a grid that each comparison
    function increases up to ``t0`` and decreases after it.
    """
    J1 = _radius_for(1.0, n, eps)
    J2 = _radius_for(1.0, n, eps, rate=2.0)
    j1 = np.arange(-J1, J1 + 1)
    j2 = np.arange(-J2, J2 + 1)
    S1 = math.fsum(coefficient(n, j1) * np.exp(-np.abs(j1) / n))
    S2 = math.fsum(coefficient(n, j2) ** 2 * np.exp(-2 * np.abs(j2) / n))
    t0 = n * math.log(n)
    half1 = math.fsum(_phi1(n, np.arange(J1 + 1.0))) + _geometric_tail(0.5, n, J1)
    half2 = math.fsum(_phi2(n, np.arange(J2 + 1.0))) + _geometric_tail(0.5, n, J2, rate=2.0)
    comp1 = float(_phi1(n, np.array(t0))) + (1 - math.exp(-n))
    comp2 = float(_phi2(n, np.array(t0))) + (1 - (1 + 2 * n) * math.exp(-2 * n)) / (4 * n)
    t = np.unique(np.concatenate([np.linspace(0, 4 * max(t0, n), grid_points), [t0]]))
    peak = int(np.searchsorted(t, t0))
    unimodal = _unimodal(_phi1(n, t), peak) and _unimodal(_phi2(n, t), peak)
    return LemmaSumReport(
        n,
        TruncatedValue(S1, _geometric_tail(1.0, n, J1), J1),
        TruncatedValue(S2, _geometric_tail(1.0, n, J2, rate=2.0), J2),
        half1, half2, comp1, comp2, unimodal,
    )


@dataclass
class LogInequalityReport:
    points: int
    min_upper_margin: float
    min_lower_margin: float
    counterexamples: list[float]

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def check_log_inequality(z_grid: Sequence[float] | np.ndarray, rounding: float = 1e-15) -> LogInequalityReport:
    """``z - C z^2 <= log(1+z) <= z`` for ``z >= -1/2`` with ``C = 4 log 2 - 2``.

    The lower bound is an equality at ``z = -1/2``; ``rounding`` absorbs the
    last-bit disagreement of the two floating evaluations there.
    """
    z = np.asarray(z_grid, dtype=float)
    if (z < -0.5).any():
        raise ValueError("inequality only holds for z >= -1/2")
    mid = np.log1p(z)
    upper = z - mid
    lower = mid - (z - LOG_CONSTANT * z * z)
    tol = rounding * np.maximum(1.0, np.abs(z) + LOG_CONSTANT * z * z)
    bad = z[(upper < -tol) | (lower < -tol)]
    return LogInequalityReport(int(z.size), float(upper.min()), float(lower.min()), bad.tolist())


@dataclass(frozen=True)
class EtaTheta:
    eta: float
    theta: float
    eta_bound: float
    theta_bound: float
    c3_lhs: float
    c3_bound: float

    @property
    def bounds_pass(self) -> bool:
        return (
            abs(self.eta) <= self.eta_bound * (1 + 1e-12)
            and abs(self.theta) <= self.theta_bound * (1 + 1e-12)
            and self.c3_lhs <= self.c3_bound * (1 + 1e-12)
        )


def _eta_theta_arrays(g: WobblingMap, n: float, j: np.ndarray, gj: np.ndarray):
    aj = np.abs(j)
    d = np.abs(gj) - aj
    # n (1 - e^{-d/n}) = d + eta
    eta = -n * np.expm1(-d / n) - d
    x = np.exp(-aj / n) * (d + eta)
    theta = np.expm1(x) - x
    return eta, theta


def eta_theta(g: WobblingMap, n: float, j: int) -> EtaTheta:
    """Residuals of the first- and second-order expansions of ``a_{n,g(j)} / a_{n,j}``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = g.bound
    jj = np.array([j])
    gj = np.array([g(j)])
    eta, theta = _eta_theta_arrays(g, n, jj, gj)
    r1 = abs(float(_ratio_minus_one(n, jj, gj)[0]))
    return EtaTheta(
        float(eta[0]), float(theta[0]),
        c_g(m) / n, _exp(log_c_prime(m) - 2 * abs(j) / n),
        r1, _exp(log_c_double_prime(m) - abs(j) / n),
    )


@dataclass(frozen=True)
class Sum2Decomposition:
    main: float
    eta_term: float
    theta_term: float
    direct: float
    eta_bound: float
    theta_bound: float
    error_bound: float
    truncation_radius: int

    @property
    def passed(self) -> bool:
        return (
            abs(self.eta_term) <= self.eta_bound
            and abs(self.theta_term) <= self.theta_bound
            and abs(self.main + self.eta_term + self.theta_term - self.direct) <= 1e-9
        )


def decompose_sum2(n: float, g: WobblingMap, eps: float = 1e-12) -> Sum2Decomposition:
    """Split ``sum_j w_j (a_{g(j)}/a_j - 1)`` into the ``F_n``, eta and theta series."""
    m = g.bound
    support = g.support_radius()
    log_scale = None if m == 0 else max(log_c_double_prime(m), math.log(m))
    J = _radius_for(0.0, n, eps, log_scale=log_scale)
    if support is not None:
        J = min(J, support)
    j = np.arange(-J, J + 1)
    gj = _images(g, -J, J)
    a = coefficient(n, j)
    w = a * a / (1 + a * a)
    decay = np.exp(-np.abs(j) / n)
    eta, theta = _eta_theta_arrays(g, n, j, gj)
    tail = 0.0 if (support is not None and J >= support) else _geometric_tail(0.0, n, J, log_scale=log_scale)
    return Sum2Decomposition(
        main=math.fsum(w * decay * (np.abs(gj) - np.abs(j))),
        eta_term=math.fsum(w * decay * eta),
        theta_term=math.fsum(w * theta),
        direct=math.fsum(w * _ratio_minus_one(n, j, gj)),
        eta_bound=3 * c_g(m) / n,
        theta_bound=c_prime(m) / n,
        error_bound=tail,
        truncation_radius=J,
    )


@dataclass(frozen=True)
class AbelReport:
    lhs: float
    rhs: float
    boundary: float
    integral: float

    @property
    def passed(self) -> bool:
        return abs(self.lhs - self.rhs) <= 1e-10


def abel_check(g: WobblingMap, n: float, N: int) -> AbelReport:
    """Summation by parts: ``sum_{j<=N} psi(j) b_j = psi(N) B(N) - int_0^N B dpsi``.

    ``B`` is constant on each ``[j, j+1)``, so the Stieltjes integral is
    exactly ``sum_j B(j) (psi(j+1) - psi(j))``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    b, B = _b_arrays(g, N)
    ps = psi(n, np.arange(N + 1))
    lhs = math.fsum(ps * b)
    integral = math.fsum(B[:-1] * np.diff(ps))
    boundary = float(ps[N] * B[N])
    return AbelReport(lhs, boundary - integral, boundary, integral)


def _psi_integral(n: float, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """``int_{t1}^{t2} psi dt = (log(1+e^{-2n s2}) - log(1+e^{-2n s1})) / 2``, ``s = e^{-t/n}``."""
    s1, s2 = np.exp(-t1 / n), np.exp(-t2 / n)
    return 0.5 * (np.log1p(np.exp(-2 * n * s2)) - np.log1p(np.exp(-2 * n * s1)))


@dataclass(frozen=True)
class VanishingIntegrals:
    first: float
    second: float
    first_bound: float
    second_bound: float
    error_bound: float

    @property
    def F(self) -> float:
        return self.first - self.second


def vanishing_integrals(g: WobblingMap, n: float, eps: float = 1e-12) -> VanishingIntegrals:
    """The two integrals whose difference is ``F_n(g)``.

    ``first = (1/n) int B psi`` and ``second = int B (psi' + psi/n)``; on
    each unit interval ``B`` is constant and both antiderivatives are
    closed form.  Beyond ``J`` we use ``|B| <= 4m^2``.  The reported bounds
    are ``4m^2(1-e^{-n})/n`` and ``2m^2/n``.
    """
    m = g.bound
    scale = max(4 * m * m, 1)
    # int_J^inf psi <= (n/2) e^{-J/n}; both tails are dominated by that times scale/n
    J = max(m + 1, math.ceil(n * math.log(scale * n / eps)))
    _, B = _b_arrays(g, J)
    t = np.arange(J + 1.0)
    ipsi = _psi_integral(n, t[:-1], t[1:])
    ps = psi(n, t)
    first = math.fsum(B[:-1] * ipsi) / n
    second = math.fsum(B[:-1] * (np.diff(ps) + ipsi / n))
    tail_psi = 0.5 * (math.log(2) - math.log1p(math.exp(-2 * n * math.exp(-J / n))))
    err = scale * (tail_psi / n + (ps[-1] + tail_psi / n))
    return VanishingIntegrals(
        first, second, 4 * m * m * (1 - math.exp(-n)) / n, 2 * m * m / n, float(err)
    )
