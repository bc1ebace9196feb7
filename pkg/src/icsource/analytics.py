"""Branching-process quantities for cascades on regular and Poisson trees.

Extinction series use ``x_0 = 0``: a single active node has not died out
after zero generations, and ``x_t`` is the probability that its lineage has
no active descendants ``t`` generations later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError, UsageError

BINOMIAL = "binomial"
POISSON = "poisson"
CLOSEST = "closest_candidate"
OTHER = "other_candidate"

FIXED_POINT_TOL = 1e-12
_TERM_TOL = 1e-16
_LOG_SWITCH = 700.0


@dataclass(frozen=True, eq=False)
class ExtinctionSeries:
    kind: str
    values: np.ndarray
    fixed_point: float
    iterations_to_tol: int
    d: int | None = None
    p: float | None = None
    mu: float | None = None

    def __getitem__(self, t: int) -> float:
        return float(self.values[t])

    def __len__(self) -> int:
        return self.values.size

    @property
    def offspring_mean(self) -> float:
        return (self.d - 1) * self.p if self.kind == BINOMIAL else self.mu


def _smallest_fixed_point(survive, mean: float) -> tuple[float, int]:
    """Smallest fixed point of a pgf f, found as 1 - y* where y* is the
    largest root of y = survive(y) := 1 - f(1 - y).

    Working with the survival probability avoids cancellation near x = 1,
    where f(x) - x of a critical pgf is below double resolution long before
    x is within 1e-9 of the root.  For offspring mean <= 1 the survival root
    is 0 (the extinction probability is exactly 1); the identity pgf is the
    caller's business.
    """
    if mean <= 1.0:
        return 1.0, 0
    if survive(1.0) >= 1.0:
        return 0.0, 0
    calls = 0

    def gap(y):
        nonlocal calls
        calls += 1
        return survive(y) - y

    lo = 1e-300  # gap(y) ~ (mean - 1) y > 0 here
    y = brentq(gap, lo, 1.0, xtol=FIXED_POINT_TOL, rtol=4 * np.finfo(float).eps)
    return 1.0 - y, calls


def _series(f, steps: int) -> np.ndarray:
    xs = np.empty(steps + 1)
    xs[0] = 0.0
    for t in range(1, steps + 1):
        xs[t] = f(xs[t - 1])
    return xs


def extinction_series_binomial(d: int, p: float, steps: int) -> ExtinctionSeries:
    """x_t = (1 - p + p x_{t-1})^(d-1): every activated node of a d-regular
    tree has d-1 further neighbors, each activated with probability p."""
    if d < 2:
        raise ParameterError("need d >= 2")
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1]")
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    m = d - 1

    def f(x):
        return (1.0 - p + p * x) ** m

    if m == 1 and p == 1.0:
        fp, its = 0.0, 0  # every node has exactly one active child: no extinction
    else:
        def survive(y):
            return 1.0 if p * y >= 1.0 else -math.expm1(m * math.log1p(-p * y))

        fp, its = _smallest_fixed_point(survive, m * p)
    return ExtinctionSeries(BINOMIAL, _series(f, steps), fp, its, d=d, p=p)


def extinction_series_poisson(mu: float, steps: int) -> ExtinctionSeries:
    """x_t = exp(-mu (1 - x_{t-1})) for Po(mu) active offspring."""
    if mu < 0:
        raise ParameterError("mu must be >= 0")
    if steps < 0:
        raise ParameterError("steps must be >= 0")

    def f(x):
        return math.exp(-mu * (1.0 - x))

    fp, its = _smallest_fixed_point(lambda y: -math.expm1(-mu * y), mu)
    return ExtinctionSeries(POISSON, _series(f, steps), fp, its, mu=mu)


@dataclass(frozen=True)
class YvSpec:
    """Query for Pr[Y_v = k | source = v].

    ``t_star`` is the hop distance from v to the active set, so each of v's
    child lineages must survive ``t_star - 1`` generations.  For the Poisson
    tree set ``lam`` instead of ``d``.
    """

    p: float
    k: int
    t_star: int
    role: str = CLOSEST
    d: int | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ParameterError("k must be >= 0")
        if self.t_star < 1:
            raise ParameterError("t_star must be >= 1")
        if self.role not in (CLOSEST, OTHER):
            raise ParameterError(f"unknown role {self.role!r}")
        if (self.d is None) == (self.lam is None):
            raise ParameterError("set exactly one of d and lam")


def _binom_pmf(n: int, p: float, k: int) -> float:
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def _poisson_pmfs(mu: float, start: int):
    """Yield (j, Pr[Po(mu) = j]) for j >= start until the tail is negligible."""
    if mu == 0.0:
        if start == 0:
            yield 0, 1.0
        return
    j = start
    logp = j * math.log(mu) - mu - math.lgamma(j + 1)
    while True:
        pj = math.exp(logp)
        yield j, pj
        if j > mu and pj < _TERM_TOL * 1e-3:
            return
        j += 1
        logp += math.log(mu) - math.log(j)


def yv_distribution(spec: YvSpec, series: ExtinctionSeries) -> float:
    """Probability that v has exactly ``k`` child subtrees containing active
    nodes, given that v is the source.

    Closest candidate: sum over root offspring counts d0 of
    Pr[d0] * C(d0, k) x^(d0-k) (1-x)^k.  Other candidates always have exactly
    one active subtree: sum over d0 >= 1 of Pr[d0] * d0 x^(d0-1) (1-x).
    Here x is the extinction probability after ``t_star - 1`` generations and
    the root offspring is Bin(d, p) or Po(lam p).
    """
    if spec.d is not None:
        if series.kind != BINOMIAL or series.d != spec.d or not math.isclose(series.p, spec.p):
            raise UsageError("series does not match the d-regular YvSpec")
    else:
        if series.kind != POISSON or not math.isclose(series.mu, spec.lam * spec.p):
            raise UsageError("series does not match the Poisson YvSpec")
    idx = spec.t_star - 1
    if idx >= len(series):
        raise UsageError(f"series has {len(series)} values, need index {idx}")
    x = series[idx]
    s = 1.0 - x

    if spec.role == OTHER:
        if spec.k != 1:
            raise UsageError("a non-closest candidate has exactly one active subtree")
        k = 1
    else:
        k = spec.k

    if spec.d is not None:
        if k > spec.d:
            return 0.0
        pmfs = ((j, _binom_pmf(spec.d, spec.p, j)) for j in range(k, spec.d + 1))
    else:
        pmfs = _poisson_pmfs(spec.lam * spec.p, k)
    return math.fsum(pj * math.comb(j, k) * x ** (j - k) * s**k for j, pj in pmfs)


# ---------------------------------------------------------------------------
# modified Bessel function of order zero


def _log_i0_terms(x: float, start: int):
    """log of the series terms (x/2)^(2k) / (k!)^2 for k >= start, stopping
    past the peak once a term drops below the relative cutoff."""
    lhalf = math.log(x / 2.0)
    peak = max(start, int(x / 2.0))
    logs = []
    k = start
    while True:
        lt = 2.0 * k * lhalf - 2.0 * math.lgamma(k + 1)
        logs.append(lt)
        if k >= peak and lt - max(logs) < math.log(_TERM_TOL):
            return logs
        k += 1


def _i0_sum(x: float, start: int) -> float:
    if x == 0.0:
        return 1.0 if start == 0 else 0.0
    half_sq = (x / 2.0) ** 2
    term = 1.0
    for k in range(1, start + 1):
        term *= half_sq / (k * k)
    total = term
    k = start
    while True:
        k += 1
        term *= half_sq / (k * k)
        total += term
        if k > x / 2.0 and term < _TERM_TOL * total:
            return total


def bessel_i0(x: float) -> float:
    """I_0(x) by direct power-series summation.

    Raises OverflowError for ``x > 700``; use :func:`log_bessel_i0` there.
    """
    if x < 0:
        raise ParameterError("x must be >= 0")
    if x > _LOG_SWITCH:
        raise OverflowError("I_0(x) overflows for x > 700; use log_bessel_i0")
    return _i0_sum(float(x), 0)


def log_bessel_i0(x: float) -> float:
    if x < 0:
        raise ParameterError("x must be >= 0")
    if x == 0:
        return 0.0
    logs = np.array(_log_i0_terms(float(x), 0))
    top = logs.max()
    return float(top + math.log(np.exp(logs - top).sum()))


def bessel_i0_asymptotic(x: float) -> float:
    """Three-term large-x expansion e^x / sqrt(2 pi x) (1 + 1/8x + 9/128x^2)."""
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x))


def prob_all_children_activated(lam: float, p: float) -> float:
    """exp(-lam (1 + p)) * (I_0(2 lam sqrt(p)) - 1).

    This is sum_{k>=1} Pr[Po(lam) = k] * Pr[Po(lam p) = k]: the root's degree
    and its number of activated children are treated as independent
    Po(lam) and Po(lam p) counts that must coincide and be positive.
    """
    if lam <= 0:
        raise ParameterError("lam must be > 0")
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1]")
    x = 2.0 * lam * math.sqrt(p)
    if x == 0.0:
        return 0.0
    if x <= _LOG_SWITCH:
        # k = 0 term skipped directly rather than subtracting 1 from I_0
        return math.exp(-lam * (1.0 + p)) * _i0_sum(x, 1)
    logs = np.array(_log_i0_terms(x, 1))
    top = logs.max()
    return float(math.exp(-lam * (1.0 + p) + top + math.log(np.exp(logs - top).sum())))
