"""One-way ANOVA with a self-contained F-distribution tail.

F = (SS_between / df_between) / (SS_within / df_within). The p-value is
the F survival function

    p = I_x(d2/2, d1/2),   x = d2 / (d2 + d1 * F)

where I is the regularized incomplete beta function, evaluated by the
standard continued fraction (modified Lentz) to absolute error below
1e-10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateInputError, InputError

_CF_EPS = 1e-15
_CF_FPMIN = 1e-300
_CF_MAX_ITER = 500


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    p_value: float
    df_between: int
    df_within: int
    group_means: tuple[float, ...]


def one_way_anova(groups: list[list[float]]) -> AnovaResult:
    """Classic one-way fixed-effects ANOVA over ``groups``.

    Requires at least two groups with at least two samples each. When
    all values are identical everywhere the statistic is 0/0 and a
    DegenerateInputError is raised; when only the within-variance is
    zero the statistic is +inf with p = 0.
    """
    if len(groups) < 2:
        raise InputError(f"ANOVA needs at least 2 groups, got {len(groups)}")
    for i, g in enumerate(groups):
        if len(g) < 2:
            raise InputError(f"ANOVA group {i} needs at least 2 samples, got {len(g)}")

    sizes = [len(g) for g in groups]
    means = [math.fsum(g) / len(g) for g in groups]
    n_total = sum(sizes)
    grand = math.fsum(math.fsum(g) for g in groups) / n_total

    ss_between = math.fsum(n * (m - grand) ** 2 for n, m in zip(sizes, means))
    ss_within = math.fsum(
        math.fsum((x - m) ** 2 for x in g) for g, m in zip(groups, means)
    )
    df_between = len(groups) - 1
    df_within = n_total - len(groups)

    if ss_within == 0.0 and ss_between == 0.0:
        raise DegenerateInputError("all observations identical: F is 0/0")
    if ss_within == 0.0:
        return AnovaResult(math.inf, 0.0, df_between, df_within, tuple(means))

    f = (ss_between / df_between) / (ss_within / df_within)
    p = f_survival(f, df_between, df_within)
    return AnovaResult(f, p, df_between, df_within, tuple(means))


def f_survival(f: float, df_num: int, df_den: int) -> float:
    """P(F_{df_num, df_den} > f)."""
    if f < 0:
        raise InputError(f"F statistic must be >= 0, got {f}")
    if df_num < 1 or df_den < 1:
        raise InputError("degrees of freedom must be >= 1")
    if math.isinf(f):
        return 0.0
    x = df_den / (df_den + df_num * f)
    return regularized_incomplete_beta(df_den / 2.0, df_num / 2.0, x)


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise InputError("beta parameters must be positive")
    if x < 0 or x > 1:
        raise InputError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # use the branch where the continued fraction converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")
