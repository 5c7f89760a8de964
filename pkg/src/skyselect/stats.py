"""Two-sample Student t-test (pooled variance) and Cohen's d.

Two-sided p-values come from the t-distribution through the regularized
incomplete beta function, evaluated here by its continued fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX = 10_000


# ------------------------------------------------------------------ special functions


def _stirling_corr(x: float) -> float:
    """lgamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2] for x >= 10."""
    x2 = x * x
    return (1 / 12 - (1 / 360 - (1 / 1260 - 1 / (1680 * x2)) / x2) / x2) / x


def lbeta(a: float, b: float) -> float:
    """ln B(a, b), accurate also when one argument is huge."""
    if a > b:
        a, b = b, a
    if b < 10:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(b) - lgamma(a + b) without cancelling two huge numbers
    diff = (
        -(b - 0.5) * math.log1p(a / b)
        - a * math.log(a + b)
        + a
        + _stirling_corr(b)
        - _stirling_corr(a + b)
    )
    return math.lgamma(a) + diff


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
    h = d
    for m in range(1, _CF_MAX + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _CF_TINY else _CF_TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _CF_TINY else _CF_TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, xc: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    ``xc`` may carry 1 - x computed without cancellation.
    """
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    xc = 1.0 - x if xc is None else xc
    if not 0.0 <= x <= 1.0:
        raise ValueError("betainc needs 0 <= x <= 1")
    if x == 0.0:
        return 0.0
    if xc == 0.0:
        return 1.0
    # log1p of the smaller complement keeps a ln x accurate when a is huge
    log_x = math.log1p(-xc) if xc < 0.5 else math.log(x)
    log_xc = math.log1p(-x) if x < 0.5 else math.log(xc)
    log_front = a * log_x + b * log_xc - lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, xc) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom.

    ``df = inf`` gives the normal limit. Finite df is accurate to about
    1e-10 absolute up to df = 1e8; beyond that the continued fraction
    converges slowly near the distribution's mode.
    """
    if not df > 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    if math.isinf(df):
        return math.erfc(abs(t) / math.sqrt(2.0))
    t2 = t * t
    # I_{df/(df+t^2)}(df/2, 1/2), with both x and 1 - x formed directly
    x = df / (df + t2)
    xc = t2 / (df + t2)
    return min(1.0, betainc(df / 2.0, 0.5, x, xc))


# ------------------------------------------------------------------ t-test


@dataclass(frozen=True)
class GroupSummary:
    n: int
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DataError(f"a group needs n >= 2, got {self.n}")
        if not self.sd >= 0:
            raise DataError(f"standard deviation must be >= 0, got {self.sd}")

    @classmethod
    def of(cls, samples) -> "GroupSummary":
        x = np.asarray(samples, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise DataError(f"a group needs at least 2 samples, got {x.size}")
        if not np.isfinite(x).all():
            raise DataError("samples must be finite")
        return cls(len(x), float(x.mean()), float(x.std(ddof=1)))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    cohen_d: float
    p: float
    infinite_t: bool = False

    @property
    def stars(self) -> str:
        return "***" if self.p < 0.001 else "**" if self.p < 0.01 else "*" if self.p < 0.05 else ""


def t_test(a: GroupSummary, b: GroupSummary) -> TTestResult:
    """Student t for mean(a) - mean(b) with pooled SD; d uses the same SD."""
    df = a.n + b.n - 2
    diff = a.mean - b.mean
    sp = math.sqrt(((a.n - 1) * a.sd**2 + (b.n - 1) * b.sd**2) / df)
    if sp == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, df, 0.0, 1.0)
        inf = math.copysign(math.inf, diff)
        return TTestResult(inf, df, inf, 0.0, infinite_t=True)
    t = diff / (sp * math.sqrt(1.0 / a.n + 1.0 / b.n))
    return TTestResult(t, df, diff / sp, t_two_sided_p(t, df))


def t_test_raw(samples_a, samples_b) -> TTestResult:
    return t_test(GroupSummary.of(samples_a), GroupSummary.of(samples_b))


def summary_row(name: str, novice: GroupSummary, expert: GroupSummary) -> dict[str, object]:
    """Novice vs expert table row: means (SDs), t, p, stars, d."""
    r = t_test(novice, expert)
    return {
        "feature": name,
        "novice": f"{novice.mean:.2f} ({novice.sd:.2f})",
        "expert": f"{expert.mean:.2f} ({expert.sd:.2f})",
        "t": "inf" if r.infinite_t else f"{r.t:.2f}",
        "df": r.df,
        "p": f"{r.p:.4f}",
        "sig": r.stars,
        "d": "inf" if r.infinite_t else f"{r.cohen_d:.2f}",
    }
