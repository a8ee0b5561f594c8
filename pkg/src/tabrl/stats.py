"""One-way ANOVA and Tukey HSD on per-repetition scores.

The F tail probability uses the regularized incomplete beta function; the
studentized range distribution is integrated numerically: an adaptive outer
integral over the scaled chi variable and a fixed Gauss-Legendre rule for the
inner normal-range integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import integrate, special

P_STRONG = 0.01
P_WEAK = 0.05


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class AnovaResult:
    ss_between: float
    ss_within: float
    ss_total: float
    df_between: int
    df_within: int
    ms_between: float
    ms_within: float
    f: float
    p: float


@dataclass(frozen=True)
class TukeyPair:
    first: str
    second: str
    mean_diff: float  # mean(first) - mean(second)
    q: float
    p: float

    @property
    def inference(self) -> str:
        return inference_label(self.p)

    def p_one_sided(self, first_larger: bool = True) -> float:
        """Directional p-value: half the two-sided value when the difference points the expected way."""
        right_way = self.mean_diff > 0 if first_larger else self.mean_diff < 0
        return self.p / 2 if right_way else 1 - self.p / 2


@dataclass(frozen=True)
class TukeyResult:
    pairs: tuple
    k: int
    df_within: int
    ms_within: float

    def pair(self, a: str, b: str) -> TukeyPair:
        for p in self.pairs:
            if (p.first, p.second) == (a, b):
                return p
            if (p.first, p.second) == (b, a):
                return TukeyPair(a, b, -p.mean_diff, p.q, p.p)
        raise KeyError((a, b))


def inference_label(p: float) -> str:
    if p < P_STRONG:
        return "p<0.01"
    if p < P_WEAK:
        return "p<0.05"
    return "none"


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail of the F distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return float(special.betainc(df2 / 2, df1 / 2, df2 / (df2 + df1 * f)))


def anova_from_sums(ss_between: float, df_between: int, ss_within: float, df_within: int) -> AnovaResult:
    if df_between <= 0 or df_within <= 0:
        raise StatsError("degrees of freedom must be positive")
    if ss_between < 0 or ss_within < 0:
        raise StatsError("sums of squares must be non-negative")
    msb = ss_between / df_between
    msw = ss_within / df_within
    if msw == 0:
        f = 0.0 if msb == 0 else math.inf
    else:
        f = msb / msw
    return AnovaResult(ss_between, ss_within, ss_between + ss_within, df_between, df_within, msb, msw,
                       f, f_sf(f, df_between, df_within))


def _as_groups(groups):
    arrs = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(arrs) < 2:
        raise StatsError("need at least 2 groups")
    for i, g in enumerate(arrs):
        if len(g) < 2:
            raise StatsError(f"group {i} has {len(g)} sample(s); need at least 2")
        if not np.all(np.isfinite(g)):
            raise StatsError(f"group {i} contains non-finite values")
    return arrs


def _decompose(arrs):
    # centre on the grand mean first so adding a constant cannot cost precision
    grand = np.concatenate(arrs).mean()
    cen = [g - grand for g in arrs]
    means = [c.mean() for c in cen]
    ssb = float(sum(len(c) * m * m for c, m in zip(cen, means)))
    ssw = float(sum(((c - m) ** 2).sum() for c, m in zip(cen, means)))
    sst = float(sum((c ** 2).sum() for c in cen))
    # rounding noise from constant groups or equal group means is treated as zero
    floor = 1e-13 * max(sst, 1e-300)
    if ssw <= floor:
        ssw = 0.0
    if ssb <= floor:
        ssb = 0.0
    return ssb, ssw, sst


def one_way_anova(groups) -> AnovaResult:
    arrs = _as_groups(groups)
    k = len(arrs)
    n = sum(len(g) for g in arrs)
    ssb, ssw, sst = _decompose(arrs)
    res = anova_from_sums(ssb, k - 1, ssw, n - k)
    return AnovaResult(res.ss_between, res.ss_within, sst, res.df_between, res.df_within,
                       res.ms_between, res.ms_within, res.f, res.p)


# studentized range --------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)
_Z_LO, _Z_HI = -8.5, 8.5


def _range_cdf(w: np.ndarray, k: int) -> np.ndarray:
    """P(range of k iid standard normals <= w), vectorised over w."""
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    half = (_Z_HI - _Z_LO) / 2
    z = _Z_LO + half * (_GL_NODES + 1)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    inner = special.ndtr(z)[None, :] - special.ndtr(z[None, :] - w[:, None])
    inner = np.clip(inner, 0.0, 1.0)
    vals = k * (phi[None, :] * inner ** (k - 1)) @ _GL_WEIGHTS * half
    return np.clip(vals, 0.0, 1.0)


def _chi_logpdf(s, df):
    # density of sqrt(chi2_df / df)
    return (df / 2 * math.log(df) - special.gammaln(df / 2) - (df / 2 - 1) * math.log(2)
            + (df - 1) * np.log(s) - df * s * s / 2)


@lru_cache(maxsize=4096)
def studentized_range_cdf(q: float, k: int, df: float) -> float:
    if k < 2:
        raise StatsError("studentized range needs k >= 2")
    if q <= 0:
        return 0.0
    if math.isinf(q):
        return 1.0
    if math.isinf(df):
        return float(_range_cdf(q, k)[0])
    sd = 1 / math.sqrt(2 * df)
    lo = max(1e-12, 1 - 40 * sd)
    hi = 1 + 40 * sd + (10.0 if df < 10 else 0.0)

    def f(s):
        return float(np.exp(_chi_logpdf(s, df)) * _range_cdf(q * s, k)[0])

    val, _ = integrate.quad(f, lo, hi, points=[1.0] if lo < 1 < hi else None, limit=200,
                            epsabs=1e-11, epsrel=1e-10)
    return min(1.0, max(0.0, val))


def studentized_range_sf(q: float, k: int, df: float) -> float:
    return 1.0 - studentized_range_cdf(float(q), int(k), float(df))


def tukey_hsd(groups, labels=None) -> TukeyResult:
    """All pairwise comparisons; unequal sizes use the Tukey-Kramer harmonic mean."""
    arrs = _as_groups(groups)
    k = len(arrs)
    labels = [str(i) for i in range(k)] if labels is None else [str(x) for x in labels]
    if len(labels) != k or len(set(labels)) != k:
        raise StatsError("need one distinct label per group")
    n = sum(len(g) for g in arrs)
    _, ssw, _ = _decompose(arrs)
    dfw = n - k
    msw = ssw / dfw
    grand = np.concatenate(arrs).mean()
    means = [float((g - grand).mean()) for g in arrs]
    pairs = []
    for i, j in combinations(range(k), 2):
        diff = means[i] - means[j]
        n_h = 2.0 / (1.0 / len(arrs[i]) + 1.0 / len(arrs[j]))
        if msw == 0:
            qstat = 0.0 if diff == 0 else math.inf
        else:
            qstat = abs(diff) / math.sqrt(msw / n_h)
        p = 1.0 if qstat == 0 else studentized_range_sf(qstat, k, dfw)
        pairs.append(TukeyPair(labels[i], labels[j], diff, qstat, p))
    return TukeyResult(tuple(pairs), k, dfw, msw)
