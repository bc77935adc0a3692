"""Nonparametric and parametric group-comparison statistics.

Pure-Python implementations kept deliberately explicit: rank sums with
midranks, an exact Mann-Whitney null distribution for small tie-free samples,
Welch/pooled t-tests with the regularized incomplete beta for p-values, and
Cohen's kappa in exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import DegenerateAgreement, ZeroVariance

EXACT_LIMIT = 12  # full enumeration of the U distribution up to this n1+n2


@dataclass(frozen=True)
class StatResult:
    """One group comparison: statistic, two-sided p, effect size, and the
    summaries (means or medians) the comparison was built from."""

    method: str               # mann_whitney | t_test | kappa
    statistic: float          # U, t, or kappa
    p_value: float
    effect_size: float | None
    n1: int
    n2: int
    summary_a: dict[str, float] = field(default_factory=dict)
    summary_b: dict[str, float] = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


def _median(xs: Sequence[float]) -> float:
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    return float(s[mid]) if n % 2 else (s[mid - 1] + s[mid]) / 2.0


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0  # average of ranks i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _rank_sum_counts(n: int, k: int) -> list[int]:
    """Number of k-subsets of ranks {1..n} per rank sum (index = sum)."""
    max_sum = k * n
    ways = [[0] * (max_sum + 1) for _ in range(k + 1)]
    ways[0][0] = 1
    for rank in range(1, n + 1):
        for j in range(min(rank, k), 0, -1):
            row = ways[j]
            prev = ways[j - 1]
            for s in range(max_sum, rank - 1, -1):
                if prev[s - rank]:
                    row[s] += prev[s - rank]
    return ways[k]


def _exact_two_sided_p(u: float, n1: int, n2: int) -> float:
    """Exact two-sided p from the full U null distribution (tie-free):
    2 * min(P(U <= u), P(U >= u)), capped at 1."""
    counts_by_sum = _rank_sum_counts(n1 + n2, n1)
    offset = n1 * (n1 + 1) // 2
    total = math.comb(n1 + n2, n1)
    # counts indexed by U = ranksum - offset, U in [0, n1*n2]
    cum_le = 0
    cum_ge = 0
    u_int = int(round(u))
    for uu, cnt in enumerate(counts_by_sum[offset:]):
        if uu <= u_int:
            cum_le += cnt
        if uu >= u_int:
            cum_ge += cnt
    p = 2.0 * min(cum_le, cum_ge) / total
    return min(1.0, p)


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Mann-Whitney U test with midranks for ties.

    The reported statistic is U for group ``a``. Small tie-free samples
    (n1 + n2 <= 12) get an exact two-sided p by full enumeration of the rank
    distribution; larger or tied samples use the normal approximation with tie
    and continuity corrections. Effect size is the rank-biserial correlation
    r = 1 - 2U/(n1*n2), +1 when every a-value sits below every b-value.

    Degenerate input (every value identical across both groups) is not an
    error: it reports U = n1*n2/2, p = 1, r = 0.
    """
    n1, n2 = len(a), len(b)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be non-empty")
    combined = list(a) + list(b)
    ranks = _midranks(combined)
    r_a = math.fsum(ranks[:n1])
    u_a = r_a - n1 * (n1 + 1) / 2.0
    r = 1.0 - 2.0 * u_a / (n1 * n2)

    tie_sizes = []
    seen: dict[float, int] = {}
    for v in combined:
        seen[v] = seen.get(v, 0) + 1
    tie_sizes = [c for c in seen.values() if c > 1]
    has_ties = bool(tie_sizes)
    n = n1 + n2

    degenerate = len(seen) == 1
    if degenerate:
        return StatResult(
            method="mann_whitney", statistic=u_a, p_value=1.0, effect_size=0.0,
            n1=n1, n2=n2,
            summary_a={"median": _median(a)}, summary_b={"median": _median(b)},
            details={"exact": False, "ties": True, "degenerate": True},
        )

    if not has_ties and n <= EXACT_LIMIT:
        p = _exact_two_sided_p(u_a, n1, n2)
        exact = True
    else:
        mu = n1 * n2 / 2.0
        tie_term = math.fsum(t**3 - t for t in tie_sizes) / (n * (n - 1))
        sigma_sq = n1 * n2 / 12.0 * ((n + 1) - tie_term)
        if sigma_sq <= 0:
            p = 1.0
        else:
            z = max(0.0, abs(u_a - mu) - 0.5) / math.sqrt(sigma_sq)
            p = min(1.0, 2.0 * _norm_sf(z))
        exact = False

    return StatResult(
        method="mann_whitney", statistic=u_a, p_value=p, effect_size=r,
        n1=n1, n2=n2,
        summary_a={"median": _median(a)}, summary_b={"median": _median(b)},
        details={"exact": exact, "ties": has_ties},
    )


# -- Student's t -----------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz)."""
    MAXIT, EPS, FPMIN = 200, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _t_sf_two_sided(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return _betainc_reg(df / 2.0, 0.5, x)


def _var(xs: Sequence[float], mean: float) -> float:
    return math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1)


def t_test(a: Sequence[float], b: Sequence[float], variant: str = "welch") -> StatResult:
    """Two-sample t-test, Welch (default) or pooled variance.

    Cohen's d uses the pooled standard deviation in both variants. Requires
    nonzero variance in at least one group.
    """
    if variant not in ("welch", "pooled"):
        raise ValueError("variant must be welch|pooled")
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("both samples need at least two observations")
    m1, m2 = _mean(a), _mean(b)
    v1, v2 = _var(a, m1), _var(b, m2)
    if v1 == 0.0 and v2 == 0.0:
        if m1 == m2:
            # identical constants: no evidence of difference
            return StatResult("t_test", 0.0, 1.0, 0.0, n1, n2,
                              {"mean": m1}, {"mean": m2},
                              {"df": float(n1 + n2 - 2), "variant": variant, "degenerate": True})
        raise ZeroVariance("both groups have zero variance")

    sp_sq = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2)
    d = (m1 - m2) / math.sqrt(sp_sq) if sp_sq > 0 else 0.0

    if variant == "pooled":
        se = math.sqrt(sp_sq * (1.0 / n1 + 1.0 / n2))
        df = float(n1 + n2 - 2)
    else:
        se = math.sqrt(v1 / n1 + v2 / n2)
        num = (v1 / n1 + v2 / n2) ** 2
        den = (v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1)
        df = num / den
    t = (m1 - m2) / se
    p = _t_sf_two_sided(t, df)
    return StatResult(
        method="t_test", statistic=t, p_value=p, effect_size=d, n1=n1, n2=n2,
        summary_a={"mean": m1}, summary_b={"mean": m2},
        details={"df": df, "variant": variant},
    )


# -- Cohen's kappa ----------------------------------------------------------------


def cohen_kappa(confusion: Sequence[Sequence[int]]) -> StatResult:
    """Chance-corrected agreement from a K x K confusion matrix.

    kappa = (p_o - p_e) / (1 - p_e), computed in exact integer arithmetic so
    diagonal matrices give exactly 1.0. The p-value is the large-sample
    two-sided z-test of kappa = 0 using the standard null variance.
    """
    k = len(confusion)
    if k == 0 or any(len(row) != k for row in confusion):
        raise ValueError("confusion matrix must be square and non-empty")
    for i, row in enumerate(confusion):
        for j, c in enumerate(row):
            if isinstance(c, bool) or not isinstance(c, int) or c < 0:
                raise ValueError(f"count [{i}][{j}] must be a non-negative integer")
    total = sum(sum(row) for row in confusion)
    if total <= 0:
        raise ValueError("total count must be positive")

    diag = sum(confusion[i][i] for i in range(k))
    row_m = [sum(confusion[i][j] for j in range(k)) for i in range(k)]
    col_m = [sum(confusion[i][j] for i in range(k)) for j in range(k)]
    expect = sum(r * c for r, c in zip(row_m, col_m))  # N^2 * p_e

    num = total * diag - expect      # N^2 * (p_o - p_e)
    den = total * total - expect     # N^2 * (1 - p_e)
    if den == 0:
        # both raters used a single category; agreement is total by construction
        if num == 0:
            kappa = 1.0
        else:
            raise DegenerateAgreement("expected agreement is 1 with imperfect observed agreement")
        return StatResult("kappa", kappa, 1.0, kappa, total, total,
                          {"p_o": 1.0}, {"p_e": 1.0}, {"k": k, "degenerate": True})
    kappa = num / den

    p_o = diag / total
    p_e = expect / (total * total)
    pr = [r / total for r in row_m]
    pc = [c / total for c in col_m]
    var0 = (p_e + p_e * p_e - sum(pr[i] * pc[i] * (pr[i] + pc[i]) for i in range(k)))
    var0 /= total * (1.0 - p_e) ** 2
    if var0 > 0:
        z = kappa / math.sqrt(var0)
        p = min(1.0, 2.0 * _norm_sf(abs(z)))
    else:
        p = 1.0
    return StatResult(
        method="kappa", statistic=kappa, p_value=p, effect_size=kappa,
        n1=total, n2=total,
        summary_a={"p_o": p_o}, summary_b={"p_e": p_e},
        details={"k": k},
    )
