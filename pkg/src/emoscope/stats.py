"""Validation statistics: correlation inference, permutation tests,
detrended cross-correlation, HAC-robust lagged regression, KPSS
stationarity, two-proportion comparison, and ROC analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special
from scipy.stats import rankdata

from .errors import StatError


def normal_cdf(x: float) -> float:
    return float(special.ndtr(x))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise StatError(f"quantile needs p in (0,1), got {p}")
    return float(special.ndtri(p))


def t_cdf(x: float, df: int) -> float:
    if df < 1:
        raise StatError(f"t distribution needs df >= 1, got {df}")
    return float(special.stdtr(df, x))


def chi2_sf(x: float, df: int) -> float:
    if df < 1:
        raise StatError(f"chi-square needs df >= 1, got {df}")
    return float(special.chdtrc(df, x))


def _clean_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise StatError("series must be one-dimensional and equally long")
    mask = np.isfinite(x) & np.isfinite(y)
    return x[mask], y[mask]


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation on pairwise-complete values."""
    x, y = _clean_pair(x, y)
    n = len(x)
    if n < 3:
        raise StatError(f"need at least 3 paired observations, have {n}")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(xc @ xc)
    sy = math.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise StatError("correlation undefined for a constant series")
    r = (xc @ yc) / (sx * sy)
    return float(min(1.0, max(-1.0, r)))


def fisher_ci(r: float, n: int, level: float = 0.95) -> tuple[float, float]:
    """Confidence interval for a correlation via the atanh (Fisher z) transform."""
    if not 0.0 < level < 1.0:
        raise StatError(f"level must be in (0,1), got {level}")
    if n < 4:
        raise StatError(f"interval needs n >= 4, have {n}")
    if abs(r) >= 1.0:
        raise StatError(f"interval undefined at |r| >= 1 (r={r})")
    z = math.atanh(r)
    half = float(special.ndtri(0.5 + level / 2.0)) / math.sqrt(n - 3)
    return math.tanh(z - half), math.tanh(z + half)


def correlation_p(r: float, n: int) -> float:
    """Two-sided p-value for a correlation (t statistic with n-2 df)."""
    if n < 4:
        raise StatError(f"p-value needs n >= 4, have {n}")
    if abs(r) >= 1.0:
        raise StatError(f"p-value undefined at |r| >= 1 (r={r})")
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * special.stdtr(n - 2, -abs(t)))


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int
    ci_low: float
    ci_high: float
    p: float
    level: float = 0.95


def correlate(x, y, level: float = 0.95) -> CorrelationResult:
    """Pearson r with Fisher-z interval and two-sided p in one call."""
    x, y = _clean_pair(x, y)
    r = pearson(x, y)
    n = len(x)
    lo, hi = fisher_ci(r, n, level)
    return CorrelationResult(r=r, n=n, ci_low=lo, ci_high=hi, p=correlation_p(r, n), level=level)


def _shuffle(x: np.ndarray, rng: np.random.Generator, block: int) -> np.ndarray:
    if block <= 1:
        return rng.permutation(x)
    chunks = [x[i : i + block] for i in range(0, len(x), block)]
    order = rng.permutation(len(chunks))
    return np.concatenate([chunks[i] for i in order])


def _permuted_correlations(x, y, n_perm, rng, block):
    yc = y - y.mean()
    ynorm = math.sqrt(yc @ yc)
    xc = x - x.mean()
    obs = (xc @ yc) / (math.sqrt(xc @ xc) * ynorm)
    if block <= 1:
        perms = rng.permuted(np.tile(x, (n_perm, 1)), axis=1)
    else:
        perms = np.stack([_shuffle(x, rng, block) for _ in range(n_perm)])
    pc = perms - perms.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", pc, pc))
    stats = (pc @ yc) / (norms * ynorm)
    return obs, stats


def permutation_test(
    x,
    y,
    statistic: Callable[[np.ndarray, np.ndarray], float] | None = None,
    n_perm: int = 10_000,
    seed: int | None = None,
    block: int = 1,
) -> float:
    """Two-sided permutation p-value, shuffling x while y stays fixed.

    `statistic` defaults to the Pearson correlation (vectorized path).
    Uses the add-one estimator (1 + hits) / (n_perm + 1), so p is never
    exactly zero. `block` > 1 permutes consecutive blocks of that length
    instead of single observations, an option for autocorrelated series.
    A seed is mandatory: an unseeded test is not reproducible.
    """
    if seed is None:
        raise StatError("seed is required for a reproducible permutation test")
    if n_perm < 1:
        raise StatError(f"n_perm must be >= 1, got {n_perm}")
    if block < 1:
        raise StatError(f"block must be >= 1, got {block}")
    x, y = _clean_pair(x, y)
    n = len(x)
    if n < 3:
        raise StatError(f"need at least 3 paired observations, have {n}")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise StatError("permutation test undefined for a constant series")
    rng = np.random.default_rng(seed)
    if statistic is None or statistic is pearson:
        obs, perm_stats = _permuted_correlations(x, y, n_perm, rng, block)
        hits = int(np.sum(np.abs(perm_stats) >= abs(obs)))
    else:
        obs = statistic(x, y)
        hits = 0
        for _ in range(n_perm):
            if abs(statistic(_shuffle(x, rng, block), y)) >= abs(obs):
                hits += 1
    return (1 + hits) / (n_perm + 1)


@dataclass(frozen=True)
class DccaResult:
    rho: float
    window: int


def _box_residuals(profile: np.ndarray, window: int, t: np.ndarray, tt: float) -> np.ndarray:
    boxes = sliding_window_view(profile, window)
    centered = boxes - boxes.mean(axis=1, keepdims=True)
    slopes = (centered @ t) / tt
    return centered - slopes[:, None] * t[None, :]


def dcca(x, y, window: int = 12) -> DccaResult:
    """Detrended cross-correlation coefficient.

    Integrates the demeaned series, detrends every overlapping window
    (step 1) with a per-box least-squares line, and forms the ratio of
    the mean cross to auto detrended covariances. Identical inputs give
    exactly 1.0, negated inputs exactly -1.0.
    """
    if window < 4:
        raise StatError(f"window must be >= 4, got {window}")
    x, y = _clean_pair(x, y)
    n = len(x)
    if n < window:
        raise StatError(f"need at least window={window} observations, have {n}")
    profile_x = np.cumsum(x - x.mean())
    profile_y = np.cumsum(y - y.mean())
    t = np.arange(window, dtype=float)
    t -= t.mean()
    tt = float(t @ t)
    rx = _box_residuals(profile_x, window, t, tt)
    ry = _box_residuals(profile_y, window, t, tt)
    f2xy = (rx * ry).mean(axis=1).mean()
    f2xx = (rx * rx).mean(axis=1).mean()
    f2yy = (ry * ry).mean(axis=1).mean()
    if f2xx <= 0.0 or f2yy <= 0.0:
        raise StatError("zero detrended variance; dcca undefined")
    return DccaResult(rho=float(f2xy / math.sqrt(f2xx * f2yy)), window=window)


def dcca_statistic(window: int = 12) -> Callable[[np.ndarray, np.ndarray], float]:
    """Adapter so permutation_test can permute the dcca coefficient."""

    def stat(x, y):
        return dcca(x, y, window=window).rho

    return stat


def newey_west_lag(n: int) -> int:
    """Automatic Bartlett truncation lag, floor(4 * (n/100)^(2/9))."""
    if n < 1:
        raise StatError(f"need n >= 1, got {n}")
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


@dataclass(frozen=True)
class RegressionFit:
    """y_t ~ alpha + beta*x_t + gamma*y_{t-1} on standardized variables.

    Standard errors use the Newey-West (Bartlett kernel) covariance; the
    raw_* coefficients undo the standardization to original units.
    """

    alpha: float
    beta: float
    gamma: float
    hac_se: tuple[float, float, float]
    p_beta: float
    residuals: np.ndarray
    lag: int
    nobs: int
    raw_alpha: float
    raw_beta: float
    raw_gamma: float


def _newey_west_cov(design: np.ndarray, resid: np.ndarray, lag: int) -> np.ndarray:
    xe = design * resid[:, None]
    s = xe.T @ xe
    for j in range(1, lag + 1):
        w = 1.0 - j / (lag + 1.0)
        g = xe[j:].T @ xe[:-j]
        s = s + w * (g + g.T)
    bread = np.linalg.inv(design.T @ design)
    return bread @ s @ bread


def lagged_regression_hac(y, x, lag: int | None = None) -> RegressionFit:
    """Fit y on x with one autoregressive control and HAC errors.

    Both series are z-scored first, so beta is directly comparable
    across signals. The regression uses rows t = 2..n (one observation
    lost to the lag). lag=None selects the automatic truncation from the
    row count; lag=0 degrades to plain heteroskedasticity-robust errors.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.ndim != 1 or x.ndim != 1 or len(y) != len(x):
        raise StatError("series must be one-dimensional and equally long")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise StatError("missing values must be resolved before the regression")
    m = len(y)
    if m < 8:
        raise StatError(f"need at least 8 aligned observations, have {m}")
    sx = float(x.std(ddof=1))
    sy = float(y.std(ddof=1))
    if sx == 0.0 or sy == 0.0:
        raise StatError("regression undefined for a constant series")
    mx = float(x.mean())
    my = float(y.mean())
    xs = (x - mx) / sx
    ys = (y - my) / sy

    design = np.column_stack([np.ones(m - 1), xs[1:], ys[:-1]])
    target = ys[1:]
    if np.linalg.matrix_rank(design) < 3:
        raise StatError("singular design matrix")
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    nobs = m - 1
    L = newey_west_lag(nobs) if lag is None else int(lag)
    if L < 0:
        raise StatError(f"lag must be >= 0, got {lag}")
    cov = _newey_west_cov(design, resid, L)
    se = np.sqrt(np.diag(cov))
    alpha, beta, gamma = (float(c) for c in coef)
    if se[1] > 0.0:
        p_beta = float(2.0 * special.stdtr(nobs - 3, -abs(beta / se[1])))
    else:
        p_beta = 1.0 if beta == 0.0 else 0.0
    raw_beta = beta * sy / sx
    raw_alpha = my + sy * alpha - raw_beta * mx - gamma * my
    return RegressionFit(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        hac_se=tuple(float(s) for s in se),
        p_beta=p_beta,
        residuals=resid,
        lag=L,
        nobs=nobs,
        raw_alpha=float(raw_alpha),
        raw_beta=float(raw_beta),
        raw_gamma=gamma,
    )


KPSS_CRITICAL_VALUES = (
    (0.347, "p>0.1"),
    (0.463, "p>0.05"),
    (0.574, "p>0.025"),
    (0.739, "p>0.01"),
)


def kpss_lag(n: int) -> int:
    """Automatic Bartlett truncation lag, floor(4 * (n/100)^(1/4))."""
    if n < 1:
        raise StatError(f"need n >= 1, got {n}")
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


@dataclass(frozen=True)
class KpssResult:
    statistic: float
    lag: int
    verdict_band: str


def kpss(residuals, lag: int | None = None) -> KpssResult:
    """KPSS level-stationarity test; the null is stationarity, large
    statistics reject. The verdict is a band between tabulated critical
    values, not an exact p."""
    e = np.asarray(residuals, dtype=float)
    if e.ndim != 1:
        raise StatError("residuals must be one-dimensional")
    if not np.isfinite(e).all():
        raise StatError("residuals contain non-finite values")
    n = len(e)
    if n < 10:
        raise StatError(f"need at least 10 observations, have {n}")
    e = e - e.mean()
    if np.ptp(e) == 0.0:
        raise StatError("zero-variance residuals")
    L = kpss_lag(n) if lag is None else int(lag)
    if not 0 <= L < n:
        raise StatError(f"lag must be in [0, {n - 1}], got {lag}")
    partial = np.cumsum(e)
    numerator = float(partial @ partial) / (n * n)
    s2 = float(e @ e) / n
    for j in range(1, L + 1):
        s2 += 2.0 * (1.0 - j / (L + 1.0)) * float(e[j:] @ e[:-j]) / n
    if s2 <= 0.0:
        raise StatError("nonpositive long-run variance")
    statistic = numerator / s2
    band = "p<=0.01"
    for crit, label in KPSS_CRITICAL_VALUES:
        if statistic < crit:
            band = label
            break
    return KpssResult(statistic=float(statistic), lag=L, verdict_band=band)


def chi2_two_proportions(k1: int, n1: int, k2: int, n2: int) -> tuple[float, float]:
    """Pearson chi-square (1 df, no continuity correction) comparing two
    proportions k1/n1 and k2/n2. Returns (statistic, p)."""
    for k, n in ((k1, n1), (k2, n2)):
        if n <= 0:
            raise StatError("group sizes must be positive")
        if not 0 <= k <= n:
            raise StatError(f"counts must satisfy 0 <= k <= n, got k={k}, n={n}")
    successes = k1 + k2
    failures = (n1 - k1) + (n2 - k2)
    if successes == 0 or failures == 0:
        raise StatError("degenerate table: every outcome identical across both groups")
    total = n1 + n2
    delta = k1 * (n2 - k2) - k2 * (n1 - k1)
    statistic = total * delta * delta / (n1 * n2 * successes * failures)
    return float(statistic), float(special.chdtrc(1, statistic))


def percent_difference(p_with: float, p_without: float) -> float:
    """Relative difference of two proportions in percent of the second."""
    if p_without <= 0.0:
        raise StatError("baseline proportion must be positive")
    return 100.0 * (p_with - p_without) / p_without


def _check_binary(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    if labels.ndim != 1 or labels.shape != scores.shape:
        raise StatError("labels and scores must be equally long 1-d sequences")
    if not np.isfinite(scores).all():
        raise StatError("scores contain non-finite values")
    uniq = set(np.unique(labels).tolist())
    if not uniq <= {0, 1, False, True}:
        raise StatError(f"labels must be binary, got values {sorted(uniq)}")
    return labels.astype(bool), scores


def roc_auc(labels, scores) -> float:
    """P(random positive outranks random negative); ties count 1/2.

    Rank-sum form of the Mann-Whitney statistic, identical to the
    pairwise definition including tie handling.
    """
    labels, scores = _check_binary(labels, scores)
    npos = int(labels.sum())
    nneg = len(labels) - npos
    if npos == 0 or nneg == 0:
        raise StatError("need at least one positive and one negative label")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - npos * (npos + 1) / 2.0) / (npos * nneg))


def roc_curve(labels, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ROC points (fpr, tpr, threshold), thresholds swept high to low.

    Starts at (0, 0) with an infinite threshold; equal scores collapse
    into one point, so the curve has one step per distinct score.
    """
    labels, scores = _check_binary(labels, scores)
    npos = int(labels.sum())
    nneg = len(labels) - npos
    if npos == 0 or nneg == 0:
        raise StatError("need at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    last = np.r_[np.nonzero(np.diff(sorted_scores))[0], len(sorted_scores) - 1]
    tp = np.cumsum(sorted_labels)[last]
    fp = last + 1 - tp
    fpr = np.r_[0.0, fp / nneg]
    tpr = np.r_[0.0, tp / npos]
    thresholds = np.r_[np.inf, sorted_scores[last]]
    return fpr, tpr, thresholds


SIGNIFICANCE_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, "·"))


def significance_marker(p: float) -> str:
    """Star notation: *** p<0.001, ** p<0.01, * p<0.05, middle dot p<0.1,
    otherwise (n.s.)."""
    if not 0.0 <= p <= 1.0:
        raise StatError(f"p must be in [0,1], got {p}")
    for cut, mark in SIGNIFICANCE_LEVELS:
        if p < cut:
            return mark
    return "(n.s.)"
