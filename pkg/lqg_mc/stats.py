from typing import NamedTuple, Tuple
import numpy as np
from scipy import stats
from .errors import DomainError
from .rng import get_rng

# p-value convention of the verify suites
P_THRESHOLD = 0.01
MIN_KS_SAMPLES = 50


class SlopeFit(NamedTuple):
    slope: float
    stderr: float
    window: Tuple[float, float]
    n_points: int
    r_squared: float

    def within(self, target, tol):
        return abs(self.slope - target) <= tol


class KsReport(NamedTuple):
    statistic: float
    p_value: float
    n1: int
    n2: int


class BinomialCheck(NamedTuple):
    p_hat: float
    stderr: float
    z_score: float
    passed: bool


def _loglog_fit(x, y):
    res = stats.linregress(np.log(x), np.log(y))
    return res.slope, res.rvalue**2


def _binned_curve(samples, edges, kind, n_total):
    if kind == "density":
        counts, _ = np.histogram(samples, edges)
        centers = np.sqrt(edges[:-1] * edges[1:])
        y = counts / (n_total * np.diff(edges))
        keep = counts > 0
        return centers[keep], y[keep]
    # survival at the bin edges, fraction strictly above
    srt = np.sort(samples)
    above = len(srt) - np.searchsorted(srt, edges[:-1], side="right")
    keep = above > 0
    return edges[:-1][keep], above[keep] / n_total


def fit_tail_exponent(
    samples,
    window,
    n_bins=20,
    kind="density",
    n_bootstrap=200,
    seed=0,
    min_samples=1000,
):
    """
    Log-log least-squares slope of the binned density (or survival function)
    over a window, with a bootstrap standard error.

    Args:
        samples: positive samples.
        window: (lo, hi), 0 < lo < hi.
        n_bins (int): number of logarithmic bins.
        kind (str): "density" or "survival".
        n_bootstrap (int): bootstrap resamples of the in-window samples.
        seed: seed of the bootstrap stream.
        min_samples (int): minimal number of in-window samples.

    Returns:
        SlopeFit
    """
    lo, hi = window
    if not (0 < lo < hi):
        raise DomainError(f"degenerate window: {window}")
    if kind not in ("density", "survival"):
        raise DomainError(f"unknown fit kind: {kind}")
    samples = np.asarray(samples, dtype=float)
    inside = samples[(samples >= lo) & (samples <= hi)]
    if len(inside) < min_samples:
        raise DomainError(
            f"insufficient in-window mass: {len(inside)} samples in {window}, "
            f"need {min_samples}"
        )
    # survival counts everything above each edge, not only the window
    base = inside if kind == "density" else samples[samples >= lo]
    edges = np.geomspace(lo, hi, n_bins + 1)
    x, y = _binned_curve(base, edges, kind, len(base))
    if len(x) < 3:
        raise DomainError("fewer than three populated bins")
    slope, r2 = _loglog_fit(x, y)

    rng = get_rng(seed, "stats")
    boot = np.zeros(n_bootstrap)
    for i in range(n_bootstrap):
        resample = rng.choice(base, len(base), replace=True)
        bx, by = _binned_curve(resample, edges, kind, len(base))
        boot[i] = _loglog_fit(bx, by)[0]
    stderr = float(boot.std(ddof=1)) if n_bootstrap > 1 else np.nan
    return SlopeFit(float(slope), stderr, (lo, hi), int(len(x)), float(r2))


def two_sample_ks(a, b):
    """
    Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    :param a: first sample, at least 50 values
    :param b: second sample, at least 50 values
    :return: KsReport
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if np.isnan(a).any() or np.isnan(b).any():
        raise DomainError("NaN in KS input")
    if min(len(a), len(b)) < MIN_KS_SAMPLES:
        raise DomainError(
            f"KS test needs at least {MIN_KS_SAMPLES} samples per side, "
            f"got {len(a)} and {len(b)}"
        )
    res = stats.ks_2samp(a, b, method="asymp")
    return KsReport(float(res.statistic), float(res.pvalue), len(a), len(b))


def ks_noise_level(n1, n2):
    # scale of the KS statistic under the null
    return float(np.sqrt((n1 + n2) / (n1 * n2)))


def binomial_check(successes, n_trials, p_target, n_sigma=3.0):
    p_hat = successes / n_trials
    stderr = np.sqrt(p_target * (1 - p_target) / n_trials)
    z = (p_hat - p_target) / stderr if stderr > 0 else 0.0
    return BinomialCheck(float(p_hat), float(stderr), float(z), bool(abs(z) <= n_sigma))


def proportion_stderr(p_hat, n_trials):
    return float(np.sqrt(p_hat * (1 - p_hat) / n_trials))


def is_nonincreasing(values, stderrs=None, n_sigma=2.0):
    # isotonic check: every rise stays within n_sigma combined standard errors
    values = np.asarray(values, dtype=float)
    se = np.zeros_like(values) if stderrs is None else np.asarray(stderrs, dtype=float)
    rise = np.diff(values)
    slack = n_sigma * np.sqrt(se[:-1] ** 2 + se[1:] ** 2)
    return bool(np.all(rise <= slack))


def loglog_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log regression needs positive values")
    res = stats.linregress(np.log(x), np.log(y))
    return SlopeFit(
        float(res.slope), float(res.stderr), (float(x.min()), float(x.max())),
        len(x), float(res.rvalue**2),
    )


class ConvergenceTable:
    def __init__(self, ladder, n_samples, to_previous, to_finest, monotone):
        self.ladder = list(ladder)
        self.n_samples = n_samples
        self.to_previous = to_previous
        self.to_finest = to_finest
        self.monotone = monotone

    def to_table(self):
        # columns: rung, KS distance to the previous rung, KS distance to the finest
        return np.stack(
            [np.asarray(self.ladder, dtype=float), self.to_previous, self.to_finest], axis=1
        )

    def print_report(self):
        for rung, prev, fine in zip(self.ladder, self.to_previous, self.to_finest):
            print(f"{rung}\t: previous {prev:.4f}, finest {fine:.4f}")
        print(f"monotone\t: {self.monotone}")
        print("-----------------")


def dyadic_convergence_study(sampler, ladder, n_samples, observable=None, seed=0, n_sigma=2.0):
    """
    KS distances of an observable between consecutive rungs of a parameter
    ladder, and against the finest (last) rung.

    Args:
        sampler: callable(rung, n_samples, rng) -> samples.
        ladder: parameter values, coarse to fine, at least three.
        observable: optional callable applied to every sample.
    """
    if len(ladder) < 3:
        raise DomainError("a convergence study needs at least three rungs")
    values = []
    for i, rung in enumerate(ladder):
        out = sampler(rung, n_samples, get_rng(seed, "stats", i + 1))
        if observable is not None:
            out = [observable(s) for s in out]
        values.append(np.asarray(out, dtype=float))
    to_previous = np.zeros(len(ladder))
    to_finest = np.zeros(len(ladder))
    for i in range(len(ladder)):
        if i > 0:
            to_previous[i] = stats.ks_2samp(values[i - 1], values[i]).statistic
        to_finest[i] = stats.ks_2samp(values[i], values[-1]).statistic
    noise = ks_noise_level(n_samples, n_samples)
    monotone = is_nonincreasing(to_finest, np.full(len(ladder), noise / 2.0), n_sigma)
    return ConvergenceTable(ladder, n_samples, to_previous, to_finest, monotone)
