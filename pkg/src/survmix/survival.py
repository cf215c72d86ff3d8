"""Kaplan-Meier estimation, Greenwood variance, log-minus-log confidence
bands, and the two-group log-rank test.

Ties follow the standard convention: at equal times deaths are processed
before censorings, so a subject censored exactly at an event time is still
in the risk set at that time and leaves afterwards.  The survival curve
steps only at event times; censoring times shrink the risk set silently.

While no censoring has occurred before an event time, the product estimator
telescopes to (survivors / n) and is computed as one exact integer division,
so on fully-observed data the curve equals the empirical survivor fraction
bit for bit.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .distributions import chi_square_sf, normal_quantile
from .errors import DomainError


def _check_samples(durations, events):
    durations = np.asarray(durations, dtype=float)
    events = np.asarray(events)
    if durations.ndim != 1 or durations.shape != events.shape:
        raise DomainError("durations and events must be equal-length vectors")
    if durations.size == 0:
        raise DomainError("survival fit needs at least one subject")
    if not np.isfinite(durations).all() or (durations <= 0).any():
        raise DomainError("durations must be positive finite numbers")
    if not np.isin(events, (0, 1)).all():
        raise DomainError("events must be 0 (censored) or 1 (death)")
    return durations, events.astype(np.int64)


@dataclass(frozen=True)
class KMCurve:
    """Step-function survival estimate over the distinct event times.

    `variance` / confidence fields are None until the corresponding pass has
    run; the *_defined masks flag times where the quantity exists (Greenwood
    breaks once the risk set empties; the log-minus-log transform breaks
    where the curve sits at 1 or 0).
    """

    times: np.ndarray
    at_risk: np.ndarray
    deaths: np.ndarray
    survival: np.ndarray
    n_subjects: int
    variance: np.ndarray | None = None
    variance_defined: np.ndarray | None = None
    ci_lower: np.ndarray | None = None
    ci_upper: np.ndarray | None = None
    ci_defined: np.ndarray | None = None
    confidence_level: float | None = None

    def survival_at(self, t) -> np.ndarray:
        """Step-function evaluation; 1.0 before the first event time."""
        t = np.asarray(t, dtype=float)
        index = np.searchsorted(self.times, t, side="right")
        padded = np.concatenate([[1.0], self.survival])
        return padded[index]


def km_fit(durations, events) -> KMCurve:
    """Product-limit estimate over distinct event times."""
    durations, events = _check_samples(durations, events)
    n = durations.size
    event_times, deaths = np.unique(durations[events == 1], return_counts=True)
    all_sorted = np.sort(durations)
    censored_sorted = np.sort(durations[events == 0])

    at_risk = n - np.searchsorted(all_sorted, event_times, side="left")
    censored_before = np.searchsorted(censored_sorted, event_times, side="left")

    survival = np.empty(len(event_times))
    running = 1.0
    for i in range(len(event_times)):
        r, d = int(at_risk[i]), int(deaths[i])
        if censored_before[i] == 0:
            running = (r - d) / n  # exact: the product telescopes
        else:
            running = running * (r - d) / r
        survival[i] = running
    return KMCurve(times=event_times, at_risk=at_risk.astype(np.int64),
                   deaths=deaths, survival=survival, n_subjects=n)


def greenwood_variance(curve: KMCurve) -> KMCurve:
    """Attach Greenwood's variance: S(t)^2 * sum d / (r (r - d)).

    Once a time exhausts its risk set (d == r) the sum is undefined from
    that point on; those entries are NaN and flagged False.
    """
    r = curve.at_risk.astype(float)
    d = curve.deaths.astype(float)
    defined = np.cumprod(r > d).astype(bool)
    terms = np.where(defined, d / (r * np.maximum(r - d, 1.0)), np.nan)
    variance = np.where(defined, curve.survival ** 2 * np.cumsum(terms), np.nan)
    return dataclasses.replace(curve, variance=variance, variance_defined=defined)


def km_confidence(curve: KMCurve, level: float = 0.95) -> KMCurve:
    """Attach log-minus-log confidence bands.

    Bounds are S^exp(+-z*sd/(S ln S)); they are undefined where the curve is
    exactly 1 or 0 (the transform is singular) or where the variance is.
    """
    if curve.variance is None:
        raise DomainError("compute the Greenwood variance before the bands")
    if not 0.0 < level < 1.0:
        raise DomainError("confidence level must lie strictly between 0 and 1")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    s = curve.survival
    defined = curve.variance_defined & (s > 0.0) & (s < 1.0)
    lower = np.full(len(s), np.nan)
    upper = np.full(len(s), np.nan)
    where = np.flatnonzero(defined)
    if where.size:
        sd = np.sqrt(curve.variance[where])
        theta = z * sd / (s[where] * np.log(s[where]))
        a = s[where] ** np.exp(theta)
        b = s[where] ** np.exp(-theta)
        lower[where] = np.minimum(a, b)
        upper[where] = np.maximum(a, b)
    return dataclasses.replace(curve, ci_lower=lower, ci_upper=upper,
                               ci_defined=defined, confidence_level=level)


@dataclass(frozen=True)
class LogrankResult:
    chi_square: float
    df: int
    p_value: float
    observed: dict  # group label -> observed deaths
    expected: dict  # group label -> expected deaths under the null

    def to_dict(self) -> dict:
        return {"chi_square": self.chi_square, "df": self.df,
                "p_value": self.p_value, "observed": dict(self.observed),
                "expected": dict(self.expected)}


def logrank_test(durations, events, groups) -> LogrankResult:
    """Two-group log-rank test with hypergeometric variance."""
    durations, events = _check_samples(durations, events)
    groups = np.asarray(groups)
    if groups.shape != durations.shape:
        raise DomainError("groups must match durations in length")
    labels = np.unique(groups)
    if len(labels) != 2:
        raise DomainError(f"log-rank test needs exactly two groups, got {len(labels)}")
    if events.sum() == 0:
        raise DomainError("log-rank test needs at least one event")

    in_a = groups == labels[0]
    event_times, d = np.unique(durations[events == 1], return_counts=True)
    d = d.astype(float)
    d_a = np.zeros(len(event_times))
    times_a, counts_a = np.unique(durations[(events == 1) & in_a],
                                  return_counts=True)
    d_a[np.searchsorted(event_times, times_a)] = counts_a
    all_sorted = np.sort(durations)
    a_sorted = np.sort(durations[in_a])
    r = (durations.size - np.searchsorted(all_sorted, event_times, "left")).astype(float)
    r_a = (a_sorted.size - np.searchsorted(a_sorted, event_times, "left")).astype(float)

    observed_a = float(d_a.sum())
    expected_a = float((d * r_a / r).sum())
    safe = r > 1.0
    variance = float((d * (r_a / r) * (1.0 - r_a / r)
                      * np.where(safe, (r - d) / np.maximum(r - 1.0, 1.0), 0.0)).sum())
    total_deaths = float(d.sum())
    if variance > 0.0:
        chi_square = (observed_a - expected_a) ** 2 / variance
        p_value = chi_square_sf(chi_square, 1)
    else:
        chi_square, p_value = 0.0, 1.0
    a, b = str(labels[0]), str(labels[1])
    return LogrankResult(
        chi_square=float(chi_square), df=1, p_value=float(p_value),
        observed={a: observed_a, b: total_deaths - observed_a},
        expected={a: float(expected_a), b: float(total_deaths - expected_a)})
