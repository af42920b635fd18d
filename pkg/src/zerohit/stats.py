"""Statistical machinery: empirical distributions, Kolmogorov-Smirnov tests
(one- and two-sample), binned chi-square comparisons, and tail-exponent
fits on the complementary ECDF."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2 as _chi2_dist

from .core import DomainError, InsufficientDataError

_SMALL_N_NOTE = "n < 50: asymptotic p-value unreliable"


@dataclass(frozen=True)
class EmpiricalDist:
    """Sorted sample with ECDF evaluation."""

    sorted_values: np.ndarray
    n: int = 0

    def __post_init__(self):
        vals = np.asarray(self.sorted_values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError("sample must be a nonempty 1-d array")
        if np.any(np.diff(vals) < 0):
            raise DomainError("sorted_values must be nondecreasing")
        object.__setattr__(self, "sorted_values", vals)
        object.__setattr__(self, "n", vals.size)

    @classmethod
    def from_sample(cls, values) -> "EmpiricalDist":
        return cls(sorted_values=np.sort(np.asarray(values, dtype=np.float64)))

    @property
    def mean(self) -> float:
        return float(self.sorted_values.mean())

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.sorted_values, q))


def ecdf_eval(d: EmpiricalDist, x) -> float | np.ndarray:
    """Fraction of the sample <= x (right-continuous)."""
    pos = np.searchsorted(d.sorted_values, x, side="right")
    out = pos / d.n
    return float(out) if np.ndim(x) == 0 else out


@dataclass
class TestReport:
    """Outcome of one statistical comparison."""

    __test__ = False  # keep pytest from collecting this as a test class

    kind: str  # "ks1" | "ks2" | "chi2" | "tail_fit"
    statistic: float
    p_value: float
    n: int | tuple[int, int]
    alpha: float = 0.01
    claim: str = ""
    notes: str = ""
    invert: bool = False  # negative controls: the claim passes iff p <= alpha
    passed: bool = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError("p_value must lie in [0, 1]")
        self.passed = bool(self.p_value > self.alpha) ^ self.invert

    def to_json_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": list(self.n) if isinstance(self.n, tuple) else self.n,
            "pass": self.passed,
            "notes": self.notes,
        }
        if self.claim:
            out["claim"] = self.claim
        return out


def tolerance_report(statistic: float, ok: bool, n, claim: str = "",
                     notes: str = "", kind: str = "tail_fit") -> TestReport:
    """Report for a deterministic tolerance check (no sampling-distribution
    p-value exists); p_value is 1 when the check holds and 0 otherwise."""
    notes = (notes + "; " if notes else "") + "tolerance check, pseudo p-value"
    return TestReport(kind=kind, statistic=statistic,
                      p_value=1.0 if ok else 0.0, n=n, claim=claim,
                      notes=notes)


def kolmogorov_sf(t: float, max_terms: int = 100, tol: float = 1e-10) -> float:
    """Upper tail of the Kolmogorov distribution, P(sup|B(s)| bridge > t).

    Uses the alternating series for t >= 1 and the theta-function dual
    series for small t, both truncated once terms fall below ``tol``.
    """
    if t <= 0.0:
        return 1.0
    if t >= 1.0:
        total = 0.0
        for k in range(1, max_terms + 1):
            term = math.exp(-2.0 * k * k * t * t)
            total += -term if k % 2 == 0 else term
            if term < tol:
                break
        return min(1.0, max(0.0, 2.0 * total))
    # dual series: cdf = sqrt(2 pi)/t * sum exp(-(2k-1)^2 pi^2 / (8 t^2))
    total = 0.0
    for k in range(1, max_terms + 1):
        term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8.0 * t * t))
        total += term
        if term < tol:
            break
    cdf = math.sqrt(2.0 * math.pi) / t * total
    return min(1.0, max(0.0, 1.0 - cdf))


def ks_one_sample(d: EmpiricalDist, cdf, alpha: float = 0.01,
                  claim: str = "", notes: str = "",
                  invert: bool = False) -> TestReport:
    """One-sample KS against a callable cdf; D is taken over both one-sided
    gaps at every sample point."""
    n = d.n
    f = np.asarray(cdf(d.sorted_values), dtype=np.float64)
    if np.any(f < -1e-12) or np.any(f > 1.0 + 1e-12):
        raise DomainError("cdf values must lie in [0, 1]")
    i = np.arange(1, n + 1, dtype=np.float64)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1.0) / n)
    stat = float(max(d_plus, d_minus))
    p = kolmogorov_sf(math.sqrt(n) * stat)
    if n < 50:
        notes = (notes + "; " if notes else "") + _SMALL_N_NOTE
    return TestReport(kind="ks1", statistic=stat, p_value=p, n=n,
                      alpha=alpha, claim=claim, notes=notes, invert=invert)


def ks_two_sample(a: EmpiricalDist, b: EmpiricalDist, alpha: float = 0.01,
                  claim: str = "", notes: str = "",
                  invert: bool = False) -> TestReport:
    """Two-sample KS; ties are handled by evaluating both one-sided gaps at
    every pooled point."""
    pooled = np.concatenate([a.sorted_values, b.sorted_values])
    pooled.sort()
    fa = np.searchsorted(a.sorted_values, pooled, side="right") / a.n
    fb = np.searchsorted(b.sorted_values, pooled, side="right") / b.n
    stat = float(np.max(np.abs(fa - fb)))
    n_eff = a.n * b.n / (a.n + b.n)
    p = kolmogorov_sf(math.sqrt(n_eff) * stat)
    if min(a.n, b.n) < 50:
        notes = (notes + "; " if notes else "") + _SMALL_N_NOTE
    return TestReport(kind="ks2", statistic=stat, p_value=p, n=(a.n, b.n),
                      alpha=alpha, claim=claim, notes=notes, invert=invert)


def chi2_binned(d: EmpiricalDist, bin_masses: np.ndarray, bin_edges: np.ndarray,
                alpha: float = 0.01, claim: str = "", notes: str = "",
                merge_sparse: bool = True) -> TestReport:
    """Pearson chi-square of the binned sample against expected bin masses.

    ``bin_edges`` has one more entry than ``bin_masses``; masses need not
    sum to 1 (the complement is ignored, counts outside the edges are
    dropped).  Bins with expected count < 5 are merged with their right
    neighbour when ``merge_sparse``; otherwise they are an error.
    """
    masses = np.asarray(bin_masses, dtype=np.float64)
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.size != masses.size + 1:
        raise DomainError("need len(bin_edges) == len(bin_masses) + 1")
    if np.any(np.diff(edges) <= 0):
        raise DomainError("bin edges must be strictly increasing")
    counts, _ = np.histogram(d.sorted_values, bins=edges)
    expected = masses * d.n

    if merge_sparse:
        m_counts, m_expected = [], []
        acc_c = acc_e = 0.0
        for c, e in zip(counts, expected):
            acc_c += c
            acc_e += e
            if acc_e >= 5.0:
                m_counts.append(acc_c)
                m_expected.append(acc_e)
                acc_c = acc_e = 0.0
        if acc_e > 0.0:
            if m_expected:
                m_counts[-1] += acc_c
                m_expected[-1] += acc_e
            else:
                raise InsufficientDataError("all bins sparse after merging")
        counts = np.asarray(m_counts)
        expected = np.asarray(m_expected)
    elif np.any(expected < 5.0):
        raise InsufficientDataError("expected count below 5 in some bin")
    if counts.size < 2:
        raise InsufficientDataError("need at least 2 bins after merging")

    stat = float(np.sum((counts - expected) ** 2 / expected))
    dof = counts.size - 1
    p = float(_chi2_dist.sf(stat, dof))
    notes = (notes + "; " if notes else "") + f"dof={dof}"
    return TestReport(kind="chi2", statistic=stat, p_value=p, n=d.n,
                      alpha=alpha, claim=claim, notes=notes)


def tail_exponent_fit(d: EmpiricalDist, y_min: float):
    """Least-squares fit of log complementary-ECDF vs log y above y_min.

    Returns (slope, intercept, stderr).  For a tail P(Y > y) ~ c / y the
    slope is -1 and exp(intercept) recovers c.
    """
    vals = d.sorted_values
    idx = np.searchsorted(vals, y_min, side="right")
    tail = vals[idx:]
    if tail.size < 100:
        raise InsufficientDataError(
            f"only {tail.size} points above y_min={y_min}; need >= 100")
    # complementary ECDF just below each tail order statistic
    cc = (d.n - (idx + np.arange(tail.size))) / d.n
    keep = (cc > 0) & (tail > 0)
    lx = np.log(tail[keep])
    ly = np.log(cc[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    denom = np.sum((lx - lx.mean()) ** 2)
    stderr = math.sqrt(float(np.sum(resid ** 2)) / max(len(lx) - 2, 1) / denom)
    return float(slope), float(intercept), float(stderr)
