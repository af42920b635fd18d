"""Figure rendering for experiment reports (written to files, never shown).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_ecdf_vs_cdf(path, sorted_sample: np.ndarray, cdf, title: str,
                     x_label: str = "value"):
    """ECDF of the sample overlaid on the analytic cdf, plus the gap."""
    n = sorted_sample.size
    hi = np.quantile(sorted_sample, 0.995)
    xs = np.linspace(max(sorted_sample[0] * 0.5, 1e-6), hi, 400)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True,
                                   height_ratios=[3, 1])
    ax1.plot(xs, cdf(xs), "k-", lw=1.2, label="analytic cdf")
    step_y = np.arange(1, n + 1) / n
    sub = slice(None, None, max(1, n // 2000))
    ax1.plot(sorted_sample[sub], step_y[sub], "C0.", ms=2, label="ECDF")
    ax1.set_ylabel("F")
    ax1.set_title(title)
    ax1.legend(loc="lower right")
    gap = step_y - np.asarray(cdf(sorted_sample))
    ax2.plot(sorted_sample[sub], gap[sub], "C3-", lw=0.8)
    ax2.axhline(0.0, color="k", lw=0.5)
    ax2.set_xlabel(x_label)
    ax2.set_ylabel("ECDF - cdf")
    ax2.set_xlim(0, hi)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_hist_vs_density(path, sample: np.ndarray, density, title: str,
                         x_max: float | None = None):
    if x_max is None:
        x_max = float(np.quantile(sample, 0.99))
    fig, ax = plt.subplots(figsize=(6, 4))
    clipped = sample[sample <= x_max]
    ax.hist(clipped, bins=120, density=True, alpha=0.45, color="C0",
            label="sample")
    xs = np.linspace(x_max * 1e-4, x_max, 400)
    ax.plot(xs, density(xs), "k-", lw=1.2, label="analytic density")
    ax.set_title(title)
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_tail_loglog(path, sorted_sample: np.ndarray, constant: float,
                     y_min: float, title: str):
    """Complementary ECDF on log-log axes against the c/y reference line."""
    n = sorted_sample.size
    cc = (n - np.arange(1, n + 1) + 1) / n
    keep = sorted_sample >= y_min * 0.2
    fig, ax = plt.subplots(figsize=(6, 4))
    sub = slice(None, None, max(1, int(keep.sum()) // 4000))
    ax.loglog(sorted_sample[keep][sub], cc[keep][sub], "C0.", ms=2,
              label="complementary ECDF")
    xs = np.geomspace(y_min * 0.2, sorted_sample[-1], 200)
    ax.loglog(xs, constant / xs, "k--", lw=1.0, label="c / y")
    ax.axvline(y_min, color="C3", lw=0.8, ls=":", label="fit region start")
    ax.set_title(title)
    ax.set_xlabel("y")
    ax.set_ylabel("P(Y > y)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_convergence(path, steps, ks_tau, ks_unc, ks_v, title: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(steps, ks_tau, "C0o-", label="hitting time, corrected")
    ax.loglog(steps, ks_unc, "C3s--", label="hitting time, uncorrected")
    ax.loglog(steps, ks_v, "C2^-", label="midpoint marginal")
    ref = np.asarray(ks_unc[0]) * np.sqrt(np.asarray(steps) / steps[0])
    ax.loglog(steps, ref, "k:", lw=0.8, label="slope 1/2 reference")
    ax.set_xlabel("step0")
    ax.set_ylabel("KS distance")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
