"""Experiment orchestration: named verification experiments mapping each
analytic claim to a pass/fail TestReport, with deterministic sharded
parallelism, JSON/CSV reporting, and rendered figures.

Determinism contract: every experiment splits its randomness into a fixed
number of shards keyed only by (seed, phase, shard index), so outputs are
byte-identical across reruns and invariant to the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import analytic, figures, samplers
from .core import (ConfigError, DomainError, ExperimentConfig, RngStream,
                   TimeGrid, refine_fraction_grid, split_stream)
from .stats import (EmpiricalDist, TestReport, chi2_binned, ks_one_sample,
                    ks_two_sample, tail_exponent_fit, tolerance_report)

N_SHARDS = 32
MAX_LEVELS_REL = (1.5, 2.0, 4.0)


@dataclass
class ExperimentResult:
    experiment: str
    config: ExperimentConfig
    reports: list[TestReport] = dc_field(default_factory=list)
    artifacts: list[str] = dc_field(default_factory=list)
    wall_time: float = 0.0

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_json_dict(self) -> dict:
        # wall_time is intentionally omitted: report files must be
        # byte-identical across reruns of the same config+seed
        return {
            "experiment": self.experiment,
            "config": self.config.to_mapping(),
            "reports": [r.to_json_dict() for r in self.reports],
            "artifacts": self.artifacts,
            "all_passed": self.all_passed,
        }


# ---------------------------------------------------------------------------
# deterministic sharded execution


def run_sharded(phase_root: RngStream, n_total: int, workers: int, task):
    """Split n_total across N_SHARDS fixed shards; task(stream, count)
    returns a tuple of arrays, merged by concatenation in shard order."""
    base, extra = divmod(n_total, N_SHARDS)
    sizes = [base + (1 if i < extra else 0) for i in range(N_SHARDS)]
    jobs = [(split_stream(phase_root, i), s)
            for i, s in enumerate(sizes) if s > 0]
    results: list = [None] * len(jobs)
    if workers <= 1:
        for i, (st, sz) in enumerate(jobs):
            results[i] = task(st, sz)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(task, st, sz) for st, sz in jobs]
            for i, fut in enumerate(futures):
                results[i] = fut.result()
    return tuple(np.concatenate(parts) for parts in zip(*results))


# ---------------------------------------------------------------------------
# report/CSV/figure plumbing


def _write_report(result: ExperimentResult, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{result.experiment}.json"
    path.write_text(json.dumps(result.to_json_dict(), indent=2,
                               sort_keys=True) + "\n")
    return path


def _write_claims_csv(result: ExperimentResult, out_dir: Path) -> str:
    path = out_dir / f"{result.experiment}_claims.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim", "kind", "statistic", "p_value", "n", "pass"])
        for r in result.reports:
            n = r.n if not isinstance(r.n, tuple) else "|".join(map(str, r.n))
            w.writerow([r.claim, r.kind, repr(r.statistic), repr(r.p_value),
                        n, r.passed])
    return path.name


def _finish(result: ExperimentResult, out_dir: Path | None, t0: float
            ) -> ExperimentResult:
    result.wall_time = time.time() - t0
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.artifacts.append(_write_claims_csv(result, out_dir))
        _write_report(result, out_dir)
    return result


def _fmt_u(u: float) -> str:
    return f"{u:g}"


# ---------------------------------------------------------------------------
# experiment: verify-densities


def _equal_mass_tau_bins(x: float, n_bins: int = 100):
    qs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    edges = np.concatenate([[0.0], analytic.tau_quantile(x, qs), [np.inf]])
    masses = np.full(n_bins, 1.0 / n_bins)
    return masses, edges


def _equal_mass_v_bins(x: float, u: float, q_cap: float, n_bins: int = 100):
    """Equal-mass bins for the V_u marginal conditioned on the hitting time
    being below the cap (the missing mass sits in the top bin)."""
    qs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    edges = np.concatenate([[0.0], analytic.v_quantile(x, u, qs), [np.inf]])
    masses = np.full(n_bins, 1.0 / n_bins) / q_cap
    masses[-1] = (1.0 / n_bins - (1.0 - q_cap)) / q_cap
    return masses, edges


def _conditional_v_cdf(x: float, u: float, q_cap: float):
    return lambda y: np.minimum(analytic.v_cdf(x, u, y) / q_cap, 1.0)


def run_verify_densities(cfg: ExperimentConfig, workers: int = 1,
                         out_dir: Path | str | None = None,
                         make_figures: bool = True) -> ExperimentResult:
    """Hitting-time law (exact sampler), V marginal law at each u (walk),
    and the running-maximum tail x/y."""
    t0 = time.time()
    root = cfg.root_stream()
    result = ExperimentResult("verify_densities", cfg)
    rep = result.reports.append
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    # exact hitting-time sampler vs its closed-form law
    taus, = run_sharded(split_stream(root, 1), cfg.n_samples, workers,
                        lambda st, k: (samplers.sample_tau_batch(cfg.x, k,
                                                                 st),))
    d_tau = EmpiricalDist.from_sample(taus)
    rep(ks_one_sample(d_tau, lambda t: analytic.tau_cdf(cfg.x, t),
                      alpha=cfg.alpha, claim="Eq1-tau-ks"))
    masses, edges = _equal_mass_tau_bins(cfg.x)
    rep(chi2_binned(d_tau, masses, edges, alpha=cfg.alpha,
                    claim="Eq1-tau-chi2"))

    # walk: V marginals and running-max levels
    us = np.asarray(cfg.u_grid.interior)
    levels = cfg.x * np.asarray(MAX_LEVELS_REL)
    taus_w, trunc, vals, hits = run_sharded(
        split_stream(root, 2), cfg.n_samples, workers,
        lambda st, k: samplers.sample_v_marginals(
            cfg.x, us, k, cfg.step_size, cfg.t_cap, st, levels=levels))
    trunc_frac = float(trunc.mean())
    trunc_expect = 1.0 - float(analytic.tau_cdf(cfg.x, cfg.t_cap))
    if trunc_frac > 0.05:
        raise ConfigError(
            f"truncation fraction {trunc_frac:.3f} exceeds 5%; raise t_cap")
    se = math.sqrt(max(trunc_expect * (1 - trunc_expect), 1e-12)
                   / cfg.n_samples)
    rep(tolerance_report(
        statistic=trunc_frac, ok=abs(trunc_frac - trunc_expect) <= 3 * se,
        n=cfg.n_samples, claim="truncation-accounting",
        notes=f"observed {trunc_frac:.5f}, analytic {trunc_expect:.5f}, "
              f"se {se:.2e}"))

    ok = ~trunc
    q_cap = float(analytic.tau_cdf(cfg.x, cfg.t_cap))
    for j, u in enumerate(us):
        d_v = EmpiricalDist.from_sample(vals[ok, j])
        rep(ks_one_sample(d_v, _conditional_v_cdf(cfg.x, u, q_cap),
                          alpha=cfg.alpha,
                          claim=f"Eq2-density-u{_fmt_u(u)}-ks"))
        m_v, e_v = _equal_mass_v_bins(cfg.x, u, q_cap)
        rep(chi2_binned(d_v, m_v, e_v, alpha=cfg.alpha,
                        claim=f"Eq2-density-u{_fmt_u(u)}-chi2"))
        if make_figures and out is not None:
            name = f"v_marginal_u{_fmt_u(u)}.png"
            figures.save_ecdf_vs_cdf(
                out / name, d_v.sorted_values,
                _conditional_v_cdf(cfg.x, u, q_cap),
                f"V marginal at u={_fmt_u(u)} (x={cfg.x:g})")
            result.artifacts.append(name)

    # running-max tail: binomial chi-square per level
    for j, y in enumerate(levels):
        p_exp = analytic.max_tail(cfg.x, float(y))
        k_hit = int(hits[:, j].sum())
        n = hits.shape[0]
        expected = np.array([p_exp * n, (1 - p_exp) * n])
        observed = np.array([k_hit, n - k_hit])
        stat = float(np.sum((observed - expected) ** 2 / expected))
        from scipy.stats import chi2 as _chi2
        rep(TestReport(kind="chi2", statistic=stat,
                       p_value=float(_chi2.sf(stat, 1)), n=n,
                       alpha=cfg.alpha,
                       claim=f"My3a-max-y{_fmt_u(float(y))}",
                       notes=f"observed {k_hit / n:.5f}, "
                             f"expected {p_exp:.5f}"))

    if make_figures and out is not None:
        figures.save_ecdf_vs_cdf(
            out / "tau_exact.png", d_tau.sorted_values,
            lambda t: analytic.tau_cdf(cfg.x, t),
            f"exact hitting-time sampler (x={cfg.x:g})",
            x_label="t")
        result.artifacts.append("tau_exact.png")
    return _finish(result, out, t0)


# ---------------------------------------------------------------------------
# experiment: verify-theorem1


def run_verify_theorem1(cfg: ExperimentConfig, workers: int = 1,
                        out_dir: Path | str | None = None,
                        make_figures: bool = True) -> ExperimentResult:
    """Scaling identity, the scaled-bridge representation (pointwise,
    functional, and joint-projection probes), and its negative control."""
    t0 = time.time()
    root = cfg.root_stream()
    result = ExperimentResult("verify_theorem1", cfg)
    rep = result.reports.append
    out = Path(out_dir) if out_dir is not None else None

    grid = refine_fraction_grid(cfg.u_grid, 65)
    fr = grid.as_array()
    interior = np.asarray(cfg.u_grid.interior)
    idx = np.searchsorted(fr, interior)

    def walk_task(x):
        def task(st, k):
            taus, trunc, vals, _ = samplers.sample_v_marginals(
                x, fr, k, cfg.step_size, cfg.t_cap, st)
            return taus, trunc, vals
        return task

    _, trunc1, vals1 = run_sharded(split_stream(root, 1), cfg.n_samples,
                                   workers, walk_task(cfg.x))
    _, trunc2, vals2 = run_sharded(split_stream(root, 2), cfg.n_samples,
                                   workers, walk_task(2.0 * cfg.x))
    vals1 = vals1[~trunc1]
    vals2 = vals2[~trunc2]
    rhs_vals, _ = run_sharded(
        split_stream(root, 3), cfg.n_samples, workers,
        lambda st, k: samplers.theorem1_rhs_values(fr, k, st,
                                                   t_cap=cfg.t_cap))
    rhs_vals = cfg.x * rhs_vals  # scaled-bridge process starts at 1

    # (a) scaling: V at start 2x, halved, against V at start x
    for j, u in zip(idx, interior):
        rep(ks_two_sample(EmpiricalDist.from_sample(vals2[:, j] / 2.0),
                          EmpiricalDist.from_sample(vals1[:, j]),
                          alpha=cfg.alpha,
                          claim=f"My3_0-scaling-u{_fmt_u(u)}"))
    # (b) pointwise identity
    for j, u in zip(idx, interior):
        rep(ks_two_sample(EmpiricalDist.from_sample(vals1[:, j]),
                          EmpiricalDist.from_sample(rhs_vals[:, j]),
                          alpha=cfg.alpha,
                          claim=f"My3-identity-u{_fmt_u(u)}"))
    # (c) path functionals on the shared refined grid
    sup_l = vals1.max(axis=1)
    sup_r = rhs_vals.max(axis=1)
    rep(ks_two_sample(EmpiricalDist.from_sample(sup_l),
                      EmpiricalDist.from_sample(sup_r),
                      alpha=cfg.alpha, claim="My3-sup"))
    int_l = np.trapezoid(vals1, fr, axis=1)
    int_r = np.trapezoid(rhs_vals, fr, axis=1)
    rep(ks_two_sample(EmpiricalDist.from_sample(int_l),
                      EmpiricalDist.from_sample(int_r),
                      alpha=cfg.alpha, claim="My3-integral"))
    # (d) joint law via random scalar projections of the interior marginals
    dir_gen = split_stream(root, 4).generator
    for i in range(3):
        a = dir_gen.standard_normal(interior.size)
        a /= np.linalg.norm(a)
        rep(ks_two_sample(
            EmpiricalDist.from_sample(vals1[:, idx] @ a),
            EmpiricalDist.from_sample(rhs_vals[:, idx] @ a),
            alpha=cfg.alpha, claim=f"My3-proj{i}",
            notes="direction " + ",".join(f"{v:.4f}" for v in a)))
    # negative control: comonotone tau/bridge coupling must be detected
    n_neg = min(cfg.n_samples, 30_000)
    neg_vals, _ = run_sharded(
        split_stream(root, 5), n_neg, workers,
        lambda st, k: samplers.theorem1_rhs_values(
            fr, k, st, coupling="comonotone", t_cap=cfg.t_cap))
    mid = int(np.searchsorted(fr, 0.5))
    rep(ks_two_sample(
        EmpiricalDist.from_sample(vals1[:n_neg, mid]),
        EmpiricalDist.from_sample(cfg.x * neg_vals[:, mid]),
        alpha=cfg.alpha, claim="My3-negative-control", invert=True,
        notes="deliberately dependent tau/bridge draws; must be rejected"))

    if make_figures and out is not None:
        out.mkdir(parents=True, exist_ok=True)
        fig_name = "sup_tail.png"
        figures.save_tail_loglog(out / fig_name, np.sort(sup_r), cfg.x,
                                 10.0 * cfg.x,
                                 "running max of the scaled-bridge process")
        result.artifacts.append(fig_name)
    return _finish(result, out, t0)


# ---------------------------------------------------------------------------
# experiment: verify-conditionals


def _binned_density_ratio(sample: np.ndarray, zs: np.ndarray, u: float,
                          rel_halfwidth: float = 0.15) -> np.ndarray:
    """Observed-over-expected density around each z, with the expectation
    bin-averaged under the 1/z^2 asymptote so the binning itself adds no
    bias.  Bin half-widths scale with z to keep the counts comparable."""
    c = analytic.q_asymptote(u, 1.0)
    ratios = np.empty(zs.size)
    for i, z in enumerate(zs):
        lo, hi = z * (1 - rel_halfwidth), z * (1 + rel_halfwidth)
        mass = c * (1.0 / lo - 1.0 / hi)
        count = int(np.sum((sample > lo) & (sample <= hi)))
        ratios[i] = count / (sample.size * mass)
    return ratios


def run_verify_conditionals(cfg: ExperimentConfig, y: float = 10.0,
                            workers: int = 1,
                            out_dir: Path | str | None = None,
                            n_accept: int = 8000,
                            make_figures: bool = True) -> ExperimentResult:
    """Conditional law of the path given a high running maximum, plus the
    windowed conditional form of the scaled-bridge identity."""
    t0 = time.time()
    if y <= cfg.x:
        raise DomainError("y must exceed x")
    root = cfg.root_stream()
    result = ExperimentResult("verify_conditionals", cfg)
    rep = result.reports.append
    out = Path(out_dir) if out_dir is not None else None
    u = 0.5
    # conditional runs are acceptance-rate bound; a coarser step is fine
    # because level exceedance is bridge-corrected (bias ~ step0, not
    # sqrt(step0))
    step_cond = max(cfg.step_size, 1e-3)

    # (a) conditional density vs the 1/z^2 asymptote at z in {1, 2, 3}
    zs = np.array([1.0, 2.0, 3.0])
    cond, = run_sharded(
        split_stream(root, 1), n_accept, workers,
        lambda st, k: (samplers.sample_v_conditional_on_max(
            cfg.x, u, y, k, st, step0=step_cond, t_cap=cfg.t_cap)[0],))
    ratios = _binned_density_ratio(cond, zs, u)
    worst = float(np.max(np.abs(ratios - 1.0)))
    rep(tolerance_report(
        statistic=worst, ok=worst <= 0.10, n=cond.size,
        claim="q-asymptote-density",
        notes="observed/asymptote at z=1,2,3: "
              + ",".join(f"{r:.4f}" for r in ratios)))

    # x-independence of the conditional law
    cond2, = run_sharded(
        split_stream(root, 2), n_accept, workers,
        lambda st, k: (samplers.sample_v_conditional_on_max(
            2.0 * cfg.x, u, y, k, st, step0=step_cond,
            t_cap=cfg.t_cap)[0],))
    rep(ks_two_sample(EmpiricalDist.from_sample(cond),
                      EmpiricalDist.from_sample(cond2),
                      alpha=cfg.alpha, claim="q-x-independence"))

    # (b) acceptance rate at y = 2x equals 1/2
    n_rate = max(cfg.n_samples, 1_000_000)
    hits, = run_sharded(
        split_stream(root, 3), n_rate, workers,
        lambda st, k: (samplers.sample_v_marginals(
            cfg.x, np.empty(0), k, step_cond, cfg.t_cap, st,
            levels=np.array([2.0 * cfg.x]))[3][:, 0],))
    rate = float(hits.mean())
    rep(tolerance_report(
        statistic=rate, ok=abs(rate - 0.5) <= 0.005, n=n_rate,
        claim="My3a-acceptance-rate",
        notes=f"observed {rate:.5f}, expected 0.50000"))

    # (c) windowed conditional identity: hitting time in (T, T+h)
    T, h = 1.0, 0.1
    taus_w, trunc_w, vals_w, _ = run_sharded(
        split_stream(root, 4), cfg.n_samples, workers,
        lambda st, k: samplers.sample_v_marginals(
            cfg.x, np.array([u]), k, cfg.step_size, cfg.t_cap, st))
    t_scale = cfg.x * cfg.x  # window is in units of x^2 by self-similarity
    win = (~trunc_w) & (taus_w > T * t_scale) & (taus_w <= (T + h) * t_scale)
    lhs = vals_w[win, 0]
    if lhs.size < 500:
        from .core import InsufficientDataError
        raise InsufficientDataError(
            f"only {lhs.size} paths in the hitting-time window")

    def rhs_task(st, k):
        lo = analytic.tau_cdf(1.0, T)
        hi = analytic.tau_cdf(1.0, T + h)
        t_win = analytic.tau_quantile(1.0, lo + st.uniforms(k) * (hi - lo))
        fr = np.array([0.0, u, 1.0])
        b = samplers._std_bridge_3d(fr, k, st)
        sq = np.sqrt(t_win)
        first = (1.0 - u) + sq * b[:, 1, 0]
        v = np.sqrt(first ** 2 + t_win * (b[:, 1, 1] ** 2 + b[:, 1, 2] ** 2))
        return (cfg.x * v,)

    rhs_w, = run_sharded(split_stream(root, 5), max(lhs.size, 2000),
                         workers, rhs_task)
    rep(ks_two_sample(EmpiricalDist.from_sample(lhs),
                      EmpiricalDist.from_sample(rhs_w),
                      alpha=cfg.alpha, claim="My3-windowed",
                      notes=f"window T={T}, h={h} (times x^2)"))

    if make_figures and out is not None:
        out.mkdir(parents=True, exist_ok=True)
        name = "conditional_density.png"
        figures.save_hist_vs_density(
            out / name, cond,
            lambda z: analytic.q_asymptote(u, z),
            f"conditional marginal at u=1/2 given max > {y:g}, vs asymptote",
            x_max=4.0)
        result.artifacts.append(name)
    return _finish(result, out, t0)


# ---------------------------------------------------------------------------
# experiment: meander cross-validation


def run_verify_meander(cfg: ExperimentConfig, workers: int = 1,
                       out_dir: Path | str | None = None,
                       fine_steps: int = 20_000,
                       make_figures: bool = True) -> ExperimentResult:
    """Cross-check the two meander constructions and the reversal law."""
    t0 = time.time()
    root = cfg.root_stream()
    result = ExperimentResult("verify_meander", cfg)
    rep = result.reports.append
    out = Path(out_dir) if out_dir is not None else None
    n = min(cfg.n_samples, 20_000)
    fr = np.array([0.0, 0.5, 1.0])

    v_ray, end_ray = run_sharded(
        split_stream(root, 1), n, workers,
        lambda st, k: samplers.meander_values(fr, k, st, "rayleigh_bridge"))
    v_lz, end_lz = run_sharded(
        split_stream(root, 2), n, workers,
        lambda st, k: samplers.meander_values(fr, k, st, "last_zero",
                                              fine_steps=fine_steps))
    rep(ks_two_sample(EmpiricalDist.from_sample(end_ray),
                      EmpiricalDist.from_sample(end_lz),
                      alpha=cfg.alpha, claim="My3b-endpoint"))
    rep(ks_two_sample(EmpiricalDist.from_sample(v_ray[:, 1]),
                      EmpiricalDist.from_sample(v_lz[:, 1]),
                      alpha=cfg.alpha, claim="My3b-midpoint"))

    # reversal: paths with endpoint near x, reversed, against a bridge
    # pinned at x; the conditioning window is |endpoint - x| < 0.05
    x_pin, half_w, s = 1.0, 0.05, 0.5
    n_rev = 10 * n
    v_big, end_big = run_sharded(
        split_stream(root, 3), n_rev, workers,
        lambda st, k: samplers.meander_values(fr, k, st, "rayleigh_bridge"))
    keep = np.abs(end_big - x_pin) < half_w
    rev_mid = v_big[keep, 1]  # value at 1 - s = 0.5 of the reversed path
    bb, = run_sharded(
        split_stream(root, 4), max(int(keep.sum()), 2000), workers,
        lambda st, k: (samplers.bessel_bridge_values(
            x_pin, 1.0, np.array([0.0, s, 1.0]), k, st)[:, 1],))
    rep(ks_two_sample(EmpiricalDist.from_sample(rev_mid),
                      EmpiricalDist.from_sample(bb),
                      alpha=cfg.alpha, claim="My3b-reversal",
                      notes=f"window |endpoint-{x_pin}|<{half_w}, "
                            f"{int(keep.sum())} kept"))

    if make_figures and out is not None:
        out.mkdir(parents=True, exist_ok=True)
        name = "meander_endpoint.png"
        figures.save_ecdf_vs_cdf(
            out / name, np.sort(end_lz),
            lambda v: 1.0 - np.exp(-0.5 * np.asarray(v) ** 2),
            "meander endpoint (last-zero construction) vs Rayleigh cdf",
            x_label="endpoint")
        result.artifacts.append(name)
    return _finish(result, out, t0)


# ---------------------------------------------------------------------------
# experiment: convergence study


def run_convergence_study(cfg: ExperimentConfig,
                          steps: tuple[float, ...] = (1e-2, 1e-3, 1e-4),
                          workers: int = 1,
                          out_dir: Path | str | None = None,
                          make_figures: bool = True) -> ExperimentResult:
    """Discretization-bias sweep: KS distance of the walk's hitting time
    (with and without the bridge correction, on shared increments) and of
    the midpoint marginal, per step size."""
    t0 = time.time()
    if list(steps) != sorted(steps, reverse=True):
        raise DomainError("steps must be sorted descending")
    root = cfg.root_stream()
    result = ExperimentResult("convergence", cfg)
    rep = result.reports.append
    out = Path(out_dir) if out_dir is not None else None
    q_cap = float(analytic.tau_cdf(cfg.x, cfg.t_cap))
    cond_tau_cdf = lambda t: analytic.tau_cdf(cfg.x, t) / q_cap  # noqa: E731

    ks_tau, ks_unc, ks_v = [], [], []
    for i, step0 in enumerate(steps):
        tc, trc, tu, tru = run_sharded(
            split_stream(root, 10 + i), cfg.n_samples, workers,
            lambda st, k, s=step0: samplers.dual_tau_batch(
                cfg.x, k, s, cfg.t_cap, st))
        ks_tau.append(ks_one_sample(
            EmpiricalDist.from_sample(tc[~trc]), cond_tau_cdf).statistic)
        ks_unc.append(ks_one_sample(
            EmpiricalDist.from_sample(tu[~tru]), cond_tau_cdf).statistic)
        _, trunc, vals, _ = run_sharded(
            split_stream(root, 30 + i), cfg.n_samples, workers,
            lambda st, k, s=step0: samplers.sample_v_marginals(
                cfg.x, np.array([0.5]), k, s, cfg.t_cap, st))
        ks_v.append(ks_one_sample(
            EmpiricalDist.from_sample(vals[~trunc, 0]),
            _conditional_v_cdf(cfg.x, 0.5, q_cap)).statistic)

    n_eff = cfg.n_samples
    noise = 0.6 / math.sqrt(n_eff)  # ~2 sd of the null KS statistic
    mono_ok = all(ks_tau[i + 1] < ks_tau[i] + noise
                  for i in range(len(steps) - 1))
    rep(tolerance_report(
        statistic=float(ks_tau[-1]), ok=mono_ok, n=n_eff,
        claim="convergence-monotone",
        notes="corrected KS per step: "
              + ",".join(f"{v:.5f}" for v in ks_tau)
              + f"; noise allowance {noise:.5f}"))
    abl_ok = all(u > c for u, c in zip(ks_unc, ks_tau))
    rep(tolerance_report(
        statistic=float(ks_unc[-1]), ok=abl_ok, n=n_eff,
        claim="convergence-ablation",
        notes="uncorrected KS per step: "
              + ",".join(f"{v:.5f}" for v in ks_unc)))
    slope = float(np.polyfit(np.log(steps), np.log(ks_unc), 1)[0])
    rep(tolerance_report(
        statistic=slope, ok=0.3 <= slope <= 0.7, n=n_eff,
        claim="convergence-order",
        notes="log-log decay order of the uncorrected KS distance"))

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "convergence.csv"
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step0", "ks_tau", "ks_tau_uncorrected", "ks_v"])
            for row in zip(steps, ks_tau, ks_unc, ks_v):
                w.writerow([repr(v) for v in row])
        result.artifacts.append("convergence.csv")
        if make_figures:
            figures.save_convergence(out / "convergence.png", steps,
                                     ks_tau, ks_unc, ks_v,
                                     "hitting-time discretization bias")
            result.artifacts.append("convergence.png")
    return _finish(result, out, t0)


# ---------------------------------------------------------------------------
# tabulation and sample dumps


def run_tabulate(spec: analytic.DensitySpec, grid: np.ndarray,
                 out_path: Path | str) -> Path:
    """Write CSV columns law, x, u, arg, value of an analytic law."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    values = spec.evaluate(np.asarray(grid, dtype=np.float64))
    with out_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["law", "x", "u", "arg", "value"])
        for a, v in zip(np.asarray(grid), np.atleast_1d(values)):
            w.writerow([spec.law, repr(spec.x),
                        "" if spec.u is None else repr(spec.u),
                        repr(float(a)), repr(float(v))])
    return out_path


def run_sample_dump(sampler: str, cfg: ExperimentConfig, n: int,
                    out_path: Path | str, workers: int = 1) -> Path:
    """Dump raw draws as CSV: sampler, x, u (or t), value, tau, truncated,
    seed, stream_id."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    root = cfg.root_stream()
    us = np.asarray(cfg.u_grid.interior)
    rows: list[tuple] = []

    if sampler == "tau":
        base, extra = divmod(n, N_SHARDS)
        for i in range(N_SHARDS):
            k = base + (1 if i < extra else 0)
            if k == 0:
                continue
            st = split_stream(split_stream(root, 1), i)
            for t in samplers.sample_tau_batch(cfg.x, k, st):
                rows.append(("tau", cfg.x, "", repr(float(t)),
                             repr(float(t)), False, cfg.seed, st.stream_id))
    elif sampler == "v":
        base, extra = divmod(n, N_SHARDS)
        for i in range(N_SHARDS):
            k = base + (1 if i < extra else 0)
            if k == 0:
                continue
            st = split_stream(split_stream(root, 1), i)
            taus, trunc, vals, _ = samplers.sample_v_marginals(
                cfg.x, us, k, cfg.step_size, cfg.t_cap, st)
            for p in range(k):
                for j, u in enumerate(us):
                    rows.append(("v", cfg.x, repr(float(u)),
                                 repr(float(vals[p, j])),
                                 repr(float(taus[p])), bool(trunc[p]),
                                 cfg.seed, st.stream_id))
    elif sampler == "theorem1_rhs":
        base, extra = divmod(n, N_SHARDS)
        fr = cfg.u_grid.as_array()
        for i in range(N_SHARDS):
            k = base + (1 if i < extra else 0)
            if k == 0:
                continue
            st = split_stream(split_stream(root, 1), i)
            vals, taus = samplers.theorem1_rhs_values(fr, k, st)
            for p in range(k):
                for j, u in enumerate(fr):
                    rows.append(("theorem1_rhs", cfg.x, repr(float(u)),
                                 repr(float(vals[p, j])),
                                 repr(float(taus[p])), False,
                                 cfg.seed, st.stream_id))
    elif sampler in ("meander_rayleigh", "meander_last_zero"):
        cons = ("rayleigh_bridge" if sampler == "meander_rayleigh"
                else "last_zero")
        fr = cfg.u_grid.as_array()
        base, extra = divmod(n, N_SHARDS)
        for i in range(N_SHARDS):
            k = base + (1 if i < extra else 0)
            if k == 0:
                continue
            st = split_stream(split_stream(root, 1), i)
            vals, _ = samplers.meander_values(fr, k, st, cons)
            for p in range(k):
                for j, u in enumerate(fr):
                    rows.append((sampler, cfg.x, repr(float(u)),
                                 repr(float(vals[p, j])), "", False,
                                 cfg.seed, st.stream_id))
    else:
        raise DomainError(
            f"unknown sampler {sampler!r}; expected tau, v, theorem1_rhs, "
            "meander_rayleigh, or meander_last_zero")

    with out_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sampler", "x", "u", "value", "tau", "truncated",
                    "seed", "stream_id"])
        w.writerows(rows)
    return out_path
