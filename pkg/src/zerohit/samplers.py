"""Samplers for every process under test.

Exact samplers: the hitting time tau(x) (inverse-square-normal), the 3D
Bessel bridge (Gaussian finite-dimensional construction, no discretization
bias at grid points), the composite scaled-bridge process
tau^{1/2} * R_{tau^{-1/2}, u}, and the nonnegative excursion-to-1 process
("meander") built by reversing a Bessel bridge from a Rayleigh endpoint.

Discretized samplers: the random walk to the first zero (adaptive Euler
with bridge crossing correction) and the meander built literally from the
last zero of a fine-grid Brownian path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (BudgetExceededError, DomainError, PathMeta, PathSample,
                   RngStream, TimeGrid, make_fraction_grid, split_stream)

# adaptive step-size policy: dt = step0 * clip(GROWTH2 * (w/x)^2, 1, CAP2)
GROWTH2 = 8.0
CAP2 = 65536.0

_BATCH_CHUNK = 20_000


# ---------------------------------------------------------------------------
# hitting time: exact sampler


def sample_tau_batch(x: float, n: int, rng: RngStream) -> np.ndarray:
    """n exact hitting-time draws: tau = (x/|N|)^2, N standard normal."""
    if x <= 0.0:
        raise DomainError("x must be positive")
    z = rng.normals(n)
    bad = z == 0.0
    while np.any(bad):  # probability-zero guard
        z[bad] = rng.normals(int(bad.sum()))
        bad = z == 0.0
    return (x / np.abs(z)) ** 2


def sample_tau(x: float, rng: RngStream) -> float:
    return float(sample_tau_batch(x, 1, rng)[0])


# ---------------------------------------------------------------------------
# discretized walk to the first zero


def simulate_w_until_hit(x: float, step0: float, t_cap: float,
                         rng: RngStream, bridge_correction: bool = True
                         ) -> tuple[float, bool]:
    """Hitting-time estimate from one adaptive random walk.

    Returns (tau_hat, truncated)."""
    taus, trunc, _, _ = sample_v_marginals(
        x, np.empty(0), 1, step0, t_cap, rng,
        bridge_correction=bridge_correction)
    return float(taus[0]), bool(trunc[0])


def sample_v_marginals(x: float, us: np.ndarray, n: int, step0: float,
                       t_cap: float, rng: RngStream,
                       bridge_correction: bool = True,
                       levels: np.ndarray | None = None):
    """n walks; per path: hitting time, values at fractions ``us`` of it,
    and running-max exceedance flags for ``levels``.

    Returns (taus, truncated, vals[n, len(us)], level_hits[n, len(levels)]).
    Truncated paths carry NaN marginals; their level flags are completed
    exactly via the hit-before-zero probability.
    """
    if x <= 0.0:
        raise DomainError("x must be positive")
    if not 0.0 < step0 < 1.0:
        raise DomainError("step0 must lie in (0, 1)")
    if t_cap <= x * x:
        raise DomainError("t_cap must exceed x^2")
    us = np.asarray(us, dtype=np.float64)
    lv = (np.empty(0) if levels is None
          else np.asarray(levels, dtype=np.float64))
    if lv.size and (np.any(np.diff(lv) <= 0) or lv[0] <= 0):
        raise DomainError("levels must be positive and strictly increasing")
    taus = np.empty(n)
    trunc = np.zeros(n, dtype=np.bool_)
    vals = np.empty((n, us.size))
    hits = np.zeros((n, lv.size), dtype=np.uint8)
    _kernels.batch_walk(rng.generator, x, step0, GROWTH2, CAP2, t_cap,
                        bridge_correction, us, lv, taus, trunc, vals, hits)
    return taus, trunc, vals, hits


def sample_v_path(x: float, u_grid: TimeGrid, step0: float, t_cap: float,
                  rng: RngStream, bridge_correction: bool = True
                  ) -> PathSample:
    """One realization of the walk rescaled to its hitting time, read out
    at the fractions in u_grid."""
    if u_grid.kind != "fractions":
        raise DomainError("u_grid must be a fractions grid")
    us = u_grid.as_array()
    taus, trunc, vals, _ = sample_v_marginals(x, us, 1, step0, t_cap, rng,
                                              bridge_correction)
    meta = PathMeta(step_size=step0, crossing_corrected=bridge_correction,
                    truncated=bool(trunc[0]))
    tau = float(taus[0]) if not trunc[0] else None
    values = vals[0] if not trunc[0] else np.full(us.size, np.nan)
    return PathSample(grid=u_grid, values=values, tau=tau, meta=meta)


def dual_tau_batch(x: float, n: int, step0: float, t_cap: float,
                   rng: RngStream):
    """Coupled corrected/uncorrected hitting-time estimates off shared
    increments; returns (tau_corr, trunc_corr, tau_unc, trunc_unc)."""
    taus_c = np.empty(n)
    trunc_c = np.zeros(n, dtype=np.bool_)
    taus_u = np.empty(n)
    trunc_u = np.zeros(n, dtype=np.bool_)
    _kernels.batch_dual_tau(rng.generator, x, step0, GROWTH2, CAP2, t_cap,
                            taus_c, trunc_c, taus_u, trunc_u)
    return taus_c, trunc_c, taus_u, trunc_u


# ---------------------------------------------------------------------------
# 3D Bessel bridge (exact at grid points)


@dataclass(frozen=True)
class BesselBridgeSpec:
    """Norm-of-3D-bridge process pinned at x at time 0 and 0 at time T."""

    x: float
    T: float = 1.0
    grid: TimeGrid = field(default_factory=lambda: make_fraction_grid([0.5]))

    def __post_init__(self):
        if self.x < 0.0:
            raise DomainError("x must be nonnegative")
        if self.T <= 0.0:
            raise DomainError("T must be positive")
        if self.grid.kind == "fractions":
            return
        if self.grid.points[0] < 0.0 or self.grid.points[-1] > self.T:
            raise DomainError("grid must lie within [0, T]")

    def times(self) -> np.ndarray:
        t = self.grid.as_array()
        return t * self.T if self.grid.kind == "fractions" else t


def _std_bridge_3d(fractions: np.ndarray, n: int,
                   rng: RngStream) -> np.ndarray:
    """Standard 3D Brownian bridge on [0, 1] at the given interior-sorted
    fractions (must start at 0 and end at 1); shape (n, len(fractions), 3).
    """
    diffs = np.diff(fractions)
    out = np.empty((n, fractions.size, 3))
    done = 0
    while done < n:
        k = min(_BATCH_CHUNK, n - done)
        inc = rng.normals(k * diffs.size * 3).reshape(k, diffs.size, 3)
        inc *= np.sqrt(diffs)[None, :, None]
        w = np.concatenate([np.zeros((k, 1, 3)), np.cumsum(inc, axis=1)],
                           axis=1)
        out[done:done + k] = w - fractions[None, :, None] * w[:, -1:, :]
        done += k
    return out


def bessel_bridge_values(x, T: float, fractions: np.ndarray, n: int,
                         rng: RngStream) -> np.ndarray:
    """Batch of Bessel bridges from x (scalar or per-sample array) to 0
    over [0, T], evaluated at the given fractions of T; shape (n, m).

    By Brownian scaling this equals sqrt(T) times a unit-length bridge
    started at x/sqrt(T).
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr[0] != 0.0 or fr[-1] != 1.0 or np.any(np.diff(fr) <= 0):
        raise DomainError("fractions must increase from 0 to 1")
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), (n,))
    sqrt_t = math.sqrt(T)
    b = _std_bridge_3d(fr, n, rng)
    first = (x[:, None] / sqrt_t) * (1.0 - fr)[None, :] + b[:, :, 0]
    r = np.sqrt(first ** 2 + b[:, :, 1] ** 2 + b[:, :, 2] ** 2)
    return sqrt_t * r


def sample_bessel_bridge(spec: BesselBridgeSpec, rng: RngStream
                         ) -> PathSample:
    times = spec.times()
    fr = times / spec.T
    pad_lo = fr[0] != 0.0
    pad_hi = fr[-1] != 1.0
    full = np.concatenate([[0.0] if pad_lo else [], fr,
                           [1.0] if pad_hi else []])
    vals = bessel_bridge_values(spec.x, spec.T, full, 1, rng)[0]
    if pad_lo:
        vals = vals[1:]
    if pad_hi:
        vals = vals[:-1]
    return PathSample(grid=spec.grid, values=vals,
                      tau=spec.T, meta=PathMeta(crossing_corrected=True))


# ---------------------------------------------------------------------------
# composite scaled-bridge process (right-hand side of the path identity)


def theorem1_rhs_values(fractions: np.ndarray, n: int, rng: RngStream,
                        coupling: str = "independent",
                        t_cap: float | None = None):
    """Batch of tau^{1/2} * R_{tau^{-1/2}, u} paths on the fraction grid.

    tau and the standard 3D bridge come from disjoint child streams.  With
    coupling="comonotone" the independence contract is deliberately broken
    (negative control): tau is rank-matched to the bridge's first
    coordinate at the middle grid point, which grossly distorts the law
    while preserving both marginals.  If t_cap is given, draws with
    tau > t_cap are dropped (to match truncation-excluded walk samples).

    Returns (values[n_kept, m], taus[n_kept]).
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr[0] != 0.0 or fr[-1] != 1.0 or np.any(np.diff(fr) <= 0):
        raise DomainError("fractions must increase from 0 to 1")
    if coupling not in ("independent", "comonotone"):
        raise DomainError(f"unknown coupling {coupling!r}")
    taus = sample_tau_batch(1.0, n, split_stream(rng, 0))
    b = _std_bridge_3d(fr, n, split_stream(rng, 1))
    if coupling == "comonotone":
        mid = fr.size // 2
        order = np.argsort(b[:, mid, 0])
        ranked = np.empty(n)
        ranked[order] = np.sort(taus)
        taus = ranked
    if t_cap is not None:
        keep = taus <= t_cap
        taus = taus[keep]
        b = b[keep]
    sq = np.sqrt(taus)[:, None]
    first = (1.0 - fr)[None, :] + sq * b[:, :, 0]
    vals = np.sqrt(first ** 2 + taus[:, None] * (b[:, :, 1] ** 2
                                                 + b[:, :, 2] ** 2))
    return vals, taus


def sample_theorem1_rhs(u_grid: TimeGrid, rng: RngStream) -> PathSample:
    if u_grid.kind != "fractions":
        raise DomainError("u_grid must be a fractions grid")
    vals, taus = theorem1_rhs_values(u_grid.as_array(), 1, rng)
    return PathSample(grid=u_grid, values=vals[0], tau=float(taus[0]),
                      meta=PathMeta(crossing_corrected=True))


# ---------------------------------------------------------------------------
# nonnegative post-last-zero process on [0, 1]


@dataclass(frozen=True)
class MeanderSpec:
    """Brownian path on [0, 1] after its last zero, rescaled to unit length
    and reflected to be nonnegative."""

    grid: TimeGrid = field(
        default_factory=lambda: make_fraction_grid([0.5]))
    construction: str = "rayleigh_bridge"
    fine_steps: int = 20_000  # last_zero only

    def __post_init__(self):
        if self.grid.kind != "fractions":
            raise DomainError("meander grid must be a fractions grid")
        if self.construction not in ("rayleigh_bridge", "last_zero"):
            raise DomainError(
                f"unknown construction {self.construction!r}")
        if self.fine_steps < 100:
            raise DomainError("fine_steps must be >= 100")


def _meander_rayleigh(fractions: np.ndarray, n: int, rng: RngStream):
    """Exact construction: Rayleigh endpoint m, then a Bessel bridge from m
    to 0 run backwards.  Returns (values[n, len(fractions)], m[n])."""
    m_end = np.sqrt(2.0 * rng.generator.standard_exponential(n))
    rev = 1.0 - fractions[::-1]
    vals_rev = bessel_bridge_values(m_end, 1.0, rev, n, rng)
    return vals_rev[:, ::-1].copy(), m_end


def _meander_last_zero(fractions: np.ndarray, n: int, rng: RngStream,
                       fine_steps: int):
    """Literal construction from the last zero of a fine-grid Brownian
    path, with intra-step bridge crossing correction when locating it.
    Returns (values[n, len(fractions)], endpoint[n])."""
    m_g = fine_steps
    dt = 1.0 / m_g
    sq_dt = math.sqrt(dt)
    gen = rng.generator
    out = np.empty((n, fractions.size))
    chunk = max(1, min(n, 2 ** 24 // m_g))
    done = 0
    while done < n:
        k = min(chunk, n - done)
        w = np.empty((k, m_g + 1))
        w[:, 0] = 0.0
        np.cumsum(gen.standard_normal((k, m_g)) * sq_dt, axis=1,
                  out=w[:, 1:])
        a = w[:, :-1]
        b = w[:, 1:]
        prod = a * b
        cross = prod <= 0.0
        # same-sign steps may still cross; bridge-correct the near misses
        e = 2.0 * prod / dt
        cand = (~cross) & (e < 30.0)
        u = gen.random(int(cand.sum()))
        hit = np.zeros_like(cross)
        hit[cand] = u < np.exp(-e[cand])
        crossing = cross | hit
        crossing[:, 0] = True  # the path starts at zero
        last = m_g - 1 - np.argmax(crossing[:, ::-1], axis=1)
        rows = np.arange(k)
        a_l = a[rows, last]
        b_l = b[rows, last]
        sign_change = a_l * b_l <= 0.0
        frac_in = np.where(sign_change,
                           np.abs(a_l) / np.maximum(np.abs(a_l - b_l), 1e-300),
                           0.5)
        zeta = (last + frac_in) * dt
        scale = 1.0 / np.sqrt(1.0 - zeta)
        t_query = zeta[:, None] + (1.0 - zeta)[:, None] * fractions[None, :]
        idx = np.clip((t_query / dt).astype(np.int64), 0, m_g - 1)
        frac = t_query / dt - idx
        w_q = w[rows[:, None], idx] * (1.0 - frac) + w[rows[:, None],
                                                       idx + 1] * frac
        vals = scale[:, None] * np.abs(w_q)
        vals[:, fractions == 0.0] = 0.0
        out[done:done + k] = vals
        done += k
    return out, out[:, -1].copy()


def meander_values(fractions: np.ndarray, n: int, rng: RngStream,
                   construction: str = "rayleigh_bridge",
                   fine_steps: int = 20_000):
    """Batch meander paths at the given fractions (must end at 1 so the
    endpoint is available).  Returns (values[n, m], endpoint[n])."""
    fr = np.asarray(fractions, dtype=np.float64)
    if fr[-1] != 1.0 or np.any(np.diff(fr) <= 0) or fr[0] < 0.0:
        raise DomainError("fractions must increase within [0, 1], ending at 1")
    if construction == "rayleigh_bridge":
        if fr[0] != 0.0:
            fr = np.concatenate([[0.0], fr])
            vals, end = _meander_rayleigh(fr, n, rng)
            return vals[:, 1:], end
        return _meander_rayleigh(fr, n, rng)
    if construction == "last_zero":
        return _meander_last_zero(fr, n, rng, fine_steps)
    raise DomainError(f"unknown construction {construction!r}")


def sample_meander(spec: MeanderSpec, rng: RngStream) -> PathSample:
    fr = spec.grid.as_array()
    vals, _ = meander_values(fr, 1, rng, spec.construction, spec.fine_steps)
    return PathSample(grid=spec.grid, values=vals[0], tau=1.0,
                      meta=PathMeta(
                          crossing_corrected=spec.construction
                          == "rayleigh_bridge"))


# ---------------------------------------------------------------------------
# conditional sampling given a high running maximum


def sample_v_conditional_on_max(x: float, u: float, y: float, n: int,
                                rng: RngStream, step0: float = 1e-3,
                                t_cap: float = 1e6,
                                max_attempts: int | None = None):
    """Rejection sampler for y^{-1} V_u given the running maximum exceeds y.

    Returns (accepted values (length n), attempts used).  The acceptance
    rate is ~ x/y; rates below 1e-4 are refused up front."""
    if y <= x:
        raise DomainError("y must exceed x")
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")
    if n < 1:
        raise DomainError("n must be >= 1")
    if x / y < 1e-4:
        raise BudgetExceededError(
            f"acceptance rate ~{x / y:.2e} below 1e-4; choose smaller y")
    if max_attempts is None:
        max_attempts = int(40 * n * y / x)
    us = np.array([u])
    levels = np.array([y])
    accepted: list[np.ndarray] = []
    got = 0
    attempts = 0
    while got < n and attempts < max_attempts:
        batch = min(_BATCH_CHUNK, max(1024, int(1.3 * (n - got) * y / x)))
        batch = min(batch, max_attempts - attempts)
        _, trunc, vals, hits = sample_v_marginals(
            x, us, batch, step0, t_cap, rng, levels=levels)
        keep = (hits[:, 0] == 1) & ~trunc
        accepted.append(vals[keep, 0])
        got += int(keep.sum())
        attempts += batch
    if got < n:
        raise BudgetExceededError(
            f"only {got}/{n} acceptances in {attempts} attempts")
    return np.concatenate(accepted)[:n] / y, attempts
