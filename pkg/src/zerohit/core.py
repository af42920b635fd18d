"""Shared domain types: time grids, path samples, reproducible random streams,
and experiment configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the law."""


class DegenerateLawError(DomainError):
    """The requested law degenerates to a point mass at this parameter."""


class ConfigError(ValueError):
    """Malformed or unknown experiment configuration."""


class InsufficientDataError(RuntimeError):
    """Too few samples survived filtering/conditioning for the test to run."""


class BudgetExceededError(RuntimeError):
    """A rejection sampler's acceptance rate fell below the feasible budget."""


# ---------------------------------------------------------------------------
# time grids


@dataclass(frozen=True)
class TimeGrid:
    """Ordered set of time points, either absolute times or fractions of a
    (random) terminal time."""

    points: tuple[float, ...]
    kind: str  # "uniform" | "fractions" | "adaptive"

    def __post_init__(self):
        pts = self.points
        if len(pts) == 0:
            raise DomainError("grid must contain at least one point")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError("grid points must be strictly increasing")
        if pts[0] < 0:
            raise DomainError("grid points must be nonnegative")
        if self.kind == "fractions":
            if pts[0] != 0.0 or pts[-1] != 1.0:
                raise DomainError("fractions grid must include 0 and 1")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)

    @property
    def interior(self) -> tuple[float, ...]:
        """Points strictly between the first and last grid point."""
        return self.points[1:-1]

    def __len__(self) -> int:
        return len(self.points)


def make_fraction_grid(u_list: Iterable[float]) -> TimeGrid:
    """Sorted, deduplicated fractions grid on [0, 1] with endpoints appended."""
    us = list(u_list)
    for u in us:
        if not (0.0 <= u <= 1.0):
            raise DomainError(f"fraction {u!r} outside [0, 1]")
    pts = sorted(set(float(u) for u in us) | {0.0, 1.0})
    return TimeGrid(points=tuple(pts), kind="fractions")


def uniform_grid(n: int, t_max: float) -> TimeGrid:
    if n < 2 or t_max <= 0:
        raise DomainError("uniform grid needs n >= 2 and t_max > 0")
    return TimeGrid(points=tuple(np.linspace(0.0, t_max, n)), kind="uniform")


def refine_fraction_grid(grid: TimeGrid, min_points: int) -> TimeGrid:
    """Union the grid with a uniform fractions grid of at least min_points."""
    base = np.linspace(0.0, 1.0, max(min_points, len(grid)))
    pts = sorted(set(np.round(base, 12)) | set(grid.points))
    return TimeGrid(points=tuple(pts), kind="fractions")


# ---------------------------------------------------------------------------
# path samples


@dataclass
class PathMeta:
    step_size: float = 0.0
    crossing_corrected: bool = False
    truncated: bool = False


@dataclass
class PathSample:
    """One realized trajectory on a grid, with its hitting time if known."""

    grid: TimeGrid
    values: np.ndarray
    tau: float | None = None
    meta: PathMeta = field(default_factory=PathMeta)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.grid),):
            raise DomainError("values length must equal grid length")
        if self.tau is not None and not self.tau > 0:
            raise DomainError("tau must be positive when present")


# ---------------------------------------------------------------------------
# reproducible randomness
#
# Streams are Philox counter-based generators keyed by (seed, stream_id).
# Distinct keys give statistically independent streams; the 128-bit position
# (number of raw 64-bit outputs consumed) can be saved and replayed.


def splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


@dataclass
class RngStream:
    """Counter-addressable random stream.

    The underlying generator is created lazily; drawing from ``generator``
    advances the stream.  ``position`` / ``jump_to`` expose the raw 64-bit
    output counter for exact replay.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def key(self) -> int:
        return ((self.seed & MASK64) << 64) | (self.stream_id & MASK64)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(np.random.Philox(key=self.key))
        return self._gen

    def fresh_generator(self) -> np.random.Generator:
        """A new generator at position 0 of this stream (does not touch the
        stream's own lazily-created generator)."""
        return np.random.Generator(np.random.Philox(key=self.key))

    @property
    def position(self) -> int:
        """Number of raw 64-bit outputs consumed so far."""
        st = self.generator.bit_generator.state
        ctr = 0
        for word in reversed(st["state"]["counter"]):
            ctr = (ctr << 64) | int(word)
        buffer_pos = int(st["buffer_pos"])
        if buffer_pos >= 4:  # buffer exhausted or untouched
            return ctr * 4
        return (ctr - 1) * 4 + buffer_pos

    def jump_to(self, position: int) -> "RngStream":
        """A new stream object positioned as if ``position`` raw outputs had
        been consumed."""
        if position < 0:
            raise DomainError("position must be nonnegative")
        bg = np.random.Philox(key=self.key)
        # advance() moves the 256-bit counter, i.e. four raw outputs per unit
        bg.advance(position >> 2)
        out = RngStream(seed=self.seed, stream_id=self.stream_id)
        gen = np.random.Generator(bg)
        if position & 3:
            gen.integers(0, 1 << 64, size=position & 3, dtype=np.uint64)
        out._gen = gen
        return out

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator.random(n)

    def normals(self, n: int) -> np.ndarray:
        return self.generator.standard_normal(n)


def split_stream(parent: RngStream, child_id: int) -> RngStream:
    """Deterministic independent child stream; pure in (parent identity, id)."""
    if child_id < 0:
        raise DomainError("child_id must be nonnegative")
    mixed = splitmix64(((parent.stream_id * _GOLDEN) + child_id + 1) & MASK64)
    return RngStream(seed=parent.seed, stream_id=mixed)


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    x: float = 1.0
    u_grid: TimeGrid = field(
        default_factory=lambda: make_fraction_grid([0.25, 0.5, 0.75])
    )
    n_samples: int = 100_000
    step_size: float = 1e-4
    t_cap: float = 1e6
    seed: int = 1
    alpha: float = 0.01

    def __post_init__(self):
        if not self.x > 0:
            raise ConfigError("x must be positive")
        if self.u_grid.kind != "fractions":
            raise ConfigError("u_grid must be a fractions grid")
        if self.n_samples < 100:
            raise ConfigError("n_samples must be at least 100")
        if not 0 < self.step_size < 1:
            raise ConfigError("step_size must lie in (0, 1)")
        if not self.t_cap > 1:
            raise ConfigError("t_cap must exceed 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def root_stream(self) -> RngStream:
        return RngStream(seed=self.seed, stream_id=0)

    def to_mapping(self) -> dict:
        return {
            "x": self.x,
            "u_grid": ",".join(repr(u) for u in self.u_grid.interior),
            "n_samples": self.n_samples,
            "step_size": self.step_size,
            "t_cap": self.t_cap,
            "seed": self.seed,
            "alpha": self.alpha,
        }

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "ExperimentConfig":
        known = {
            "x": float,
            "u_grid": None,
            "n_samples": int,
            "step_size": float,
            "t_cap": float,
            "seed": int,
            "alpha": float,
        }
        unknown = set(mapping) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, raw in mapping.items():
            if name == "u_grid":
                parts = [p for p in str(raw).replace(" ", "").split(",") if p]
                kwargs[name] = make_fraction_grid(float(p) for p in parts)
            else:
                conv = known[name]
                try:
                    kwargs[name] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {name!r}: {raw!r}") from exc
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        """Flat ``key = value`` config file; '#' starts a comment."""
        mapping: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = body.partition("=")
            key = key.strip()
            if key in mapping:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            mapping[key] = value.strip()
        return cls.from_mapping(mapping)
