"""Seeded white-noise realizations on a uniform grid, and their mollified versions.

White noise is never evaluated pointwise: a path stores the Brownian
increments ``dB_i = B(t_{i+1}) - B(t_i)`` (variance ``h`` each) and their
cumulative sum ``B`` at the nodes. Every downstream scheme consumes these.

Random streams
--------------
Each stream is a ``PCG64`` generator seeded with
``SeedSequence(seed, spawn_key=(purpose, replica))``. ``purpose`` is a small
integer naming what the numbers are for (see ``PURPOSE_*``) and ``replica``
indexes independent realizations, so replica ``r`` is reproducible no matter
which worker computes it or in which order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ConfigurationError, ResolutionError

PURPOSE_PATH = 0
PURPOSE_PHASE = 1
PURPOSE_PAM = 2

_REL_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t_start + i*h``, ``i = 0..n_points-1``."""

    t_start: float
    t_end: float
    h: float
    n_points: int

    def __post_init__(self):
        if not (self.n_points >= 2):
            raise ConfigurationError(f"grid needs n_points >= 2, got {self.n_points}")
        if not (self.h > 0) or not math.isfinite(self.h):
            raise ConfigurationError(f"grid step must be positive, got {self.h}")
        span = self.t_end - self.t_start
        if abs(span - self.h * (self.n_points - 1)) > 4 * np.spacing(max(abs(self.t_start), abs(self.t_end), span)) + _REL_TOL * self.h:
            raise ConfigurationError("t_end - t_start must equal h*(n_points-1)")

    @classmethod
    def from_points(cls, t_start: float, t_end: float, n_points: int) -> "Grid":
        n_points = int(n_points)
        if n_points < 2:
            raise ConfigurationError(f"grid needs n_points >= 2, got {n_points}")
        if not t_end > t_start:
            raise ConfigurationError("grid needs t_end > t_start")
        return cls(float(t_start), float(t_end), (t_end - t_start) / (n_points - 1), n_points)

    @classmethod
    def from_step(cls, t_start: float, t_end: float, h: float) -> "Grid":
        """Grid with step ``h``; ``(t_end - t_start)/h`` must be an integer."""
        if not h > 0:
            raise ConfigurationError(f"grid step must be positive, got {h}")
        n_cells = (t_end - t_start) / h
        m = round(n_cells)
        if m < 1 or abs(n_cells - m) > 1e-6 * max(1.0, n_cells):
            raise ConfigurationError(f"interval length {t_end - t_start} is not a multiple of h={h}")
        return cls.from_points(t_start, t_end, m + 1)

    @property
    def nodes(self) -> np.ndarray:
        t = self.t_start + self.h * np.arange(self.n_points)
        t[-1] = self.t_end
        return t

    @property
    def midpoints(self) -> np.ndarray:
        return self.t_start + self.h * (np.arange(self.n_points - 1) + 0.5)

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    def index_of(self, t: float) -> int:
        """Index of the node at ``t``; raises if ``t`` is not a node."""
        x = (t - self.t_start) / self.h
        i = round(x)
        if abs(x - i) > 1e-6 or not 0 <= i < self.n_points:
            raise ConfigurationError(f"t={t} is not a node of the grid [{self.t_start}, {self.t_end}] (h={self.h})")
        return int(i)

    def contains(self, t0: float, t1: float) -> bool:
        eps = 1e-9 * self.h
        return self.t_start - eps <= t0 and t1 <= self.t_end + eps

    def sub(self, i0: int, i1: int) -> "Grid":
        """Grid of nodes ``i0..i1`` inclusive."""
        nodes = self.nodes
        return Grid(float(nodes[i0]), float(nodes[i1]), self.h, i1 - i0 + 1)


@dataclass(frozen=True, eq=False)
class NoisePath:
    """A sampled Brownian path (the antiderivative of the white noise).

    ``potential`` holds the mollified potential at the nodes when
    ``kind == "mollified"``.
    """

    grid: Grid
    increments: np.ndarray
    cumulative: np.ndarray
    seed: int
    kind: str = "white"
    eps: float | None = None
    potential: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.increments.shape != (self.grid.n_points - 1,):
            raise ConfigurationError("increments must have n_points-1 entries")
        if self.cumulative.shape != (self.grid.n_points,):
            raise ConfigurationError("cumulative must have n_points entries")

    @property
    def kicks(self) -> np.ndarray:
        """Integrated potential over each cell, i.e. the weight the schemes see per cell."""
        if self.kind == "mollified":
            xi = self.potential
            return 0.5 * (xi[:-1] + xi[1:]) * self.grid.h
        return self.increments

    def restrict(self, t0: float, t1: float) -> "NoisePath":
        """The path on ``[t0, t1]`` (both must be nodes), with B rebased to 0 at ``t0``."""
        i0, i1 = self.grid.index_of(t0), self.grid.index_of(t1)
        if i1 <= i0:
            raise ConfigurationError("restrict needs t1 > t0")
        return self._slice(i0, i1)

    def _slice(self, i0: int, i1: int) -> "NoisePath":
        inc = self.increments[i0:i1].copy()
        cum = self.cumulative[i0:i1 + 1] - self.cumulative[i0]
        pot = None if self.potential is None else self.potential[i0:i1 + 1].copy()
        return NoisePath(self.grid.sub(i0, i1), inc, cum, self.seed, self.kind, self.eps, pot)


def rng_stream(seed: int, purpose: int = PURPOSE_PATH, replica: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, replica)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(purpose), int(replica)))
    return np.random.Generator(np.random.PCG64(ss))


def _from_increments(grid: Grid, increments: np.ndarray, seed: int) -> NoisePath:
    cum = np.empty(grid.n_points)
    cum[0] = 0.0
    np.cumsum(increments, out=cum[1:])
    return NoisePath(grid, increments, cum, int(seed))


def sample_brownian(seed: int, grid: Grid, replica: int = 0) -> NoisePath:
    """Brownian path on ``grid``: i.i.d. ``N(0, h)`` increments from the seeded stream."""
    if not isinstance(grid, Grid):
        raise ConfigurationError("grid must be a Grid")
    rng = rng_stream(seed, PURPOSE_PATH, replica)
    inc = rng.standard_normal(grid.n_points - 1) * math.sqrt(grid.h)
    return _from_increments(grid, inc, seed)


def path_from_increments(grid: Grid, increments, seed: int = -1) -> NoisePath:
    """Deterministic path with prescribed increments (synthetic tests, free case)."""
    inc = np.ascontiguousarray(increments, dtype=float)
    if inc.shape != (grid.n_points - 1,):
        raise ConfigurationError("need n_points-1 increments")
    return _from_increments(grid, inc, seed)


def zero_path(grid: Grid) -> NoisePath:
    """``B = 0``: the free operator."""
    return path_from_increments(grid, np.zeros(grid.n_points - 1))


def increment_chunks(seed: int, h: float, n: int, chunk: int = 1 << 20,
                     purpose: int = PURPOSE_PATH, replica: int = 0) -> Iterator[np.ndarray]:
    """Stream ``n`` increments of variance ``h`` in chunks (long horizons).

    The concatenated chunks equal ``sample_brownian`` increments for the same
    ``(seed, replica)`` when ``purpose == PURPOSE_PATH``.
    """
    rng = rng_stream(seed, purpose, replica)
    sh = math.sqrt(h)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        yield rng.standard_normal(m) * sh
        done += m


def refine_pair(seed: int, grid: Grid, factor: int = 2, replica: int = 0) -> tuple[NoisePath, NoisePath]:
    """A path on ``grid`` refined ``factor`` times, and the same path on ``grid``.

    The coarse increments are block sums of the fine ones, so both describe
    one Brownian realization.
    """
    fine = sample_brownian(seed, Grid.from_points(grid.t_start, grid.t_end, (grid.n_points - 1) * factor + 1), replica)
    return fine, coarsen(fine, factor)


def coarsen(path: NoisePath, factor: int) -> NoisePath:
    n_cells = path.grid.n_points - 1
    if factor < 1 or n_cells % factor:
        raise ConfigurationError(f"cannot coarsen {n_cells} cells by {factor}")
    inc = path.increments.reshape(-1, factor).sum(axis=1)
    grid = Grid.from_points(path.grid.t_start, path.grid.t_end, n_cells // factor + 1)
    return _from_increments(grid, inc, path.seed)


def bump(s, eps: float):
    """Unit-mass ``cos^4`` bump of support ``[-eps/2, eps/2]`` (C^2 at the edges)."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < eps / 2
    return np.where(inside, (8.0 / (3.0 * eps)) * np.cos(np.pi * s / eps) ** 4, 0.0)


def bump_l2(eps: float) -> float:
    """``int bump^2 = 35 / (18 eps)``."""
    return 35.0 / (18.0 * eps)


def mollify(path: NoisePath, eps: float) -> NoisePath:
    """Smoothed potential ``xi_eps(t_i) = sum_j bump(t_i - m_j) dB_j`` at the nodes.

    ``m_j`` is the midpoint of cell ``j``. The discrete weights are
    renormalized to sum to ``1/h`` so a constant-slope path maps to a
    constant potential exactly away from the ends.
    """
    h = path.grid.h
    if not eps >= 2 * h * (1 - 1e-12):
        raise ResolutionError(f"mollifier width eps={eps} must be >= 2h={2 * h}")
    half = int(math.ceil(eps / (2 * h))) + 1
    # offsets t_i - m_j = (i - j - 1/2) h for i - j in [-half+1, half]
    k = np.arange(-half + 1, half + 1)
    w = bump((k - 0.5) * h, eps)
    w *= (1.0 / h) / w.sum()
    full = np.convolve(path.increments, w)
    # xi[i] = sum_j w[i-j + half-1] dB_j  ->  full[i + half - 1]
    xi = full[half - 1: half - 1 + path.grid.n_points].copy()
    return NoisePath(path.grid, path.increments, path.cumulative, path.seed, "mollified", float(eps), xi)


def quadratic_envelope_constant(path: NoisePath) -> float:
    """Smallest ``C >= 0`` with ``xi_eps(t) >= -C (1 + t^2)`` on the sampled nodes."""
    if path.potential is None:
        raise ConfigurationError("envelope needs a mollified path")
    t = path.grid.nodes
    return float(max(0.0, np.max(-path.potential / (1.0 + t * t))))


def write_path_csv(path: NoisePath, target) -> Path:
    """CSV ``t,B,dB[,xi_eps]`` plus a JSON sidecar with the metadata.

    ``dB`` on row ``i`` is the increment over ``[t_i, t_{i+1}]``; the last row
    leaves it empty.
    """
    target = Path(target)
    t = path.grid.nodes
    cols = ["t", "B", "dB"] + (["xi_eps"] if path.potential is not None else [])
    lines = [",".join(cols)]
    n = path.grid.n_points
    for i in range(n):
        row = [repr(float(t[i])), repr(float(path.cumulative[i])),
               repr(float(path.increments[i])) if i < n - 1 else ""]
        if path.potential is not None:
            row.append(repr(float(path.potential[i])))
        lines.append(",".join(row))
    target.write_text("\n".join(lines) + "\n")
    meta = {"seed": path.seed, "h": path.grid.h, "n_points": n, "t_start": path.grid.t_start,
            "t_end": path.grid.t_end, "kind": path.kind}
    if path.eps is not None:
        meta["eps"] = path.eps
    target.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return target


def read_path_csv(source) -> NoisePath:
    source = Path(source)
    meta = json.loads(source.with_suffix(".json").read_text())
    rows = source.read_text().strip().split("\n")[1:]
    inc = np.array([float(r.split(",")[2]) for r in rows[:-1]])
    grid = Grid.from_points(meta["t_start"], meta["t_end"], meta["n_points"])
    p = path_from_increments(grid, inc, meta["seed"])
    if meta["kind"] == "mollified":
        xi = np.array([float(r.split(",")[3]) for r in rows])
        p = NoisePath(grid, p.increments, p.cumulative, p.seed, "mollified", meta["eps"], xi)
    return p
