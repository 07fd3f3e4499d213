"""Monte Carlo integrated density of states and Lifshitz-exponent regression."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .discretize import DEFAULT_M, free_neumann_count, laplacian_diagonals
from .eigensolve import sturm_counts
from .potentials import SingleSiteModel
from .randomness import CouplingDistribution, sample_batch, wilson_interval

Z95 = 1.959963984540054
ADMISSIBILITY_FACTOR = 3.0
CELLS_PER_CHUNK = 4_000_000


def geometric_grid(e_max: float, ratio: float, count: int) -> np.ndarray:
    """Ascending grid ``e_max * ratio**j``, ``j = count-1 .. 0``."""
    if not 0 < ratio < 1 or e_max <= 0 or count < 1:
        raise ValueError("need e_max > 0, 0 < ratio < 1, count >= 1")
    return e_max * ratio ** np.arange(count - 1, -1, -1, dtype=float)


@dataclass
class IdsEstimate:
    L: int
    m: int
    R: int
    seed: int
    grid: np.ndarray
    n_hat: np.ndarray
    ci_half: np.ndarray
    runtime_seconds: float = field(default=0.0, compare=False)
    config: dict = field(default_factory=dict, compare=False)

    def __eq__(self, other):
        if not isinstance(other, IdsEstimate):
            return NotImplemented
        return (self.L, self.m, self.R, self.seed) == (other.L, other.m, other.R, other.seed) and all(
            np.array_equal(a, b)
            for a, b in ((self.grid, other.grid), (self.n_hat, other.n_hat), (self.ci_half, other.ci_half))
        )

    def rows(self):
        for E, n, c in zip(self.grid, self.n_hat, self.ci_half):
            yield {"E": float(E), "n_hat": float(n), "ci_half": float(c), "R": self.R, "L": self.L, "m": self.m, "seed": self.seed}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["E", "n_hat", "ci_half", "R", "L", "m", "seed"])
            w.writeheader()
            for row in self.rows():
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

    @classmethod
    def from_csv(cls, path) -> IdsEstimate:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: no rows")
        first = rows[0]
        return cls(
            L=int(first["L"]),
            m=int(first["m"]),
            R=int(first["R"]),
            seed=int(first["seed"]),
            grid=np.array([float(r["E"]) for r in rows]),
            n_hat=np.array([float(r["n_hat"]) for r in rows]),
            ci_half=np.array([float(r["ci_half"]) for r in rows]),
        )


@dataclass
class _Tally:
    sum: np.ndarray
    sumsq: np.ndarray
    ground_hits: np.ndarray


def _chunks(R: int, n: int, k: int) -> list[tuple[int, int]]:
    size = max(1, min(8192, 65536 // max(k, 1), CELLS_PER_CHUNK // n))
    return [(s, min(R, s + size)) for s in range(0, R, size)]


def _count_chunk(model, dist, L, m, grid, shift, seed, bounds) -> _Tally:
    start, stop = bounds
    lam = sample_batch(dist, L, seed, start, stop)
    n = L * m
    d, e = laplacian_diagonals(n, 1.0 / m)
    diags = model.subcell_averages(lam, m).reshape(stop - start, n) + d + shift
    c = sturm_counts(diags, e, grid)
    return _Tally(c.sum(axis=0), (c * c).sum(axis=0), (c >= 1).sum(axis=0))


def _tally(model, dist, L, m, grid, R, seed, shift, threads) -> _Tally:
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    if L * m < 2:
        raise ValueError("operator dimension L*m must be >= 2")
    grid = np.asarray(grid, dtype=float)
    work = _chunks(R, L * m, len(grid))

    def job(b):
        return _count_chunk(model, dist, L, m, grid, shift, seed, b)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, work))
    else:
        parts = [job(b) for b in work]
    # integer sums: exact, independent of chunking and thread count
    return _Tally(
        sum(p.sum for p in parts),
        sum(p.sumsq for p in parts),
        sum(p.ground_hits for p in parts),
    )


def estimate_ids(
    model: SingleSiteModel,
    dist: CouplingDistribution,
    L: int,
    m: int = DEFAULT_M,
    grid=(),
    R: int = 1000,
    seed: int = 0,
    shift: float = 0.0,
    threads: int = 1,
) -> IdsEstimate:
    """Mean normalized eigenvalue count of ``R`` Neumann box Hamiltonians at each grid energy."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be a non-empty ascending sequence")
    t0 = time.perf_counter()
    tally = _tally(model, dist, L, m, grid, R, seed, shift, threads)
    mean = tally.sum / R
    n_hat = mean / L
    if R > 1:
        var = np.maximum(tally.sumsq / R - mean * mean, 0.0) * R / (R - 1)
        ci = Z95 * np.sqrt(var / R) / L
    else:
        ci = np.full(len(grid), np.inf)
    return IdsEstimate(
        L=L,
        m=m,
        R=R,
        seed=seed,
        grid=grid,
        n_hat=n_hat,
        ci_half=ci,
        runtime_seconds=time.perf_counter() - t0,
        config={"model": model.describe(), "distribution": dist.to_dict(), "shift": shift},
    )


@dataclass
class LifshitzFit:
    window: tuple[float, float]
    slope: float
    intercept: float
    slope_ci: tuple[float, float]
    points_used: int
    gate: float = ADMISSIBILITY_FACTOR

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_ci": list(self.slope_ci),
            "points_used": self.points_used,
            "gate": self.gate,
        }


def admissible(est: IdsEstimate, E0: float = 0.0) -> np.ndarray:
    n, c, E = est.n_hat, est.ci_half, est.grid
    return (E > E0) & (n > 0) & (n < 1) & (n > ADMISSIBILITY_FACTOR * c)


def fit_lifshitz_exponent(est: IdsEstimate, E0: float = 0.0) -> LifshitzFit:
    """Least-squares slope of ``log|log n_hat|`` against ``log(E - E0)``."""
    mask = admissible(est, E0)
    if np.count_nonzero(mask) < 4:
        raise ValueError(f"need >= 4 admissible points, got {np.count_nonzero(mask)}")
    x = np.log(est.grid[mask] - E0)
    y = np.log(np.abs(np.log(est.n_hat[mask])))
    if np.ptp(y) == 0 or np.ptp(x) == 0:
        raise ValueError("no admissible variation in the data")
    res = stats.linregress(x, y)
    t = stats.t.ppf(0.975, len(x) - 2)
    return LifshitzFit(
        window=(float(est.grid[mask].min()), float(est.grid[mask].max())),
        slope=float(res.slope),
        intercept=float(res.intercept),
        slope_ci=(float(res.slope - t * res.stderr), float(res.slope + t * res.stderr)),
        points_used=int(len(x)),
    )


@dataclass
class FiniteVolumeCheck:
    E: float
    L: int
    R: int
    left: float
    left_ci: float
    p_hat: float
    p_ci: tuple[float, float]
    free_count: int
    right: float
    right_ci: tuple[float, float]
    holds: bool

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def finite_volume_bound_check(
    model: SingleSiteModel,
    dist: CouplingDistribution,
    L: int,
    m: int,
    E: float,
    R: int,
    seed: int,
    threads: int = 1,
) -> FiniteVolumeCheck:
    """Compare the box count at ``E`` with free count times P{E1 <= E} from the same sample."""
    tally = _tally(model, dist, L, m, np.array([E]), R, seed, 0.0, threads)
    mean = float(tally.sum[0]) / R
    left = mean / L
    var = max(float(tally.sumsq[0]) / R - mean * mean, 0.0) * R / max(R - 1, 1)
    left_ci = Z95 * math.sqrt(var / R) / L
    hits = int(tally.ground_hits[0])
    lo, hi = wilson_interval(hits, R)
    free = free_neumann_count(L, E)
    p_hat = hits / R
    right = free * p_hat / L
    right_ci = (free * lo / L, free * hi / L)
    return FiniteVolumeCheck(
        E=E,
        L=L,
        R=R,
        left=left,
        left_ci=left_ci,
        p_hat=p_hat,
        p_ci=(lo, hi),
        free_count=free,
        right=right,
        right_ci=right_ci,
        holds=bool(left - left_ci <= right_ci[1]),
    )
