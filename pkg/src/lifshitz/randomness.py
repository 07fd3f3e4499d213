"""I.i.d. coupling constants, box averages and large-deviation probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

CUTOFF = 0.5


@dataclass(frozen=True)
class CouplingDistribution:
    """Law of a single coupling constant.

    ``kind`` is one of ``"bernoulli"`` (values 0/1 with P{1} = p),
    ``"uniform"`` (on ``[a, b]``) or ``"discrete"`` (finite ``values`` with
    ``weights``).  The support interval ``[lam_minus, lam_plus]`` defaults to
    the natural one for the kind and may be widened for discrete laws.
    """

    kind: str
    p: float | None = None
    a: float | None = None
    b: float | None = None
    values: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.kind == "bernoulli":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"bernoulli: p must lie in [0, 1], got {self.p}")
        elif self.kind == "uniform":
            if self.a is None or self.b is None or self.a > self.b:
                raise ValueError(f"uniform: need a <= b, got a={self.a}, b={self.b}")
        elif self.kind == "discrete":
            if len(self.values) == 0 or len(self.values) != len(self.weights):
                raise ValueError("discrete: values and weights must be non-empty and of equal length")
            if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
                raise ValueError("discrete: weights must be nonnegative with positive sum")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        lo, hi = self._natural_support()
        if self.lower is not None and self.lower > lo or self.upper is not None and self.upper < hi:
            raise ValueError("explicit support bounds must enclose all mass")

    @classmethod
    def bernoulli(cls, p: float) -> CouplingDistribution:
        return cls("bernoulli", p=p)

    @classmethod
    def uniform(cls, a: float, b: float) -> CouplingDistribution:
        return cls("uniform", a=a, b=b)

    @classmethod
    def discrete(cls, values, weights, lower=None, upper=None) -> CouplingDistribution:
        return cls("discrete", values=tuple(values), weights=tuple(weights), lower=lower, upper=upper)

    @classmethod
    def point_mass(cls, value: float, lower=None, upper=None) -> CouplingDistribution:
        return cls.discrete((value,), (1.0,), lower=lower, upper=upper)

    def _natural_support(self) -> tuple[float, float]:
        if self.kind == "bernoulli":
            return 0.0, 1.0
        if self.kind == "uniform":
            return float(self.a), float(self.b)
        return min(self.values), max(self.values)

    @property
    def lam_minus(self) -> float:
        return self._natural_support()[0] if self.lower is None else float(self.lower)

    @property
    def lam_plus(self) -> float:
        return self._natural_support()[1] if self.upper is None else float(self.upper)

    @property
    def is_trivial(self) -> bool:
        """True for a point mass (excluded by the model, allowed as a fixture)."""
        if self.kind == "bernoulli":
            return self.p in (0.0, 1.0)
        if self.kind == "uniform":
            return self.a == self.b
        support = {v for v, w in zip(self.values, self.weights) if w > 0}
        return len(support) == 1

    def require_unit_support(self) -> None:
        if self.lam_minus != 0.0 or self.lam_plus != 1.0:
            raise ValueError(
                f"support must be [0, 1] for the characteristic breather, got "
                f"[{self.lam_minus}, {self.lam_plus}]"
            )

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "bernoulli":
            return (rng.random(size) < self.p).astype(float)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        w = np.asarray(self.weights)
        return rng.choice(np.asarray(self.values), size=size, p=w / w.sum())

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "bernoulli":
            out["p"] = self.p
        elif self.kind == "uniform":
            out.update(a=self.a, b=self.b)
        else:
            out.update(values=list(self.values), weights=list(self.weights))
        if self.lower is not None:
            out["lower"] = self.lower
        if self.upper is not None:
            out["upper"] = self.upper
        return out


@dataclass(frozen=True)
class Realization:
    """Couplings of the ``L`` cells of the box, left to right, plus their seed."""

    L: int
    lambdas: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.shape != (self.L,):
            raise ValueError(f"expected {self.L} couplings, got shape {lam.shape}")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def from_lambdas(cls, lambdas, seed: int = 0) -> Realization:
        lam = np.asarray(lambdas, dtype=float)
        return cls(L=len(lam), lambdas=lam, seed=seed)


@dataclass(frozen=True)
class AverageStats:
    s_l: float
    s_l_tilde: float
    mu_tilde: float | None = None


def derive_seed(master: int, index: int) -> int:
    """64-bit seed token for sample ``index`` of a batch with seed ``master``."""
    state = np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)
    return int(state[0])


def sample_realization(dist: CouplingDistribution, L: int, seed: int) -> Realization:
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    rng = np.random.default_rng(int(seed))
    return Realization(L=L, lambdas=dist.sample(rng, L), seed=int(seed))


def sample_batch(dist: CouplingDistribution, L: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Couplings of realizations ``start..stop-1``; row ``r`` depends only on ``(seed, r)``."""
    out = np.empty((stop - start, L))
    for i, r in enumerate(range(start, stop)):
        out[i] = dist.sample(np.random.default_rng(derive_seed(seed, r)), L)
    return out


def averages(r: Realization | np.ndarray, dist: CouplingDistribution | None = None) -> AverageStats:
    lam = r.lambdas if isinstance(r, Realization) else np.asarray(r, dtype=float)
    mu = mean_cutoff(dist) if dist is not None else None
    return AverageStats(
        s_l=float(np.mean(lam)),
        s_l_tilde=float(np.mean(np.minimum(lam, CUTOFF))),
        mu_tilde=mu,
    )


def mean_cutoff(dist: CouplingDistribution) -> float:
    """E{min(lambda, 1/2)} in closed form."""
    if dist.kind == "bernoulli":
        return dist.p * CUTOFF
    if dist.kind == "uniform":
        a, b = dist.a, dist.b
        if b <= CUTOFF:
            return 0.5 * (a + b)
        if a >= CUTOFF:
            return CUTOFF
        return (0.5 * (CUTOFF**2 - a * a) + CUTOFF * (b - CUTOFF)) / (b - a)
    w = np.asarray(dist.weights)
    return float(np.dot(w / w.sum(), np.minimum(dist.values, CUTOFF)))


@dataclass(frozen=True)
class LargeDeviationEstimate:
    estimate: float
    hits: int
    samples: int
    ci_low: float
    ci_high: float

    @property
    def ci_half(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def wilson_interval(hits: int, samples: int) -> tuple[float, float]:
    ci = binomtest(int(hits), int(samples)).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def large_deviation_empirical(
    dist: CouplingDistribution, L: int, threshold: float, R: int, seed: int
) -> LargeDeviationEstimate:
    """Fraction of ``R`` realizations with cut-off average at most ``threshold``."""
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    hits = 0
    chunk = 4096
    for start in range(0, R, chunk):
        lam = sample_batch(dist, L, seed, start, min(R, start + chunk))
        s_tilde = np.minimum(lam, CUTOFF).mean(axis=1)
        hits += int(np.count_nonzero(s_tilde <= threshold))
    lo, hi = wilson_interval(hits, R)
    return LargeDeviationEstimate(hits / R, hits, R, lo, hi)


def large_deviation_hoeffding(mu_tilde: float, L: int, threshold: float) -> float:
    """Hoeffding bound on P{cut-off average <= threshold} for variables in [0, 1/2]."""
    if threshold >= mu_tilde:
        raise ValueError(
            f"threshold {threshold} >= mean {mu_tilde}: Hoeffding bound is vacuous"
        )
    t = mu_tilde - threshold
    return math.exp(-2.0 * L * t * t / CUTOFF**2)
