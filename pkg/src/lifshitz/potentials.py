"""Single-site models u(lambda, x) and the random potentials built from them.

Cell ``j`` of the box ``[-L/2, L/2]`` is ``]-L/2 + j, -L/2 + j + 1]``.  Alloy
and smooth-breather models use coordinates centered in the cell
(``[-1/2, 1/2]``); the characteristic breather uses coordinates measured from
the left edge (``]0, 1]``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .randomness import Realization

QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-15


class Profile:
    """A bounded, compactly supported function of one variable."""

    support: tuple[float, float]
    name: str = "profile"

    def __call__(self, x):
        raise NotImplementedError

    def integral(self, a, b):
        """Integral over ``[a, b]``, broadcasting over array arguments."""
        raise NotImplementedError

    def power_integral(self, power: int) -> float:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name, "support": list(self.support)}


class Indicator(Profile):
    """``height`` times the indicator of ``[lo, hi]`` (or ``]lo, hi]``)."""

    def __init__(self, lo: float, hi: float, height: float = 1.0, left_open: bool = False):
        if not lo < hi:
            raise ValueError(f"empty indicator support [{lo}, {hi}]")
        self.support = (float(lo), float(hi))
        self.height = float(height)
        self.left_open = left_open
        self.name = "indicator"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x > lo) if self.left_open else (x >= lo)
        return np.where(inside & (x <= hi), self.height, 0.0)

    def integral(self, a, b):
        lo, hi = self.support
        overlap = np.minimum(b, hi) - np.maximum(a, lo)
        return self.height * np.clip(overlap, 0.0, None)

    def power_integral(self, power: int) -> float:
        return self.height**power * (self.support[1] - self.support[0])

    @property
    def sup(self) -> float:
        return max(self.height, 0.0)

    def describe(self) -> dict:
        return {**super().describe(), "height": self.height, "left_open": self.left_open}


class SmoothProfile(Profile):
    """Callable profile; integrals by adaptive quadrature."""

    def __init__(self, func, support: tuple[float, float], name: str = "smooth"):
        self.func = func
        self.support = (float(support[0]), float(support[1]))
        self.name = name
        self._power_cache: dict[int, float] = {}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, self.func(np.clip(x, lo, hi)), 0.0)

    def _integral_scalar(self, a: float, b: float) -> float:
        lo, hi = self.support
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            return 0.0
        return quad(lambda t: float(self.func(t)), a, b, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS, limit=200)[0]

    def integral(self, a, b):
        out = np.vectorize(self._integral_scalar, otypes=[float])(a, b)
        return out if out.ndim else float(out)

    def power_integral(self, power: int) -> float:
        if power not in self._power_cache:
            lo, hi = self.support
            self._power_cache[power] = quad(
                lambda t: float(self.func(t)) ** power, lo, hi, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS, limit=200
            )[0]
        return self._power_cache[power]

    @property
    def sup(self) -> float:
        xs = np.linspace(*self.support, 4097)
        return float(np.max(self(xs)))


def bump_profile() -> SmoothProfile:
    """``(1 - 4x^2)^2`` on ``[-1/2, 1/2]``."""
    return SmoothProfile(lambda x: (1.0 - 4.0 * np.square(x)) ** 2, (-0.5, 0.5), name="bump")


class Tabulated(Profile):
    """Piecewise-linear interpolant of samples, zero outside the sampled range."""

    def __init__(self, xs, fs):
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if xs.ndim != 1 or xs.shape != fs.shape or len(xs) < 2:
            raise ValueError("tabulated profile needs >= 2 matching (x, f) samples")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated x samples must be strictly increasing")
        self.xs, self.fs = xs, fs
        self.support = (float(xs[0]), float(xs[-1]))
        self.name = "tabulated"
        seg = 0.5 * np.diff(xs) * (fs[1:] + fs[:-1])
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])

    @classmethod
    def from_csv(cls, path) -> Tabulated:
        with open(path) as fh:
            first = fh.readline()
        skip = 1 if any(c.isalpha() for c in first) else 0
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
        return cls(data[:, 0], data[:, 1])

    def __call__(self, x):
        return np.interp(x, self.xs, self.fs, left=0.0, right=0.0)

    def _antiderivative(self, x):
        xs, fs = self.xs, self.fs
        x = np.clip(x, xs[0], xs[-1])
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        dx = x - xs[k]
        slope = (fs[k + 1] - fs[k]) / (xs[k + 1] - xs[k])
        return self._cum[k] + fs[k] * dx + 0.5 * slope * dx * dx

    def integral(self, a, b):
        return np.where(np.asarray(b) > a, self._antiderivative(b) - self._antiderivative(a), 0.0)

    def power_integral(self, power: int) -> float:
        if power == 1:
            return float(self._cum[-1])
        if power == 2:
            f0, f1 = self.fs[:-1], self.fs[1:]
            return float(np.sum(np.diff(self.xs) * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0))
        raise ValueError("only powers 1 and 2 are available in closed form")

    @property
    def sup(self) -> float:
        return float(max(self.fs.max(), 0.0))

    def describe(self) -> dict:
        return {**super().describe(), "knots": len(self.xs)}


ALLOY_KINDS = ("alloy", "tabulated")
BREATHER_KINDS = ("smooth_breather", "characteristic_breather")


@dataclass(frozen=True)
class SingleSiteModel:
    """u(lambda, x) in cell-local coordinates.

    Alloy-type kinds give ``lambda * f(x)``; breather kinds give ``f(x / lambda)``.
    """

    kind: str
    profile: Profile = field(repr=False)
    lam_minus: float = 0.0
    lam_plus: float = 1.0
    origin: str = "center"

    def __post_init__(self):
        if self.kind not in ALLOY_KINDS + BREATHER_KINDS:
            raise ValueError(f"unknown single-site model {self.kind!r}")
        if self.origin not in ("center", "left"):
            raise ValueError(f"origin must be 'center' or 'left', got {self.origin!r}")
        if self.lam_minus > self.lam_plus:
            raise ValueError("need lam_minus <= lam_plus")

    @classmethod
    def alloy(cls, profile: Profile, lam_minus=0.0, lam_plus=1.0) -> SingleSiteModel:
        return cls("alloy", profile, lam_minus, lam_plus)

    @classmethod
    def tabulated(cls, profile: Tabulated, lam_minus=0.0, lam_plus=1.0) -> SingleSiteModel:
        return cls("tabulated", profile, lam_minus, lam_plus)

    @classmethod
    def smooth_breather(cls, profile: Profile, lam_minus: float, lam_plus=1.0) -> SingleSiteModel:
        if not 0.0 < lam_minus <= lam_plus <= 1.0:
            raise ValueError("smooth breather needs 0 < lam_minus <= lam_plus <= 1")
        return cls("smooth_breather", profile, lam_minus, lam_plus)

    @classmethod
    def characteristic_breather(cls) -> SingleSiteModel:
        return cls("characteristic_breather", Indicator(0.0, 1.0, left_open=True), 0.0, 1.0, origin="left")

    @property
    def window(self) -> tuple[float, float]:
        return (0.0, 1.0) if self.origin == "left" else (-0.5, 0.5)

    @property
    def is_breather(self) -> bool:
        return self.kind in BREATHER_KINDS

    def u(self, lam, x):
        lam = np.asarray(lam, dtype=float)
        x = np.asarray(x, dtype=float)
        if not self.is_breather:
            return lam * self.profile(x)
        safe = np.where(lam > 0, lam, 1.0)
        with np.errstate(over="ignore"):
            return np.where(lam > 0, self.profile(x / safe), 0.0)

    def integral_u(self, lam, power: int = 1):
        """Integral of ``u(lam, .)**power`` over the line."""
        lam = np.asarray(lam, dtype=float)
        fp = self.profile.power_integral(power)
        if self.is_breather:
            return np.where(lam > 0, lam * fp, 0.0)
        return lam**power * fp

    def subcell_averages(self, lams, m: int) -> np.ndarray:
        """Exact means of ``u(lam, .)`` over the ``m`` equal sub-intervals of a cell.

        ``lams`` may have any shape; the result has one extra trailing axis of size ``m``.
        """
        lams = np.asarray(lams, dtype=float)[..., None]
        w0 = self.window[0]
        h = 1.0 / m
        a = w0 + h * np.arange(m)
        b = a + h
        if not self.is_breather:
            return lams * (self.profile.integral(a, b) / h)
        if isinstance(self.profile, Indicator):
            # overlap of [a, b] with the dilated support, no rescaling of a, b
            lo, hi = self.profile.support
            overlap = np.minimum(b, lams * hi) - np.maximum(a, lams * lo)
            return self.profile.height * np.clip(overlap, 0.0, None) / h
        safe = np.where(lams > 0, lams, 1.0)
        vals = self.profile.integral(a / safe, b / safe) * safe / h
        return np.where(lams > 0, vals, 0.0)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "lam_minus": self.lam_minus,
            "lam_plus": self.lam_plus,
            "origin": self.origin,
            "profile": self.profile.describe(),
        }


@dataclass(frozen=True)
class RandomPotential:
    model: SingleSiteModel
    realization: Realization

    @property
    def L(self) -> int:
        return self.realization.L


def cell_of(L: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Cell index and left-edge offset of points of ``[-L/2, L/2]``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -L / 2) or np.any(x > L / 2):
        raise ValueError(f"x outside the box [{-L / 2}, {L / 2}]")
    j = np.clip(np.ceil(x + L / 2).astype(int) - 1, 0, L - 1)
    return j, x - (-L / 2 + j)


def evaluate(W: RandomPotential, x):
    j, offset = cell_of(W.L, x)
    local = offset + W.model.window[0]
    out = W.model.u(W.realization.lambdas[j], local)
    return out if np.ndim(out) else float(out)


def cell_averages(W: RandomPotential, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return W.model.subcell_averages(W.realization.lambdas, m).reshape(-1)


def moments(W: RandomPotential) -> tuple[float, float]:
    """First and second moment of W in the normalized constant state of the box."""
    lam = W.realization.lambdas
    m1 = float(np.mean(W.model.integral_u(lam, 1)))
    m2 = float(np.mean(W.model.integral_u(lam, 2)))
    return m1, m2


@dataclass
class HypothesisAReport:
    passes: bool
    epsilon1: float | None
    epsilon2: float | None
    kappa: float | None
    violations: list[dict]
    grids: dict

    def to_dict(self) -> dict:
        return {
            "passes": self.passes,
            "epsilon1": self.epsilon1,
            "epsilon2": self.epsilon2,
            "kappa": self.kappa,
            "violations": self.violations,
            "grids": self.grids,
        }


def _lipschitz_ratio(model: SingleSiteModel, lam_grid, x_grid):
    lm = model.lam_minus
    diff = model.u(lam_grid[:, None], x_grid[None, :]) - model.u(lm, x_grid)[None, :]
    ratio = diff / (lam_grid - lm)[:, None]
    i, k = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[i, k]), float(lam_grid[i]), float(x_grid[k])


def check_hypothesis_a(model: SingleSiteModel, n_lam: int = 64, n_x: int = 64, tol: float = 1e-12) -> HypothesisAReport:
    """Check the one-dimensional clauses of Hypothesis A on finite grids.

    Clauses: ``support``, ``monotonicity``, ``integral_lower_bound``,
    ``integral_plateau`` and ``lipschitz``.  The Lipschitz constant is
    re-estimated on grids refined twice; growth by more than a factor 2 is
    reported as divergence.
    """
    if n_lam < 16 or n_x < 16:
        raise ValueError("grids need at least 16 points each")
    lm, lp = model.lam_minus, model.lam_plus
    if not lp > lm:
        raise ValueError("Hypothesis A needs a non-degenerate coupling interval")
    w0, w1 = model.window
    lam_grid = np.linspace(lm, lp, n_lam)
    x_grid = np.linspace(w0, w1, n_x)
    x_out = np.concatenate([np.linspace(w0 - 0.5, w0, n_x, endpoint=False), np.linspace(w1, w1 + 0.5, n_x + 1)[1:]])
    if model.origin == "left":
        # ]0, 1] convention: the left edge itself lies outside the cell
        x_out = np.concatenate([x_out, [w0]])
    violations: list[dict] = []

    U = model.u(lam_grid[:, None], x_grid[None, :])
    U_out = model.u(lam_grid[:, None], x_out[None, :])
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(U_out))):
        raise ValueError("model is not evaluable on the grid")

    bad = np.argwhere(np.abs(U_out) > tol)
    if len(bad):
        i, k = bad[0]
        violations.append({"clause": "support", "lam": float(lam_grid[i]), "x": float(x_out[k])})

    bad = np.argwhere(U < U[0][None, :] - tol)
    if len(bad):
        i, k = bad[0]
        violations.append({"clause": "monotonicity", "lam": float(lam_grid[i]), "x": float(x_grid[k])})

    eps2 = 0.5 * (lp - lm)
    near = lm + eps2 * np.linspace(0.0, 1.0, n_lam)[1:]
    i0 = float(model.integral_u(lm))
    slopes = (model.integral_u(near) - i0) / (near - lm)
    eps1 = float(np.min(slopes))
    if not eps1 > 0:
        i = int(np.argmin(slopes))
        violations.append({"clause": "integral_lower_bound", "lam": float(near[i]), "x": None})
        eps1_out = None
    else:
        eps1_out = eps1

    far = np.linspace(lm + eps2, lp, n_lam)
    i_far = model.integral_u(far)
    bad = np.flatnonzero(i_far < float(model.integral_u(lm + eps2)) - tol)
    if len(bad):
        violations.append({"clause": "integral_plateau", "lam": float(far[bad[0]]), "x": None})

    kappas = []
    nl, nx = n_lam, n_x
    for _ in range(3):
        lam_near = lm + eps2 * np.linspace(0.0, 1.0, nl)[1:]
        kappas.append(_lipschitz_ratio(model, lam_near, np.linspace(w0, w1, nx)))
        nl, nx = 2 * nl - 1, 2 * nx - 1
    kappa = max(k[0] for k in kappas)
    growth = kappas[-1][0] / kappas[0][0] if kappas[0][0] > 0 else 1.0
    if growth > 2.0:
        _, lam_w, x_w = kappas[-1]
        violations.append(
            {
                "clause": "lipschitz",
                "lam": lam_w,
                "x": x_w,
                "detail": f"kappa estimates {[round(k[0], 6) for k in kappas]} diverge under grid refinement",
            }
        )
        kappa_out = None
    else:
        kappa_out = kappa

    return HypothesisAReport(
        passes=not violations,
        epsilon1=eps1_out,
        epsilon2=eps2,
        kappa=kappa_out,
        violations=violations,
        grids={"n_lam": n_lam, "n_x": n_x, "refinements": [n_lam, 2 * n_lam - 1, 4 * n_lam - 3]},
    )

